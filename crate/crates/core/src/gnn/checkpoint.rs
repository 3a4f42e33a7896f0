//! Versioned checkpoint container.
//!
//! Byte layout:
//!
//! ```text
//! magic  b"PFMD"                     4 bytes
//! format u32 little-endian           4 bytes (currently 1)
//! hlen   u32 little-endian           4 bytes
//! header JSON (CheckpointHeader)     hlen bytes
//! buffers: f64 little-endian, in order:
//!   feat_mean, feat_std, config_mean, config_std,
//!   then every parameter slice in the model's canonical order
//! ```
//!
//! The header records each buffer's length, so loading validates the layout
//! before touching the payload. Save/load round-trips are bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Model, ModelDesc, NormStats};

const MAGIC: &[u8; 4] = b"PFMD";
const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    desc: ModelDesc,
    norm_lens: [usize; 4],
    param_lens: Vec<usize>,
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let header = CheckpointHeader {
        desc: model.desc.clone(),
        norm_lens: [
            model.norm.feat_mean.len(),
            model.norm.feat_std.len(),
            model.norm.config_mean.len(),
            model.norm.config_std.len(),
        ],
        param_lens: model.param_slices().iter().map(|s| s.len()).collect(),
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT.to_le_bytes())?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    let write_buf = |w: &mut dyn Write, buf: &[f64]| -> Result<()> {
        for v in buf {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    write_buf(&mut w, &model.norm.feat_mean)?;
    write_buf(&mut w, &model.norm.feat_std)?;
    write_buf(&mut w, &model.norm.config_mean)?;
    write_buf(&mut w, &model.norm.config_std)?;
    for s in model.param_slices() {
        write_buf(&mut w, s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "checkpoint {}",
            path.display()
        )));
    }
    let mut r = std::io::BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let format = u32::from_le_bytes(u32buf);
    if format != FORMAT {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint format {format} (expected {FORMAT})"
        )));
    }
    r.read_exact(&mut u32buf)?;
    let hlen = u32::from_le_bytes(u32buf) as usize;
    let mut header_bytes = vec![0u8; hlen];
    r.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;

    let mut read_buf = |n: usize| -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };

    let mut model = Model::init(header.desc, 0);
    let norm = NormStats {
        feat_mean: read_buf(header.norm_lens[0])?,
        feat_std: read_buf(header.norm_lens[1])?,
        config_mean: read_buf(header.norm_lens[2])?,
        config_std: read_buf(header.norm_lens[3])?,
    };
    model.norm = norm;
    {
        let mut slices = model.param_slices_mut();
        if slices.len() != header.param_lens.len() {
            return Err(Error::Checkpoint(format!(
                "parameter layout mismatch: {} slices vs {} recorded",
                slices.len(),
                header.param_lens.len()
            )));
        }
        for (si, s) in slices.iter_mut().enumerate() {
            if s.len() != header.param_lens[si] {
                return Err(Error::Checkpoint(format!(
                    "slice {si} length {} vs recorded {}",
                    s.len(),
                    header.param_lens[si]
                )));
            }
            let buf = read_buf(s.len())?;
            s.copy_from_slice(&buf);
        }
    }
    Ok(model)
}
