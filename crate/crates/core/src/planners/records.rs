//! Runtime records: per-(problem, planner) trial results, the expected-time
//! aggregate used as the learning target, and the labels JSONL format.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Outcome, PlannerId};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrialResult {
    pub outcome: Outcome,
    /// Measured wall time (excluded from byte-identity comparisons).
    pub wall_time_s: f64,
    pub iterations: u64,
    /// Box-pair collision tests performed (deterministic).
    pub checks: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuntimeRecord {
    pub problem_id: String,
    pub planner: PlannerId,
    pub timeout_s: f64,
    pub trials: Vec<TrialResult>,
    /// Mean over trials; timeouts contribute `timeout_s`.
    pub expected_time_s: f64,
    pub timeout_count: usize,
}

impl RuntimeRecord {
    pub fn from_trials(
        problem_id: String,
        planner: PlannerId,
        timeout_s: f64,
        trials: Vec<TrialResult>,
    ) -> Self {
        let timeout_count = trials
            .iter()
            .filter(|t| t.outcome == Outcome::Timeout)
            .count();
        let total: f64 = trials
            .iter()
            .map(|t| match t.outcome {
                Outcome::Solved => t.wall_time_s,
                Outcome::Timeout => timeout_s,
            })
            .sum();
        let expected_time_s = total / trials.len() as f64;
        Self {
            problem_id,
            planner,
            timeout_s,
            trials,
            expected_time_s,
            timeout_count,
        }
    }
}

/// Planner with the lowest expected time; ties resolve in
/// [`PlannerId::TIE_ORDER`]. Errors when any of the four planners is missing.
pub fn label_fastest(records: &[&RuntimeRecord]) -> Result<PlannerId> {
    let mut by_planner: HashMap<PlannerId, f64> = HashMap::new();
    for r in records {
        by_planner.insert(r.planner, r.expected_time_s);
    }
    let mut best: Option<(PlannerId, f64)> = None;
    for planner in PlannerId::TIE_ORDER {
        let t = *by_planner.get(&planner).ok_or_else(|| Error::MissingRecord {
            problem_id: records
                .first()
                .map(|r| r.problem_id.clone())
                .unwrap_or_default(),
            planner: planner.to_string(),
        })?;
        if best.map_or(true, |(_, bt)| t < bt) {
            best = Some((planner, t));
        }
    }
    Ok(best.expect("four planners checked").0)
}

/// Appends records as JSONL; creates the file if needed.
pub fn append_records(path: &Path, records: &[RuntimeRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_records(path: &Path) -> Result<Vec<RuntimeRecord>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(format!(
            "labels file {}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str::<RuntimeRecord>(&line)?);
    }
    Ok(out)
}

/// `(problem_id, planner)` keys already present (for resumable measurement).
pub fn read_record_keys(path: &Path) -> Result<std::collections::HashSet<(String, PlannerId)>> {
    if !path.exists() {
        return Ok(Default::default());
    }
    Ok(load_records(path)?
        .into_iter()
        .map(|r| (r.problem_id, r.planner))
        .collect())
}

/// Records indexed by `(problem_id, planner)`.
pub struct RecordSet {
    map: HashMap<(String, PlannerId), RuntimeRecord>,
}

impl RecordSet {
    pub fn from_records(records: Vec<RuntimeRecord>) -> Self {
        Self {
            map: records
                .into_iter()
                .map(|r| ((r.problem_id.clone(), r.planner), r))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_records(load_records(path)?))
    }

    pub fn get(&self, problem_id: &str, planner: PlannerId) -> Result<&RuntimeRecord> {
        self.map
            .get(&(problem_id.to_string(), planner))
            .ok_or_else(|| Error::MissingRecord {
                problem_id: problem_id.to_string(),
                planner: planner.to_string(),
            })
    }

    pub fn expected_time(&self, problem_id: &str, planner: PlannerId) -> Result<f64> {
        Ok(self.get(problem_id, planner)?.expected_time_s)
    }

    /// The fastest-planner label for one problem.
    pub fn fastest(&self, problem_id: &str) -> Result<PlannerId> {
        let refs: Vec<&RuntimeRecord> = PlannerId::ALL
            .iter()
            .filter_map(|&pl| self.map.get(&(problem_id.to_string(), pl)))
            .collect();
        label_fastest(&refs)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(planner: PlannerId, expected: f64) -> RuntimeRecord {
        RuntimeRecord {
            problem_id: "p".into(),
            planner,
            timeout_s: 3.0,
            trials: vec![],
            expected_time_s: expected,
            timeout_count: 0,
        }
    }

    #[test]
    fn label_fastest_is_argmin() {
        let records = vec![
            rec(PlannerId::Rrt, 0.2),
            rec(PlannerId::RrtConnect, 0.1),
            rec(PlannerId::Trrt, 0.3),
            rec(PlannerId::LazyRrt, 0.4),
        ];
        let refs: Vec<&RuntimeRecord> = records.iter().collect();
        assert_eq!(label_fastest(&refs).unwrap(), PlannerId::RrtConnect);
    }

    #[test]
    fn label_fastest_ties_break_in_fixed_order() {
        let records = vec![
            rec(PlannerId::LazyRrt, 1.0),
            rec(PlannerId::Trrt, 1.0),
            rec(PlannerId::Rrt, 1.0),
            rec(PlannerId::RrtConnect, 1.0),
        ];
        let refs: Vec<&RuntimeRecord> = records.iter().collect();
        assert_eq!(label_fastest(&refs).unwrap(), PlannerId::RrtConnect);
    }

    #[test]
    fn label_fastest_is_order_independent() {
        let mut records = vec![
            rec(PlannerId::Rrt, 0.5),
            rec(PlannerId::RrtConnect, 0.9),
            rec(PlannerId::Trrt, 0.05),
            rec(PlannerId::LazyRrt, 0.4),
        ];
        let refs: Vec<&RuntimeRecord> = records.iter().collect();
        let a = label_fastest(&refs).unwrap();
        records.reverse();
        let refs: Vec<&RuntimeRecord> = records.iter().collect();
        assert_eq!(label_fastest(&refs).unwrap(), a);
        assert_eq!(a, PlannerId::Trrt);
    }

    #[test]
    fn label_fastest_missing_planner_errors() {
        let records = vec![rec(PlannerId::Rrt, 0.5)];
        let refs: Vec<&RuntimeRecord> = records.iter().collect();
        assert!(label_fastest(&refs).is_err());
    }

    #[test]
    fn records_roundtrip_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        let records = vec![rec(PlannerId::Rrt, 0.25), rec(PlannerId::Trrt, 1.5)];
        append_records(&path, &records).unwrap();
        append_records(&path, &[rec(PlannerId::LazyRrt, 2.0)]).unwrap();
        let loaded = load_records(&path).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded[1].expected_time_s, 1.5);
        let keys = read_record_keys(&path).unwrap();
        assert!(keys.contains(&("p".to_string(), PlannerId::LazyRrt)));
    }
}
