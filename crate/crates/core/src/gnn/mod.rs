//! From-scratch dense tensors, EdgeConv message passing, explicit
//! backpropagation, losses, Adam, and the training loop.
//!
//! Two trunk families share the same head machinery: the EdgeConv graph trunk
//! (two layers, per-layer sum readout, concatenated) and a dense trunk for
//! the occupancy-grid baseline. An optional side branch processes the flat
//! configuration vector, and its output is concatenated before the head.
//! 64-bit floats throughout.

pub mod adam;
pub mod checkpoint;
pub mod edgeconv;
pub mod mlp;
pub mod tensor;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_encode::{Edge, WorkspaceGraph};
use crate::rng::{derive_seed, Stream};

pub use adam::Adam;
pub use edgeconv::{readout_sum, readout_sum_backward, EdgeConv, EdgeConvCache};
pub use mlp::{Act, Mlp, MlpCache, MlpGrads, MlpSpec, SELU_ALPHA, SELU_LAMBDA};
pub use tensor::Tensor2;
pub use train::{train, Dataset, EpochLog, Hyperparams, TrainLog};

pub const MODEL_FORMAT: &str = "planfolio-model/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Four-way planner classification (softmax probabilities).
    Classify4,
    /// Single-value runtime regression (seconds).
    Regress1,
}

impl Task {
    pub fn output_dim(self) -> usize {
        match self {
            Task::Classify4 => 4,
            Task::Regress1 => 1,
        }
    }
}

/// Serializable architecture description; parameters are rebuilt from this
/// plus the checkpoint buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDesc {
    pub format: String,
    pub task: Task,
    pub trunk: TrunkDesc,
    /// Side-branch hidden widths (input is the config vector).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_widths: Option<Vec<usize>>,
    pub config_dim: usize,
    /// Head hidden widths; the output layer is appended from the task.
    pub head_widths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrunkDesc {
    EdgeConv {
        node_dim: usize,
        layer1_widths: Vec<usize>,
        layer2_widths: Vec<usize>,
    },
    Dense {
        input_dim: usize,
        widths: Vec<usize>,
    },
}

impl TrunkDesc {
    fn output_dim(&self) -> usize {
        match self {
            TrunkDesc::EdgeConv {
                layer1_widths,
                layer2_widths,
                ..
            } => layer1_widths.last().unwrap() + layer2_widths.last().unwrap(),
            TrunkDesc::Dense { widths, .. } => *widths.last().unwrap(),
        }
    }
}

/// Normalization applied at model input; computed from the training split.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
    pub config_mean: Vec<f64>,
    pub config_std: Vec<f64>,
}

impl NormStats {
    pub fn identity(feat_dim: usize, config_dim: usize) -> Self {
        Self {
            feat_mean: vec![0.0; feat_dim],
            feat_std: vec![1.0; feat_dim],
            config_mean: vec![0.0; config_dim],
            config_std: vec![1.0; config_dim],
        }
    }

    fn normalize_rows(mean: &[f64], std: &[f64], x: &Tensor2) -> Tensor2 {
        let mut out = x.clone();
        for i in 0..out.rows {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - mean[j]) / std[j];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum Trunk {
    EdgeConv { layer1: EdgeConv, layer2: EdgeConv },
    Dense { mlp: Mlp },
}

/// The full predictor: trunk, optional side branch, head, normalization.
#[derive(Clone, Debug)]
pub struct Model {
    pub desc: ModelDesc,
    pub trunk: Trunk,
    pub side: Option<Mlp>,
    pub head: Mlp,
    pub norm: NormStats,
}

/// Gradients mirroring [`Model`] parameter shapes.
pub struct Grads {
    pub trunk: Vec<MlpGrads>,
    pub side: Option<MlpGrads>,
    pub head: MlpGrads,
}

impl Grads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in &self.trunk {
            out.extend(g.slices());
        }
        if let Some(s) = &self.side {
            out.extend(s.slices());
        }
        out.extend(self.head.slices());
        out
    }
}

/// A batch of graphs flattened into one node table with graph offsets.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    pub features: Tensor2,
    pub edges: Vec<Edge>,
    pub graph_of_node: Vec<usize>,
    pub n_graphs: usize,
    pub config: Option<Tensor2>,
}

impl GraphBatch {
    pub fn from_graphs(graphs: &[&WorkspaceGraph]) -> GraphBatch {
        assert!(!graphs.is_empty());
        let dim = graphs[0].feature_dim;
        let total: usize = graphs.iter().map(|g| g.n_nodes).sum();
        let mut features = Tensor2::zeros(total, dim);
        let mut edges = Vec::new();
        let mut graph_of_node = Vec::with_capacity(total);
        let has_config = graphs[0].config_vector.is_some();
        let config_dim = graphs[0].config_vector.as_ref().map_or(0, |c| c.len());
        let mut config = has_config.then(|| Tensor2::zeros(graphs.len(), config_dim));

        let mut offset = 0usize;
        for (gi, g) in graphs.iter().enumerate() {
            assert_eq!(g.feature_dim, dim, "mixed feature widths in batch");
            for n in 0..g.n_nodes {
                features.row_mut(offset + n).copy_from_slice(g.node(n));
                graph_of_node.push(gi);
            }
            for &(t, s) in &g.edges {
                edges.push((t + offset as u32, s + offset as u32));
            }
            if let (Some(c), Some(v)) = (config.as_mut(), g.config_vector.as_ref()) {
                c.row_mut(gi).copy_from_slice(v);
            }
            offset += g.n_nodes;
        }
        GraphBatch {
            features,
            edges,
            graph_of_node,
            n_graphs: graphs.len(),
            config,
        }
    }
}

/// Input to one forward pass.
#[derive(Clone, Debug)]
pub enum ModelInput {
    Graphs(GraphBatch),
    /// Dense rows (one per example) plus the optional side vectors.
    Dense {
        x: Tensor2,
        config: Option<Tensor2>,
    },
}

impl ModelInput {
    pub fn n_examples(&self) -> usize {
        match self {
            ModelInput::Graphs(b) => b.n_graphs,
            ModelInput::Dense { x, .. } => x.rows,
        }
    }
}

pub struct ForwardCache {
    ec1: Option<EdgeConvCache>,
    h1: Option<Tensor2>,
    ec2: Option<EdgeConvCache>,
    dense_cache: Option<MlpCache>,
    side_cache: Option<MlpCache>,
    head_cache: MlpCache,
    trunk_out_cols: usize,
    pub logits: Tensor2,
}

impl Model {
    /// Fresh model with LeCun-normal parameters derived from `seed`.
    pub fn init(desc: ModelDesc, seed: u64) -> Model {
        let mut streams = (0..4u64).map(|i| Stream::new(derive_seed(seed, i)));
        let mut s_trunk = streams.next().unwrap();
        let mut s_trunk2 = streams.next().unwrap();
        let mut s_side = streams.next().unwrap();
        let mut s_head = streams.next().unwrap();

        let trunk = match &desc.trunk {
            TrunkDesc::EdgeConv {
                node_dim,
                layer1_widths,
                layer2_widths,
            } => {
                let layer1 = EdgeConv {
                    mlp: Mlp::init(
                        2 * node_dim,
                        MlpSpec::selu_hidden(layer1_widths.clone(), Act::Selu),
                        &mut s_trunk,
                    ),
                };
                let layer2 = EdgeConv {
                    mlp: Mlp::init(
                        2 * layer1.output_dim(),
                        MlpSpec::selu_hidden(layer2_widths.clone(), Act::Selu),
                        &mut s_trunk2,
                    ),
                };
                Trunk::EdgeConv { layer1, layer2 }
            }
            TrunkDesc::Dense { input_dim, widths } => Trunk::Dense {
                mlp: Mlp::init(
                    *input_dim,
                    MlpSpec::selu_hidden(widths.clone(), Act::Selu),
                    &mut s_trunk,
                ),
            },
        };

        let side = desc.side_widths.as_ref().map(|widths| {
            Mlp::init(
                desc.config_dim,
                MlpSpec::selu_hidden(widths.clone(), Act::Selu),
                &mut s_side,
            )
        });

        let head_input = desc.trunk.output_dim() + side.as_ref().map_or(0, |s| s.output_dim());
        let mut head_widths = desc.head_widths.clone();
        head_widths.push(desc.task.output_dim());
        let head = Mlp::init(
            head_input,
            MlpSpec::selu_hidden(head_widths, Act::Identity),
            &mut s_head,
        );

        let (feat_dim, config_dim) = match &desc.trunk {
            TrunkDesc::EdgeConv { node_dim, .. } => (*node_dim, desc.config_dim),
            TrunkDesc::Dense { input_dim, .. } => (*input_dim, desc.config_dim),
        };
        Model {
            norm: NormStats::identity(feat_dim, config_dim),
            desc,
            trunk,
            side,
            head,
        }
    }

    pub fn task(&self) -> Task {
        self.desc.task
    }

    pub fn zero_grads(&self) -> Grads {
        let trunk = match &self.trunk {
            Trunk::EdgeConv { layer1, layer2 } => {
                vec![layer1.mlp.zeros_like(), layer2.mlp.zeros_like()]
            }
            Trunk::Dense { mlp } => vec![mlp.zeros_like()],
        };
        Grads {
            trunk,
            side: self.side.as_ref().map(|s| s.zeros_like()),
            head: self.head.zeros_like(),
        }
    }

    /// Parameter slices in canonical (checkpoint) order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        match &self.trunk {
            Trunk::EdgeConv { layer1, layer2 } => {
                out.extend(layer1.mlp.param_slices());
                out.extend(layer2.mlp.param_slices());
            }
            Trunk::Dense { mlp } => out.extend(mlp.param_slices()),
        }
        if let Some(s) = &self.side {
            out.extend(s.param_slices());
        }
        out.extend(self.head.param_slices());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        match &mut self.trunk {
            Trunk::EdgeConv { layer1, layer2 } => {
                out.extend(layer1.mlp.param_slices_mut());
                out.extend(layer2.mlp.param_slices_mut());
            }
            Trunk::Dense { mlp } => out.extend(mlp.param_slices_mut()),
        }
        if let Some(s) = &mut self.side {
            out.extend(s.param_slices_mut());
        }
        out.extend(self.head.param_slices_mut());
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Forward pass producing predictions: softmax probabilities for
    /// `Classify4`, raw values for `Regress1`.
    pub fn forward(&self, input: &ModelInput) -> Result<Tensor2> {
        let (out, _) = self.forward_impl(input, false)?;
        Ok(out)
    }

    /// Forward pass that also returns the cache for [`Model::backward`].
    pub fn forward_cached(&self, input: &ModelInput) -> Result<(Tensor2, ForwardCache)> {
        let (out, cache) = self.forward_impl(input, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    fn forward_impl(
        &self,
        input: &ModelInput,
        want_cache: bool,
    ) -> Result<(Tensor2, Option<ForwardCache>)> {
        let mut ec1_cache = None;
        let mut h1_saved = None;
        let mut ec2_cache = None;
        let mut dense_cache = None;
        let mut side_cache = None;

        let (trunk_out, config) = match (&self.trunk, input) {
            (Trunk::EdgeConv { layer1, layer2 }, ModelInput::Graphs(batch)) => {
                let x = NormStats::normalize_rows(
                    &self.norm.feat_mean,
                    &self.norm.feat_std,
                    &batch.features,
                );
                let mut c1 = want_cache.then(|| EdgeConvCache {
                    mlp_cache: mlp::empty_cache(),
                    n_nodes: 0,
                    in_dim: 0,
                });
                let h1 = layer1.forward(&x, &batch.edges, c1.as_mut());
                let mut c2 = want_cache.then(|| EdgeConvCache {
                    mlp_cache: mlp::empty_cache(),
                    n_nodes: 0,
                    in_dim: 0,
                });
                let h2 = layer2.forward(&h1, &batch.edges, c2.as_mut());
                let r1 = readout_sum(&h1, &batch.graph_of_node, batch.n_graphs);
                let r2 = readout_sum(&h2, &batch.graph_of_node, batch.n_graphs);
                let mut concat = Tensor2::zeros(batch.n_graphs, r1.cols + r2.cols);
                for g in 0..batch.n_graphs {
                    concat.row_mut(g)[..r1.cols].copy_from_slice(r1.row(g));
                    concat.row_mut(g)[r1.cols..].copy_from_slice(r2.row(g));
                }
                ec1_cache = c1;
                ec2_cache = c2;
                if want_cache {
                    h1_saved = Some(h1);
                }
                (concat, batch.config.as_ref())
            }
            (Trunk::Dense { mlp: trunk_mlp }, ModelInput::Dense { x, config }) => {
                let xn =
                    NormStats::normalize_rows(&self.norm.feat_mean, &self.norm.feat_std, x);
                let mut c = want_cache.then(mlp::empty_cache);
                let out = trunk_mlp.forward(&xn, c.as_mut());
                dense_cache = c;
                (out, config.as_ref())
            }
            _ => {
                return Err(Error::Model(
                    "input kind does not match the model trunk".into(),
                ))
            }
        };

        let head_in = match (&self.side, config) {
            (Some(side_mlp), Some(cfg)) => {
                let cfg_n = NormStats::normalize_rows(
                    &self.norm.config_mean,
                    &self.norm.config_std,
                    cfg,
                );
                let mut c = want_cache.then(mlp::empty_cache);
                let side_out = side_mlp.forward(&cfg_n, c.as_mut());
                side_cache = c;
                let mut concat = Tensor2::zeros(trunk_out.rows, trunk_out.cols + side_out.cols);
                for g in 0..trunk_out.rows {
                    concat.row_mut(g)[..trunk_out.cols].copy_from_slice(trunk_out.row(g));
                    concat.row_mut(g)[trunk_out.cols..].copy_from_slice(side_out.row(g));
                }
                concat
            }
            (None, _) => trunk_out,
            (Some(_), None) => {
                return Err(Error::Model(
                    "model has a side branch but the input has no config vectors".into(),
                ))
            }
        };
        let trunk_out_cols = self.desc.trunk.output_dim();

        let mut head_cache = mlp::empty_cache();
        let logits = self.head.forward(
            &head_in,
            want_cache.then_some(&mut head_cache),
        );

        let predictions = match self.desc.task {
            Task::Classify4 => softmax_rows(&logits),
            Task::Regress1 => logits.clone(),
        };

        let cache = want_cache.then(|| ForwardCache {
            ec1: ec1_cache,
            h1: h1_saved,
            ec2: ec2_cache,
            dense_cache,
            side_cache,
            head_cache,
            trunk_out_cols,
            logits,
        });
        Ok((predictions, cache))
    }

    /// Loss and exact parameter gradients for one batch.
    pub fn backward(&self, input: &ModelInput, targets: &Targets) -> Result<(f64, Grads)> {
        let (predictions, cache) = self.forward_cached(input)?;
        let n = input.n_examples();

        // Gradient w.r.t. the head logits. For classification this is the
        // NLL-through-softmax product (p - y)/n; for regression d(MSE).
        let (loss, d_logits) = match (self.desc.task, targets) {
            (Task::Classify4, Targets::Classes(labels)) => {
                let (loss, _) = nll_loss(&predictions, labels)?;
                let mut d = predictions.clone();
                for (g, &label) in labels.iter().enumerate() {
                    d.row_mut(g)[label] -= 1.0;
                }
                for v in &mut d.data {
                    *v /= n as f64;
                }
                (loss, d)
            }
            (Task::Regress1, Targets::Values(values)) => {
                let (loss, d) = mse_loss(&predictions, values)?;
                (loss, d)
            }
            _ => return Err(Error::Model("targets do not match the model task".into())),
        };
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("non-finite loss {loss}")));
        }

        let mut grads = self.zero_grads();
        let d_head_in = self.head.backward(&cache.head_cache, &d_logits, &mut grads.head);

        // Split the concatenated head input gradient.
        let (d_trunk_out, d_side_out) = split_cols(&d_head_in, cache.trunk_out_cols);

        if let (Some(side_mlp), Some(d_side), Some(side_cache)) = (
            &self.side,
            d_side_out.as_ref(),
            cache.side_cache.as_ref(),
        ) {
            let side_grads = grads.side.as_mut().expect("side grads allocated");
            side_mlp.backward(side_cache, d_side, side_grads);
        }

        match (&self.trunk, input) {
            (Trunk::EdgeConv { layer1, layer2 }, ModelInput::Graphs(batch)) => {
                let r1_cols = layer1.output_dim();
                let (d_r1, d_r2) = split_cols(&d_trunk_out, r1_cols);
                let d_r2 = d_r2.expect("two readouts");
                let n_nodes = batch.graph_of_node.len();
                let d_h2 = readout_sum_backward(&d_r2, &batch.graph_of_node, n_nodes);
                let mut d_h1 = layer2.backward(
                    &batch.edges,
                    cache.ec2.as_ref().expect("cache"),
                    &d_h2,
                    &mut grads.trunk[1],
                );
                let d_h1_readout = readout_sum_backward(&d_r1, &batch.graph_of_node, n_nodes);
                for (a, b) in d_h1.data.iter_mut().zip(&d_h1_readout.data) {
                    *a += b;
                }
                let _ = cache.h1;
                layer1.backward(
                    &batch.edges,
                    cache.ec1.as_ref().expect("cache"),
                    &d_h1,
                    &mut grads.trunk[0],
                );
            }
            (Trunk::Dense { mlp: trunk_mlp }, ModelInput::Dense { .. }) => {
                trunk_mlp.backward(
                    cache.dense_cache.as_ref().expect("cache"),
                    &d_trunk_out,
                    &mut grads.trunk[0],
                );
            }
            _ => unreachable!("checked in forward"),
        }
        Ok((loss, grads))
    }
}

fn split_cols(t: &Tensor2, left_cols: usize) -> (Tensor2, Option<Tensor2>) {
    if left_cols == t.cols {
        return (t.clone(), None);
    }
    let mut left = Tensor2::zeros(t.rows, left_cols);
    let mut right = Tensor2::zeros(t.rows, t.cols - left_cols);
    for i in 0..t.rows {
        left.row_mut(i).copy_from_slice(&t.row(i)[..left_cols]);
        right.row_mut(i).copy_from_slice(&t.row(i)[left_cols..]);
    }
    (left, Some(right))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Tensor2) -> Tensor2 {
    let mut out = logits.clone();
    for i in 0..out.rows {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes(v) => Targets::Classes(idx.iter().map(|&i| v[i]).collect()),
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Mean negative log-likelihood of the true labels given probabilities.
/// Also returns the gradient w.r.t. the probabilities.
pub fn nll_loss(probs: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    if !probs.is_finite() {
        return Err(Error::Diverged("non-finite predictions".into()));
    }
    assert_eq!(probs.rows, labels.len());
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor2::zeros(probs.rows, probs.cols);
    for (i, &label) in labels.iter().enumerate() {
        let p = probs.row(i)[label];
        loss -= p.ln();
        grad.row_mut(i)[label] = -1.0 / (p * n);
    }
    Ok((loss / n, grad))
}

/// Mean squared error (seconds^2) and its gradient w.r.t. the predictions.
pub fn mse_loss(preds: &Tensor2, targets: &[f64]) -> Result<(f64, Tensor2)> {
    if !preds.is_finite() {
        return Err(Error::Diverged("non-finite predictions".into()));
    }
    assert_eq!(preds.rows, targets.len());
    assert_eq!(preds.cols, 1);
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor2::zeros(preds.rows, 1);
    for (i, &t) in targets.iter().enumerate() {
        let e = preds.row(i)[0] - t;
        loss += e * e;
        grad.row_mut(i)[0] = 2.0 * e / n;
    }
    Ok((loss / n, grad))
}

// Architecture builders (widths follow the experiment setups).

/// Two EdgeConv layers with (512, 512) and (256, 256) MLPs.
fn edgeconv_trunk(node_dim: usize) -> TrunkDesc {
    TrunkDesc::EdgeConv {
        node_dim,
        layer1_widths: vec![512, 512],
        layer2_widths: vec![256, 256],
    }
}

/// Navigation portfolio classifier: EdgeConv trunk, head (400, 200).
pub fn nav_classifier_desc() -> ModelDesc {
    ModelDesc {
        format: MODEL_FORMAT.into(),
        task: Task::Classify4,
        trunk: edgeconv_trunk(crate::graph_encode::NAV_FEATURES),
        side_widths: None,
        config_dim: 0,
        head_widths: vec![400, 200],
    }
}

/// Navigation runtime regressor: classifier architecture with the softmax
/// replaced by a single linear output.
pub fn nav_regressor_desc() -> ModelDesc {
    ModelDesc {
        task: Task::Regress1,
        ..nav_classifier_desc()
    }
}

/// Arm runtime regressor: EdgeConv trunk, (512, 256) side branch on the
/// joint configuration vector, single hidden head layer of 1000.
pub fn arm_regressor_desc(n_links: usize) -> ModelDesc {
    ModelDesc {
        format: MODEL_FORMAT.into(),
        task: Task::Regress1,
        trunk: edgeconv_trunk(crate::graph_encode::ARM_FEATURES),
        side_widths: Some(vec![512, 256]),
        config_dim: 2 * n_links,
        head_widths: vec![1000],
    }
}

/// Occupancy-grid baseline: dense (512, 256) trunk on the grid, (100, 50)
/// side branch on the start/goal vector, head (400, 200).
pub fn occupancy_desc(task: Task, grid_cells: usize, state_dim: usize) -> ModelDesc {
    ModelDesc {
        format: MODEL_FORMAT.into(),
        task,
        trunk: TrunkDesc::Dense {
            input_dim: grid_cells,
            widths: vec![512, 256],
        },
        side_widths: Some(vec![100, 50]),
        config_dim: state_dim,
        head_widths: vec![400, 200],
    }
}
