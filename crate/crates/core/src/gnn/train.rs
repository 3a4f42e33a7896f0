//! Mini-batch training with seeded shuffling, early stopping on test loss,
//! and a per-epoch loss log.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_encode::WorkspaceGraph;
use crate::rng::{derive_seed, Stream};

use super::{Adam, GraphBatch, Grads, Model, ModelInput, Targets, Tensor2};

#[derive(Clone, Debug)]
pub enum Example {
    Graph(WorkspaceGraph),
    Dense {
        x: Vec<f64>,
        config: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub targets: Targets,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Builds the model input for the given example indices.
    pub fn input_for(&self, idx: &[usize]) -> ModelInput {
        match &self.examples[idx[0]] {
            Example::Graph(_) => {
                let graphs: Vec<&WorkspaceGraph> = idx
                    .iter()
                    .map(|&i| match &self.examples[i] {
                        Example::Graph(g) => g,
                        Example::Dense { .. } => unreachable!("mixed dataset"),
                    })
                    .collect();
                ModelInput::Graphs(GraphBatch::from_graphs(&graphs))
            }
            Example::Dense { x: first, config } => {
                let dim = first.len();
                let has_config = config.is_some();
                let mut x = Tensor2::zeros(idx.len(), dim);
                let mut cfg: Option<Tensor2> = None;
                for (row, &i) in idx.iter().enumerate() {
                    let Example::Dense { x: xi, config: ci } = &self.examples[i] else {
                        unreachable!("mixed dataset")
                    };
                    x.row_mut(row).copy_from_slice(xi);
                    if has_config {
                        let ci = ci.as_ref().expect("uniform config presence");
                        let c = cfg.get_or_insert_with(|| Tensor2::zeros(idx.len(), ci.len()));
                        c.row_mut(row).copy_from_slice(ci);
                    }
                }
                ModelInput::Dense { x, config: cfg }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stop patience, in epochs without test-loss improvement.
    pub patience: usize,
    pub seed: u64,
    /// Opt-in data parallelism: fixed shard size for per-batch gradient
    /// computation. `None` keeps training strictly single-threaded. Results
    /// depend only on the shard size, never on the worker count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_shard: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 120,
            patience: 10,
            seed: 0,
            parallel_shard: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_test_loss: f64,
    pub stopped_early: bool,
    pub hyperparams: Hyperparams,
}

/// Mean loss of `model` over a dataset (forward only), in chunks.
pub fn evaluate_loss(model: &Model, data: &Dataset) -> Result<f64> {
    let n = data.len();
    assert!(n > 0, "evaluate_loss on empty dataset");
    let mut total = 0.0;
    let chunk = 256;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let input = data.input_for(&idx);
        let preds = model.forward(&input)?;
        let loss = match (&data.targets, model.task()) {
            (Targets::Classes(labels), super::Task::Classify4) => {
                let sel: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                super::nll_loss(&preds, &sel)?.0
            }
            (Targets::Values(values), super::Task::Regress1) => {
                let sel: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
                super::mse_loss(&preds, &sel)?.0
            }
            _ => return Err(Error::Model("targets do not match the model task".into())),
        };
        total += loss * idx.len() as f64;
        start = end;
    }
    Ok(total / n as f64)
}

/// Classification accuracy (argmax vs labels).
pub fn evaluate_accuracy(model: &Model, data: &Dataset) -> Result<f64> {
    let Targets::Classes(labels) = &data.targets else {
        return Err(Error::Model("accuracy needs class targets".into()));
    };
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut correct = 0usize;
    for chunk in idx.chunks(256) {
        let input = data.input_for(chunk);
        let preds = model.forward(&input)?;
        for (row, &i) in chunk.iter().enumerate() {
            let p = preds.row(row);
            let arg = (0..p.len())
                .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
                .unwrap();
            if arg == labels[i] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Per-feature mean/std over the training split, written into the model.
pub fn fit_norm_stats(model: &mut Model, train: &Dataset) {
    let feat_dim = model.norm.feat_mean.len();
    let config_dim = model.norm.config_mean.len();
    let mut feat_acc = RunningStats::new(feat_dim);
    let mut config_acc = RunningStats::new(config_dim);
    for ex in &train.examples {
        match ex {
            Example::Graph(g) => {
                for node in 0..g.n_nodes {
                    feat_acc.add(g.node(node));
                }
                if let Some(c) = &g.config_vector {
                    config_acc.add(c);
                }
            }
            Example::Dense { x, config } => {
                feat_acc.add(x);
                if let Some(c) = config {
                    config_acc.add(c);
                }
            }
        }
    }
    let (fm, fs) = feat_acc.finish();
    model.norm.feat_mean = fm;
    model.norm.feat_std = fs;
    if config_dim > 0 && config_acc.count > 0 {
        let (cm, cs) = config_acc.finish();
        model.norm.config_mean = cm;
        model.norm.config_std = cs;
    }
}

struct RunningStats {
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl RunningStats {
    fn new(dim: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    fn add(&mut self, row: &[f64]) {
        self.count += 1;
        for (i, &v) in row.iter().enumerate() {
            self.sum[i] += v;
            self.sum_sq[i] += v * v;
        }
    }

    fn finish(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count.max(1) as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let std: Vec<f64> = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                let s = var.sqrt();
                // Constant features carry no signal; leave them unscaled.
                if s < 1e-8 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        (mean, std)
    }
}

fn batch_gradients(
    model: &Model,
    data: &Dataset,
    idx: &[usize],
    shard: Option<usize>,
) -> Result<(f64, Grads)> {
    match shard {
        None => {
            let input = data.input_for(idx);
            let targets = data.targets.select(idx);
            model.backward(&input, &targets)
        }
        Some(shard_size) => {
            let shards: Vec<&[usize]> = idx.chunks(shard_size.max(1)).collect();
            let partial: Vec<Result<(f64, Grads)>> = shards
                .par_iter()
                .map(|chunk| {
                    let input = data.input_for(chunk);
                    let targets = data.targets.select(chunk);
                    model.backward(&input, &targets)
                })
                .collect();
            // Serial reduction in shard order keeps results independent of
            // the worker count.
            let n = idx.len() as f64;
            let mut loss = 0.0;
            let mut total: Option<Grads> = None;
            for (chunk, res) in shards.iter().zip(partial) {
                let (l, g) = res?;
                let w = chunk.len() as f64 / n;
                loss += l * w;
                match &mut total {
                    None => {
                        let mut g = g;
                        scale_grads(&mut g, w);
                        total = Some(g);
                    }
                    Some(t) => accumulate_grads(t, &g, w),
                }
            }
            Ok((loss, total.expect("at least one shard")))
        }
    }
}

fn scale_grads(g: &mut Grads, w: f64) {
    for mlp in g.trunk.iter_mut().chain(&mut g.side).chain([&mut g.head]) {
        for s in mlp.slices_mut() {
            for v in s {
                *v *= w;
            }
        }
    }
}

fn accumulate_grads(into: &mut Grads, from: &Grads, w: f64) {
    let a = {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for mlp in into.trunk.iter_mut().chain(&mut into.side).chain([&mut into.head]) {
            v.extend(mlp.slices_mut());
        }
        v
    };
    let b = from.slices();
    for (dst, src) in a.into_iter().zip(b) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += w * s;
        }
    }
}

/// Trains in place. Computes normalization statistics from the training
/// split, runs seeded mini-batch Adam with early stopping on the test loss,
/// and restores the best-epoch parameters before returning.
pub fn train(
    model: &mut Model,
    train_set: &Dataset,
    test_set: &Dataset,
    hp: &Hyperparams,
) -> Result<TrainLog> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::Model("training needs nonempty splits".into()));
    }
    fit_norm_stats(model, train_set);

    let slice_lens: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
    let mut adam = Adam::new(hp.learning_rate, &slice_lens);

    let mut log = TrainLog {
        epochs: Vec::new(),
        best_epoch: 0,
        best_test_loss: f64::INFINITY,
        stopped_early: false,
        hyperparams: hp.clone(),
    };
    let mut best_params: Vec<Vec<f64>> =
        model.param_slices().iter().map(|s| s.to_vec()).collect();
    let mut since_best = 0usize;

    for epoch in 0..hp.max_epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        Stream::new(derive_seed(hp.seed, epoch as u64)).shuffle(&mut order);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            let (loss, grads) = batch_gradients(model, train_set, batch, hp.parallel_shard)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("epoch {epoch}: loss {loss}")));
            }
            epoch_loss += loss * batch.len() as f64;
            adam.step(model.param_slices_mut(), &grads.slices());
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let test_loss = evaluate_loss(model, test_set)?;
        if !test_loss.is_finite() {
            return Err(Error::Diverged(format!(
                "epoch {epoch}: test loss {test_loss}"
            )));
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            test_loss,
        });

        if test_loss < log.best_test_loss {
            log.best_test_loss = test_loss;
            log.best_epoch = epoch;
            for (dst, src) in best_params.iter_mut().zip(model.param_slices()) {
                dst.copy_from_slice(src);
            }
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hp.patience {
                log.stopped_early = true;
                break;
            }
        }
    }

    for (dst, src) in model.param_slices_mut().into_iter().zip(&best_params) {
        dst.copy_from_slice(src);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::tests::{random_graph, tiny_desc};
    use crate::gnn::{Model, Task};

    fn synthetic_classification(n: usize, seed: u64) -> Dataset {
        // Label depends on the mean of the first feature: learnable signal.
        let mut rng = Stream::new(seed);
        let mut examples = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let g = random_graph(&mut rng, 4, 5, 2, false, 0);
            let mean: f64 =
                (0..g.n_nodes).map(|i| g.node(i)[0]).sum::<f64>() / g.n_nodes as f64;
            let second: f64 =
                (0..g.n_nodes).map(|i| g.node(i)[1]).sum::<f64>() / g.n_nodes as f64;
            let label = match (mean > 0.0, second > 0.0) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            examples.push(Example::Graph(g));
            labels.push(label);
        }
        Dataset {
            examples,
            targets: Targets::Classes(labels),
        }
    }

    #[test]
    fn overfit_smoke_training_loss_collapses() {
        let train_set = synthetic_classification(50, 1);
        let test_set = synthetic_classification(20, 2);
        let mut model = Model::init(tiny_desc(Task::Classify4, false), 3);
        let hp = Hyperparams {
            learning_rate: 3e-3,
            batch_size: 10,
            max_epochs: 60,
            patience: 60,
            seed: 4,
            parallel_shard: None,
        };
        let log = train(&mut model, &train_set, &test_set, &hp).unwrap();
        let first = log.epochs.first().unwrap().train_loss;
        let last = log.epochs.last().unwrap().train_loss;
        assert!(
            last < 0.1 * first,
            "train loss {first} -> {last} did not collapse"
        );
        // Within-noise monotone decrease over the first 10 epochs.
        for w in log.epochs[..10].windows(2) {
            assert!(
                w[1].train_loss < w[0].train_loss * 1.25,
                "loss rose sharply: {} -> {}",
                w[0].train_loss,
                w[1].train_loss
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let train_set = synthetic_classification(30, 5);
        let test_set = synthetic_classification(10, 6);
        let hp = Hyperparams {
            max_epochs: 5,
            patience: 5,
            ..Default::default()
        };
        let run = || {
            let mut model = Model::init(tiny_desc(Task::Classify4, false), 9);
            let log = train(&mut model, &train_set, &test_set, &hp).unwrap();
            let params: Vec<u64> = model
                .param_slices()
                .iter()
                .flat_map(|s| s.iter().map(|v| v.to_bits()))
                .collect();
            (serde_json::to_string(&log.epochs).unwrap(), params)
        };
        let (log_a, params_a) = run();
        let (log_b, params_b) = run();
        assert_eq!(log_a, log_b);
        assert_eq!(params_a, params_b);
    }

    #[test]
    fn sharded_gradients_match_serial_within_rounding() {
        let data = synthetic_classification(16, 7);
        let model = Model::init(tiny_desc(Task::Classify4, false), 11);
        let idx: Vec<usize> = (0..16).collect();
        let (l1, g1) = batch_gradients(&model, &data, &idx, None).unwrap();
        let (l2, g2) = batch_gradients(&model, &data, &idx, Some(4)).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.slices().iter().zip(g2.slices().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let train_set = synthetic_classification(20, 8);
        let test_set = synthetic_classification(10, 9);
        let mut model = Model::init(tiny_desc(Task::Classify4, false), 12);
        let hp = Hyperparams {
            learning_rate: 1e15,
            max_epochs: 30,
            patience: 30,
            ..Default::default()
        };
        let r = train(&mut model, &train_set, &test_set, &hp);
        assert!(
            matches!(r, Err(Error::Diverged(_))),
            "expected divergence, got {r:?}"
        );
    }
}
