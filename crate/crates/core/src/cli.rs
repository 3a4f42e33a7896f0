//! The `planfolio` command-line surface: dataset generation, runtime
//! measurement, training, the selection experiments, and the sequencing
//! experiment, each writing reproducible artifacts into a run directory.
//!
//! Every command resolves its parameters from defaults, then an optional
//! `key = value` config file, then command-line flags, and writes the
//! resolved config beside its outputs. Unless `--out` is given, outputs land
//! in `<root>/<command>-<hash8>` where the hash covers the resolved config
//! and `<root>` is `$PLANFOLIO_RUN_DIR` or `./runs`.
//!
//! Exit codes: 0 success, 2 argument error, 3 missing artifact,
//! 4 runtime/divergence error.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::env_gen::{self, DatasetManifest, RobotType, Split};
use crate::error::{Error, Result};
use crate::gnn::{self, Hyperparams, Model, Targets, Task};
use crate::graph_encode;
use crate::planners::{
    self, append_records, read_record_keys, PlannerId, PlannerParams, RecordSet,
};
use crate::predict::{
    fastest_problem_experiment, portfolio_experiment, FastestConfig, PlannerSelector,
    PredictorReport, ProblemScorer,
};
use crate::problem::Problem;
use crate::rng::derive_seed;
use crate::tamp::{tamp_experiment, TampConfig};

pub const ENV_RUN_DIR: &str = "PLANFOLIO_RUN_DIR";
const CONFIG_SCHEMA: &str = "planfolio-config/1";

#[derive(Parser)]
#[command(
    name = "planfolio",
    about = "Motion-planning runtime measurement, prediction, and portfolio selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem dataset.
    Gen(GenArgs),
    /// Measure planner runtimes over a dataset (resumable).
    Solve(SolveArgs),
    /// Train a predictor from a dataset and its labels.
    Train(TrainArgs),
    /// Run the portfolio or fastest-problem experiment.
    Eval(EvalArgs),
    /// Run the task-sequencing experiment.
    Tamp(TampArgs),
    /// Dump one problem's workspace graph as JSON.
    DumpGraph(DumpGraphArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: <run root>/<command>-<config hash>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Robot type: nav2d or arm.
    #[arg(long = "type")]
    robot_type: Option<String>,
    /// Number of problems.
    #[arg(long)]
    n: Option<usize>,
    /// Global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Arm link count.
    #[arg(long)]
    links: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dataset directory from `gen`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated planner subset (default: all four).
    #[arg(long)]
    planners: Option<String>,
    /// Trials per (problem, planner).
    #[arg(long)]
    trials: Option<usize>,
    /// Timeout seconds (default 3.0 nav2d, 10.0 arm).
    #[arg(long)]
    timeout: Option<f64>,
    /// Measurement seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one split: train, test, or all.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Labels file from `solve`.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// portfolio | runtime:PLANNER | occupancy-portfolio | occupancy-runtime:PLANNER
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// portfolio | fastest
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Classifier checkpoint (portfolio).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Occupancy classifier checkpoint (portfolio).
    #[arg(long)]
    occupancy_checkpoint: Option<PathBuf>,
    /// Regressor checkpoints, `PLANNER=PATH`, repeatable (fastest).
    #[arg(long = "regressor")]
    regressors: Vec<String>,
    /// Occupancy regressor checkpoints, `PLANNER=PATH` (fastest).
    #[arg(long = "occupancy-regressor")]
    occupancy_regressors: Vec<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated predictor subset (default: every applicable one).
    #[arg(long)]
    predictors: Option<String>,
    /// Split evaluated on (default test).
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct TampArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// RRTConnect runtime regressor checkpoint.
    #[arg(long)]
    regressor: Option<PathBuf>,
    /// Occupancy regressor checkpoint.
    #[arg(long)]
    occupancy_regressor: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Split used as the element pool (default test).
    #[arg(long)]
    split: Option<String>,
}

#[derive(Args)]
struct DumpGraphArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    problem_id: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    file: Option<PathBuf>,
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Tamp(args) => cmd_tamp(args),
        Command::DumpGraph(args) => cmd_dump_graph(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::InvalidConfiguration(_) => 2,
                Error::MissingArtifact(_) | Error::MissingRecord { .. } => 3,
                _ => 4,
            }
        }
    }
}

/// Flat `key = value` file; `#` starts a comment.
struct KvConfig {
    map: HashMap<String, String>,
}

impl KvConfig {
    fn load(path: Option<&Path>) -> Result<KvConfig> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            if !path.exists() {
                return Err(Error::MissingArtifact(format!(
                    "config file {}",
                    path.display()
                )));
            }
            for (ln, line) in fs::read_to_string(path)?.lines().enumerate() {
                let line = line.split('#').next().unwrap().trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(Error::InvalidArgument(format!(
                        "{}:{}: expected `key = value`",
                        path.display(),
                        ln + 1
                    )));
                };
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(KvConfig { map })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidArgument(format!("config key `{key}`: bad value `{raw}`"))
            }),
        }
    }
}

/// Resolution order: flag, then config file, then default.
fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    cfg: &KvConfig,
    key: &str,
    default: T,
) -> Result<T> {
    Ok(flag.or(cfg.get(key)?).unwrap_or(default))
}

fn resolve_opt<T: std::str::FromStr>(
    flag: Option<T>,
    cfg: &KvConfig,
    key: &str,
) -> Result<Option<T>> {
    Ok(flag.or(cfg.get(key)?))
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidArgument(format!("missing required {what}")))
}

/// Run directory derived from the resolved config text.
fn run_dir(out: Option<PathBuf>, command: &str, resolved: &str) -> Result<PathBuf> {
    if let Some(out) = out {
        fs::create_dir_all(&out)?;
        return Ok(out);
    }
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(resolved.as_bytes());
    let hash8 = hex8(&digest);
    let root = std::env::var(ENV_RUN_DIR).unwrap_or_else(|_| "runs".to_string());
    let dir = PathBuf::from(root).join(format!("{command}-{hash8}"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn hex8(bytes: &[u8]) -> String {
    bytes[..4].iter().map(|b| format!("{b:02x}")).collect()
}

fn config_text(command: &str, entries: &[(&str, String)]) -> String {
    let mut out = format!("# {CONFIG_SCHEMA}\ncommand = {command}\n");
    for (k, v) in entries {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out
}

fn write_config(dir: &Path, text: &str) -> Result<()> {
    fs::write(dir.join("config.txt"), text)?;
    Ok(())
}

fn install_pool<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("worker pool")
            .install(f),
        None => f(),
    }
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    match s {
        "train" => Ok(Some(Split::Train)),
        "test" => Ok(Some(Split::Test)),
        "all" => Ok(None),
        other => Err(Error::InvalidArgument(format!(
            "unknown split `{other}` (expected train, test, all)"
        ))),
    }
}

fn split_problems<'a>(
    manifest: &DatasetManifest,
    problems: &'a [Problem],
    split: Option<Split>,
) -> Vec<&'a Problem> {
    match split {
        None => problems.iter().collect(),
        Some(s) => {
            let ids: std::collections::HashSet<&str> =
                manifest.ids_with_split(s).into_iter().collect();
            problems.iter().filter(|p| ids.contains(p.id.as_str())).collect()
        }
    }
}

fn parse_planner_list(s: &str) -> Result<Vec<PlannerId>> {
    s.split(',')
        .map(|p| p.trim().parse::<PlannerId>())
        .collect()
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let robot_type: RobotType = require(
        resolve_opt(args.robot_type, &cfg, "type")?,
        "--type (nav2d or arm)",
    )?
    .parse()?;
    let n = require(resolve_opt(args.n, &cfg, "n")?, "--n")?;
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    let seed = resolve(args.seed, &cfg, "seed", 0u64)?;
    let links = resolve(args.links, &cfg, "links", 3usize)?;
    if robot_type == RobotType::Arm && links < 2 {
        return Err(Error::InvalidArgument("--links must be at least 2".into()));
    }

    let mut entries = vec![
        ("type", robot_type.to_string()),
        ("n", n.to_string()),
        ("seed", seed.to_string()),
    ];
    if robot_type == RobotType::Arm {
        entries.push(("links", links.to_string()));
    }
    let text = config_text("gen", &entries);
    let dir = run_dir(args.common.out, "gen", &text)?;

    let (manifest, problems) = env_gen::generate_dataset(seed, n, robot_type, links)?;
    env_gen::write_dataset(&dir, &manifest, &problems)?;
    write_config(&dir, &text)?;
    println!(
        "dataset: {} problems ({} train / {} test), robot {}, seed {}",
        manifest.count,
        manifest.ids_with_split(Split::Train).len(),
        manifest.ids_with_split(Split::Test).len(),
        manifest.robot_type,
        manifest.global_seed
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let dataset = require(resolve_opt(args.dataset, &cfg, "dataset")?, "--dataset")?;
    let (manifest, problems) = env_gen::load_dataset(&dataset)?;
    let planners = match resolve_opt::<String>(args.planners, &cfg, "planners")? {
        Some(list) => parse_planner_list(&list)?,
        None => PlannerId::ALL.to_vec(),
    };
    let trials = resolve(args.trials, &cfg, "trials", planners::DEFAULT_TRIALS)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("--trials must be at least 1".into()));
    }
    let default_timeout = match manifest.robot_type {
        RobotType::Nav2d => planners::DEFAULT_TIMEOUT_NAV_S,
        RobotType::Arm => planners::DEFAULT_TIMEOUT_ARM_S,
    };
    let timeout = resolve(args.timeout, &cfg, "timeout", default_timeout)?;
    let seed = resolve(args.seed, &cfg, "seed", 0u64)?;
    let split_name = resolve(args.split, &cfg, "split", "all".to_string())?;
    let split = parse_split(&split_name)?;

    let planner_names: Vec<String> = planners.iter().map(|p| p.to_string()).collect();
    let text = config_text(
        "solve",
        &[
            ("dataset", dataset.display().to_string()),
            ("planners", planner_names.join(",")),
            ("trials", trials.to_string()),
            ("timeout", format!("{timeout}")),
            ("seed", seed.to_string()),
            ("split", split_name.clone()),
        ],
    );
    let dir = run_dir(args.common.out, "solve", &text)?;
    write_config(&dir, &text)?;
    let labels_path = dir.join("labels.jsonl");

    let selected = split_problems(&manifest, &problems, split);
    let done = read_record_keys(&labels_path)?;
    let mut units: Vec<(&Problem, PlannerId)> = Vec::new();
    for p in &selected {
        for &planner in &planners {
            if !done.contains(&(p.id.clone(), planner)) {
                units.push((p, planner));
            }
        }
    }
    let total = selected.len() * planners.len();
    println!(
        "measuring {} of {} (problem, planner) pairs ({} already recorded)",
        units.len(),
        total,
        total - units.len()
    );

    install_pool(args.common.workers, || -> Result<()> {
        use rayon::prelude::*;
        // Chunked execution: parallel within a chunk, records appended in
        // unit order after each chunk, so interrupted runs resume cleanly
        // and the final file is byte-identical for any worker count.
        for chunk in units.chunks(64) {
            let records: Vec<_> = chunk
                .par_iter()
                .map(|(p, planner)| {
                    let params = PlannerParams {
                        timeout_s: timeout,
                        rng_seed: derive_seed(derive_seed(seed, p.seed), planner.index() as u64),
                        ..Default::default()
                    };
                    planners::measure(p, *planner, trials, &params)
                })
                .collect::<Result<Vec<_>>>()?;
            append_records(&labels_path, &records)?;
        }
        Ok(())
    })?;
    println!("wrote {}", labels_path.display());
    Ok(())
}

fn parse_task(s: &str) -> Result<(bool, Task, Option<PlannerId>)> {
    // (occupancy?, task, planner)
    let (occupancy, rest) = match s.strip_prefix("occupancy-") {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if rest == "portfolio" {
        return Ok((occupancy, Task::Classify4, None));
    }
    if let Some(planner) = rest.strip_prefix("runtime:") {
        return Ok((occupancy, Task::Regress1, Some(planner.parse()?)));
    }
    Err(Error::InvalidArgument(format!(
        "unknown task `{s}` (expected portfolio, runtime:PLANNER, occupancy-portfolio, occupancy-runtime:PLANNER)"
    )))
}

/// Builds (examples, targets) for a problem list from the records.
fn build_dataset(
    problems: &[&Problem],
    records: &RecordSet,
    occupancy: bool,
    task: Task,
    planner: Option<PlannerId>,
) -> Result<gnn::Dataset> {
    let mut examples = Vec::with_capacity(problems.len());
    for p in problems {
        if occupancy {
            let grid = crate::predict::rasterize(p, crate::predict::OCCUPANCY_RESOLUTION)?;
            examples.push(gnn::train::Example::Dense {
                x: grid.cells.iter().map(|&c| c as f64).collect(),
                config: Some(grid.start_goal),
            });
        } else {
            examples.push(gnn::train::Example::Graph(graph_encode::encode(p)?));
        }
    }
    let targets = match task {
        Task::Classify4 => Targets::Classes(
            problems
                .iter()
                .map(|p| Ok(records.fastest(&p.id)?.index()))
                .collect::<Result<_>>()?,
        ),
        Task::Regress1 => {
            let planner = planner.expect("regression task carries a planner");
            Targets::Values(
                problems
                    .iter()
                    .map(|p| records.expected_time(&p.id, planner))
                    .collect::<Result<_>>()?,
            )
        }
    };
    Ok(gnn::Dataset { examples, targets })
}

fn model_desc_for(
    occupancy: bool,
    task: Task,
    manifest: &DatasetManifest,
) -> Result<gnn::ModelDesc> {
    if occupancy {
        if manifest.robot_type == RobotType::Arm {
            return Err(Error::InvalidArgument(
                "the occupancy baseline is defined for nav2d datasets".into(),
            ));
        }
        // start/goal vector: [x, y, theta] twice.
        let cells = crate::predict::OCCUPANCY_RESOLUTION * crate::predict::OCCUPANCY_RESOLUTION;
        return Ok(gnn::occupancy_desc(task, cells, 6));
    }
    Ok(match (manifest.robot_type, task) {
        (RobotType::Nav2d, Task::Classify4) => gnn::nav_classifier_desc(),
        (RobotType::Nav2d, Task::Regress1) => gnn::nav_regressor_desc(),
        (RobotType::Arm, Task::Regress1) => {
            gnn::arm_regressor_desc(manifest.n_links.unwrap_or(3))
        }
        (RobotType::Arm, Task::Classify4) => gnn::ModelDesc {
            task: Task::Classify4,
            ..gnn::arm_regressor_desc(manifest.n_links.unwrap_or(3))
        },
    })
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let dataset = require(resolve_opt(args.dataset, &cfg, "dataset")?, "--dataset")?;
    let labels = require(resolve_opt(args.labels, &cfg, "labels")?, "--labels")?;
    let task_str: String = require(resolve_opt(args.task, &cfg, "task")?, "--task")?;
    let (occupancy, task, planner) = parse_task(&task_str)?;
    let hp = Hyperparams {
        learning_rate: resolve(args.lr, &cfg, "lr", 1e-3)?,
        batch_size: resolve(args.batch, &cfg, "batch", 32)?,
        max_epochs: resolve(args.epochs, &cfg, "epochs", 120)?,
        patience: resolve(args.patience, &cfg, "patience", 10)?,
        seed: resolve(args.seed, &cfg, "seed", 0u64)?,
        parallel_shard: None,
    };

    let text = config_text(
        "train",
        &[
            ("dataset", dataset.display().to_string()),
            ("labels", labels.display().to_string()),
            ("task", task_str.clone()),
            ("lr", format!("{}", hp.learning_rate)),
            ("batch", hp.batch_size.to_string()),
            ("epochs", hp.max_epochs.to_string()),
            ("patience", hp.patience.to_string()),
            ("seed", hp.seed.to_string()),
        ],
    );
    let dir = run_dir(args.common.out, "train", &text)?;
    write_config(&dir, &text)?;

    let (manifest, problems) = env_gen::load_dataset(&dataset)?;
    let records = RecordSet::load(&labels)?;
    let train_problems = split_problems(&manifest, &problems, Some(Split::Train));
    let test_problems = split_problems(&manifest, &problems, Some(Split::Test));
    let train_set = build_dataset(&train_problems, &records, occupancy, task, planner)?;
    let test_set = build_dataset(&test_problems, &records, occupancy, task, planner)?;

    let desc = model_desc_for(occupancy, task, &manifest)?;
    let mut model = Model::init(desc, derive_seed(hp.seed, 0x6d6f64)); // "mod"
    let log = gnn::train(&mut model, &train_set, &test_set, &hp)?;

    gnn::checkpoint::save(&model, &dir.join("model.pfmd"))?;
    fs::write(
        dir.join("train_log.json"),
        serde_json::to_string_pretty(&log)?,
    )?;
    let last = log.epochs.last().expect("at least one epoch");
    println!(
        "trained {} epochs (best test loss {:.6} at epoch {}); final train {:.6} test {:.6}",
        log.epochs.len(),
        log.best_test_loss,
        log.best_epoch,
        last.train_loss,
        last.test_loss
    );
    println!("wrote {}", dir.join("model.pfmd").display());
    Ok(())
}

fn parse_planner_paths(specs: &[String], cfg_value: Option<String>) -> Result<Vec<(PlannerId, PathBuf)>> {
    let mut all: Vec<String> = specs.to_vec();
    if let Some(v) = cfg_value {
        all.extend(v.split(',').map(|s| s.trim().to_string()));
    }
    all.iter()
        .map(|s| {
            let (planner, path) = s.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("expected PLANNER=PATH, got `{s}`"))
            })?;
            Ok((planner.trim().parse()?, PathBuf::from(path.trim())))
        })
        .collect()
}

fn load_model(path: &Path, task: Task) -> Result<Model> {
    let model = gnn::checkpoint::load(path)?;
    if model.task() != task {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {} has the wrong task for this experiment",
            path.display()
        )));
    }
    Ok(model)
}

fn write_report(dir: &Path, report: &PredictorReport, decimals: usize) -> Result<()> {
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    let table = report.to_text_table(decimals);
    fs::write(dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let experiment: String = require(
        resolve_opt(args.experiment, &cfg, "experiment")?,
        "--experiment (portfolio or fastest)",
    )?;
    if experiment != "portfolio" && experiment != "fastest" {
        return Err(Error::InvalidArgument(format!(
            "unknown experiment `{experiment}` (expected portfolio or fastest)"
        )));
    }
    let dataset = require(resolve_opt(args.dataset, &cfg, "dataset")?, "--dataset")?;
    let labels = require(resolve_opt(args.labels, &cfg, "labels")?, "--labels")?;
    let split_name = resolve(args.split, &cfg, "split", "test".to_string())?;
    let split = parse_split(&split_name)?;
    let seed = resolve(args.seed, &cfg, "seed", 0u64)?;
    let iterations = resolve(args.iterations, &cfg, "iterations", 1000usize)?;
    let predictors = resolve_opt::<String>(args.predictors, &cfg, "predictors")?;

    let (manifest, problems) = env_gen::load_dataset(&dataset)?;
    let records = RecordSet::load(&labels)?;
    let pool = split_problems(&manifest, &problems, split);

    match experiment.as_str() {
        "portfolio" => {
            let checkpoint = resolve_opt(args.checkpoint, &cfg, "checkpoint")?;
            let occ_checkpoint =
                resolve_opt(args.occupancy_checkpoint, &cfg, "occupancy_checkpoint")?;
            let gnn_model = checkpoint
                .map(|p: PathBuf| load_model(&p, Task::Classify4))
                .transpose()?;
            let occ_model = occ_checkpoint
                .map(|p: PathBuf| load_model(&p, Task::Classify4))
                .transpose()?;

            let wanted: Vec<String> = predictors
                .map(|s| s.split(',').map(|x| x.trim().to_lowercase()).collect())
                .unwrap_or_else(|| {
                    let mut v = vec!["perfect".to_string()];
                    if gnn_model.is_some() {
                        v.push("gnn".into());
                    }
                    if occ_model.is_some() {
                        v.push("fc".into());
                    }
                    v.extend(PlannerId::ALL.iter().map(|p| p.to_string()));
                    v
                });
            let mut selectors = Vec::new();
            for name in &wanted {
                selectors.push(match name.as_str() {
                    "perfect" => PlannerSelector::Perfect,
                    "gnn" => PlannerSelector::Classifier(gnn_model.as_ref().ok_or_else(
                        || Error::InvalidArgument("gnn predictor needs --checkpoint".into()),
                    )?),
                    "fc" => PlannerSelector::Classifier(occ_model.as_ref().ok_or_else(
                        || {
                            Error::InvalidArgument(
                                "fc predictor needs --occupancy-checkpoint".into(),
                            )
                        },
                    )?),
                    planner => PlannerSelector::Fixed(planner.parse()?),
                });
            }

            let text = config_text(
                "eval",
                &[
                    ("experiment", experiment.clone()),
                    ("dataset", dataset.display().to_string()),
                    ("labels", labels.display().to_string()),
                    ("split", split_name.clone()),
                    ("predictors", wanted.join(",")),
                ],
            );
            let dir = run_dir(args.common.out, "eval", &text)?;
            write_config(&dir, &text)?;
            let report = install_pool(args.common.workers, || {
                portfolio_experiment(&pool, &selectors, &records)
            })?;
            write_report(&dir, &report, 0)?;
        }
        "fastest" => {
            let regressors = parse_planner_paths(&args.regressors, cfg.get("regressors")?)?;
            let occ_regressors =
                parse_planner_paths(&args.occupancy_regressors, cfg.get("occupancy_regressors")?)?;
            if regressors.is_empty() && occ_regressors.is_empty() {
                return Err(Error::InvalidArgument(
                    "fastest experiment needs at least one --regressor PLANNER=PATH".into(),
                ));
            }
            let mut columns: Vec<PlannerId> = regressors.iter().map(|(p, _)| *p).collect();
            for (p, _) in &occ_regressors {
                if !columns.contains(p) {
                    columns.push(*p);
                }
            }

            let text = config_text(
                "eval",
                &[
                    ("experiment", experiment.clone()),
                    ("dataset", dataset.display().to_string()),
                    ("labels", labels.display().to_string()),
                    ("split", split_name.clone()),
                    ("iterations", iterations.to_string()),
                    ("seed", seed.to_string()),
                    (
                        "planners",
                        columns
                            .iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>()
                            .join(","),
                    ),
                ],
            );
            let dir = run_dir(args.common.out, "eval", &text)?;
            write_config(&dir, &text)?;

            let wanted: Vec<String> = predictors
                .map(|s| s.split(',').map(|x| x.trim().to_lowercase()).collect())
                .unwrap_or_else(|| {
                    let mut v = vec!["perfect".to_string(), "gnn".into()];
                    if !occ_regressors.is_empty() {
                        v.push("fc".into());
                    }
                    v.extend(["least-obstacles".to_string(), "random".into()]);
                    v
                });

            let mut per_planner = Vec::new();
            for &planner in &columns {
                let gnn_model = regressors
                    .iter()
                    .find(|(p, _)| *p == planner)
                    .map(|(_, path)| load_model(path, Task::Regress1))
                    .transpose()?;
                let occ_model = occ_regressors
                    .iter()
                    .find(|(p, _)| *p == planner)
                    .map(|(_, path)| load_model(path, Task::Regress1))
                    .transpose()?;
                let mut scorers = Vec::new();
                for name in &wanted {
                    scorers.push(match name.as_str() {
                        "perfect" => ProblemScorer::Perfect,
                        "gnn" => ProblemScorer::Regressor(gnn_model.as_ref().ok_or_else(
                            || {
                                Error::InvalidArgument(format!(
                                    "no --regressor given for planner {planner}"
                                ))
                            },
                        )?),
                        "fc" => ProblemScorer::Regressor(occ_model.as_ref().ok_or_else(
                            || {
                                Error::InvalidArgument(format!(
                                    "no --occupancy-regressor given for planner {planner}"
                                ))
                            },
                        )?),
                        "least-obstacles" => ProblemScorer::LeastObstacles,
                        "random" => ProblemScorer::Random,
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown predictor `{other}`"
                            )))
                        }
                    });
                }
                let fc = FastestConfig {
                    iterations,
                    set_min: 2,
                    set_max: 10,
                    seed,
                };
                let report = install_pool(args.common.workers, || {
                    fastest_problem_experiment(&pool, &scorers, &records, planner, &fc)
                })?;
                per_planner.push(report);
            }
            let merged = PredictorReport::merge_columns(per_planner);
            write_report(&dir, &merged, 0)?;
        }
        _ => unreachable!("experiment validated above"),
    }
    Ok(())
}

fn cmd_tamp(args: TampArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let dataset = require(resolve_opt(args.dataset, &cfg, "dataset")?, "--dataset")?;
    let labels = require(resolve_opt(args.labels, &cfg, "labels")?, "--labels")?;
    let regressor = resolve_opt(args.regressor, &cfg, "regressor")?;
    let occ_regressor = resolve_opt(args.occupancy_regressor, &cfg, "occupancy_regressor")?;
    let iterations = resolve(args.iterations, &cfg, "iterations", 100usize)?;
    let seed = resolve(args.seed, &cfg, "seed", 0u64)?;
    let split_name = resolve(args.split, &cfg, "split", "test".to_string())?;
    let split = parse_split(&split_name)?;

    let text = config_text(
        "tamp",
        &[
            ("dataset", dataset.display().to_string()),
            ("labels", labels.display().to_string()),
            ("split", split_name.clone()),
            ("iterations", iterations.to_string()),
            ("seed", seed.to_string()),
        ],
    );
    let dir = run_dir(args.common.out, "tamp", &text)?;
    write_config(&dir, &text)?;

    let (manifest, problems) = env_gen::load_dataset(&dataset)?;
    let records = RecordSet::load(&labels)?;
    let pool = split_problems(&manifest, &problems, split);

    let gnn_model = regressor
        .map(|p: PathBuf| load_model(&p, Task::Regress1))
        .transpose()?;
    let occ_model = occ_regressor
        .map(|p: PathBuf| load_model(&p, Task::Regress1))
        .transpose()?;
    let mut scorers = vec![ProblemScorer::Perfect];
    if let Some(m) = &gnn_model {
        scorers.push(ProblemScorer::Regressor(m));
    }
    if let Some(m) = &occ_model {
        scorers.push(ProblemScorer::Regressor(m));
    }
    scorers.push(ProblemScorer::LeastObstacles);

    let tc = TampConfig {
        iterations,
        seed,
        max_redraws: 1000,
    };
    let report = install_pool(args.common.workers, || {
        tamp_experiment(&pool, &scorers, &records, &tc)
    })?;
    write_report(&dir, &report, 2)?;
    Ok(())
}

fn cmd_dump_graph(args: DumpGraphArgs) -> Result<()> {
    let cfg = KvConfig::load(args.common.config.as_deref())?;
    let dataset = require(resolve_opt(args.dataset, &cfg, "dataset")?, "--dataset")?;
    let problem_id: String = require(
        resolve_opt(args.problem_id, &cfg, "problem_id")?,
        "--problem-id",
    )?;
    let (_, problems) = env_gen::load_dataset(&dataset)?;
    let problem = problems
        .iter()
        .find(|p| p.id == problem_id)
        .ok_or_else(|| Error::MissingArtifact(format!("problem `{problem_id}`")))?;
    let graph = graph_encode::encode(problem)?;
    let json = graph_encode::graph_to_json(&graph)?;
    match args.file {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}
