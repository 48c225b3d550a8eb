//! Command-line front end: `stats`, `train`, `eval`, `predict` and `synth`.
//!
//! Exit codes: 0 success, 2 input error, 3 lookup error, 4 numeric failure.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eval::{evaluate, EvalError};
use crate::geometry::Signature;
use crate::kgdata::{
    load_triples, make_synthetic, names_digest, relation_stats, DataError, Split, SyntheticSpec, TripleStore,
};
use crate::model::{self, CheckpointError, Geometry, Model, ModelError, Names, DEFAULT_MARGIN};
use crate::operators::OperatorKind;
use crate::training::{fit, OptimizerKind, TrainConfig, TrainError};

/// Epochs between validation reports during `train`.
pub const VALID_EVERY: usize = 50;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Lookup(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Lookup(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::UnknownEntity(_) | DataError::UnknownRelation(_) => CliError::Lookup(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::EmptyTrain | TrainError::Shape { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptySplit(_) => CliError::Input(e.to_string()),
            EvalError::Lookup(_) => CliError::Lookup(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Lookup(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "ultrakge", version, about = "Ultrahyperbolic knowledge-graph embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entity, relation and triple counts plus per-relation hierarchy scores.
    Stats(StatsArgs),
    /// Train a model and write a checkpoint and a loss trace.
    Train(Box<TrainArgs>),
    /// Filtered MRR and Hits@K of a checkpoint.
    Eval(EvalArgs),
    /// Top-K tails for a head and relation.
    Predict(PredictArgs),
    /// Write a synthetic tree + ring dataset as TSV files.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<TripleStore, CliError> {
        Ok(load_triples(&self.train, self.valid.as_deref(), self.test.as_deref())?)
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also write the per-relation CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// key=value file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Total dimension d = p + q.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Time-like dimensions q.
    #[arg(long)]
    pub time_dims: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub neg: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// rot | ref | rotref
    #[arg(long)]
    pub operator: Option<String>,
    /// adam | adagrad
    #[arg(long)]
    pub optimizer: Option<String>,
    /// ultra | euclidean
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub grad_check: bool,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss-trace CSV path; defaults to the checkpoint path plus `.loss.csv`.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Split to rank.
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Comma-separated splits whose triples are filtered out.
    #[arg(long, default_value = "train,valid,test", value_delimiter = ',')]
    pub filter: Vec<Split>,
    #[arg(long)]
    pub per_relation: bool,
    /// Write the per-relation CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub head: String,
    #[arg(long)]
    pub rel: String,
    #[arg(long, default_value_t = 10)]
    pub topk: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 3)]
    pub branching: usize,
    /// Ring length over the leaves; 0 links all leaves in one ring.
    #[arg(long, default_value_t = 0)]
    pub cycle: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Training settings that may come from flags or a config file. `None`
/// means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub dim: Option<usize>,
    pub time_dims: Option<usize>,
    pub alpha: Option<f64>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub neg: Option<usize>,
    pub epochs: Option<usize>,
    pub margin: Option<f64>,
    pub seed: Option<u64>,
    pub operator: Option<OperatorKind>,
    pub optimizer: Option<OptimizerKind>,
    pub geometry: Option<Geometry>,
    pub threads: Option<usize>,
    pub deterministic: Option<bool>,
    pub grad_check: Option<bool>,
}

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 15] = [
    "dim",
    "time_dims",
    "alpha",
    "lr",
    "batch",
    "neg",
    "epochs",
    "margin",
    "seed",
    "operator",
    "optimizer",
    "geometry",
    "threads",
    "deterministic",
    "grad_check",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Input(format!("bad value '{value}' for '{key}': {e}")))
}

impl PartialConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "dim" => self.dim = Some(parse_value(key, value)?),
            "time_dims" => self.time_dims = Some(parse_value(key, value)?),
            "alpha" => self.alpha = Some(parse_value(key, value)?),
            "lr" => self.lr = Some(parse_value(key, value)?),
            "batch" => self.batch = Some(parse_value(key, value)?),
            "neg" => self.neg = Some(parse_value(key, value)?),
            "epochs" => self.epochs = Some(parse_value(key, value)?),
            "margin" => self.margin = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "operator" => self.operator = Some(parse_value(key, value)?),
            "optimizer" => self.optimizer = Some(parse_value(key, value)?),
            "geometry" => self.geometry = Some(parse_value(key, value)?),
            "threads" => self.threads = Some(parse_value(key, value)?),
            "deterministic" => self.deterministic = Some(parse_value(key, value)?),
            "grad_check" => self.grad_check = Some(parse_value(key, value)?),
            other => {
                return Err(CliError::Input(format!(
                    "unknown config key '{other}' (known: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key=value` lines. Blank lines and lines starting with `#` are
    /// ignored; dashes in keys are read as underscores.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected key=value", i + 1)))?;
            cfg.set(&k.trim().replace('-', "_"), v.trim())?;
        }
        Ok(cfg)
    }

    /// Field-wise `self` if set, otherwise `fallback`.
    pub fn or(self, fallback: PartialConfig) -> PartialConfig {
        PartialConfig {
            dim: self.dim.or(fallback.dim),
            time_dims: self.time_dims.or(fallback.time_dims),
            alpha: self.alpha.or(fallback.alpha),
            lr: self.lr.or(fallback.lr),
            batch: self.batch.or(fallback.batch),
            neg: self.neg.or(fallback.neg),
            epochs: self.epochs.or(fallback.epochs),
            margin: self.margin.or(fallback.margin),
            seed: self.seed.or(fallback.seed),
            operator: self.operator.or(fallback.operator),
            optimizer: self.optimizer.or(fallback.optimizer),
            geometry: self.geometry.or(fallback.geometry),
            threads: self.threads.or(fallback.threads),
            deterministic: self.deterministic.or(fallback.deterministic),
            grad_check: self.grad_check.or(fallback.grad_check),
        }
    }
}

/// Fully resolved training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub signature: Signature,
    pub operator: OperatorKind,
    pub geometry: Geometry,
    pub margin: f64,
    pub train: TrainConfig,
}

pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_TIME_DIMS: usize = 4;
pub const DEFAULT_ALPHA: f64 = 1.0;

impl RunConfig {
    /// Merges flags over file over defaults and validates the signature.
    pub fn resolve(flags: PartialConfig, file: PartialConfig) -> Result<Self, CliError> {
        let c = flags.or(file);
        let defaults = TrainConfig::default();
        let d = c.dim.unwrap_or(DEFAULT_DIM);
        let q = c.time_dims.unwrap_or(DEFAULT_TIME_DIMS);
        if q < 1 {
            return Err(CliError::Input("time_dims must be at least 1".into()));
        }
        if q > d / 2 {
            return Err(CliError::Input(format!(
                "time_dims {q} exceeds space dims {}",
                d.saturating_sub(q)
            )));
        }
        let p = d - q;
        if !p.is_multiple_of(2) || !q.is_multiple_of(2) {
            return Err(CliError::Input(format!("space dims {p} and time dims {q} must both be even")));
        }
        let signature = Signature::new(p, q, c.alpha.unwrap_or(DEFAULT_ALPHA))
            .map_err(|e| CliError::Input(e.to_string()))?;
        let train = TrainConfig {
            batch_size: c.batch.unwrap_or(defaults.batch_size),
            neg_samples: c.neg.unwrap_or(defaults.neg_samples),
            learning_rate: c.lr.unwrap_or(defaults.learning_rate),
            epochs: c.epochs.unwrap_or(defaults.epochs),
            optimizer: c.optimizer.unwrap_or(defaults.optimizer),
            seed: c.seed.unwrap_or(defaults.seed),
            grad_check: c.grad_check.unwrap_or(defaults.grad_check),
            deterministic: c.deterministic.unwrap_or(defaults.deterministic),
            threads: c.threads.unwrap_or(defaults.threads),
        };
        train.validate()?;
        Ok(Self {
            signature,
            operator: c.operator.unwrap_or_default(),
            geometry: c.geometry.unwrap_or_default(),
            margin: c.margin.unwrap_or(DEFAULT_MARGIN),
            train,
        })
    }
}

impl TrainArgs {
    fn flags(&self) -> Result<PartialConfig, CliError> {
        let mut c = PartialConfig {
            dim: self.dim,
            time_dims: self.time_dims,
            alpha: self.alpha,
            lr: self.lr,
            batch: self.batch,
            neg: self.neg,
            epochs: self.epochs,
            margin: self.margin,
            seed: self.seed,
            threads: self.threads,
            deterministic: self.deterministic.then_some(true),
            grad_check: self.grad_check.then_some(true),
            ..PartialConfig::default()
        };
        if let Some(v) = &self.operator {
            c.set("operator", v)?;
        }
        if let Some(v) = &self.optimizer {
            c.set("optimizer", v)?;
        }
        if let Some(v) = &self.geometry {
            c.set("geometry", v)?;
        }
        Ok(c)
    }
}

/// `41k` style rendering of large counts.
pub fn compact_count(n: usize) -> String {
    if n < 1000 {
        n.to_string()
    } else {
        format!("{}k", (n as f64 / 1000.0).round() as usize)
    }
}

/// One-line dataset summary, e.g. `41k entities / 11 relations / 93k triples`.
pub fn summary_line(store: &TripleStore) -> String {
    format!(
        "{} entities / {} relations / {} triples",
        compact_count(store.num_entities()),
        compact_count(store.base_relations()),
        compact_count(store.base_triple_count())
    )
}

/// Per-relation CSV with columns `relation,count,khs`.
pub fn stats_csv(store: &TripleStore) -> String {
    let mut out = String::from("relation,count,khs\n");
    for s in relation_stats(store) {
        let khs = s.khs.map(|k| format!("{k:.6}")).unwrap_or_else(|| "NA".into());
        let _ = writeln!(out, "{},{},{khs}", s.relation, s.count);
    }
    out
}

fn cmd_stats(args: &StatsArgs) -> Result<(), CliError> {
    let store = args.data.load()?;
    println!("{}", summary_line(&store));
    println!(
        "train {} / valid {} / test {}",
        store.train().len(),
        store.valid().len(),
        store.test().len()
    );
    if !store.test_only_entities().is_empty() {
        println!(
            "{} entities appear only in valid/test",
            store.test_only_entities().len()
        );
    }
    println!("graph curvature: external (not computed)");
    let width = store.relations.names().iter().map(String::len).max().unwrap_or(0).max(8);
    println!("{:<width$}  {:>8}  {:>8}", "relation", "count", "khs");
    for s in relation_stats(&store) {
        let khs = s.khs.map(|k| format!("{k:.4}")).unwrap_or_else(|| "NA".into());
        println!("{:<width$}  {:>8}  {khs:>8}", s.relation, s.count);
    }
    let csv = stats_csv(&store);
    match &args.csv {
        Some(path) => std::fs::write(path, csv).map_err(|e| io_err(path, e))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => PartialConfig::parse(&std::fs::read_to_string(path).map_err(|e| io_err(path, e))?)?,
        None => PartialConfig::default(),
    };
    let run = RunConfig::resolve(args.flags()?, file)?;
    let mut store = args.data.load()?;
    store.augment_inverse()?;
    let names = Names {
        entities: store.entities.names().to_vec(),
        relations: store.relations.names().to_vec(),
    };
    let mut m = model::init(
        run.signature,
        store.num_entities(),
        store.num_relations(),
        run.margin,
        run.train.seed,
    )
    .with_operator(run.operator)
    .with_geometry(run.geometry)
    .with_names(names);

    println!(
        "{}; p={} q={} alpha={} operator={} geometry={}",
        summary_line(&store),
        run.signature.p(),
        run.signature.q(),
        run.signature.alpha(),
        run.operator.as_str(),
        run.geometry.as_str()
    );
    let has_valid = !store.valid().is_empty();
    let all = [Split::Train, Split::Valid, Split::Test];
    let mut stdout = std::io::stdout().lock();
    let result = fit(&mut m, &store, &run.train, |rep, m| {
        let _ = writeln!(stdout, "epoch {} loss {:.6}", rep.epoch, rep.loss);
        if has_valid && rep.epoch % VALID_EVERY == 0 {
            if let Ok(ev) = evaluate(m, &store, Split::Valid, &all) {
                let _ = writeln!(stdout, "epoch {} valid MRR {:.4}", rep.epoch, ev.mrr());
            }
        }
    });
    drop(stdout);
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            // keep the restored model so the run can be inspected
            model::save(&m, &args.out)?;
            return Err(e.into());
        }
    };
    model::save(&m, &args.out)?;
    let loss_path = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.loss.csv", args.out.display())));
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in report.losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{l}", i + 1);
    }
    std::fs::write(&loss_path, csv).map_err(|e| io_err(&loss_path, e))?;
    println!("wrote {} and {}", args.out.display(), loss_path.display());
    Ok(())
}

fn check_dictionaries(m: &Model, store: &TripleStore) -> Result<(), CliError> {
    let Some(names) = &m.names else {
        return Err(CliError::Input(
            "checkpoint carries no dictionaries; cannot match it to a dataset".into(),
        ));
    };
    let ok_e = names_digest(&names.entities) == store.entities.digest();
    let ok_r = names_digest(&names.relations) == store.relations.digest();
    if !(ok_e && ok_r) {
        let which = match (ok_e, ok_r) {
            (false, false) => "entity and relation",
            (false, true) => "entity",
            _ => "relation",
        };
        return Err(CliError::Input(format!(
            "{which} dictionary of the checkpoint differs from the dataset \
             (checkpoint: {} entities / {} relations, dataset: {} / {}); \
             evaluate with the same files the model was trained on",
            names.entities.len(),
            names.relations.len(),
            store.num_entities(),
            store.num_relations()
        )));
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let m = model::load(&args.model)?;
    let mut store = args.data.load()?;
    store.augment_inverse()?;
    check_dictionaries(&m, &store)?;
    let filter: Vec<Split> = {
        let mut seen = HashSet::new();
        args.filter.iter().copied().filter(|s| seen.insert(*s)).collect()
    };
    let report = evaluate(&m, &store, args.split, &filter)?;
    let t = &report.total;
    println!(
        "{} queries  MRR {:.4}  H@1 {:.4}  H@3 {:.4}  H@10 {:.4}",
        t.count, t.mrr, t.hits1, t.hits3, t.hits10
    );
    if args.per_relation {
        let names = store.relations.names();
        print!("{}", report.to_table(names));
        let csv = report.to_csv(names);
        match &args.csv {
            Some(path) => std::fs::write(path, csv).map_err(|e| io_err(path, e))?,
            None => print!("{csv}"),
        }
    }
    Ok(())
}

/// Up to three dictionary entries closest to `query` by edit distance.
pub fn nearest_names<'a>(query: &str, names: &'a [String]) -> Vec<&'a str> {
    let mut scored: Vec<(usize, &str)> = names
        .iter()
        .map(|n| (strsim::levenshtein(query, n), n.as_str()))
        .collect();
    scored.sort();
    scored.into_iter().take(3).map(|(_, n)| n).collect()
}

fn lookup(kind: &str, query: &str, names: &[String]) -> Result<usize, CliError> {
    names.iter().position(|n| n == query).ok_or_else(|| {
        CliError::Lookup(format!(
            "unknown {kind} '{query}'; nearest: {}",
            nearest_names(query, names).join(", ")
        ))
    })
}

/// Top `k` tails for `(head, rel)` as `(name, score)`, best first.
pub fn predict(m: &Model, head: &str, rel: &str, k: usize) -> Result<Vec<(String, f64)>, CliError> {
    let names = m
        .names
        .as_ref()
        .ok_or_else(|| CliError::Input("checkpoint carries no entity names".into()))?;
    let h = lookup("entity", head, &names.entities)?;
    let r = lookup("relation", rel, &names.relations)?;
    let scores = m.score_all_tails(h, r, &m.embed_all())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(k)
        .map(|e| (names.entities[e].clone(), scores[e]))
        .collect())
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let m = model::load(&args.model)?;
    for (i, (name, score)) in predict(&m, &args.head, &args.rel, args.topk)?.iter().enumerate() {
        println!("{}\t{name}\t{score:.6}", i + 1);
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.levels < 2 || args.branching < 1 {
        return Err(CliError::Input("synthetic data needs levels >= 2 and branching >= 1".into()));
    }
    let store = make_synthetic(SyntheticSpec {
        levels: args.levels,
        branching: args.branching,
        cycle_size: args.cycle,
        seed: args.seed,
    });
    store.write_tsv(&args.out)?;
    println!("{} -> {}", summary_line(&store), args.out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
