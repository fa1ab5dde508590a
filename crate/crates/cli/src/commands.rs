use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use autoeda_core::env::{replay, HeadLayout, Trajectory};
use autoeda_core::eval::{self, Alignment, EvalReport, SessionMode};
use autoeda_core::measures::{
    classify_session, flag_above, normalize_session, score_session, CoherenceRule, CoherenceRuleset, Measure,
    MeasureConfig, MeasureScores,
};
use autoeda_core::seed;
use autoeda_core::synth::{self, ColumnPatterns, CorrelationDag};
use autoeda_core::tabular::{ColumnKind, Dataset};
use autoeda_core::train::{train_gail, Checkpoint, IntervalMetrics, Models, Optimizers, CHECKPOINT_VERSION};
use autoeda_core::Error as CoreError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::io;
use crate::manifest::RunManifest;

/// Imitation-learning engine for exploratory data analysis sessions.
///
/// Settings resolve as command-line flag, then config file, then built-in
/// default.
#[derive(Debug, Clone, Parser)]
#[command(name = "autoeda", version)]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON or TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Omit wall-clock timestamps from manifests.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate synthetic datasets and expert sessions.
    Synth(SynthArgs),
    /// Pretrain and adversarially train a policy.
    Train(TrainArgs),
    /// Generate sessions from a checkpoint.
    Generate(GenerateArgs),
    /// Score every step of recorded sessions.
    Measure(MeasureArgs),
    /// Compare generated sessions with gold sessions.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    pub datasets: usize,
    #[arg(long)]
    pub rows: Option<usize>,
    /// Expert sessions per dataset, before the train/eval split.
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub patterns: Option<usize>,
    #[arg(long)]
    pub multiplier: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// JSON list of `{"name", "kind"}` columns; defaults to three
    /// categorical, three numeric and two text columns.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value = "synth")]
    pub prefix: String,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Dataset files; repeat for several.
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,
    /// Expert session files, one per dataset, in the same order.
    #[arg(long = "expert", required = true)]
    pub experts: Vec<PathBuf>,
    #[arg(long)]
    pub no_penalty: bool,
    #[arg(long, conflicts_with = "bc_only")]
    pub no_bc: bool,
    #[arg(long)]
    pub bc_only: bool,
    /// Train once per dataset with that dataset held out.
    #[arg(long)]
    pub leave_one_out: bool,
    #[arg(long)]
    pub total_interactions: Option<usize>,
    #[arg(long)]
    pub train_interval: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub bc_epochs: Option<usize>,
    #[arg(long)]
    pub lr_bc: Option<f64>,
    #[arg(long)]
    pub lr_adv: Option<f64>,
    /// Start from this checkpoint's networks.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Also write a checkpoint every this many intervals.
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Sample,
    Uniform,
}

impl From<ModeArg> for SessionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Greedy => SessionMode::Greedy,
            ModeArg::Sample => SessionMode::Sample,
            ModeArg::Uniform => SessionMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, short, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "sample")]
    pub mode: ModeArg,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Coherence rules: a list of rules or a full ruleset object.
    #[arg(long)]
    pub ruleset: Option<PathBuf>,
    /// Highlight normalized scores above this value.
    #[arg(long, default_value_t = 0.7)]
    pub threshold: f64,
    /// Quantile used to name each session's dominant measure.
    #[arg(long, default_value_t = 0.75)]
    pub quantile: f64,
    /// Only this session of the file.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    Optimal,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,
    /// Gold session files, one per dataset.
    #[arg(long = "gold", required = true)]
    pub gold: Vec<PathBuf>,
    /// Score these session files, one per dataset, instead of generating.
    #[arg(long = "generated")]
    pub generated: Vec<PathBuf>,
    /// Score the gold sessions against themselves.
    #[arg(long)]
    pub self_eval: bool,
    #[arg(long, default_value_t = 10)]
    pub sessions: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    pub mode: ModeArg,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub alignment: Option<AlignmentArg>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

/// Parse `argv` and run the command.
pub fn run(argv: &[String]) -> Result<()> {
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli, argv)
}

pub fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, argv, &file, a),
        Command::Train(a) => cmd_train(cli, argv, &file, a),
        Command::Generate(a) => cmd_generate(cli, argv, &file, a),
        Command::Measure(a) => cmd_measure(cli, argv, a),
        Command::Eval(a) => cmd_eval(cli, argv, &file, a),
    }
}

fn delimiter(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| CliError::Usage(format!("delimiter {c:?} is not a single ASCII character")))
}

fn snapshot<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable config")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaColumn {
    name: String,
    kind: ColumnKind,
}

/// What `synth` produced for one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub name: String,
    pub seed: u64,
    pub schema: Vec<(String, ColumnKind)>,
    pub patterns: Vec<ColumnPatterns>,
    pub dag: CorrelationDag,
    pub train_sessions: usize,
    pub eval_sessions: usize,
}

pub fn cmd_synth(cli: &Cli, argv: &[String], file: &ConfigFile, a: &SynthArgs) -> Result<()> {
    let mut cfg = file.synth.clone();
    if let Some(v) = a.rows {
        cfg.rows = v;
    }
    if let Some(v) = a.trajectories {
        cfg.trajectories = v;
    }
    if let Some(v) = a.patterns {
        cfg.patterns_per_column = v;
    }
    if let Some(v) = a.multiplier {
        cfg.multiplier = v;
    }
    if let Some(v) = a.train_fraction {
        cfg.train_fraction = v;
    }
    if a.datasets == 0 {
        return Err(CliError::Usage("--datasets must be positive".into()));
    }
    let schema = match &a.schema {
        Some(path) => {
            let cols: Vec<SchemaColumn> = io::read_json(path)?;
            cols.into_iter().map(|c| (c.name, c.kind)).collect()
        }
        None => synth::paper_schema(),
    };
    let root = cli.seed.unwrap_or(0);
    let mut manifest = RunManifest::start("synth", argv, root, cli.deterministic, snapshot(&cfg));
    if let Some(path) = &a.schema {
        manifest.input(path)?;
    }
    let mut outputs = Vec::new();
    let mut records = Vec::new();
    for i in 0..a.datasets {
        let name = format!("{}_{}", a.prefix, i + 1);
        let ds_seed = seed::derive_indexed(root, "dataset", i as u64);
        manifest.sub_seeds.insert(name.clone(), ds_seed);
        let s = synth::synthesize(&name, &schema, &cfg, ds_seed)?;
        let data = PathBuf::from("datasets").join(format!("{name}.csv"));
        io::write_dataset(&s.dataset, &cli.out.join(&data))?;
        let sidecar = io::sidecar_path(&data);
        let train = PathBuf::from("trajectories").join(format!("{name}.train.json"));
        let held = PathBuf::from("trajectories").join(format!("{name}.eval.json"));
        io::write_json(&cli.out.join(&train), &s.train)?;
        io::write_json(&cli.out.join(&held), &s.eval)?;
        outputs.extend([data, sidecar, train, held]);
        records.push(GenerationRecord {
            name,
            seed: ds_seed,
            schema: schema.clone(),
            patterns: s.patterns,
            dag: s.dag,
            train_sessions: s.train.len(),
            eval_sessions: s.eval.len(),
        });
    }
    io::write_json(&cli.out.join("generation.json"), &records)?;
    outputs.push("generation.json".into());
    manifest.finish(&cli.out, &outputs)
}

fn load_datasets(paths: &[PathBuf], delim: u8) -> Result<Vec<Dataset>> {
    paths.iter().map(|p| io::read_dataset(p, delim)).collect()
}

fn load_sessions(paths: &[PathBuf]) -> Result<Vec<Vec<Trajectory>>> {
    paths.iter().map(|p| io::read_trajectories(p)).collect()
}

fn paired(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(CliError::Usage(format!("{a} dataset(s) but {b} {what} file(s)")));
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let ck: Checkpoint = io::read_json(path)?;
    if ck.format_version != CHECKPOINT_VERSION {
        return Err(CliError::data(
            path,
            format!("checkpoint format {} is not {CHECKPOINT_VERSION}", ck.format_version),
        ));
    }
    ck.validate().map_err(|e| CliError::data(path, e))?;
    Ok(ck)
}

pub fn cmd_train(cli: &Cli, argv: &[String], file: &ConfigFile, a: &TrainArgs) -> Result<()> {
    paired("expert", a.datasets.len(), a.experts.len())?;
    let mut cfg = file.train.clone();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(v) = a.total_interactions {
        cfg.total_interactions = v;
    }
    if let Some(v) = a.train_interval {
        cfg.train_interval = v;
    }
    if let Some(v) = a.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = a.bc_epochs {
        cfg.bc_epochs = v;
    }
    if let Some(v) = a.lr_bc {
        cfg.lr_bc = v;
    }
    if let Some(v) = a.lr_adv {
        cfg.lr_adv = v;
    }
    if a.no_penalty {
        cfg.penalty_enabled = false;
    }
    if a.no_bc {
        cfg.bc_enabled = false;
    }
    if a.bc_only {
        cfg.bc_enabled = true;
        cfg.total_interactions = 0;
    }
    cfg.validate()?;
    let delim = delimiter(a.delimiter)?;
    let datasets = load_datasets(&a.datasets, delim)?;
    let experts = load_sessions(&a.experts)?;
    let init = match &a.init {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            for ds in &datasets {
                ck.check_dataset(ds)?;
            }
            Some(ck.models)
        }
        None => None,
    };
    if !a.leave_one_out {
        return train_one(cli, argv, &cfg, a, &datasets, &experts, init, &cli.out);
    }
    if datasets.len() < 2 {
        return Err(CliError::Usage("--leave-one-out needs at least two datasets".into()));
    }
    for held in 0..datasets.len() {
        let keep: Vec<usize> = (0..datasets.len()).filter(|&i| i != held).collect();
        let ds: Vec<Dataset> = keep.iter().map(|&i| datasets[i].clone()).collect();
        let ex: Vec<Vec<Trajectory>> = keep.iter().map(|&i| experts[i].clone()).collect();
        let out = cli.out.join(format!("loo_{}", datasets[held].name()));
        train_one(cli, argv, &cfg, a, &ds, &ex, init.clone(), &out)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train_one(
    cli: &Cli,
    argv: &[String],
    cfg: &autoeda_core::train::TrainConfig,
    a: &TrainArgs,
    datasets: &[Dataset],
    experts: &[Vec<Trajectory>],
    init: Option<Models>,
    out: &Path,
) -> Result<()> {
    let mut manifest = RunManifest::start("train", argv, cfg.seed, cli.deterministic, snapshot(cfg));
    for label in ["init", "bc", "rollout", "update"] {
        manifest.sub_seeds.insert(label.into(), seed::derive(cfg.seed, label));
    }
    for p in a.datasets.iter().chain(&a.experts).chain(&a.init) {
        manifest.input(p)?;
    }
    if let Some(obj) = manifest.config.as_object_mut() {
        let names: Vec<&str> = datasets.iter().map(Dataset::name).collect();
        obj.insert("datasets".into(), serde_json::json!(names));
    }
    let schema = datasets
        .first()
        .ok_or_else(|| CliError::Usage("no datasets".into()))?
        .schema();
    let checkpoint = |models: &Models, opts: Option<&Optimizers>, interval: usize, interactions: usize| Checkpoint {
        format_version: CHECKPOINT_VERSION,
        schema: schema.clone(),
        config: cfg.clone(),
        seed: cfg.seed,
        interval,
        interactions,
        models: models.clone(),
        optimizers: opts.cloned(),
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let metrics_path = out.join("metrics.ndjson");
    let mut log = BufWriter::new(File::create(&metrics_path).map_err(|e| CliError::io(&metrics_path, e))?);
    let mut outputs: Vec<PathBuf> = vec!["metrics.ndjson".into()];
    let mut last_good: Option<Checkpoint> = None;
    let mut write_err: Option<CliError> = None;
    let result = train_gail(cfg, datasets, experts, init, &mut |m: &IntervalMetrics, models, opts| {
        let line = serde_json::to_string(m).expect("serializable metrics");
        if let Err(e) = writeln!(log, "{line}") {
            write_err = Some(CliError::io(&metrics_path, e));
            return Err(CoreError::InvalidInput("metrics log write failed".into()));
        }
        let ck = checkpoint(models, Some(opts), m.interval + 1, m.interactions);
        if a.checkpoint_every > 0 && (m.interval + 1).is_multiple_of(a.checkpoint_every) {
            let rel = PathBuf::from("checkpoints").join(format!("interval-{:05}.json", m.interval + 1));
            if let Err(e) = io::write_json(&out.join(&rel), &ck) {
                write_err = Some(e);
                return Err(CoreError::InvalidInput("checkpoint write failed".into()));
            }
            outputs.push(rel);
        }
        last_good = Some(ck);
        Ok(())
    });
    log.flush().map_err(|e| CliError::io(&metrics_path, e))?;
    drop(log);
    if let Some(e) = write_err {
        return Err(e);
    }
    let outcome = match result {
        Ok(o) => o,
        Err(CoreError::NonFinite(what)) => {
            if let Some(ck) = &last_good {
                io::write_json(&out.join("checkpoint.failed.json"), ck)?;
            }
            return Err(CliError::Numeric(format!(
                "non-finite value in {what}; last good state written to checkpoint.failed.json"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let last = outcome.metrics.last().map(|m| m.interval + 1).unwrap_or(0);
    let ck = checkpoint(&outcome.models, Some(&outcome.optimizers), last, outcome.interactions);
    io::write_json(&out.join("checkpoint.json"), &ck)?;
    outputs.push("checkpoint.json".into());
    if let Some(bc) = &outcome.bc {
        io::write_json(&out.join("bc.json"), bc)?;
        outputs.push("bc.json".into());
    }
    manifest.finish(out, &outputs)
}

pub fn cmd_generate(cli: &Cli, argv: &[String], file: &ConfigFile, a: &GenerateArgs) -> Result<()> {
    let ck = load_checkpoint(&a.checkpoint)?;
    let ds = io::read_dataset(&a.dataset, delimiter(a.delimiter)?)?;
    ck.check_dataset(&ds)?;
    let horizon = a.horizon.unwrap_or(file.eval.horizon.max(ck.config.horizon));
    let root = cli.seed.unwrap_or(ck.seed);
    let stream = seed::derive(root, "generate");
    let mut manifest = RunManifest::start(
        "generate",
        argv,
        root,
        cli.deterministic,
        serde_json::json!({"n": a.n, "mode": format!("{:?}", a.mode).to_lowercase(), "horizon": horizon}),
    );
    manifest.sub_seeds.insert("generate".into(), stream);
    manifest.input(&a.checkpoint)?;
    manifest.input(&a.dataset)?;
    let layout: &HeadLayout = &ck.models.policy.layout;
    let mut rng = seed::rng(stream);
    let mut sessions = Vec::with_capacity(a.n);
    for _ in 0..a.n {
        let t = eval::generate_session(&ck.models.policy, &ds, horizon, a.mode.into(), &mut rng)?;
        replay(&ds, &t, layout)?;
        sessions.push(t);
    }
    io::write_json(&cli.out.join("sessions.json"), &sessions)?;
    manifest.finish(&cli.out, &["sessions.json".into()])
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RulesetFile {
    Rules(Vec<CoherenceRule>),
    Full(CoherenceRuleset),
}

/// Per-step measure row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRow {
    pub step: usize,
    pub action: String,
    pub raw: MeasureScores,
    pub normalized: MeasureScores,
    pub highlighted: Vec<Measure>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionMeasures {
    pub session: usize,
    pub dominant: Option<Measure>,
    pub steps: Vec<MeasureRow>,
}

pub fn measure_table(s: &SessionMeasures) -> String {
    let width = s.steps.iter().map(|r| r.action.len()).chain([6]).max().unwrap_or(6);
    let mut out = format!("session {}", s.session);
    if let Some(m) = s.dominant {
        out += &format!(" (dominant: {})", m.as_str());
    }
    out.push('\n');
    out += &format!("{:>4}  {:<width$}", "step", "action");
    for m in Measure::ALL {
        out += &format!("  {:>12}", m.as_str());
    }
    out.push('\n');
    for r in &s.steps {
        out += &format!("{:>4}  {:<width$}", r.step, r.action);
        for m in Measure::ALL {
            let mark = if r.highlighted.contains(&m) { '*' } else { ' ' };
            out += &format!("  {:>5.2}/{:>4.2}{mark}", r.raw.get(m), r.normalized.get(m));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_measure(cli: &Cli, argv: &[String], a: &MeasureArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset, delimiter(a.delimiter)?)?;
    let sessions = io::read_trajectories(&a.session)?;
    let rules = match &a.ruleset {
        Some(path) => match io::read_json::<RulesetFile>(path)? {
            RulesetFile::Rules(r) => CoherenceRuleset::from_rules(r)?,
            RulesetFile::Full(r) => {
                r.validate()?;
                r
            }
        },
        None => CoherenceRuleset::default(),
    };
    let mcfg = MeasureConfig::for_dataset(&ds);
    let mut manifest = RunManifest::start(
        "measure",
        argv,
        cli.seed.unwrap_or(0),
        cli.deterministic,
        serde_json::json!({"threshold": a.threshold, "quantile": a.quantile, "measures": mcfg}),
    );
    manifest.input(&a.session)?;
    manifest.input(&a.dataset)?;
    if let Some(p) = &a.ruleset {
        manifest.input(p)?;
    }
    let picked: Vec<usize> = match a.index {
        Some(i) if i >= sessions.len() => {
            return Err(CliError::Usage(format!("session index {i} but the file has {}", sessions.len())))
        }
        Some(i) => vec![i],
        None => (0..sessions.len()).collect(),
    };
    let mut report = Vec::new();
    let mut text = String::new();
    for i in picked {
        let actions = sessions[i].actions();
        let raw = score_session(&ds, &actions, &rules, &mcfg)?;
        let normalized = normalize_session(&raw);
        let flags = flag_above(&normalized, a.threshold);
        let dominant = if normalized.is_empty() {
            None
        } else {
            Some(classify_session(&normalized, a.quantile, &Measure::ALL)?)
        };
        let steps = actions
            .iter()
            .zip(raw.iter().zip(&normalized))
            .zip(flags)
            .enumerate()
            .map(|(t, ((action, (r, n)), highlighted))| MeasureRow {
                step: t,
                action: action.to_string(),
                raw: *r,
                normalized: *n,
                highlighted,
            })
            .collect();
        let s = SessionMeasures {
            session: i,
            dominant,
            steps,
        };
        text += &measure_table(&s);
        text.push('\n');
        report.push(s);
    }
    io::write_json(&cli.out.join("measures.json"), &report)?;
    io::write_text(&cli.out.join("measures.txt"), &text)?;
    print!("{text}");
    manifest.finish(&cli.out, &["measures.json".into(), "measures.txt".into()])
}

pub fn cmd_eval(cli: &Cli, argv: &[String], file: &ConfigFile, a: &EvalArgs) -> Result<()> {
    paired("gold", a.datasets.len(), a.gold.len())?;
    let sources = [a.checkpoint.is_some(), !a.generated.is_empty(), a.self_eval];
    if sources.iter().filter(|&&x| x).count() != 1 {
        return Err(CliError::Usage(
            "give exactly one of --checkpoint, --generated or --self-eval".into(),
        ));
    }
    let mut cfg = file.eval;
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    if let Some(al) = a.alignment {
        cfg.alignment = match al {
            AlignmentArg::Optimal => Alignment::Optimal,
            AlignmentArg::Greedy => Alignment::Greedy,
        };
    }
    let delim = delimiter(a.delimiter)?;
    let datasets = load_datasets(&a.datasets, delim)?;
    let gold = load_sessions(&a.gold)?;
    let root = cli.seed.unwrap_or(0);
    let mut manifest = RunManifest::start(
        "eval",
        argv,
        root,
        cli.deterministic,
        serde_json::json!({"eval": cfg, "sessions": a.sessions, "mode": format!("{:?}", a.mode).to_lowercase()}),
    );
    for p in a.datasets.iter().chain(&a.gold).chain(&a.generated).chain(&a.checkpoint) {
        manifest.input(p)?;
    }
    let report: EvalReport = if let Some(path) = &a.checkpoint {
        let ck = load_checkpoint(path)?;
        for ds in &datasets {
            ck.check_dataset(ds)?;
        }
        manifest.sub_seeds.insert("eval".into(), root);
        eval::evaluate_model(&ck.models.policy, &datasets, &gold, a.sessions, a.mode.into(), &cfg, root)?
    } else if a.self_eval {
        eval::evaluate_sessions(&datasets, &gold, &gold, &cfg)?
    } else {
        paired("generated", a.datasets.len(), a.generated.len())?;
        let generated = load_sessions(&a.generated)?;
        eval::evaluate_sessions(&datasets, &generated, &gold, &cfg)?
    };
    io::write_json(&cli.out.join("report.json"), &report)?;
    let table = report.to_table();
    io::write_text(&cli.out.join("report.txt"), &table)?;
    print!("{table}");
    manifest.finish(&cli.out, &["report.json".into(), "report.txt".into()])
}
