//! Command-line front end: generate, train, policy, evaluate, sweep.
//!
//! Every subcommand reads an optional flat key-value config file
//! (see [`crate::config`]); flags override file values. Outputs are
//! deterministic given the config and seeds, and every output file carries
//! the effective config's fingerprint in a comment or metadata field.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::data::{self, Dataset, GeneratorConfig, Schema};
use crate::error::{Error, Result};
use crate::eval::{self, EvaluationReport};
use crate::learn::{self, LearnConfig, Mode};
use crate::policy;
use crate::scoring::tree_log_score;
use crate::tree::Tree;

#[derive(Parser)]
#[command(
    name = "liftree",
    version,
    about = "Uplift decision trees and profit-targeted mailing policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic mailing-experiment population with known ground truth
    Generate(GenerateArgs),
    /// Learn a tree from experiment data and save it as a JSON model
    Train(TrainArgs),
    /// Describe a model's mailing policy segment by segment
    Policy(PolicyArgs),
    /// Replay a model's policy against held-out experiment data
    Evaluate(EvaluateArgs),
    /// Evaluate models across a range of subscription revenues
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec (JSON)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output dataset CSV
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Output ground-truth sidecar CSV (default: `<out stem>_truth.csv`)
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
    /// Override the spec's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data CSV
    #[arg(long, value_name = "PATH")]
    train: PathBuf,
    /// Run config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Learner: normal | force | split_first
    #[arg(long)]
    mode: Option<Mode>,
    /// Structure-prior base in (0, 1]
    #[arg(long)]
    kappa: Option<f64>,
    /// Hold out 1 - fraction of the data before training
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Seed for the train/holdout split
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the held-out rows (requires --train-fraction)
    #[arg(long, value_name = "PATH")]
    holdout_out: Option<PathBuf>,
    /// Output model JSON
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct PolicyArgs {
    /// Model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Dataset CSV defining the schema the model was trained on
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Run config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Mailing cost
    #[arg(long)]
    c: Option<f64>,
    /// Solicited subscription revenue
    #[arg(long)]
    rs: Option<f64>,
    /// Unsolicited subscription revenue
    #[arg(long)]
    ru: Option<f64>,
    /// Output segment-report CSV
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model JSON
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Held-out test data CSV
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Run config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Mailing cost
    #[arg(long)]
    c: Option<f64>,
    /// Solicited subscription revenue
    #[arg(long)]
    rs: Option<f64>,
    /// Unsolicited subscription revenue
    #[arg(long)]
    ru: Option<f64>,
    /// Output report JSON
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Model JSON, repeatable; `name=path` or bare path (name = file stem)
    #[arg(long, value_name = "NAME=PATH")]
    model: Vec<String>,
    /// Held-out test data CSV
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Run config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Mailing cost
    #[arg(long)]
    c: Option<f64>,
    /// Revenue range lo:hi[:step], endpoints inclusive
    #[arg(long)]
    r: Option<String>,
    /// Output sweep CSV
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

impl clap::ValueEnum for Mode {
    fn value_variants<'a>() -> &'a [Self] {
        &[Mode::Normal, Mode::Force, Mode::SplitFirst]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.label()))
    }
}

/// Entry point for the command-line interface. Returns the process exit
/// code: 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run(argv: impl IntoIterator<Item = OsString>) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Policy(args) => cmd_policy(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let text = read_file(&args.config)?;
    let mut spec: GeneratorConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let fingerprint = generator_fingerprint(&spec);
    let (dataset, truths) = data::generate(&spec)?;

    let mut out = Vec::new();
    dataset
        .write_csv(&mut out, Some(&fingerprint))
        .expect("in-memory write");
    write_file(&args.out, &out)?;
    println!("records = {}", dataset.len());
    println!("dataset = {}", args.out.display());

    let truth_path = args.truth.clone().unwrap_or_else(|| {
        let stem = args
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into());
        args.out.with_file_name(format!("{stem}_truth.csv"))
    });
    let mut out = Vec::new();
    data::write_ground_truth(&truths, &mut out, Some(&fingerprint)).expect("in-memory write");
    write_file(&truth_path, &out)?;
    println!("truth = {}", truth_path.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut config = load_run_config(args.config.as_deref())?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(kappa) = args.kappa {
        config.set("kappa", &kappa.to_string())?;
    }
    if let Some(f) = args.train_fraction {
        config.train_fraction = Some(f);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let fingerprint = config.fingerprint();

    let full = load_dataset(&args.train, &config)?;
    let (train, holdout) = match config.train_fraction {
        Some(fraction) => {
            let (train, test) = full.split_train_test(fraction, config.seed)?;
            (train, Some(test))
        }
        None => (full, None),
    };
    if let (Some(holdout), Some(path)) = (&holdout, &args.holdout_out) {
        let mut out = Vec::new();
        holdout
            .write_csv(&mut out, Some(&fingerprint))
            .expect("in-memory write");
        write_file(path, &out)?;
        println!("holdout = {}", path.display());
        println!("holdout_records = {}", holdout.len());
    }

    let learn_config = LearnConfig::new(config.mode, config.score_params());
    let tree = learn::grow(&train, &learn_config)?;
    write_file(&args.out, tree.to_json(Some(&fingerprint)).as_bytes())?;

    println!("mode = {}", config.mode.label());
    println!("training_records = {}", train.len());
    println!("leaves = {}", tree.leaf_count());
    println!("score = {}", tree_log_score(&tree, &config.score_params()));
    println!("model = {}", args.out.display());
    Ok(())
}

fn cmd_policy(args: PolicyArgs) -> Result<()> {
    let mut config = load_run_config(args.config.as_deref())?;
    apply_cost_overrides(&mut config, args.c, args.rs, args.ru);
    let fingerprint = config.fingerprint();

    let dataset = load_dataset(&args.data, &config)?;
    let tree = load_model(&args.model, Arc::clone(dataset.schema()))?;
    config.cost_benefit.validate()?;
    let rows = policy::segment_report_with(&tree, &config.cost_benefit, config.estimator)?;

    let mut out = Vec::new();
    policy::write_segment_report(&rows, &mut out, Some(&fingerprint)).expect("in-memory write");
    write_file(&args.out, &out)?;
    println!("segments = {}", rows.len());
    println!("report = {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config_fingerprint: &'a str,
    #[serde(flatten)]
    report: &'a EvaluationReport,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut config = load_run_config(args.config.as_deref())?;
    apply_cost_overrides(&mut config, args.c, args.rs, args.ru);
    let fingerprint = config.fingerprint();

    let test = load_dataset(&args.data, &config)?;
    let tree = load_model(&args.model, Arc::clone(test.schema()))?;
    config.cost_benefit.validate()?;
    let report = eval::evaluate_policy_with(&tree, &test, &config.cost_benefit, config.estimator)?;

    println!("matched_mail = {}", report.matched_mail);
    println!("matched_nomail = {}", report.matched_nomail);
    println!("skipped = {}", report.skipped);
    println!("total_revenue = {}", report.total_revenue);
    println!("per_person_revenue = {}", report.per_person_revenue);
    println!("baseline_per_person = {}", report.baseline_per_person);
    println!("improvement = {}", report.improvement);

    if let Some(path) = &args.out {
        let file = ReportFile {
            config_fingerprint: &fingerprint,
            report: &report,
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        write_file(path, text.as_bytes())?;
        println!("report = {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut config = load_run_config(args.config.as_deref())?;
    if let Some(c) = args.c {
        config.cost_benefit.mail_cost = c;
    }
    if let Some(r) = &args.r {
        config.sweep_r = r.clone();
    }
    let model_specs: Vec<String> = if args.model.is_empty() {
        config.models.clone()
    } else {
        args.model.clone()
    };
    if model_specs.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one --model or a `models` config entry".into(),
        ));
    }
    config.models = model_specs.clone();
    let fingerprint = config.fingerprint();

    let test = load_dataset(&args.data, &config)?;
    let mut named: Vec<(String, Tree)> = Vec::with_capacity(model_specs.len());
    for spec in &model_specs {
        let (name, path) = parse_model_spec(spec);
        let tree = load_model(&path, Arc::clone(test.schema()))?;
        named.push((name, tree));
    }
    let trees: Vec<(String, &Tree)> = named.iter().map(|(n, t)| (n.clone(), t)).collect();
    let r_values = eval::parse_r_range(&config.sweep_r)?;
    let result = eval::sweep(&trees, &test, config.cost_benefit.mail_cost, &r_values)?;

    let mut out = Vec::new();
    eval::write_sweep(&result, &mut out, Some(&fingerprint)).expect("in-memory write");
    write_file(&args.out, &out)?;
    println!("rows = {}", result.rows.len());
    println!("sweep = {}", args.out.display());
    Ok(())
}

fn parse_model_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) => (name.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".to_string());
            (name, path)
        }
    }
}

fn apply_cost_overrides(config: &mut RunConfig, c: Option<f64>, rs: Option<f64>, ru: Option<f64>) {
    if let Some(c) = c {
        config.cost_benefit.mail_cost = c;
    }
    if let Some(rs) = rs {
        config.cost_benefit.solicited_revenue = rs;
    }
    if let Some(ru) = ru {
        config.cost_benefit.unsolicited_revenue = ru;
    }
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file_text(&read_file(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_dataset(path: &Path, config: &RunConfig) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    data::load_csv(BufReader::new(file), &config.schema)
}

fn load_model(path: &Path, schema: Arc<Schema>) -> Result<Tree> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Tree::from_json(&bytes, schema)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Stable hash of a generator spec, stamped into generated files.
fn generator_fingerprint(spec: &GeneratorConfig) -> String {
    let canonical = serde_json::to_string(spec).expect("generator config serialization");
    let mut hasher = crate::data::Fnv1a::new();
    hasher.write(canonical.as_bytes());
    format!("{:016x}", hasher.finish())
}
