//! Command-line front end. [`dispatch`] runs one command and returns its exit
//! code and captured output, so the binary and the tests share one path.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 training failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use refprop::evaluation::{render_summary, render_table};
use refprop::maxent::{self, MaxEntError, Rebalance};
use refprop::pipeline::{self, Decider, PipelineError};
use refprop::{Corpus, PerCategory, RuleSet, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Parser)]
#[command(
    name = "refprop",
    version,
    about = "Classify noun phrases as indefinite, definite or generic",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a maximum-entropy model on a gold-labelled corpus
    Train(TrainArgs),
    /// Annotate a corpus with predicted categories
    Classify(ClassifyArgs),
    /// Score a prediction file against a gold file
    Evaluate(EvaluateArgs),
    /// Print the per-feature conditional distributions of a model
    Inspect(InspectArgs),
    /// Train both models and report all three deciders on a test corpus
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RebalanceArg {
    None,
    Auto,
    Factors([u32; 3]),
}

fn parse_rebalance(s: &str) -> Result<RebalanceArg, String> {
    match s {
        "none" => return Ok(RebalanceArg::None),
        "auto" => return Ok(RebalanceArg::Auto),
        _ => {}
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected `auto`, `none` or three factors like `4,2,9`".into());
    }
    let mut factors = [0u32; 3];
    for (slot, p) in factors.iter_mut().zip(parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|_| format!("`{p}` is not a positive integer"))?;
        if *slot == 0 {
            return Err("factors must be at least 1".into());
        }
    }
    Ok(RebalanceArg::Factors(factors))
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a finite non-negative number")),
    }
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Class rebalancing: `none`, `auto`, or explicit factors `I,I,I`
    #[arg(long, value_parser = parse_rebalance, default_value = "none")]
    rebalance: RebalanceArg,
    /// Maximum number of scaling iterations
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Stop once every expected count is this close to its target
    #[arg(long, value_parser = parse_nonnegative, default_value = "1e-4")]
    tol: f64,
    /// Pseudo-count added to every feature/category cell
    #[arg(long, value_parser = parse_nonnegative, default_value = "0.01")]
    smoothing: f64,
}

impl ConfigArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            max_iterations: self.max_iters,
            constraint_tolerance: self.tol,
            smoothing: self.smoothing,
            rebalance: match self.rebalance {
                RebalanceArg::None => Rebalance::None,
                RebalanceArg::Auto => Rebalance::Auto,
                RebalanceArg::Factors(f) => Rebalance::Factors(PerCategory(f)),
            },
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Gold-labelled corpus file
    #[arg(long)]
    corpus: PathBuf,
    /// Rule file (defaults to the built-in rules)
    #[arg(long)]
    rules: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Where to write the model
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeciderArg {
    Manual,
    Model,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Corpus file to annotate
    #[arg(long)]
    corpus: PathBuf,
    /// Rule file (defaults to the built-in rules)
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Conflict resolver
    #[arg(long, value_enum, default_value_t = DeciderArg::Manual)]
    decider: DeciderArg,
    /// Model file, required with `--decider model`
    #[arg(long, required_if_eq("decider", "model"))]
    model: Option<PathBuf>,
    /// Add an `article=` suggestion to every record
    #[arg(long)]
    suggest_articles: bool,
    /// Output file (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// File carrying the gold labels
    #[arg(long)]
    gold: PathBuf,
    /// Annotated file carrying the predictions
    #[arg(long)]
    pred: PathBuf,
    /// Also write a machine-readable summary to this file
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Model file
    #[arg(long)]
    model: PathBuf,
    /// Show only this feature
    #[arg(long)]
    feature: Option<String>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Gold-labelled training corpus
    #[arg(long)]
    train: PathBuf,
    /// Gold-labelled test corpus
    #[arg(long)]
    test: PathBuf,
    /// Rule file (defaults to the built-in rules)
    #[arg(long)]
    rules: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

fn training_failure(e: &MaxEntError) -> bool {
    matches!(
        e,
        MaxEntError::NonFinite { .. }
            | MaxEntError::NoEvents
            | MaxEntError::MissingCategory(_)
            | MaxEntError::BadFactor(_)
    )
}

impl From<MaxEntError> for Failure {
    fn from(e: MaxEntError) -> Self {
        let code = if training_failure(&e) { EXIT_TRAINING } else { EXIT_DATA };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::MaxEnt(m) => m.into(),
            other => Failure::data(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Default)]
struct Output {
    stdout: String,
    stderr: String,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn load_corpus(path: &Path, require_gold: bool) -> Result<Corpus, Failure> {
    let corpus = refprop::parse_corpus(&read(path)?)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let diagnostics = refprop::validate(&corpus, require_gold);
    if let Some(first) = diagnostics.first() {
        return Err(Failure::data(format!(
            "{}: {} problem(s), first: {first}",
            path.display(),
            diagnostics.len()
        )));
    }
    Ok(corpus)
}

fn load_rules(path: Option<&Path>) -> Result<RuleSet, Failure> {
    match path {
        None => Ok(RuleSet::default_rules()),
        Some(p) => refprop::load_rules(&read(p)?)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display()))),
    }
}

fn load_model(path: &Path) -> Result<refprop::MaxEntModel, Failure> {
    maxent::load_model(&read(path)?).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })
}

fn fmt_factors(f: PerCategory<u32>) -> String {
    format!("{},{},{}", f.0[0], f.0[1], f.0[2])
}

fn train(args: &TrainArgs, out: &mut Output) -> CmdResult {
    let corpus = load_corpus(&args.corpus, true)?;
    let rules = load_rules(args.rules.as_deref())?;
    let (events, skipped) = maxent::compile_events(&corpus, &rules)?;
    let model = maxent::train_for_rules(&events, &rules, &args.config.config())?;
    write(&args.out, &maxent::save_model(&model))?;

    let meta = model.train_meta().expect("trained models carry metadata");
    let _ = writeln!(out.stderr, "events: {} ({} skipped)", events.len(), skipped.len());
    if let Some(f) = meta.rebalance_factors {
        let _ = writeln!(out.stderr, "factors: {}", fmt_factors(f));
    }
    let _ = writeln!(
        out.stderr,
        "iterations: {}, constraint gap: {:.3e}",
        meta.iterations_run, meta.final_constraint_gap
    );
    let _ = writeln!(out.stdout, "wrote {}", args.out.display());
    Ok(())
}

fn classify(args: &ClassifyArgs, out: &mut Output) -> CmdResult {
    let corpus = load_corpus(&args.corpus, false)?;
    let rules = load_rules(args.rules.as_deref())?;
    let model = match args.decider {
        DeciderArg::Manual => None,
        DeciderArg::Model => Some(load_model(
            args.model.as_deref().expect("clap enforces --model"),
        )?),
    };
    let decider = match &model {
        None => Decider::Manual,
        Some(m) => Decider::Model(m),
    };
    let docs = pipeline::annotate_corpus(&corpus, &rules, decider)?;
    let text = pipeline::write_annotated(&docs, args.suggest_articles);
    match &args.out {
        Some(path) => write(path, &text)?,
        None => out.stdout.push_str(&text),
    }
    let defaulted = docs
        .iter()
        .flat_map(|d| &d.entries)
        .filter(|e| e.defaulted)
        .count();
    let _ = writeln!(
        out.stderr,
        "classified {} noun phrases ({defaulted} defaulted)",
        corpus.np_count()
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs, out: &mut Output) -> CmdResult {
    let gold = read(&args.gold)?;
    let pred = read(&args.pred)?;
    let report = pipeline::compare_files("Evaluation", &gold, &pred)?;
    out.stdout.push_str(&render_table(&report));
    if let Some(path) = &args.report {
        write(path, &render_summary(&report))?;
    }
    Ok(())
}

fn inspect(args: &InspectArgs, out: &mut Output) -> CmdResult {
    let model = load_model(&args.model)?;
    let features: Vec<&str> = match &args.feature {
        Some(f) => vec![f.as_str()],
        None => model.feature_index().iter().map(String::as_str).collect(),
    };
    let rows = features
        .into_iter()
        .map(|f| maxent::per_feature_conditional(&model, f).map(|p| (f, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let _ = writeln!(out.stdout, "feature\tindef\tdef\tgen");
    for (f, p) in rows {
        let _ = writeln!(out.stdout, "{f}\t{:.4}\t{:.4}\t{:.4}", p.0[0], p.0[1], p.0[2]);
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs, out: &mut Output) -> CmdResult {
    let train = load_corpus(&args.train, true)?;
    let test = load_corpus(&args.test, true)?;
    let rules = load_rules(args.rules.as_deref())?;
    let result = pipeline::run_experiment(&train, &test, &rules, &args.config.config())?;
    let _ = writeln!(out.stderr, "factors: {}", fmt_factors(result.rebalance_factors));
    if !result.diagnostics.is_empty() {
        let _ = writeln!(
            out.stderr,
            "{} training noun phrases skipped",
            result.diagnostics.len()
        );
    }
    for (i, report) in [&result.manual, &result.ml1, &result.ml2].into_iter().enumerate() {
        if i > 0 {
            out.stdout.push('\n');
        }
        out.stdout.push_str(&render_table(report));
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandOutcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => CommandOutcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let mut out = Output::default();
    let result = match &cli.command {
        Command::Train(a) => train(a, &mut out),
        Command::Classify(a) => classify(a, &mut out),
        Command::Evaluate(a) => evaluate(a, &mut out),
        Command::Inspect(a) => inspect(a, &mut out),
        Command::Experiment(a) => experiment(a, &mut out),
    };
    let code = match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(out.stderr, "error: {}", f.message);
            f.code
        }
    };
    CommandOutcome {
        code,
        stdout: out.stdout,
        stderr: out.stderr,
    }
}
