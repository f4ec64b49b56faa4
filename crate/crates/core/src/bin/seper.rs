use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use seper::belief::Variant;
use seper::gateway::{Gateway, ResponseCache};
use seper::harness::{
    emit_report, load_report, render_report, run_benchmark, summarize, EvalRecord, Overrides,
    ReportFormat, RunConfig,
};
use seper::semantics::WeightMode;

#[derive(Parser)]
#[command(
    name = "seper",
    version,
    about = "Measure retrieval utility as a shift in model belief"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write a report.
    Run(RunArgs),
    /// Score a single question with and without context.
    Score(ScoreArgs),
    /// Recompute correlations and dispersion for an existing JSON report.
    Correlate(CorrelateArgs),
    /// Inspect or clear the generation cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    weight_mode: Option<WeightMode>,
    /// May be repeated.
    #[arg(long = "variant")]
    variants: Vec<Variant>,
    #[arg(long)]
    skip_known: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Backends, sampling and scoring settings are taken from this config;
    /// its dataset is ignored.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    question: String,
    #[arg(long = "answer", required = true)]
    answers: Vec<String>,
    #[arg(long = "context")]
    contexts: Vec<String>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    skip_known: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cached keys.
    List(CacheArgs),
    /// Delete every cache entry.
    Purge(CacheArgs),
}

#[derive(Args)]
struct CacheArgs {
    #[arg(long, required_unless_present = "config")]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type BoxResult = Result<(), Box<dyn std::error::Error>>;

fn dispatch(command: Command) -> BoxResult {
    match command {
        Command::Run(args) => {
            let mut config = RunConfig::load(&args.config)?;
            Overrides {
                dataset: args.dataset,
                tau: args.tau,
                n_samples: args.n_samples,
                weight_mode: args.weight_mode,
                variants: args.variants,
                skip_known: args.skip_known,
                repetitions: args.repetitions,
                seed: args.seed,
                out: args.out,
                format: args.format,
                cache_dir: args.cache_dir,
                parallelism: args.parallelism,
            }
            .apply(&mut config);
            let report = run_benchmark(&config)?;
            for f in &report.failures {
                eprintln!(
                    "record {} (repetition {}) failed: {}",
                    f.record_id, f.repetition, f.error
                );
            }
            match &config.out {
                Some(path) => emit_report(&report, config.format, path)?,
                None => print!("{}", render_report(&report, config.format)?),
            }
        }
        Command::Score(args) => {
            let config = RunConfig::load(&args.config)?;
            config.validate()?;
            let gateway = Gateway::from_configs(
                &config.generation,
                &config.entailment,
                config.cache_dir.clone(),
            )?;
            let record = EvalRecord::new("cli", args.question, args.answers, args.contexts);
            let pair = seper::evaluate_pair(&gateway, &record, &config.sampling, &config.scoring)?;
            let variant = |v: Variant| {
                pair.utility(v).map(
                    |u| json!({"before": u.before.seper, "after": u.after.seper, "delta": u.delta}),
                )
            };
            let out = json!({
                "hard": variant(Variant::Hard),
                "soft": variant(Variant::Soft),
                "degraded": pair.degraded(),
                "no_context_responses": pair.no_context.responses.iter().map(|r| &r.text).collect::<Vec<_>>(),
                "with_context_responses": pair.with_context.responses.iter().map(|r| &r.text).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Correlate(args) => {
            let mut report = load_report(&args.report)?;
            let skip = args.skip_known.or(report.settings.skip_known);
            report.settings.skip_known = skip;
            report.summary = summarize(&mut report.rows, report.failures.len(), skip);
            match &args.out {
                Some(path) => emit_report(&report, args.format, path)?,
                None => print!("{}", render_report(&report, args.format)?),
            }
        }
        Command::Cache { action } => {
            let (args, purge) = match action {
                CacheAction::List(a) => (a, false),
                CacheAction::Purge(a) => (a, true),
            };
            let dir = match (args.cache_dir, args.config) {
                (Some(d), _) => d,
                (None, Some(c)) => RunConfig::load(&c)?
                    .cache_dir
                    .ok_or("config does not set cache_dir")?,
                (None, None) => return Err("either --cache-dir or --config is required".into()),
            };
            let cache = ResponseCache::open(dir)?;
            if purge {
                println!("removed {} entries", cache.purge()?);
            } else {
                for key in cache.keys()? {
                    println!("{key}");
                }
            }
        }
    }
    Ok(())
}
