use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use emotrait::config::RunConfig;
use emotrait::eval::EvalMode;
use emotrait::pipeline::{Pipeline, Stage, ERROR_REPORT};

#[derive(Parser)]
#[command(name = "emotrait", version, about = "Trait inference from facial-emotion logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to anything unset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log warnings and stage progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    LeakFree,
    PaperReplication,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse and validate frame logs and the trait table.
    Ingest,
    /// Build the participant × 105 feature matrix.
    Features,
    /// Feature × trait Pearson correlations.
    Correlate,
    /// Forward-selected OLS model per trait.
    Regress,
    /// Fit one boosted classifier per trait on all rows.
    Train,
    /// Cross-validation and holdout accuracy per trait.
    Evaluate,
    /// SHAP attributions for the trained classifiers.
    Explain,
    /// Generate a synthetic cohort with planted links.
    Synth,
    /// Alluvial link data and, with ground truth, the recovery score.
    Report,
    /// ingest through report.
    All,
    /// Print the effective configuration as TOML.
    Config,
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }
    fn log(&self, record: &log::Record) {
        eprintln!("[{}] {}", record.level(), record.args());
    }
    fn flush(&self) {}
}

fn stage(c: Command) -> Option<Stage> {
    Some(match c {
        Command::Ingest => Stage::Ingest,
        Command::Features => Stage::Features,
        Command::Correlate => Stage::Correlate,
        Command::Regress => Stage::Regress,
        Command::Train => Stage::Train,
        Command::Evaluate => Stage::Evaluate,
        Command::Explain => Stage::Explain,
        Command::Synth => Stage::Synth,
        Command::Report => Stage::Report,
        Command::All => Stage::All,
        Command::Config => return None,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.verbose {
        static LOGGER: StderrLogger = StderrLogger;
        let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Info));
    }
    let mut config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(m) = cli.mode {
        config.eval.mode = match m {
            Mode::LeakFree => EvalMode::LeakFree,
            Mode::PaperReplication => EvalMode::PaperReplication,
        };
    }
    if let Some(o) = cli.out {
        config.paths.out = o;
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }

    let Some(target) = stage(cli.command) else {
        return match config.to_toml() {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    };
    let mut pipeline = match Pipeline::new(config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stages = if target == Stage::All {
        Stage::CHAIN.to_vec()
    } else {
        vec![target]
    };
    for s in stages {
        println!("{} ...", s.name());
        if let Err(e) = pipeline.run(s) {
            eprintln!("error in {}: {e}", s.name());
            eprintln!("report: {}", pipeline.out_dir().join(ERROR_REPORT).display());
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    println!(
        "done: {} artifacts in {} (config {})",
        pipeline.manifest().artifacts.len(),
        pipeline.out_dir().display(),
        &pipeline.manifest().config_hash[..12]
    );
    ExitCode::SUCCESS
}
