use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ictrait::pipeline::{self, Pipeline, PipelineConfig, Stage, StageOutcome};
use ictrait::synth::SyntheticCohortSpec;
use ictrait::{Error, Result};

#[derive(Parser)]
#[command(name = "ictrait", version, about = "Predict trait scores from individual text corpora")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "ictrait.toml")]
    config: PathBuf,
    /// Override the master seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the directory holding stage outputs.
    #[arg(long, global = true)]
    stage_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate activity exports.
    Ingest,
    /// Train one skip-gram model per accepted corpus.
    Embed,
    /// Build the participant-by-label similarity matrix.
    Featurize,
    /// Cluster participants and draw the train/validation/test split.
    Split,
    /// Rank labels by random-forest importance.
    Rank,
    /// Cross-validate every grid cell.
    Grid,
    /// Pick the best and second-best architecture.
    Select,
    /// Score the selected architectures on the test sample.
    Evaluate,
    /// Train on growing prefixes and fit learning curves.
    Learncurve,
    /// Correlation table, reliability and model inspection.
    Report,
    /// Every stage in order.
    RunAll {
        /// Reuse cached stages according to the configured policy.
        #[arg(long)]
        resume: bool,
    },
    /// Write a synthetic cohort and a configuration for it.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    participants: usize,
    /// Correlation between the latent text signal and the measured score.
    #[arg(long, default_value_t = 0.8)]
    signal: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 4000)]
    tokens: usize,
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&g.config)?;
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(d) = &g.stage_dir {
        cfg.paths.stage_dir = std::path::absolute(d)
            .map_err(|e| Error::Config(format!("--stage-dir {}: {e}", d.display())))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Synth(a) => {
            let spec = SyntheticCohortSpec {
                n_participants: a.participants,
                signal: a.signal,
                noise_sd: a.noise_sd,
                tokens_per_participant: a.tokens,
                seed: cli.global.seed.unwrap_or(1),
                ..Default::default()
            };
            let (_, path) = pipeline::write_synthetic_project(&spec, &a.out)?;
            println!("wrote {}", path.display());
            return Ok(());
        }
        Command::RunAll { .. } => None,
        Command::Ingest => Some(Stage::Ingest),
        Command::Embed => Some(Stage::Embed),
        Command::Featurize => Some(Stage::Featurize),
        Command::Split => Some(Stage::Split),
        Command::Rank => Some(Stage::Rank),
        Command::Grid => Some(Stage::Grid),
        Command::Select => Some(Stage::Select),
        Command::Evaluate => Some(Stage::Evaluate),
        Command::Learncurve => Some(Stage::LearnCurve),
        Command::Report => Some(Stage::Report),
    };
    let cfg = load_config(&cli.global)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let policy = cfg.cache.policy;
    let p = Pipeline::new(cfg);
    let outcomes = pool.install(|| match (stage, &cli.command) {
        (Some(s), _) => Ok(vec![(s, p.run_stage(s, policy)?)]),
        (None, Command::RunAll { resume }) => p.run_all(*resume),
        _ => unreachable!(),
    })?;
    for (s, o) in outcomes {
        let what = match o {
            StageOutcome::Ran => "done",
            StageOutcome::Cached => "cached",
        };
        println!("{s}: {what}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.family().exit_code() as u8)
        }
    }
}
