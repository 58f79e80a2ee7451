use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use conceptsim::corpus::SyntheticParams;
use conceptsim_cli::{synthesize, write_demo, DemoSpec, Experiment, ExperimentConfig, StageReport, STAGES};

#[derive(Parser)]
#[command(name = "conceptsim", version, about = "Evaluate concept-based explanations by simulatability")]
struct Cli {
    /// Experiment configuration (TOML)
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Comma-separated stages `run` is limited to
    #[arg(long, global = true, value_delimiter = ',')]
    only: Vec<String>,
    /// Worker threads; overrides the config
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Report what would be computed without writing anything
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one planted synthetic bundle and its label bank
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        p: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 6)]
        k_true: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Signed embeddings instead of nonnegative ones
        #[arg(long)]
        signed: bool,
    },
    /// Write synthetic bundles for 3 datasets × 2 heads and a config over them
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit concept spaces
    Extract,
    /// Describe concepts with words or labels
    Interpret,
    /// Assemble simulatability prompts
    Prompt,
    /// Query simulators
    Simulate,
    /// Compute faithfulness and complexity metrics
    Metrics,
    /// Choose k on validation seeds and rank methods on evaluation seeds
    Rank,
    /// Write ranking tables, matrices, correlations and a summary
    Report,
    /// Run every stage in order
    Run,
}

fn run_stage(exp: &Experiment, stage: &str) -> Result<StageReport> {
    match stage {
        "extract" => exp.extract(),
        "interpret" => exp.interpret(),
        "prompt" => exp.prompt(),
        "simulate" => exp.simulate(),
        "metrics" => exp.metrics(),
        "rank" => exp.rank(),
        "report" => exp.report(),
        other => bail!("unknown stage `{other}`"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    let stages: Vec<&str> = match &cli.command {
        Command::Synth {
            out,
            n,
            p,
            classes,
            k_true,
            seed,
            signed,
        } => {
            synthesize(&SyntheticParams::new(*n, *p, *classes, *k_true, *seed, !signed), out)?;
            println!("wrote {}", out.display());
            return Ok(());
        }
        Command::Demo { out } => {
            let path = write_demo(out, &DemoSpec::default())?;
            println!("wrote {}", path.display());
            return Ok(());
        }
        Command::Extract => vec!["extract"],
        Command::Interpret => vec!["interpret"],
        Command::Prompt => vec!["prompt"],
        Command::Simulate => vec!["simulate"],
        Command::Metrics => vec!["metrics"],
        Command::Rank => vec!["rank"],
        Command::Report => vec!["report"],
        Command::Run => STAGES.to_vec(),
    };
    for s in &cli.only {
        if !STAGES.contains(&s.as_str()) {
            bail!("--only: unknown stage `{s}` (stages: {})", STAGES.join(", "));
        }
    }
    let stages: Vec<&str> = stages
        .into_iter()
        .filter(|s| cli.only.is_empty() || cli.only.iter().any(|o| o == s))
        .collect();

    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(p) = cli.parallelism {
        config.parallelism = p;
    }
    let exp = Experiment::new(config)?;
    if cli.dry_run {
        println!("config {}", exp.config_hash);
        for (stage, total, stale) in exp.dry_run()? {
            if stages.contains(&stage.as_str()) {
                println!("{stage}: {stale} of {total} to compute");
            }
        }
        return Ok(());
    }
    let mut failed = false;
    for stage in stages {
        let report = run_stage(&exp, stage)?;
        println!("{report}");
        failed |= !report.failed.is_empty();
    }
    if failed {
        bail!("some artifacts failed; see the messages above");
    }
    Ok(())
}
