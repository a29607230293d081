use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imrl_core::harness::{
    eval_checkpoint, final_window_ctr, plot_files, resume_train, run_ablation, run_train, run_validate, seed_offset_from_env,
    write_report_csv, ExperimentConfig, ValidateOptions, Variant,
};
use imrl_core::Result;

#[derive(Parser)]
#[command(name = "imrl", version, about = "Empowerment-driven SAC with counterfactual replay augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant over every configured seed.
    Train(TrainArgs),
    /// Train IMRL, IMRL-E, IMRL-A and IMRL-KL and compare final CTR.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gradient checks, augmentation validity, Blahut-Arimoto cases and the
    /// hub-MDP estimator correlation. Exits nonzero on any failure.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the estimator-correlation training runs.
        #[arg(long)]
        quick: bool,
        /// Also write the checks as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render CTR learning curves from metrics CSVs.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the deterministic policy of a run checkpoint.
    Eval {
        /// Checkpoint directory (or its `run.json`).
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, conflicts_with = "kl_intrinsic")]
    no_empowerment: bool,
    #[arg(long)]
    kl_intrinsic: bool,
    #[arg(long)]
    no_augmentation: bool,
    #[arg(long)]
    out: PathBuf,
    /// Continue from a run checkpoint instead of starting fresh.
    #[arg(long)]
    resume: Option<PathBuf>,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::from_json_file(path)?.with_seed_offset(seed_offset_from_env()?))
}

fn train(a: TrainArgs) -> Result<()> {
    if let Some(ckpt) = &a.resume {
        let rows = resume_train(ckpt, &a.out)?;
        println!("resumed run finished with {} evaluations", rows.len());
        return Ok(());
    }
    let mut cfg = load_config(&a.config)?;
    cfg.ablation.no_empowerment |= a.no_empowerment;
    cfg.ablation.kl_intrinsic |= a.kl_intrinsic;
    cfg.ablation.no_augmentation |= a.no_augmentation;
    let outcome = run_train(&cfg, &a.out)?;
    for (seed, rows) in &outcome.per_seed {
        match final_window_ctr(rows) {
            Some(c) => println!("{} seed {seed}: final CTR {c:.4} ({} evaluations)", outcome.variant.label(), rows.len()),
            None => println!("{} seed {seed}: no evaluations", outcome.variant.label()),
        }
    }
    Ok(())
}

fn ablate(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let outcome = run_ablation(&cfg, out)?;
    for v in Variant::ALL {
        if let Some(s) = outcome.summary(v) {
            println!(
                "{:8} median final CTR {:.4}  median episodes to 90% {:.0}",
                v.label(),
                s.median_final_ctr,
                s.median_episodes_to_90
            );
        }
    }
    Ok(())
}

fn validate(seed: u64, quick: bool, report_path: Option<&Path>) -> Result<bool> {
    let mut opts = ValidateOptions {
        seed: seed.wrapping_add(seed_offset_from_env()?),
        ..Default::default()
    };
    if quick {
        opts.estimator_seeds = 0;
    }
    let report = run_validate(&opts)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(p) = report_path {
        write_report_csv(p, &report)?;
    }
    Ok(report.all_passed())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(a) => train(a)?,
        Command::Ablate { config, out } => ablate(&config, &out)?,
        Command::Validate { seed, quick, report } => return validate(seed, quick, report.as_deref()),
        Command::Plot { files, out } => {
            let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            let series = plot_files(&paths, &out)?;
            println!("wrote {} series to {}", series.len(), out.display());
        }
        Command::Eval { checkpoint, episodes } => {
            let dir = if checkpoint.is_file() {
                checkpoint.parent().map(Path::to_path_buf).unwrap_or_default()
            } else {
                checkpoint
            };
            let s = eval_checkpoint(&dir, episodes)?;
            println!(
                "episodes {} steps {} clicks {} CTR {:.4} mean return {:.4}",
                s.episodes, s.steps, s.clicks, s.ctr, s.mean_return
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(2)
        }
    }
}
