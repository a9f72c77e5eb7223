use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use selftouch_core::evaluation::Resolution;
use selftouch_core::presets::BodyPart;
use selftouch_core::runner::{
    self, default_matrix, load_config_dir, output_dir_for, write_comparison_csv, write_results,
    DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV,
};
use selftouch_core::{plot, Error, ExperimentConfig, ExperimentResult};

#[derive(Parser)]
#[command(name = "selftouch", version, about = "Self-touch exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    /// Overrides the base seed of every experiment.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Output root directory.
    #[arg(long, env = OUTPUT_ROOT_ENV, default_value = DEFAULT_OUTPUT_ROOT)]
    out: PathBuf,
    /// Number of trials run concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every config in a directory and write a comparison table.
    Matrix {
        dir: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Regenerate the SVG figures of a result directory.
    Plot { dir: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Write the default strategy matrix configs into a directory.
    Init {
        dir: PathBuf,
        #[arg(long, default_value = "torso")]
        body: BodyPart,
        #[arg(long, default_value = "low")]
        resolution: Resolution,
    },
}

fn apply(config: &mut ExperimentConfig, flags: &RunFlags) {
    if let Some(seed) = flags.seed {
        config.base_seed = seed;
    }
    if let Some(trials) = flags.trials {
        config.trials = trials;
    }
}

fn summarize(result: &ExperimentResult, dir: &Path) {
    let completed = result.completed().count();
    let last = runner::mean_curve(result).last().copied();
    match last {
        Some((it, mre, touches)) => println!(
            "{}: {completed}/{} trials, iteration {it}: mean MRE {}, mean touches {touches:.1} -> {}",
            result.config.label(),
            result.config.trials,
            mre.map(|m| format!("{m:.5}")).unwrap_or_else(|| "n/a".into()),
            dir.display()
        ),
        None => println!("{}: no checkpoints -> {}", result.config.label(), dir.display()),
    }
    for (i, t) in result.trials.iter().enumerate() {
        if let Err(e) = t {
            eprintln!("  trial {i} failed: {e}");
        }
    }
}

fn run_one(mut config: ExperimentConfig, flags: &RunFlags, default_dir: PathBuf) -> Result<ExperimentResult, Error> {
    apply(&mut config, flags);
    let dir = config.output_dir.clone().unwrap_or(default_dir);
    let result = runner::run_experiment(&config, flags.parallel)?;
    write_results(&result, &dir)?;
    plot::plot_result_dir(&dir)?;
    summarize(&result, &dir);
    Ok(result)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, flags } => {
            let c = ExperimentConfig::load(&config)?;
            let dir = output_dir_for(&c, &flags.out);
            run_one(c, &flags, dir)?;
        }
        Command::Matrix { dir, flags } => {
            let configs = load_config_dir(&dir)?;
            if configs.is_empty() {
                return Err(Error::validation("matrix", format!("no .toml configs in {}", dir.display())));
            }
            let mut results = Vec::new();
            let mut failures = 0;
            for (path, c) in configs {
                let stem = path.file_stem().map(PathBuf::from).unwrap_or_default();
                match run_one(c, &flags, flags.out.join(stem)) {
                    Ok(r) => results.push(r),
                    Err(e) => {
                        failures += 1;
                        eprintln!("{}: {e}", path.display());
                    }
                }
            }
            std::fs::create_dir_all(&flags.out).map_err(|e| Error::Io { path: flags.out.clone(), source: e })?;
            let table = flags.out.join("comparison.csv");
            let f = std::fs::File::create(&table).map_err(|e| Error::Io { path: table.clone(), source: e })?;
            write_comparison_csv(&results.iter().collect::<Vec<_>>(), f)?;
            plot::plot_result_dir(&flags.out)?;
            println!("comparison -> {}", table.display());
            if failures > 0 {
                return Err(Error::Config(format!("{failures} experiment(s) failed")));
            }
        }
        Command::Plot { dir } => {
            for p in plot::plot_result_dir(&dir)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { config } => {
            let c = ExperimentConfig::load(&config)?;
            c.validate()?;
            println!("ok {} {}", c.label(), c.hash());
        }
        Command::Init { dir, body, resolution } => {
            std::fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
            for c in default_matrix(body, resolution) {
                let path = dir.join(format!("{}.toml", c.label()));
                std::fs::write(&path, c.to_toml_string()?).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation { .. } | Error::Toml(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
