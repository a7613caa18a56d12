use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extropy_core::experiment::{self, Command, ExperimentConfig};
use extropy_core::Error;

/// Complexity and entropy rates for lattice dynamical systems.
#[derive(Parser, Debug)]
#[command(name = "extropy", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Evolve an ensemble and write windowed states.
    Simulate(Common),
    /// Complexity rates in time, volume, ε and τ.
    Complexity(Common),
    /// Distinguishable-orbit counts and entropy rates.
    Entropy(Common),
    /// Complexity rate against entropy rate per window.
    Variational(Common),
    /// Empirical checks of the complexity-function hypotheses.
    Axioms(Common),
    /// Admissibility of a window sequence.
    ValidateSeq(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Simulate(c) => (Command::Simulate, c),
            Sub::Complexity(c) => (Command::Complexity, c),
            Sub::Entropy(c) => (Command::Entropy, c),
            Sub::Variational(c) => (Command::Variational, c),
            Sub::Axioms(c) => (Command::Axioms, c),
            Sub::ValidateSeq(c) => (Command::ValidateSeq, c),
        }
    }
}

fn execute(command: Command, args: Common) -> Result<(), Error> {
    let cfg = ExperimentConfig::load(&args.config, args.seed)?;
    // kept out of the manifest so reruns into different directories match
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config {
            path: "out".into(),
            message: "no output directory; set `out` or pass --out".into(),
        })?;
    if args.workers == 0 {
        return Err(Error::Config {
            path: "--workers".into(),
            message: "must be positive".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .map_err(|e| Error::Domain(e.to_string()))?;
    let manifest = pool.install(|| experiment::run(command, &cfg, &out))?;
    for o in &manifest.outputs {
        log::info!("{} rows -> {}", o.rows, out.join(&o.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EXTROPY_LOG", "error")).init();
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("extropy {}: {e}", command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if matches!(e, Error::Config { .. }) {
        2
    } else if e.is_runtime_guard() {
        3
    } else {
        1
    }
}
