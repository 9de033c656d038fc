mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use config::*;

/// Non-Hermitian dynamics realised by Hermitian parametric bosonic systems.
#[derive(Parser, Debug)]
#[command(name = "squeezemap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, PT phase and EP order along a coupling sweep.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SpectrumFlags,
    },
    /// Build a mapping certificate or search for a mapping witness.
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: MapFlags,
    },
    /// Reflection flux spectrum and EP splitting scans.
    Sense {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SenseFlags,
    },
    /// Gaussian evolution around a loop in (g, ω) space.
    Encircle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: EncircleFlags,
    },
    /// Chern numbers of the driven Kagome lattice.
    Chern {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: ChernFlags,
    },
    /// Strip spectrum, in-gap edge states and edge spectral flow.
    Strip {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: StripFlags,
    },
    /// Randomised checks of the QMFS construction.
    QmfsCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: QmfsCheckFlags,
    },
}

enum Failure {
    Config(String),
    Library(squeezemap::Error),
    Io(std::io::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Library(e) if e.is_numerical() => 3,
            Failure::Library(_) => 2,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => format!("config error {m}"),
            Failure::Library(e) => e.to_string(),
            Failure::Io(e) => format!("i/o error: {e}"),
        }
    }
}

fn execute<F, P, R>(name: &str, common: &Common, flags: &F, run: R) -> Result<(), Failure>
where
    F: Serialize,
    P: Serialize + serde::de::DeserializeOwned,
    R: FnOnce(&P, u64) -> squeezemap::Result<commands::Outcome>,
{
    let cfg: Resolved<P> = resolve(name, common, flags).map_err(|e| Failure::Config(e.0))?;
    let outcome = run(&cfg.params, cfg.seed).map_err(Failure::Library)?;
    let identity = json!({"subcommand": name, "params": cfg.params, "seed": cfg.seed});
    let base = format!("{name}-{}", output::params_hash(&identity));
    let written = output::write_all(&cfg.output_dir, &base, &outcome.artifacts).map_err(Failure::Io)?;
    println!("{name}: {} [{} artifact(s) {}*]", outcome.summary, written.len(), cfg.output_dir.join(&base).display());
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SQUEEZEMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("at `SQUEEZEMAP_THREADS`: expected a positive integer, got `{v}`")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Spectrum { common, flags } => execute("spectrum", common, flags, |p, _| commands::spectrum(p)),
        Command::Map { common, flags } => execute("map", common, flags, commands::map),
        Command::Sense { common, flags } => execute("sense", common, flags, |p, _| commands::sense(p)),
        Command::Encircle { common, flags } => execute("encircle", common, flags, |p, _| commands::encircle(p)),
        Command::Chern { common, flags } => execute("chern", common, flags, |p, _| commands::chern(p)),
        Command::Strip { common, flags } => execute("strip", common, flags, |p, _| commands::strip(p)),
        Command::QmfsCheck { common, flags } => execute("qmfs-check", common, flags, commands::qmfs_check),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("squeezemap: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
