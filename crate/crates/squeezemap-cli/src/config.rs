use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Declares a flag struct (all `Option`, for clap) and a resolved parameter
/// struct (defaults filled, unknown keys rejected) from one field list.
macro_rules! params {
    ($flags:ident => $params:ident { $( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr ),* $(,)? }) => {
        #[derive(Args, Serialize, Debug, Clone, Default)]
        pub struct $flags {
            $(
                $(#[doc = $doc])*
                #[arg(long, allow_negative_numbers = true)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        #[derive(Serialize, Deserialize, Debug, Clone)]
        #[serde(default, deny_unknown_fields)]
        pub struct $params {
            $( pub $field: $ty, )*
        }

        impl Default for $params {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }
    };
}

macro_rules! choice {
    ($name:ident { $($variant:ident),* $(,)? }) => {
        #[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
        #[serde(rename_all = "kebab-case")]
        pub enum $name { $($variant),* }
    };
}

choice!(SpectrumModel { PtDimer, DetunedDimer, HoepTrimer, Ssh });
choice!(MapKind { Dpa, Qmfs, PtChain, Tb4, Pa4 });
choice!(SenseMode { Flux, HoepScaling, DimerScaling });
choice!(DirectionChoice { Ccw, Cw, Both });
choice!(InitialState { Branch, Vacuum, Asymmetric });
choice!(KagomeForm { Bloch, Pt });

params!(SpectrumFlags => SpectrumParams {
    /// Model to diagonalise.
    model: SpectrumModel = SpectrumModel::PtDimer,
    /// Coupling g (hopping t for the SSH chain).
    g: f64 = 1.0,
    /// Gain/loss rate γ.
    gamma: f64 = 1.0,
    /// Detuning ω of the detuned dimer.
    omega: f64 = 0.0,
    /// Perturbation ε of the trimer.
    epsilon: f64 = 0.0,
    /// Number of PT pairs in the SSH chain.
    n_pairs: usize = 4,
    /// Dimerisation t' of the SSH chain.
    t_prime: f64 = 0.3,
    /// Start of the g sweep.
    g_min: f64 = 0.0,
    /// End of the g sweep.
    g_max: f64 = 2.0,
    /// Points in the g sweep.
    points: usize = 201,
    /// Relative tolerance for EP and phase detection.
    tol: f64 = 1e-6,
});

params!(MapFlags => MapParams {
    /// Mapping to construct.
    kind: MapKind = MapKind::Dpa,
    /// Coupling g.
    g: f64 = 1.0,
    /// Gain/loss rate γ.
    gamma: f64 = 1.0,
    /// Detuning ω (qmfs source dimer).
    omega: f64 = 0.0,
    /// Perturbation δ of the tb-4 and PA-4 models.
    delta: f64 = 0.0,
    /// First pairing amplitude of PA-4.
    nu1: f64 = 1.0,
    /// Second pairing amplitude of PA-4.
    nu2: f64 = 0.5,
    /// Number of PT pairs in the SSH chain.
    n_pairs: usize = 4,
    /// Dimerisation t' of the SSH chain.
    t_prime: f64 = 0.3,
    /// Tolerance for certificates and witnesses.
    tol: f64 = 1e-10,
});

params!(SenseFlags => SenseParams {
    /// Flux spectrum or splitting-scaling scan.
    mode: SenseMode = SenseMode::Flux,
    /// Pump detuning δ.
    delta: f64 = 12.5,
    /// Drive amplitude ν.
    nu: f64 = 12.5,
    /// Waveguide coupling κ.
    kappa: f64 = 1.0,
    /// Dispersive perturbation ε.
    epsilon: f64 = 0.7,
    /// Lower probe frequency.
    omega_min: f64 = -10.0,
    /// Upper probe frequency.
    omega_max: f64 = 10.0,
    /// Probe frequency samples.
    points: usize = 20001,
    /// γ of the scaling scans.
    gamma: f64 = 1.0,
    /// Smallest ε of the scaling scans.
    eps_min: f64 = 1e-6,
    /// Largest ε of the scaling scans.
    eps_max: f64 = 1e-3,
    /// Number of ε values in the scaling scans.
    eps_points: usize = 13,
});

params!(EncircleFlags => EncircleParams {
    /// Loop orientation.
    direction: DirectionChoice = DirectionChoice::Both,
    /// Initial Gaussian state.
    initial: InitialState = InitialState::Branch,
    /// Gain/loss rate γ.
    gamma: f64 = 1.0,
    /// Loop centre g₀.
    center_g: f64 = 0.5,
    /// Loop radius ε_r.
    radius: f64 = 0.1,
    /// Loop duration T.
    duration: f64 = 20.0,
    /// Start phase of the loop.
    phi0: f64 = 0.0,
    /// Output time steps.
    steps: usize = 2000,
    /// Integrator relative tolerance.
    rtol: f64 = 1e-10,
    /// Squeezing λ₀ of the asymmetric state.
    lambda0: f64 = std::f64::consts::LN_10,
});

params!(ChernFlags => ChernParams {
    /// On-site detuning ω₀.
    omega0: f64 = 4.5,
    /// Hopping J.
    j: f64 = 1.0,
    /// Drive amplitude ν.
    nu: f64 = 0.2,
    /// Sublattice drive phase step φ.
    phi: f64 = TAU / 3.0,
    /// Brillouin-zone grid size per direction.
    grid: usize = 48,
    /// Dynamical matrix or its PT-rotated form.
    form: KagomeForm = KagomeForm::Bloch,
    /// Scan ω₀ for a stable topological point instead.
    scan: bool = false,
    /// First ω₀ of the scan.
    scan_start: f64 = 3.0,
    /// ω₀ step of the scan.
    scan_step: f64 = 0.5,
    /// Number of scan points.
    scan_points: usize = 12,
});

params!(StripFlags => StripParams {
    /// On-site detuning ω₀.
    omega0: f64 = 4.5,
    /// Hopping J.
    j: f64 = 1.0,
    /// Drive amplitude ν.
    nu: f64 = 0.2,
    /// Sublattice drive phase step φ.
    phi: f64 = TAU / 3.0,
    /// Strip width in unit cells.
    width: usize = 16,
    /// Number of parallel momenta.
    k_points: usize = 120,
    /// Transverse momenta used to project the bulk bands.
    n_theta: usize = 200,
    /// Margin outside projected bands for in-gap states.
    margin: f64 = 1e-6,
    /// Count edge spectral flow through every same-sector gap.
    flow: bool = false,
    /// Bulk grid for locating gaps.
    grid: usize = 48,
});

params!(QmfsCheckFlags => QmfsCheckParams {
    /// Number of random Hamiltonians.
    samples: usize = 50,
    /// Largest Hamiltonian dimension.
    max_modes: usize = 6,
    /// Entry scale of the random Hamiltonians.
    scale: f64 = 0.5,
    /// Evolution time for the symplectic checks.
    time: f64 = 1.0,
});

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomised searches.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Option<String>,
    #[serde(default)]
    params: Map<String, Value>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug)]
pub struct Resolved<P> {
    pub params: P,
    pub seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))
}

/// Merges file params under command-line flags and fills defaults.
pub fn resolve<F: Serialize, P: DeserializeOwned>(subcommand: &str, common: &Common, flags: &F) -> Result<Resolved<P>, ConfigError> {
    let file = match &common.config {
        Some(path) => parse_file(path)?,
        None => FileConfig::default(),
    };
    if let Some(s) = &file.subcommand {
        if s != subcommand {
            return Err(ConfigError(format!("at `subcommand`: config is for `{s}`, not `{subcommand}`")));
        }
    }
    let mut merged = file.params;
    if let Value::Object(cli) = serde_json::to_value(flags).expect("flags serialise") {
        merged.extend(cli);
    }
    let params = serde_path_to_error::deserialize(Value::Object(merged))
        .map_err(|e| ConfigError(format!("at `params.{}`: {}", e.path(), e.inner())))?;
    Ok(Resolved {
        params,
        seed: common.seed.or(file.seed).unwrap_or(0),
        output_dir: common.out.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from(".")),
    })
}
