use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is defective: eigenvector condition number {condition:.3e}")]
    DefectiveMatrix { condition: f64 },
    #[error("metric eta is numerically singular")]
    SingularEta,
    #[error("PT constraint violated: {0}")]
    PtViolation(String),
    #[error("Hermitian and anti-Hermitian parts are not orthogonal (c.d = {dot:.3e})")]
    NotPtEquivalent { dot: f64 },
    #[error("gain/loss matrix is rank deficient (smallest |eigenvalue| {smallest:.3e})")]
    RankDeficientGainLoss { smallest: f64 },
    #[error("matrix is not PT symmetric under the mode exchange (residual {residual:.3e})")]
    NotPtSymmetric { residual: f64 },
    #[error("mapping conditions violated: {}", .0.join("; "))]
    ConditionsViolated(Vec<String>),
    #[error("pairing block has a singular value below tolerance ({smallest:.3e})")]
    DegeneratePairing { smallest: f64 },
    #[error("integration failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("matrix is ill conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("covariance violates the uncertainty relation (min eigenvalue {min_eig:.3e})")]
    UnphysicalState { min_eig: f64 },
    #[error("flux denominator vanishes at omega_p = {omega_p}")]
    PoleEncountered { omega_p: f64 },
    #[error("eigenvector branch tracking lost at t = {t} (overlap {overlap:.3})")]
    BranchCrossing { t: f64, overlap: f64 },
    #[error("band {band} is not isolated (minimum gap {gap:.3e})")]
    BandTouching { band: usize, gap: f64 },
    #[error("dynamical matrix has complex eigenvalues (max |Im| = {max_imag:.3e})")]
    Unstable { max_imag: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DefectiveMatrix { .. }
                | Error::StepFailure { .. }
                | Error::IllConditioned { .. }
                | Error::BranchCrossing { .. }
                | Error::BandTouching { .. }
                | Error::PoleEncountered { .. }
                | Error::Unstable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
