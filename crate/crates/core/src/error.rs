use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge for b_perp = {b_perp}, j = {j} \
         (last two estimates {previous} and {current})"
    )]
    QuadratureNonConvergence {
        b_perp: f64,
        j: f64,
        previous: f64,
        current: f64,
    },

    #[error("finite-difference step underflow at b_x = {b_x} (step {step})")]
    StepUnderflow { b_x: f64, step: f64 },

    #[error(
        "derivative failed to converge at b_x = {b_x}, delta = {delta}, j = {j}: \
         Richardson pair {coarse} vs {fine}"
    )]
    DerivativeFailure {
        b_x: f64,
        delta: f64,
        j: f64,
        coarse: f64,
        fine: f64,
    },

    #[error("exact diagonalization supports at most {max} sites, got {n}")]
    TooManySites { n: usize, max: usize },

    #[error(
        "root grid too coarse at g0 = {g0}: roots near phi = {phi} cannot be separated; \
         use a denser grid (currently {grid_points} points)"
    )]
    Resolution {
        g0: f64,
        phi: f64,
        grid_points: usize,
    },

    #[error("phi = {phi} is not a fixed point (residual {residual})")]
    NotAFixedPoint { phi: f64, residual: f64 },

    #[error("no super-radiant branch found for g0 up to {g0_max}")]
    CriticalPointNotFound { g0_max: f64 },

    #[error("eigenvalues too close to separate eigenvectors (|w1 - w2| = {gap})")]
    DegenerateEigenvalues { gap: f64 },

    #[error("fluctuating photon number is not a non-negative real: {re} + {im}i")]
    PhotonNumberCheck { re: f64, im: f64 },

    #[error("fit window has only {valid} usable samples (need at least {required})")]
    FitWindow { valid: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Name of the operation family the error originates from, used in
    /// user-facing failure messages.
    pub fn operation(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "parameter validation",
            Error::QuadratureNonConvergence { .. } => "ground_state_sx",
            Error::StepUnderflow { .. } | Error::DerivativeFailure { .. } => "dsx_dbx",
            Error::TooManySites { .. } => "exact_diag_sx",
            Error::Resolution { .. } => "find_fixed_points",
            Error::NotAFixedPoint { .. } => "stability_coefficient",
            Error::CriticalPointNotFound { .. } => "critical_points",
            Error::DegenerateEigenvalues { .. } => "biorthogonal_eigvecs",
            Error::PhotonNumberCheck { .. } => "fluct_photon_number",
            Error::FitWindow { .. } => "critical_exponent_fit",
        }
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
