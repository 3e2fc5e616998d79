//! Ground-state observables of the periodic spin chain
//!
//! ```text
//! H = -delta Σ σz_i + b_x Σ σx_i - j Σ σy_i σy_{i+1}
//! ```
//!
//! A global rotation about the y axis aligns the (x, z) field with a single
//! axis of magnitude `b_perp = sqrt(delta² + b_x²)` and leaves the y-y
//! coupling untouched, so the problem reduces to the standard transverse-field
//! Ising chain. That chain is solved with Jordan-Wigner fermions: a sum over
//! antiperiodic momenta for a finite ring, or a quadrature over `[0, π]` in the
//! thermodynamic limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Relative half-width of the band around `b_perp = j` labelled critical.
pub const CRITICAL_BAND: f64 = 1e-8;

/// Agreement required between successive quadrature orders.
const QUADRATURE_TOL: f64 = 1e-13;

/// Relative finite-difference step for [`dsx_dbx`].
const FD_STEP: f64 = 1e-5;

/// Largest relative disagreement tolerated within the Richardson pair.
const RICHARDSON_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainSize {
    Finite(usize),
    ThermodynamicLimit,
}

impl std::fmt::Display for ChainSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChainSize::Finite(n) => write!(f, "{n}"),
            ChainSize::ThermodynamicLimit => f.write_str("thermodynamic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingChainParams {
    /// Field along z.
    pub delta: f64,
    /// Coefficient of the `+b_x Σ σx` energy term.
    pub b_x: f64,
    /// Ferromagnetic y-y coupling.
    pub j: f64,
    pub size: ChainSize,
}

impl IsingChainParams {
    pub fn new(delta: f64, b_x: f64, j: f64, size: ChainSize) -> Self {
        Self { delta, b_x, j, size }
    }

    /// Checks the chain invariants. `j = 0` is accepted as the decoupled-spin
    /// limit.
    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(invalid("delta", format!("must be finite, got {}", self.delta)));
        }
        if !self.b_x.is_finite() {
            return Err(invalid("b_x", format!("must be finite, got {}", self.b_x)));
        }
        if !(self.j.is_finite() && self.j >= 0.0) {
            return Err(invalid("j", format!("must be finite and >= 0, got {}", self.j)));
        }
        if let ChainSize::Finite(n) = self.size {
            if n < 2 || n % 2 != 0 {
                return Err(invalid("size", format!("finite chains need an even n >= 2, got {n}")));
            }
        }
        Ok(())
    }

    pub fn with_b_x(self, b_x: f64) -> Self {
        Self { b_x, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinPhase {
    Ferromagnetic,
    Paramagnetic,
    Critical,
}

impl std::fmt::Display for SpinPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpinPhase::Ferromagnetic => "ferromagnetic",
            SpinPhase::Paramagnetic => "paramagnetic",
            SpinPhase::Critical => "critical",
        })
    }
}

pub fn spin_phase(b_perp: f64, j: f64) -> SpinPhase {
    if (b_perp - j).abs() <= CRITICAL_BAND * j.max(b_perp) {
        SpinPhase::Critical
    } else if j > b_perp {
        SpinPhase::Ferromagnetic
    } else {
        SpinPhase::Paramagnetic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingObservables {
    pub s_x: f64,
    pub b_perp: f64,
    pub phase: SpinPhase,
}

pub fn transverse_field_magnitude(p: &IsingChainParams) -> f64 {
    p.delta.hypot(p.b_x)
}

/// Ground-state magnetization per site along the field axis of the chain
/// `-b_perp Σ σz - j Σ σy σy`.
pub fn field_axis_magnetization(b_perp: f64, j: f64, size: ChainSize) -> Result<f64> {
    if b_perp == 0.0 {
        return Ok(0.0);
    }
    if j == 0.0 {
        return Ok(1.0);
    }
    // With t = π - k the mode occupation reads
    //   (b - j cos t) / sqrt(b² + j² - 2 b j cos t),
    // written without cancellation near b = j, t = 0.
    let gap = b_perp - j;
    let cross = 4.0 * b_perp * j;
    let mode = |t: f64| {
        let s = (0.5 * t).sin();
        let s2 = s * s;
        (gap + 2.0 * j * s2) / (gap * gap + cross * s2).sqrt()
    };
    match size {
        ChainSize::Finite(n) => {
            // Antiperiodic momenta (2m+1)π/n; the set is symmetric under
            // t -> 2π - t so half of it suffices.
            let half = n / 2;
            let sum: f64 = (0..half)
                .map(|m| mode((2 * m + 1) as f64 * PI / n as f64))
                .sum();
            Ok(sum / half as f64)
        }
        ChainSize::ThermodynamicLimit => {
            // Branch points of the integrand sit at t ≈ ±i|b - j|/sqrt(b j).
            let width = gap.abs() / (b_perp * j).sqrt();
            let edges = quadrature::graded_panels(width, PI);
            quadrature::integrate_doubling(&edges, QUADRATURE_TOL, mode)
                .map(|v| v / PI)
                .map_err(|(previous, current)| Error::QuadratureNonConvergence {
                    b_perp,
                    j,
                    previous,
                    current,
                })
        }
    }
}

/// Per-site `<σx>` in the ground state. The ground state anti-aligns with the
/// `+b_x Σ σx` term, so the result has the sign of `-b_x`.
pub fn ground_state_sx(p: &IsingChainParams) -> Result<f64> {
    p.validate()?;
    let b_perp = transverse_field_magnitude(p);
    if b_perp == 0.0 {
        return Ok(0.0);
    }
    let m = field_axis_magnetization(b_perp, p.j, p.size)?;
    Ok(-m * p.b_x / b_perp)
}

pub fn observables(p: &IsingChainParams) -> Result<IsingObservables> {
    let s_x = ground_state_sx(p)?;
    let b_perp = transverse_field_magnitude(p);
    Ok(IsingObservables {
        s_x,
        b_perp,
        phase: spin_phase(b_perp, p.j),
    })
}

/// `∂S_x/∂b_x` at fixed `delta`, `j` and size: central differences at steps
/// `h` and `h/2` combined by one Richardson level.
pub fn dsx_dbx(p: &IsingChainParams) -> Result<f64> {
    p.validate()?;
    let scale = p.j.max(p.b_x.abs()).max(p.delta.abs());
    let h = FD_STEP * scale;
    if !(h.is_normal() && p.b_x + h != p.b_x) {
        return Err(Error::StepUnderflow { b_x: p.b_x, step: h });
    }
    let sx = |b: f64| ground_state_sx(&p.with_b_x(b));
    let central = |h: f64| -> Result<f64> { Ok((sx(p.b_x + h)? - sx(p.b_x - h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let allowed = RICHARDSON_TOL * (extrapolated.abs() + 1.0 / scale);
    if !extrapolated.is_finite() || (fine - coarse).abs() > allowed {
        return Err(Error::DerivativeFailure {
            b_x: p.b_x,
            delta: p.delta,
            j: p.j,
            coarse,
            fine,
        });
    }
    Ok(extrapolated)
}
