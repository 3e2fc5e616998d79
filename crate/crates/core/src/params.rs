use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ising::{ChainSize, IsingChainParams};

/// Physical constants of the driven chain, in units where the Ising coupling
/// sets the energy scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cavity-drive mismatch Δ.
    pub detuning: f64,
    /// Photon loss rate κ.
    pub loss: f64,
    /// Spin splitting δ.
    pub splitting: f64,
    /// Ising coupling J.
    pub coupling: f64,
    /// Driving strength g0.
    pub drive: f64,
    pub size: ChainSize,
    /// Phase of the driving field, radians.
    pub drive_phase: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl SystemParams {
    /// Δ = 0.8, δ = 0.3, κ = 0.5, N = 200, J = 1, with the drive left at zero.
    pub fn baseline() -> Self {
        Self {
            detuning: 0.8,
            loss: 0.5,
            splitting: 0.3,
            coupling: 1.0,
            drive: 0.0,
            size: ChainSize::Finite(200),
            drive_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        };
        finite("detuning", self.detuning)?;
        finite("loss", self.loss)?;
        finite("splitting", self.splitting)?;
        finite("coupling", self.coupling)?;
        finite("drive", self.drive)?;
        finite("drive_phase", self.drive_phase)?;
        if self.coupling <= 0.0 {
            return Err(invalid("coupling", format!("must be > 0, got {}", self.coupling)));
        }
        if self.loss < 0.0 {
            return Err(invalid("loss", format!("must be >= 0, got {}", self.loss)));
        }
        if self.drive < 0.0 {
            return Err(invalid("drive", format!("must be >= 0, got {}", self.drive)));
        }
        if self.splitting < 0.0 {
            return Err(invalid("splitting", format!("must be >= 0, got {}", self.splitting)));
        }
        if self.cavity_denominator() == 0.0 {
            return Err(invalid("detuning", "detuning and loss cannot both vanish"));
        }
        self.chain(0.0).validate()
    }

    pub fn with_drive(self, drive: f64) -> Self {
        Self { drive, ..self }
    }

    /// `Δ² + κ²/4`.
    pub fn cavity_denominator(&self) -> f64 {
        self.detuning * self.detuning + 0.25 * self.loss * self.loss
    }

    /// `Δ / (Δ² + κ²/4)`, the static response of the lossy cavity.
    pub fn cavity_response(&self) -> f64 {
        self.detuning / self.cavity_denominator()
    }

    /// The spin chain seen at x-field `b_x = 2 g0 φ`.
    pub fn chain(&self, b_x: f64) -> IsingChainParams {
        IsingChainParams::new(self.splitting, b_x, self.coupling, self.size)
    }

    /// Largest |φ| any steady state can reach, `|Δ| g0 / (Δ² + κ²/4)`.
    pub fn phi_bound(&self) -> f64 {
        self.cavity_response().abs() * self.drive
    }
}
