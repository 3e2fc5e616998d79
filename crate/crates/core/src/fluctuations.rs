//! Linearized fluctuations of the cavity field around a steady state.
//!
//! With `V = (δa, δa†)`, the linearized dynamics read `dV/dt = M V + ξ`, where
//! the noise has the single nonzero correlator `<ξ_a(t) ξ_a†(t')> = κ δ(t-t')`.
//! The spin chain follows the field adiabatically, so it enters `M` only through
//! `s = g0 ∂S_x/∂φ / 2`:
//!
//! ```text
//! M = [ -i(Δ + s) - κ/2        -i s        ]
//!     [        i s        i(Δ + s) - κ/2   ]
//! ```
//!
//! `M` is written in the frame co-rotating with the drive phase, so it does
//! not depend on that phase.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ising;
use crate::params::SystemParams;
use crate::selfconsistency::{
    find_fixed_points, map_grid, BranchPoint, CriticalPoints, Execution, FixedPointOptions,
};

/// Eigenvalues closer than this cannot be given separate eigenvectors.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Pair sums `|ω_i + ω_j|` below this mark a divergent photon number.
const DIVERGENCE_TOL: f64 = 1e-12;

/// Allowed imaginary part and negative excursion of the photon number,
/// relative to `max(1, |n|)`.
const REALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMatrix {
    pub m: Matrix2<Complex64>,
    /// `g0 ∂S_x/∂φ / 2`.
    pub slope: f64,
    pub detuning: f64,
    pub loss: f64,
}

impl StabilityMatrix {
    pub fn from_slope(slope: f64, detuning: f64, loss: f64) -> Self {
        let i = Complex64::i();
        let diag = Complex64::new(-0.5 * loss, 0.0);
        let m = Matrix2::new(
            diag - i * (detuning + slope),
            -i * slope,
            i * slope,
            diag + i * (detuning + slope),
        );
        Self {
            m,
            slope,
            detuning,
            loss,
        }
    }
}

pub fn stability_matrix(branch: &BranchPoint, params: &SystemParams) -> Result<StabilityMatrix> {
    params.validate()?;
    let g0 = params.drive;
    let dsx_dphi = 2.0 * g0 * ising::dsx_dbx(&params.chain(2.0 * g0 * branch.phi_s))?;
    Ok(StabilityMatrix::from_slope(
        0.5 * g0 * dsx_dphi,
        params.detuning,
        params.loss,
    ))
}

/// `ω = (-κ ∓ i sqrt(4Δ² + 8Δ s)) / 2`, principal square root.
pub fn eigenvalues_closed_form(sm: &StabilityMatrix) -> (Complex64, Complex64) {
    let d = sm.detuning;
    let root = Complex64::new(d * d + 2.0 * d * sm.slope, 0.0).sqrt();
    let centre = Complex64::new(-0.5 * sm.loss, 0.0);
    let i = Complex64::i();
    (centre - i * root, centre + i * root)
}

/// Roots of the characteristic polynomial of a general complex 2×2 matrix.
pub fn eigenvalues_generic(m: &Matrix2<Complex64>) -> (Complex64, Complex64) {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_trace * half_trace - det).sqrt();
    (half_trace - disc, half_trace + disc)
}

/// Eigen-decomposition `M = R diag(ω) L` with `L R = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biorthogonal {
    pub omega: [Complex64; 2],
    /// Rows are left eigenvectors.
    pub left: Matrix2<Complex64>,
    /// Columns are right eigenvectors, unit norm with the largest component
    /// real and positive.
    pub right: Matrix2<Complex64>,
}

/// Null vector of the singular 2×2 matrix `a`, taken from its better
/// conditioned row.
fn null_vector(a: &Matrix2<Complex64>) -> [Complex64; 2] {
    let r0 = [a[(0, 1)], -a[(0, 0)]];
    let r1 = [a[(1, 1)], -a[(1, 0)]];
    let norm = |v: &[Complex64; 2]| v[0].norm_sqr() + v[1].norm_sqr();
    let v = if norm(&r0) >= norm(&r1) { r0 } else { r1 };
    if norm(&v) == 0.0 {
        // `a` vanishes identically: any vector is a null vector.
        return [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    }
    v
}

fn canonical(v: [Complex64; 2]) -> [Complex64; 2] {
    let big = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let phase = big.conj() / big.norm();
    [v[0] * phase / norm, v[1] * phase / norm]
}

pub fn biorthogonal_eigvecs(sm: &StabilityMatrix) -> Result<Biorthogonal> {
    let m = sm.m;
    let (w0, w1) = eigenvalues_generic(&m);
    let gap = (w0 - w1).norm();
    if !(gap > DEGENERACY_TOL) {
        return Err(Error::DegenerateEigenvalues { gap });
    }
    // Same order as the closed form: lower imaginary part first, then the
    // larger real part.
    let first = if (w0.im - w1.im).abs() <= 1e-14 * gap {
        w0.re >= w1.re
    } else {
        w0.im < w1.im
    };
    let omega = if first { [w0, w1] } else { [w1, w0] };
    let id = Matrix2::<Complex64>::identity();
    let mut right = Matrix2::zeros();
    let mut left = Matrix2::zeros();
    for (k, &w) in omega.iter().enumerate() {
        let r = canonical(null_vector(&(m - id * w)));
        let l = null_vector(&(m.transpose() - id * w));
        let overlap = l[0] * r[0] + l[1] * r[1];
        right[(0, k)] = r[0];
        right[(1, k)] = r[1];
        left[(k, 0)] = l[0] / overlap;
        left[(k, 1)] = l[1] / overlap;
    }
    Ok(Biorthogonal { omega, left, right })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhotonNumber {
    Finite(f64),
    Divergent,
}

impl PhotonNumber {
    pub fn value(self) -> Option<f64> {
        match self {
            PhotonNumber::Finite(n) => Some(n),
            PhotonNumber::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        self == PhotonNumber::Divergent
    }
}

/// `<δa† δa> = -Σ_ij κ/(ω_i + ω_j) L_i1 L_j2 R_2i R_1j`.
pub fn fluct_photon_number(eig: &Biorthogonal, loss: f64) -> Result<PhotonNumber> {
    let (l, r, w) = (&eig.left, &eig.right, &eig.omega);
    if w.iter().any(|w| w.re >= 0.0) {
        return Ok(PhotonNumber::Divergent);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let pair = w[i] + w[j];
            if pair.norm() < DIVERGENCE_TOL {
                return Ok(PhotonNumber::Divergent);
            }
            sum -= loss / pair * l[(i, 0)] * l[(j, 1)] * r[(1, i)] * r[(0, j)];
        }
    }
    let scale = sum.re.abs().max(1.0);
    if sum.im.abs() > REALITY_TOL * scale || sum.re < -REALITY_TOL * scale {
        return Err(Error::PhotonNumberCheck {
            re: sum.re,
            im: sum.im,
        });
    }
    Ok(PhotonNumber::Finite(sum.re.max(0.0)))
}

/// Steady covariance `C = <V V†>` from `M C + C M† + diag(κ, 0) = 0`; its
/// `(1, 1)` entry is `<δa† δa>`.
pub fn steady_covariance(sm: &StabilityMatrix) -> Result<Matrix2<Complex64>> {
    let m = sm.m;
    let id = Matrix2::<Complex64>::identity();
    // Column-major vec: vec(M C) = (I ⊗ M) vec C, vec(C M†) = (M̄ ⊗ I) vec C.
    let kron = |a: &Matrix2<Complex64>, b: &Matrix2<Complex64>| {
        Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
    };
    let system = kron(&id, &m) + kron(&m.map(|z| z.conj()), &id);
    let rhs = Vector4::new(
        Complex64::new(-sm.loss, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| invalid("stability matrix", "Lyapunov system is singular"))?;
    Ok(Matrix2::new(x[0], x[2], x[1], x[3]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationSpectrum {
    pub matrix: StabilityMatrix,
    pub omega: [Complex64; 2],
    pub left: Matrix2<Complex64>,
    pub right: Matrix2<Complex64>,
    pub n_fluct: PhotonNumber,
}

pub fn fluctuation_spectrum(branch: &BranchPoint, params: &SystemParams) -> Result<FluctuationSpectrum> {
    let matrix = stability_matrix(branch, params)?;
    let eig = biorthogonal_eigvecs(&matrix)?;
    let n_fluct = fluct_photon_number(&eig, params.loss)?;
    Ok(FluctuationSpectrum {
        matrix,
        omega: eig.omega,
        left: eig.left,
        right: eig.right,
        n_fluct,
    })
}

/// Mean-field equation of motion `da/dt` for the scaled field amplitude, with
/// the chain relaxed to its ground state at `φ = Re(a e^{-iθ})`.
pub fn field_flow(a: Complex64, params: &SystemParams) -> Result<Complex64> {
    let rotation = Complex64::from_polar(1.0, params.drive_phase);
    let phi = (a * rotation.conj()).re;
    let s_x = ising::ground_state_sx(&params.chain(2.0 * params.drive * phi))?;
    let decay = Complex64::new(0.5 * params.loss, params.detuning);
    Ok(-decay * a - Complex64::i() * params.drive * s_x * rotation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalSide {
    /// Approach the fold from above along the stable super-radiant branch.
    AtG1,
    /// Approach the vacuum instability from below along the vacuum branch.
    AtG2,
}

impl std::fmt::Display for CriticalSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriticalSide::AtG1 => "g1",
            CriticalSide::AtG2 => "g2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    /// Smallest relative offset `|g0 - g_c| / g_c`.
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            lo: 1e-4,
            hi: 1e-2,
            samples: 20,
        }
    }
}

impl FitWindow {
    pub fn offsets(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

pub const MIN_FIT_SAMPLES: usize = 10;
pub const TRUSTED_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: usize,
}

/// Least-squares fit of `ln n` against `ln x`; divergent samples are skipped.
pub fn fit_power_law(samples: &[(f64, PhotonNumber)]) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|&(x, n)| match n {
            PhotonNumber::Finite(v) if v > 0.0 && x > 0.0 => Some((x.ln(), v.ln())),
            _ => None,
        })
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitWindow {
            valid: points.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit {
        slope,
        intercept,
        r2,
        used: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub side: CriticalSide,
    pub g_c: f64,
    pub slope: f64,
    pub r2: f64,
    pub trusted: bool,
    pub window: FitWindow,
    /// `(g0, n_fluct)` at each offset.
    pub samples: Vec<(f64, PhotonNumber)>,
}

/// Photon-number fluctuations on the branch that approaches `side`, at drive
/// `g0`.
pub fn n_fluct_near(params: &SystemParams, side: CriticalSide, g0: f64) -> Result<PhotonNumber> {
    let p = params.with_drive(g0);
    let branch = match side {
        CriticalSide::AtG2 => crate::selfconsistency::branch_point(0.0, &p)?,
        CriticalSide::AtG1 => {
            let roots = find_fixed_points(&p, &FixedPointOptions::default())?;
            match roots
                .into_iter()
                .filter(|b| b.stable && !b.is_vacuum() && b.phi_s > 0.0)
                .min_by(|a, b| a.phi_s.total_cmp(&b.phi_s))
            {
                Some(b) => b,
                None => return Ok(PhotonNumber::Divergent),
            }
        }
    };
    Ok(fluctuation_spectrum(&branch, &p)?.n_fluct)
}

pub fn critical_exponent_fit(
    params: &SystemParams,
    side: CriticalSide,
    critical: &CriticalPoints,
    window: &FitWindow,
    execution: Execution,
) -> Result<ExponentFit> {
    params.validate()?;
    if !(window.lo > 0.0 && window.hi > window.lo && window.hi < 1.0) {
        return Err(invalid("window", "need 0 < lo < hi < 1"));
    }
    let (g_c, direction) = match side {
        CriticalSide::AtG1 => (critical.g1, 1.0),
        CriticalSide::AtG2 => (critical.g2, -1.0),
    };
    let offsets = window.offsets();
    let samples = map_grid(&offsets, execution, |&x| {
        let g0 = g_c * (1.0 + direction * x);
        Ok((g0, n_fluct_near(params, side, g0)?))
    })?;
    let distance: Vec<(f64, PhotonNumber)> = samples
        .iter()
        .map(|&(g0, n)| ((g0 - g_c).abs(), n))
        .collect();
    let fit = fit_power_law(&distance)?;
    Ok(ExponentFit {
        side,
        g_c,
        slope: fit.slope,
        r2: fit.r2,
        trusted: fit.r2 > TRUSTED_R2,
        window: *window,
        samples,
    })
}
