//! Self-consistent steady states of the cavity field and the spin chain.
//!
//! In steady state the cavity field follows the chain polarization,
//! `φ = -Δ g0 S_x / (Δ² + κ²/4)`, while the chain sees the x-field
//! `b_x = 2 g0 φ`. Fixed points are the zeros of
//!
//! ```text
//! R(φ) = φ + Δ g0 S_x(2 g0 φ) / (Δ² + κ²/4)
//! ```
//!
//! which is odd in φ and always vanishes at φ = 0. Root bracketing works on
//! the even function `R(φ)/φ` so that super-radiant roots arbitrarily close
//! to the vacuum are still separated from it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ising::{self, field_axis_magnetization, SpinPhase};
use crate::params::SystemParams;

/// |φ| below which a steady state counts as the vacuum.
pub const VACUUM_TOL: f64 = 1e-10;

/// Largest |R(φ)| accepted for a point handed to [`stability_coefficient`].
const FIXED_POINT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CavityPhase {
    Normal,
    SuperRadiant,
}

impl std::fmt::Display for CavityPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CavityPhase::Normal => "normal",
            CavityPhase::SuperRadiant => "superradiant",
        })
    }
}

/// One self-consistent steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub g0: f64,
    pub phi_s: f64,
    pub s_x: f64,
    pub b_perp: f64,
    /// Stability coefficient including the detuning factor; decides `stable`.
    pub c_s: f64,
    /// Stability coefficient without the detuning factor.
    pub c_s_printed: f64,
    pub stable: bool,
    pub cavity_phase: CavityPhase,
    pub spin_phase: SpinPhase,
    /// Steady cavity amplitude scaled by `1/√N`.
    pub a_s: Complex64,
}

impl BranchPoint {
    pub fn is_vacuum(&self) -> bool {
        self.cavity_phase == CavityPhase::Normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCoefficients {
    /// `1 + Δ g0 ∂S_x/∂φ / (Δ² + κ²/4)`: the slope of `R` at the fixed point,
    /// and the quantity whose sign matches the linearized eigenvalues.
    pub m_consistent: f64,
    /// `1 + g0 ∂S_x/∂φ / (Δ² + κ²/4)`.
    pub printed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Uniform scan points on `[-φ_max, φ_max]`; forced odd so φ = 0 is on
    /// the grid.
    pub grid_points: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub root_tol: f64,
    /// Roots closer than this are merged.
    pub dedupe_tol: f64,
    /// Search between scan points for root pairs hidden inside one cell
    /// (close to a fold). When disabled, such cells raise
    /// [`Error::Resolution`] instead.
    pub refine_folds: bool,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            grid_points: 2001,
            root_tol: 1e-10,
            dedupe_tol: 1e-8,
            refine_folds: true,
        }
    }
}

/// Steady cavity field produced by a chain polarization `s_x`.
pub fn photon_from_sx(s_x: f64, params: &SystemParams) -> Result<f64> {
    let denominator = params.cavity_denominator();
    if denominator == 0.0 {
        return Err(invalid("detuning", "detuning and loss cannot both vanish"));
    }
    if !(s_x.abs() <= 1.0) {
        return Err(invalid("s_x", format!("polarization must lie in [-1, 1], got {s_x}")));
    }
    Ok(-params.detuning * params.drive * s_x / denominator)
}

pub fn residual(phi: f64, params: &SystemParams) -> Result<f64> {
    let s_x = ising::ground_state_sx(&params.chain(2.0 * params.drive * phi))?;
    Ok(phi - photon_from_sx(s_x, params)?)
}

/// `S_x(b_x) / b_x`, continued to `b_x = 0`.
fn polarization_per_field(b_x: f64, params: &SystemParams) -> Result<f64> {
    let delta = params.splitting.abs();
    let b_perp = delta.hypot(b_x);
    if b_perp > 0.0 {
        let m = field_axis_magnetization(b_perp, params.coupling, params.size)?;
        Ok(-m / b_perp)
    } else {
        ising::dsx_dbx(&params.chain(0.0))
    }
}

/// `R(φ)/φ`, even in φ; its value at φ = 0 is the vacuum stability
/// coefficient.
fn reduced_residual(phi: f64, params: &SystemParams) -> Result<f64> {
    let g0 = params.drive;
    let q = polarization_per_field(2.0 * g0 * phi, params)?;
    Ok(1.0 + 2.0 * params.cavity_response() * g0 * g0 * q)
}

pub fn stability_coefficient(phi_star: f64, params: &SystemParams) -> Result<StabilityCoefficients> {
    params.validate()?;
    let r = residual(phi_star, params)?;
    if !(r.abs() <= FIXED_POINT_TOL) {
        return Err(Error::NotAFixedPoint {
            phi: phi_star,
            residual: r,
        });
    }
    let g0 = params.drive;
    let dsx_dphi = 2.0 * g0 * ising::dsx_dbx(&params.chain(2.0 * g0 * phi_star))?;
    let scaled = g0 * dsx_dphi / params.cavity_denominator();
    Ok(StabilityCoefficients {
        m_consistent: 1.0 + params.detuning * scaled,
        printed: 1.0 + scaled,
    })
}

/// Steady amplitude `a_s/√N = -i g0 S_x e^{iφ} / (iΔ + κ/2)` from setting the
/// field equation of motion to zero.
pub fn steady_field_amplitude(branch: &BranchPoint, params: &SystemParams) -> Result<Complex64> {
    if params.cavity_denominator() == 0.0 {
        return Err(invalid("detuning", "detuning and loss cannot both vanish"));
    }
    let drive = Complex64::from_polar(params.drive * branch.s_x, params.drive_phase);
    Ok(-Complex64::i() * drive / Complex64::new(0.5 * params.loss, params.detuning))
}

/// Annotates the fixed point at `phi` with polarization, stability and phase
/// labels.
pub fn branch_point(phi: f64, params: &SystemParams) -> Result<BranchPoint> {
    let g0 = params.drive;
    let obs = ising::observables(&params.chain(2.0 * g0 * phi))?;
    let c = stability_coefficient(phi, params)?;
    let mut point = BranchPoint {
        g0,
        phi_s: phi,
        s_x: obs.s_x + 0.0,
        b_perp: obs.b_perp,
        c_s: c.m_consistent,
        c_s_printed: c.printed,
        stable: c.m_consistent > 0.0,
        cavity_phase: if phi.abs() > VACUUM_TOL {
            CavityPhase::SuperRadiant
        } else {
            CavityPhase::Normal
        },
        spin_phase: obs.phase,
        a_s: Complex64::new(0.0, 0.0),
    };
    point.a_s = steady_field_amplitude(&point, params)?;
    Ok(point)
}

fn bisect(
    mut lo: f64,
    mut f_lo: f64,
    mut hi: f64,
    tol: f64,
    f: &impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, f: &impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let tol = 1e-14 * (a.abs() + b.abs()).max(1e-300);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        if c >= d {
            break;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// All steady states at the drive `params.drive`, vacuum first, then
/// super-radiant pairs by increasing |φ| with the positive member first.
pub fn find_fixed_points(params: &SystemParams, opts: &FixedPointOptions) -> Result<Vec<BranchPoint>> {
    params.validate()?;
    let mut roots = vec![0.0];
    let bound = params.phi_bound();
    if bound > 0.0 {
        roots.extend(nonzero_roots(params, opts, bound)?);
    }
    roots.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(b.total_cmp(a)));
    roots.into_iter().map(|phi| branch_point(phi, params)).collect()
}

fn nonzero_roots(params: &SystemParams, opts: &FixedPointOptions, bound: f64) -> Result<Vec<f64>> {
    let points = (opts.grid_points.max(3)) | 1;
    let half = (points - 1) / 2;
    let phi_max = bound * (1.0 + 1e-2);
    let grid: Vec<f64> = (0..points)
        .map(|i| phi_max * (i as f64 - half as f64) / half as f64)
        .collect();
    let rho = |phi: f64| reduced_residual(phi, params);
    let values = grid.iter().map(|&p| rho(p)).collect::<Result<Vec<f64>>>()?;

    let mut brackets: Vec<(f64, f64, f64)> = Vec::new();
    let mut exact: Vec<f64> = Vec::new();
    for i in 0..points {
        if values[i] == 0.0 && grid[i] != 0.0 {
            exact.push(grid[i]);
        }
        if i + 1 < points && values[i] * values[i + 1] < 0.0 {
            brackets.push((grid[i], values[i], grid[i + 1]));
        }
    }

    // Cells where |ρ| has a local minimum without a sign change may hide a
    // pair of roots near a fold. φ = 0 is an extremum of the even ρ, so the
    // two half-cells around it are searched separately.
    for i in 0..points {
        let v = values[i];
        if v == 0.0 {
            continue;
        }
        let same_sign = |k: usize| values[k] * v > 0.0;
        let lower = |k: usize| values[k].abs() >= v.abs();
        let windows: Vec<(usize, usize)> = if i == half {
            [(i - 1, i), (i, i + 1)]
                .into_iter()
                .filter(|&(a, b)| {
                    let other = if a == i { b } else { a };
                    same_sign(other) && lower(other)
                })
                .collect()
        } else if i > 0 && i + 1 < points && same_sign(i - 1) && same_sign(i + 1) && lower(i - 1) && lower(i + 1) {
            vec![(i - 1, i + 1)]
        } else {
            continue;
        };
        for (a, b) in windows {
            if !opts.refine_folds {
                if i != half && parabola_crosses_zero(values[i - 1], v, values[i + 1]) {
                    return Err(Error::Resolution {
                        g0: params.drive,
                        phi: grid[i],
                        grid_points: points,
                    });
                }
                continue;
            }
            let sign = v.signum();
            let (x_min, f_min) = golden_min(grid[a], grid[b], &|p| Ok(sign * rho(p)?))?;
            if f_min < 0.0 {
                let f_a = values[a];
                brackets.push((grid[a], f_a, x_min));
                brackets.push((x_min, sign * f_min, grid[b]));
            }
        }
    }

    let mut roots = exact;
    for (lo, f_lo, hi) in brackets {
        roots.push(bisect(lo, f_lo, hi, opts.root_tol, &rho)?);
    }
    roots.sort_by(f64::total_cmp);
    let mut deduped: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match deduped.last() {
            Some(&last) if (r - last).abs() <= opts.dedupe_tol => {}
            _ => deduped.push(r),
        }
    }
    // Nonzero roots of ρ that collapse onto the vacuum are the vacuum itself.
    deduped.retain(|r| r.abs() > opts.dedupe_tol);
    Ok(deduped)
}

/// Whether the parabola through three equally spaced samples changes sign
/// between its outer points although the samples do not.
fn parabola_crosses_zero(left: f64, mid: f64, right: f64) -> bool {
    let curvature = left - 2.0 * mid + right;
    if curvature == 0.0 {
        return false;
    }
    let vertex_offset = (left - right) / (2.0 * curvature);
    if vertex_offset.abs() > 1.0 {
        return false;
    }
    let vertex = mid - (right - left).powi(2) / (8.0 * curvature);
    vertex * mid < 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub g0: f64,
    pub phi_s: f64,
    pub s_x: f64,
    pub super_radiant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisSweep {
    /// All fixed points at each grid value of g0.
    pub branches: Vec<Vec<BranchPoint>>,
    /// Adiabatic increase of g0 starting in the vacuum.
    pub forward: Vec<TracePoint>,
    /// Adiabatic decrease of g0 starting on the largest stable field; stored
    /// in increasing g0 order.
    pub backward: Vec<TracePoint>,
}

impl HysteresisSweep {
    /// First g0 at which the forward trace has left the vacuum.
    pub fn forward_jump(&self) -> Option<f64> {
        self.forward.iter().find(|t| t.super_radiant).map(|t| t.g0)
    }

    /// Smallest g0 at which the backward trace is still super-radiant.
    pub fn backward_drop(&self) -> Option<f64> {
        self.backward.iter().find(|t| t.super_radiant).map(|t| t.g0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// Evaluates `f` over `items` in order, optionally on the rayon pool.
pub(crate) fn map_grid<T: Sync, U: Send>(
    items: &[T],
    execution: Execution,
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    match execution {
        Execution::Serial => items.iter().map(f).collect(),
        Execution::Parallel => items.par_iter().map(f).collect(),
    }
}

fn trace_point(b: &BranchPoint) -> TracePoint {
    TracePoint {
        g0: b.g0,
        phi_s: b.phi_s,
        s_x: b.s_x,
        super_radiant: !b.is_vacuum(),
    }
}

/// Follows the stable fixed point nearest to the previous one.
fn follow<'a>(levels: impl Iterator<Item = &'a Vec<BranchPoint>>, start_high: bool) -> Vec<TracePoint> {
    let mut out = Vec::new();
    let mut current: Option<f64> = None;
    for roots in levels {
        let canonical: Vec<&BranchPoint> = roots.iter().filter(|b| b.phi_s >= 0.0).collect();
        let stable: Vec<&BranchPoint> = canonical.iter().copied().filter(|b| b.stable).collect();
        let pool = if stable.is_empty() { &canonical } else { &stable };
        let target = match current {
            Some(phi) => phi,
            None if start_high => f64::INFINITY,
            None => 0.0,
        };
        let chosen = pool
            .iter()
            .min_by(|a, b| {
                let da = (a.phi_s - target).abs();
                let db = (b.phi_s - target).abs();
                da.total_cmp(&db)
            })
            .copied()
            .unwrap_or(&roots[0]);
        current = Some(chosen.phi_s);
        out.push(trace_point(chosen));
    }
    out
}

pub fn sweep_hysteresis(
    params: &SystemParams,
    g0_grid: &[f64],
    opts: &FixedPointOptions,
    execution: Execution,
) -> Result<HysteresisSweep> {
    params.validate()?;
    if g0_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("g0_grid", "must be strictly increasing"));
    }
    let branches = map_grid(g0_grid, execution, |&g0| {
        find_fixed_points(&params.with_drive(g0), opts)
    })?;
    let forward = follow(branches.iter(), false);
    let mut backward = follow(branches.iter().rev(), true);
    backward.reverse();
    Ok(HysteresisSweep {
        branches,
        forward,
        backward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointOptions {
    /// Relative bisection tolerance on g0.
    pub rel_tol: f64,
    /// Upper end of the g0 search range, in units of the coupling.
    pub g0_max: f64,
    /// Relative gap below which g1 and g2 are reported as merged.
    pub merge_tol: f64,
    pub fixed_points: FixedPointOptions,
}

impl Default for CriticalPointOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            g0_max: 3.0,
            merge_tol: 1e-6,
            fixed_points: FixedPointOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    /// Drive at which the stable super-radiant branch appears.
    pub g1: f64,
    /// Drive at which the vacuum loses stability.
    pub g2: f64,
    /// The two coincide: the transition is continuous.
    pub merged: bool,
}

fn stable_super_radiant_count(params: &SystemParams, opts: &FixedPointOptions) -> Result<usize> {
    Ok(find_fixed_points(params, opts)?
        .iter()
        .filter(|b| b.stable && !b.is_vacuum())
        .count())
}

/// Lower (fold) and upper (vacuum-marginality) critical drives.
pub fn critical_points(params: &SystemParams, opts: &CriticalPointOptions) -> Result<CriticalPoints> {
    params.validate()?;
    let g0_max = opts.g0_max * params.coupling;
    let not_found = Error::CriticalPointNotFound { g0_max };

    let vacuum_coefficient = |g0: f64| -> Result<f64> {
        Ok(stability_coefficient(0.0, &params.with_drive(g0))?.m_consistent)
    };
    let c_max = vacuum_coefficient(g0_max)?;
    if c_max > 0.0 {
        return Err(not_found);
    }
    let c_zero = vacuum_coefficient(0.0)?;
    let g2 = bisect(0.0, c_zero, g0_max, opts.rel_tol * g0_max, &vacuum_coefficient)?;
    let g2 = refine_relative(g2, opts.rel_tol, &vacuum_coefficient)?;

    let count = |g0: f64| stable_super_radiant_count(&params.with_drive(g0), &opts.fixed_points);
    let mut hi = (g2 * (1.0 + 1e-7)).min(g0_max);
    let mut lo = 0.0;
    if count(hi)? == 0 {
        const STEPS: usize = 64;
        let start = hi;
        let mut found = None;
        for k in 1..=STEPS {
            let g = start + (g0_max - start) * k as f64 / STEPS as f64;
            if count(g)? > 0 {
                found = Some(g);
                break;
            }
            lo = g;
        }
        hi = found.ok_or(not_found)?;
    }
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if count(mid)? > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let g1 = hi.min(g2);
    Ok(CriticalPoints {
        g1,
        g2,
        merged: (g2 - g1) / g2 < opts.merge_tol,
    })
}

/// Tightens a bisection result for a decreasing function to a relative
/// bracket width.
fn refine_relative(g: f64, rel_tol: f64, f: &impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let width = 4.0 * rel_tol * g.max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (g - width, g + width);
    let mut f_lo = f(lo)?;
    // Widen until the sign change is enclosed.
    while f_lo * f(hi)? > 0.0 {
        lo -= width;
        hi += width;
        f_lo = f(lo)?;
    }
    bisect(lo, f_lo, hi, 0.5 * rel_tol * g, f)
}
