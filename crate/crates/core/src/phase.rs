//! Critical drives across parameter axes and the detuning scaling law.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::SystemParams;
use crate::selfconsistency::{critical_points, map_grid, CriticalPointOptions, CriticalPoints, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Detuning,
    Loss,
    /// δ/J.
    SplittingRatio,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Detuning => "detuning",
            Axis::Loss => "loss",
            Axis::SplittingRatio => "splitting_ratio",
        })
    }
}

impl Axis {
    pub fn apply(self, base: &SystemParams, value: f64) -> Result<SystemParams> {
        let p = match self {
            Axis::Detuning => {
                if !(value > 0.0) {
                    return Err(invalid("detuning", format!("axis values must be > 0, got {value}")));
                }
                SystemParams { detuning: value, ..*base }
            }
            Axis::Loss => SystemParams { loss: value, ..*base },
            Axis::SplittingRatio => SystemParams {
                splitting: value * base.coupling,
                ..*base
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// 40 evenly spaced values over the default range of the axis.
    pub fn default_grid(self) -> Vec<f64> {
        let (lo, hi) = match self {
            Axis::Detuning | Axis::Loss => (0.05, 2.0),
            Axis::SplittingRatio => (0.1, 2.0),
        };
        linspace(lo, hi, 40)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// One point of a phase boundary; `critical` is `None` where no
/// super-radiant branch exists in the searched drive range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub value: f64,
    pub critical: Option<CriticalPoints>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub axis: Axis,
    pub samples: Vec<BoundarySample>,
}

impl PhaseBoundary {
    pub fn g1(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.critical.map(|c| c.g1)).collect()
    }

    pub fn g2(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.critical.map(|c| c.g2)).collect()
    }
}

pub fn boundary_vs_parameter(
    base: &SystemParams,
    axis: Axis,
    grid: &[f64],
    opts: &CriticalPointOptions,
    execution: Execution,
) -> Result<PhaseBoundary> {
    let samples = map_grid(grid, execution, |&value| {
        let p = axis.apply(base, value)?;
        let critical = match critical_points(&p, opts) {
            Ok(c) => Some(c),
            Err(Error::CriticalPointNotFound { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(BoundarySample { value, critical })
    })?;
    Ok(PhaseBoundary { axis, samples })
}

/// Smallest δ/J in `[lo, hi]` at which g1 and g2 merge, located by bisection
/// to `tol`. `None` if the endpoints do not bracket the merge.
pub fn merge_point(
    base: &SystemParams,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &CriticalPointOptions,
) -> Result<Option<f64>> {
    let merged = |ratio: f64| -> Result<bool> {
        let p = Axis::SplittingRatio.apply(base, ratio)?;
        Ok(critical_points(&p, opts)?.merged)
    };
    if merged(lo)? || !merged(hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if merged(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Scaling check at one offset ε from Δ = κ/2. Residuals are signed and
/// relative: `g(κ/2 ± ε) sqrt(1 - 2ε²/κ²) / g(κ/2) - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub eps: f64,
    pub g1_plus: f64,
    pub g1_minus: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    /// Mean of the two one-sided residuals; odd orders in ε cancel.
    pub residual_symmetric: f64,
    pub g2_residual_plus: f64,
    pub g2_residual_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub loss: f64,
    pub delta_grid: Vec<f64>,
    pub g1_argmin: f64,
    pub g2_argmin: f64,
    pub grid_step: f64,
    /// Both minima lie within one grid step of κ/2.
    pub argmin_ok: bool,
    pub g1_center: f64,
    pub g2_center: f64,
    /// Samples in increasing ε.
    pub samples: Vec<ScalingSample>,
    /// `|r(2ε)| / |r(ε)|` of the larger one-sided residual for consecutive
    /// samples, normalized per halving of ε.
    pub one_sided_ratios: Vec<f64>,
    pub symmetric_ratios: Vec<f64>,
    /// One-sided residual magnitudes grow with ε.
    pub monotone: bool,
}

fn argmin(grid: &[f64], values: &[f64]) -> f64 {
    let k = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    grid[k]
}

/// Locates the detuning minimum of g1 and g2 on `delta_grid` and checks the
/// scaling `g(κ/2 ± ε) = g(κ/2) / sqrt(1 - 2ε²/κ²)` at each `ε` of `eps_list`.
pub fn detuning_minimum_check(
    base: &SystemParams,
    eps_list: &[f64],
    delta_grid: &[f64],
    opts: &CriticalPointOptions,
    execution: Execution,
) -> Result<ScalingReport> {
    base.validate()?;
    let kappa = base.loss;
    if !(kappa > 0.0) {
        return Err(invalid("loss", "the detuning minimum needs κ > 0"));
    }
    if delta_grid.len() < 2 {
        return Err(invalid("delta_grid", "need at least two values"));
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(f64::total_cmp);
    if eps.iter().any(|&e| !(e >= 0.0 && e < 0.5 * kappa)) {
        return Err(invalid("eps_list", "offsets must lie in [0, κ/2)"));
    }

    let at = |delta: f64| critical_points(&SystemParams { detuning: delta, ..*base }, opts);
    let grid_points = map_grid(delta_grid, execution, |&d| at(d))?;
    let g1s: Vec<f64> = grid_points.iter().map(|c| c.g1).collect();
    let g2s: Vec<f64> = grid_points.iter().map(|c| c.g2).collect();
    let g1_argmin = argmin(delta_grid, &g1s);
    let g2_argmin = argmin(delta_grid, &g2s);
    let grid_step = delta_grid
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let centre = 0.5 * kappa;
    let argmin_ok = (g1_argmin - centre).abs() <= grid_step * (1.0 + 1e-9)
        && (g2_argmin - centre).abs() <= grid_step * (1.0 + 1e-9);

    let c0 = at(centre)?;
    let pairs = map_grid(&eps, execution, |&e| Ok((at(centre + e)?, at(centre - e)?)))?;
    let samples: Vec<ScalingSample> = eps
        .iter()
        .zip(&pairs)
        .map(|(&e, (plus, minus))| {
            let factor = (1.0 - 2.0 * e * e / (kappa * kappa)).sqrt();
            let residual_plus = plus.g1 * factor / c0.g1 - 1.0;
            let residual_minus = minus.g1 * factor / c0.g1 - 1.0;
            ScalingSample {
                eps: e,
                g1_plus: plus.g1,
                g1_minus: minus.g1,
                residual_plus,
                residual_minus,
                residual_symmetric: 0.5 * (residual_plus + residual_minus),
                g2_residual_plus: plus.g2 * factor / c0.g2 - 1.0,
                g2_residual_minus: minus.g2 * factor / c0.g2 - 1.0,
            }
        })
        .collect();

    let one_sided = |s: &ScalingSample| s.residual_plus.abs().max(s.residual_minus.abs());
    let ratios = |f: &dyn Fn(&ScalingSample) -> f64| -> Vec<f64> {
        samples
            .windows(2)
            .map(|w| {
                let octaves = (w[1].eps / w[0].eps).log2();
                (f(&w[1]) / f(&w[0])).powf(1.0 / octaves)
            })
            .collect()
    };
    let one_sided_ratios = ratios(&one_sided);
    let symmetric_ratios = ratios(&|s: &ScalingSample| s.residual_symmetric.abs());
    let monotone = samples.windows(2).all(|w| one_sided(&w[1]) >= one_sided(&w[0]));

    Ok(ScalingReport {
        loss: kappa,
        delta_grid: delta_grid.to_vec(),
        g1_argmin,
        g2_argmin,
        grid_step,
        argmin_ok,
        g1_center: c0.g1,
        g2_center: c0.g2,
        samples,
        one_sided_ratios,
        symmetric_ratios,
        monotone,
    })
}
