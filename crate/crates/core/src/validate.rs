//! Cross-module consistency checklist.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact_diag::exact_diag_sx;
use crate::fluctuations::{eigenvalues_closed_form, eigenvalues_generic, stability_matrix};
use crate::ising::{ChainSize, IsingChainParams};
use crate::params::SystemParams;
use crate::phase::linspace;
use crate::selfconsistency::{
    critical_points, find_fixed_points, CriticalPointOptions, Execution, FixedPointOptions,
};

/// Maximum deviation tolerated between the fermionic solver and the oracle.
pub const ORACLE_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-12;
const PAIRING_TOL: f64 = 1e-8;
const PHASE_TOL: f64 = 1e-10;

/// A per-site `<σx>` solver, swappable so the checklist can be run against
/// deliberately broken implementations.
pub type SxSolver<'a> = dyn Fn(&IsingChainParams) -> Result<f64> + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Worst deviation observed, or the number of violations.
    pub metric: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub items: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    pub sizes: Vec<usize>,
    /// Values of δ/J and |b_x|/J.
    pub fields: Vec<f64>,
    pub coupling: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            sizes: vec![4, 8, 12],
            fields: (0..16).map(|k| 0.1 * k as f64).collect(),
            coupling: 1.0,
        }
    }
}

pub fn oracle_equivalence(solver: &SxSolver, grid: &OracleGrid) -> Result<CheckItem> {
    let j = grid.coupling;
    let cases: Vec<IsingChainParams> = grid
        .sizes
        .iter()
        .flat_map(|&n| {
            grid.fields.iter().flat_map(move |&d| {
                grid.fields
                    .iter()
                    .map(move |&b| IsingChainParams::new(d * j, b * j, j, ChainSize::Finite(n)))
            })
        })
        .collect();
    let deviations = cases
        .par_iter()
        .map(|p| Ok((solver(p)? - exact_diag_sx(p)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let (worst, at) = deviations
        .iter()
        .zip(&cases)
        .fold((0.0, None), |acc, (&d, p)| if d > acc.0 { (d, Some(p)) } else { acc });
    let detail = match at {
        Some(p) => format!(
            "{} cases, max |deviation| {worst:.3e} at delta = {}, b_x = {}, size = {}",
            cases.len(),
            p.delta,
            p.b_x,
            p.size
        ),
        None => format!("{} cases, exact agreement", cases.len()),
    };
    Ok(CheckItem {
        name: "oracle equivalence".into(),
        passed: worst <= ORACLE_TOL,
        metric: worst,
        detail,
    })
}

/// ω1 + ω2 = -κ at every fixed point of the sweep, for both eigensolvers.
pub fn trace_identity(params: &SystemParams, g0_grid: &[f64]) -> Result<CheckItem> {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for &g0 in g0_grid {
        let p = params.with_drive(g0);
        for branch in find_fixed_points(&p, &FixedPointOptions::default())? {
            let sm = stability_matrix(&branch, &p)?;
            let target = Complex64::new(-p.loss, 0.0);
            let (a, b) = eigenvalues_closed_form(&sm);
            let (c, d) = eigenvalues_generic(&sm.m);
            worst = worst.max((a + b - target).norm()).max((c + d - target).norm());
            points += 1;
        }
    }
    Ok(CheckItem {
        name: "trace identity".into(),
        passed: worst <= TRACE_TOL,
        metric: worst,
        detail: format!("{points} branch points, max |w1 + w2 + kappa| {worst:.3e}"),
    })
}

/// Every nonzero root has a mirror root with the same |C_s| and stability.
pub fn z2_pairing(params: &SystemParams, g0_grid: &[f64]) -> Result<CheckItem> {
    let mut violations = 0usize;
    let mut roots = 0usize;
    for &g0 in g0_grid {
        let branches = find_fixed_points(&params.with_drive(g0), &FixedPointOptions::default())?;
        for b in branches.iter().filter(|b| !b.is_vacuum()) {
            roots += 1;
            let paired = branches.iter().any(|m| {
                (m.phi_s + b.phi_s).abs() <= PAIRING_TOL
                    && (m.c_s.abs() - b.c_s.abs()).abs() <= PAIRING_TOL
                    && m.stable == b.stable
            });
            if !paired {
                violations += 1;
            }
        }
    }
    Ok(CheckItem {
        name: "Z2 pairing".into(),
        passed: violations == 0,
        metric: violations as f64,
        detail: format!("{roots} super-radiant roots, {violations} unpaired"),
    })
}

/// The drive phase rotates `a_s` and changes nothing else.
pub fn drive_phase_independence(params: &SystemParams, g0_grid: &[f64]) -> Result<CheckItem> {
    let phases = [0.0, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2];
    let mut worst: f64 = 0.0;
    let reference_crit = critical_points(&params.with_drive(0.0), &CriticalPointOptions::default())?;
    for &theta in &phases[1..] {
        let rotated = SystemParams { drive_phase: theta, ..*params };
        let crit = critical_points(&rotated, &CriticalPointOptions::default())?;
        worst = worst
            .max((crit.g1 - reference_crit.g1).abs())
            .max((crit.g2 - reference_crit.g2).abs());
        for &g0 in g0_grid {
            let base = find_fixed_points(&params.with_drive(g0), &FixedPointOptions::default())?;
            let turned = find_fixed_points(&rotated.with_drive(g0), &FixedPointOptions::default())?;
            if base.len() != turned.len() {
                worst = f64::INFINITY;
                continue;
            }
            let factor = Complex64::from_polar(1.0, theta - params.drive_phase);
            for (a, b) in base.iter().zip(&turned) {
                worst = worst
                    .max((a.phi_s - b.phi_s).abs())
                    .max((a.s_x - b.s_x).abs())
                    .max((a.c_s - b.c_s).abs())
                    .max((a.a_s * factor - b.a_s).norm());
            }
        }
    }
    Ok(CheckItem {
        name: "drive-phase independence".into(),
        passed: worst <= PHASE_TOL,
        metric: worst,
        detail: format!("phases 0, pi/4, pi/2; max deviation {worst:.3e}"),
    })
}

/// Both eigenvalues decay exactly when the stability coefficient is
/// positive; marginal points with |C_s| below `1e-9` are skipped.
pub fn stability_agreement(params: &SystemParams, g0_grid: &[f64]) -> Result<CheckItem> {
    let mut violations = 0usize;
    let mut checked = 0usize;
    for &g0 in g0_grid {
        let p = params.with_drive(g0);
        for b in find_fixed_points(&p, &FixedPointOptions::default())? {
            if b.c_s.abs() < 1e-9 {
                continue;
            }
            let (w0, w1) = eigenvalues_closed_form(&stability_matrix(&b, &p)?);
            checked += 1;
            if (w0.re < 0.0 && w1.re < 0.0) != (b.c_s > 0.0) {
                violations += 1;
            }
        }
    }
    Ok(CheckItem {
        name: "stability agreement".into(),
        passed: violations == 0,
        metric: violations as f64,
        detail: format!("{checked} branch points, {violations} disagreements"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub oracle: OracleGrid,
    pub g0_grid: Vec<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            oracle: OracleGrid::default(),
            g0_grid: linspace(0.0, 1.2, 25),
        }
    }
}

pub fn run_checklist(
    params: &SystemParams,
    opts: &ValidateOptions,
    solver: &SxSolver,
    execution: Execution,
) -> Result<ValidationReport> {
    params.validate()?;
    let checks: Vec<Box<dyn Fn() -> Result<CheckItem> + Sync + '_>> = vec![
        Box::new(|| oracle_equivalence(solver, &opts.oracle)),
        Box::new(|| trace_identity(params, &opts.g0_grid)),
        Box::new(|| z2_pairing(params, &opts.g0_grid)),
        Box::new(|| drive_phase_independence(params, &opts.g0_grid)),
        Box::new(|| stability_agreement(params, &opts.g0_grid)),
    ];
    let items = crate::selfconsistency::map_grid(&checks, execution, |check| check())?;
    Ok(ValidationReport { items })
}
