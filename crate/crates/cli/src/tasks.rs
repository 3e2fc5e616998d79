//! One function per subcommand; each writes its artifacts into the output
//! directory and returns what it wrote.

use std::path::Path;

use cavity_ising::fluctuations::{critical_exponent_fit, fluctuation_spectrum, CriticalSide, ExponentFit};
use cavity_ising::ising::ground_state_sx;
use cavity_ising::phase::{boundary_vs_parameter, detuning_minimum_check, merge_point, Axis, ScalingReport};
use cavity_ising::selfconsistency::{
    critical_points, find_fixed_points, sweep_hysteresis, BranchPoint, CriticalPointOptions, CriticalPoints,
    Execution,
};
use cavity_ising::validate::{run_checklist, OracleGrid, ValidateOptions};
use cavity_ising::{Error, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{write_json, write_table, Table};
use crate::{CliError, Format, RunConfig, RunSummary};

pub(crate) enum TaskError {
    Cli(CliError),
    /// The checklist ran but an item failed; its report was written.
    Checklist(RunSummary, String),
}

impl From<CliError> for TaskError {
    fn from(e: CliError) -> Self {
        TaskError::Cli(e)
    }
}

impl From<Error> for TaskError {
    fn from(e: Error) -> Self {
        TaskError::Cli(CliError::Numerical(e))
    }
}

type TaskResult = Result<RunSummary, TaskError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub g0: f64,
    pub phi_s: f64,
    pub s_x: f64,
    pub c_s_printed: f64,
    pub c_s_mconsistent: f64,
    pub stable: bool,
    pub cavity_phase: String,
    pub spin_phase: String,
    pub re_as: f64,
    pub im_as: f64,
}

impl Table for BranchRow {
    const COLUMNS: &'static [&'static str] = &[
        "g0",
        "phi_s",
        "s_x",
        "c_s_printed",
        "c_s_mconsistent",
        "stable",
        "cavity_phase",
        "spin_phase",
        "re_as",
        "im_as",
    ];
}

impl From<&BranchPoint> for BranchRow {
    fn from(b: &BranchPoint) -> Self {
        Self {
            g0: b.g0,
            phi_s: b.phi_s,
            s_x: b.s_x,
            c_s_printed: b.c_s_printed,
            c_s_mconsistent: b.c_s,
            stable: b.stable,
            cavity_phase: b.cavity_phase.to_string(),
            spin_phase: b.spin_phase.to_string(),
            re_as: b.a_s.re + 0.0,
            im_as: b.a_s.im + 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HysteresisRow {
    pub g0: f64,
    pub forward_phi_s: f64,
    pub forward_s_x: f64,
    pub backward_phi_s: f64,
    pub backward_s_x: f64,
}

impl Table for HysteresisRow {
    const COLUMNS: &'static [&'static str] =
        &["g0", "forward_phi_s", "forward_s_x", "backward_phi_s", "backward_s_x"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub axis: Axis,
    pub value: f64,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub merged: Option<bool>,
}

impl Table for PhaseRow {
    const COLUMNS: &'static [&'static str] = &["axis", "value", "g1", "g2", "merged"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctRow {
    pub g0: f64,
    /// Position of the fixed point in the root list at this drive (0 is the
    /// vacuum).
    pub branch: usize,
    pub re_omega1: f64,
    pub im_omega1: f64,
    pub re_omega2: f64,
    pub im_omega2: f64,
    /// Empty when divergent.
    pub n_fluct: Option<f64>,
    pub divergent: bool,
}

impl Table for FluctRow {
    const COLUMNS: &'static [&'static str] = &[
        "g0",
        "branch",
        "re_omega1",
        "im_omega1",
        "re_omega2",
        "im_omega2",
        "n_fluct",
        "divergent",
    ];
}

/// Critical drives, or `None` if there is no super-radiant branch below the
/// search limit.
fn optional_critical(p: &SystemParams, opts: &CriticalPointOptions) -> Result<Option<CriticalPoints>, Error> {
    match critical_points(p, opts) {
        Ok(c) => Ok(Some(c)),
        Err(Error::CriticalPointNotFound { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn describe(c: &Option<CriticalPoints>) -> String {
    match c {
        Some(c) => format!("g1 = {:.8}, g2 = {:.8}, merged = {}", c.g1, c.g2, c.merged),
        None => "no super-radiant branch in the search range".into(),
    }
}

#[derive(Serialize)]
struct SweepSummary {
    critical: Option<CriticalPoints>,
    forward_jump: Option<f64>,
    backward_drop: Option<f64>,
}

pub(crate) fn sweep(config: &RunConfig, out: &Path, format: Format) -> TaskResult {
    let p = config.system();
    let grid = config.sweep.values();
    let sweep = sweep_hysteresis(&p, &grid, &config.solver.fixed_points(), Execution::Parallel)?;
    let rows: Vec<BranchRow> = sweep.branches.iter().flatten().map(BranchRow::from).collect();
    let loop_rows: Vec<HysteresisRow> = sweep
        .forward
        .iter()
        .zip(&sweep.backward)
        .map(|(f, b)| HysteresisRow {
            g0: f.g0,
            forward_phi_s: f.phi_s,
            forward_s_x: f.s_x,
            backward_phi_s: b.phi_s,
            backward_s_x: b.s_x,
        })
        .collect();
    let critical = optional_critical(&p, &config.solver.critical())?;
    let summary = SweepSummary {
        critical,
        forward_jump: sweep.forward_jump(),
        backward_drop: sweep.backward_drop(),
    };
    let artifacts = vec![
        write_table(out, "sweep", &rows, format)?,
        write_table(out, "hysteresis", &loop_rows, format)?,
        write_json(out, "critical.json", &summary)?,
    ];
    let lines = vec![
        format!("{} fixed points over {} drive values", rows.len(), grid.len()),
        describe(&critical),
    ];
    Ok(RunSummary { artifacts, lines })
}

pub(crate) fn branches(config: &RunConfig, out: &Path, format: Format) -> TaskResult {
    let p = config.system();
    let opts = config.solver.fixed_points();
    let levels = config
        .branches
        .g0
        .par_iter()
        .map(|&g0| find_fixed_points(&p.with_drive(g0), &opts))
        .collect::<Result<Vec<_>, Error>>()?;
    let rows: Vec<BranchRow> = levels.iter().flatten().map(BranchRow::from).collect();
    let lines = levels
        .iter()
        .zip(&config.branches.g0)
        .map(|(roots, g0)| {
            let stable = roots.iter().filter(|b| b.stable).count();
            format!("g0 = {g0}: {} fixed points, {stable} stable", roots.len())
        })
        .collect();
    Ok(RunSummary {
        artifacts: vec![write_table(out, "branches", &rows, format)?],
        lines,
    })
}

#[derive(Serialize)]
struct ScalingArtifact {
    detuning_minimum: Option<ScalingReport>,
    merge_point: Option<f64>,
}

pub(crate) fn phase(config: &RunConfig, out: &Path, format: Format) -> TaskResult {
    let section = &config.phase;
    let base = SystemParams { size: section.size.0, ..config.system() };
    let opts = config.solver.critical();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &axis in &section.axes {
        let boundary = boundary_vs_parameter(&base, axis, &section.grid(axis), &opts, Execution::Parallel)?;
        let gaps = boundary.samples.iter().filter(|s| s.critical.is_none()).count();
        lines.push(format!("{axis}: {} samples, {gaps} without a boundary", boundary.samples.len()));
        rows.extend(boundary.samples.iter().map(|s| PhaseRow {
            axis,
            value: s.value,
            g1: s.critical.map(|c| c.g1),
            g2: s.critical.map(|c| c.g2),
            merged: s.critical.map(|c| c.merged),
        }));
    }
    let detuning_minimum = if section.eps.is_empty() {
        None
    } else {
        let tight = CriticalPointOptions { rel_tol: section.scaling_rel_tol, ..opts };
        let report = detuning_minimum_check(
            &base,
            &section.eps,
            &section.grid(Axis::Detuning),
            &tight,
            Execution::Parallel,
        )?;
        lines.push(format!(
            "detuning minimum: g1 at {}, g2 at {} (loss/2 = {}); residual ratios per halving {:?}",
            report.g1_argmin,
            report.g2_argmin,
            0.5 * report.loss,
            report.one_sided_ratios
        ));
        Some(report)
    };
    let merge = if section.locate_merge {
        let [lo, hi] = section.splitting_ratio_range;
        let m = merge_point(&base, lo, hi, section.merge_tol, &opts)?;
        lines.push(match m {
            Some(r) => format!("critical drives merge at splitting/coupling = {r:.4}"),
            None => "no merge inside the splitting range".into(),
        });
        m
    } else {
        None
    };
    let artifacts = vec![
        write_table(out, "phase", &rows, format)?,
        write_json(
            out,
            "scaling.json",
            &ScalingArtifact {
                detuning_minimum,
                merge_point: merge,
            },
        )?,
    ];
    Ok(RunSummary { artifacts, lines })
}

#[derive(Serialize)]
struct ExponentRecord {
    side: String,
    g_c: f64,
    slope: f64,
    r2: f64,
    trusted: bool,
    window: [f64; 2],
}

impl From<&ExponentFit> for ExponentRecord {
    fn from(f: &ExponentFit) -> Self {
        Self {
            side: f.side.to_string(),
            g_c: f.g_c,
            slope: f.slope,
            r2: f.r2,
            trusted: f.trusted,
            window: [f.window.lo, f.window.hi],
        }
    }
}

pub(crate) fn fluct(config: &RunConfig, out: &Path, format: Format) -> TaskResult {
    let p = config.system();
    let opts = config.solver.fixed_points();
    let grid = config.fluct.grid().values();
    let per_drive = grid
        .par_iter()
        .map(|&g0| {
            let q = p.with_drive(g0);
            find_fixed_points(&q, &opts)?
                .iter()
                .enumerate()
                .map(|(branch, b)| {
                    let s = fluctuation_spectrum(b, &q)?;
                    Ok(FluctRow {
                        g0,
                        branch,
                        re_omega1: s.omega[0].re,
                        im_omega1: s.omega[0].im,
                        re_omega2: s.omega[1].re,
                        im_omega2: s.omega[1].im,
                        n_fluct: s.n_fluct.value(),
                        divergent: s.n_fluct.is_divergent(),
                    })
                })
                .collect::<Result<Vec<FluctRow>, Error>>()
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let rows: Vec<FluctRow> = per_drive.into_iter().flatten().collect();

    let mut lines = vec![format!("{} spectra over {} drive values", rows.len(), grid.len())];
    let critical = optional_critical(&p, &config.solver.critical())?;
    let fits: Vec<ExponentRecord> = match critical {
        Some(c) => [CriticalSide::AtG2, CriticalSide::AtG1]
            .into_iter()
            .map(|side| {
                let fit = critical_exponent_fit(&p, side, &c, &config.fluct.window(), Execution::Parallel)?;
                lines.push(format!(
                    "exponent at {side}: slope {:.4}, r2 {:.5}{}",
                    fit.slope,
                    fit.r2,
                    if fit.trusted { "" } else { " (untrusted)" }
                ));
                Ok(ExponentRecord::from(&fit))
            })
            .collect::<Result<_, Error>>()?,
        None => {
            lines.push(describe(&critical));
            Vec::new()
        }
    };
    let artifacts = vec![
        write_table(out, "fluct", &rows, format)?,
        write_json(out, "exponents.json", &fits)?,
    ];
    Ok(RunSummary { artifacts, lines })
}

pub(crate) fn validate(config: &RunConfig, out: &Path) -> TaskResult {
    let section = &config.validate;
    let steps = (section.oracle_field_max / 0.1 + 1e-9).floor() as usize;
    let opts = ValidateOptions {
        oracle: OracleGrid {
            sizes: section.oracle_sizes.clone(),
            fields: (0..=steps).map(|k| 0.1 * k as f64).collect(),
            coupling: 1.0,
        },
        g0_grid: section.grid().values(),
    };
    let report = run_checklist(&config.system(), &opts, &ground_state_sx, Execution::Parallel)?;
    let lines: Vec<String> = report
        .items
        .iter()
        .map(|i| format!("{} {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail))
        .collect();
    let summary = RunSummary {
        artifacts: vec![write_json(out, "validate.json", &report)?],
        lines,
    };
    if report.passed() {
        Ok(summary)
    } else {
        let failed: Vec<&str> = report.items.iter().filter(|i| !i.passed).map(|i| i.name.as_str()).collect();
        Err(TaskError::Checklist(summary, failed.join(", ")))
    }
}
