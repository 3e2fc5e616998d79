//! Run configuration read from a TOML file. Every section is optional and
//! unknown keys are rejected.

use std::path::Path;

use cavity_ising::fluctuations::FitWindow;
use cavity_ising::ising::ChainSize;
use cavity_ising::phase::{linspace, Axis};
use cavity_ising::selfconsistency::{CriticalPointOptions, FixedPointOptions};
use cavity_ising::SystemParams;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Chain length as written in the config: a site count or `"thermodynamic"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeSpec(pub ChainSize);

impl Serialize for SizeSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            ChainSize::Finite(n) => s.serialize_u64(n as u64),
            ChainSize::ThermodynamicLimit => s.serialize_str("thermodynamic"),
        }
    }
}

impl<'de> Deserialize<'de> for SizeSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Sites(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Sites(n) => Ok(SizeSpec(ChainSize::Finite(n as usize))),
            Raw::Name(s) if s == "thermodynamic" => Ok(SizeSpec(ChainSize::ThermodynamicLimit)),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "size must be an even site count or \"thermodynamic\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub detuning: f64,
    pub loss: f64,
    pub splitting: f64,
    pub coupling: f64,
    pub size: SizeSpec,
    pub drive_phase: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = SystemParams::baseline();
        Self {
            detuning: p.detuning,
            loss: p.loss,
            splitting: p.splitting,
            coupling: p.coupling,
            size: SizeSpec(p.size),
            drive_phase: p.drive_phase,
        }
    }
}

impl ParamsSection {
    pub fn system(&self) -> SystemParams {
        SystemParams {
            detuning: self.detuning,
            loss: self.loss,
            splitting: self.splitting,
            coupling: self.coupling,
            drive: 0.0,
            size: self.size.0,
            drive_phase: self.drive_phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub grid_points: usize,
    pub root_tol: f64,
    pub dedupe_tol: f64,
    pub refine_folds: bool,
    /// Relative tolerance of the critical-drive bisections.
    pub critical_rel_tol: f64,
    /// Upper end of the critical-drive search, in units of J.
    pub g0_max: f64,
    pub merge_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let fp = FixedPointOptions::default();
        let cp = CriticalPointOptions::default();
        Self {
            grid_points: fp.grid_points,
            root_tol: fp.root_tol,
            dedupe_tol: fp.dedupe_tol,
            refine_folds: fp.refine_folds,
            critical_rel_tol: cp.rel_tol,
            g0_max: cp.g0_max,
            merge_tol: cp.merge_tol,
        }
    }
}

impl SolverSection {
    pub fn fixed_points(&self) -> FixedPointOptions {
        FixedPointOptions {
            grid_points: self.grid_points,
            root_tol: self.root_tol,
            dedupe_tol: self.dedupe_tol,
            refine_folds: self.refine_folds,
        }
    }

    pub fn critical(&self) -> CriticalPointOptions {
        CriticalPointOptions {
            rel_tol: self.critical_rel_tol,
            g0_max: self.g0_max,
            merge_tol: self.merge_tol,
            fixed_points: self.fixed_points(),
        }
    }
}

/// Evenly spaced drive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveGrid {
    pub g0_min: f64,
    pub g0_max: f64,
    pub points: usize,
}

impl Default for DriveGrid {
    fn default() -> Self {
        Self {
            g0_min: 0.0,
            g0_max: 1.5,
            points: 301,
        }
    }
}

impl DriveGrid {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.g0_min, self.g0_max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchesSection {
    pub g0: Vec<f64>,
}

impl Default for BranchesSection {
    fn default() -> Self {
        Self {
            g0: vec![0.5, 0.87, 1.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub axes: Vec<Axis>,
    pub points: usize,
    pub detuning_range: [f64; 2],
    pub loss_range: [f64; 2],
    pub splitting_ratio_range: [f64; 2],
    /// Chain size for the boundaries, overriding `[params].size`.
    pub size: SizeSpec,
    /// Offsets from Δ = κ/2 for the scaling check.
    pub eps: Vec<f64>,
    pub scaling_rel_tol: f64,
    /// Locate the δ/J at which the two critical drives merge.
    pub locate_merge: bool,
    pub merge_tol: f64,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            axes: vec![Axis::Detuning, Axis::Loss, Axis::SplittingRatio],
            points: 40,
            detuning_range: [0.05, 2.0],
            loss_range: [0.05, 2.0],
            splitting_ratio_range: [0.1, 2.0],
            size: SizeSpec(ChainSize::ThermodynamicLimit),
            eps: vec![0.01, 0.02, 0.04],
            scaling_rel_tol: 1e-12,
            locate_merge: true,
            merge_tol: 1e-4,
        }
    }
}

impl PhaseSection {
    pub fn grid(&self, axis: Axis) -> Vec<f64> {
        let [lo, hi] = match axis {
            Axis::Detuning => self.detuning_range,
            Axis::Loss => self.loss_range,
            Axis::SplittingRatio => self.splitting_ratio_range,
        };
        linspace(lo, hi, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctSection {
    pub g0_min: f64,
    pub g0_max: f64,
    pub points: usize,
    pub window_lo: f64,
    pub window_hi: f64,
    pub window_samples: usize,
}

impl Default for FluctSection {
    fn default() -> Self {
        let w = FitWindow::default();
        let g = DriveGrid::default();
        Self {
            g0_min: g.g0_min,
            g0_max: g.g0_max,
            points: g.points,
            window_lo: w.lo,
            window_hi: w.hi,
            window_samples: w.samples,
        }
    }
}

impl FluctSection {
    pub fn grid(&self) -> DriveGrid {
        DriveGrid {
            g0_min: self.g0_min,
            g0_max: self.g0_max,
            points: self.points,
        }
    }

    pub fn window(&self) -> FitWindow {
        FitWindow {
            lo: self.window_lo,
            hi: self.window_hi,
            samples: self.window_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    pub oracle_sizes: Vec<usize>,
    /// Largest δ/J and |b_x|/J of the oracle grid, sampled in steps of 0.1.
    pub oracle_field_max: f64,
    pub g0_min: f64,
    pub g0_max: f64,
    pub points: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            oracle_sizes: vec![4, 8, 12],
            oracle_field_max: 1.5,
            g0_min: 0.0,
            g0_max: 1.2,
            points: 25,
        }
    }
}

impl ValidateSection {
    pub fn grid(&self) -> DriveGrid {
        DriveGrid {
            g0_min: self.g0_min,
            g0_max: self.g0_max,
            points: self.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub solver: SolverSection,
    pub sweep: DriveGrid,
    pub branches: BranchesSection,
    pub phase: PhaseSection,
    pub fluct: FluctSection,
    pub validate: ValidateSection,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_grid(name: &str, grid: &DriveGrid) -> Result<(), CliError> {
    if grid.points == 0 {
        return Err(config_error(format!("[{name}] points must be positive")));
    }
    if !(grid.g0_min >= 0.0 && grid.g0_max.is_finite()) {
        return Err(config_error(format!("[{name}] drive values must be finite and >= 0")));
    }
    if grid.points > 1 && !(grid.g0_max > grid.g0_min) {
        return Err(config_error(format!("[{name}] g0_max must exceed g0_min")));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn system(&self) -> SystemParams {
        self.params.system()
    }

    /// Checks every physical field and grid before any computation runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: cavity_ising::Error| config_error(e.to_string());
        self.system().validate().map_err(invalid)?;
        SystemParams { size: self.phase.size.0, ..self.system() }
            .validate()
            .map_err(invalid)?;
        let s = &self.solver;
        if s.grid_points < 3 || !(s.root_tol > 0.0) || !(s.dedupe_tol > 0.0) {
            return Err(config_error("[solver] needs grid_points >= 3 and positive tolerances"));
        }
        if !(s.critical_rel_tol > 0.0 && s.g0_max > 0.0 && s.merge_tol > 0.0) {
            return Err(config_error("[solver] critical_rel_tol, g0_max and merge_tol must be positive"));
        }
        check_grid("sweep", &self.sweep)?;
        check_grid("fluct", &self.fluct.grid())?;
        check_grid("validate", &self.validate.grid())?;
        if self.branches.g0.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(config_error("[branches] drive values must be finite and >= 0"));
        }
        let p = &self.phase;
        if p.points == 0 {
            return Err(config_error("[phase] points must be positive"));
        }
        for (name, [lo, hi]) in [
            ("detuning_range", p.detuning_range),
            ("loss_range", p.loss_range),
            ("splitting_ratio_range", p.splitting_ratio_range),
        ] {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(config_error(format!("[phase] {name} must satisfy 0 <= lo <= hi")));
            }
        }
        if !(p.detuning_range[0] > 0.0) {
            return Err(config_error("[phase] detuning_range must exclude 0"));
        }
        if p.eps.iter().any(|e| !(*e >= 0.0 && *e < 0.5 * self.params.loss)) {
            return Err(config_error("[phase] eps values must lie in [0, loss/2)"));
        }
        let w = self.fluct.window();
        if !(w.lo > 0.0 && w.hi > w.lo && w.hi < 1.0 && w.samples >= 2) {
            return Err(config_error("[fluct] window needs 0 < window_lo < window_hi < 1 and >= 2 samples"));
        }
        if self.validate.oracle_sizes.iter().any(|&n| n < 2 || n % 2 == 1 || n > cavity_ising::exact_diag::MAX_SITES) {
            return Err(config_error(format!(
                "[validate] oracle sizes must be even and between 2 and {}",
                cavity_ising::exact_diag::MAX_SITES
            )));
        }
        Ok(())
    }
}
