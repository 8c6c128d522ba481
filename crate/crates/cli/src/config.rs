//! Experiment configuration: TOML on disk, JSON mirror next to results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dwave::duhamel::{DuhamelProbe, DuhamelSpec};
use dwave::green::SampleBox;
use dwave::solver::{BoundaryMode, Grid, InitialDataSpec, SolverConfig};
use dwave::{FarField, PressureLaw};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pressure: PressureSection,
    pub far_field: FarFieldSection,
    pub profile: ProfileSection,
    pub expansion: ExpansionSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial_data: InitialDataSpec,
    pub schedule: ScheduleSection,
    pub analysis: AnalysisSection,
    pub integrity: IntegritySection,
    pub kernel_check: KernelCheckSection,
    pub duhamel: DuhamelSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureSection {
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarFieldSection {
    pub v_minus: f64,
    pub v_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub l_xi: f64,
    /// Residual tolerance for the wave and the correction ODE.
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSection {
    /// Compare against `v*` (true) or the bare wave (false).
    pub corrected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: f64,
    pub dissipation: f64,
    pub boundary: BoundaryMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub t_end: f64,
    /// Log-spaced snapshots on `[t_first, t_end]`; `t = 0` is always kept.
    pub snapshots: usize,
    pub t_first: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub fit_window: (f64, f64),
    /// Window and sample count for the residual-rate fits.
    pub residual_window: (f64, f64),
    pub residual_samples: usize,
    /// Snapshots whose outer nodes leave the far field by more are dropped.
    pub boundary_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegritySection {
    pub equilibrium_steps: usize,
    /// Half-width of the convergence-study domain.
    pub study_half_width: f64,
    pub time_study_cells: usize,
    /// Coarsest of the three spatial grids.
    pub space_study_cells: usize,
    pub study_t_end: f64,
    /// Fixed step of the spatial study.
    pub study_dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCheckSection {
    pub fit_samples: usize,
    pub holdout_samples: usize,
    pub sample_box: SampleBox,
    pub fd_step: f64,
    pub lp_times: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuhamelSection {
    pub probe_times: Vec<f64>,
    /// Probe points in the similarity variable, `x = xi sqrt(1+t)`.
    pub probe_xi: Vec<f64>,
    pub base_panels: usize,
    pub levels: usize,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20240917,
            pressure: PressureSection::default(),
            far_field: FarFieldSection::default(),
            profile: ProfileSection::default(),
            expansion: ExpansionSection::default(),
            grid: GridSection::default(),
            solver: SolverSection::default(),
            initial_data: InitialDataSpec::default(),
            schedule: ScheduleSection::default(),
            analysis: AnalysisSection::default(),
            integrity: IntegritySection::default(),
            kernel_check: KernelCheckSection::default(),
            duhamel: DuhamelSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for PressureSection {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl Default for FarFieldSection {
    fn default() -> Self {
        Self {
            v_minus: 1.0,
            v_plus: 1.1,
        }
    }
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { l_xi: 12.0, tol: 1e-10 }
    }
}

impl Default for ExpansionSection {
    fn default() -> Self {
        Self { corrected: true }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: -600.0,
            x_max: 600.0,
            h: 0.05,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            cfl: d.cfl,
            dissipation: d.dissipation,
            boundary: d.boundary,
        }
    }
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            t_end: 400.0,
            snapshots: 80,
            t_first: 1.0,
        }
    }
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fit_window: (100.0, 400.0),
            residual_window: (10.0, 1000.0),
            residual_samples: 50,
            boundary_tol: 1e-10,
        }
    }
}

impl Default for IntegritySection {
    fn default() -> Self {
        Self {
            equilibrium_steps: 100_000,
            study_half_width: 20.0,
            time_study_cells: 800,
            space_study_cells: 400,
            study_t_end: 1.0,
            study_dt: 2e-3,
        }
    }
}

impl Default for KernelCheckSection {
    fn default() -> Self {
        Self {
            fit_samples: 10_000,
            holdout_samples: 10_000,
            sample_box: SampleBox::default(),
            fd_step: 0.01,
            lp_times: [1.0, 10.0, 100.0],
        }
    }
}

impl Default for DuhamelSection {
    fn default() -> Self {
        Self {
            probe_times: vec![25.0, 50.0, 100.0],
            probe_xi: vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            base_panels: 32,
            levels: 3,
            cutoff: 40.0,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// One failed invariant, named by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Fastest characteristic speed allowed for in the boundary check.
const SPEED_BOUND: f64 = 1.19;

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Config(vec![Violation {
            field: "<file>".into(),
            message: e.to_string(),
        }]))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn law(&self) -> PressureLaw {
        PressureLaw::new(self.pressure.gamma).expect("validated")
    }

    pub fn far(&self) -> FarField {
        FarField::new(self.far_field.v_minus, self.far_field.v_plus).expect("validated")
    }

    pub fn grid(&self) -> Grid {
        Grid::with_spacing(self.grid.x_min, self.grid.x_max, self.grid.h).expect("validated")
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.solver.cfl,
            dissipation: self.solver.dissipation,
            boundary: self.solver.boundary,
        }
    }

    /// Snapshot times: `0` plus the log-spaced schedule.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut t = vec![0.0];
        t.extend(dwave::solver::log_spaced_times(
            self.schedule.t_first,
            self.schedule.t_end,
            self.schedule.snapshots,
        ));
        t
    }

    pub fn duhamel_spec(&self) -> DuhamelSpec {
        DuhamelSpec {
            probes: self
                .duhamel
                .probe_times
                .iter()
                .map(|&t| DuhamelProbe {
                    t,
                    xs: self.duhamel.probe_xi.iter().map(|xi| xi * (1.0 + t).sqrt()).collect(),
                })
                .collect(),
            base_panels: self.duhamel.base_panels,
            levels: self.duhamel.levels,
            cutoff: self.duhamel.cutoff,
        }
    }

    /// Every violated invariant; empty when the config is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut bad = |field: &str, message: String| {
            v.push(Violation {
                field: field.into(),
                message,
            })
        };
        if !(self.pressure.gamma > 0.0 && self.pressure.gamma.is_finite()) {
            bad("pressure.gamma", format!("must be positive, got {}", self.pressure.gamma));
        }
        for (name, val) in [("far_field.v_minus", self.far_field.v_minus), ("far_field.v_plus", self.far_field.v_plus)] {
            if !(val > 0.0 && val.is_finite()) {
                bad(name, format!("must be positive, got {val}"));
            }
        }
        if !(self.profile.l_xi > 0.0) {
            bad("profile.l_xi", format!("must be positive, got {}", self.profile.l_xi));
        }
        if !(self.profile.tol > 0.0) {
            bad("profile.tol", format!("must be positive, got {}", self.profile.tol));
        }
        let g = &self.grid;
        if !(g.x_min < g.x_max) {
            bad("grid", format!("need x_min < x_max, got [{}, {}]", g.x_min, g.x_max));
        }
        if !(g.h > 0.0) {
            bad("grid.h", format!("must be positive, got {}", g.h));
        } else if g.x_min < g.x_max && (g.x_max - g.x_min) / g.h < 16.0 {
            bad("grid.h", "fewer than 16 cells".into());
        }
        if !(self.solver.cfl > 0.0 && self.solver.cfl <= 1.0) {
            bad("solver.cfl", format!("must lie in (0, 1], got {}", self.solver.cfl));
        }
        if !(self.solver.dissipation >= 0.0) {
            bad("solver.dissipation", format!("must be nonnegative, got {}", self.solver.dissipation));
        }
        let d = &self.initial_data;
        if !(d.eps >= 0.0) {
            bad("initial_data.eps", format!("must be nonnegative, got {}", d.eps));
        }
        for (name, w) in [("initial_data.phi_width", d.phi_width), ("initial_data.psi_width", d.psi_width)] {
            if !(w > 0.0) {
                bad(name, format!("must be positive, got {w}"));
            } else if g.h > 0.0 && w < 16.0 * g.h {
                bad(name, format!("{w} is resolved by fewer than 16 cells of {}", g.h));
            }
        }
        let s = &self.schedule;
        if !(s.t_end > 0.0) {
            bad("schedule.t_end", format!("must be positive, got {}", s.t_end));
        }
        if !(s.t_first > 0.0 && s.t_first < s.t_end) {
            bad("schedule.t_first", format!("must lie in (0, t_end), got {}", s.t_first));
        }
        if s.snapshots < 2 {
            bad("schedule.snapshots", format!("need at least 2, got {}", s.snapshots));
        }
        // characteristic cone from the data support against the domain
        let (lo, hi) = d.support();
        let reach = SPEED_BOUND * s.t_end;
        if g.x_min < g.x_max && (lo - reach < g.x_min || hi + reach > g.x_max) {
            bad(
                "schedule.t_end",
                format!(
                    "signals from [{lo:.1}, {hi:.1}] travel {reach:.1} by t = {}, past the domain [{}, {}]",
                    s.t_end, g.x_min, g.x_max
                ),
            );
        }
        let a = &self.analysis;
        if !(a.fit_window.0 < a.fit_window.1) {
            bad("analysis.fit_window", "need t_lo < t_hi".into());
        }
        if !(a.residual_window.0 < a.residual_window.1 && a.residual_window.0 >= 0.0) {
            bad("analysis.residual_window", "need 0 <= t_lo < t_hi".into());
        }
        if a.residual_samples < dwave::analysis::MIN_FIT_SAMPLES {
            bad("analysis.residual_samples", format!("need at least {}", dwave::analysis::MIN_FIT_SAMPLES));
        }
        let i = &self.integrity;
        if !(i.study_half_width > 0.0 && i.study_t_end > 0.0 && i.study_dt > 0.0) {
            bad("integrity", "study sizes must be positive".into());
        }
        let width = d.phi_width.min(d.psi_width);
        for (name, cells) in [
            ("integrity.time_study_cells", i.time_study_cells),
            ("integrity.space_study_cells", i.space_study_cells),
        ] {
            let h = 2.0 * i.study_half_width / cells as f64;
            if cells < 16 || !(h * 16.0 <= width) {
                bad(name, format!("{cells} cells resolve the data width {width} by fewer than 16 cells"));
            }
        }
        if i.equilibrium_steps == 0 {
            bad("integrity.equilibrium_steps", "must be positive".into());
        }
        let k = &self.kernel_check;
        if k.fit_samples == 0 || k.holdout_samples == 0 {
            bad("kernel_check", "sample sets must be nonempty".into());
        }
        if !(k.fd_step > 0.0 && k.fd_step <= 0.125) {
            bad("kernel_check.fd_step", format!("must lie in (0, 0.125], got {}", k.fd_step));
        }
        let bx = &k.sample_box;
        if !(bx.t_min > 0.0 && bx.t_min < bx.t_max && bx.s_gap > 0.0 && bx.s_gap < 1.0) {
            bad("kernel_check.sample_box", "need 0 < t_min < t_max and 0 < s_gap < 1".into());
        }
        let du = &self.duhamel;
        if du.probe_times.is_empty() || du.probe_xi.is_empty() {
            bad("duhamel", "need probe times and points".into());
        }
        if du.probe_times.iter().any(|&t| !(t > 0.0)) {
            bad("duhamel.probe_times", "must be positive".into());
        }
        if 2 * du.base_panels < dwave::duhamel::MIN_STATES {
            bad(
                "duhamel.base_panels",
                format!("need at least {} states on [0, t]", dwave::duhamel::MIN_STATES),
            );
        }
        if du.levels == 0 {
            bad("duhamel.levels", "need at least one level".into());
        }
        if self.output.dir.is_empty() {
            bad("output.dir", "must not be empty".into());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let c = ExperimentConfig::default();
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        let back = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn long_horizon_breaks_boundary_safety() {
        let mut c = ExperimentConfig::default();
        c.schedule.t_end = 4000.0;
        let v = c.validate();
        assert!(v.iter().any(|e| e.field == "schedule.t_end"), "{v:?}");
    }

    #[test]
    fn field_level_messages() {
        let mut c = ExperimentConfig::default();
        c.solver.cfl = 1.5;
        c.far_field.v_minus = -1.0;
        let v = c.validate();
        assert!(v.iter().any(|e| e.field == "solver.cfl"));
        assert!(v.iter().any(|e| e.field == "far_field.v_minus"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[grid]\nhh = 0.1\n").is_err());
        let c = ExperimentConfig::from_toml_str("seed = 5\n[grid]\nh = 0.1\n").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.grid.x_max, 600.0);
    }
}
