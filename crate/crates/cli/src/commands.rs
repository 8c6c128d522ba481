//! Subcommands. Each writes its artifacts under the output directory and
//! returns the acceptance criteria it settles.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use dwave::analysis::{compute_norms, residual_rates, weighted_norm_history, DecayFit, NormField, ResidualRates};
use dwave::correction::{g1_closed_form, ExpansionProfile};
use dwave::duhamel::{duhamel_reconstruct, DuhamelProbe, DuhamelReport, DuhamelSpec};
use dwave::green::{
    eval_rg, fit_kernel_bound, gd_lp_scaling, kernel_samples, theta_one_sided, BoundFit, KernelContext, LpScalingRow,
};
use dwave::profile::{certify_tails, solve_diffusion_wave, TailConstants};
use dwave::solver::{
    make_initial_data, perturbation_mass, space_convergence, time_convergence, ConvergenceStudy, Grid, InitialDataSpec,
    SimState, Solver,
};
use dwave::FarField;

use crate::output::{self, read_json, write_json};
use crate::{Check, CliError, CriterionResult, ExperimentConfig};

/// Validated config plus where to write.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    /// Worker threads for sampling; 0 picks the machine's parallelism.
    pub threads: usize,
}

impl RunContext {
    /// Validate, create the output directory and mirror the config as JSON.
    pub fn new(config: ExperimentConfig, out: PathBuf, threads: usize) -> Result<Self, CliError> {
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(CliError::Config(violations));
        }
        fs::create_dir_all(&out)?;
        write_json(&out.join("config.json"), &config)?;
        Ok(Self { config, out, threads })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Wave and correction for the configured far field, with the
    /// correction switched off when the bare wave is requested.
    pub fn expansion(&self) -> Result<ExpansionProfile, CliError> {
        let c = &self.config;
        let exp = ExpansionProfile::solve(&c.law(), &c.far(), c.profile.l_xi, c.profile.tol)?;
        Ok(if c.expansion.corrected { exp } else { exp.bare() })
    }

    fn corrected_expansion(&self) -> Result<ExpansionProfile, CliError> {
        let c = &self.config;
        Ok(ExpansionProfile::solve(&c.law(), &c.far(), c.profile.l_xi, c.profile.tol)?)
    }

    /// Expansion for the constant state `v_-` on both sides.
    fn constant_expansion(&self) -> Result<ExpansionProfile, CliError> {
        let c = &self.config;
        let ff = FarField::new(c.far_field.v_minus, c.far_field.v_minus)?;
        Ok(ExpansionProfile::solve(&c.law(), &ff, c.profile.l_xi, c.profile.tol)?)
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let t0 = Instant::now();
    let r = f();
    log::info!("{label}: {:.2?}", t0.elapsed());
    r
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub criteria: Vec<CriterionResult>,
    pub nodes: usize,
    pub l_xi: f64,
    pub v_at_zero: f64,
    pub max_residual: f64,
    pub fd_residual: f64,
    pub fd_residual_xi: f64,
    pub reflection_error: f64,
    pub monotone: bool,
    pub tails: Option<TailConstants>,
}

pub const PROFILE_RESIDUAL: f64 = 1e-8;
pub const REFLECTION_TOL: f64 = 1e-7;
pub const TAIL_R2: f64 = 0.99;

pub fn profile(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    timed("profile", || {
        let c = &ctx.config;
        let (law, ff) = (c.law(), c.far());
        let wave = solve_diffusion_wave(&law, &ff, c.profile.l_xi, c.profile.tol)?;
        let mirror = solve_diffusion_wave(&law, &ff.swapped(), c.profile.l_xi, c.profile.tol)?;
        let xi = wave.xi_grid();
        let reflection_error = xi
            .iter()
            .map(|&z| (wave.vbar_xi(z, 0) - mirror.vbar_xi(-z, 0)).abs())
            .fold(0.0, f64::max);
        let vals = wave.values();
        let sign = (ff.v_plus() - ff.v_minus()).signum();
        let monotone = vals.windows(2).all(|w| sign * (w[1] - w[0]) >= 0.0);
        let (fd_residual, fd_residual_xi) = wave.ode_residual();
        let tails = if wave.is_constant() { None } else { Some(certify_tails(&wave)?) };

        let mut checks = vec![
            Check::at_most("max residual", wave.max_residual(), PROFILE_RESIDUAL),
            Check::at_most("reflection error", reflection_error, REFLECTION_TOL),
            Check::holds("monotone", monotone),
        ];
        if let Some(t) = tails {
            checks.push(Check::above("tail fit r2", t.fit_quality, TAIL_R2));
            checks.push(Check::above("c_tail", t.c_rate, 0.0));
        }
        let criteria = vec![CriterionResult::new(1, "profile", checks)];

        let mut w = output::create(&ctx.path("profile.csv"))?;
        wave.write_csv(&mut w)?;
        drop(w);
        write_json(
            &ctx.path("profile.json"),
            &ProfileSummary {
                criteria: criteria.clone(),
                nodes: xi.len(),
                l_xi: wave.l_xi(),
                v_at_zero: wave.vbar_xi(0.0, 0),
                max_residual: wave.max_residual(),
                fd_residual,
                fd_residual_xi,
                reflection_error,
                monotone,
                tails,
            },
        )?;
        Ok(criteria)
    })
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSummary {
    pub criteria: Vec<CriterionResult>,
    pub max_residual: f64,
    pub fd_residual: f64,
    pub closed_form_error: f64,
    pub closed_form_points: usize,
    pub u1_identity_error: f64,
    pub residual_rates: Option<ResidualRates>,
}

pub const CORRECTION_RESIDUAL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-6;
pub const CLOSED_FORM_RANGE: f64 = 8.0;
/// Spacing of the closed-form comparison points.
const CLOSED_FORM_STEP: f64 = 0.125;
pub const U1_IDENTITY_TOL: f64 = 1e-12;

pub fn correct(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    let exp = timed("correct: solve", || ctx.corrected_expansion())?;
    let (wave, corr, law) = (exp.wave(), exp.correction(), exp.law());
    let c = &ctx.config;

    let (closed_form_error, closed_form_points) = timed("correct: closed form", || {
        let n = (CLOSED_FORM_RANGE / CLOSED_FORM_STEP).round() as i64;
        let mut worst: f64 = 0.0;
        for i in -n..=n {
            let z = i as f64 * CLOSED_FORM_STEP;
            let (a, b) = (corr.g1(z), g1_closed_form(wave, law, z));
            let err = if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
            worst = worst.max(err);
        }
        Ok((worst, (2 * n + 1) as usize))
    })?;
    let u1_identity_error = corr
        .xi_grid()
        .iter()
        .map(|&z| (corr.u1(z) + 0.5 * z * corr.v1(z) + 0.5 * corr.g1(z)).abs())
        .fold(0.0, f64::max);
    let (fd_residual, _) = corr.ode_residual(wave, law);
    let c2 = CriterionResult::new(
        2,
        "correct",
        vec![
            Check::at_most("G1 residual", corr.max_residual(), CORRECTION_RESIDUAL),
            Check::below("closed form relative error", closed_form_error, CLOSED_FORM_TOL),
            Check::below("u1 identity", u1_identity_error, U1_IDENTITY_TOL),
        ],
    );

    let rates = if wave.is_constant() {
        log::warn!("constant wave: residual rates are not defined");
        None
    } else {
        Some(timed("correct: residual rates", || {
            Ok(residual_rates(&exp, c.analysis.residual_window, c.analysis.residual_samples)?)
        })?)
    };
    let c3 = match &rates {
        Some(r) => CriterionResult::new(
            3,
            "correct",
            vec![
                Check::within("sup S[v*] exponent", r.fit_s.exponent, -2.5, 0.1),
                Check::within("sup S[vbar] exponent", r.fit_bare.exponent, -1.5, 0.1),
                Check::within("L1 g2 exponent", r.fit_g2.exponent, -1.5, 0.1),
                Check::within("L1 g3 exponent", r.fit_g3.exponent, -1.0, 0.1),
            ],
        ),
        None => CriterionResult::pending(3, "correct"),
    };
    let criteria = vec![c2, c3];

    let mut w = output::create(&ctx.path("correction.csv"))?;
    corr.write_csv(&mut w)?;
    drop(w);
    write_json(
        &ctx.path("correct.json"),
        &CorrectionSummary {
            criteria: criteria.clone(),
            max_residual: corr.max_residual(),
            fd_residual,
            closed_form_error,
            closed_form_points,
            u1_identity_error,
            residual_rates: rates,
        },
    )?;
    Ok(criteria)
}


/// The parts of the config a trajectory depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationKey {
    pub pressure: crate::config::PressureSection,
    pub far_field: crate::config::FarFieldSection,
    pub profile: crate::config::ProfileSection,
    pub expansion: crate::config::ExpansionSection,
    pub grid: crate::config::GridSection,
    pub solver: crate::config::SolverSection,
    pub initial_data: InitialDataSpec,
    pub schedule: crate::config::ScheduleSection,
}

impl SimulationKey {
    pub fn of(c: &ExperimentConfig) -> Self {
        Self {
            pressure: c.pressure,
            far_field: c.far_field,
            profile: c.profile,
            expansion: c.expansion,
            grid: c.grid,
            solver: c.solver,
            initial_data: c.initial_data,
            schedule: c.schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    pub file: String,
    /// `int (v - v*)` at this time minus its initial value.
    pub mass_drift: f64,
    pub boundary_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub key: SimulationKey,
    pub grid: Grid,
    pub initial_mass: f64,
    pub complete: bool,
    pub snapshots: Vec<SnapshotEntry>,
}

impl Manifest {
    pub fn max_mass_drift(&self) -> f64 {
        self.snapshots.iter().map(|s| s.mass_drift.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegritySummary {
    pub criteria: Vec<CriterionResult>,
    pub equilibrium_steps: usize,
    pub equilibrium_deviation: f64,
    pub time_study: ConvergenceStudy,
    pub space_study: ConvergenceStudy,
    pub max_mass_drift: f64,
}

pub const MASS_DRIFT_TOL: f64 = 1e-8;
pub const TIME_ORDER: f64 = 3.0;
pub const SPACE_ORDER: f64 = 4.0;

const SNAPSHOT_DIR: &str = "snapshots";

fn snapshot_name(i: usize) -> String {
    format!("{SNAPSHOT_DIR}/snap_{i:04}.csv")
}

fn write_manifest(ctx: &RunContext, m: &Manifest) -> Result<(), CliError> {
    write_json(&ctx.path("manifest.json"), m)
}

fn read_state(path: &Path) -> Result<SimState, CliError> {
    let f = fs::File::open(path)
        .map_err(|_| CliError::Dependency(format!("{} not found; run `simulate` first", path.display())))?;
    SimState::read_csv(BufReader::new(f)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Run the configured simulation, writing every snapshot and a manifest.
/// With `resume`, continue from the last snapshot of an unfinished run of
/// the same configuration.
pub fn simulate(ctx: &RunContext, resume: bool) -> Result<Vec<CriterionResult>, CliError> {
    let c = &ctx.config;
    let exp = ctx.expansion()?;
    let grid = c.grid();
    let times = c.snapshot_times();
    let key = SimulationKey::of(c);

    let previous: Option<Manifest> = if resume && ctx.path("manifest.json").exists() {
        let m: Manifest = read_json(&ctx.path("manifest.json"))?;
        if m.key != key {
            return Err(CliError::Dependency(
                "manifest belongs to a different configuration; rerun without --resume".into(),
            ));
        }
        Some(m)
    } else {
        None
    };

    let mut solver = Solver::new(grid, *exp.law(), c.solver_config(), *exp.wave().far_field())?;
    let (mut manifest, start) = match previous {
        Some(m) if !m.snapshots.is_empty() => {
            let last = m.snapshots.last().expect("nonempty");
            let state = read_state(&ctx.path(&last.file))?;
            if state.t != last.t || state.v.len() != grid.n_nodes() {
                return Err(CliError::Io(format!("{} does not match the manifest", last.file)));
            }
            log::info!("resuming at t = {}", state.t);
            (m, state)
        }
        _ => {
            let dir = ctx.path(SNAPSHOT_DIR);
            if dir.exists() {
                fs::remove_dir_all(&dir)?;
            }
            let s0 = make_initial_data(&exp, &c.initial_data, &grid)?;
            let m = Manifest {
                key,
                grid,
                initial_mass: perturbation_mass(&s0, &grid, &exp)?,
                complete: false,
                snapshots: Vec::new(),
            };
            (m, s0)
        }
    };

    if !manifest.complete {
        timed("simulate: trajectory", || {
            let done = manifest.snapshots.len();
            let record = |s: &SimState, manifest: &mut Manifest| -> Result<(), CliError> {
                let index = manifest.snapshots.len();
                let file = snapshot_name(index);
                let mut w = output::create(&ctx.path(&file))?;
                s.write_csv(&grid, &mut w)?;
                drop(w);
                manifest.snapshots.push(SnapshotEntry {
                    index,
                    t: s.t,
                    file,
                    mass_drift: perturbation_mass(s, &grid, &exp)? - manifest.initial_mass,
                    boundary_deviation: solver_boundary(&grid, c, s),
                });
                write_manifest(ctx, manifest)
            };
            if done == 0 {
                record(&start, &mut manifest)?;
            }
            let remaining = &times[manifest.snapshots.len()..];
            let mut failure = None;
            solver.integrate_with(start.clone(), c.schedule.t_end, remaining, |s| {
                record(s, &mut manifest).map_err(|e| {
                    let msg = e.to_string();
                    failure = Some(e);
                    dwave::Error::Integration(msg)
                })
            })
            .map_err(|e| failure.take().unwrap_or(CliError::Numerical(e)))?;
            manifest.complete = true;
            write_manifest(ctx, &manifest)
        })?;
    }

    let criteria = vec![integrity(ctx, &exp, &manifest)?];
    Ok(criteria)
}

fn solver_boundary(grid: &Grid, c: &ExperimentConfig, s: &SimState) -> f64 {
    let n = grid.n_nodes();
    (s.v[0] - c.far_field.v_minus)
        .abs()
        .max((s.v[n - 1] - c.far_field.v_plus).abs())
        .max(s.u[0].abs())
        .max(s.u[n - 1].abs())
}

fn integrity(ctx: &RunContext, exp: &ExpansionProfile, manifest: &Manifest) -> Result<CriterionResult, CliError> {
    let c = &ctx.config;
    let i = &c.integrity;
    let equilibrium_deviation = timed("simulate: equilibrium", || {
        let v0 = c.far_field.v_minus;
        let ff = FarField::new(v0, v0)?;
        let g = Grid::new(-10.0, 10.0, 200)?;
        let mut solver = Solver::new(g, c.law(), c.solver_config(), ff)?;
        let s0 = SimState::constant(&g, v0, 0.0);
        let dt = solver.cfl_dt(&s0);
        let mut s = s0.clone();
        for _ in 0..i.equilibrium_steps {
            s = solver.step(&s, dt)?;
        }
        Ok(s.v
            .iter()
            .zip(&s0.v)
            .map(|(a, b)| (a - b).abs())
            .chain(s.u.iter().map(|u| u.abs()))
            .fold(0.0, f64::max))
    })?;
    let hw = i.study_half_width;
    let time_study = timed("simulate: time study", || {
        let g = Grid::new(-hw, hw, i.time_study_cells)?;
        Ok(time_convergence(exp, &c.initial_data, &g, &c.solver_config(), i.study_t_end)?)
    })?;
    let space_study = timed("simulate: space study", || {
        let g = Grid::new(-hw, hw, i.space_study_cells)?;
        Ok(space_convergence(exp, &c.initial_data, &g, &c.solver_config(), i.study_t_end, i.study_dt)?)
    })?;
    let max_mass_drift = manifest.max_mass_drift();
    let crit = CriterionResult::new(
        8,
        "simulate",
        vec![
            Check::at_most(
                "constant state deviation",
                equilibrium_deviation,
                f64::EPSILON * c.far_field.v_minus,
            ),
            Check::at_least("time order", time_study.quoted_order(), TIME_ORDER),
            Check::at_least("space order", space_study.quoted_order(), SPACE_ORDER),
            Check::at_most("perturbation mass drift", max_mass_drift, MASS_DRIFT_TOL),
        ],
    );
    write_json(
        &ctx.path("integrity.json"),
        &IntegritySummary {
            criteria: vec![crit.clone()],
            equilibrium_steps: i.equilibrium_steps,
            equilibrium_deviation,
            time_study,
            space_study,
            max_mass_drift,
        },
    )?;
    Ok(crit)
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub criteria: Vec<CriterionResult>,
    pub window: (f64, f64),
    pub fits: BTreeMap<String, DecayFit>,
    pub failed_fits: BTreeMap<String, String>,
    pub excluded: Vec<f64>,
}

pub const L2_SLACK: f64 = 0.15;
pub const L2_R2: f64 = 0.98;

/// Load a finished trajectory written by [`simulate`].
pub fn load_trajectory(ctx: &RunContext) -> Result<(Manifest, Vec<SimState>), CliError> {
    let m: Manifest = read_json(&ctx.path("manifest.json"))?;
    if !m.complete {
        return Err(CliError::Dependency("the simulation did not finish; run `simulate --resume`".into()));
    }
    if m.key != SimulationKey::of(&ctx.config) {
        return Err(CliError::Dependency("snapshots were produced by a different configuration".into()));
    }
    let states = m
        .snapshots
        .iter()
        .map(|e| read_state(&ctx.path(&e.file)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((m, states))
}

pub fn analyze(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    let c = &ctx.config;
    let (manifest, states) = timed("analyze: load", || load_trajectory(ctx))?;
    let exp = ctx.expansion()?;
    let series = timed("analyze: norms", || {
        Ok(compute_norms(&states, &manifest.grid, &exp, c.analysis.boundary_tol)?)
    })?;
    drop(states);

    let window = c.analysis.fit_window;
    let mut fits = BTreeMap::new();
    let mut failed_fits = BTreeMap::new();
    for f in NormField::ALL {
        match series.fit(f, window) {
            Ok(fit) => {
                fits.insert(f.name().to_string(), fit);
            }
            Err(e) => {
                failed_fits.insert(f.name().to_string(), e.to_string());
            }
        }
    }

    let mut l2 = Vec::new();
    for f in NormField::ALL {
        let Some((l, k)) = f.derivative_orders() else { continue };
        let bound = -(l as f64 + k as f64 / 2.0 + 0.75) + L2_SLACK;
        match fits.get(f.name()) {
            Some(fit) => {
                l2.push(Check::at_most(format!("{} exponent", f.name()), fit.exponent, bound));
                l2.push(Check::above(format!("{} r2", f.name()), fit.r_squared, L2_R2));
            }
            None => l2.push(Check::holds(format!("{} fit", f.name()), false)),
        }
    }
    let linf = |f: NormField, center: f64, tol: f64| match fits.get(f.name()) {
        Some(fit) => Check::within(format!("{} exponent", f.name()), fit.exponent, center, tol),
        None => Check::holds(format!("{} fit", f.name()), false),
    };
    let criteria = vec![
        CriterionResult::new(4, "analyze", l2),
        CriterionResult::new(
            5,
            "analyze",
            vec![
                linf(NormField::LinfVVstar, -1.5, 0.15),
                linf(NormField::LinfUUstar, -2.0, 0.2),
                linf(NormField::LinfVVbar, -1.0, 0.1),
            ],
        ),
    ];

    let mut w = output::create(&ctx.path("norms.csv"))?;
    series.write_csv(&mut w)?;
    drop(w);
    let mut w = output::create(&ctx.path("weighted_norm.csv"))?;
    {
        use std::io::Write;
        writeln!(w, "t,N")?;
        for r in weighted_norm_history(&series) {
            writeln!(w, "{:.16e},{:.16e}", r.t, r.value)?;
        }
    }
    drop(w);
    write_json(
        &ctx.path("decay.json"),
        &DecaySummary {
            criteria: criteria.clone(),
            window,
            fits,
            failed_fits,
            excluded: series.excluded.clone(),
        },
    )?;
    Ok(criteria)
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub criteria: Vec<CriterionResult>,
    pub bound: BoundFit,
    pub stable: bool,
    pub lp_scaling: Vec<LpScalingRow>,
    pub degenerate_samples: usize,
    pub degenerate_max_rg: f64,
    pub theta_one_sided: Vec<ThetaRow>,
}

pub const LP_TOL: f64 = 0.01;
pub const DEGENERATE_RG: f64 = 1e-6;
const DEGENERATE_SAMPLES: usize = 256;

pub fn kernel_check(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    let c = &ctx.config;
    let k = &c.kernel_check;
    let kctx = KernelContext::new(ctx.corrected_expansion()?);
    let bound = timed("kernel-check: bound", || {
        Ok(fit_kernel_bound(&kctx, &k.sample_box, k.fit_samples, k.holdout_samples, c.seed, ctx.threads)?)
    })?;
    let lp_scaling = gd_lp_scaling(&bound.kernels, &[1.0, 2.0], &k.lp_times);

    let flat = KernelContext::new(ctx.constant_expansion()?);
    let (degenerate_samples, degenerate_max_rg) = timed("kernel-check: degenerate", || {
        let pts: Vec<_> = kernel_samples(&k.sample_box, 1, DEGENERATE_SAMPLES, c.seed)
            .into_iter()
            .filter(|p| p.s < p.t - 4.0 * k.fd_step)
            .collect();
        let mut worst: f64 = 0.0;
        for p in &pts {
            worst = worst.max(eval_rg(&flat, p.x, p.t, p.y, p.s, k.fd_step)?.abs());
        }
        Ok((pts.len(), worst))
    })?;

    let mut checks = vec![
        Check::at_most("held-out violations", bound.violations as f64, 0.0),
        Check::holds("fitted constant stable", bound.stable()),
    ];
    for row in &lp_scaling {
        checks.push(Check::below(format!("G_D L{} scaling spread", row.p), row.spread, LP_TOL));
        checks.push(Check::below(format!("G_D L{} quadrature error", row.p), row.quadrature_error, LP_TOL));
    }
    checks.push(Check::above("degenerate samples", degenerate_samples as f64, 0.0));
    checks.push(Check::below("degenerate |R_G|", degenerate_max_rg, DEGENERATE_RG));
    let criteria = vec![CriterionResult::new(7, "kernel-check", checks)];

    let theta = c
        .duhamel
        .probe_times
        .iter()
        .map(|&t| {
            let (left, right) = theta_one_sided(t);
            ThetaRow { t, left, right }
        })
        .collect();
    write_json(
        &ctx.path("kernel.json"),
        &KernelSummary {
            criteria: criteria.clone(),
            stable: bound.stable(),
            bound,
            lp_scaling,
            degenerate_samples,
            degenerate_max_rg,
            theta_one_sided: theta,
        },
    )?;
    Ok(criteria)
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelSummary {
    pub criteria: Vec<CriterionResult>,
    pub report: DuhamelReport,
    pub trivial_max_abs: f64,
}

pub const DUHAMEL_TOL: f64 = 0.05;
/// Probe time and half-width of the reduced constant-state check.
const TRIVIAL_T: f64 = 6.0;
const TRIVIAL_HALF_WIDTH: f64 = 80.0;

pub fn duhamel(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    let c = &ctx.config;
    let kctx = KernelContext::new(ctx.expansion()?);
    let grid = c.grid();
    let report = timed("duhamel: reconstruction", || {
        let exp = kctx.expansion();
        let s0 = make_initial_data(exp, &c.initial_data, &grid)?;
        let mut solver = Solver::new(grid, *exp.law(), c.solver_config(), *exp.wave().far_field())?;
        Ok(duhamel_reconstruct(&kctx, &mut solver, s0, &c.duhamel_spec())?)
    })?;

    let trivial_max_abs = timed("duhamel: trivial", || {
        let flat = KernelContext::new(ctx.constant_expansion()?);
        let g = Grid::with_spacing(-TRIVIAL_HALF_WIDTH, TRIVIAL_HALF_WIDTH, c.grid.h)?;
        let data = InitialDataSpec {
            eps: 0.0,
            ..c.initial_data
        };
        let exp = flat.expansion();
        let s0 = make_initial_data(exp, &data, &g)?;
        let mut solver = Solver::new(g, *exp.law(), c.solver_config(), *exp.wave().far_field())?;
        let spec = DuhamelSpec {
            probes: vec![DuhamelProbe {
                t: TRIVIAL_T,
                xs: c.duhamel.probe_xi.iter().map(|z| z * (1.0 + TRIVIAL_T).sqrt()).collect(),
            }],
            ..c.duhamel_spec()
        };
        let rep = duhamel_reconstruct(&flat, &mut solver, s0, &spec)?;
        Ok(rep
            .probes
            .iter()
            .flat_map(|p| {
                p.reference
                    .iter()
                    .chain(p.levels.iter().flat_map(|l| l.reconstructed.iter()))
                    .map(|v| v.abs())
            })
            .fold(0.0, f64::max))
    })?;

    let mut checks = Vec::new();
    for p in &report.probes {
        let base = p.levels.first().map_or(f64::INFINITY, |l| l.rel_error);
        checks.push(Check::below(format!("t={} base relative error", p.t), base, DUHAMEL_TOL));
        checks.push(Check::holds(format!("t={} strictly decreasing", p.t), p.strictly_decreasing));
    }
    checks.push(Check::at_most("trivial config |V|", trivial_max_abs, 0.0));
    let criteria = vec![CriterionResult::new(6, "duhamel", checks)];
    write_json(
        &ctx.path("duhamel.json"),
        &DuhamelSummary {
            criteria: criteria.clone(),
            report,
            trivial_max_abs,
        },
    )?;
    Ok(criteria)
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminismSummary {
    pub criteria: Vec<CriterionResult>,
    pub previous_total: Option<String>,
    pub total: String,
}

/// Every stage in order, then the digest comparison and the report.
pub fn all(ctx: &RunContext) -> Result<Vec<CriterionResult>, CliError> {
    let previous: Option<output::DirDigest> = {
        let p = ctx.path("digest.json");
        if p.exists() {
            Some(read_json(&p)?)
        } else {
            None
        }
    };
    let mut criteria = Vec::new();
    criteria.extend(profile(ctx)?);
    criteria.extend(correct(ctx)?);
    criteria.extend(simulate(ctx, false)?);
    criteria.extend(analyze(ctx)?);
    criteria.extend(kernel_check(ctx)?);
    criteria.extend(duhamel(ctx)?);

    let digest = output::digest_dir(&ctx.out)?;
    let c9 = match &previous {
        Some(p) => CriterionResult::new(
            9,
            "all",
            vec![
                Check::holds("digest matches previous run", p.total == digest.total),
                Check::at_most(
                    "differing files",
                    digest.files.iter().filter(|(k, v)| p.files.get(*k) != Some(v)).count() as f64,
                    0.0,
                ),
            ],
        ),
        None => CriterionResult::pending(9, "all"),
    };
    write_json(
        &ctx.path("determinism.json"),
        &DeterminismSummary {
            criteria: vec![c9.clone()],
            previous_total: previous.map(|p| p.total),
            total: digest.total.clone(),
        },
    )?;
    write_json(&ctx.path("digest.json"), &digest)?;
    criteria.push(c9);
    crate::report::write_report(&ctx.out)?;
    Ok(criteria)
}
