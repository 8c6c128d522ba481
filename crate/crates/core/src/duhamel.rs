//! Duhamel reconstruction of `V(x,t)` from the approximate Green function:
//!
//! `V(x,t) = int G(x,t;y,0) V_0 dy + int_0^t int G f dy ds + int_0^t int R_G V dy ds`
//!
//! with `f = g1_y - g2_y - g3_s - V_ss`. The time integral is split at `t/2`
//! where the frozen coefficient switches branch: trapezoid in `log(1+s)` on
//! `[0, t/2]` and in `r = sqrt(t-s)` on `[t/2, t]`, whose `r = 0` endpoint
//! carries zero weight. Refinement levels double the panel count, so every
//! coarse node is also a fine node and one trajectory serves all levels.
//! States are consumed as they are produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{compute_v, diff4};
use crate::correction::{eval_g2_g3, Field, SourcePart};
use crate::error::{invalid, Error, Result};
use crate::green::{kernel_and_defect, KernelContext, Side};
use crate::quadrature::simpson;
use crate::solver::{Grid, SimState, Solver};

/// Where to reconstruct: grid-snapped `xs` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelProbe {
    pub t: f64,
    pub xs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelSpec {
    pub probes: Vec<DuhamelProbe>,
    /// Panels per half-interval at the coarsest level.
    pub base_panels: usize,
    pub levels: usize,
    /// Kernel tails beyond `exp(-cutoff)` are dropped.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
}

fn default_cutoff() -> f64 {
    40.0
}

/// Fewest time states on `[0, t]` at the coarsest level.
pub const MIN_STATES: usize = 64;

/// Kernel standard deviation below which the `y` integral moves to a
/// local grid, in solver cells.
const MIN_SIGMA_CELLS: f64 = 4.0;

impl DuhamelSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.probes.is_empty() {
            return Err(invalid("probes", "need at least one probe"));
        }
        if self.levels == 0 {
            return Err(invalid("levels", "need at least one level"));
        }
        if 2 * self.base_panels < MIN_STATES {
            return Err(Error::InvalidData(format!(
                "{} panels per half give fewer than {MIN_STATES} states on [0, t]",
                self.base_panels
            )));
        }
        if !(self.cutoff > 0.0) {
            return Err(invalid("cutoff", "must be positive"));
        }
        for p in &self.probes {
            if !(p.t > 0.0) || p.xs.is_empty() {
                return Err(invalid("probes", format!("probe at t = {} is empty or not in the future", p.t)));
            }
            for &x in &p.xs {
                if x <= grid.x_min || x >= grid.x_max {
                    return Err(invalid("probes", format!("x = {x} lies outside the grid")));
                }
            }
        }
        Ok(())
    }

    fn finest_panels(&self) -> usize {
        self.base_panels << (self.levels - 1)
    }
}

/// Role of a time node within one probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    /// Index `k` on the log panel, `0..=n`. `k == n` is `s = t/2`.
    Log(usize),
    /// Index `k` on the root panel, `1..n`.
    Root(usize),
    /// The probe time itself.
    Reference,
}

#[derive(Debug, Clone)]
struct ProbeState {
    t: f64,
    idx: Vec<usize>,
    xs: Vec<f64>,
    reference: Vec<f64>,
    initial: Vec<f64>,
    /// Per level, the source and defect sums at each x.
    source: Vec<Vec<f64>>,
    defect: Vec<Vec<f64>>,
    visited: usize,
    expected: usize,
}

/// Reconstructed values at one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelLevel {
    pub panels: usize,
    pub states: usize,
    pub reconstructed: Vec<f64>,
    pub initial_term: Vec<f64>,
    pub source_term: Vec<f64>,
    pub defect_term: Vec<f64>,
    /// `max |rec - ref| / max |ref|`, or the absolute error when the
    /// reference vanishes.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelProbeResult {
    pub t: f64,
    pub xs: Vec<f64>,
    pub reference: Vec<f64>,
    pub levels: Vec<DuhamelLevel>,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelReport {
    pub probes: Vec<DuhamelProbeResult>,
}

/// Streaming evaluator; feed it every state at [`snapshot_times`].
///
/// [`snapshot_times`]: DuhamelAccumulator::snapshot_times
#[derive(Debug)]
pub struct DuhamelAccumulator<'a> {
    ctx: &'a KernelContext,
    grid: Grid,
    spec: DuhamelSpec,
    n_fine: usize,
    probes: Vec<ProbeState>,
    /// Time bits to the (probe, role) pairs served there.
    schedule: BTreeMap<u64, Vec<(usize, NodeKind)>>,
}

fn log_node(t: f64, n: usize, k: usize) -> f64 {
    if k == n {
        0.5 * t
    } else if k == 0 {
        0.0
    } else {
        ((1.0 + 0.5 * t).ln() * k as f64 / n as f64).exp_m1()
    }
}

fn root_node(t: f64, n: usize, k: usize) -> f64 {
    let r = (0.5 * t).sqrt() * k as f64 / n as f64;
    t - r * r
}

/// Six-point Lagrange interpolation of grid samples `f` (starting at
/// `x0`, spacing `h`) at `x`.
fn interp6(f: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let u = (x - x0) / h;
    let n = f.len();
    let i0 = (u.floor() as isize - 2).clamp(0, n as isize - 6) as usize;
    let mut s = 0.0;
    for j in 0..6 {
        let mut w = 1.0;
        let uj = (i0 + j) as f64;
        for m in 0..6 {
            if m != j {
                w *= (u - (i0 + m) as f64) / (uj - (i0 + m) as f64);
            }
        }
        s += w * f[i0 + j];
    }
    s
}

/// Simpson on an odd number of points.
fn odd(n: usize) -> usize {
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

impl<'a> DuhamelAccumulator<'a> {
    pub fn new(ctx: &'a KernelContext, grid: Grid, spec: DuhamelSpec) -> Result<Self> {
        spec.validate(&grid)?;
        let n = spec.finest_panels();
        let mut schedule: BTreeMap<u64, Vec<(usize, NodeKind)>> = BTreeMap::new();
        let mut probes = Vec::with_capacity(spec.probes.len());
        let (_, b_max) = ctx.diffusivity_range();
        for (pi, p) in spec.probes.iter().enumerate() {
            let idx: Vec<usize> = p
                .xs
                .iter()
                .map(|&x| ((x - grid.x_min) / grid.h()).round() as usize)
                .collect();
            let xs: Vec<f64> = idx.iter().map(|&i| grid.x(i)).collect();
            let reach = (4.0 * b_max * p.t * spec.cutoff).sqrt();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - reach;
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + reach;
            if lo < grid.x_min || hi > grid.x_max {
                return Err(Error::InvalidData(format!(
                    "probe at t = {} needs [{lo:.1}, {hi:.1}], beyond the grid",
                    p.t
                )));
            }
            let mut expected = 0;
            let mut add = |s: f64, kind: NodeKind| {
                schedule.entry(s.to_bits()).or_default().push((pi, kind));
                expected += 1;
            };
            for k in 0..=n {
                add(log_node(p.t, n, k), NodeKind::Log(k));
            }
            for k in 1..n {
                add(root_node(p.t, n, k), NodeKind::Root(k));
            }
            add(p.t, NodeKind::Reference);
            let m = xs.len();
            probes.push(ProbeState {
                t: p.t,
                idx,
                xs,
                reference: vec![0.0; m],
                initial: vec![0.0; m],
                source: vec![vec![0.0; m]; spec.levels],
                defect: vec![vec![0.0; m]; spec.levels],
                visited: 0,
                expected,
            });
        }
        Ok(Self {
            ctx,
            grid,
            spec,
            n_fine: n,
            probes,
            schedule,
        })
    }

    /// Sorted distinct times at which states are needed.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.schedule.keys().map(|&b| f64::from_bits(b)).collect();
        t.sort_by(f64::total_cmp);
        t
    }

    /// Index range of the `y` window for probe `pi` at time `s`.
    fn window(&self, pi: usize, s: f64) -> (usize, usize) {
        let p = &self.probes[pi];
        let (_, b_max) = self.ctx.diffusivity_range();
        let reach = (4.0 * b_max * (p.t - s) * self.spec.cutoff).sqrt() + 3.0 * self.grid.h();
        let lo = p.xs.iter().copied().fold(f64::INFINITY, f64::min) - reach;
        let hi = p.xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + reach;
        let i0 = ((lo - self.grid.x_min) / self.grid.h()).floor().max(0.0) as usize;
        let i1 = (((hi - self.grid.x_min) / self.grid.h()).ceil() as usize).min(self.grid.n_cells);
        (i0, i1)
    }

    /// Consume a state. States at times not in the schedule are ignored.
    pub fn visit(&mut self, state: &SimState) -> Result<()> {
        let Some(tasks) = self.schedule.get(&state.t.to_bits()).cloned() else {
            return Ok(());
        };
        let fields = compute_v(state, &self.grid, self.ctx.expansion())?;
        let needs_source = tasks.iter().any(|(_, k)| *k != NodeKind::Reference);
        let (mut lo, mut hi) = (usize::MAX, 0);
        for &(pi, kind) in &tasks {
            if kind != NodeKind::Reference {
                let (a, b) = self.window(pi, state.t);
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        let src = if needs_source {
            Some(self.source_on(state, &fields.v, lo, hi)?)
        } else {
            None
        };
        for (pi, kind) in tasks {
            let s = state.t;
            match kind {
                NodeKind::Reference => {
                    let p = &mut self.probes[pi];
                    for (r, &i) in p.reference.iter_mut().zip(&p.idx) {
                        *r = fields.v[i];
                    }
                }
                NodeKind::Log(k) => {
                    let src = src.as_ref().expect("source present");
                    let n = self.n_fine;
                    let t = self.probes[pi].t;
                    if k == 0 {
                        let init = self.y_integrals(pi, s, Side::Early, src, true)?.0;
                        self.probes[pi].initial = init;
                    }
                    let (g, r) = self.y_integrals(pi, s, Side::Early, src, false)?;
                    let du = (1.0 + 0.5 * t).ln() / n as f64;
                    self.add(pi, k, n, |stride| du * stride as f64 * (1.0 + s), &g, &r);
                    if k == n {
                        // the late branch starts here with its own one-sided values
                        let (g, r) = self.y_integrals(pi, s, Side::Late, src, false)?;
                        let dr = (0.5 * t).sqrt() / n as f64;
                        let rr = (0.5 * t).sqrt();
                        self.add(pi, n, n, |stride| 2.0 * rr * dr * stride as f64, &g, &r);
                    }
                }
                NodeKind::Root(k) => {
                    let src = src.as_ref().expect("source present");
                    let n = self.n_fine;
                    let t = self.probes[pi].t;
                    let (g, r) = self.y_integrals(pi, s, Side::Late, src, false)?;
                    let dr = (0.5 * t).sqrt() / n as f64;
                    let rk = k as f64 * dr;
                    self.add(pi, k, n, |stride| 2.0 * rk * dr * stride as f64, &g, &r);
                }
            }
            self.probes[pi].visited += 1;
        }
        Ok(())
    }

    /// Add weighted contributions at fine index `k` to every level whose
    /// node set contains it. `weight(stride)` is the interior weight at
    /// that level; endpoints `0` and `n` get half.
    fn add(&mut self, pi: usize, k: usize, n: usize, weight: impl Fn(usize) -> f64, g: &[f64], r: &[f64]) {
        let levels = self.spec.levels;
        let p = &mut self.probes[pi];
        for lev in 0..levels {
            let stride = 1usize << (levels - 1 - lev);
            if k % stride != 0 {
                continue;
            }
            let mut w = weight(stride);
            if k == 0 || k == n {
                w *= 0.5;
            }
            for j in 0..g.len() {
                p.source[lev][j] += w * g[j];
                p.defect[lev][j] += w * r[j];
            }
        }
    }

    /// `f` and the PDE diffusivity on grid nodes `lo..=hi`, plus `V` there.
    fn source_on(&self, state: &SimState, v_big: &[f64], lo: usize, hi: usize) -> Result<SourceWindow> {
        let exp = self.ctx.expansion();
        let law = exp.law();
        let s = state.t;
        let n = self.grid.n_nodes();
        let a = lo.saturating_sub(2);
        let b = (hi + 2).min(n - 1);
        let mut g1 = Vec::with_capacity(b - a + 1);
        let mut p = Vec::with_capacity(b - a + 1);
        for i in a..=b {
            let vs = exp.eval(Field::V, self.grid.x(i), s, 0, 0)?;
            let v = state.v[i];
            g1.push(-(law.p(v) - law.p(vs) - law.dp(vs) * (v - vs)));
            p.push(law.p(v));
        }
        let h = self.grid.h();
        let g1_y = diff4(&g1, h);
        let p_x = diff4(&p, h);
        let mut f = Vec::with_capacity(hi - lo + 1);
        let mut coef = Vec::with_capacity(hi - lo + 1);
        for i in lo..=hi {
            let x = self.grid.x(i);
            let j = i - a;
            let g2_y = eval_g2_g3(exp, x, s, SourcePart::G2, 1, 0)?;
            let g3_s = eval_g2_g3(exp, x, s, SourcePart::G3, 0, 1)?;
            let v_ss = -p_x[j] - state.u[i] - exp.eval(Field::U, x, s, 0, 1)?;
            f.push(g1_y[j] - g2_y - g3_s - v_ss);
            coef.push(self.ctx.pde(x, s));
        }
        Ok(SourceWindow {
            lo,
            f,
            v: v_big[lo..=hi].to_vec(),
            coef,
        })
    }

    /// `(int G f dy, int R_G V dy)` at every probe x, or `int G V dy` in
    /// the first slot when `initial` is set.
    fn y_integrals(
        &self,
        pi: usize,
        s: f64,
        side: Side,
        src: &SourceWindow,
        initial: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = &self.probes[pi];
        let t = p.t;
        let tau = t - s;
        let h = self.grid.h();
        let (b_min, _) = self.ctx.diffusivity_range();
        let sigma = (2.0 * b_min * tau).sqrt();
        let (i0, i1) = self.window(pi, s);
        let mut gs = Vec::with_capacity(p.xs.len());
        let mut rs = Vec::with_capacity(p.xs.len());
        if sigma >= MIN_SIGMA_CELLS * h {
            let frozen: Vec<_> = (i0..=i1).map(|i| self.ctx.frozen(self.grid.x(i), s, t, side)).collect();
            let mut gv = vec![0.0; i1 - i0 + 1];
            let mut rv = vec![0.0; i1 - i0 + 1];
            for &x in &p.xs {
                let alpha = -self.ctx.a(x, t);
                for (k, i) in (i0..=i1).enumerate() {
                    let j = i - src.lo;
                    let (g, r) = kernel_and_defect(alpha, &frozen[k], &src.coef[j], x - self.grid.x(i), tau);
                    if initial {
                        gv[k] = g * src.v[j];
                    } else {
                        gv[k] = g * src.f[j];
                        rv[k] = r * src.v[j];
                    }
                }
                gs.push(simpson(&gv, h));
                rs.push(simpson(&rv, h));
            }
        } else {
            // kernel narrower than the grid resolves: local grid around x
            let (_, b_max) = self.ctx.diffusivity_range();
            let reach = (4.0 * b_max * tau * self.spec.cutoff).sqrt();
            let dy = sigma / 8.0;
            let m = odd(2 * (reach / dy).ceil() as usize + 1);
            let dy = 2.0 * reach / (m - 1) as f64;
            let x_lo = self.grid.x(src.lo);
            let mut gv = vec![0.0; m];
            let mut rv = vec![0.0; m];
            for &x in &p.xs {
                let alpha = -self.ctx.a(x, t);
                for k in 0..m {
                    let y = x - reach + k as f64 * dy;
                    let fc = self.ctx.frozen(y, s, t, side);
                    let pc = self.ctx.pde(y, s);
                    let (g, r) = kernel_and_defect(alpha, &fc, &pc, x - y, tau);
                    let vy = interp6(&src.v, x_lo, h, y);
                    if initial {
                        gv[k] = g * vy;
                    } else {
                        gv[k] = g * interp6(&src.f, x_lo, h, y);
                        rv[k] = r * vy;
                    }
                }
                gs.push(simpson(&gv, dy));
                rs.push(simpson(&rv, dy));
            }
        }
        Ok((gs, rs))
    }

    pub fn finish(self) -> Result<DuhamelReport> {
        let mut out = Vec::with_capacity(self.probes.len());
        for p in self.probes {
            if p.visited != p.expected {
                return Err(Error::InvalidData(format!(
                    "probe at t = {} saw {} of {} required states",
                    p.t, p.visited, p.expected
                )));
            }
            let ref_max = p.reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let levels: Vec<DuhamelLevel> = (0..self.spec.levels)
                .map(|lev| {
                    let rec: Vec<f64> = (0..p.xs.len())
                        .map(|j| p.initial[j] + p.source[lev][j] + p.defect[lev][j])
                        .collect();
                    let err = rec
                        .iter()
                        .zip(&p.reference)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    let panels = self.spec.base_panels << lev;
                    DuhamelLevel {
                        panels,
                        states: 2 * panels,
                        reconstructed: rec,
                        initial_term: p.initial.clone(),
                        source_term: p.source[lev].clone(),
                        defect_term: p.defect[lev].clone(),
                        rel_error: if ref_max > 0.0 { err / ref_max } else { err },
                    }
                })
                .collect();
            let strictly_decreasing = levels.windows(2).all(|w| w[1].rel_error < w[0].rel_error);
            out.push(DuhamelProbeResult {
                t: p.t,
                xs: p.xs,
                reference: p.reference,
                levels,
                strictly_decreasing,
            });
        }
        Ok(DuhamelReport { probes: out })
    }
}

#[derive(Debug)]
struct SourceWindow {
    lo: usize,
    f: Vec<f64>,
    v: Vec<f64>,
    coef: Vec<crate::green::PdeCoef>,
}

/// Run the solver from `state0` (at `t = 0`) through every needed time and
/// reconstruct all probes.
pub fn duhamel_reconstruct(
    ctx: &KernelContext,
    solver: &mut Solver,
    state0: SimState,
    spec: &DuhamelSpec,
) -> Result<DuhamelReport> {
    if state0.t != 0.0 {
        return Err(invalid("state0", "must start at t = 0"));
    }
    let mut acc = DuhamelAccumulator::new(ctx, *solver.grid(), spec.clone())?;
    let times = acc.snapshot_times();
    let t_end = *times.last().expect("nonempty schedule");
    acc.visit(&state0)?;
    solver.integrate_with(state0, t_end, &times[1..], |s| acc.visit(s))?;
    acc.finish()
}

/// Reconstruct from stored states; every scheduled time must be present.
pub fn duhamel_from_trajectory(
    ctx: &KernelContext,
    grid: &Grid,
    trajectory: &[SimState],
    spec: &DuhamelSpec,
) -> Result<DuhamelReport> {
    let mut acc = DuhamelAccumulator::new(ctx, *grid, spec.clone())?;
    for s in trajectory {
        acc.visit(s)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_endpoints() {
        let t = 25.0;
        assert_eq!(log_node(t, 64, 64), 12.5);
        assert_eq!(log_node(t, 64, 0), 0.0);
        assert!(root_node(t, 64, 63) > 12.5);
        assert!(root_node(t, 64, 1) < t);
    }

    #[test]
    fn interp6_is_exact_on_quintics() {
        let h = 0.1;
        let f: Vec<f64> = (0..30).map(|i| (i as f64 * h).powi(5) - 2.0 * (i as f64 * h)).collect();
        for x in [0.05f64, 0.77, 1.234, 2.88] {
            let exact = x.powi(5) - 2.0 * x;
            assert!((interp6(&f, 0.0, h, x) - exact).abs() < 1e-12);
        }
    }
}
