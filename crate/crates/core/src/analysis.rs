//! Perturbation antiderivative `V`, norm series against `v*` and the bare
//! wave, power-law decay fits and the weighted energy `N(T)`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::correction::{eval_bare_source, eval_g2_g3, eval_source, ExpansionProfile, Field, SourcePart};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{cumulative_trapezoid, simpson};
use crate::solver::{Grid, SimState};
use crate::stats::linear_regression;

/// `V = int_{x_min}^x (v - v*) dy` and `V_t = u - u*` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFields {
    pub t: f64,
    pub v: Vec<f64>,
    pub vt: Vec<f64>,
    /// `v - v*`, which is `V_x`.
    pub vx: Vec<f64>,
}

pub fn compute_v(state: &SimState, grid: &Grid, exp: &ExpansionProfile) -> Result<PerturbationFields> {
    check_state(state, grid)?;
    let n = grid.n_nodes();
    let mut vx = Vec::with_capacity(n);
    let mut vt = Vec::with_capacity(n);
    for i in 0..n {
        let x = grid.x(i);
        vx.push(state.v[i] - exp.eval(Field::V, x, state.t, 0, 0)?);
        vt.push(state.u[i] - exp.eval(Field::U, x, state.t, 0, 0)?);
    }
    Ok(PerturbationFields {
        t: state.t,
        v: cumulative_trapezoid(&vx, grid.h()),
        vt,
        vx,
    })
}

fn check_state(state: &SimState, grid: &Grid) -> Result<()> {
    if state.v.len() != grid.n_nodes() || state.u.len() != grid.n_nodes() {
        return Err(invalid(
            "state",
            format!("{} nodes for a grid of {}", state.v.len(), grid.n_nodes()),
        ));
    }
    Ok(())
}

/// Fourth-order centred first derivative, second order in the two
/// outermost nodes on each side.
pub fn diff4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 5 {
        for i in 1..n.saturating_sub(1) {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        return d;
    }
    for i in 2..n - 2 {
        d[i] = (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h);
    }
    d[1] = (f[2] - f[0]) / (2.0 * h);
    d[n - 2] = (f[n - 1] - f[n - 3]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    d
}

fn l2(f: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = f.iter().map(|x| x * x).collect();
    simpson(&sq, h).max(0.0).sqrt()
}

fn l1(f: &[f64], h: f64) -> f64 {
    let ab: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    simpson(&ab, h)
}

fn linf(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One snapshot's worth of norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    pub l2_v: f64,
    pub l2_vx: f64,
    pub l2_vxx: f64,
    pub l2_vt: f64,
    pub l2_vxt: f64,
    pub l1_v: f64,
    pub linf_v: f64,
    pub linf_v_vbar: f64,
    pub linf_v_vstar: f64,
    pub linf_u_ubar: f64,
    pub linf_u_ustar: f64,
    pub l2_v_vbar: f64,
    pub l2_v_vstar: f64,
    pub linf_s: f64,
}

/// Field selector for the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormField {
    L2V,
    L2Vx,
    L2Vxx,
    L2Vt,
    L2Vxt,
    L1V,
    LinfV,
    LinfVVbar,
    LinfVVstar,
    LinfUUbar,
    LinfUUstar,
    L2VVbar,
    L2VVstar,
    LinfS,
}

impl NormField {
    pub const ALL: [NormField; 14] = [
        NormField::L2V,
        NormField::L2Vx,
        NormField::L2Vxx,
        NormField::L2Vt,
        NormField::L2Vxt,
        NormField::L1V,
        NormField::LinfV,
        NormField::LinfVVbar,
        NormField::LinfVVstar,
        NormField::LinfUUbar,
        NormField::LinfUUstar,
        NormField::L2VVbar,
        NormField::L2VVstar,
        NormField::LinfS,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NormField::L2V => "L2_V",
            NormField::L2Vx => "L2_Vx",
            NormField::L2Vxx => "L2_Vxx",
            NormField::L2Vt => "L2_Vt",
            NormField::L2Vxt => "L2_Vxt",
            NormField::L1V => "L1_V",
            NormField::LinfV => "Linf_V",
            NormField::LinfVVbar => "Linf_v_vbar",
            NormField::LinfVVstar => "Linf_v_vstar",
            NormField::LinfUUbar => "Linf_u_ubar",
            NormField::LinfUUstar => "Linf_u_ustar",
            NormField::L2VVbar => "L2_v_vbar",
            NormField::L2VVstar => "L2_v_vstar",
            NormField::LinfS => "Linf_S",
        }
    }

    /// `(l, k)` for the `d_t^l d_x^k V` entries of `N(T)`.
    pub fn derivative_orders(&self) -> Option<(u32, u32)> {
        match self {
            NormField::L2V => Some((0, 0)),
            NormField::L2Vx => Some((0, 1)),
            NormField::L2Vxx => Some((0, 2)),
            NormField::L2Vt => Some((1, 0)),
            NormField::L2Vxt => Some((1, 1)),
            _ => None,
        }
    }
}

impl NormRecord {
    pub fn get(&self, f: NormField) -> f64 {
        match f {
            NormField::L2V => self.l2_v,
            NormField::L2Vx => self.l2_vx,
            NormField::L2Vxx => self.l2_vxx,
            NormField::L2Vt => self.l2_vt,
            NormField::L2Vxt => self.l2_vxt,
            NormField::L1V => self.l1_v,
            NormField::LinfV => self.linf_v,
            NormField::LinfVVbar => self.linf_v_vbar,
            NormField::LinfVVstar => self.linf_v_vstar,
            NormField::LinfUUbar => self.linf_u_ubar,
            NormField::LinfUUstar => self.linf_u_ustar,
            NormField::L2VVbar => self.l2_v_vbar,
            NormField::L2VVstar => self.l2_v_vstar,
            NormField::LinfS => self.linf_s,
        }
    }
}

/// Norms of one snapshot. `exp` must be the corrected expansion; the bare
/// wave is taken from it.
pub fn snapshot_norms(state: &SimState, grid: &Grid, exp: &ExpansionProfile) -> Result<NormRecord> {
    let h = grid.h();
    let p = compute_v(state, grid, exp)?;
    let bare = exp.bare();
    let t = state.t;
    let n = grid.n_nodes();
    let mut v_vbar = Vec::with_capacity(n);
    let mut u_ubar = Vec::with_capacity(n);
    let mut s = 0.0f64;
    for i in 0..n {
        let x = grid.x(i);
        v_vbar.push(state.v[i] - bare.eval(Field::V, x, t, 0, 0)?);
        u_ubar.push(state.u[i] - bare.eval(Field::U, x, t, 0, 0)?);
        s = s.max(eval_source(exp, x, t).abs());
    }
    let vxx = diff4(&p.vx, h);
    let vxt = diff4(&p.vt, h);
    let rec = NormRecord {
        t,
        l2_v: l2(&p.v, h),
        l2_vx: l2(&p.vx, h),
        l2_vxx: l2(&vxx, h),
        l2_vt: l2(&p.vt, h),
        l2_vxt: l2(&vxt, h),
        l1_v: l1(&p.v, h),
        linf_v: linf(&p.v),
        linf_v_vbar: linf(&v_vbar),
        linf_v_vstar: linf(&p.vx),
        linf_u_ubar: linf(&u_ubar),
        linf_u_ustar: linf(&p.vt),
        l2_v_vbar: l2(&v_vbar, h),
        l2_v_vstar: l2(&p.vx, h),
        linf_s: s,
    };
    if NormField::ALL.iter().any(|&f| !rec.get(f).is_finite()) {
        return Err(Error::InvalidData(format!("non-finite norm at t = {t}")));
    }
    Ok(rec)
}

/// Norms over a trajectory, one record per retained snapshot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub records: Vec<NormRecord>,
    /// Snapshot times dropped because the boundary had been reached.
    pub excluded: Vec<f64>,
}

impl NormSeries {
    pub fn push(&mut self, rec: NormRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(rec.t > last.t) {
                return Err(invalid("t", format!("times must increase, {} after {}", rec.t, last.t)));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn values(&self, f: NormField) -> Vec<f64> {
        self.records.iter().map(|r| r.get(f)).collect()
    }

    pub fn fit(&self, f: NormField, window: (f64, f64)) -> Result<DecayFit> {
        fit_decay_exponent(&self.times(), &self.values(f), window)
    }

    /// One column per field, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let names: Vec<&str> = NormField::ALL.iter().map(|f| f.name()).collect();
        writeln!(out, "t,{}", names.join(","))?;
        for r in &self.records {
            write!(out, "{:.16e}", r.t)?;
            for f in NormField::ALL {
                write!(out, ",{:.16e}", r.get(f))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Norms of every snapshot. Snapshots whose outer nodes deviate from the
/// far field by more than `boundary_tol` are excluded with a warning.
pub fn compute_norms(
    trajectory: &[SimState],
    grid: &Grid,
    exp: &ExpansionProfile,
    boundary_tol: f64,
) -> Result<NormSeries> {
    let ff = exp.wave().far_field();
    let mut series = NormSeries::default();
    for s in trajectory {
        check_state(s, grid)?;
        let n = s.v.len();
        let dev = (s.v[0] - ff.v_minus())
            .abs()
            .max((s.v[n - 1] - ff.v_plus()).abs())
            .max(s.u[0].abs())
            .max(s.u[n - 1].abs());
        if dev > boundary_tol {
            log::warn!("snapshot at t = {} touches the boundary ({dev:.3e}); excluded", s.t);
            series.excluded.push(s.t);
            continue;
        }
        series.push(snapshot_norms(s, grid, exp)?)?;
    }
    Ok(series)
}

/// Power law `y ~ prefactor (1+t)^exponent` fitted on `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub r_squared: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least squares of `ln y` on `ln(1+t)` over samples with `t` in `window`.
pub fn fit_decay_exponent(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(invalid("window", format!("need t_lo < t_hi, got ({lo}, {hi})")));
    }
    if ts.len() != ys.len() {
        return Err(invalid("series", "times and values differ in length"));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t < lo || t > hi {
            continue;
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Fit(format!("value {y} at t = {t} is not positive")));
        }
        lx.push((1.0 + t).ln());
        ly.push(y.ln());
    }
    if lx.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in [{lo}, {hi}], need at least {MIN_FIT_SAMPLES}",
            lx.len()
        )));
    }
    let fit = linear_regression(&lx, &ly).ok_or_else(|| Error::Fit("degenerate window".into()))?;
    Ok(DecayFit {
        exponent: fit.slope,
        prefactor: fit.intercept.exp(),
        t_lo: lo,
        t_hi: hi,
        r_squared: fit.r_squared,
        samples: lx.len(),
    })
}

/// `N(T)` restricted to `l <= 1`, `l + k <= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub t: f64,
    pub value: f64,
}

fn weighted_sum(r: &NormRecord) -> f64 {
    NormField::ALL
        .iter()
        .filter_map(|f| f.derivative_orders().map(|(l, k)| (f, l, k)))
        .map(|(f, l, k)| (1.0 + r.t).powf(l as f64 + k as f64 / 2.0 + 0.75) * r.get(*f))
        .sum()
}

/// Sup over snapshots with `t <= big_t` of the weighted sum.
pub fn compute_weighted_norm(series: &NormSeries, big_t: f64) -> WeightedNorm {
    let value = series
        .records
        .iter()
        .filter(|r| r.t <= big_t)
        .map(weighted_sum)
        .fold(0.0, f64::max);
    WeightedNorm { t: big_t, value }
}

/// `N(T)` at every snapshot time.
pub fn weighted_norm_history(series: &NormSeries) -> Vec<WeightedNorm> {
    let mut acc = 0.0f64;
    series
        .records
        .iter()
        .map(|r| {
            acc = acc.max(weighted_sum(r));
            WeightedNorm { t: r.t, value: acc }
        })
        .collect()
}

/// Decay of the expansion residual, profile evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRates {
    pub times: Vec<f64>,
    pub sup_s: Vec<f64>,
    pub sup_bare: Vec<f64>,
    pub l1_g2: Vec<f64>,
    pub l1_g3: Vec<f64>,
    pub fit_s: DecayFit,
    pub fit_bare: DecayFit,
    pub fit_g2: DecayFit,
    pub fit_g3: DecayFit,
}

/// `sup_x |S[v*]|`, `sup_x |S[vbar]|` and the `L^1` norms of `g2`, `g3` at
/// `n` log-spaced times on `window`, each sampled on the profile's own
/// similarity nodes, then fitted.
pub fn residual_rates(exp: &ExpansionProfile, window: (f64, f64), n: usize) -> Result<ResidualRates> {
    if !exp.is_corrected() {
        return Err(invalid("expansion", "residual rates need the corrected expansion"));
    }
    let times = crate::solver::log_spaced_times(window.0, window.1, n);
    let xi = exp.wave().xi_grid();
    let dxi = exp.wave().grid().spacing();
    let (mut sup_s, mut sup_bare, mut l1_g2, mut l1_g3) = (vec![], vec![], vec![], vec![]);
    for &t in &times {
        let sc = (1.0 + t).sqrt();
        let (mut a, mut b) = (0.0f64, 0.0f64);
        let mut g2 = Vec::with_capacity(xi.len());
        let mut g3 = Vec::with_capacity(xi.len());
        for &z in &xi {
            let x = z * sc;
            a = a.max(eval_source(exp, x, t).abs());
            b = b.max(eval_bare_source(exp, x, t).abs());
            g2.push(eval_g2_g3(exp, x, t, SourcePart::G2, 0, 0)?.abs());
            g3.push(eval_g2_g3(exp, x, t, SourcePart::G3, 0, 0)?.abs());
        }
        sup_s.push(a);
        sup_bare.push(b);
        l1_g2.push(sc * simpson(&g2, dxi));
        l1_g3.push(sc * simpson(&g3, dxi));
    }
    Ok(ResidualRates {
        fit_s: fit_decay_exponent(&times, &sup_s, window)?,
        fit_bare: fit_decay_exponent(&times, &sup_bare, window)?,
        fit_g2: fit_decay_exponent(&times, &l1_g2, window)?,
        fit_g3: fit_decay_exponent(&times, &l1_g3, window)?,
        times,
        sup_s,
        sup_bare,
        l1_g2,
        l1_g3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_times(n: usize) -> Vec<f64> {
        crate::solver::log_spaced_times(1.0, 400.0, n)
    }

    #[test]
    fn exact_power_law() {
        let ts = log_times(80);
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (1.0 + t).powf(-1.5)).collect();
        let fit = fit_decay_exponent(&ts, &ys, (100.0, 400.0)).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-6);
        assert!((fit.prefactor - 3.0).abs() < 1e-6);
        assert!(fit.samples >= 10);
    }

    #[test]
    fn noisy_power_law_over_seeds() {
        let ts = log_times(80);
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = ts
                .iter()
                .map(|t| 3.0 * (1.0 + t).powf(-1.5) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
                .collect();
            let fit = fit_decay_exponent(&ts, &ys, (100.0, 400.0)).unwrap();
            worst = worst.max((fit.exponent + 1.5).abs());
        }
        assert!(worst < 0.02, "worst deviation {worst}");
    }

    #[test]
    fn fit_rejects_bad_windows() {
        let ts = log_times(80);
        let mut ys: Vec<f64> = ts.iter().map(|t| (1.0 + t).powf(-1.0)).collect();
        assert!(fit_decay_exponent(&ts, &ys, (300.0, 310.0)).is_err());
        assert!(fit_decay_exponent(&ts, &ys, (400.0, 100.0)).is_err());
        ys[70] = 0.0;
        assert!(matches!(fit_decay_exponent(&ts, &ys, (100.0, 400.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn diff4_is_exact_on_quartics() {
        let h = 0.1;
        let f: Vec<f64> = (0..50).map(|i| (i as f64 * h).powi(4)).collect();
        let d = diff4(&f, h);
        for i in 2..48 {
            let x = i as f64 * h;
            assert!((d[i] - 4.0 * x.powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn weighted_norm_is_monotone() {
        let mut series = NormSeries::default();
        for (i, t) in log_times(20).into_iter().enumerate() {
            let mut r = NormRecord {
                t,
                l2_v: 0.0,
                l2_vx: 0.0,
                l2_vxx: 0.0,
                l2_vt: 0.0,
                l2_vxt: 0.0,
                l1_v: 0.0,
                linf_v: 0.0,
                linf_v_vbar: 0.0,
                linf_v_vstar: 0.0,
                linf_u_ubar: 0.0,
                linf_u_ustar: 0.0,
                l2_v_vbar: 0.0,
                l2_v_vstar: 0.0,
                linf_s: 0.0,
            };
            r.l2_v = if i % 3 == 0 { 1.0 } else { 0.01 };
            series.push(r).unwrap();
        }
        let hist = weighted_norm_history(&series);
        assert!(hist.windows(2).all(|w| w[1].value >= w[0].value));
        let last = hist.last().unwrap();
        assert_eq!(compute_weighted_norm(&series, last.t).value, last.value);
    }
}
