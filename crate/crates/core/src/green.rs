//! Approximate Green function `G(x,t;y,s)` for `V_t + (a V_x)_x = f`, its
//! defect `R_G = G_s - (a(y,s) G_y)_y`, the comparison kernels used to bound
//! it, and a sampled check of that bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correction::{ExpansionProfile, Field};
use crate::error::{invalid, Error, Result};
use crate::pressure::PressureLaw;
use crate::quadrature::gauss_legendre_composite;

/// Which branch of the piecewise `eta` rule applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// `s <= t/2`: `eta = y / sqrt(1 + t/2)`.
    Early,
    /// `s > t/2`: `eta = y / sqrt(1 + s)`.
    Late,
}

impl Side {
    pub(crate) fn of(t: f64, s: f64) -> Self {
        if s <= 0.5 * t {
            Side::Early
        } else {
            Side::Late
        }
    }
}

/// Positive frozen diffusivity `B = -A(y,s;t)` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FrozenCoef {
    pub b: f64,
    pub b_y: f64,
    pub b_yy: f64,
    pub b_s: f64,
}

/// Positive PDE diffusivity `beta = -a(y,s)` and `beta_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PdeCoef {
    pub beta: f64,
    pub beta_y: f64,
}

/// Coefficients of the linearised equation around the expansion.
#[derive(Debug, Clone)]
pub struct KernelContext {
    exp: ExpansionProfile,
    law: PressureLaw,
    b_min: f64,
    b_max: f64,
}

impl KernelContext {
    pub fn new(exp: ExpansionProfile) -> Self {
        let law = *exp.law();
        let (mut b_min, mut b_max) = (f64::INFINITY, 0.0f64);
        // v* at t = 0 carries the largest correction
        for xi in exp.wave().xi_grid() {
            for t in [0.0, 1.0, 1e6] {
                let b = -law.dp(exp.vstar_xi(xi, t, 0));
                b_min = b_min.min(b);
                b_max = b_max.max(b);
            }
        }
        for v in [exp.wave().far_field().v_minus(), exp.wave().far_field().v_plus()] {
            b_min = b_min.min(-law.dp(v));
            b_max = b_max.max(-law.dp(v));
        }
        Self { exp, law, b_min, b_max }
    }

    pub fn expansion(&self) -> &ExpansionProfile {
        &self.exp
    }

    /// Bounds of `-a` and `-A` over all arguments.
    pub fn diffusivity_range(&self) -> (f64, f64) {
        (self.b_min, self.b_max)
    }

    /// `a(x,t) = P'(v*(x,t))`.
    pub fn a(&self, x: f64, t: f64) -> f64 {
        self.law.dp(self.exp.vstar_xi(x / (1.0 + t).sqrt(), t, 0))
    }

    /// `A(y,s;t) = P'(v*(eta, t))` with `v*(., t)` read as a profile in the
    /// similarity variable.
    pub fn a_frozen(&self, y: f64, s: f64, t: f64) -> f64 {
        -self.frozen(y, s, t, Side::of(t, s)).b
    }

    pub(crate) fn pde(&self, y: f64, s: f64) -> PdeCoef {
        let v = self.exp.eval(Field::V, y, s, 0, 0).unwrap_or(f64::NAN);
        let vy = self.exp.eval(Field::V, y, s, 1, 0).unwrap_or(f64::NAN);
        PdeCoef {
            beta: -self.law.dp(v),
            beta_y: -self.law.d2p(v) * vy,
        }
    }

    pub(crate) fn frozen(&self, y: f64, s: f64, t: f64, side: Side) -> FrozenCoef {
        let (eta_y, eta_s_over_eta) = match side {
            Side::Early => (1.0 / (1.0 + 0.5 * t).sqrt(), 0.0),
            Side::Late => (1.0 / (1.0 + s).sqrt(), -0.5 / (1.0 + s)),
        };
        let eta = y * eta_y;
        let w0 = self.exp.vstar_xi(eta, t, 0);
        let w1 = self.exp.vstar_xi(eta, t, 1);
        let w2 = self.exp.vstar_xi(eta, t, 2);
        let (p1, p2, p3) = (self.law.dp(w0), self.law.d2p(w0), self.law.d3p(w0));
        FrozenCoef {
            b: -p1,
            b_y: -p2 * w1 * eta_y,
            b_yy: -(p3 * w1 * w1 + p2 * w2) * eta_y * eta_y,
            b_s: -p2 * w1 * eta * eta_s_over_eta,
        }
    }
}

/// `(G, R_G)` from precomputed coefficients; `alpha = -a(x,t)`,
/// `z = x - y`, `tau = t - s > 0`.
#[inline]
pub(crate) fn kernel_and_defect(alpha: f64, fc: &FrozenCoef, pc: &PdeCoef, z: f64, tau: f64) -> (f64, f64) {
    let b = fc.b;
    let z2 = z * z;
    let g = (4.0 * std::f64::consts::PI * alpha * tau).powf(-0.5) * (-z2 / (4.0 * b * tau)).exp();
    if g == 0.0 {
        return (0.0, 0.0);
    }
    let b2 = b * b;
    let e_y = (2.0 * z * b + z2 * fc.b_y) / (4.0 * tau * b2);
    let e_yy = (-2.0 / b - 4.0 * z * fc.b_y / b2 + z2 * fc.b_yy / b2 - 2.0 * z2 * fc.b_y * fc.b_y / (b2 * b))
        / (4.0 * tau);
    let g_s = 1.0 / (2.0 * tau) + z2 * (fc.b_s * tau - b) / (4.0 * b2 * tau * tau);
    let r = g_s + pc.beta_y * e_y + pc.beta * (e_y * e_y + e_yy);
    (g, g * r)
}

fn check_times(t: f64, s: f64) -> Result<()> {
    if !(s < t) {
        return Err(Error::KernelDomain(format!("need s < t, got s = {s}, t = {t}")));
    }
    if !(s >= 0.0) {
        return Err(Error::KernelDomain(format!("need s >= 0, got {s}")));
    }
    Ok(())
}

/// `G(x,t;y,s)` with the diffusivities written positively.
pub fn eval_g(ctx: &KernelContext, x: f64, t: f64, y: f64, s: f64) -> Result<f64> {
    check_times(t, s)?;
    let alpha = -ctx.a(x, t);
    let b = ctx.frozen(y, s, t, Side::of(t, s)).b;
    let tau = t - s;
    Ok((4.0 * std::f64::consts::PI * alpha * tau).powf(-0.5) * (-(x - y).powi(2) / (4.0 * b * tau)).exp())
}

/// `R_G` from the closed-form derivatives of `G`.
pub fn eval_rg_analytic(ctx: &KernelContext, x: f64, t: f64, y: f64, s: f64) -> Result<f64> {
    check_times(t, s)?;
    let fc = ctx.frozen(y, s, t, Side::of(t, s));
    let pc = ctx.pde(y, s);
    Ok(kernel_and_defect(-ctx.a(x, t), &fc, &pc, x - y, t - s).1)
}

fn d1_4(f: impl Fn(f64) -> f64, c: f64, h: f64) -> f64 {
    (8.0 * (f(c + h) - f(c - h)) - (f(c + 2.0 * h) - f(c - 2.0 * h))) / (12.0 * h)
}

fn d2_4(f: impl Fn(f64) -> f64, c: f64, h: f64) -> f64 {
    let f0 = f(c);
    (16.0 * ((f(c + h) - f0) + (f(c - h) - f0)) - ((f(c + 2.0 * h) - f0) + (f(c - 2.0 * h) - f0))) / (12.0 * h * h)
}

/// `R_G` by fourth-order centred differences: `h_s = fd_step (t-s)` in `s`,
/// `h_y = fd_step sqrt(t-s)` in `y`. Needs `s < t - 4 fd_step` and
/// `fd_step <= 1/8`. On the branch switch `s = t/2` the stencil stays on
/// one side.
pub fn eval_rg(ctx: &KernelContext, x: f64, t: f64, y: f64, s: f64, fd_step: f64) -> Result<f64> {
    check_times(t, s)?;
    if !(fd_step > 0.0) {
        return Err(invalid("fd_step", format!("must be positive, got {fd_step}")));
    }
    if !(s < t - 4.0 * fd_step) {
        return Err(Error::KernelDomain(format!("need s < t - 4 fd_step, got s = {s}, t = {t}")));
    }
    if fd_step > 0.125 {
        return Err(Error::KernelDomain(format!(
            "fd_step {fd_step} is too coarse for the local kernel width"
        )));
    }
    let tau = t - s;
    let (hs, hy) = (fd_step * tau, fd_step * tau.sqrt());
    let side = Side::of(t, s);
    let alpha = -ctx.a(x, t);
    let g = |yy: f64, ss: f64| {
        let b = ctx.frozen(yy, ss, t, side).b;
        let tt = t - ss;
        (4.0 * std::f64::consts::PI * alpha * tt).powf(-0.5) * (-(x - yy).powi(2) / (4.0 * b * tt)).exp()
    };
    let g_s = d1_4(|ss| g(y, ss), s, hs);
    let g_y = d1_4(|yy| g(yy, s), y, hy);
    let g_yy = d2_4(|yy| g(yy, s), y, hy);
    let a_y = d1_4(|yy| ctx.law.dp(ctx.exp.eval(Field::V, yy, s, 0, 0).unwrap_or(f64::NAN)), y, hy);
    let a = -ctx.pde(y, s).beta;
    Ok(g_s - (a_y * g_y + a * g_yy))
}

/// Fitted constants of the comparison kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonKernels {
    /// Spreading constant in `G_D`.
    pub d: f64,
    /// Rate in `E(y,tau) = exp(-C_E y^2/(1+tau))`.
    pub c_e: f64,
}

/// Argument bundle for [`eval_comparison`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparison {
    /// `G_D(y, s)`.
    GD { y: f64, s: f64 },
    /// `E(y, tau)`.
    E { y: f64, tau: f64 },
    /// `Theta(t, s)`.
    Theta { t: f64, s: f64 },
}

impl ComparisonKernels {
    /// `D = 8 max(-A)` leaves room for the polynomial factors of `R_G`;
    /// `C_E` is half the fitted Gaussian tail rate of the wave.
    pub fn fitted(ctx: &KernelContext) -> Self {
        let c_e = ctx
            .exp
            .wave()
            .tail_constants()
            .map(|tc| 0.5 * tc.c_rate)
            .filter(|c| *c > 0.0)
            .unwrap_or(0.1);
        Self {
            d: 8.0 * ctx.b_max,
            c_e,
        }
    }

    pub fn g_d(&self, y: f64, s: f64) -> f64 {
        (4.0 * std::f64::consts::PI * s).powf(-0.5) * (-y * y / (self.d * s)).exp()
    }

    pub fn e(&self, y: f64, tau: f64) -> f64 {
        (-self.c_e * y * y / (1.0 + tau)).exp()
    }

    /// `E(y,s)` for `s > t/2`, `E(y,t)` otherwise.
    pub fn e_tilde(&self, y: f64, t: f64, s: f64) -> f64 {
        match Side::of(t, s) {
            Side::Late => self.e(y, s),
            Side::Early => self.e(y, t),
        }
    }

    /// Exact `||G_D(., s)||_{L^p}`.
    pub fn g_d_lp_exact(&self, s: f64, p: f64) -> f64 {
        (4.0 * std::f64::consts::PI * s).powf(-0.5) * (std::f64::consts::PI * self.d * s / p).powf(0.5 / p)
    }

    /// `||G_D(., s)||_{L^p}` by Gauss-Legendre quadrature.
    pub fn g_d_lp_quadrature(&self, s: f64, p: f64) -> f64 {
        let l = 12.0 * (self.d * s).sqrt();
        let panel = 0.05 * (self.d * s).sqrt();
        gauss_legendre_composite(-l, l, panel, |y| self.g_d(y, s).powf(p)).powf(1.0 / p)
    }
}

pub fn theta(t: f64, s: f64) -> f64 {
    let tail = (t - s).powf(-0.5) * (1.0 + s).powf(-0.5);
    match Side::of(t, s) {
        Side::Late => 1.0 / (1.0 + s) + tail,
        Side::Early => 1.0 / (1.0 + t) + tail,
    }
}

/// `(Theta(t, t/2^-), Theta(t, t/2^+))`.
pub fn theta_one_sided(t: f64) -> (f64, f64) {
    let s = 0.5 * t;
    let tail = (t - s).powf(-0.5) * (1.0 + s).powf(-0.5);
    (1.0 / (1.0 + t) + tail, 1.0 / (1.0 + s) + tail)
}

pub fn eval_comparison(k: &ComparisonKernels, what: Comparison) -> f64 {
    match what {
        Comparison::GD { y, s } => k.g_d(y, s),
        Comparison::E { y, tau } => k.e(y, tau),
        Comparison::Theta { t, s } => theta(t, s),
    }
}

/// One row of the `L^p` scaling check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpScalingRow {
    pub p: f64,
    pub s: Vec<f64>,
    pub norms: Vec<f64>,
    /// `norm * s^((1-1/p)/2)`, constant under exact scaling.
    pub normalised: Vec<f64>,
    /// `max/min - 1` of the normalised values.
    pub spread: f64,
    /// Largest relative gap between quadrature and closed form.
    pub quadrature_error: f64,
}

pub fn gd_lp_scaling(k: &ComparisonKernels, ps: &[f64], ss: &[f64]) -> Vec<LpScalingRow> {
    ps.iter()
        .map(|&p| {
            let norms: Vec<f64> = ss.iter().map(|&s| k.g_d_lp_quadrature(s, p)).collect();
            let normalised: Vec<f64> = ss
                .iter()
                .zip(&norms)
                .map(|(&s, n)| n * s.powf(0.5 * (1.0 - 1.0 / p)))
                .collect();
            let hi = normalised.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = normalised.iter().copied().fold(f64::INFINITY, f64::min);
            let quadrature_error = ss
                .iter()
                .zip(&norms)
                .map(|(&s, n)| (n / k.g_d_lp_exact(s, p) - 1.0).abs())
                .fold(0.0, f64::max);
            LpScalingRow {
                p,
                s: ss.to_vec(),
                norms,
                normalised,
                spread: hi / lo - 1.0,
                quadrature_error,
            }
        })
        .collect()
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// A point `(x, t; y, s)` with `0 <= s < t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: f64,
    pub t: f64,
    pub y: f64,
    pub s: f64,
}

/// Sampling box for the bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub t_min: f64,
    pub t_max: f64,
    /// `|y| <= y_scale sqrt(1+t)`.
    pub y_scale: f64,
    /// `|x - y| <= z_scale sqrt(t-s)`.
    pub z_scale: f64,
    /// `s <= (1 - s_gap) t`.
    pub s_gap: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            t_max: 400.0,
            y_scale: 4.0,
            z_scale: 6.0,
            s_gap: 1e-3,
        }
    }
}

/// Halton points `start..start+n` in bases 2, 3, 5, 7 under a random
/// Cranley-Patterson shift drawn from `seed`.
pub fn kernel_samples(bx: &SampleBox, start: u64, n: usize, seed: u64) -> Vec<KernelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    (0..n as u64)
        .map(|i| {
            let u: Vec<f64> = [2u64, 3, 5, 7]
                .iter()
                .zip(shift)
                .map(|(&b, sh)| (halton(start + i, b) + sh).fract())
                .collect();
            let t = (bx.t_min.ln() + u[0] * (bx.t_max / bx.t_min).ln()).exp();
            let s = t * (1.0 - bx.s_gap) * u[1];
            let y = bx.y_scale * (1.0 + t).sqrt() * (2.0 * u[2] - 1.0);
            let x = y + bx.z_scale * (t - s).sqrt() * (2.0 * u[3] - 1.0);
            KernelSample { x, t, y, s }
        })
        .collect()
}

/// `|R_G| / (delta Theta E~ G_D)` at one sample.
pub fn bound_ratio(ctx: &KernelContext, k: &ComparisonKernels, delta: f64, p: &KernelSample) -> Result<f64> {
    let rg = eval_rg_analytic(ctx, p.x, p.t, p.y, p.s)?;
    let bound = delta * theta(p.t, p.s) * k.e_tilde(p.y, p.t, p.s) * k.g_d(p.x - p.y, p.t - p.s);
    if rg == 0.0 {
        return Ok(0.0);
    }
    if bound == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(rg.abs() / bound)
}

/// Result of fitting `C` on one sample set and validating on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub kernels: ComparisonKernels,
    pub delta: f64,
    pub seed: u64,
    pub fit_samples: usize,
    pub holdout_samples: usize,
    pub max_ratio_fit: f64,
    pub max_ratio_holdout: f64,
    /// Twice the largest ratio on the fit set.
    pub c: f64,
    /// The same rule applied to the holdout set.
    pub c_holdout: f64,
    pub violations: usize,
    pub a_convention: String,
}

impl BoundFit {
    /// The fitted constants agree within a factor of two.
    pub fn stable(&self) -> bool {
        let r = self.c / self.c_holdout;
        (0.5..=2.0).contains(&r)
    }
}

/// Ratios at every sample, computed on `threads` scoped threads (0 means
/// one per available core). The output order is the sample order.
pub fn bound_ratios(
    ctx: &KernelContext,
    k: &ComparisonKernels,
    delta: f64,
    pts: &[KernelSample],
    threads: usize,
) -> Result<Vec<f64>> {
    let threads = match threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    let chunk = pts.len().div_ceil(threads.max(1)).max(1);
    std::thread::scope(|sc| {
        let handles: Vec<_> = pts
            .chunks(chunk)
            .map(|c| sc.spawn(move || c.iter().map(|p| bound_ratio(ctx, k, delta, p)).collect::<Result<Vec<f64>>>()))
            .collect();
        let mut out = Vec::with_capacity(pts.len());
        for h in handles {
            out.extend(h.join().expect("bound worker panicked")?);
        }
        Ok(out)
    })
}

pub fn fit_kernel_bound(
    ctx: &KernelContext,
    bx: &SampleBox,
    n_fit: usize,
    n_holdout: usize,
    seed: u64,
    threads: usize,
) -> Result<BoundFit> {
    let delta = ctx.exp.wave().far_field().delta();
    if delta == 0.0 {
        return Err(Error::Degenerate("the bound is trivial for a constant profile".into()));
    }
    if n_fit == 0 || n_holdout == 0 {
        return Err(invalid("samples", "fit and holdout sets must be nonempty"));
    }
    let k = ComparisonKernels::fitted(ctx);
    let fit = bound_ratios(ctx, &k, delta, &kernel_samples(bx, 1, n_fit, seed), threads)?;
    let hold = bound_ratios(ctx, &k, delta, &kernel_samples(bx, 1 + n_fit as u64, n_holdout, seed), threads)?;
    let max_ratio_fit = fit.iter().copied().fold(0.0, f64::max);
    let max_ratio_holdout = hold.iter().copied().fold(0.0, f64::max);
    let c = 2.0 * max_ratio_fit;
    Ok(BoundFit {
        kernels: k,
        delta,
        seed,
        fit_samples: n_fit,
        holdout_samples: n_holdout,
        max_ratio_fit,
        max_ratio_holdout,
        c,
        c_holdout: 2.0 * max_ratio_holdout,
        violations: hold.iter().filter(|&&r| r > c).count(),
        a_convention: "A(y,s;t) = P'(v*) with v* taken at time t as a profile in eta".into(),
    })
}
