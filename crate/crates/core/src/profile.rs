//! Self-similar diffusion wave of the porous medium equation.
//!
//! The profile `vbar(xi)` solves `xi vbar' / 2 = (P(vbar))''` with
//! `vbar(+-inf) = v_+-`. Linearised about a constant state the ODE reads
//! `P'(v) v'' = xi v' / 2`; with `P' < 0` every solution has a Gaussian
//! decaying slope, so integrating outward from `xi = 0` is stable. The
//! boundary problem is solved by Newton shooting on `(vbar(0), vbar'(0))`
//! with a Taylor-series integrator, and the Taylor coefficients at every
//! node are kept so the profile and its derivatives can be evaluated
//! anywhere to near machine precision.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::jet::{Jet, JET_LEN};
use crate::pressure::{FarField, PressureLaw};
use crate::scaled::ScaledField;
use crate::stats::fit_gaussian_tail;

pub const DEFAULT_L_XI: f64 = 12.0;
pub const DEFAULT_XI_SPACING: f64 = 0.01;

/// Highest `xi`-derivative order served by the stored Taylor data.
pub const MAX_XI_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    pub c_big: f64,
    pub c_rate: f64,
    pub fit_quality: f64,
}

/// Uniform `xi` grid symmetric about the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    half: usize,
    h: f64,
}

impl XiGrid {
    pub fn new(l_xi: f64, spacing: f64) -> Result<Self> {
        if !(l_xi.is_finite() && l_xi > 0.0) {
            return Err(invalid("l_xi", format!("must be positive, got {l_xi}")));
        }
        if !(spacing > 0.0 && spacing <= l_xi) {
            return Err(invalid("xi_spacing", format!("must be in (0, l_xi], got {spacing}")));
        }
        let half = (l_xi / spacing).ceil() as usize;
        Ok(Self {
            half,
            h: l_xi / half as f64,
        })
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn l_xi(&self) -> f64 {
        self.half as f64 * self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Nearest node index and offset from it; `None` outside `[-L, L]`.
    pub(crate) fn locate(&self, xi: f64) -> Option<(usize, f64)> {
        let l = self.l_xi();
        if !(xi.abs() <= l) {
            return None;
        }
        let i = ((xi / self.h).round() as i64 + self.half as i64).clamp(0, 2 * self.half as i64) as usize;
        Some((i, xi - self.node(i)))
    }
}

/// Taylor data of `vbar` and `P(vbar)` about `xi0` given `vbar(xi0)` and
/// `vbar'(xi0)`.
pub(crate) fn wave_jets(law: &PressureLaw, xi0: f64, v0: f64, p0: f64) -> (Jet, Jet) {
    let g = -law.gamma();
    let mut v = Jet::zero();
    let mut w = Jet::zero();
    v.c[0] = v0;
    v.c[1] = p0;
    w.c[0] = v0.powf(g);
    w.c[1] = v.pow_coef(g, &w, 1);
    let dp0 = law.dp(v0);
    for k in 0..JET_LEN - 2 {
        // coefficient k of xi * v' / 2
        let rhs = 0.5 * (xi0 * (k + 1) as f64 * v.c[k + 1] + k as f64 * v.c[k]);
        let target = rhs / ((k + 1) * (k + 2)) as f64;
        let rest = v.pow_coef(g, &w, k + 2);
        v.c[k + 2] = (target - rest) / dp0;
        w.c[k + 2] = target;
    }
    (v, w)
}

/// Integrate `(v, v')` from `xi = 0` over `steps` steps of signed size `h`,
/// calling `visit` with each node's jets.
fn shoot_half(
    law: &PressureLaw,
    v0: f64,
    p0: f64,
    h: f64,
    steps: usize,
    mut visit: impl FnMut(usize, &Jet, &Jet),
) -> Option<(f64, f64)> {
    let (mut v, mut p) = (v0, p0);
    for i in 0..=steps {
        if !(v > 0.0 && v.is_finite() && p.is_finite()) {
            return None;
        }
        let (jv, jw) = wave_jets(law, i as f64 * h, v, p);
        visit(i, &jv, &jw);
        if i == steps {
            break;
        }
        v = jv.deriv_at(h, 0);
        p = jv.deriv_at(h, 1);
    }
    Some((v, p))
}

struct ShotResult {
    mismatch: [f64; 2],
}

fn shoot(law: &PressureLaw, grid: &XiGrid, ff: &FarField, v0: f64, s: f64) -> Option<ShotResult> {
    let h = grid.spacing();
    let (vr, _) = shoot_half(law, v0, s, h, grid.half, |_, _, _| {})?;
    let (vl, _) = shoot_half(law, v0, s, -h, grid.half, |_, _, _| {})?;
    Some(ShotResult {
        mismatch: [vl - ff.v_minus(), vr - ff.v_plus()],
    })
}

fn norm2(m: [f64; 2]) -> f64 {
    m[0].abs().max(m[1].abs())
}

/// Damped Newton on the shooting parameters. Returns `(vbar(0), vbar'(0))`.
fn newton_shoot(
    law: &PressureLaw,
    grid: &XiGrid,
    ff: &FarField,
    guess: (f64, f64),
) -> Result<(f64, f64)> {
    const MAX_ITER: usize = 60;
    let (mut v0, mut s) = guess;
    let mut f = shoot(law, grid, ff, v0, s).ok_or(Error::NonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let scale = ff.v_minus().max(ff.v_plus());
    for iter in 0..MAX_ITER {
        let r = norm2(f.mismatch);
        if r <= 4.0 * f64::EPSILON * scale {
            return Ok((v0, s));
        }
        let ev = 1e-7 * scale;
        let es = 1e-7 * s.abs().max(1e-3 * scale);
        let fv = shoot(law, grid, ff, v0 + ev, s).ok_or(Error::NonConvergence {
            iterations: iter,
            residual: r,
        })?;
        let fs = shoot(law, grid, ff, v0, s + es).ok_or(Error::NonConvergence {
            iterations: iter,
            residual: r,
        })?;
        let j = [
            [(fv.mismatch[0] - f.mismatch[0]) / ev, (fs.mismatch[0] - f.mismatch[0]) / es],
            [(fv.mismatch[1] - f.mismatch[1]) / ev, (fs.mismatch[1] - f.mismatch[1]) / es],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: r,
            });
        }
        let dv = (f.mismatch[0] * j[1][1] - f.mismatch[1] * j[0][1]) / det;
        let ds = (j[0][0] * f.mismatch[1] - j[1][0] * f.mismatch[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (nv, ns) = (v0 - lambda * dv, s - lambda * ds);
            if let Some(nf) = shoot(law, grid, ff, nv, ns) {
                if norm2(nf.mismatch) < r {
                    v0 = nv;
                    s = ns;
                    f = nf;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            // stagnated at the rounding floor
            if r <= 1e-12 * scale {
                return Ok((v0, s));
            }
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: r,
            });
        }
    }
    let r = norm2(f.mismatch);
    if r <= 1e-12 * scale {
        Ok((v0, s))
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_ITER,
            residual: r,
        })
    }
}

fn heat_guess(law: &PressureLaw, ff: &FarField) -> (f64, f64) {
    let mid = ff.midpoint();
    let c = -law.dp(mid);
    (mid, (ff.v_plus() - ff.v_minus()) / (2.0 * (std::f64::consts::PI * c).sqrt()))
}

/// Solve with continuation in the jump size when the direct Newton fails.
fn solve_shooting(law: &PressureLaw, grid: &XiGrid, ff: &FarField) -> Result<(f64, f64)> {
    match newton_shoot(law, grid, ff, heat_guess(law, ff)) {
        Ok(sol) => return Ok(sol),
        Err(e) => log::debug!("direct shooting failed ({e}); switching to continuation"),
    }
    let mid = ff.midpoint();
    let mut last_err = None;
    for stages in [4usize, 16, 64] {
        let mut guess = (mid, 0.0);
        let mut ok = true;
        for i in 1..=stages {
            let lam = i as f64 / stages as f64;
            let sub = FarField::new(mid + lam * (ff.v_minus() - mid), mid + lam * (ff.v_plus() - mid))?;
            if i == 1 {
                guess = heat_guess(law, &sub);
            }
            match newton_shoot(law, grid, &sub, guess) {
                Ok(sol) => {
                    // extrapolate the slope to the next stage
                    guess = (sol.0, sol.1 * (i + 1) as f64 / i as f64);
                    if i == stages {
                        return Ok(sol);
                    }
                }
                Err(e) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            break;
        }
    }
    Err(last_err.unwrap_or(Error::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
    }))
}

/// Coefficients of the sixth-order centred second difference.
const D2_6: [f64; 7] = [
    1.0 / 90.0,
    -3.0 / 20.0,
    3.0 / 2.0,
    -49.0 / 18.0,
    3.0 / 2.0,
    -3.0 / 20.0,
    1.0 / 90.0,
];

/// The diffusion wave on a `xi` grid.
#[derive(Debug, Clone)]
pub struct DiffusionWaveProfile {
    law: PressureLaw,
    far_field: FarField,
    grid: XiGrid,
    tol: f64,
    v_jets: Vec<Jet>,
    w_jets: Vec<Jet>,
    max_residual: f64,
    tail: Option<TailConstants>,
}

/// Solve the diffusion-wave boundary problem on `[-l_xi, l_xi]` with the
/// default node spacing.
pub fn solve_diffusion_wave(
    law: &PressureLaw,
    ff: &FarField,
    l_xi: f64,
    tol: f64,
) -> Result<DiffusionWaveProfile> {
    solve_diffusion_wave_with_spacing(law, ff, l_xi, tol, DEFAULT_XI_SPACING)
}

pub fn solve_diffusion_wave_with_spacing(
    law: &PressureLaw,
    ff: &FarField,
    l_xi: f64,
    tol: f64,
    spacing: f64,
) -> Result<DiffusionWaveProfile> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    let grid = XiGrid::new(l_xi, spacing)?;
    let (v0, s) = if ff.is_constant() {
        (ff.v_minus(), 0.0)
    } else {
        solve_shooting(law, &grid, ff)?
    };

    let n = grid.len();
    let half = grid.half;
    let h = grid.spacing();
    let mut v_jets = vec![Jet::zero(); n];
    let mut w_jets = vec![Jet::zero(); n];
    let fail = || Error::Integration("profile integration left the physical range".into());
    shoot_half(law, v0, s, h, half, |i, jv, jw| {
        v_jets[half + i] = *jv;
        w_jets[half + i] = *jw;
    })
    .ok_or_else(fail)?;
    shoot_half(law, v0, s, -h, half, |i, jv, jw| {
        v_jets[half - i] = *jv;
        w_jets[half - i] = *jw;
    })
    .ok_or_else(fail)?;

    let mut profile = DiffusionWaveProfile {
        law: *law,
        far_field: *ff,
        grid,
        tol,
        v_jets,
        w_jets,
        max_residual: 0.0,
        tail: None,
    };

    let (residual, at) = profile.ode_residual();
    profile.max_residual = residual;
    if residual > tol {
        return Err(Error::ResidualTooLarge {
            residual,
            tol,
            xi: at,
        });
    }
    let tail = profile.tail_truncation_estimate();
    if tail > tol {
        return Err(Error::DomainTooSmall {
            l_xi: profile.grid.l_xi(),
            tail,
            tol,
        });
    }
    if !ff.is_constant() {
        profile.tail = certify_tails(&profile).ok();
    }
    Ok(profile)
}

impl DiffusionWaveProfile {
    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    pub fn far_field(&self) -> &FarField {
        &self.far_field
    }

    pub fn grid(&self) -> &XiGrid {
        &self.grid
    }

    pub fn l_xi(&self) -> f64 {
        self.grid.l_xi()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn xi_grid(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// `k`-th derivative of `vbar` at node `i`.
    pub fn node_deriv(&self, i: usize, k: usize) -> f64 {
        self.v_jets[i].deriv_at(0.0, k)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.node_deriv(i, 0)).collect()
    }

    pub fn deriv1(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.node_deriv(i, 1)).collect()
    }

    pub fn deriv2(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.node_deriv(i, 2)).collect()
    }

    pub fn deriv3(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| self.node_deriv(i, 3)).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn tail_constants(&self) -> Option<TailConstants> {
        self.tail
    }

    pub fn is_constant(&self) -> bool {
        self.far_field.is_constant()
    }

    pub(crate) fn jets_at(&self, xi: f64) -> Option<(&Jet, &Jet, f64)> {
        self.grid
            .locate(xi)
            .map(|(i, d)| (&self.v_jets[i], &self.w_jets[i], d))
    }

    fn far_value(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            self.far_field.v_minus()
        } else {
            self.far_field.v_plus()
        }
    }

    /// `d^k vbar / dxi^k`; far-field constant outside the grid.
    pub fn vbar_xi(&self, xi: f64, k: usize) -> f64 {
        match self.jets_at(xi) {
            Some((jv, _, d)) => jv.deriv_at(d, k),
            None if k == 0 => self.far_value(xi),
            None => 0.0,
        }
    }

    /// `d^k P(vbar) / dxi^k`.
    pub fn pvbar_xi(&self, xi: f64, k: usize) -> f64 {
        match self.jets_at(xi) {
            Some((_, jw, d)) => jw.deriv_at(d, k),
            None if k == 0 => self.law.p(self.far_value(xi)),
            None => 0.0,
        }
    }

    /// Maximum over interior nodes of `|xi vbar'/2 - (P(vbar))''|` with the
    /// second derivative taken by sixth-order differences of the node values.
    pub fn ode_residual(&self) -> (f64, f64) {
        let n = self.grid.len();
        let h2 = self.grid.spacing().powi(2);
        let w: Vec<f64> = self.w_jets.iter().map(|j| j.c[0]).collect();
        let mut worst = (0.0, 0.0);
        for i in 3..n.saturating_sub(3) {
            let mut d2 = 0.0;
            for (m, c) in D2_6.iter().enumerate() {
                d2 += c * (w[i + m - 3] - w[i]);
            }
            d2 /= h2;
            let xi = self.grid.node(i);
            let r = (0.5 * xi * self.v_jets[i].c[1] - d2).abs();
            if r > worst.0 {
                worst = (r, xi);
            }
        }
        worst
    }

    /// Estimated `|vbar(+-inf) - vbar(+-L)|` from the slope at the ends.
    fn tail_truncation_estimate(&self) -> f64 {
        let l = self.grid.l_xi();
        let n = self.grid.len();
        let left = self.v_jets[0].c[1].abs() * 2.0 * (-self.law.dp(self.far_field.v_minus())) / l;
        let right = self.v_jets[n - 1].c[1].abs() * 2.0 * (-self.law.dp(self.far_field.v_plus())) / l;
        left.max(right)
    }

    /// Write the profile as CSV with a commented parameter header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (cb, cr) = self
            .tail
            .map(|t| (t.c_big, t.c_rate))
            .unwrap_or((f64::NAN, f64::NAN));
        writeln!(
            out,
            "# gamma={:.16e} v_minus={:.16e} v_plus={:.16e} L_xi={:.16e} tol={:.16e} C_tail={:.16e} c_tail={:.16e}",
            self.law.gamma(),
            self.far_field.v_minus(),
            self.far_field.v_plus(),
            self.l_xi(),
            self.tol,
            cb,
            cr
        )?;
        writeln!(out, "xi,vbar,dvbar,d2vbar,d3vbar")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid.node(i),
                self.node_deriv(i, 0),
                self.node_deriv(i, 1),
                self.node_deriv(i, 2),
                self.node_deriv(i, 3)
            )?;
        }
        Ok(())
    }
}

fn check_order(dx: usize, dt: usize) -> Result<()> {
    if dx + dt > MAX_XI_ORDER {
        Err(Error::UnsupportedOrder { dx, dt })
    } else {
        Ok(())
    }
}

pub(crate) fn base_derivs(f: impl Fn(usize) -> f64, max: usize) -> [f64; MAX_XI_ORDER + 2] {
    let mut b = [0.0; MAX_XI_ORDER + 2];
    for (k, slot) in b.iter_mut().enumerate().take(max + 1) {
        *slot = f(k);
    }
    b
}

/// `d_x^dx d_t^dt vbar(x / sqrt(1+t))`.
pub fn eval_vbar(profile: &DiffusionWaveProfile, x: f64, t: f64, dx: usize, dt: usize) -> Result<f64> {
    check_order(dx, dt)?;
    let field = ScaledField::single(0.0, 1.0, 0).derivative(dx, dt);
    let xi = x / (1.0 + t).sqrt();
    let base = base_derivs(|k| profile.vbar_xi(xi, k), field.max_order());
    Ok(field.eval(t, xi, &base))
}

/// `d_x^dx d_t^dt ubar` with `ubar = -(1+t)^(-1/2) (P(vbar))'(xi)`.
pub fn eval_ubar(profile: &DiffusionWaveProfile, x: f64, t: f64, dx: usize, dt: usize) -> Result<f64> {
    check_order(dx + 1, dt)?;
    let field = ScaledField::single(0.5, -1.0, 1).derivative(dx, dt);
    let xi = x / (1.0 + t).sqrt();
    let base = base_derivs(|k| profile.pvbar_xi(xi, k), field.max_order());
    Ok(field.eval(t, xi, &base))
}

/// Fit `|vbar - v_+-| ~ C exp(-c xi^2)` on `2 <= |xi| <= L - 1`.
pub fn certify_tails(profile: &DiffusionWaveProfile) -> Result<TailConstants> {
    if profile.is_constant() {
        return Err(Error::Degenerate("tails of a constant profile are undefined".into()));
    }
    let ff = profile.far_field;
    let l = profile.l_xi();
    let mut fits = Vec::with_capacity(2);
    for (sign, target) in [(1.0, ff.v_plus()), (-1.0, ff.v_minus())] {
        let (xs, ys): (Vec<f64>, Vec<f64>) = profile
            .xi_grid()
            .into_iter()
            .enumerate()
            .filter(|(_, xi)| sign * xi >= 2.0 && sign * xi <= l - 1.0)
            .map(|(i, xi)| (xi, profile.node_deriv(i, 0) - target))
            .unzip();
        let fit = fit_gaussian_tail(&xs, &ys).ok_or_else(|| Error::Fit("tail window has fewer than two usable points".into()))?;
        fits.push(fit);
    }
    let c_big = fits.iter().map(|f| f.0).fold(0.0, f64::max);
    let c_rate = fits.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let fit_quality = fits.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    if !(c_rate > 0.0) {
        return Err(Error::Fit(format!("non-positive tail rate {c_rate}")));
    }
    Ok(TailConstants {
        c_big,
        c_rate,
        fit_quality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_profile() -> DiffusionWaveProfile {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.1).unwrap();
        solve_diffusion_wave(&law, &ff, 12.0, 1e-8).unwrap()
    }

    #[test]
    fn constant_state_is_exact() {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.0).unwrap();
        let p = solve_diffusion_wave(&law, &ff, 12.0, 1e-10).unwrap();
        assert_eq!(p.max_residual(), 0.0);
        assert!(p.values().iter().all(|&v| v == 1.0));
        for &(x, t) in &[(0.0, 0.0), (3.0, 5.0), (-40.0, 1.0)] {
            for (k, l) in [(1, 0), (0, 1), (2, 1), (3, 0)] {
                assert_eq!(eval_vbar(&p, x, t, k, l).unwrap(), 0.0);
            }
            assert_eq!(eval_ubar(&p, x, t, 0, 0).unwrap(), 0.0);
        }
        assert!(matches!(certify_tails(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn default_profile_is_monotone_and_bounded() {
        let p = default_profile();
        assert!(p.max_residual() < 1e-8);
        let vals = p.values();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for (i, v) in vals.iter().enumerate() {
            assert!(*v >= 1.0 - 1e-15 && *v <= 1.1 + 1e-15);
            if i > 0 && i + 1 < vals.len() {
                assert!(p.node_deriv(i, 1) > 0.0);
            }
        }
        // the unique solution sits within O(delta^2) of the midpoint at xi = 0
        assert!((p.vbar_xi(0.0, 0) - 1.05).abs() < 5e-3);
        assert!((p.vbar_xi(12.0, 0) - 1.1).abs() < 1e-12);
    }

    #[test]
    fn reflection_symmetry() {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.1).unwrap();
        let a = solve_diffusion_wave(&law, &ff, 12.0, 1e-8).unwrap();
        let b = solve_diffusion_wave(&law, &ff.swapped(), 12.0, 1e-8).unwrap();
        for xi in [-7.3, -1.0, 0.0, 0.37, 2.5, 11.9] {
            assert!((a.vbar_xi(xi, 0) - b.vbar_xi(-xi, 0)).abs() < 1e-7);
        }
    }

    #[test]
    fn ubar_sign_and_chain_rule_scaling() {
        let p = default_profile();
        let law = *p.law();
        for &t in &[0.0f64, 3.0, 99.0] {
            let s = (1.0 + t).sqrt();
            for xi in [-3.0, -0.5, 0.0, 1.2, 4.0] {
                let u = eval_ubar(&p, xi * s, t, 0, 0).unwrap();
                assert!(u > 0.0);
                let expect = -law.dp(p.vbar_xi(xi, 0)) * p.vbar_xi(xi, 1) / s;
                assert!((u - expect).abs() < 1e-14);
                let vx = eval_vbar(&p, xi * s, t, 1, 0).unwrap();
                assert!((vx - p.vbar_xi(xi, 1) / s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn too_small_domain_is_reported() {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.1).unwrap();
        let err = solve_diffusion_wave(&law, &ff, 4.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall { .. }), "{err}");
    }

    #[test]
    fn order_limit() {
        let p = default_profile();
        assert!(matches!(
            eval_vbar(&p, 0.0, 0.0, 5, 4),
            Err(Error::UnsupportedOrder { .. })
        ));
    }
}
