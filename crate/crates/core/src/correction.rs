//! First-order correction `(G1, v1, u1)` and the assembled expansion
//! `v* = vbar + (1+t)^(-1) v1(xi)`, `u* = ubar + (1+t)^(-3/2) u1(xi)`.
//!
//! `G1` is the solution of `P'(vbar) G1' - xi G1 / 2 + xi (P(vbar))' / 2 = 0`
//! with `G1(0) = 0`; `v1 = G1'` and `u1 = -(xi G1)' / 2`. The homogeneous
//! solution `exp(int xi / (2 P'))` decays away from the origin, so the ODE is
//! integrated outward as an initial-value problem with the same Taylor
//! machinery as the wave itself.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::jet::{Jet, Jet2, JET_LEN};
use crate::pressure::PressureLaw;
use crate::profile::{base_derivs, DiffusionWaveProfile, TailConstants, XiGrid, MAX_XI_ORDER};
use crate::quadrature::gauss_legendre_composite;
use crate::scaled::ScaledField;
use crate::stats::fit_gaussian_tail;

/// Taylor data of `G1` about `xi0` from the wave jet there and `G1(xi0)`.
fn g1_jet(law: &PressureLaw, xi0: f64, v: &Jet, g0: f64) -> Jet {
    let gamma = law.gamma();
    let mut dp = v.powf(-gamma - 1.0);
    for c in dp.c.iter_mut() {
        *c *= -2.0 * gamma;
    }
    // q = xi / (2 P'(v))
    let inv = dp.recip();
    let mut q = Jet::zero();
    for k in 0..JET_LEN {
        q.c[k] = xi0 * inv.c[k] + if k > 0 { inv.c[k - 1] } else { 0.0 };
    }
    let mut g = Jet::zero();
    g.c[0] = g0;
    for k in 0..JET_LEN - 1 {
        let mut qg = 0.0;
        for j in 0..=k {
            qg += q.c[j] * g.c[k - j];
        }
        let xv = xi0 * (k + 1) as f64 * v.c[k + 1] + k as f64 * v.c[k];
        g.c[k + 1] = (qg - 0.5 * xv) / (k + 1) as f64;
    }
    g
}

#[derive(Debug, Clone)]
pub struct CorrectionProfile {
    grid: XiGrid,
    g_jets: Vec<Jet>,
    max_residual: f64,
}

/// Compute `G1` (and hence `v1`, `u1`) for a solved wave.
pub fn solve_g1(wave: &DiffusionWaveProfile, law: &PressureLaw, tol: f64) -> Result<CorrectionProfile> {
    if !(tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {tol}")));
    }
    if wave.max_residual() > tol {
        return Err(Error::ResidualTooLarge {
            residual: wave.max_residual(),
            tol,
            xi: f64::NAN,
        });
    }
    let grid = wave.grid().clone();
    let n = grid.len();
    let half = (n - 1) / 2;
    let h = grid.spacing();
    let mut g_jets = vec![Jet::zero(); n];
    if !wave.is_constant() {
        for dir in [1i64, -1] {
            let mut g = 0.0;
            for step in 0..=half {
                let i = (half as i64 + dir * step as i64) as usize;
                let (jv, _, _) = wave
                    .jets_at(grid.node(i))
                    .ok_or_else(|| Error::Integration("node outside the wave grid".into()))?;
                let jg = g1_jet(law, grid.node(i), jv, g);
                if !jg.c.iter().all(|c| c.is_finite()) {
                    return Err(Error::Integration(format!("non-finite G1 at xi = {}", grid.node(i))));
                }
                g_jets[i] = jg;
                g = jg.deriv_at(dir as f64 * h, 0);
            }
        }
    }
    let mut corr = CorrectionProfile {
        grid,
        g_jets,
        max_residual: 0.0,
    };
    let (res, xi) = corr.ode_residual(wave, law);
    corr.max_residual = res;
    if res > tol {
        return Err(Error::ResidualTooLarge { residual: res, tol, xi });
    }
    Ok(corr)
}

/// Sixth-order centred first difference.
const D1_6: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

impl CorrectionProfile {
    pub fn xi_grid(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// `d^k G1 / dxi^k`; zero outside the grid.
    pub fn g1_xi(&self, xi: f64, k: usize) -> f64 {
        match self.grid.locate(xi) {
            Some((i, d)) => self.g_jets[i].deriv_at(d, k),
            None => 0.0,
        }
    }

    pub fn g1(&self, xi: f64) -> f64 {
        self.g1_xi(xi, 0)
    }

    pub fn v1(&self, xi: f64) -> f64 {
        self.g1_xi(xi, 1)
    }

    pub fn u1(&self, xi: f64) -> f64 {
        -0.5 * xi * self.v1(xi) - 0.5 * self.g1(xi)
    }

    pub fn g1_nodes(&self) -> Vec<f64> {
        self.g_jets.iter().map(|j| j.c[0]).collect()
    }

    /// Max over interior nodes of the `G1` ODE residual with `G1'` taken by
    /// sixth-order differences of the node values.
    pub fn ode_residual(&self, wave: &DiffusionWaveProfile, law: &PressureLaw) -> (f64, f64) {
        let g = self.g1_nodes();
        let h = self.grid.spacing();
        let mut worst = (0.0, 0.0);
        for i in 3..g.len().saturating_sub(3) {
            let mut d1 = 0.0;
            for (m, c) in D1_6.iter().enumerate() {
                d1 += c * g[i + m - 3];
            }
            d1 /= h;
            let xi = self.grid.node(i);
            let r = (law.dp(wave.node_deriv(i, 0)) * d1 - 0.5 * xi * g[i] + 0.5 * xi * wave.pvbar_xi(xi, 1)).abs();
            if r > worst.0 {
                worst = (r, xi);
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "xi,G1,v1,u1")?;
        for xi in self.xi_grid() {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", xi, self.g1(xi), self.v1(xi), self.u1(xi))?;
        }
        Ok(())
    }
}

/// Closed-form `G1(xi) = -int_0^xi exp(Phi(xi) - Phi(eta)) eta vbar'(eta) / 2 deta`,
/// `Phi(xi) = int_0^xi eta / (2 P'(vbar)) deta`, evaluated by nested
/// Gauss-Legendre quadrature with the exponentials combined before
/// exponentiation.
pub fn g1_closed_form(wave: &DiffusionWaveProfile, law: &PressureLaw, xi: f64) -> f64 {
    const PANEL: f64 = 0.05;
    let phi_rate = |eta: f64| eta / (2.0 * law.dp(wave.vbar_xi(eta, 0)));
    let n = (xi.abs() / PANEL).ceil().max(1.0) as usize;
    let h = xi / n as f64;
    // Phi at panel ends
    let mut phi_ends = vec![0.0; n + 1];
    for i in 0..n {
        let a = i as f64 * h;
        phi_ends[i + 1] = phi_ends[i] + gauss_legendre_composite(a, a + h, PANEL, phi_rate);
    }
    let phi_xi = phi_ends[n];
    let mut total = 0.0;
    for i in 0..n {
        let a = i as f64 * h;
        total += gauss_legendre_composite(a, a + h, PANEL, |eta| {
            let phi_eta = phi_ends[i] + gauss_legendre_composite(a, eta, PANEL, phi_rate);
            (phi_xi - phi_eta).exp() * eta * wave.vbar_xi(eta, 1) / 2.0
        });
    }
    -total
}

/// Which expansion component to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    V,
    U,
}

/// Which remainder piece of the source term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourcePart {
    G2,
    G3,
}

/// Diffusion wave plus first-order correction.
#[derive(Debug, Clone)]
pub struct ExpansionProfile {
    wave: DiffusionWaveProfile,
    corr: CorrectionProfile,
    law: PressureLaw,
    /// When false, `v*`/`u*` reduce to the bare wave `(vbar, ubar)`.
    corrected: bool,
}

impl ExpansionProfile {
    pub fn new(wave: DiffusionWaveProfile, corr: CorrectionProfile) -> Self {
        let law = *wave.law();
        Self {
            wave,
            corr,
            law,
            corrected: true,
        }
    }

    /// Build wave and correction in one go.
    pub fn solve(law: &PressureLaw, ff: &crate::FarField, l_xi: f64, tol: f64) -> Result<Self> {
        let wave = crate::profile::solve_diffusion_wave(law, ff, l_xi, tol)?;
        let corr = solve_g1(&wave, law, tol)?;
        Ok(Self::new(wave, corr))
    }

    /// The same profile with the correction switched off.
    pub fn bare(&self) -> Self {
        Self {
            corrected: false,
            ..self.clone()
        }
    }

    pub fn is_corrected(&self) -> bool {
        self.corrected
    }

    pub fn wave(&self) -> &DiffusionWaveProfile {
        &self.wave
    }

    pub fn correction(&self) -> &CorrectionProfile {
        &self.corr
    }

    pub fn law(&self) -> &PressureLaw {
        &self.law
    }

    fn check_order(dx: usize, dt: usize) -> Result<()> {
        if dx + dt + 1 > MAX_XI_ORDER {
            Err(Error::UnsupportedOrder { dx, dt })
        } else {
            Ok(())
        }
    }

    fn eval_parts(&self, field: Field, x: f64, t: f64, dx: usize, dt: usize) -> f64 {
        self.eval_parts_with(field, x, t, dx, dt, self.corrected)
    }

    fn eval_parts_with(&self, field: Field, x: f64, t: f64, dx: usize, dt: usize, corrected: bool) -> f64 {
        let xi = x / (1.0 + t).sqrt();
        let (lead, corr) = match field {
            Field::V => (
                ScaledField::single(0.0, 1.0, 0),
                ScaledField::single(1.0, 1.0, 1),
            ),
            Field::U => (
                ScaledField::single(0.5, -1.0, 1),
                ScaledField::single(1.5, -0.5, 0).with_term(-0.5, 1, 1),
            ),
        };
        let lead = lead.derivative(dx, dt);
        let lb = match field {
            Field::V => base_derivs(|k| self.wave.vbar_xi(xi, k), lead.max_order()),
            Field::U => base_derivs(|k| self.wave.pvbar_xi(xi, k), lead.max_order()),
        };
        let mut s = lead.eval(t, xi, &lb);
        if corrected {
            let corr = corr.derivative(dx, dt);
            let cb = base_derivs(|k| self.corr.g1_xi(xi, k), corr.max_order());
            s += corr.eval(t, xi, &cb);
        }
        s
    }

    /// `d_x^dx d_t^dt` of `v*` or `u*` at `(x, t)`.
    pub fn eval(&self, field: Field, x: f64, t: f64, dx: usize, dt: usize) -> Result<f64> {
        Self::check_order(dx, dt)?;
        Ok(self.eval_parts(field, x, t, dx, dt))
    }

    /// `v*` as a function of the similarity variable at fixed `t`:
    /// `d^k/dxi^k [vbar(xi) + (1+t)^(-1) v1(xi)]`.
    pub fn vstar_xi(&self, xi: f64, t: f64, k: usize) -> f64 {
        let mut s = self.wave.vbar_xi(xi, k);
        if self.corrected {
            s += self.corr.g1_xi(xi, k + 1) / (1.0 + t);
        }
        s
    }

    /// Mixed partials of `v*` up to total order 3 as a local polynomial.
    fn vstar_jet2(&self, x: f64, t: f64, corrected: bool) -> Jet2 {
        let mut d = [[0.0; 4]; 4];
        let xi = x / (1.0 + t).sqrt();
        let lead = ScaledField::single(0.0, 1.0, 0);
        let corr = ScaledField::single(1.0, 1.0, 1);
        for (i, row) in d.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate().take(4 - i) {
                let f = lead.derivative(i, j);
                let b = base_derivs(|k| self.wave.vbar_xi(xi, k), f.max_order());
                let mut s = f.eval(t, xi, &b);
                if corrected {
                    let f = corr.derivative(i, j);
                    let b = base_derivs(|k| self.corr.g1_xi(xi, k), f.max_order());
                    s += f.eval(t, xi, &b);
                }
                *slot = s;
            }
        }
        Jet2::from_partials(&d)
    }
}

/// `d_x^dx d_t^dt` of `v*` or `u*`.
pub fn eval_expansion(exp: &ExpansionProfile, x: f64, t: f64, field: Field, dx: usize, dt: usize) -> Result<f64> {
    exp.eval(field, x, t, dx, dt)
}

/// `S[v*] = u*_t + P(v*)_x + u*`, assembled directly from the definition.
pub fn eval_source(exp: &ExpansionProfile, x: f64, t: f64) -> f64 {
    source_with(exp, x, t, exp.corrected)
}

fn source_with(exp: &ExpansionProfile, x: f64, t: f64, corrected: bool) -> f64 {
    let v = exp.eval_parts_with(Field::V, x, t, 0, 0, corrected);
    let vx = exp.eval_parts_with(Field::V, x, t, 1, 0, corrected);
    let u = exp.eval_parts_with(Field::U, x, t, 0, 0, corrected);
    let ut = exp.eval_parts_with(Field::U, x, t, 0, 1, corrected);
    ut + exp.law.dp(v) * vx + u
}

/// Residual of the bare wave in the momentum equation, `ubar_t`.
pub fn eval_bare_source(exp: &ExpansionProfile, x: f64, t: f64) -> f64 {
    source_with(exp, x, t, false)
}

/// `g2 = P(v*) - P(vbar) - P'(vbar)(v* - vbar)` or `g3 = (1+t)^(-3/2) u1`,
/// differentiated `dx` times in `x` and `dt` times in `t` (`dx + dt <= 3`).
pub fn eval_g2_g3(exp: &ExpansionProfile, x: f64, t: f64, which: SourcePart, dx: usize, dt: usize) -> Result<f64> {
    if dx + dt > 3 {
        return Err(Error::UnsupportedOrder { dx, dt });
    }
    if !exp.corrected {
        return Ok(0.0);
    }
    match which {
        SourcePart::G2 if dx == 0 && dt == 0 => {
            let law = &exp.law;
            let xi = x / (1.0 + t).sqrt();
            let vb = exp.wave.vbar_xi(xi, 0);
            let vs = exp.vstar_xi(xi, t, 0);
            Ok(law.p(vs) - law.p(vb) - law.dp(vb) * (vs - vb))
        }
        SourcePart::G2 => {
            let law = &exp.law;
            let vs = exp.vstar_jet2(x, t, true);
            let vb = exp.vstar_jet2(x, t, false);
            let (a, b) = (vs.c[0][0], vb.c[0][0]);
            let p_vs = vs.compose([law.p(a), law.dp(a), law.d2p(a), law.d3p(a)]);
            let p_vb = vb.compose([law.p(b), law.dp(b), law.d2p(b), law.d3p(b)]);
            let dp_vb = vb.compose([law.dp(b), law.d2p(b), law.d3p(b), law.deriv(b, 4)]);
            let g2 = p_vs.sub(&p_vb).sub(&dp_vb.mul(&vs.sub(&vb)));
            Ok(g2.partial(dx, dt))
        }
        SourcePart::G3 => {
            let xi = x / (1.0 + t).sqrt();
            let f = ScaledField::single(1.5, -0.5, 0)
                .with_term(-0.5, 1, 1)
                .derivative(dx, dt);
            let b = base_derivs(|k| exp.corr.g1_xi(xi, k), f.max_order());
            Ok(f.eval(t, xi, &b))
        }
    }
}

/// Max over the sample of `|v*_t - u*_x|`.
pub fn check_mass_compatibility(exp: &ExpansionProfile, sample: &[(f64, f64)]) -> Result<f64> {
    if sample.is_empty() {
        return Err(invalid("sample", "must be nonempty"));
    }
    Ok(sample
        .iter()
        .map(|&(x, t)| (exp.eval_parts(Field::V, x, t, 0, 1) - exp.eval_parts(Field::U, x, t, 1, 0)).abs())
        .fold(0.0, f64::max))
}

/// Gaussian-tail fits of `G1`, `v1`, `u1` on `2 <= |xi| <= L - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTails {
    pub g1: TailConstants,
    pub v1: TailConstants,
    pub u1: TailConstants,
}

pub fn certify_correction_tails(exp: &ExpansionProfile) -> Result<CorrectionTails> {
    if exp.wave.is_constant() {
        return Err(Error::Degenerate("correction of a constant wave vanishes".into()));
    }
    let l = exp.wave.l_xi();
    let xs: Vec<f64> = exp
        .wave
        .xi_grid()
        .into_iter()
        .filter(|xi| xi.abs() >= 2.0 && xi.abs() <= l - 1.0)
        .collect();
    let fit = |f: &dyn Fn(f64) -> f64| -> Result<TailConstants> {
        let mut parts = Vec::new();
        for sign in [1.0, -1.0] {
            let (px, py): (Vec<f64>, Vec<f64>) =
                xs.iter().filter(|x| *x * sign > 0.0).map(|&x| (x, f(x))).unzip();
            parts.push(fit_gaussian_tail(&px, &py).ok_or_else(|| Error::Fit("empty tail window".into()))?);
        }
        let t = TailConstants {
            c_big: parts.iter().map(|p| p.0).fold(0.0, f64::max),
            c_rate: parts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            fit_quality: parts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min),
        };
        if !(t.c_rate > 0.0) {
            return Err(Error::Fit(format!("non-positive tail rate {}", t.c_rate)));
        }
        Ok(t)
    };
    Ok(CorrectionTails {
        g1: fit(&|x| exp.corr.g1(x))?,
        v1: fit(&|x| exp.corr.v1(x))?,
        u1: fit(&|x| exp.corr.u1(x))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::FarField;

    fn default_exp() -> ExpansionProfile {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.1).unwrap();
        ExpansionProfile::solve(&law, &ff, 12.0, 1e-8).unwrap()
    }

    fn constant_exp() -> ExpansionProfile {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.0).unwrap();
        ExpansionProfile::solve(&law, &ff, 12.0, 1e-10).unwrap()
    }

    #[test]
    fn constant_wave_has_zero_correction() {
        let e = constant_exp();
        for xi in [-3.0, 0.0, 2.0] {
            assert_eq!(e.correction().g1(xi), 0.0);
            assert_eq!(e.correction().v1(xi), 0.0);
            assert_eq!(e.correction().u1(xi), 0.0);
        }
        for &(x, t) in &[(0.0, 0.0), (5.0, 10.0), (-30.0, 2.0)] {
            assert_eq!(e.eval(Field::V, x, t, 0, 0).unwrap(), 1.0);
            assert_eq!(e.eval(Field::U, x, t, 0, 0).unwrap(), 0.0);
            assert_eq!(eval_source(&e, x, t), 0.0);
            assert_eq!(eval_g2_g3(&e, x, t, SourcePart::G2, 1, 0).unwrap(), 0.0);
            assert_eq!(eval_g2_g3(&e, x, t, SourcePart::G3, 0, 1).unwrap(), 0.0);
        }
        assert_eq!(check_mass_compatibility(&e, &[(1.0, 1.0), (0.0, 3.0)]).unwrap(), 0.0);
    }

    #[test]
    fn origin_values() {
        let e = default_exp();
        assert_eq!(e.correction().g1(0.0), 0.0);
        assert_eq!(e.correction().u1(0.0), 0.0);
    }

    #[test]
    fn u1_identity_is_exact() {
        let e = default_exp();
        let c = e.correction();
        for xi in c.xi_grid().into_iter().step_by(7) {
            let r = c.u1(xi) + 0.5 * xi * c.v1(xi) + 0.5 * c.g1(xi);
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_at_t0_and_structure() {
        let e = default_exp();
        for x in [-2.0, 0.3, 1.7] {
            let v = e.eval(Field::V, x, 0.0, 0, 0).unwrap();
            assert!((v - (e.wave().vbar_xi(x, 0) + e.correction().v1(x))).abs() < 1e-15);
        }
        let t = 24.0;
        let s = 5.0;
        let diff = e.eval(Field::V, 0.9 * s, t, 0, 0).unwrap() - e.wave().vbar_xi(0.9, 0);
        assert!((diff - e.correction().v1(0.9) / 25.0).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = default_exp();
        let (x, t, h) = (1.3, 2.0, 1e-4);
        for field in [Field::V, Field::U] {
            let f = |x: f64, t: f64| e.eval(field, x, t, 0, 0).unwrap();
            let fx = (f(x + h, t) - f(x - h, t)) / (2.0 * h);
            let ft = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
            assert!((e.eval(field, x, t, 1, 0).unwrap() - fx).abs() < 1e-8);
            assert!((e.eval(field, x, t, 0, 1).unwrap() - ft).abs() < 1e-8);
        }
    }

    #[test]
    fn source_equals_g2x_plus_g3t() {
        let e = default_exp();
        for &(x, t) in &[(0.5, 1.0), (-3.0, 10.0), (12.0, 50.0), (-1.0, 0.0)] {
            let s = eval_source(&e, x, t);
            let alt = eval_g2_g3(&e, x, t, SourcePart::G2, 1, 0).unwrap()
                + eval_g2_g3(&e, x, t, SourcePart::G3, 0, 1).unwrap();
            assert!((s - alt).abs() < 1e-12, "x={x} t={t}: {s} vs {alt}");
        }
    }

    #[test]
    fn g2_matches_taylor_remainder() {
        let e = default_exp();
        let law = *e.law();
        let hp = 1e-4;
        for &(x, t) in &[(0.0, 0.0), (1.0, 3.0), (-2.0, 8.0)] {
            let vb = e.wave().vbar_xi(x / (1.0f64 + t).sqrt(), 0);
            let vs = e.eval(Field::V, x, t, 0, 0).unwrap();
            let d2 = (law.p(vb + hp) - 2.0 * law.p(vb) + law.p(vb - hp)) / (hp * hp);
            let approx = 0.5 * d2 * (vs - vb).powi(2);
            let g2 = eval_g2_g3(&e, x, t, SourcePart::G2, 0, 0).unwrap();
            // relative error of order |v* - vbar| = O(delta)
            assert!((g2 - approx).abs() <= 0.1 * approx.abs() + 1e-15, "{g2} vs {approx}");
        }
    }

    #[test]
    fn closed_form_agrees_with_ivp() {
        let e = default_exp();
        for xi in [-8.0, -5.5, -2.0, -0.4, 0.7, 3.0, 6.25, 8.0] {
            let a = e.correction().g1(xi);
            let b = g1_closed_form(e.wave(), e.law(), xi);
            assert!(((a - b) / b).abs() < 1e-6, "xi={xi}: {a} vs {b}");
        }
    }

    #[test]
    fn refuses_unsolved_wave() {
        let law = PressureLaw::new(1.4).unwrap();
        let ff = FarField::new(1.0, 1.1).unwrap();
        let wave = crate::profile::solve_diffusion_wave(&law, &ff, 12.0, 1e-8).unwrap();
        assert!(matches!(solve_g1(&wave, &law, 1e-14), Err(Error::ResidualTooLarge { .. })));
    }
}
