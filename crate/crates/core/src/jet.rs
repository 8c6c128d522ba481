//! Truncated Taylor series arithmetic.
//!
//! `Jet` holds the Taylor coefficients `c[k] = f^(k)(x0) / k!` of a function
//! of one variable about an expansion point. `Jet2` holds a local polynomial
//! in two variables of total degree at most three, enough to push the
//! pressure law through mixed `(x, t)` derivatives.

/// Number of stored Taylor coefficients (orders `0..JET_LEN`).
pub(crate) const JET_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet {
    pub c: [f64; JET_LEN],
}

impl Jet {
    pub fn zero() -> Self {
        Self { c: [0.0; JET_LEN] }
    }

    #[cfg(test)]
    pub fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::zero();
        for k in 0..JET_LEN {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * o.c[k - j];
            }
            r.c[k] = s;
        }
        r
    }

    /// `self^p` for a jet with positive constant term.
    pub fn powf(&self, p: f64) -> Jet {
        let x0 = self.c[0];
        let mut y = Jet::zero();
        y.c[0] = x0.powf(p);
        for k in 1..JET_LEN {
            y.c[k] = self.pow_coef(p, &y, k);
        }
        y
    }

    /// Coefficient `k` of `self^p` given coefficients `0..k` of the power.
    #[inline]
    pub fn pow_coef(&self, p: f64, y: &Jet, k: usize) -> f64 {
        let mut s = 0.0;
        for j in 1..=k {
            s += (p * j as f64 - (k - j) as f64) * self.c[j] * y.c[k - j];
        }
        s / (k as f64 * self.c[0])
    }

    pub fn recip(&self) -> Jet {
        let mut y = Jet::zero();
        y.c[0] = 1.0 / self.c[0];
        for k in 1..JET_LEN {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * y.c[k - j];
            }
            y.c[k] = -s * y.c[0];
        }
        y
    }

    /// `k`-th derivative of the series at offset `d` from the expansion point.
    pub fn deriv_at(&self, d: f64, k: usize) -> f64 {
        if k >= JET_LEN {
            return 0.0;
        }
        // Horner on sum_{j>=k} c_j * j!/(j-k)! * d^(j-k)
        let mut acc = 0.0;
        for j in (k..JET_LEN).rev() {
            acc = acc * d + self.c[j] * falling(j, k);
        }
        acc
    }
}

#[inline]
fn falling(j: usize, k: usize) -> f64 {
    let mut f = 1.0;
    for i in 0..k {
        f *= (j - i) as f64;
    }
    f
}

/// Polynomial in `(dx, dt)` truncated at total degree 3. `c[i][j]` is the
/// coefficient of `dx^i dt^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet2 {
    pub c: [[f64; 4]; 4],
}

impl Jet2 {
    pub fn zero() -> Self {
        Self { c: [[0.0; 4]; 4] }
    }

    /// Build from mixed partial derivatives `d[i][j] = d_x^i d_t^j f`.
    pub fn from_partials(d: &[[f64; 4]; 4]) -> Self {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        let mut r = Self::zero();
        for i in 0..4 {
            for j in 0..4 - i {
                r.c[i][j] = d[i][j] / (FACT[i] * FACT[j]);
            }
        }
        r
    }

    /// Mixed partial `d_x^i d_t^j` at the expansion point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        if i + j > 3 {
            return 0.0;
        }
        self.c[i][j] * FACT[i] * FACT[j]
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        let mut r = *self;
        for i in 0..4 {
            for j in 0..4 - i {
                r.c[i][j] -= o.c[i][j];
            }
        }
        r
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let mut r = Jet2::zero();
        for i1 in 0..4 {
            for j1 in 0..4 - i1 {
                let a = self.c[i1][j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..4 - i1 - j1 {
                    for j2 in 0..4 - i1 - j1 - i2 {
                        r.c[i1 + i2][j1 + j2] += a * o.c[i2][j2];
                    }
                }
            }
        }
        r
    }

    /// Compose a scalar function with this polynomial given the function's
    /// derivatives `f^(m)` at the constant term, `m = 0..=3`.
    pub fn compose(&self, derivs: [f64; 4]) -> Jet2 {
        let mut e = *self;
        e.c[0][0] = 0.0;
        let mut r = Jet2::zero();
        r.c[0][0] = derivs[0];
        let mut pow = e;
        let mut fact = 1.0;
        for (m, &dm) in derivs.iter().enumerate().skip(1) {
            fact *= m as f64;
            let w = dm / fact;
            for i in 0..4 {
                for j in 0..4 - i {
                    r.c[i][j] += w * pow.c[i][j];
                }
            }
            pow = pow.mul(&e);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x0: f64) -> Jet {
        let mut j = Jet::zero();
        j.c[0] = x0;
        j.c[1] = 1.0;
        j
    }

    #[test]
    fn powf_matches_binomial_series() {
        // (2 + d)^(-1.4) derivatives at d = 0
        let y = var(2.0).powf(-1.4);
        let mut coef = 1.0;
        for k in 0..6 {
            let exact = coef * 2f64.powf(-1.4 - k as f64);
            assert!((y.deriv_at(0.0, k) - exact).abs() < 1e-12 * exact.abs().max(1.0));
            coef *= -1.4 - k as f64;
        }
    }

    #[test]
    fn recip_and_mul_invert() {
        let mut x = var(1.3);
        x.c[2] = 0.4;
        x.c[5] = -0.1;
        let r = x.mul(&x.recip());
        assert!((r.c[0] - 1.0).abs() < 1e-15);
        for k in 1..JET_LEN {
            assert!(r.c[k].abs() < 1e-13, "k={k}: {}", r.c[k]);
        }
    }

    #[test]
    fn deriv_at_offset_agrees_with_exp() {
        // exp about 0
        let mut e = Jet::zero();
        let mut f = 1.0;
        for k in 0..JET_LEN {
            e.c[k] = 1.0 / f;
            f *= (k + 1) as f64;
        }
        for k in 0..4 {
            assert!((e.deriv_at(0.01, k) - 0.01f64.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn jet2_compose_matches_chain_rule() {
        // f(x,t) = 1 + 0.3x + 0.2t + 0.1xt, g = f^(-1.4)
        let mut d = [[0.0; 4]; 4];
        d[0][0] = 1.0;
        d[1][0] = 0.3;
        d[0][1] = 0.2;
        d[1][1] = 0.1;
        let f = Jet2::from_partials(&d);
        let g = |v: f64| v.powf(-1.4);
        let p = [1.0, -1.4, 1.4 * 2.4, -1.4 * 2.4 * 3.4];
        let c = f.compose(p);
        let h = 1e-3;
        let gx = |x: f64, t: f64| g(1.0 + 0.3 * x + 0.2 * t + 0.1 * x * t);
        let fd_xt = (gx(h, h) - gx(h, -h) - gx(-h, h) + gx(-h, -h)) / (4.0 * h * h);
        assert!((c.partial(1, 1) - fd_xt).abs() < 1e-5);
        let fd_xx = (gx(h, 0.0) - 2.0 * gx(0.0, 0.0) + gx(-h, 0.0)) / (h * h);
        assert!((c.partial(2, 0) - fd_xx).abs() < 1e-5);
    }
}
