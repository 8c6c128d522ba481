//! Exact space/time derivatives of self-similar fields.
//!
//! A field of the form `(1+t)^(-a) * sum_i c_i xi^j_i f^(k_i)(xi)` with
//! `xi = x / sqrt(1+t)` stays in the same family under `d/dx` and `d/dt`:
//!
//! - `d/dx` raises `a` by 1/2 and differentiates the bracket in `xi`;
//! - `d/dt` raises `a` by 1 and maps the bracket `B` to `-a B - xi B' / 2`.
//!
//! So any mixed derivative reduces to a finite combination of `f^(k)`.

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    c: f64,
    j: u32,
    k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ScaledField {
    a: f64,
    terms: Vec<Term>,
}

impl ScaledField {
    /// `coef * (1+t)^(-a) * f^(k)(xi)`.
    pub fn single(a: f64, coef: f64, k: usize) -> Self {
        Self {
            a,
            terms: vec![Term { c: coef, j: 0, k }],
        }
    }

    /// Adds `coef * xi^j f^(k)` to the bracket.
    pub fn with_term(mut self, coef: f64, j: u32, k: usize) -> Self {
        self.terms.push(Term { c: coef, j, k });
        self.simplify()
    }

    fn d_xi(terms: &[Term]) -> Vec<Term> {
        let mut out = Vec::with_capacity(2 * terms.len());
        for t in terms {
            if t.j > 0 {
                out.push(Term {
                    c: t.c * t.j as f64,
                    j: t.j - 1,
                    k: t.k,
                });
            }
            out.push(Term {
                c: t.c,
                j: t.j,
                k: t.k + 1,
            });
        }
        out
    }

    fn simplify(mut self) -> Self {
        self.terms.sort_by_key(|t| (t.k, t.j));
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match merged.last_mut() {
                Some(m) if m.j == t.j && m.k == t.k => m.c += t.c,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.c != 0.0);
        self.terms = merged;
        self
    }

    pub fn dx(&self) -> Self {
        Self {
            a: self.a + 0.5,
            terms: Self::d_xi(&self.terms),
        }
        .simplify()
    }

    pub fn dt(&self) -> Self {
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .map(|t| Term {
                c: -self.a * t.c,
                ..*t
            })
            .collect();
        for t in Self::d_xi(&self.terms) {
            terms.push(Term {
                c: -0.5 * t.c,
                j: t.j + 1,
                k: t.k,
            });
        }
        Self {
            a: self.a + 1.0,
            terms,
        }
        .simplify()
    }

    pub fn derivative(&self, dx: usize, dt: usize) -> Self {
        let mut f = self.clone();
        for _ in 0..dx {
            f = f.dx();
        }
        for _ in 0..dt {
            f = f.dt();
        }
        f
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.k).max().unwrap_or(0)
    }

    /// Evaluate given `xi` and the base derivatives `f^(k)(xi)` in `base`.
    pub fn eval(&self, t: f64, xi: f64, base: &[f64]) -> f64 {
        let mut s = 0.0;
        for term in &self.terms {
            s += term.c * xi.powi(term.j as i32) * base[term.k];
        }
        (1.0 + t).powf(-self.a) * s
    }
}
