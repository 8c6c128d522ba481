//! The gamma-law pressure `P(v) = v^(-gamma)` and the far-field states.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Pressure law `P(v) = v^(-gamma)` for specific volume `v > 0`.
///
/// All derivatives are available in closed form; `P > 0`, `P' < 0` and
/// `P'' > 0` hold on the whole half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    gamma: f64,
}

impl PressureLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("must be positive and finite, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn p(&self, v: f64) -> f64 {
        v.powf(-self.gamma)
    }

    #[inline]
    pub fn dp(&self, v: f64) -> f64 {
        -self.gamma * v.powf(-self.gamma - 1.0)
    }

    #[inline]
    pub fn d2p(&self, v: f64) -> f64 {
        self.gamma * (self.gamma + 1.0) * v.powf(-self.gamma - 2.0)
    }

    #[inline]
    pub fn d3p(&self, v: f64) -> f64 {
        -self.gamma * (self.gamma + 1.0) * (self.gamma + 2.0) * v.powf(-self.gamma - 3.0)
    }

    /// `m`-th derivative for arbitrary `m`.
    pub fn deriv(&self, v: f64, m: usize) -> f64 {
        let mut coef = 1.0;
        for i in 0..m {
            coef *= -self.gamma - i as f64;
        }
        coef * v.powf(-self.gamma - m as f64)
    }

    /// Lagrangian sound speed `sqrt(-P'(v))`.
    #[inline]
    pub fn sound_speed(&self, v: f64) -> f64 {
        (-self.dp(v)).sqrt()
    }
}

impl Default for PressureLaw {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

/// Far-field specific volumes `v_-` (x -> -inf) and `v_+` (x -> +inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    v_minus: f64,
    v_plus: f64,
}

impl FarField {
    pub fn new(v_minus: f64, v_plus: f64) -> Result<Self> {
        if !(v_minus.is_finite() && v_minus > 0.0) {
            return Err(invalid("v_minus", format!("must be positive, got {v_minus}")));
        }
        if !(v_plus.is_finite() && v_plus > 0.0) {
            return Err(invalid("v_plus", format!("must be positive, got {v_plus}")));
        }
        Ok(Self { v_minus, v_plus })
    }

    pub fn v_minus(&self) -> f64 {
        self.v_minus
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    pub fn delta(&self) -> f64 {
        (self.v_plus - self.v_minus).abs()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.v_minus + self.v_plus)
    }

    pub fn swapped(&self) -> Self {
        Self {
            v_minus: self.v_plus,
            v_plus: self.v_minus,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.v_minus == self.v_plus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let law = PressureLaw::new(1.4).unwrap();
        let h = 1e-4;
        for &v in &[0.5, 1.0, 1.1, 3.0] {
            let fd1 = (law.p(v + h) - law.p(v - h)) / (2.0 * h);
            let fd2 = (law.dp(v + h) - law.dp(v - h)) / (2.0 * h);
            let fd3 = (law.d2p(v + h) - law.d2p(v - h)) / (2.0 * h);
            assert!((fd1 / law.dp(v) - 1.0).abs() < 1e-6);
            assert!((fd2 / law.d2p(v) - 1.0).abs() < 1e-6);
            assert!((fd3 / law.d3p(v) - 1.0).abs() < 1e-6);
            assert!((law.deriv(v, 3) / law.d3p(v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_structure() {
        let law = PressureLaw::default();
        for i in 1..200 {
            let v = i as f64 * 0.05;
            assert!(law.p(v) > 0.0);
            assert!(law.dp(v) < 0.0);
            assert!(law.d2p(v) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PressureLaw::new(0.0).is_err());
        assert!(FarField::new(-1.0, 1.0).is_err());
        assert!(FarField::new(1.0, 0.0).is_err());
        let ff = FarField::new(1.0, 1.1).unwrap();
        assert!((ff.delta() - 0.1).abs() < 1e-15);
    }
}
