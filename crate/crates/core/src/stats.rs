//! Small regression helpers shared by the tail and decay fits.

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Returns `None` with fewer than two points or zero spread in `x`.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fit `|y| ~ C exp(-c x^2)` by regressing `ln|y|` on `x^2`. Points with
/// `y == 0` are skipped. Returns `(C, c, r^2)`.
pub fn fit_gaussian_tail(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let mut px = Vec::with_capacity(xs.len());
    let mut py = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        if *y != 0.0 && y.is_finite() {
            px.push(x * x);
            py.push(y.abs().ln());
        }
    }
    let fit = linear_regression(&px, &py)?;
    Some((fit.intercept.exp(), -fit.slope, fit.r_squared))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_regression(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_tail_recovered() {
        let xs: Vec<f64> = (0..50).map(|i| 2.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -3.0 * (-0.2 * x * x).exp()).collect();
        let (c_big, c, r2) = fit_gaussian_tail(&xs, &ys).unwrap();
        assert!((c_big - 3.0).abs() < 1e-10);
        assert!((c - 0.2).abs() < 1e-12);
        assert!(r2 > 0.999_999);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_regression(&[1.0], &[1.0]).is_none());
        assert!(linear_regression(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }
}
