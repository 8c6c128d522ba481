//! Quadrature rules on uniform samples and Gauss-Legendre panels.

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre8(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        s += w * (f(c - r * x) + f(c + r * x));
    }
    r * s
}

/// Composite Gauss-Legendre with panels no wider than `panel`.
pub fn gauss_legendre_composite(a: f64, b: f64, panel: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = ((b - a).abs() / panel).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| gauss_legendre8(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f))
        .sum()
}

/// Composite trapezoid rule on uniform samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite Simpson rule on uniform samples; an even sample count closes
/// the last three intervals with the 3/8 rule.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ if n % 2 == 1 => {
            let mut s = values[0] + values[n - 1];
            for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
            }
            s * h / 3.0
        }
        _ => {
            let m = n - 3;
            simpson(&values[..m], h)
                + 3.0 * h / 8.0 * (values[m - 1] + 3.0 * values[m] + 3.0 * values[m + 1] + values[m + 2])
        }
    }
}

/// Cumulative trapezoid integral, starting from zero at the first sample.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let v = gauss_legendre8(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn simpson_both_parities_exact_for_cubics() {
        for n in [5usize, 6, 9, 10] {
            let h = 1.0 / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&vals, h) - 0.25).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn cumulative_matches_total() {
        let vals: Vec<f64> = (0..11).map(|i| (i as f64 * 0.1).sin()).collect();
        let c = cumulative_trapezoid(&vals, 0.1);
        assert!((c[10] - trapezoid(&vals, 0.1)).abs() < 1e-15);
    }
}
