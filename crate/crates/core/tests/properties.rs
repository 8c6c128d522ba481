use std::sync::OnceLock;

use proptest::prelude::*;

use dwave::analysis::fit_decay_exponent;
use dwave::green::{halton, kernel_samples, SampleBox};
use dwave::profile::{eval_vbar, solve_diffusion_wave, DiffusionWaveProfile};
use dwave::stats::fit_gaussian_tail;
use dwave::{FarField, PressureLaw};

fn pair() -> &'static (DiffusionWaveProfile, DiffusionWaveProfile) {
    static P: OnceLock<(DiffusionWaveProfile, DiffusionWaveProfile)> = OnceLock::new();
    P.get_or_init(|| {
        let law = PressureLaw::default();
        let ff = FarField::new(1.0, 1.1).unwrap();
        (
            solve_diffusion_wave(&law, &ff, 12.0, 1e-10).unwrap(),
            solve_diffusion_wave(&law, &ff.swapped(), 12.0, 1e-10).unwrap(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pressure_signs(gamma in 0.1f64..5.0, v in 1e-3f64..1e3) {
        let law = PressureLaw::new(gamma).unwrap();
        prop_assert!(law.p(v) > 0.0);
        prop_assert!(law.dp(v) < 0.0);
        prop_assert!(law.d2p(v) > 0.0);
    }

    #[test]
    fn power_law_fit_is_exact_and_scale_free(p in -3.0f64..-0.25, a in 1e-3f64..1e3, c in 1e-2f64..1e2) {
        let ts: Vec<f64> = (0..40).map(|i| 10.0 * 1.1f64.powi(i)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| a * (1.0 + t).powf(p)).collect();
        let f = fit_decay_exponent(&ts, &ys, (10.0, 1e4)).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-9);
        prop_assert!((f.prefactor / a - 1.0).abs() < 1e-8);
        let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
        let g = fit_decay_exponent(&ts, &scaled, (10.0, 1e4)).unwrap();
        prop_assert!((g.exponent - f.exponent).abs() < 1e-9);
    }

    #[test]
    fn gaussian_tail_fit_recovers_rate(big_c in 0.1f64..10.0, rate in 0.05f64..1.0) {
        let xs: Vec<f64> = (0..50).map(|i| 2.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| big_c * (-rate * x * x).exp()).collect();
        let (c0, r0, r2) = fit_gaussian_tail(&xs, &ys).unwrap();
        prop_assert!((r0 / rate - 1.0).abs() < 1e-8);
        prop_assert!((c0 / big_c - 1.0).abs() < 1e-8);
        prop_assert!(r2 > 1.0 - 1e-12);
    }

    #[test]
    fn reflection_symmetry(xi in -12.0f64..12.0) {
        let (a, b) = pair();
        prop_assert!((a.vbar_xi(xi, 0) - b.vbar_xi(-xi, 0)).abs() < 1e-7);
    }

    #[test]
    fn self_similar_scaling(xi in -11.0f64..11.0, t in 0.0f64..1e4) {
        let (a, _) = pair();
        let s = (1.0 + t).sqrt();
        let v = eval_vbar(a, xi * s, t, 0, 0).unwrap();
        prop_assert!((v - a.vbar_xi(xi, 0)).abs() < 1e-14);
        let vx = eval_vbar(a, xi * s, t, 1, 0).unwrap();
        prop_assert!((vx * s - a.vbar_xi(xi, 1)).abs() < 1e-13);
        prop_assert!(v >= 1.0 - 1e-12 && v <= 1.1 + 1e-12);
    }

    #[test]
    fn halton_stays_in_unit_interval(i in 0u64..1_000_000, base in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let h = halton(i, base);
        prop_assert!((0.0..1.0).contains(&h));
    }

    #[test]
    fn kernel_samples_respect_the_box(seed in any::<u64>()) {
        let bx = SampleBox::default();
        for p in kernel_samples(&bx, 1, 64, seed) {
            prop_assert!(p.t >= bx.t_min && p.t <= bx.t_max);
            prop_assert!(p.s >= 0.0 && p.s <= (1.0 - bx.s_gap) * p.t + 1e-12);
            prop_assert!(p.y.abs() <= bx.y_scale * (1.0 + p.t).sqrt() + 1e-12);
            prop_assert!((p.x - p.y).abs() <= bx.z_scale * (p.t - p.s).sqrt() + 1e-12);
        }
    }
}
