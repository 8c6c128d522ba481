use dwave::correction::ExpansionProfile;
use dwave::duhamel::{duhamel_reconstruct, DuhamelProbe, DuhamelSpec};
use dwave::green::{eval_g, eval_rg, fit_kernel_bound, gd_lp_scaling, ComparisonKernels, KernelContext, SampleBox};
use dwave::solver::{make_initial_data, Grid, InitialDataSpec, Solver, SolverConfig};
use dwave::{FarField, PressureLaw};

fn context(vm: f64, vp: f64) -> KernelContext {
    let law = PressureLaw::default();
    let ff = FarField::new(vm, vp).unwrap();
    KernelContext::new(ExpansionProfile::solve(&law, &ff, 12.0, 1e-10).unwrap())
}

fn spec(ts: &[f64]) -> DuhamelSpec {
    DuhamelSpec {
        probes: ts
            .iter()
            .map(|&t| DuhamelProbe {
                t,
                xs: vec![-4.0, -1.0, 0.0, 1.5, 3.0],
            })
            .collect(),
        base_panels: 32,
        levels: 3,
        cutoff: 40.0,
    }
}

#[test]
fn duhamel_trivial_config_is_exactly_zero() {
    let ctx = context(1.2, 1.2);
    let grid = Grid::with_spacing(-80.0, 80.0, 0.05).unwrap();
    let data = InitialDataSpec {
        eps: 0.0,
        ..InitialDataSpec::default()
    };
    let s0 = make_initial_data(ctx.expansion(), &data, &grid).unwrap();
    let ff = *ctx.expansion().wave().far_field();
    let mut solver = Solver::new(grid, *ctx.expansion().law(), SolverConfig::default(), ff).unwrap();
    let rep = duhamel_reconstruct(&ctx, &mut solver, s0, &spec(&[6.0])).unwrap();
    for p in &rep.probes {
        assert!(p.reference.iter().all(|&v| v == 0.0));
        for l in &p.levels {
            assert!(l.reconstructed.iter().all(|&v| v == 0.0));
            assert_eq!(l.rel_error, 0.0);
        }
    }
}

#[test]
fn duhamel_constant_coefficients_converges() {
    let ctx = context(1.0, 1.0);
    let grid = Grid::with_spacing(-80.0, 80.0, 0.05).unwrap();
    let s0 = make_initial_data(ctx.expansion(), &InitialDataSpec::default(), &grid).unwrap();
    let ff = *ctx.expansion().wave().far_field();
    let mut solver = Solver::new(grid, *ctx.expansion().law(), SolverConfig::default(), ff).unwrap();
    let rep = duhamel_reconstruct(&ctx, &mut solver, s0, &spec(&[4.0, 8.0])).unwrap();
    for p in &rep.probes {
        let errs: Vec<f64> = p.levels.iter().map(|l| l.rel_error).collect();
        println!("t = {}: {errs:?}", p.t);
        assert!(errs[0] < 0.05);
        assert!(p.strictly_decreasing, "{errs:?}");
        // no defect without a wave
        assert!(p.levels.iter().all(|l| l.defect_term.iter().all(|d| d.abs() < 1e-12)));
    }
}

#[test]
fn duhamel_rejects_sparse_schedules() {
    let ctx = context(1.0, 1.1);
    let grid = Grid::with_spacing(-80.0, 80.0, 0.05).unwrap();
    let mut sp = spec(&[4.0]);
    sp.base_panels = 8;
    let s0 = make_initial_data(ctx.expansion(), &InitialDataSpec::default(), &grid).unwrap();
    let ff = *ctx.expansion().wave().far_field();
    let mut solver = Solver::new(grid, *ctx.expansion().law(), SolverConfig::default(), ff).unwrap();
    assert!(duhamel_reconstruct(&ctx, &mut solver, s0.clone(), &sp).is_err());
    // probe whose kernel reaches past the grid
    let far = spec(&[200.0]);
    assert!(duhamel_reconstruct(&ctx, &mut solver, s0, &far).is_err());
}

#[test]
fn kernel_bound_has_no_holdout_violations() {
    let ctx = context(1.0, 1.1);
    let fit = fit_kernel_bound(&ctx, &SampleBox::default(), 10_000, 10_000, 7, 0).unwrap();
    assert_eq!(fit.violations, 0, "{fit:?}");
    assert!(fit.stable(), "{fit:?}");
    assert!(fit.c > 0.0 && fit.kernels.d > 0.0 && fit.kernels.c_e > 0.0);
}

#[test]
fn gd_scaling_within_one_percent() {
    let ctx = context(1.0, 1.1);
    let k = ComparisonKernels::fitted(&ctx);
    for row in gd_lp_scaling(&k, &[1.0, 2.0], &[1.0, 10.0, 100.0]) {
        assert!(row.spread < 0.01, "{row:?}");
    }
}

#[test]
fn defect_vanishes_without_a_wave() {
    let ctx = context(1.05, 1.05);
    let mut worst: f64 = 0.0;
    for &(x, t, y, s) in &[(0.0, 2.0, 0.3, 1.0), (3.0, 10.0, 1.0, 4.0), (-5.0, 100.0, 2.0, 90.0), (1.0, 50.0, -8.0, 10.0)] {
        assert!(eval_g(&ctx, x, t, y, s).unwrap() > 0.0);
        worst = worst.max(eval_rg(&ctx, x, t, y, s, 0.01).unwrap().abs());
    }
    assert!(worst < 1e-6, "{worst}");
}
