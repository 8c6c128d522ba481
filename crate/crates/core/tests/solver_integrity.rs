use std::sync::OnceLock;

use dwave::correction::ExpansionProfile;
use dwave::solver::{
    make_initial_data, perturbation_mass, space_convergence, time_convergence, Grid, InitialDataSpec,
    SimState, Solver, SolverConfig,
};
use dwave::{FarField, PressureLaw};

fn expansion() -> &'static ExpansionProfile {
    static EXP: OnceLock<ExpansionProfile> = OnceLock::new();
    EXP.get_or_init(|| {
        let law = PressureLaw::default();
        let ff = FarField::new(1.0, 1.1).unwrap();
        ExpansionProfile::solve(&law, &ff, 12.0, 1e-10).unwrap()
    })
}

#[test]
fn time_order_at_least_three() {
    let grid = Grid::new(-20.0, 20.0, 800).unwrap();
    let study = time_convergence(expansion(), &InitialDataSpec::default(), &grid, &SolverConfig::default(), 1.0)
        .unwrap();
    println!("{study:?}");
    assert!(study.order > 2.9 && study.quoted_order() >= 3.0, "{study:?}");
}

#[test]
fn space_order_at_least_four() {
    let grid = Grid::new(-20.0, 20.0, 400).unwrap();
    let study = space_convergence(
        expansion(),
        &InitialDataSpec::default(),
        &grid,
        &SolverConfig::default(),
        1.0,
        2e-3,
    )
    .unwrap();
    println!("{study:?}");
    assert!(study.order > 3.9 && study.quoted_order() >= 4.0, "{study:?}");
}

#[test]
fn perturbation_mass_is_conserved() {
    let exp = expansion();
    let grid = Grid::with_spacing(-300.0, 300.0, 0.1).unwrap();
    let spec = InitialDataSpec::default();
    let s0 = make_initial_data(exp, &spec, &grid).unwrap();
    let m0 = perturbation_mass(&s0, &grid, exp).unwrap();
    assert!(m0.abs() < 1e-12, "initial perturbation mass {m0}");
    let mut solver = Solver::new(grid, *exp.law(), SolverConfig::default(), *exp.wave().far_field()).unwrap();
    let end = solver.integrate_with(s0, 100.0, &[], |_| Ok(())).unwrap();
    let m1 = perturbation_mass(&end, &grid, exp).unwrap();
    println!("mass drift {:e}", m1 - m0);
    assert!((m1 - m0).abs() < 1e-8, "{m0} -> {m1}");
    assert!(solver.boundary_deviation(&end) < 1e-10);
}

#[test]
fn zero_data_stays_constant() {
    let law = PressureLaw::default();
    let ff = FarField::new(1.0, 1.0).unwrap();
    let exp = ExpansionProfile::solve(&law, &ff, 12.0, 1e-10).unwrap();
    let grid = Grid::new(-30.0, 30.0, 600).unwrap();
    let spec = InitialDataSpec {
        eps: 0.0,
        ..InitialDataSpec::default()
    };
    let s0 = make_initial_data(&exp, &spec, &grid).unwrap();
    assert_eq!(s0, SimState::constant(&grid, 1.0, 0.0));
    let mut solver = Solver::new(grid, law, SolverConfig::default(), ff).unwrap();
    solver
        .integrate_with(s0.clone(), 5.0, &[1.0, 2.5, 5.0], |s| {
            assert_eq!(s.v, s0.v);
            assert_eq!(s.u, s0.u);
            Ok(())
        })
        .unwrap();
}
