use relhartree::analysis::{fit_decay, positivity_check, WindowPolicy};
use relhartree::extension::{boundary_equation_mismatch, extend, pde_residual, uniform_levels};
use relhartree::nehari::{
    ar_level_identity, nehari_project, solve_ground_state, solve_limit_problem, InitStrategy, SolverOptions, StopReason,
};
use relhartree::spectral::snapshot::{read_field, write_field};
use relhartree::{Functional, Grid, ModelSpec};

fn small() -> Grid {
    Grid::new(2, 64, 20.0).unwrap()
}

#[test]
fn ground_state_solves_the_half_space_problem() {
    let g = small();
    let spec = ModelSpec::desk_default();
    let r = solve_ground_state(&spec, g, &InitStrategy::CenteredGaussian, &SolverOptions::default()).unwrap();
    assert_eq!(r.stop, StopReason::Converged);
    let fun = Functional::new(&spec, g).unwrap();
    let u = &r.solution;

    // critical point: on the manifold and fixed by the projection
    let p = nehari_project(&fun, u).unwrap();
    assert!((p.t_u - 1.0).abs() < 1e-8, "{}", p.t_u);
    assert!(ar_level_identity(&fun, u, r.level_c).unwrap() < 1e-6);

    // trace of the extension satisfies the boundary condition of the half-space problem
    assert!(boundary_equation_mismatch(u, &fun, 1e-3).unwrap() < 1e-5);
    let ext = extend(u, spec.mass, &uniform_levels(33, 4.0)).unwrap();
    assert!(pde_residual(&ext).unwrap() < 1e-1);

    assert!(positivity_check(u, WindowPolicy::default()).witness.pass);
    assert!(fit_decay(u, WindowPolicy::default()).unwrap().delta_hat > 0.6);
}

#[test]
fn limit_level_dominates_and_snapshots_round_trip() {
    let g = small();
    let spec = ModelSpec::desk_default();
    let opts = SolverOptions::default();
    let ground = solve_ground_state(&spec, g, &InitStrategy::CenteredGaussian, &opts).unwrap();
    let limit = solve_limit_problem(&spec, g, &InitStrategy::CenteredGaussian, &opts).unwrap();
    assert!(limit.converged && ground.converged);
    assert!(0.0 < ground.level_c && ground.level_c < limit.level_c);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.fld");
    write_field(&path, &ground.solution).unwrap();
    let back = read_field(&path).unwrap();
    assert_eq!(back.grid(), ground.solution.grid());
    assert!(back
        .values()
        .iter()
        .zip(ground.solution.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));

    // warm restart from the stored field stops at once
    let again = solve_ground_state(&spec, g, &InitStrategy::Warm(back), &opts).unwrap();
    assert!(again.iterations <= 1, "{}", again.iterations);
    assert!((again.level_c - ground.level_c).abs() < 1e-12 * ground.level_c);
}

#[test]
fn coarse_desk_grid_stalls_on_the_positive_cone() {
    // M = 128 on L = 40 leaves an aliasing ripple of relative size ~5e-7 in the far field,
    // which the positive part clips; the descent then stops short of tol.
    let g = Grid::new(2, 128, 40.0).unwrap();
    let r = solve_ground_state(
        &ModelSpec::desk_default(),
        g,
        &InitStrategy::CenteredGaussian,
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(r.stop, StopReason::Stalled);
    assert!(!r.converged);
    assert!(r.residual > 1e-8 && r.residual < 1e-4, "{}", r.residual);
    assert!(r.cone_residual < r.residual);
    assert!(r.clone().require_converged().is_err());
}
