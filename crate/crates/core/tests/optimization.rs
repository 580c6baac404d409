mod common;

use chks_core::adjoint::solve_adjoint;
use chks_core::control::{
    cost, optimize, project_admissible, reduced_gradient, stationarity_residual, ControlSpec, OptimizeOptions,
    Termination, UpperBound,
};
use chks_core::model::ModelSpec;
use chks_core::state::{solve_forward, Control};
use chks_core::{Field, FluxScheme, Grid};
use common::*;
use proptest::prelude::*;

fn spec_without_tracking(g: Grid, nt: usize) -> ControlSpec {
    ControlSpec {
        b1: 0.0,
        b2: 0.0,
        b3: 0.5,
        phi_q: vec![Field::zeros(g); nt + 1],
        phi_omega: Field::zeros(g),
        u_max: UpperBound::Scalar(1.0),
    }
}

#[test]
fn cost_examples() {
    let spec = ModelSpec::default();
    let g = Grid::unit_square(6).unwrap();
    let nt = 4;
    let mut r = rng(1);
    let init = initial(g, &mut r);
    let t = chks_core::state::TimeSettings::new(1.0, nt, 0.5, FluxScheme::Centered);
    let zero = Control::zeros(g, nt);
    let (traj, _) = solve_forward(&spec, &init, &zero, &t).unwrap();
    let perfect = ControlSpec {
        b1: 1.0,
        b2: 1.0,
        b3: 1.0,
        phi_q: traj.phi.clone(),
        phi_omega: traj.phi[nt].clone(),
        u_max: UpperBound::Scalar(2.0),
    };
    assert_eq!(cost(&traj, &zero, &perfect).unwrap(), 0.0);

    let cs = ControlSpec { b3: 0.7, ..spec_without_tracking(g, nt) };
    let one = Control::constant(g, nt, 1.0);
    assert!((cost(&traj, &one, &cs).unwrap() - 0.35).abs() < 1e-14);
    let two = Control::constant(g, nt, 2.0);
    assert!((cost(&traj, &two, &cs).unwrap() - 4.0 * 0.35).abs() < 1e-13);

    // running term uses levels 1..=nt with weight tau, terminal term is separate
    let offset = ControlSpec {
        b1: 2.0,
        b2: 0.0,
        b3: 1.0,
        phi_q: traj.phi.iter().map(|p| p.map(|v| v - 0.5)).collect(),
        ..perfect.clone()
    };
    assert!((cost(&traj, &zero, &offset).unwrap() - 0.25).abs() < 1e-14);
    assert!(cost(&traj, &Control::zeros(g, nt + 1), &cs).is_err());
}

#[test]
fn projection_examples() {
    let g = Grid::unit_square(4).unwrap();
    let inside = Control::constant(g, 3, 0.4);
    assert_eq!(project_admissible(&inside, &UpperBound::Scalar(1.0)), inside);
    let below = Control::constant(g, 3, -1.0);
    assert_eq!(project_admissible(&below, &UpperBound::Scalar(1.0)), Control::zeros(g, 3));
    let cap = Field::from_fn(g, |x, _| x);
    let above = project_admissible(&Control::constant(g, 3, 5.0), &UpperBound::Field(cap.clone()));
    assert!(above.slices().iter().all(|s| s == &cap));
}

fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (prop::collection::vec(-3.0..3.0f64, 48), prop::collection::vec(-3.0..3.0f64, 48), 0.0..2.0f64)
}

fn control_from(g: Grid, v: &[f64]) -> Control {
    Control::from_slices(g, v.chunks(16).map(|c| Field::from_vec(g, c.to_vec()).unwrap()).collect()).unwrap()
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nonexpansive((v, w, cap) in arb_pair()) {
        let g = Grid::unit_square(4).unwrap();
        let (v, w) = (control_from(g, &v), control_from(g, &w));
        let bound = UpperBound::Scalar(cap);
        let (pv, pw) = (project_admissible(&v, &bound), project_admissible(&w, &bound));
        prop_assert_eq!(&project_admissible(&pv, &bound), &pv);
        prop_assert!(pv.check_admissible(&bound).is_ok());
        let dist = |a: &Control, b: &Control| a.zip_map(b, |x, y| x - y).norm(0.1);
        prop_assert!(dist(&pv, &pw) <= dist(&v, &w) + 1e-15);
    }
}

#[test]
fn trivial_problem_converges_to_zero() {
    let spec = ModelSpec::default();
    let g = Grid::unit_square(8).unwrap();
    let nt = 8;
    let mut r = rng(3);
    let init = initial(g, &mut r);
    let cs = spec_without_tracking(g, nt);
    let u0 = smooth_control(g, nt, &mut r, 0.0, 1.0);
    let res = optimize(&spec, &init, &cs, &u0, &time(nt, FluxScheme::Centered), &OptimizeOptions::default()).unwrap();
    assert!(res.converged);
    assert!(res.iterations <= 5);
    assert!(*res.stationarity_history.last().unwrap() <= 1e-8);
    assert!(res.u_star.slices().iter().all(|s| s.max_abs() <= 1e-8));

    let adj = &res.adjoint;
    assert_eq!(stationarity_residual(&Control::zeros(g, nt), adj, &cs).unwrap(), 0.0);
}

#[test]
fn zero_budget_returns_the_initial_control() {
    let spec = ModelSpec::default();
    let g = Grid::unit_square(6).unwrap();
    let nt = 4;
    let mut r = rng(4);
    let init = initial(g, &mut r);
    let cs = spec_without_tracking(g, nt);
    let u0 = Control::constant(g, nt, 0.5);
    let opts = OptimizeOptions { max_iters: 0, ..OptimizeOptions::default() };
    let res = optimize(&spec, &init, &cs, &u0, &time(nt, FluxScheme::Centered), &opts).unwrap();
    assert!(!res.converged);
    assert_eq!(res.termination, Termination::MaxIterations);
    assert_eq!(res.u_star, u0);
    assert_eq!(res.iterations, 0);
    // ‖u0‖ over Q with |Q| = 0.5
    assert!((res.stationarity_history[0] - 0.5 * 0.5f64.sqrt()).abs() < 1e-14);
}

#[test]
fn rejects_inadmissible_start_and_weights() {
    let spec = ModelSpec::default();
    let g = Grid::unit_square(6).unwrap();
    let nt = 4;
    let init = initial(g, &mut rng(5));
    let t = time(nt, FluxScheme::Centered);
    let cs = spec_without_tracking(g, nt);
    let opts = OptimizeOptions::default();
    assert!(optimize(&spec, &init, &cs, &Control::constant(g, nt, 1.5), &t, &opts).is_err());
    let no_reg = ControlSpec { b3: 0.0, ..cs };
    assert!(optimize(&spec, &init, &no_reg, &Control::zeros(g, nt), &t, &opts).is_err());
}

#[test]
fn inverse_crime_reaches_a_stationary_point() {
    let spec = strongly_coupled();
    let g = Grid::unit_square(12).unwrap();
    let nt = 16;
    let mut r = rng(5);
    let init = initial(g, &mut r);
    let u_true = smooth_control(g, nt, &mut r, 0.2, 0.8);
    let t = time(nt, FluxScheme::Centered);
    let (target, _) = solve_forward(&spec, &init, &u_true, &t).unwrap();
    let cs = ControlSpec {
        b1: 1.0,
        b2: 1.0,
        b3: 3e-8,
        phi_q: target.phi.clone(),
        phi_omega: target.phi[nt].clone(),
        u_max: UpperBound::Scalar(1.0),
    };
    let u0 = Control::zeros(g, nt);
    let res = optimize(&spec, &init, &cs, &u0, &t, &OptimizeOptions { max_iters: 400, ..Default::default() }).unwrap();
    assert!(res.converged, "{:?}", res.termination);
    assert!(res.cost_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(res.cost_history[0] >= 10.0 * res.cost_history.last().unwrap());
    res.u_star.check_admissible(&cs.u_max).unwrap();

    let u_star = &res.u_star;
    let stat = stationarity_residual(u_star, &res.adjoint, &cs).unwrap();
    assert!(stat <= 1e-6 * (1.0 + u_star.norm(t.tau())));

    // sampled variational inequality
    let adj = solve_adjoint(&spec, &res.state, &cs, chks_core::adjoint::AdjointMode::Discrete).unwrap();
    let grad = reduced_gradient(&adj, u_star, cs.b3).unwrap();
    for _ in 0..20 {
        let v = smooth_control(g, nt, &mut r, 0.0, 1.0);
        let d = v.zip_map(u_star, |a, b| a - b);
        assert!(grad.inner(&d, t.tau()) >= -1e-8 * d.norm(t.tau()));
    }
}
