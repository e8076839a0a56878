use std::f64::consts::PI;

use monokinetic::convergence::loglog_slope;
use monokinetic::lagrangian::{
    bound_monitor, evolve_lagrangian, lagrangian_stable_dt, riemann_fields, riemann_transport_residual,
    to_eulerian, to_lagrangian, unit_lambda, LagrangianState,
};
use monokinetic::wkb::{evolve, EvolveOptions, InitialData};
use monokinetic::{Error, SpatialGrid};
use proptest::prelude::*;

fn eulerian_grid(n: usize) -> SpatialGrid {
    SpatialGrid::new(0.0, 2.0 * PI, n).unwrap()
}

/// `τ = 1/(1 + a cos m)`, `u = −b sin m` directly on the mass grid.
fn analytic_state(n: usize, a: f64, b: f64) -> LagrangianState {
    let g = SpatialGrid::new(0.0, 2.0 * PI, n).unwrap();
    let m = g.points();
    LagrangianState::new(
        g,
        m.iter().map(|x| 1.0 / (1.0 + a * x.cos())).collect(),
        m.iter().map(|x| -b * x.sin()).collect(),
        0.0,
    )
    .unwrap()
}

/// The perturbation preset at ε = 0 mapped to mass coordinates.
fn preset_state(n: usize) -> LagrangianState {
    let init = InitialData::perturbation(0.1, 0.1).unwrap();
    let s = init.sample(eulerian_grid(n), 0.0).unwrap();
    to_lagrangian(s.grid, &s.density(), &s.v, n, 0.0).unwrap()
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn mass_coordinate_preserves_total_mass() {
    let init = InitialData::perturbation(0.3, 0.2).unwrap();
    let s = init.sample(eulerian_grid(64), 0.0).unwrap();
    let st = to_lagrangian(s.grid, &s.density(), &s.v, 64, 0.0).unwrap();
    assert!((st.total_mass() - s.mass()).abs() < 1e-12);
    assert!((st.total_mass() - 2.0 * PI).abs() < 1e-12);
    assert!(st.tau.iter().all(|&t| t > 0.0));
}

#[test]
fn round_trip_converges_at_interpolation_order() {
    let init = InitialData::perturbation(0.3, 0.2).unwrap();
    let ns = [32usize, 64, 128, 256];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let s = init.sample(eulerian_grid(n), 0.0).unwrap();
            let rho = s.density();
            let st = to_lagrangian(s.grid, &rho, &s.v, n, 0.0).unwrap();
            let (rho_back, v_back) = to_eulerian(&st, s.grid, 0.0).unwrap();
            sup_gap(&rho, &rho_back).max(sup_gap(&s.v, &v_back))
        })
        .collect();
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let slope = loglog_slope(&h, &errs).unwrap();
    // the monotone limiter zeroes slopes next to extrema, which caps the
    // order at two there
    assert!(slope >= 1.9, "errors {errs:?}, slope {slope}");
    assert!(errs[3] < 2e-5, "{errs:?}");
}

#[test]
fn self_convergence_order() {
    let levels = [(32usize, 0.04), (64, 0.02), (128, 0.01), (256, 0.005)];
    let runs: Vec<LagrangianState> = levels
        .iter()
        .map(|&(n, dt)| {
            evolve_lagrangian(&analytic_state(n, 0.1, 0.1), 1.0, dt, usize::MAX)
                .unwrap()
                .snapshots
                .pop()
                .unwrap()
        })
        .collect();
    let reference = &runs[3];
    let err = |k: usize| {
        let stride = 256 / levels[k].0;
        (0..levels[k].0)
            .map(|j| {
                (runs[k].tau[j] - reference.tau[stride * j])
                    .abs()
                    .max((runs[k].u[j] - reference.u[stride * j]).abs())
            })
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = (0..3).map(err).collect();
    let order = (e[0] / e[1]).log2();
    assert!(order >= 3.5, "errors {e:?}, order {order}");
}

/// Eulerian ε = 0 evolution, mapped to mass coordinates afterwards, agrees
/// with the Lagrangian evolution of the mapped initial data. The data are
/// symmetric, so the particle at x = 0 stays there and both mass origins
/// coincide.
#[test]
fn agrees_with_eulerian_evolution() {
    let init = InitialData::perturbation(0.1, 0.1).unwrap();
    let mut gaps = Vec::new();
    for &(n, dt) in &[(128usize, 0.01), (256, 0.005)] {
        let g = eulerian_grid(n);
        let opts = EvolveOptions {
            lambda: 1.0,
            eps: 0.0,
            t_end: 1.0,
            dt,
            snapshot_every: usize::MAX,
        };
        let eul = evolve(&init, g, opts).unwrap();
        let end = eul.last();
        let mapped = to_lagrangian(g, &end.density(), &end.v, n, end.t).unwrap();
        let lag = evolve_lagrangian(&preset_state(n), 1.0, dt, usize::MAX).unwrap();
        let last = lag.snapshots.last().unwrap();
        assert!((last.t - 1.0).abs() < 1e-12);
        gaps.push(sup_gap(&mapped.tau, &last.tau).max(sup_gap(&mapped.u, &last.u)));
    }
    assert!(gaps[1] < 1e-5, "{gaps:?}");
    // second order, limited by the monotone resampling
    assert!(gaps[1] < gaps[0] / 3.5, "{gaps:?}");
}

#[test]
fn transport_residual_second_order() {
    let ns = [32usize, 64, 128];
    let res: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let dt = 1.28 / n as f64;
            let traj = evolve_lagrangian(&analytic_state(n, 0.1, 0.1), 1.0, dt, 1).unwrap();
            let (rs, rr) = riemann_transport_residual(&traj).unwrap();
            rs.max(rr)
        })
        .collect();
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let slope = loglog_slope(&h, &res).unwrap();
    assert!(slope >= 2.0 - 0.05, "residuals {res:?}, slope {slope}");
}

#[test]
fn transport_residual_detects_corruption() {
    let mut traj = evolve_lagrangian(&analytic_state(64, 0.1, 0.1), 1.0, 0.02, 1).unwrap();
    let (clean, _) = riemann_transport_residual(&traj).unwrap();
    for s in &mut traj.snapshots {
        let t = s.t;
        s.u.iter_mut().for_each(|u| *u += 0.1 * t);
    }
    let (rs, rr) = riemann_transport_residual(&traj).unwrap();
    assert!(clean < 1e-3);
    assert!((rs - 0.1).abs() < 0.01 + clean && (rr - 0.1).abs() < 0.01 + clean, "{rs} {rr}");
}

#[test]
fn transport_residual_needs_three_snapshots() {
    let traj = evolve_lagrangian(&analytic_state(16, 0.1, 0.1), 0.1, 0.1, 1).unwrap();
    assert_eq!(traj.snapshots.len(), 2);
    assert!(matches!(riemann_transport_residual(&traj), Err(Error::InsufficientData(_))));
}

#[test]
fn preset_bounds_hold_on_unit_horizon_pair() {
    let st = preset_state(256);
    let dt = 0.005;
    assert!(dt < lagrangian_stable_dt(&st));
    let traj = evolve_lagrangian(&st, 2.0, dt, 4).unwrap();
    let rho0_star = st.min_density();
    let rep = bound_monitor(&traj, rho0_star).unwrap();
    assert!(rep.m_bound > 0.0);
    assert!(rep.sup_ok, "sup {} vs M {}", rep.sup_alpha_beta, rep.m_bound);
    assert!(rep.tau_linear_ok);
    assert!(rep.tau_growth_rate <= rep.m_bound + 1e-6);
    assert!((rep.horizon - 2.0).abs() < 1e-12);
    for (rho, t) in rep.min_density.iter().zip(&rep.times) {
        assert!(rho * (1.0 + rep.c_fit * t) >= rho0_star * (1.0 - 1e-6));
    }
    assert!(rep.candidate_ok);
    assert!(rep.c_fit <= rep.c_candidate + 1e-12);
}

#[test]
fn blow_up_is_reported() {
    // a steep compressive profile forms a shock well before t = 5
    let st = analytic_state(64, 0.0, 1.5);
    match evolve_lagrangian(&st, 5.0, 0.002, 100) {
        Err(Error::GradientBlowUp { sup, limit, .. }) => assert!(sup > limit),
        Err(Error::NonFinite { .. }) | Err(Error::Domain(_)) => {}
        other => panic!("expected a breakdown, got {:?}", other.map(|t| t.snapshots.len())),
    }
}

/// Pressure λρ: scaling u by 1/√λ and t by √λ reproduces the unit problem.
#[test]
fn lambda_rescaling_matches_unit_problem() {
    let lambda = 2.0;
    let init = InitialData::perturbation(0.1, 0.1).unwrap();
    let g = eulerian_grid(128);
    let opts = EvolveOptions {
        lambda,
        eps: 0.0,
        t_end: 0.5,
        dt: 0.0025,
        snapshot_every: usize::MAX,
    };
    let end = evolve(&init, g, opts).unwrap();
    let end = end.last();
    let mapped = to_lagrangian(g, &end.density(), &end.v, 128, end.t).unwrap();
    let scaled = unit_lambda(&mapped, lambda).unwrap();
    let mut start = preset_state(128);
    start.u.iter_mut().for_each(|u| *u /= lambda.sqrt());
    let unit = evolve_lagrangian(&start, scaled.t, 0.0025, usize::MAX).unwrap();
    let last = unit.snapshots.last().unwrap();
    assert!(sup_gap(&last.tau, &scaled.tau).max(sup_gap(&last.u, &scaled.u)) < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximum_principle_and_reconstruction(a in 0.0f64..0.3, b in -0.3f64..0.3) {
        let st = analytic_state(32, a, b);
        let traj = evolve_lagrangian(&st, 0.5, 0.01, 5).unwrap();
        let rep = bound_monitor(&traj, st.min_density()).unwrap();
        prop_assert!(rep.sup_ok);
        prop_assert!(rep.tau_linear_ok);
        for s in &traj.snapshots {
            let (u, tau) = riemann_fields(s).reconstruct();
            for j in 0..s.tau.len() {
                prop_assert!((u[j] - s.u[j]).abs() <= 1e-14);
                prop_assert!((tau[j] - s.tau[j]).abs() <= 1e-14 * s.tau[j].max(1.0) * 4.0);
            }
        }
    }
}
