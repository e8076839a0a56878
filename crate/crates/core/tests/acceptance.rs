//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! values and the wall time against its budget. Runs as a plain binary so the
//! lines always reach stdout; exits nonzero if any criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use monokinetic::convergence::{loglog_slope, strictly_decreasing};
use monokinetic::gaussian::{
    asymptotic_gamma, gamma_at, gamma_from_implicit, implicit_time, integrate_gamma, GaussianParams,
};
use monokinetic::lagrangian::{bound_monitor, evolve_lagrangian, to_lagrangian};
use monokinetic::nls::{
    gaussian_ansatz_oracle, gaussian_domain, log_lipschitz_gap, nonlinear_step, propagate, VACUUM_FLOOR,
};
use monokinetic::observable::{Interval, SpaceTimeBump, TensorBump};
use monokinetic::quadrature::integrate;
use monokinetic::special::dawson;
use monokinetic::wigner::{
    gaussian_convergence_sweep, gaussian_wigner_exact, gaussian_y_window, wigner_transform, FieldSource,
    WignerOptions,
};
use monokinetic::wkb::{
    convergence_da1, skew_check, structure_matrices, vlasov_residual, InitialData, MonokineticTrajectory,
};
use monokinetic::{Complex64, SpatialGrid, WaveField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params(rho: f64, sigma: f64, omega: f64, p0: f64, lambda: f64) -> GaussianParams {
    GaussianParams::new(rho, sigma, omega, p0, lambda).unwrap()
}

fn energy_integral() -> Outcome {
    let worst = [0.0, 1.0]
        .iter()
        .map(|&w| {
            integrate_gamma(&params(1.0, 1.0, w, 0.0, 1.0), 0.0, 50.0, 1e-10)
                .unwrap()
                .max_energy_residual()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max |energy residual| = {worst:.2e} (limit 1e-8)"))
}

fn focusing_blowup() -> Outcome {
    let p = params(1.0, 1.0, 0.0, 0.0, -1.0);
    let t: Vec<Option<f64>> = [1e-8, 1e-10]
        .iter()
        .map(|&tol| integrate_gamma(&p, 0.0, 5.0, tol).unwrap().t_blow())
        .collect();
    // γ reaches the floor 1e-6 at ∫₀^√(ln 1e6) e^{-w²} dw
    let oracle = integrate(|w: f64| (-w * w).exp(), 0.0, (1e6f64).ln().sqrt(), 1e-15, 1e-14).value;
    match (t[0], t[1]) {
        (Some(a), Some(b)) => outcome(
            (a - b).abs() <= 1e-4 && (a - oracle).abs() <= 1e-4 && (b - oracle).abs() <= 1e-4,
            format!("t_blow = {a:.8} / {b:.8} at tol 1e-8 / 1e-10, spread {:.1e} (limit 1e-4), quadrature {oracle:.8}", (a - b).abs()),
        ),
        _ => outcome(false, format!("no blow-up detected: {t:?}")),
    }
}

fn large_time_asymptotics() -> Outcome {
    let p = params(1.0, 1.0, 0.0, 0.0, 1.0);
    let ratios = |t: f64| {
        let s = gamma_from_implicit(t, &p).unwrap();
        let (g, gd) = asymptotic_gamma(t, &p).unwrap();
        (s.gamma / g, s.gamma_dot / gd)
    };
    let (g4, d4) = ratios(1e4);
    let (g8, d8) = ratios(1e8);
    let pass = (g8 - 1.0).abs() <= 0.1
        && (d8 - 1.0).abs() <= 0.1
        && (g8 - 1.0).abs() < (g4 - 1.0).abs()
        && (d8 - 1.0).abs() < (d4 - 1.0).abs();
    outcome(
        pass,
        format!("gamma ratio {g4:.5} -> {g8:.5}, gamma_dot ratio {d4:.5} -> {d8:.5} (t = 1e4 -> 1e8, within 10% at 1e8)"),
    )
}

fn implicit_round_trip() -> Outcome {
    let p = params(1.0, 1.0, 0.0, 0.0, 1.0);
    let g = gamma_at(&p, 0.0, 5.0, 1e-12).unwrap().gamma;
    let back = implicit_time(g, &p).unwrap();
    let gap = (back - 5.0).abs();
    outcome(gap <= 1e-6, format!("|t(gamma(5)) - 5| = {gap:.2e} (limit 1e-6)"))
}

fn splitting_order() -> Outcome {
    let p = params(1.0, 1.0, 0.5, 0.3, 1.0);
    let eps = 0.1;
    let grid = gaussian_domain(&p, eps, 1.0, 1e-12).unwrap();
    let u0 = gaussian_ansatz_oracle(&p, eps, 0.0, 1e-12).unwrap().sample(grid).unwrap();
    let exact = gaussian_ansatz_oracle(&p, eps, 1.0, 1e-12).unwrap().sample(grid).unwrap();
    let dts = [eps / 8.0, eps / 16.0, eps / 32.0];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let run = propagate(&u0, p.lambda, 1.0, dt, VACUUM_FLOOR).unwrap();
            run.field.l2_distance(&exact) / exact.l2_norm()
        })
        .collect();
    let slope = loglog_slope(&dts, &errs).unwrap();
    let finest = errs[2];
    outcome(
        slope >= 1.9 && finest <= 1e-4,
        format!("order {slope:.3} (limit 1.9), finest relative L2 error {finest:.2e} (limit 1e-4)"),
    )
}

fn mass_and_modulus() -> Outcome {
    let p = params(1.0, 1.0, 0.5, 0.3, 1.0);
    let eps = 0.1;
    let grid = gaussian_domain(&p, eps, 1.0, 1e-10).unwrap();
    let u0 = gaussian_ansatz_oracle(&p, eps, 0.0, 1e-10).unwrap().sample(grid).unwrap();
    let run = propagate(&u0, p.lambda, 1.0, eps / 16.0, VACUUM_FLOOR).unwrap();
    let drift = ((run.field.mass() - u0.mass()) / u0.mass()).abs();
    // modulus after one nonlinear substep on random samples spanning 24 decades
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = SpatialGrid::new(0.0, 1.0, 1 << 14).unwrap();
    let values: Vec<Complex64> = (0..g.n)
        .map(|_| Complex64::from_polar(10f64.powf(rng.random_range(-12.0..12.0)), rng.random_range(0.0..TAU)))
        .collect();
    let mut f = WaveField::new(eps, g, values.clone()).unwrap();
    nonlinear_step(&mut f, 1.3, 0.37, VACUUM_FLOOR).unwrap();
    let worst = f
        .values
        .iter()
        .zip(&values)
        .map(|(a, b)| (a.norm() - b.norm()).abs() / b.norm())
        .fold(0.0, f64::max);
    let ulps = worst / f64::EPSILON;
    outcome(
        drift <= 1e-10 && ulps <= 4.0,
        format!("relative mass drift {drift:.2e} (limit 1e-10), modulus change {ulps:.1} ulp (limit: rounding, 4 ulp)"),
    )
}

fn wigner_identities() -> Outcome {
    let p = params(1.0, 1.0, 0.5, 0.3, 1.0);
    let eps = 0.1;
    let grid = gaussian_domain(&p, eps, 1.0, 1e-12).unwrap();
    let u = gaussian_ansatz_oracle(&p, eps, 1.0, 1e-12).unwrap().sample(grid).unwrap();
    let window = gaussian_y_window(&p, eps, 1.0, 1e-12).unwrap();
    let full = wigner_transform(
        &u,
        WignerOptions {
            y_window: Some(window),
            x_range: None,
        },
    )
    .unwrap();
    let dens = u.density();
    let l1: f64 = full.marginal().iter().zip(&dens).map(|(m, d)| (m - d).abs()).sum::<f64>() / dens.iter().sum::<f64>();
    let w = wigner_transform(
        &u,
        WignerOptions {
            y_window: Some(window),
            x_range: Some(Interval::new(-3.0, 3.5)),
        },
    )
    .unwrap();
    let exact = gaussian_wigner_exact(&p, eps, 1.0, &w.x, &w.xi, 1e-12).unwrap();
    let max = exact.max_abs();
    let worst = w.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / max;
    outcome(
        l1 <= 1e-6 && worst <= 1e-6,
        format!("marginal relative L1 {l1:.2e} (limit 1e-6), discrete vs closed form {worst:.2e} of max|W| (limit 1e-6)"),
    )
}

fn weak_convergence() -> Outcome {
    let p = params(1.0, 1.0, 0.5, 0.3, 1.0);
    let eps = [0.2, 0.1, 0.05, 0.025];
    let observables = [
        TensorBump::new(Interval::new(-1.0, 1.5), Interval::new(-2.0, 2.5)),
        TensorBump::new(Interval::new(-0.5, 2.0), Interval::new(0.0, 3.0)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, phi) in observables.iter().enumerate() {
        let tab = gaussian_convergence_sweep(&p, &eps, 1.0, phi, FieldSource::Numeric { dt_ratio: 0.125 }, 1e-11).unwrap();
        let slope = tab.slope.unwrap_or(f64::NAN);
        pass &= tab.monotone() && slope >= 1.0;
        let gaps: Vec<String> = tab.gaps().iter().map(|g| format!("{g:.2e}")).collect();
        parts.push(format!("phi{} gaps [{}] slope {slope:.3}", k + 1, gaps.join(", ")));
    }
    outcome(pass, format!("{} (monotone, slope limit 1)", parts.join("; ")))
}

fn symmetrizer_and_skewness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut asym: f64 = 0.0;
    let mut states = 0;
    while states < 1000 {
        let (a1, a2) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let v = rng.random_range(-5.0..5.0);
        let lambda = rng.random_range(0.1..4.0);
        if a1 * a1 + a2 * a2 < 1e-3 {
            continue;
        }
        let (s, a) = structure_matrices(a1, a2, v, lambda);
        let sa = s * a;
        asym = asym.max((sa - sa.transpose()).norm());
        states += 1;
    }
    let g = SpatialGrid::new(0.0, TAU, 64).unwrap();
    let xs = g.points();
    let mut skew: f64 = 0.0;
    for _ in 0..1000 {
        let c: Vec<[f64; 4]> = (0..8).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let w: Vec<Complex64> = xs
            .iter()
            .map(|&x| {
                c.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| {
                    let (cs, sn) = ((k as f64 * x).cos(), (k as f64 * x).sin());
                    acc + Complex64::new(c[0] * cs + c[1] * sn, c[2] * cs + c[3] * sn)
                })
            })
            .collect();
        let norm2 = g.dx() * w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        skew = skew.max(skew_check(g, &w).unwrap() / norm2);
    }
    outcome(
        asym <= 1e-12 && skew <= 1e-10,
        format!("max |SA - (SA)^T| = {asym:.2e} (limit 1e-12), max |<Lw,w>|/|w|^2 = {skew:.2e} (limit 1e-10)"),
    )
}

fn semiclassical_gaps() -> Outcome {
    let init = InitialData::perturbation(0.1, 0.1).unwrap();
    let grid = SpatialGrid::new(0.0, TAU, 128).unwrap();
    let tab = convergence_da1(&init, grid, 1.0, &[0.1, 0.05, 0.025], 1.0, 0.005).unwrap();
    let (a, v) = (tab.amplitude_slope.unwrap_or(f64::NAN), tab.velocity_slope.unwrap_or(f64::NAN));
    outcome(
        a >= 0.9 && v >= 0.9,
        format!("amplitude slope {a:.3}, phase-gradient slope {v:.3} (limit 0.9)"),
    )
}

fn vlasov_residual_order() -> Outcome {
    let p = params(1.0, 1.0, 0.3, 0.2, 1.0);
    let phi = SpaceTimeBump {
        t: Interval::new(0.1, 0.9),
        x: Interval::new(-1.5, 2.0),
        xi: Interval::new(-1.0, 1.5),
        amplitude: 1.0,
    };
    let r: Vec<f64> = [(0.05_f64, 0.0125_f64), (0.025, 0.00625), (0.0125, 0.003125)]
        .iter()
        .map(|&(h, dt)| {
            let nx = (8.0 / h).round() as usize;
            let x: Vec<f64> = (0..=nx).map(|j| -4.0 + h * j as f64).collect();
            let nt = (1.0 / dt).round() as usize;
            let times: Vec<f64> = (0..=nt).map(|i| dt * i as f64).collect();
            let mono = MonokineticTrajectory::gaussian(&p, x, times, 1e-12).unwrap();
            vlasov_residual(&mono, &phi, p.lambda).unwrap()
        })
        .collect();
    let orders = [(r[0] / r[1]).log2(), (r[1] / r[2]).log2()];
    outcome(
        orders.iter().all(|&o| o >= 2.0),
        format!(
            "residuals {:.2e}, {:.2e}, {:.2e}; orders {:.4}, {:.4} (limit 2); coarsest {:.2e}",
            r[0], r[1], r[2], orders[0], orders[1], r[0]
        ),
    )
}

fn density_bound_invariants() -> Outcome {
    let init = InitialData::perturbation(0.1, 0.1).unwrap();
    let grid = SpatialGrid::new(0.0, TAU, 256).unwrap();
    let s = init.sample(grid, 0.0).unwrap();
    let st = to_lagrangian(grid, &s.density(), &s.v, 256, 0.0).unwrap();
    let traj = evolve_lagrangian(&st, 2.0, 0.005, 4).unwrap();
    let rho0 = st.min_density();
    let rep = bound_monitor(&traj, rho0).unwrap();
    let lower_ok = rep
        .min_density
        .iter()
        .zip(&rep.times)
        .all(|(r, t)| r * (1.0 + rep.c_fit * t) >= rho0 * (1.0 - 1e-6));
    outcome(
        rep.sup_ok && rep.tau_linear_ok && rep.candidate_ok && lower_ok && (rep.horizon - 2.0).abs() < 1e-12,
        format!(
            "M = {:.6}, sup(alpha, beta) = {:.6}, tau growth rate {:.6}, C_fit = {:.6} <= M rho0 = {:.6}, horizon {}",
            rep.m_bound, rep.sup_alpha_beta, rep.tau_growth_rate, rep.c_fit, rep.c_candidate, rep.horizon
        ),
    )
}

fn uniqueness_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut violations = 0;
    for _ in 0..100_000 {
        let mut draw = || Complex64::from_polar(10f64.powf(rng.random_range(-6.0..6.0)), rng.random_range(0.0..TAU));
        let (u, v) = (draw(), draw());
        let (lhs, rhs) = log_lipschitz_gap(u, v).unwrap();
        if lhs > rhs {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations in 100000 pairs"))
}

fn dawson_checks() -> Outcome {
    // five-point derivative, h⁴ truncation far below the bound
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let x = -10.0 + 20.0 * k as f64 / 999.0;
        let d = (dawson(x - 2.0 * h) - 8.0 * dawson(x - h) + 8.0 * dawson(x + h) - dawson(x + 2.0 * h)) / (12.0 * h);
        worst = worst.max((d - (1.0 - 2.0 * x * dawson(x))).abs());
    }
    let tail: Vec<f64> = (0..1000).map(|k| 3.0 + 0.1 * k as f64).map(|x| 2.0 * x * dawson(x)).collect();
    let monotone = strictly_decreasing(&tail) && tail.iter().all(|&r| r > 1.0);
    outcome(
        worst <= 1e-10 && monotone,
        format!(
            "max ODE residual {worst:.2e} (limit 1e-10), 2xF(x) decreasing to 1 on [3, 102.9]: {monotone} (last {:.8})",
            tail[999]
        ),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 14] = [
        ("energy integral", Duration::from_secs(1), energy_integral),
        ("focusing blow-up", Duration::from_secs(1), focusing_blowup),
        ("large-time asymptotics", Duration::from_secs(5), large_time_asymptotics),
        ("implicit relation round trip", Duration::from_secs(1), implicit_round_trip),
        ("split-step order vs Gaussian oracle", Duration::from_secs(30), splitting_order),
        ("mass conservation and modulus invariance", Duration::from_secs(10), mass_and_modulus),
        ("Wigner marginal and closed form", Duration::from_secs(30), wigner_identities),
        ("weak convergence to the monokinetic measure", Duration::from_secs(120), weak_convergence),
        ("symmetrizer and skewness", Duration::from_secs(5), symmetrizer_and_skewness),
        ("semiclassical amplitude and phase gaps", Duration::from_secs(120), semiclassical_gaps),
        ("Vlasov weak residual order", Duration::from_secs(60), vlasov_residual_order),
        ("gradient and density bounds", Duration::from_secs(60), density_bound_invariants),
        ("log-Lipschitz inequality", Duration::from_secs(1), uniqueness_inequality),
        ("Dawson function", Duration::from_secs(1), dawson_checks),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail}; {:.2} s (budget {} s)",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
