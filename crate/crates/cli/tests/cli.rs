use std::fs;
use std::path::Path;
use std::process::Command;

use monokinetic_cli::config::{theorem1_gaussian, GaussianSection, Numerics, PerturbationSection};
use monokinetic_cli::{run, sweep, ExperimentConfig, Preset, RunError, Scenario};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monokinetic"))
}

fn config(scenario: Scenario, preset: Preset, dir: &Path, t_end: f64) -> ExperimentConfig {
    ExperimentConfig {
        scenario,
        preset: Some(preset),
        output_dir: dir.to_path_buf(),
        seed: 1,
        gaussian: None,
        perturbation: None,
        observable: None,
        numerics: Numerics {
            t_end,
            ..Numerics::default()
        },
    }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn gaussian_energy_column_stays_small() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Scenario::Gaussian, Preset::Theorem1, dir.path(), 10.0);
    let rep = run(&c).unwrap();
    assert_eq!(rep.metrics[0].0, "max_energy_residual");
    let (header, rows) = read_csv(&dir.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "gamma", "gamma_dot", "energy_residual"]);
    assert!(rows.len() > 10);
    for r in &rows {
        assert!(r[3].parse::<f64>().unwrap().abs() <= 1e-8);
    }
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!((last - 10.0).abs() < 1e-12);
    for f in ["config.toml", "summary.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("blowup.json").exists());
}

#[test]
fn focusing_gaussian_reports_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Gaussian, Preset::Theorem1, dir.path(), 5.0);
    c.gaussian = Some(GaussianSection {
        lambda: -1.0,
        ..theorem1_gaussian()
    });
    run(&c).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("blowup.json")).unwrap()).unwrap();
    assert_eq!(v["status"], "blowup");
    let t_blow = v["t_blow"].as_f64().unwrap();
    assert!((t_blow - 0.886227).abs() < 1e-4, "{t_blow}");
    assert_eq!(v["tol"].as_f64().unwrap(), 1e-10);
}

#[test]
fn invalid_sigma_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gaussian", "--sigma0", "-1", "--tol", "1", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gaussian.sigma0"), "{err}");
    assert!(err.contains("numerics.tol"), "{err}");
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // a shock forms long before t = 20, so the smooth evolution must stop
    let out = bin()
        .args(["bound", "--density-amplitude", "0.5", "--phase-amplitude", "1.5", "--t-end", "20", "--n", "64"])
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("error.json").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn cli_runs_from_config_file_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = bin()
        .args(["euler", "--t-end", "0.5", "--n", "64", "--dt", "0.01", "--output-dir"])
        .arg(&first)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // re-run from the resolved config written beside the outputs
    let second = dir.path().join("second");
    let out = bin()
        .arg("euler")
        .arg("--config")
        .arg(first.join("config.toml"))
        .arg("--output-dir")
        .arg(&second)
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in ["state.csv", "snapshots.csv", "state.json", "summary.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    let (header, rows) = read_csv(&first.join("state.csv"));
    assert_eq!(header, ["x", "a1", "a2", "v"]);
    assert_eq!(rows.len(), 64);
    let a = fs::read_to_string(first.join("manifest.json")).unwrap();
    let b = fs::read_to_string(second.join("manifest.json")).unwrap();
    let ha: serde_json::Value = serde_json::from_str(&a).unwrap();
    let hb: serde_json::Value = serde_json::from_str(&b).unwrap();
    assert_ne!(ha["config_sha256"], hb["config_sha256"], "output_dir differs, so the hash must too");
    assert_eq!(ha["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let text = serde_json::json!({
        "scenario": "bound",
        "preset": "theorem2",
        "output_dir": dir.path().join("out"),
        "numerics": { "t_end": 0.5, "n": 64 }
    });
    fs::write(&path, text.to_string()).unwrap();
    let out = bin().arg("bound").arg("--config").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/bound.json")).unwrap()).unwrap();
    for key in ["M", "sup_alpha_beta", "tau_linear_ok", "C_fit", "horizon"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["tau_linear_ok"], true);
    let (header, _) = read_csv(&dir.path().join("out/lagrangian.csv"));
    assert_eq!(header, ["m", "tau", "u"]);
}

#[test]
fn nls_writes_field_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Nls, Preset::Theorem1, dir.path(), 0.5);
    c.numerics.eps = Some(0.2);
    let rep = run(&c).unwrap();
    assert!(rep.metrics[0].1 < 1e-3);
    let (header, rows) = read_csv(&dir.path().join("field.csv"));
    assert_eq!(header, ["x", "re_u", "im_u"]);
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("field.json")).unwrap()).unwrap();
    assert_eq!(side["grid"]["n"].as_u64().unwrap() as usize, rows.len());
    assert_eq!(side["eps"], 0.2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["log_gap_check"]["violations"], 0);
}

#[test]
fn wigner_writes_sweep_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::WignerSweep, Preset::Theorem1, dir.path(), 0.5);
    c.numerics.eps_list = Some(vec![0.2, 0.1]);
    run(&c).unwrap();
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header, ["eps", "gap"]);
    assert_eq!(rows.len(), 2);
    let (header, rows) = read_csv(&dir.path().join("wigner.csv"));
    assert_eq!(header, ["x", "xi", "w"]);
    assert!(!rows.is_empty());
}

#[test]
fn da1_sweep_has_slope_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Da1Sweep, Preset::Theorem2, dir.path(), 1.0);
    c.numerics.n = Some(128);
    c.numerics.dt = Some(0.005);
    c.numerics.eps_list = Some(vec![0.1]);
    let rep = sweep(&c, "numerics.eps", &[0.2, 0.1, 0.05, 0.025]).unwrap();
    assert!(rep.rows.iter().all(|r| r.error.is_none()));
    let (header, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header[0], "eps");
    assert!(header.contains(&"slope".to_string()));
    let k = header.iter().position(|h| h == "slope").unwrap();
    let slope: f64 = rows[0][k].parse().unwrap();
    assert!(slope >= 0.9, "{slope}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn dt_halving_sweep_shows_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Nls, Preset::Theorem1, dir.path(), 1.0);
    c.gaussian = Some(GaussianSection {
        omega0: 0.5,
        p0: 0.3,
        ..theorem1_gaussian()
    });
    c.numerics.eps = Some(0.1);
    let rep = sweep(&c, "numerics.dt", &[0.1 / 8.0, 0.1 / 16.0, 0.1 / 32.0]).unwrap();
    let slope = rep.slopes.as_ref().unwrap()["relative_l2_error"].unwrap();
    assert!((slope - 2.0).abs() < 0.15, "{slope}");
}

#[test]
fn single_value_sweep_equals_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Bound, Preset::Theorem2, &dir.path().join("sweep"), 0.5);
    c.numerics.n = Some(64);
    sweep(&c, "perturbation.phase_amplitude", &[0.2]).unwrap();
    let mut direct = c.with_axis("perturbation.phase_amplitude", 0.2).unwrap();
    direct.output_dir = dir.path().join("direct");
    run(&direct).unwrap();
    let row = dir.path().join("sweep/rows/000");
    for f in ["bound.json", "lagrangian.csv", "summary.json"] {
        assert_eq!(fs::read(row.join(f)).unwrap(), fs::read(dir.path().join("direct").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_records_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(Scenario::Gaussian, Preset::Theorem1, dir.path(), 1.0);
    let rep = sweep(&c, "gaussian.sigma0", &[1.0, -1.0]).unwrap();
    assert!(rep.rows[0].error.is_none());
    assert!(rep.rows[1].error.as_ref().unwrap().contains("gaussian.sigma0"));
    let (_, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(matches!(
        sweep(&c, "gaussian.sigma0", &[-1.0]),
        Err(RunError::Config(_))
    ));
}

#[test]
fn deterministic_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Euler, Preset::Theorem2, &dir.path().join("a"), 0.3);
    c.numerics.n = Some(32);
    c.numerics.eps = Some(0.05);
    run(&c).unwrap();
    c.output_dir = dir.path().join("b");
    run(&c).unwrap();
    // the resolved configs differ only in output_dir
    for f in ["state.csv", "snapshots.csv", "summary.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn oversized_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Scenario::Gaussian, Preset::Theorem1, dir.path(), 1.0);
    c.seed = u64::MAX;
    match run(&c) {
        Err(RunError::Config(errs)) => assert!(errs.iter().any(|e| e.field == "seed")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn subcommands_run_without_flags() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, artifact) in [("nls", "field.csv"), ("da1", "da1.csv"), ("euler", "state.csv"), ("bound", "bound.json")] {
        let status = bin().arg(cmd).current_dir(dir.path()).status().unwrap();
        assert!(status.success(), "{cmd}");
        let scenario = match cmd {
            "da1" => "da1_sweep",
            other => other,
        };
        assert!(dir.path().join("out").join(scenario).join(artifact).exists(), "{cmd}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1.0f64..1.0, Just(0.1), Just(1e-300), Just(-0.0)]
}

proptest! {
    #[test]
    fn config_round_trips_bit_identically(
        rho in finite(), sigma in finite(), omega in finite(), p0 in finite(), lambda in finite(),
        a in finite(), b in finite(), t_end in finite(), dt in proptest::option::of(finite()),
        eps_list in proptest::option::of(proptest::collection::vec(finite(), 0..5)),
        n in proptest::option::of(1usize..4096), seed in 0..=i64::MAX as u64,
    ) {
        let c = ExperimentConfig {
            scenario: Scenario::Da1Sweep,
            preset: Some(Preset::Theorem2),
            output_dir: "some/dir".into(),
            seed,
            gaussian: Some(GaussianSection { rho_star: rho, sigma0: sigma, omega0: omega, p0, lambda }),
            perturbation: Some(PerturbationSection { density_amplitude: a, phase_amplitude: b, lambda }),
            observable: None,
            numerics: Numerics { t_end, dt, eps_list, n, ..Numerics::default() },
        };
        let text = c.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.gaussian.unwrap().sigma0.to_bits(), sigma.to_bits());
        prop_assert_eq!(back.to_toml().unwrap(), text);
        let json = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&json).unwrap(), c);
    }
}
