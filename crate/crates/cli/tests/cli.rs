use std::path::Path;
use std::process::Command;

use nhaqo::experiments::build_spec;
use nhaqo::{render, Experiment, ExperimentConfig};
use nhaqo_core::evolve::initial_ground_state;
use nhaqo_core::model::total_hamiltonian;
use nhaqo_core::C64;

/// Data rows of a rendered CSV, split into fields.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Footer rows with the given key.
fn footers(csv: &str, key: &str) -> Vec<Vec<f64>> {
    let prefix = format!("# {key},");
    csv.lines()
        .filter_map(|l| l.strip_prefix(&prefix))
        .map(|rest| rest.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

fn f(x: &str) -> f64 {
    x.parse().unwrap()
}

#[test]
fn fig1_minima_match_closed_form() {
    let csv = render(Experiment::Fig1, &cfg("j_star = 1.0")).unwrap();
    let minima = footers(&csv, "minimum");
    assert_eq!(minima.len(), 4);
    let sin = 2f64.powi(-10);
    for m in &minima {
        let (d, s, g) = (m[0], m[1], m[2]);
        if d == 0.0 {
            assert!((s - 0.5).abs() < 1e-6);
            // 2 J_c sin(alpha) sqrt(2 / (1 + cos)) with J_c = 1/2
            let cos = (1.0 - sin * sin).sqrt();
            assert!((g - sin * (2.0 / (1.0 + cos)).sqrt()).abs() < 1e-4 * g);
        } else {
            let closed = 2.0 * d / (d * d + 4.0f64).sqrt();
            assert!((g - closed).abs() < 1e-4 * closed);
            assert!((s - (2.0 + d * d) / (4.0 + d * d)).abs() < 1e-6);
        }
    }
}

#[test]
fn fig1_grid_resolution_does_not_change_shared_points() {
    let coarse = render(Experiment::Fig1, &cfg("grid_points = 11")).unwrap();
    let fine = render(Experiment::Fig1, &cfg("grid_points = 1001")).unwrap();
    let fine_rows = rows(&fine);
    for (i, row) in rows(&coarse).iter().enumerate() {
        assert_eq!(row, &fine_rows[i * 100]);
    }
}

#[test]
fn gap_trace_footer_matches_column_and_grows_with_decay() {
    let base = "model = \"ising\"\nn_qubits = 3\nseed = 7\ngrid_points = 401\n";
    let herm = render(Experiment::GapTrace, &cfg(base)).unwrap();
    let col_min = rows(&herm).iter().map(|r| f(&r[5])).fold(f64::INFINITY, f64::min);
    let g_m = footers(&herm, "g_m")[0][0];
    assert!(g_m <= col_min && g_m > col_min * (1.0 - 1e-3));

    // the minimum of this instance sits near s = 1 where f2 = delta0 (1 - s)
    // vanishes, so the decay term barely moves it
    let lossy = render(Experiment::GapTrace, &cfg(&format!("{base}delta0 = 0.5\n"))).unwrap();
    let s_c = footers(&herm, "s_c")[0][0];
    let g_lossy = footers(&lossy, "g_m")[0][0];
    assert!(s_c > 0.99);
    assert!(g_lossy != g_m && (g_lossy - g_m).abs() < 1e-2 * g_m);
}

#[test]
fn gap_trace_reports_exceptional_point_only_when_present() {
    // with cos(alpha) = 0.8 the linear schedule hits the EP at delta0 = tan(alpha)
    let at = render(Experiment::GapTrace, &cfg("cos_alpha = 0.8\ndelta0 = 0.75")).unwrap();
    let ep = footers(&at, "exceptional_point");
    assert_eq!(ep.len(), 1);
    assert!((ep[0][0] - 1.0 / 1.8).abs() < 1e-6);
    let away = render(Experiment::GapTrace, &cfg("cos_alpha = 0.8\ndelta0 = 10.0")).unwrap();
    assert!(footers(&away, "exceptional_point").is_empty());
}

/// Fixed-step RK4 of `i dpsi/dt = H(t/tau) psi`.
fn rk4(spec: &nhaqo_core::model::AnnealSpec, psi: &[C64], steps: usize) -> Vec<C64> {
    let tau = spec.tau();
    let dt = tau / steps as f64;
    let rhs = |t: f64, y: &[C64]| -> Vec<C64> {
        total_hamiltonian(spec, (t / tau).min(1.0))
            .mul_vec(y)
            .into_iter()
            .map(|z| z * C64::new(0.0, -1.0))
            .collect()
    };
    let add = |y: &[C64], k: &[C64], a: f64| -> Vec<C64> { y.iter().zip(k).map(|(y, k)| y + k * a).collect() };
    let mut y = psi.to_vec();
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + dt / 2.0, &add(&y, &k1, dt / 2.0));
        let k3 = rhs(t + dt / 2.0, &add(&y, &k2, dt / 2.0));
        let k4 = rhs(t + dt, &add(&y, &k3, dt));
        for j in 0..y.len() {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
    }
    y
}

#[test]
fn evolve_sweep_reaches_ground_state_and_matches_oracle() {
    let c = cfg(
        "model = \"ising\"\nn_qubits = 2\nseed = 3\ntau_units = \"inverse-gap-squared\"\ntau_list = [0.1, 1.0, 10.0, 100.0]\n",
    );
    let csv = render(Experiment::Evolve, &c).unwrap();
    let data = rows(&csv);
    assert_eq!(data.len(), 4);
    let last = &data[3];
    assert!(f(&last[1]) > 0.99, "{last:?}");

    let spec = build_spec(&c, 0.0, f(&last[0])).unwrap();
    let psi0 = initial_ground_state(&spec).unwrap();
    let steps = (spec.tau() / 0.005).ceil() as usize;
    let y = rk4(&spec, &psi0, steps);
    let h0 = spec.h0();
    let k = (0..4).min_by(|&a, &b| h0[(a, a)].re.total_cmp(&h0[(b, b)].re)).unwrap();
    assert!((y[k].norm_sqr() - f(&last[1])).abs() < 1e-6);
}

#[test]
fn sudden_limit_keeps_initial_overlap() {
    let c = cfg("model = \"ising\"\nn_qubits = 2\nseed = 1\ntau = 1e-6\n");
    let csv = render(Experiment::Evolve, &c).unwrap();
    let p = f(&rows(&csv)[0][1]);
    let spec = build_spec(&c, 0.0, 1.0).unwrap();
    let psi0 = initial_ground_state(&spec).unwrap();
    let h0 = spec.h0();
    let k = (0..4).min_by(|&a, &b| h0[(a, a)].re.total_cmp(&h0[(b, b)].re)).unwrap();
    assert!((p - psi0[k].norm_sqr()).abs() < 1e-6);
}

#[test]
fn tau_sweep_scalings() {
    let csv = render(
        Experiment::TauSweep,
        &cfg("n_list = [10, 12]\ndelta0_list = [1.0, 0.01, 0.005]"),
    )
    .unwrap();
    let data = rows(&csv);
    let tau = |n: &str, d: f64| -> f64 { f(&data.iter().find(|r| r[0] == n && f(&r[1]) == d).unwrap()[4]) };
    assert!((tau("10", 1.0) - 0.0618).abs() < 1e-3);
    let ratio = tau("10", 0.005) / tau("10", 0.01);
    assert!((ratio - 8.0).abs() < 0.1);
    assert!((tau("12", 1.0) / tau("10", 1.0) - 0.5).abs() < 1e-12);
}

#[test]
fn tau_sweep_reports_zero_gap_per_row() {
    let csv = render(
        Experiment::TauSweep,
        &cfg("delta0_list = [0.0, 1.0]\ndelta_qubit = 0.1"),
    )
    .unwrap();
    let data = rows(&csv);
    assert!(data[0][8].contains("gap"));
    assert_eq!(data[1][6], "true");
    assert!((f(&data[1][5]) - 10.0).abs() < 1e-12);
}

#[test]
fn ep_scan_flags_only_the_critical_decay() {
    let csv = render(
        Experiment::EpScan,
        &cfg("cos_alpha = 0.8\ndelta0_list = [0.5, 0.75, 1.0]"),
    )
    .unwrap();
    let found: Vec<String> = rows(&csv).iter().map(|r| r[1].clone()).collect();
    assert_eq!(found, ["false", "true", "false"]);
}

#[test]
fn header_records_version_hash_and_tolerances() {
    let c = cfg("delta0_list = [0.5]");
    let csv = render(Experiment::Fig1, &c).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with(&format!("# nhaqo {}", env!("CARGO_PKG_VERSION"))));
    assert!(first.contains(&format!("config_sha256={}", c.digest())));
    let moved = ExperimentConfig {
        output_path: Some("elsewhere.csv".into()),
        ..c.clone()
    };
    assert_eq!(render(Experiment::Fig1, &moved).unwrap(), csv);
    assert!(first.contains("tolerance="));
}

fn nhaqo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nhaqo")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn binary_is_deterministic_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.toml",
        "model = \"ising\"\nn_qubits = 3\nseed = 7\ngrid_points = 101\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = nhaqo(&[
            "gap-trace",
            "--config",
            &config,
            "--set",
            "delta0=0.5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(text).unwrap().contains("# config delta0 = 0.5"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();

    let bad = write(dir.path(), "bad.toml", "no_such_key = 1\n");
    assert_eq!(nhaqo(&["fig1", "--config", &bad, "--out", out]).status.code(), Some(2));
    assert_eq!(
        nhaqo(&["evolve", "--set", "tau=-1", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(nhaqo(&["fig1"]).status.code(), Some(2));

    // aligned two-level model: the levels cross, so g_m = 0
    let zero_gap = nhaqo(&[
        "evolve",
        "--set",
        "cos_alpha=1.0",
        "--set",
        "tau_units=inverse-gap-squared",
        "--out",
        out,
    ]);
    assert_eq!(zero_gap.status.code(), Some(3));

    let unwritable = dir.path().join("missing").join("o.csv");
    assert_eq!(
        nhaqo(&["fig1", "--out", unwritable.to_str().unwrap()]).status.code(),
        Some(4)
    );
    assert_eq!(nhaqo(&["fig1", "--out", out]).status.code(), Some(0));
}
