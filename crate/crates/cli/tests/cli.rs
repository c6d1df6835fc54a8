use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const EMISSION: &str = r#"
mode = "emission"
[system]
delta = 1.0
eta = 0.3
n_fock = 12
n_levels = 8
[[baths]]
kind = "resonator"
gamma = 1e-3
[[baths]]
kind = "qubit"
gamma = 1e-2
temperature = 0.1
[sweep]
parameter = "eta"
start = 0.2
stop = 0.6
points = 3
[emission]
omega = { start = 0.01, stop = 2.0, points = 120 }
"#;

fn cqed(args: &[&str], threads_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cqed"));
    cmd.args(args).env_remove("CQED_THREADS");
    if let Some(t) = threads_env {
        cmd.env("CQED_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn single_point_eigen_writes_one_transition_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.toml", "[system]\ndelta = 1.0\neta = 0.2\nn_fock = 10\nn_levels = 6\n[sweep]\nparameter = \"eta\"\nstart = 0.2\nstop = 0.2\npoints = 1\n");
    let out = dir.path().join("out");
    let o = cqed(&["eigen", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = fs::read_to_string(out.join("transitions.csv")).unwrap();
    let mut lines = t.lines();
    assert_eq!(lines.next(), Some("i,j,label_i,label_j,omega_ji"));
    assert_eq!(lines.count(), 15);
    assert!(lines_of(&out).iter().all(|f| !f.starts_with("transitions_")));

    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "ok");
    assert_eq!(m["software"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["gme"]["omega_min"], 1e-9);
    assert_eq!(m["config"]["output"]["log_floor"], 1e-6);
    assert_eq!(m["resolved"]["hilbert_dim"], 20);
    assert!(m["tolerances"]["steady_state_uniqueness_tol"].is_number());
}

fn lines_of(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn eigen_with_baths_writes_populations() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[system]\ndelta = 1.0\neta = 0.2\nn_fock = 10\nn_levels = 6\n[[baths]]\nkind = \"resonator\"\ngamma = 1e-3\noperator = \"x_m\"\n[[baths]]\nkind = \"qubit\"\ngamma = 1e-2\ntemperature = 0.2\n";
    let cfg = write_config(dir.path(), "e.toml", text);
    let out = dir.path().join("out");
    let o = cqed(&["eigen", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let p = fs::read_to_string(out.join("populations.csv")).unwrap();
    assert!(p.starts_with("index,label,energy,population\n0,0,"));
    let total: f64 = p.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn identical_configs_give_identical_csv_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "em.toml", EMISSION);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = cqed(&["emission", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"], None);
    let ob = cqed(&["emission", "--config", &cfg, "--out", b.to_str().unwrap()], Some("4"));
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    let files: Vec<String> = lines_of(&a).into_iter().filter(|f| f.ends_with(".csv")).collect();
    assert_eq!(files.len(), 7);
    assert_eq!(files, lines_of(&b).into_iter().filter(|f| f.ends_with(".csv")).collect::<Vec<_>>());
    for f in &files {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["threads"], 4);
    let head = fs::read_to_string(a.join("emission_x_c_0001.csv")).unwrap();
    assert!(head.starts_with("omega_over_omega_r,S_raw,S_normalized,log10_S\n"));
}

#[test]
fn max_of_set_normalization_peaks_at_one_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "em.toml", EMISSION);
    let out = dir.path().join("o");
    assert_eq!(cqed(&["emission", "--config", &cfg, "--out", out.to_str().unwrap()], None).status.code(), Some(0));
    let max_of = |f: &str| {
        fs::read_to_string(out.join(f))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap())
            .fold(0.0f64, f64::max)
    };
    let maxima: Vec<f64> = (0..3).map(|k| max_of(&format!("emission_x_m_{k:04}.csv"))).collect();
    assert!(maxima.iter().any(|m| (m - 1.0).abs() < 1e-12));
    assert!(maxima.iter().all(|m| *m <= 1.0 + 1e-12));
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("points0.toml", EMISSION.replace("points = 3", "points = 0")),
        ("reversed.toml", EMISSION.replace("start = 0.2\nstop = 0.6", "start = 0.6\nstop = 0.2")),
        ("typo.toml", EMISSION.replace("n_levels = 8", "n_level = 8")),
        ("probe.toml", EMISSION.replace("[emission]", "[emission]\nprobes = [\"x_d\"]")),
    ];
    for (name, text) in cases {
        let cfg = write_config(dir.path(), name, &text);
        let o = cqed(&["emission", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let e = stderr_json(&o);
        assert_eq!(e["kind"], "config_invalid", "{name}");
        assert_eq!(e["exit_code"], 2);
    }
    // reflectivity without a drive block
    let cfg = write_config(dir.path(), "r.toml", &EMISSION.replace("mode = \"emission\"\n", ""));
    let o = cqed(&["reflectivity", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    // mode mismatch
    let cfg = write_config(dir.path(), "m.toml", EMISSION);
    let o = cqed(&["eigen", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    // bad thread count from the environment
    let o = cqed(&["emission", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()], Some("many"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("CQED_THREADS"));
    // missing file
    let o = cqed(&["emission", "--config", "no/such/file.toml"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3_and_names_the_point() {
    // no dissipation on the qubit and a decoupled resonator: steady state is not unique
    let text = EMISSION
        .replace("gamma = 1e-2\ntemperature = 0.1", "gamma = 0.0\ntemperature = 0.1")
        .replace("start = 0.2\nstop = 0.6\npoints = 3", "start = 0.0\nstop = 0.4\npoints = 3");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "f.toml", &text);
    let out = dir.path().join("out");
    let o = cqed(&["emission", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "solver_failure");
    assert_eq!(e["grid_point"]["eta"], 0.0);
    assert_eq!(e["grid_point"]["probe"], "x_c");
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "solver_failure");
    assert_eq!(m["failures"][0]["eta"], 0.0);
}

#[test]
fn matrix_elements_follow_labels_along_the_sweep() {
    let text = "[system]\ndelta = 1.0\nn_fock = 20\nn_levels = 8\n[sweep]\nparameter = \"eta\"\nstart = 0.0\nstop = 1.0\npoints = 11\n[matrix_elements]\noperators = [\"xdot_m\", \"xdot_c\"]\ntransitions = [[\"1+\", \"0\"]]\n";
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", text);
    let out = dir.path().join("out");
    let o = cqed(&["matelems", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = fs::read_to_string(out.join("matrix_elements.csv")).unwrap();
    let mut lines = t.lines();
    assert_eq!(lines.next(), Some("sweep_value,i_label,j_label,operator,abs_sq"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| r[1] == "1+" && r[2] == "0"));

    let bad = write_config(dir.path(), "b.toml", &text.replace("\"1+\", \"0\"", "\"9x\", \"0\""));
    let o = cqed(&["matelems", "--config", &bad, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reflectivity_map_has_documented_columns() {
    let text = r#"
mode = "reflectivity"
[system]
delta = 0.69
eta = 0.5
n_fock = 10
n_levels = 6
[[baths]]
kind = "resonator"
gamma = 1e-3
temperature = 0.2
[[baths]]
kind = "qubit"
gamma = 5e-3
temperature = 0.2
[drive]
omega_d = { start = 0.5, stop = 1.5, points = 4 }
[sweep]
parameter = "epsilon"
start = 0.0
stop = 0.5
points = 2
[reflectivity]
probes = ["x_m", "a_plus_adag", "x_c"]
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "r.toml", text);
    let out = dir.path().join("out");
    let o = cqed(&["reflectivity", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for p in ["x_m", "a_plus_adag", "x_c"] {
        let t = fs::read_to_string(out.join(format!("reflectivity_{p}.csv"))).unwrap();
        let mut lines = t.lines();
        assert_eq!(lines.next(), Some("omega_d_over_omega_r,epsilon_over_omega_r,S11"));
        let vals: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(vals.len(), 8);
        assert!(vals.iter().all(|v| *v >= 0.0 && *v < 1.05));
    }
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["floquet_order"], 2);
    assert_eq!(m["config"]["drive"]["b_in"], 0.03);
}

#[test]
fn audit_flags_a_truncated_deep_strong_point() {
    let base = "mode = \"eigen\"\n[system]\ndelta = 1.0\nn_fock = 20\nn_levels = 12\n";
    let dir = tempfile::tempdir().unwrap();
    let weak = write_config(dir.path(), "w.toml", &format!("{base}eta = 0.1\n"));
    let strong = write_config(dir.path(), "s.toml", &format!("{base}eta = 2.0\n"));
    let out = dir.path().join("audit");
    let o = cqed(&["audit", "--config", &weak, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("audit: 0 of 1 checks"));
    let o = cqed(&["audit", "--config", &strong, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL energies (n_fock 20 -> 30)"), "{stdout}");
    let a: Value = serde_json::from_str(&fs::read_to_string(out.join("audit.json")).unwrap()).unwrap();
    assert_eq!(a["failed_checks"], 1);
}

#[test]
fn bundled_configs_load() {
    let o = cqed(&["eigen", "--config", "fig6", "--out", "/nonexistent-dir/x"], None);
    // fig6 is a reflectivity config
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("reflectivity"));
}
