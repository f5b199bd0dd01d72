use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cascade-sim"))
}

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(file: &Path, out: &Path) -> Output {
    bin().arg("run").arg(file).arg("--out").arg(out).arg("--jobs").arg("2").output().unwrap()
}

#[test]
fn version_flag() {
    let o = bin().arg("--version").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn validate_reports_parse_errors_with_exit_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let ok = scenario(dir.path(), "ok.scn", "kind = g2\nline_a = L_plus\nline_b = R_plus\ndelta_laser_ueV = 0\n");
    assert_eq!(bin().arg("validate").arg(&ok).status().unwrap().code(), Some(0));
    let empty = scenario(dir.path(), "empty.scn", "");
    let o = bin().arg("validate").arg(&empty).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind"));
    let typo = scenario(dir.path(), "typo.scn", "kind = g2\nline_a = L_plus\nline_b = R_plus\ntau_maxx_ps = 4\n");
    let o = bin().arg("run").arg(&typo).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn missing_file_is_io_error() {
    assert_eq!(bin().arg("run").arg("/nonexistent/x.scn").status().unwrap().code(), Some(1));
}

#[test]
fn dark_line_exit_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let f = scenario(dir.path(), "dark.scn", "kind = g2\nline_a = L_plus\nline_b = R_plus\nhbar_omega_ueV = 0\n");
    let o = run(&f, dir.path());
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("correlate") && err.contains("dark"), "{err}");
}

#[test]
fn numerical_failure_exit_code_3() {
    // A pure-dephasing-free closed system has no unique steady state.
    let dir = tempfile::tempdir().unwrap();
    let f = scenario(dir.path(), "closed.scn", "kind = g2\nline_a = L_plus\nline_b = R_plus\n[system]\ntau_xx_ps = 1e300\ntau_x_ps = 1e300\n");
    let o = run(&f, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().path().extension().is_some_and(|x| x == "csv")));
}

#[test]
fn g2_csv_contract_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let f = scenario(
        dir.path(),
        "g2.scn",
        "kind = g2\noutput = pair\nline_a = R_plus\nline_b = L_zero\n[grid]\ntau_max_ps = 2000\ntau_step_ps = 20\n",
    );
    let o = run(&f, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("pair.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau_ps,g2_raw,g2_convolved"));
    assert_eq!(lines.count(), 201);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pair.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "g2");
    assert_eq!(manifest["outputs"][0], "pair.csv");
    assert!(manifest["numerical_checks"]["states"]["min_eigenvalue"].as_f64().unwrap() >= -1e-9);
    assert!(manifest["notes"][0].as_str().unwrap().contains("reordered"));
}

#[test]
fn sweep_and_dynamics_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("kind = anticrossing\ndetuning_points = 11\n", "detuning_ueV,line,energy_ueV,intensity_per_ps", 66),
        ("kind = spectrum-map\npower_points = 5\n", "hbar_omega_ueV,line,energy_ueV,intensity_per_ps", 30),
        ("kind = dynamics\nt_max_ps = 2000\nt_step_ps = 10\n", "t_ps,I_L,I_R", 201),
        ("kind = g1\nlines = L0\nt_max_ps = 100\nt_step_ps = 1\n", "t_ps,g1_re,g1_im,g1_abs", 101),
    ];
    for (k, (text, header, rows)) in cases.iter().enumerate() {
        let f = scenario(dir.path(), &format!("s{k}.scn"), &format!("output = s{k}\n{text}"));
        let o = run(&f, dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(dir.path().join(format!("s{k}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some(*header));
        assert_eq!(csv.lines().count() - 1, *rows);
    }
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let o = bin().arg("validate").arg(&p).output().unwrap();
        assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert!(n >= 6);
}
