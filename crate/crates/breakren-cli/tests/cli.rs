use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_breakren");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).env("BREAKREN_OUT", out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn tune_reports_a_certified_beta() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["tune", "--preset", "moebius:c=2", "--n-max", "8"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let s = stdout(&o);
    assert!(s.contains("certificate=pass"));
    let preset = s.lines().find_map(|l| l.strip_prefix("preset=")).unwrap();
    assert!(preset.starts_with("moebius:c=2,beta="));
}

#[test]
fn partition_table_has_one_row_per_interval() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["partition", "--preset", "smooth:c=2,eps=0.1", "--n", "6"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("partition_n6.csv"));
    assert_eq!(header, ["j", "xi_j", "interval_family", "interval_index", "length"]);
    // q_6 + q_5 for the golden mean
    assert_eq!(rows.len(), 13 + 8);
    assert_eq!(rows.iter().filter(|r| r[2] == "I^n").count(), 8);
    let total: f64 = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn renorm_table_is_deterministic_and_complete() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["renorm-table", "--preset", "zygmund:c=2,gamma=0.75,eps=0.05,xstar=0.5", "--n-max", "6", "--set", "grid=33", "--set", "grid_max=33"];
    assert_eq!(code(&run(&args, a.path())), 0);
    assert_eq!(code(&run(&args, b.path())), 0);
    let ta = std::fs::read(a.path().join("renorm_table.csv")).unwrap();
    let tb = std::fs::read(b.path().join("renorm_table.csv")).unwrap();
    assert_eq!(ta, tb);
    let (header, rows) = read_csv(&a.path().join("renorm_table.csv"));
    assert_eq!(header.len(), 17);
    assert_eq!(header[11], "C2_f");
    assert_eq!(rows.len(), 6);
    // no f'' for gamma <= 1
    assert!(rows.iter().all(|r| r[11].is_empty() && r[14].is_empty() && !r[10].is_empty()));
    let plot: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("renorm_table.vl.json")).unwrap()).unwrap();
    assert_eq!(plot["data"]["url"], "renorm_table.csv");
    assert_eq!(plot["encoding"]["y"]["scale"]["type"], "log");
}

#[test]
fn moebius_table_sits_at_rounding_level() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["renorm-table", "--n-max", "8", "--set", "grid=33", "--set", "grid_max=33"], dir.path());
    assert_eq!(code(&o), 0);
    let (_, rows) = read_csv(&dir.path().join("renorm_table.csv"));
    for r in &rows {
        let c1: f64 = r[10].parse().unwrap();
        assert!(c1 < 1e-30, "n={} C1_f={c1}", r[0]);
    }
}

#[test]
fn env_var_beats_the_out_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = run(&["partition", "--n", "3", "--out", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert_eq!(code(&o), 0);
    assert!(env_dir.path().join("partition_n3.csv").exists());
    assert!(!flag_dir.path().join("partition_n3.csv").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# experiment\npreset = smooth:c=2,eps=0.1\nn = 4\nquotients = silver\n").unwrap();
    let o = run(&["partition", "--config", cfg.to_str().unwrap(), "--n", "3"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let (_, rows) = read_csv(&dir.path().join("partition_n3.csv"));
    // silver mean: q_3 = 12, q_2 = 5
    assert_eq!(rows.len(), 17);
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&run(&["tune", "--config", cfg.to_str().unwrap()], dir.path())), 1);
}

#[test]
fn rate_fit_on_a_geometric_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut text = String::from("n,C1_f\n");
    for n in 1..=10 {
        text += &format!("{n},{}\n", 0.5f64.powi(n));
    }
    std::fs::write(&path, text).unwrap();
    let o = run(&["rate-fit", "--input", path.to_str().unwrap(), "--window", "4..10"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let s = stdout(&o);
    assert!(s.contains("lambda=0.500000") && s.contains("r2=1.000000"), "{s}");
    let o = run(&["rate-fit", "--input", path.to_str().unwrap(), "--window", "4..6"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn oracle_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["oracle", "--n-max", "10", "--set", "grid=33", "--set", "grid_max=33"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("oracle: pass"));
    assert_eq!(code(&run(&["oracle", "--n-max", "1"], dir.path())), 0);
    let o = run(&["oracle", "--base-bits", "53", "--n-max", "14"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("precision"));
    assert_eq!(code(&run(&["oracle", "--preset", "smooth:c=2"], dir.path())), 1);
}

#[test]
fn lemma_suite_caps_and_fault_injection() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["lemma-suite", "--preset", "smooth:c=2,eps=0.1", "--n-max", "8"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let (header, rows) = read_csv(&dir.path().join("lemma_sweep.csv"));
    assert_eq!(header, ["lemma_id", "interval_length", "probe_t", "quantity", "bound", "ratio"]);
    assert!(rows.iter().any(|r| r[0] == "derivative-gap"));
    let o = run(&["lemma-suite", "--preset", "smooth:c=2,eps=0.1", "--n-max", "8", "--set", "fault_mtilde=1.1"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("upsilon-tilde ratio"));
}

#[test]
fn rotation_lemma_quantities_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["lemma-suite", "--preset", "rotation", "--n-max", "8"], dir.path());
    assert_eq!(code(&o), 0, "{o:?}");
    let (_, rows) = read_csv(&dir.path().join("lemma_sweep.csv"));
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn zygmund_check_writes_per_tau_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["zygmund-check", "--preset", "zygmund:c=2,gamma=0.75,eps=0.05,xstar=0.5", "--set", "tau_min=6", "--set", "tau_max=12"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{o:?}");
    let (_, rows) = read_csv(&dir.path().join("zygmund_check.csv"));
    assert_eq!(rows.len(), 7);
    assert!(stdout(&o).contains("sup_ratio="));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["bogus"], dir.path())), 1);
    assert_eq!(code(&run(&["tune", "--preset", "spline:c=2"], dir.path())), 1);
    assert_eq!(code(&run(&["tune", "--n-max", "21"], dir.path())), 1);
    assert_eq!(code(&run(&["--help"], dir.path())), 0);
}
