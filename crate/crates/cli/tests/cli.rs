use std::path::Path;
use std::process::{Command, Output};

fn dsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsense"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let rows = r.records().map(|x| x.unwrap()).collect();
    (header, rows)
}

#[test]
fn sweep_has_grid_times_trials_times_methods_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dsense(&["sweep", "--p", "4096", "--beta", "0.5", "--snr", "8", "--trials", "5", "--seed", "7", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&out);
    assert_eq!(header.iter().collect::<Vec<_>>(), ["method", "snr", "trial", "threshold", "fdp", "ndp", "detected"]);
    assert_eq!(rows.len(), 5 * 200 * 2);
    assert!(dir.path().join("sweep.csv.meta.toml").exists());
}

#[test]
fn explicit_grid_sets_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dsense(&[
        "sweep", "--p", "1024", "--trials", "3", "--method", "ds", "--threshold-grid", "0.5,1,2", "--out", path_str(&out),
    ]);
    assert!(o.status.success());
    let (_, rows) = records(&out);
    assert_eq!(rows.len(), 3 * 3);
    assert!(rows.iter().all(|r| &r[0] == "ds"));
}

#[test]
fn boundary_contains_zero_at_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.csv");
    assert!(dsense(&["boundary", "--out", path_str(&out)]).status.success());
    let (header, rows) = records(&out);
    assert_eq!(header.iter().collect::<Vec<_>>(), ["beta", "rho"]);
    let half = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 0.5).expect("beta = 0.5 row");
    assert_eq!(half[1].parse::<f64>().unwrap(), 0.0);
    let rhos: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(rhos.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn reruns_are_byte_identical_and_sidecar_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let args = ["simulate", "--p", "2048", "--snr", "6", "--trials", "20", "--seed", "11"];
    let run = |out: &Path, workers: &str| {
        let mut v = args.to_vec();
        v.extend(["--workers", workers, "--out", path_str(out)]);
        assert!(dsense(&v).status.success());
    };
    run(&a, "1");
    run(&b, "4");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let meta = dir.path().join("a.csv.meta.toml");
    let o = dsense(&["simulate", "--config", path_str(&meta), "--out", path_str(&c)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 1024\ntrials = 4\nsnr = 2.0\nmethod = \"ds\"\n").unwrap();
    let out = dir.path().join("sim.csv");
    let o = dsense(&["simulate", "--config", path_str(&cfg), "--trials", "6", "--out", path_str(&out)]);
    assert!(o.status.success());
    let (_, rows) = records(&out);
    assert_eq!(rows.len(), 6);
    let meta = std::fs::read_to_string(dir.path().join("sim.csv.meta.toml")).unwrap();
    assert!(meta.contains("trials = 6"));
    assert!(meta.contains("p = 1024"));
    assert!(meta.contains("subcommand = \"simulate\""));
}

#[test]
fn calibrate_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.csv");
    let o = dsense(&["calibrate", "--p", "2048", "--snr", "8", "--pilot-trials", "50", "--out", path_str(&out)]);
    assert!(o.status.success());
    let (header, rows) = records(&out);
    assert_eq!(header.len(), 7);
    assert_eq!(rows.iter().map(|r| r[0].to_owned()).collect::<Vec<_>>(), ["ds", "nonadaptive"]);
}

#[test]
fn snr_sweep_and_phase_transition_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snr.csv");
    let o = dsense(&[
        "snr-sweep", "--p", "1024", "--trials", "20", "--pilot-trials", "20", "--snr-list", "4,16", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&out);
    assert_eq!(header.iter().collect::<Vec<_>>(), ["method", "p", "snr", "calibrated_tau", "fdr", "ndr"]);
    assert_eq!(rows.len(), 4);

    let out = dir.path().join("phase.csv");
    let o = dsense(&["phase-transition", "--p", "1024", "--trials", "10", "--r-list", "2,0.1", "--out", path_str(&out)]);
    assert!(o.status.success());
    let (_, rows) = records(&out);
    assert_eq!(&rows[0][1], "recoverable");
    assert_eq!(&rows[1][1], "unrecoverable");
    assert_eq!(&rows[1][2], "");
}

#[test]
fn parameter_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = path_str(&out);
    assert_eq!(dsense(&["simulate", "--p", "1", "--out", out]).status.code(), Some(2));
    assert_eq!(dsense(&["simulate", "--decay", "0.4", "--out", out]).status.code(), Some(2));
    assert_eq!(dsense(&["phase-transition", "--r-list", "0.5", "--beta", "0.5", "--out", out]).status.code(), Some(2));
    assert_eq!(dsense(&["simulate", "--workers", "0", "--out", out]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "nonsense = 3\n").unwrap();
    assert_eq!(dsense(&["simulate", "--config", path_str(&bad), "--out", out]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two_with_message() {
    let o = dsense(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = dsense(&["sweep", "--out", "x.csv", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dsense(&["sweep", "--trials", "abc", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("rho.csv");
    assert_eq!(dsense(&["boundary", "--out", path_str(&out)]).status.code(), Some(1));
}

#[test]
fn validate_lemmas_passes_and_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lemmas.csv");
    let o = dsense(&["validate-lemmas", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&out);
    assert_eq!(header.iter().collect::<Vec<_>>(), ["lemma", "params", "bound", "empirical", "pass"]);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| &r[4] == "true"));
}
