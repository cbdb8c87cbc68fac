//! End-to-end checks of the `rakeness` binary: exit codes, artifact layout,
//! and byte-level determinism of every generated file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_rakeness");

/// Micro heartbeat config: small corpus, single measurement count, one
/// shaped budget. Fast enough to run several times per test binary.
const MICRO_ECG: &str = "\
experiment = ecg
n_train = 12
n_test = 3
n_trials = 2
m_list = 24
r_list = 0.1
design_n_half = 64
";

fn work_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn rakeness(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    let mut text = String::from_utf8_lossy(&out.stdout).into_owned();
    text.push_str(&String::from_utf8_lossy(&out.stderr));
    (out.status.code().unwrap_or(-1), text)
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = work_dir("cli_bad_key");
    let cfg = write_cfg(&dir, "experiment = ecg\nbogus_key = 1\n");
    let (code, text) = rakeness(&["design", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 2, "unexpected exit: {text}");
    assert!(text.contains("bogus_key"), "message should name the key: {text}");
}

#[test]
fn duplicate_config_key_exits_2() {
    let dir = work_dir("cli_dup_key");
    let cfg = write_cfg(&dir, "experiment = ecg\nn_trials = 2\nn_trials = 3\n");
    let (code, _) = rakeness(&["design", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 2);
}

#[test]
fn zero_workers_exits_2() {
    let dir = work_dir("cli_zero_workers");
    let cfg = write_cfg(&dir, MICRO_ECG);
    let (code, _) = rakeness(&[
        "run",
        "--config",
        &path_str(&cfg),
        "--out",
        &path_str(&dir),
        "--workers",
        "0",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn missing_config_file_exits_2() {
    let dir = work_dir("cli_missing_cfg");
    let cfg = dir.join("never_written.cfg");
    let (code, _) = rakeness(&["design", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 2);
}

#[test]
fn run_without_design_exits_3() {
    let dir = work_dir("cli_run_no_design");
    let cfg = write_cfg(&dir, MICRO_ECG);
    let (code, text) = rakeness(&["run", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 3, "unexpected exit: {text}");
    assert!(text.contains("design"), "message should point at the design step: {text}");
}

#[test]
fn summarize_without_results_exits_3() {
    let dir = work_dir("cli_sum_no_results");
    let (code, text) = rakeness(&["summarize", "--out", &path_str(&dir)]);
    assert_eq!(code, 3, "unexpected exit: {text}");
}

#[test]
fn infeasible_budget_handling() {
    // 0.001 is below the feasibility floor for a half-band design; alone it
    // must fail the whole design step, next to a feasible budget it must be
    // recorded and skipped.
    let dir = work_dir("cli_infeasible");
    let cfg = write_cfg(&dir, "experiment = ecg\nn_train = 12\nr_list = 0.001\ndesign_n_half = 64\n");
    let (code, _) = rakeness(&["design", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 3);

    let dir = work_dir("cli_infeasible_mixed");
    let cfg = write_cfg(
        &dir,
        "experiment = ecg\nn_train = 12\nr_list = 0.001, 0.1\ndesign_n_half = 64\n",
    );
    let (code, text) = rakeness(&["design", "--config", &path_str(&cfg), "--out", &path_str(&dir)]);
    assert_eq!(code, 0, "mixed feasibility should continue: {text}");
    assert!(dir.join("design/ecg/r_0.001/infeasible.txt").is_file());
    assert!(dir.join("design/ecg/r_0.1/spectrum.csv").is_file());
}

#[test]
fn gen_ecg_is_deterministic_and_kind_checked() {
    let dir_a = work_dir("cli_gen_ecg_a");
    let dir_b = work_dir("cli_gen_ecg_b");
    let cfg_a = write_cfg(&dir_a, MICRO_ECG);
    let (code, _) = rakeness(&["gen-ecg", "--config", &path_str(&cfg_a), "--out", &path_str(&dir_a)]);
    assert_eq!(code, 0);
    let cfg_b = write_cfg(&dir_b, MICRO_ECG);
    let (code, _) = rakeness(&["gen-ecg", "--config", &path_str(&cfg_b), "--out", &path_str(&dir_b)]);
    assert_eq!(code, 0);

    for name in ["corpus/ecg/train.csv", "corpus/ecg/test.csv"] {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical invocations");
    }
    let train = fs::read_to_string(dir_a.join("corpus/ecg/train.csv")).unwrap();
    assert_eq!(train.lines().count(), 12);
    assert!(train.ends_with('\n'));
    assert!(!train.contains('\r'));

    // image generator refuses a heartbeat config
    let (code, _) = rakeness(&["gen-images", "--config", &path_str(&cfg_a), "--out", &path_str(&dir_a)]);
    assert_eq!(code, 2);
}

#[test]
fn pipeline_is_deterministic_across_workers_and_reruns() {
    let dir = work_dir("cli_determinism");
    let cfg = write_cfg(&dir, MICRO_ECG);
    let cfg_s = path_str(&cfg);
    let out_s = path_str(&dir);

    let (code, text) = rakeness(&["design", "--config", &cfg_s, "--out", &out_s]);
    assert_eq!(code, 0, "design failed: {text}");
    let (code, text) = rakeness(&["run", "--config", &cfg_s, "--out", &out_s, "--workers", "1"]);
    assert_eq!(code, 0, "run failed: {text}");
    let first = fs::read(dir.join("results.csv")).unwrap();

    let (code, _) = rakeness(&["run", "--config", &cfg_s, "--out", &out_s, "--workers", "4"]);
    assert_eq!(code, 0);
    let second = fs::read(dir.join("results.csv")).unwrap();
    assert_eq!(first, second, "results.csv depends on worker count");

    // row count: |m_list| * n_trials * (iid + |r_list|) data rows + header
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 1 * 2 * (1 + 1));
    assert_eq!(text.lines().next().unwrap(), "experiment,method,r,M,trial,rsnr_db,seed");

    // a different master seed must change the results
    let (code, _) = rakeness(&["run", "--config", &cfg_s, "--out", &out_s, "--seed", "77"]);
    assert_eq!(code, 0);
    let reseeded = fs::read(dir.join("results.csv")).unwrap();
    assert_ne!(text.as_bytes(), &reseeded[..], "master seed has no effect");
}

#[test]
fn summarize_aggregates_and_plots() {
    let dir = work_dir("cli_summarize");
    let cfg = write_cfg(&dir, MICRO_ECG);
    let cfg_s = path_str(&cfg);
    let out_s = path_str(&dir);
    assert_eq!(rakeness(&["design", "--config", &cfg_s, "--out", &out_s]).0, 0);
    assert_eq!(rakeness(&["run", "--config", &cfg_s, "--out", &out_s]).0, 0);
    let (code, text) = rakeness(&["summarize", "--out", &out_s]);
    assert_eq!(code, 0, "summarize failed: {text}");

    let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), "method,r,M,n,arsnr_db,std_db,n_capped");
    // one iid group and one shaped group at the single measurement count
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(1).unwrap().starts_with("iid,"));

    let svg = fs::read_to_string(dir.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.ends_with("</svg>\n"));
    assert_eq!(svg.matches("<polyline").count(), 2, "one line per method");
}

#[test]
fn sweep_designs_missing_budgets_and_flags_best() {
    let dir = work_dir("cli_sweep");
    let cfg = write_cfg(
        &dir,
        "experiment = ecg\nn_train = 12\nn_test = 3\nsweep_trials = 2\nm_list = 24\nr_list = 0.2, 0.05\ndesign_n_half = 64\n",
    );
    let (code, text) = rakeness(&[
        "sweep-r",
        "--config",
        &path_str(&cfg),
        "--out",
        &path_str(&dir),
    ]);
    assert_eq!(code, 0, "sweep failed: {text}");
    // budgets were designed on the fly
    assert!(dir.join("design/ecg/r_0.05/spectrum.csv").is_file());
    assert!(dir.join("design/ecg/r_0.2/spectrum.csv").is_file());

    let sweep = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows[0], "r,n,arsnr_db,std_db,best");
    assert_eq!(rows.len(), 3);
    // sorted ascending in r, exactly one row flagged best
    assert!(rows[1].starts_with("0.05,"));
    assert!(rows[2].starts_with("0.2,"));
    let best: Vec<bool> = rows[1..].iter().map(|r| r.ends_with(",1")).collect();
    assert_eq!(best.iter().filter(|&&b| b).count(), 1);
    assert!(text.contains("best"), "stdout should report the winner: {text}");
}

#[test]
fn selftest_passes() {
    let (code, text) = rakeness(&["selftest"]);
    assert_eq!(code, 0, "selftest failed: {text}");
    assert!(text.contains("selftest: ok"), "unexpected output: {text}");
}
