use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgan")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    reader.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHORT_TRAINING: &str = "[training]\nmax_rounds = 6\ninner_steps_d = 2\ninner_steps_g = 2\n";

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(qgan(&["--help"]).status.code(), Some(0));
    assert_eq!(qgan(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(qgan(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(qgan(&["train", "--seed", "minus-one"]).status.code(), Some(1));
}

#[test]
fn invalid_config_exits_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "[train]\nsigma = 0.1\n",
        "[defect_sweep]\nrates = [0.5, 1.2]\n",
        "[noise_sweep]\nrepetitions = 0\n",
        "[training]\nlr_decay = 0.0\n",
        "not toml at all [",
    ];
    for body in cases {
        let cfg = write_config(&dir, body);
        let cmd = if body.contains("defect") {
            "defect-sweep"
        } else if body.contains("noise") {
            "noise-sweep"
        } else {
            "train"
        };
        let out = qgan(&[cmd, "--config", s(&cfg)]);
        assert_eq!(out.status.code(), Some(1), "config {body:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let zero_workers = qgan(&["shot-noise-tvd", "--workers", "0"]);
    assert_eq!(zero_workers.status.code(), Some(1));
}

#[test]
fn io_failures_exit_two() {
    let dir = TempDir::new().unwrap();
    let missing_config = dir.path().join("absent.toml");
    assert_eq!(qgan(&["train", "--config", s(&missing_config)]).status.code(), Some(2));
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let cfg = write_config(&dir, "[decompose_check]\nsamples = 1\n");
    let out = qgan(&["decompose-check", "--config", s(&cfg), "--out", s(&unwritable)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_check_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[decompose_check]\nsamples = 4\ntolerance = 1e-300\n");
    let out_path = dir.path().join("dc.csv");
    let out = qgan(&["decompose-check", "--config", s(&cfg), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(3));
    // The report is still written before the failing exit.
    let rows = read_rows(&out_path);
    assert_eq!(rows.last().unwrap()[5], "0");
}

#[test]
fn decompose_check_identity_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[decompose_check]\nsamples = 1\nidentity = true\n");
    let out_path = dir.path().join("dc.csv");
    let out = qgan(&["decompose-check", "--config", s(&cfg), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let rows = read_rows(&out_path);
    assert_eq!(rows[0], ["kind", "sample", "distance", "max_distance", "tolerance", "pass"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][0], "aggregate");
    assert_eq!(rows[2][5], "1");
}

#[test]
fn decompose_check_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[decompose_check]\nsamples = 50\n");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert!(qgan(&["decompose-check", "--config", s(&cfg), "--seed", "4", "--out", s(p)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn noisy_train_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SHORT_TRAINING}[train]\nsigma_over_pi = 0.02\ntotal_count = 1500\n"));
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert!(qgan(&["train", "--config", s(&cfg), "--seed", "7", "--out", s(p)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rows = read_rows(&a);
    assert_eq!(rows[0], ["round", "phase", "d", "fidelity", "empty_counts", "wall_time"]);
    assert_eq!(rows.len(), 1 + 2 * 6);
    assert_eq!(rows[1][1], "D");
    assert_eq!(rows[2][1], "G");
    assert!(rows[1..].iter().all(|r| r[5].is_empty()));
}

#[test]
fn wall_time_column_is_opt_in() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SHORT_TRAINING}[train]\nwall_time = true\n"));
    let out_path = dir.path().join("t.csv");
    assert!(qgan(&["train", "--config", s(&cfg), "--out", s(&out_path)]).status.success());
    let rows = read_rows(&out_path);
    assert!(rows[1..].iter().all(|r| r[5].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn train_to_stdout_keeps_summary_on_stderr() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, SHORT_TRAINING);
    let out = qgan(&["train", "--config", s(&cfg)]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("round,phase,d,fidelity"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("termination="));
}

#[test]
fn cli_flags_override_config_values() {
    let dir = TempDir::new().unwrap();
    let from_file = dir.path().join("file.csv");
    let from_flag = dir.path().join("flag.csv");
    let cfg = write_config(
        &dir,
        &format!("[shot_noise_tvd]\nseed = 1\ncounts = [200]\nrepetitions = 5\nout = \"{}\"\n", from_file.display()),
    );
    assert!(qgan(&["shot-noise-tvd", "--config", s(&cfg)]).status.success());
    assert!(qgan(&["shot-noise-tvd", "--config", s(&cfg), "--seed", "2", "--out", s(&from_flag)]).status.success());
    assert!(from_file.exists() && from_flag.exists());
    assert_ne!(fs::read(&from_file).unwrap(), fs::read(&from_flag).unwrap());
}

#[test]
fn noise_sweep_rows_are_split_by_kind() {
    let dir = TempDir::new().unwrap();
    let cfg =
        write_config(&dir, &format!("{SHORT_TRAINING}[noise_sweep]\nsigmas_over_pi = [0.0, 0.03]\nrepetitions = 3\n"));
    let out_path = dir.path().join("ns.csv");
    assert!(qgan(&["noise-sweep", "--config", s(&cfg), "--out", s(&out_path)]).status.success());
    let rows = read_rows(&out_path);
    assert_eq!(rows[0][0], "kind");
    assert_eq!(rows[0].len(), 11);
    let runs: Vec<_> = rows[1..].iter().filter(|r| r[0] == "run").collect();
    let aggs: Vec<_> = rows[1..].iter().filter(|r| r[0] == "aggregate").collect();
    assert_eq!(runs.len(), 6);
    assert_eq!(aggs.len(), 2);
    assert!(runs.iter().all(|r| !r[3].is_empty() && r[7].is_empty()));
    assert!(aggs.iter().all(|r| r[3].is_empty() && r[6] == "3"));

    // The aggregate mean is the mean of that point's run rows.
    let zero_runs: Vec<f64> = runs.iter().filter(|r| r[1] == "0").map(|r| r[3].parse().unwrap()).collect();
    let mean: f64 = zero_runs.iter().sum::<f64>() / 3.0;
    let agg_mean: f64 = aggs[0][7].parse().unwrap();
    assert!((mean - agg_mean).abs() < 1e-11);
}

#[test]
fn sweep_output_does_not_depend_on_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SHORT_TRAINING}[defect_sweep]\nrates = [0.0, 0.5]\nrepetitions = 3\n"));
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(qgan(&["defect-sweep", "--config", s(&cfg), "--workers", "1", "--out", s(&a)]).status.success());
    assert!(qgan(&["defect-sweep", "--config", s(&cfg), "--workers", "3", "--out", s(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let rows = read_rows(&a);
    assert_eq!(rows[0].len(), 12);
    let half: Vec<_> = rows.iter().filter(|r| r[0] == "run" && r[1] == "0.5").collect();
    assert!(half.iter().all(|r| r[2] == "16"));
}

#[test]
fn single_defect_grid_via_total_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SHORT_TRAINING}[defect_sweep]\ntotal_defects = [1]\nrepetitions = 2\n"));
    let out_path = dir.path().join("d.csv");
    assert!(qgan(&["defect-sweep", "--config", s(&cfg), "--out", s(&out_path)]).status.success());
    let rows = read_rows(&out_path);
    assert!(rows[1..].iter().all(|r| r[2] == "1"));
}

#[test]
fn full_flag_restores_hundred_repetitions() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[training]\nmax_rounds = 1\ninner_steps_d = 1\ninner_steps_g = 1\n[noise_sweep]\nsigmas_over_pi = [0.0]\ntotal_count = 0\nrepetitions = 2\n",
    );
    let out_path = dir.path().join("full.csv");
    assert!(qgan(&["noise-sweep", "--config", s(&cfg), "--full", "--out", s(&out_path)]).status.success());
    let rows = read_rows(&out_path);
    assert_eq!(rows.iter().filter(|r| r[0] == "run").count(), 100);
}

#[test]
fn exact_train_seed_seven_reaches_target() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("t.csv");
    let out = qgan(&["train", "--seed", "7", "--out", s(&out_path)]);
    assert!(out.status.success());
    let rows = read_rows(&out_path);
    assert!(rows.len() - 1 <= 2 * 300);
    let final_fidelity: f64 = rows.last().unwrap()[3].parse().unwrap();
    assert!(final_fidelity > 0.97, "final fidelity {final_fidelity}");
}

#[test]
fn shot_noise_tvd_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[shot_noise_tvd]\ncounts = [100, 1000, 10000]\nrepetitions = 1000\n");
    let out_path = dir.path().join("tvd.csv");
    assert!(qgan(&["shot-noise-tvd", "--config", s(&cfg), "--out", s(&out_path)]).status.success());
    let rows = read_rows(&out_path);
    let means: Vec<f64> = rows.iter().filter(|r| r[0] == "aggregate").map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(means.len(), 3);
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");

    let single = write_config(&dir, "[shot_noise_tvd]\ncounts = [500]\nrepetitions = 1\n");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert!(qgan(&["shot-noise-tvd", "--config", s(&single), "--seed", "3", "--out", s(p)]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
