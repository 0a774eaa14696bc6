//! End-to-end tests that drive the compiled `flamma` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE_CONFIG: &str = "algorithm = flamma\n\
    seed = 42\n\
    num_clients = 4\n\
    clients_per_round = 2\n\
    total_rounds = 4\n\
    num_classes = 3\n\
    dim = 3\n\
    per_class = 30\n\
    batch_size = 16\n";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flamma"));
    cmd.env_remove("FLAMMA_SEED");
    cmd
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn run_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_path = dir.path().join("report.csv");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert!(stdout_of(&output).contains("final round 4"));
    let report = std::fs::read_to_string(&out_path).unwrap();
    assert!(report.contains("round,algorithm,gamma"), "{report}");
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let run = |dir: &Path| -> Vec<u8> {
        let config = write_config(dir, BASE_CONFIG);
        let output = bin()
            .current_dir(dir)
            .args(["run", "--config"])
            .arg(&config)
            .args(["--output", "report.csv"])
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr_of(&output));
        std::fs::read(dir.join("report.csv")).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn seed_precedence_is_flag_env_file() {
    let run = |dir: &Path, env: Option<&str>, flag: Option<&str>, body: &str| -> Vec<u8> {
        let config = write_config(dir, body);
        let mut cmd = bin();
        cmd.current_dir(dir)
            .args(["run", "--config"])
            .arg(&config)
            .args(["--output", "report.csv"]);
        if let Some(seed) = env {
            cmd.env("FLAMMA_SEED", seed);
        }
        if let Some(seed) = flag {
            cmd.args(["--seed", seed]);
        }
        let output = cmd.output().unwrap();
        assert!(output.status.success(), "{}", stderr_of(&output));
        std::fs::read(dir.join("report.csv")).unwrap()
    };

    let in_file = tempfile::tempdir().unwrap();
    let reference = run(
        in_file.path(),
        None,
        None,
        &BASE_CONFIG.replace("seed = 42", "seed = 7"),
    );

    let via_env = tempfile::tempdir().unwrap();
    assert_eq!(reference, run(via_env.path(), Some("7"), None, BASE_CONFIG));

    let via_flag = tempfile::tempdir().unwrap();
    assert_eq!(
        reference,
        run(via_flag.path(), Some("9"), Some("7"), BASE_CONFIG)
    );

    let env_changes_run = tempfile::tempdir().unwrap();
    assert_ne!(reference, run(env_changes_run.path(), Some("9"), None, BASE_CONFIG));
}

#[test]
fn config_typo_exits_two_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "algorithm = flamma\nnum_cilents = 4\n");
    let output = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(stderr.contains("num_cilents"), "{stderr}");
}

#[test]
fn missing_config_exits_two() {
    let output = bin()
        .args(["run", "--config", "/no/such/file.conf"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_config_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &BASE_CONFIG.replace("clients_per_round = 2", "clients_per_round = 9"),
    );
    let output = bin().args(["run", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_path = dir.path().join("no-such-dir").join("report.csv");
    let output = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn garbage_env_seed_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let output = bin()
        .env("FLAMMA_SEED", "not-a-seed")
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("FLAMMA_SEED"));
}

#[test]
fn compare_prints_a_table_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_path = dir.path().join("cmp.csv");
    let output = bin()
        .args(["compare", "--config"])
        .arg(&config)
        .args(["--algorithms", "flamma,fedavg,fedprox"])
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    for name in ["flamma", "fedavg", "fedprox"] {
        assert!(stdout.contains(name), "{stdout}");
    }
    let report = std::fs::read_to_string(&out_path).unwrap();
    assert!(report.contains("# algorithm = flamma,fedavg,fedprox"), "{report}");
}

#[test]
fn compare_rejects_a_single_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let output = bin()
        .args(["compare", "--config"])
        .arg(&config)
        .args(["--algorithms", "flamma"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn compare_rejects_unknown_algorithm_names() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let output = bin()
        .args(["compare", "--config"])
        .arg(&config)
        .args(["--algorithms", "flamma,fedsgd"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("fedsgd"));
}

#[test]
fn check_bound_passes_on_the_toy_problem() {
    let output = bin()
        .args([
            "check-bound",
            "--clients",
            "4",
            "--k",
            "2",
            "--rounds",
            "10",
            "--seeds",
            "2",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("empirical gap"), "{stdout}");
    assert!(stdout.trim_end().ends_with("PASS"), "{stdout}");
}

#[test]
fn check_bound_rejects_zero_seeds() {
    let output = bin()
        .args(["check-bound", "--seeds", "0"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_two() {
    let output = bin().arg("train").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
