//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "system": {"targets": 5, "interferers": 2, "ris_elements": 32},
  "strategies": ["scheme_i", "scheme_ii", "bev_random_phase"],
  "sweep": {"axis": "ris_elements", "values": [16, 64]},
  "gradients": {"dim": 16, "correlation": 0.0},
  "training": {"rounds": 15, "batch_size": 20, "pilot_rounds": 5,
               "dataset": {"kind": "synthetic", "train_per_client": 60, "test_samples": 200}}
}"#;

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn airfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airfl-sim")).args(args).output().unwrap()
}

fn run_in(dir: &Path, config: &str, cmd: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out);
    let mut args = vec![cmd, "--config", config, "--out", out.to_str().unwrap(), "--trials", "2000"];
    args.extend_from_slice(extra);
    airfl(&args)
}

#[test]
fn every_subcommand_succeeds_and_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    for (cmd, files) in [
        ("moments", vec!["moments.csv", "moments.json"]),
        ("mse-sweep", vec!["mse_sweep_ris_elements_seed0.csv", "mse_sweep_ris_elements_seed0.json"]),
        ("train", vec!["trace_ideal_seed0.csv", "trace_scheme_i_seed0.csv", "train_summary.csv", "train.json"]),
        ("bound", vec!["bound.json"]),
    ] {
        let output = run_in(dir.path(), &config, cmd, cmd, &["--check"]);
        assert_eq!(output.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&output.stderr));
        for f in files {
            assert!(dir.path().join(cmd).join(f).is_file(), "{cmd} did not write {f}");
        }
    }
    let header = std::fs::read_to_string(dir.path().join("mse-sweep/mse_sweep_ris_elements_seed0.csv")).unwrap();
    assert!(header.starts_with("axis,scheme,empirical,closed_form,stderr,"));
}

#[test]
fn three_seeds_give_three_traces_per_aggregator() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let output = run_in(dir.path(), &config, "train", "out", &["--seeds", "0,1,2"]);
    assert_eq!(output.status.code(), Some(0));
    for seed in 0..3 {
        for label in ["ideal", "scheme_i", "scheme_ii", "bev_random_phase"] {
            assert!(dir.path().join(format!("out/trace_{label}_seed{seed}.csv")).is_file());
        }
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let one = run_in(dir.path(), &config, "mse-sweep", "one", &["--workers", "1"]);
    let four = run_in(dir.path(), &config, "mse-sweep", "four", &["--workers", "4"]);
    assert!(one.status.success() && four.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("mse_sweep_ris_elements_seed0.csv")).unwrap();
    assert_eq!(read("one"), read("four"));
}

#[test]
fn deliberately_mis_scaled_receiver_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let body = CONFIG.replacen('{', r#"{"lambda_scale": 2.0,"#, 1);
    let config = write_config(dir.path(), &body);
    for cmd in ["moments", "mse-sweep"] {
        let output = run_in(dir.path(), &config, cmd, cmd, &["--check"]);
        assert_eq!(output.status.code(), Some(1), "{cmd}");
    }
}

#[test]
fn bad_inputs_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), r#"{"system": {"ris_elements": 8}, "colour": "blue"}"#);
    assert_eq!(run_in(dir.path(), &unknown, "moments", "a", &[]).status.code(), Some(2));

    let mnist = format!(
        r#"{{"training": {{"dataset": {{"kind": "mnist", "dir": "{}"}}}}}}"#,
        dir.path().join("missing").display()
    );
    let mnist = write_config(dir.path(), &mnist);
    let output = run_in(dir.path(), &mnist, "train", "b", &[]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("train-images-idx3-ubyte"));

    let too_few = write_config(dir.path(), CONFIG);
    let output = airfl(&["moments", "--config", &too_few, "--out", dir.path().join("c").to_str().unwrap(), "--trials", "10"]);
    assert_eq!(output.status.code(), Some(2));

    assert_eq!(airfl(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn bundled_presets_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = airfl_sim::config::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.validate().unwrap();
        count += 1;
    }
    assert!(count >= 4);
}
