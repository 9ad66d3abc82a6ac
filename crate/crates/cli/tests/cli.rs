//! End-to-end tests of the `fplab` binary: artifact layout, exit codes,
//! audit behavior, and byte-identical replays.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fplab");

const SHIPPED_PRESETS: &[&str] = &[
    "classical-fp-mp",
    "strong-fp-mp",
    "strong-fp-mp-rho-half",
    "gwfp-mp",
    "strong-gwfp-mp",
    "ecfp-consensus-3p",
    "strong-ecfp-consensus-3p",
    "ecfp-mce-3p",
    "miscoordination-probe",
];

fn fplab(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("FPLAB_OUT_DIR")
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("process should exit, not signal")
}

#[test]
fn list_names_presets_algorithms_and_games() {
    let out = fplab(&["list"]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    for section in ["experiment presets:", "algorithm presets:", "built-in games:"] {
        assert!(text.contains(section), "missing section {section:?}:\n{text}");
    }
    for name in SHIPPED_PRESETS {
        assert!(text.contains(name), "missing preset {name}:\n{text}");
    }
    for game in ["matching-pennies", "coordination", "crossed-coordination", "coordination-three"] {
        assert!(text.contains(game), "missing game {game}:\n{text}");
    }
}

#[test]
fn every_shipped_preset_validates() {
    for name in SHIPPED_PRESETS {
        let out = fplab(&["validate", "--preset", name]);
        assert_eq!(
            code_of(&out),
            0,
            "preset {name} failed to validate: {}",
            stderr_of(&out)
        );
        let text = stdout_of(&out);
        assert!(
            text.starts_with("ok: "),
            "unexpected validate output for {name}: {text}"
        );
    }
}

#[test]
fn validate_show_defaults_prints_the_resolved_config() {
    let out = fplab(&["validate", "--preset", "classical-fp-mp", "--show-defaults"]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("horizon = 100000"), "missing horizon:\n{text}");
    assert!(text.contains("[algorithm]"), "missing algorithm table:\n{text}");
    assert!(text.contains("seeds = [0]"), "missing pinned seeds:\n{text}");
}

#[test]
fn run_writes_artifacts_and_passes_the_strict_audit() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out_dir = dir.path().to_str().unwrap();
    let out = fplab(&[
        "run",
        "--preset",
        "strong-fp-mp",
        "--horizon",
        "4000",
        "--seeds",
        "2",
        "--out-dir",
        out_dir,
        "--strict",
    ]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("artifacts written to"), "stdout:\n{text}");
    assert!(text.contains("audit pass"), "stdout:\n{text}");
    for file in ["config.toml", "summary.toml", "trace_seed0.csv", "trace_seed1.csv"] {
        assert!(
            dir.path().join(file).is_file(),
            "missing artifact {file}; stdout:\n{text}"
        );
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    assert!(summary.contains("final_g_metric"), "summary:\n{summary}");
    assert!(summary.contains("counting_ratios"), "summary:\n{summary}");
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run"];
    args.extend_from_slice(extra);
    args.push("--out-dir");
    args.push(dir.to_str().unwrap());
    fplab(&args)
}

#[test]
fn reruns_are_byte_identical_through_the_binary() {
    let args = &[
        "--preset",
        "strong-gwfp-mp",
        "--horizon",
        "1500",
        "--seeds",
        "1",
        "--tie-break",
        "random",
    ];
    let first = tempfile::tempdir().expect("tempdir");
    let second = tempfile::tempdir().expect("tempdir");
    for dir in [first.path(), second.path()] {
        let out = run_into(dir, args);
        assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    }
    for file in ["trace_seed0.csv", "summary.toml"] {
        let a = std::fs::read(first.path().join(file)).unwrap();
        let b = std::fs::read(second.path().join(file)).unwrap();
        assert!(!a.is_empty(), "{file} is empty");
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn the_config_echo_reruns_identically() {
    let first = tempfile::tempdir().expect("tempdir");
    let out = run_into(
        first.path(),
        &["--preset", "strong-fp-mp", "--horizon", "1200", "--seeds", "1"],
    );
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));

    let echo = first.path().join("config.toml");
    let second = tempfile::tempdir().expect("tempdir");
    let out = run_into(second.path(), &["--config", echo.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));

    let a = std::fs::read(first.path().join("trace_seed0.csv")).unwrap();
    let b = std::fs::read(second.path().join("trace_seed0.csv")).unwrap();
    assert_eq!(a, b, "rerun from the echoed config produced a different trace");
}

#[test]
fn the_env_var_selects_the_output_directory() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = Command::new(BIN)
        .args(["run", "--preset", "classical-fp-mp", "--horizon", "500"])
        .env("FPLAB_OUT_DIR", dir.path())
        .output()
        .expect("binary should spawn");
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(
        dir.path().join("trace_seed0.csv").is_file(),
        "trace not written under FPLAB_OUT_DIR; stdout:\n{}",
        stdout_of(&out)
    );
}

#[test]
fn audit_recheck_passes_on_a_stored_run_and_catches_tampering() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run_into(
        dir.path(),
        &["--preset", "strong-fp-mp", "--horizon", "4000", "--seeds", "1"],
    );
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));

    let out = fplab(&["audit", dir.path().to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("audit pass"), "stdout:\n{}", stdout_of(&out));

    // Teleport one empirical state (keeping it on the simplex): the jump
    // exceeds any admissible step, so the audit must flag it.
    let trace_path = dir.path().join("trace_seed0.csv");
    let text = std::fs::read_to_string(&trace_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut fields: Vec<String> = lines[101].split(',').map(str::to_owned).collect();
    fields[9] = "0.99".into();
    fields[10] = "0.01".into();
    lines[101] = fields.join(",");
    std::fs::write(&trace_path, lines.join("\n") + "\n").unwrap();

    let out = fplab(&["audit", dir.path().to_str().unwrap()]);
    assert_eq!(code_of(&out), 3, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("audit FAIL"), "stdout:\n{text}");
    assert!(text.contains("step-bound"), "stdout:\n{text}");
    assert!(
        stderr_of(&out).contains("failed the assumption audit"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn audit_without_a_stored_config_is_a_config_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = fplab(&["audit", dir.path().to_str().unwrap()]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
}

#[test]
fn a_divergent_activation_rate_is_rejected() {
    let out = fplab(&[
        "validate",
        "--preset",
        "classical-fp-mp",
        "--rho-exponent",
        "1.5",
    ]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
    let err = stderr_of(&out);
    assert!(
        err.contains("diverg"),
        "expected a rate-divergence explanation, got: {err}"
    );
}

#[test]
fn strict_mode_requires_retained_traces() {
    let out = fplab(&[
        "run",
        "--preset",
        "classical-fp-mp",
        "--horizon",
        "500",
        "--strict",
    ]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
    assert!(
        stderr_of(&out).contains("--strict"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn an_unknown_preset_is_rejected_with_the_available_names() {
    let out = fplab(&["run", "--preset", "nonesuch"]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
    let err = stderr_of(&out);
    assert!(err.contains("unknown preset"), "stderr: {err}");
    assert!(err.contains("classical-fp-mp"), "stderr: {err}");
}

#[test]
fn a_missing_source_is_a_config_error() {
    let out = fplab(&["run"]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
    assert!(
        stderr_of(&out).contains("--preset"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn an_unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "horizon = 100\nbogus = 1\n\n[algorithm]\npreset = \"classical-fp\"\n",
    )
    .unwrap();
    let out = fplab(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 2, "stdout: {}", stdout_of(&out));
    assert!(
        stderr_of(&out).contains("bogus"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn a_skipped_metric_run_still_summarizes() {
    // No trace retention at all: summary to stdout only, audit skipped.
    let out = fplab(&["run", "--preset", "miscoordination-probe"]);
    assert_eq!(code_of(&out), 0, "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("assumption audit skipped"), "stdout:\n{text}");
    assert!(text.contains("windowed utility"), "stdout:\n{text}");
}
