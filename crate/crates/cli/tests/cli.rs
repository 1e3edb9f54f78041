//! End-to-end checks of the command-line interface: artifacts, exit codes,
//! schema conformance, and output determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_micropteron"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("micropteron-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dispersion_emits_curves_and_record() {
    let dir = temp_dir("dispersion");
    let status = bin()
        .args(["dispersion", "--c", "1.1", "--mu", "0.005"])
        .arg("--out")
        .arg(dir.join("a"))
        .status()
        .unwrap();
    assert!(status.success());

    let record = read_json(&dir.join("a/dispersion.json"));
    assert_eq!(record["overlay_intersections"], 1);
    assert!(record["critical"]["residual"].as_f64().unwrap() <= 1e-12);
    for file in ["lambda_minus.dat", "lambda_plus.dat", "parabola.dat"] {
        let text = std::fs::read_to_string(dir.join("a").join(file)).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 512);
        assert_eq!(rows[0].split_whitespace().count(), 2);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn identical_configs_give_bit_identical_outputs() {
    let dir = temp_dir("determinism");
    for sub in ["one", "two"] {
        let status = bin()
            .args(["dispersion", "--epsilon", "0.35", "--mu", "0.002"])
            .arg("--out")
            .arg(dir.join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in [
        "dispersion.json",
        "lambda_minus.dat",
        "lambda_plus.dat",
        "parabola.dat",
    ] {
        let a = std::fs::read(dir.join("one").join(file)).unwrap();
        let b = std::fs::read(dir.join("two").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_speed_is_a_config_error() {
    let out = bin()
        .args(["dispersion", "--c", "0.9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(
        message.contains("requires |c| > 1"),
        "stderr was: {message}"
    );

    let out = bin()
        .args(["dispersion", "--c", "1.2", "--epsilon", "0.3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solitary_artifacts_feed_the_simulator() {
    let dir = temp_dir("sol-sim");
    let status = bin()
        .args(["solitary", "--epsilon", "0.4"])
        .arg("--out")
        .arg(dir.join("wave"))
        .status()
        .unwrap();
    assert!(status.success());

    // round-trip the profile through its CSV form
    let profile =
        micropteron_core::spectral::io::read_csv(&dir.join("wave/varsigma.csv")).unwrap();
    assert!(profile.sup_norm() > 0.0);

    let status = bin()
        .args(["simulate", "--t-final", "5", "--dt", "0.02"])
        .arg("--profiles")
        .arg(dir.join("wave"))
        .arg("--out")
        .arg(dir.join("run"))
        .status()
        .unwrap();
    assert!(status.success());

    let record = read_json(&dir.join("run/simulate.json"));
    assert!(record["shift_error"].as_f64().unwrap() <= 1e-3);
    let series = std::fs::read_to_string(dir.join("run/timeseries.csv")).unwrap();
    assert!(series.starts_with("t,shift_error,energy"));
    assert!(series.lines().count() > 10);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn periodic_record_conforms() {
    let dir = temp_dir("periodic");
    let status = bin()
        .args(["periodic", "--c", "1.4142135623730951", "--mu", "0.01", "--a", "0.001"])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let record = read_json(&dir.join("periodic.json"));
    assert!(record["wave"]["residual"].as_f64().unwrap() <= 1e-10);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn env_var_sets_default_output_root() {
    let dir = temp_dir("envroot");
    let status = bin()
        .args(["dispersion", "--c", "1.3"])
        .env("MICROPTERON_OUT", &dir)
        .current_dir(std::env::temp_dir())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("dispersion.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pipeline_with_zero_detuning_reaches_trivial_branch() {
    let dir = temp_dir("pipeline-mu0");
    let out = bin()
        .args([
            "pipeline", "--epsilon", "0.4", "--mu", "0", "--t-final", "5", "--dt", "0.02",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let record = read_json(&dir.join("diagnostics.json"));
    assert_eq!(record["stages"]["micropteron"]["status"], "completed");
    let micro = read_json(&dir.join("micropteron/mu_+0.000000e0/micropteron.json"));
    assert_eq!(micro["a"], 0.0);
    assert_eq!(micro["iterations"], 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pipeline_beyond_acoustic_crossover_fails_with_partial_diagnostics() {
    // at eps = 0.2 the crossover sits at 2(c^2-1)/(2-c^2) ~ 3.34e-3, so
    // mu = 4e-3 must fail the corrector stage with the hypothesis exit code
    // while still writing a diagnostics record with the downstream stage
    // marked skipped
    let dir = temp_dir("pipeline-crossover");
    let out = bin()
        .args([
            "pipeline", "--epsilon", "0.2", "--mu", "0.004", "--t-final", "5", "--dt", "0.02",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(
        message.contains("acoustic crossover"),
        "stderr was: {message}"
    );
    let record = read_json(&dir.join("diagnostics.json"));
    assert_eq!(record["stages"]["micropteron"]["status"], "failed");
    assert_eq!(record["stages"]["simulate"]["status"], "skipped");
    assert_eq!(record["stages"]["jost"]["status"], "completed");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pipeline_produces_conforming_diagnostics() {
    let dir = temp_dir("pipeline");
    let out = bin()
        .args([
            "pipeline",
            "--epsilon",
            "0.4",
            "--mu",
            "0.001",
            "--t-final",
            "5",
            "--dt",
            "0.02",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let record = read_json(&dir.join("diagnostics.json"));
    for stage in ["dispersion", "solitary", "periodic", "jost", "micropteron", "simulate"] {
        assert_eq!(record["stages"][stage]["status"], "completed", "{stage}");
    }
    for check in [
        "h1_solitary_wave",
        "h2_even_channel",
        "h3_one_sided_inversion",
        "h4_resonance_margin",
    ] {
        assert_eq!(record["hypotheses"][check]["passed"], true, "{check}");
    }
    // every stage record validates against its shipped schema
    assert!(dir.join("jost/jost.json").exists());
    assert!(dir.join("micropteron/sweep_amplitude.dat").exists());
    std::fs::remove_dir_all(&dir).ok();
}
