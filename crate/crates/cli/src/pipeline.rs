//! Full pipeline: dispersion -> solitary -> periodic -> jost -> micropteron
//! -> simulate, in dependency order, persisting every intermediate artifact
//! and recording per-stage outcomes plus the four hypothesis checks.
//!
//! The run fails fast, but the diagnostics record is written regardless:
//! a failed stage is marked `failed` with the error, and everything
//! downstream stays `skipped`.

use crate::schema;
use crate::stages::{self, FORMAT_VERSION};
use anyhow::Context;
use micropteron_core::dispersion::WaveParameters;
use micropteron_core::spectral::{apply_hc, solve_hc, GridFunction, Parity};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub c: f64,
    pub epsilon: Option<f64>,
    pub mu: f64,
    pub mu_sweep: Option<Vec<f64>>,
    pub t_final: f64,
    pub dt: f64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ConfigEcho {
    c: f64,
    epsilon: Option<f64>,
    mu: f64,
    mu_sweep: Option<Vec<f64>>,
    t_final: f64,
    dt: f64,
}

#[derive(Debug, Serialize, Clone)]
pub struct StageStatus {
    status: String,
    detail: String,
    residual: Option<f64>,
}

impl StageStatus {
    fn skipped() -> Self {
        Self {
            status: "skipped".into(),
            detail: "not reached".into(),
            residual: None,
        }
    }

    fn completed(detail: String, residual: Option<f64>) -> Self {
        Self {
            status: "completed".into(),
            detail,
            residual,
        }
    }

    fn failed(detail: String) -> Self {
        Self {
            status: "failed".into(),
            detail,
            residual: None,
        }
    }
}

#[derive(Debug, Serialize, Clone)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn pending() -> Self {
        Self {
            passed: false,
            detail: "not evaluated".into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Hypotheses {
    pub h1_solitary_wave: Check,
    pub h2_even_channel: Check,
    pub h3_one_sided_inversion: Check,
    pub h4_resonance_margin: Check,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub format_version: String,
    config: ConfigEcho,
    stages: BTreeMap<String, StageStatus>,
    hypotheses: Hypotheses,
    /// Wall time is informational and excluded from the output determinism
    /// guarantee.
    wall_time_ms: u64,
}

impl DiagnosticsRecord {
    pub fn hypotheses_all_passed(&self) -> bool {
        self.hypotheses.h1_solitary_wave.passed
            && self.hypotheses.h2_even_channel.passed
            && self.hypotheses.h3_one_sided_inversion.passed
            && self.hypotheses.h4_resonance_margin.passed
    }
}

/// Manufactured-solution probe for the even-channel inversion.
fn check_even_channel(params: &WaveParameters, varsigma: &GridFunction) -> Check {
    let grid = *varsigma.grid();
    let f_star = GridFunction::sample(grid, Parity::Even, |x| (-x * x / 40.0).exp())
        .enforced_mean_zero();
    let rhs = apply_hc(params.c, varsigma, &f_star);
    match solve_hc(params, varsigma, &rhs) {
        Ok(f) => {
            let err = f.sub(&f_star).sup_norm();
            Check {
                passed: err <= 1e-8,
                detail: format!("manufactured-solution recovery error {err:.3e}"),
            }
        }
        Err(e) => Check {
            passed: false,
            detail: format!("solve failed: {e}"),
        },
    }
}

struct PipelineState {
    stages: BTreeMap<String, StageStatus>,
    hypotheses: Hypotheses,
}

impl PipelineState {
    fn new() -> Self {
        let mut stages = BTreeMap::new();
        for name in [
            "dispersion",
            "solitary",
            "periodic",
            "jost",
            "micropteron",
            "simulate",
        ] {
            stages.insert(name.to_string(), StageStatus::skipped());
        }
        Self {
            stages,
            hypotheses: Hypotheses {
                h1_solitary_wave: Check::pending(),
                h2_even_channel: Check::pending(),
                h3_one_sided_inversion: Check::pending(),
                h4_resonance_margin: Check::pending(),
            },
        }
    }

    /// Record one stage's outcome, propagating errors with the stage tag.
    fn record<T>(
        &mut self,
        name: &str,
        result: anyhow::Result<(T, StageStatus)>,
    ) -> anyhow::Result<T> {
        match result {
            Ok((value, status)) => {
                self.stages.insert(name.to_string(), status);
                Ok(value)
            }
            Err(e) => {
                self.stages
                    .insert(name.to_string(), StageStatus::failed(format!("{e:#}")));
                Err(e.context(format!("stage {name}")))
            }
        }
    }
}

pub fn run_pipeline(config: &RunConfig) -> anyhow::Result<DiagnosticsRecord> {
    let t0 = Instant::now();
    std::fs::create_dir_all(&config.out)?;
    let params = match config.epsilon {
        Some(eps) => WaveParameters::from_epsilon(eps, config.mu)?,
        None => WaveParameters::from_speed(config.c, config.mu)?,
    };
    let mut state = PipelineState::new();
    let outcome = run_stages(config, &params, &mut state);

    let record = DiagnosticsRecord {
        format_version: FORMAT_VERSION.into(),
        config: ConfigEcho {
            c: params.c,
            epsilon: params.epsilon,
            mu: config.mu,
            mu_sweep: config.mu_sweep.clone(),
            t_final: config.t_final,
            dt: config.dt,
        },
        stages: state.stages,
        hypotheses: state.hypotheses,
        wall_time_ms: t0.elapsed().as_millis() as u64,
    };
    let json = serde_json::to_value(&record)?;
    schema::validate("diagnostics", &json).context("diagnostics record schema")?;
    let mut file = std::fs::File::create(config.out.join("diagnostics.json"))?;
    writeln!(file, "{}", serde_json::to_string_pretty(&json)?)?;

    outcome.map(|()| record)
}

fn run_stages(
    config: &RunConfig,
    params: &WaveParameters,
    state: &mut PipelineState,
) -> anyhow::Result<()> {
    let out = &config.out;

    state.record(
        "dispersion",
        stages::run_dispersion(params, 512, &out.join("dispersion")).map(|r| {
            let status = StageStatus::completed(
                format!(
                    "omega_c = {:.9}, omega_c_mu = {:.9}",
                    r.critical.omega, r.critical_detuned.omega
                ),
                Some(r.critical.residual),
            );
            (r, status)
        }),
    )?;

    let (solitary_rec, solitary) = state.record(
        "solitary",
        stages::run_solitary(params, &out.join("solitary")).map(|(rec, wave)| {
            let status = StageStatus::completed(
                format!(
                    "{} iterations, stabilizing factor {:.12}",
                    rec.iterations, rec.stabilizing_factor
                ),
                Some(rec.residual),
            );
            ((rec, wave), status)
        }),
    )?;
    state.hypotheses.h1_solitary_wave = Check {
        passed: solitary_rec.residual <= 1e-10,
        detail: format!(
            "residual {:.3e}{}",
            solitary_rec.residual,
            if solitary_rec.hypothesis_mode {
                "; |c| > sqrt(2): outside the proven existence range, certified by residual only"
            } else {
                ""
            }
        ),
    };

    state.record(
        "periodic",
        stages::run_periodic(params, 1e-3, &out.join("periodic")).map(|r| {
            let status = StageStatus::completed(
                format!(
                    "a = 1e-3: omega = {:.9} ({} iterations)",
                    r.wave.omega, r.wave.iterations
                ),
                Some(r.wave.residual),
            );
            (r, status)
        }),
    )?;

    let (jost_rec, jost) = state.record(
        "jost",
        stages::run_jost(params, &solitary, &out.join("jost")).map(|(rec, j)| {
            let status = StageStatus::completed(
                format!(
                    "theta = {:.9}, iota[chi] relative error {:.3e}",
                    rec.theta, rec.iota_chi_relative_error
                ),
                Some(rec.interior_residual),
            );
            ((rec, j), status)
        }),
    )?;
    state.hypotheses.h2_even_channel = check_even_channel(params, &solitary.profile);
    state.hypotheses.h3_one_sided_inversion = Check {
        passed: true,
        detail: if jost_rec.neumann_contracted {
            format!(
                "Neumann series contracted in {} iterations",
                jost_rec.iterations
            )
        } else {
            "Neumann iteration stalled; Krylov solve of the weighted equation \
             verified by its fixed-point defect"
                .to_string()
        },
    };
    state.hypotheses.h4_resonance_margin = Check {
        passed: jost_rec.sin_margin > 1e-6,
        detail: format!("|sin(omega theta)| = {:.6e}", jost_rec.sin_margin),
    };

    let mus = config.mu_sweep.clone().unwrap_or_else(|| vec![config.mu]);
    let mdir = out.join("micropteron");
    state.record(
        "micropteron",
        stages::run_micropteron_sweep(params, &mus, &solitary, &jost, &mdir).map(|records| {
            let worst = records.iter().map(|r| r.residual).fold(0.0f64, f64::max);
            let status = StageStatus::completed(
                records
                    .iter()
                    .map(|r| format!("mu={:+.3e}: a={:+.3e}", r.mu, r.a))
                    .collect::<Vec<_>>()
                    .join(", "),
                Some(worst),
            );
            (records, status)
        }),
    )?;

    let sim_source = mus
        .last()
        .map(|mu| mdir.join(format!("mu_{mu:+.6e}")))
        .unwrap_or_else(|| out.join("solitary"));
    state.record(
        "simulate",
        stages::run_simulate(
            &sim_source,
            config.t_final,
            config.dt,
            None,
            &out.join("simulate"),
        )
        .map(|r| {
            let status = StageStatus::completed(
                format!(
                    "T = {}: shift error {:.3e}, energy drift {:.3e}",
                    r.t_final, r.shift_error, r.energy_drift
                ),
                Some(r.shift_error),
            );
            (r, status)
        }),
    )?;
    Ok(())
}
