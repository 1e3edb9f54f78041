//! Per-stage runners: execute one solver stage, persist its artifacts, and
//! return a serializable record.
//!
//! Field data goes to CSV (grid functions carry their JSON header line);
//! records go to JSON validated against the shipped schemas before writing.

use crate::schema;
use anyhow::Context;
use micropteron_core::dispersion::{
    critical_frequency, critical_frequency_mu, eigencurves, kernel_coefficient, mu_threshold,
    WaveParameters,
};
use micropteron_core::jost::{
    chi_c, iota_chi_closed_form, jost_grid, neumann_jost, solvability_panel, IotaFunctional,
    JostSolution, TailBranch,
};
use micropteron_core::lattice::{
    default_site_count, expected_bonds, init_from_profiles, shift_error_now, step, LatticeState,
};
use micropteron_core::micropteron::{
    assemble_profiles, solve_micropteron, MicropteronSolution, WaveProfiles,
};
use micropteron_core::periodic::{bifurcation_denominator, solve_periodic, PeriodicWave};
use micropteron_core::solitary::{default_grid, kdv_misfit, solve_monatomic, SolitaryWave};
use micropteron_core::spectral::{io, Grid, GridFunction};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const FORMAT_VERSION: &str = "1";

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

/// Serialize, validate against the shipped schema, then write.
fn write_record<T: Serialize>(value: &T, schema_name: &str, path: &Path) -> anyhow::Result<()> {
    let json = serde_json::to_value(value)?;
    schema::validate(schema_name, &json)
        .with_context(|| format!("record for {} failed schema validation", path.display()))?;
    let mut file = fs::File::create(path)?;
    writeln!(file, "{}", serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

/// Two-column gnuplot-friendly data file.
pub fn write_columns(path: &Path, rows: impl Iterator<Item = (f64, f64)>) -> anyhow::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (x, y) in rows {
        writeln!(out, "{x} {y}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RootRecord {
    pub omega: f64,
    pub residual: f64,
    pub derivative: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub beyond_proof_regime: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DispersionRecord {
    pub format_version: String,
    pub c: f64,
    pub mu: f64,
    pub mu_threshold: f64,
    pub critical: RootRecord,
    pub critical_detuned: RootRecord,
    pub kernel_coefficient: f64,
    pub bifurcation_denominator: f64,
    /// Number of sign changes of c^2 K^2 - lambda_plus on the plotted grid;
    /// must equal one (the unique positive crossing).
    pub overlay_intersections: usize,
}

pub fn run_dispersion(
    params: &WaveParameters,
    samples: usize,
    dir: &Path,
) -> anyhow::Result<DispersionRecord> {
    ensure_dir(dir)?;
    let base = critical_frequency(params)?;
    let detuned = critical_frequency_mu(params)?;
    let upsilon = kernel_coefficient(params)?;
    let denominator = bifurcation_denominator(params)?;

    let k_max = 2.5f64;
    let ks: Vec<f64> = (0..samples).map(|i| k_max * i as f64 / (samples - 1) as f64).collect();
    write_columns(
        &dir.join("lambda_minus.dat"),
        ks.iter().map(|k| (*k, eigencurves(params.mu, *k).0)),
    )?;
    write_columns(
        &dir.join("lambda_plus.dat"),
        ks.iter().map(|k| (*k, eigencurves(params.mu, *k).1)),
    )?;
    write_columns(
        &dir.join("parabola.dat"),
        ks.iter().map(|k| (*k, params.c * params.c * k * k)),
    )?;

    let gap: Vec<f64> = ks
        .iter()
        .map(|k| params.c * params.c * k * k - eigencurves(params.mu, *k).1)
        .collect();
    let overlay_intersections = gap.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();

    let to_record = |r: &micropteron_core::CriticalFrequency| RootRecord {
        omega: r.omega,
        residual: r.residual,
        derivative: r.derivative,
        bracket_low: r.bracket.0,
        bracket_high: r.bracket.1,
        beyond_proof_regime: r.beyond_proof_regime,
    };
    let record = DispersionRecord {
        format_version: FORMAT_VERSION.into(),
        c: params.c,
        mu: params.mu,
        mu_threshold: mu_threshold(params.c),
        critical: to_record(&base),
        critical_detuned: to_record(&detuned),
        kernel_coefficient: upsilon,
        bifurcation_denominator: denominator,
        overlay_intersections,
    };
    write_record(&record, "dispersion", &dir.join("dispersion.json"))?;
    Ok(record)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolitaryRecord {
    pub format_version: String,
    pub c: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub stabilizing_factor: f64,
    pub tail_rate: Option<f64>,
    pub kdv_misfit: f64,
    pub hypothesis_mode: bool,
    pub half_length: f64,
    pub n_points: usize,
}

pub fn run_solitary(
    params: &WaveParameters,
    dir: &Path,
) -> anyhow::Result<(SolitaryRecord, SolitaryWave)> {
    ensure_dir(dir)?;
    let epsilon = params.epsilon.unwrap_or_else(|| params.epsilon_from_speed());
    let wave = solve_monatomic(params, default_grid(epsilon))?;
    io::write_csv(&wave.profile, &dir.join("varsigma.csv"))?;
    write_monatomic_manifest(&wave, dir)?;
    let record = SolitaryRecord {
        format_version: FORMAT_VERSION.into(),
        c: wave.c,
        epsilon: wave.epsilon,
        iterations: wave.iterations,
        residual: wave.residual,
        stabilizing_factor: wave.stabilizing_factor,
        tail_rate: wave.tail_rate,
        kdv_misfit: kdv_misfit(&wave),
        hypothesis_mode: wave.hypothesis_mode,
        half_length: wave.profile.grid().half_length(),
        n_points: wave.profile.grid().len(),
    };
    write_record(&record, "solitary", &dir.join("solitary.json"))?;
    Ok((record, wave))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PeriodicRecord {
    pub format_version: String,
    pub wave: PeriodicWave,
}

pub fn run_periodic(params: &WaveParameters, a: f64, dir: &Path) -> anyhow::Result<PeriodicRecord> {
    ensure_dir(dir)?;
    let wave = solve_periodic(params, a)?;
    let grid = Grid::new(64.0, 1024)?;
    let pair = micropteron_core::periodic::evaluate_periodic(&wave, grid);
    io::write_csv(&pair.rho1, &dir.join("periodic_rho1.csv"))?;
    io::write_csv(&pair.rho2, &dir.join("periodic_rho2.csv"))?;
    let record = PeriodicRecord {
        format_version: FORMAT_VERSION.into(),
        wave,
    };
    write_record(&record, "periodic", &dir.join("periodic.json"))?;
    Ok(record)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JostRecord {
    pub format_version: String,
    pub c: f64,
    pub omega: f64,
    pub theta: f64,
    pub sin_margin: f64,
    pub amp_sin: f64,
    pub amp_cos: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub weight: f64,
    pub tail_misfit: f64,
    pub interior_residual: f64,
    pub branch: String,
    pub neumann_contracted: bool,
    pub iterations: usize,
    pub iota_chi_quadrature: f64,
    pub iota_chi_closed_form: f64,
    pub iota_chi_relative_error: f64,
    pub solvability_panel_max: f64,
}

pub fn run_jost(
    params: &WaveParameters,
    solitary: &SolitaryWave,
    dir: &Path,
) -> anyhow::Result<(JostRecord, JostSolution)> {
    ensure_dir(dir)?;
    let grid = jost_grid(solitary.profile.grid().half_length())?;
    let vs = solitary.profile.resample(grid)?;
    let jost = neumann_jost(params, &vs)?;
    io::write_csv(&jost.gamma, &dir.join("gamma.csv"))?;

    let iota = IotaFunctional::new(&jost, *solitary.profile.grid())?;
    let chi = chi_c(jost.omega, &solitary.profile);
    let quad = iota.apply(&chi)?;
    let closed = iota_chi_closed_form(params.c, jost.omega, jost.theta);
    let panel = solvability_panel(params, &solitary.profile, &iota, 10, 42)?;
    let record = JostRecord {
        format_version: FORMAT_VERSION.into(),
        c: params.c,
        omega: jost.omega,
        theta: jost.theta,
        sin_margin: jost.sin_margin,
        amp_sin: jost.amp_sin,
        amp_cos: jost.amp_cos,
        alpha_re: jost.alpha.re,
        alpha_im: jost.alpha.im,
        beta_re: jost.beta.re,
        beta_im: jost.beta.im,
        weight: jost.q,
        tail_misfit: jost.tail_misfit,
        interior_residual: jost.interior_residual,
        branch: match jost.branch {
            TailBranch::Imaginary => "imaginary".into(),
            TailBranch::Real => "real".into(),
        },
        neumann_contracted: jost.neumann_contracted,
        iterations: jost.iterations,
        iota_chi_quadrature: quad,
        iota_chi_closed_form: closed,
        iota_chi_relative_error: (quad - closed).abs() / closed.abs(),
        solvability_panel_max: panel.iter().cloned().fold(0.0, f64::max),
    };
    write_record(&record, "jost", &dir.join("jost.json"))?;
    Ok((record, jost))
}

/// Manifest tying together the persisted profile parts of one solution.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionManifest {
    pub format_version: String,
    pub kind: String,
    pub c: f64,
    pub mu: f64,
    pub epsilon: Option<f64>,
    pub a: f64,
    pub residual: f64,
    pub iterations: usize,
    pub varsigma_file: String,
    pub eta1_file: Option<String>,
    pub eta2_file: Option<String>,
    pub ripple: Option<PeriodicWave>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MicropteronRecord {
    pub format_version: String,
    pub mu: f64,
    pub a: f64,
    pub iterations: usize,
    pub residual: f64,
    pub corrector_residual: f64,
    pub eta1_sup: f64,
    pub eta2_sup: f64,
    pub size_over_mu: Option<f64>,
    pub border_multiplier: f64,
}

pub fn write_monatomic_manifest(
    solitary: &SolitaryWave,
    dir: &Path,
) -> anyhow::Result<SolutionManifest> {
    ensure_dir(dir)?;
    let manifest = SolutionManifest {
        format_version: FORMAT_VERSION.into(),
        kind: "monatomic".into(),
        c: solitary.c,
        mu: 0.0,
        epsilon: Some(solitary.epsilon),
        a: 0.0,
        residual: solitary.residual,
        iterations: solitary.iterations,
        varsigma_file: "varsigma.csv".into(),
        eta1_file: None,
        eta2_file: None,
        ripple: None,
    };
    write_record(&manifest, "solution", &dir.join("solution.json"))?;
    Ok(manifest)
}

pub fn run_micropteron_one(
    params: &WaveParameters,
    solitary: &SolitaryWave,
    jost: &JostSolution,
    dir: &Path,
) -> anyhow::Result<(MicropteronRecord, MicropteronSolution)> {
    ensure_dir(dir)?;
    let sol = solve_micropteron(params, solitary, jost)?;
    io::write_csv(&sol.eta1, &dir.join("eta1.csv"))?;
    io::write_csv(&sol.eta2, &dir.join("eta2.csv"))?;
    io::write_csv(&solitary.profile, &dir.join("varsigma.csv"))?;
    let (rho, (p1, p2)) = assemble_profiles(&sol, solitary);
    io::write_csv(&rho.rho1, &dir.join("rho1.csv"))?;
    io::write_csv(&rho.rho2, &dir.join("rho2.csv"))?;
    io::write_csv(&p1, &dir.join("p1.csv"))?;
    io::write_csv(&p2, &dir.join("p2.csv"))?;

    let manifest = SolutionManifest {
        format_version: FORMAT_VERSION.into(),
        kind: "micropteron".into(),
        c: sol.c,
        mu: sol.mu,
        epsilon: params.epsilon,
        a: sol.a,
        residual: sol.residual,
        iterations: sol.iterations,
        varsigma_file: "varsigma.csv".into(),
        eta1_file: Some("eta1.csv".into()),
        eta2_file: Some("eta2.csv".into()),
        ripple: Some(sol.wave.clone()),
    };
    write_record(&manifest, "solution", &dir.join("solution.json"))?;

    let record = MicropteronRecord {
        format_version: FORMAT_VERSION.into(),
        mu: sol.mu,
        a: sol.a,
        iterations: sol.iterations,
        residual: sol.residual,
        corrector_residual: sol.beale_residual,
        eta1_sup: sol.eta1.sup_norm(),
        eta2_sup: sol.eta2.sup_norm(),
        size_over_mu: if sol.mu != 0.0 {
            Some((sol.eta1.sup_norm() + sol.eta2.sup_norm() + sol.a.abs()) / sol.mu.abs())
        } else {
            None
        },
        border_multiplier: sol.border_multiplier,
    };
    write_record(&record, "micropteron", &dir.join("micropteron.json"))?;
    crate::plots::emit_profile_overlay(&solitary.profile, &rho.rho1, dir)?;
    Ok((record, sol))
}

pub fn run_micropteron_sweep(
    params: &WaveParameters,
    mus: &[f64],
    solitary: &SolitaryWave,
    jost: &JostSolution,
    dir: &Path,
) -> anyhow::Result<Vec<MicropteronRecord>> {
    let mut records = Vec::new();
    for mu in mus {
        let p = params.with_mu(*mu)?;
        let sub = dir.join(format!("mu_{mu:+.6e}"));
        let (record, _) = run_micropteron_one(&p, solitary, jost, &sub)?;
        records.push(record);
    }
    crate::plots::emit_mu_sweep(&records, jost, dir)?;
    Ok(records)
}

pub fn load_profiles(dir: &Path) -> anyhow::Result<WaveProfiles> {
    let manifest_path = dir.join("solution.json");
    let manifest: SolutionManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )?;
    let varsigma = io::read_csv(&dir.join(&manifest.varsigma_file))?;
    let grid = *varsigma.grid();
    let zero_even = GridFunction::zeros(grid, micropteron_core::Parity::Even);
    let zero_odd = GridFunction::zeros(grid, micropteron_core::Parity::Odd);
    let eta1 = match &manifest.eta1_file {
        Some(f) => io::read_csv(&dir.join(f))?,
        None => zero_even,
    };
    let eta2 = match &manifest.eta2_file {
        Some(f) => io::read_csv(&dir.join(f))?,
        None => zero_odd,
    };
    Ok(WaveProfiles::from_parts(
        varsigma,
        eta1,
        eta2,
        manifest.ripple,
        manifest.c,
        manifest.mu,
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateRecord {
    pub format_version: String,
    pub sites: usize,
    pub t_final: f64,
    pub dt: f64,
    pub shift_error: f64,
    pub energy_initial: f64,
    pub energy_drift: f64,
    pub ripple_before: f64,
    pub ripple_after: f64,
    pub radiated: f64,
}

pub fn run_simulate(
    profiles_dir: &Path,
    t_final: f64,
    dt: f64,
    sites: Option<usize>,
    dir: &Path,
) -> anyhow::Result<SimulateRecord> {
    ensure_dir(dir)?;
    let profiles = load_profiles(profiles_dir)?;
    let sites = sites.unwrap_or_else(|| default_site_count(&profiles));
    let mut state = init_from_profiles(&profiles, sites)?;

    let steps = (t_final / dt).round() as usize;
    let sample_every = (steps / 100).max(1);
    let e0 = state.energy();
    let mut drift: f64 = 0.0;
    let mut series = std::io::BufWriter::new(fs::File::create(dir.join("timeseries.csv"))?);
    writeln!(series, "t,shift_error,energy")?;
    writeln!(series, "0,0,{e0}")?;
    for s in 1..=steps {
        step(&mut state, dt);
        let energy = state.energy();
        drift = drift.max((energy - e0).abs());
        if s % sample_every == 0 || s == steps {
            let err = shift_error_now(&state, &profiles);
            writeln!(series, "{},{},{}", state.t, err, energy)?;
        }
    }
    drop(series);

    let shift_error = shift_error_now(&state, &profiles);
    let (ripple_before, ripple_after, radiated) =
        far_field_summary(&state, &profiles, sites, t_final);

    let mut snapshot = std::io::BufWriter::new(fs::File::create(dir.join("snapshot.csv"))?);
    writeln!(snapshot, "x,r,v,expected")?;
    let expected = expected_bonds(&profiles, sites, state.t);
    let v = state.v();
    for j in 0..sites {
        writeln!(
            snapshot,
            "{},{},{},{}",
            state.position(j),
            state.r[j],
            v[j],
            expected[j]
        )?;
    }
    drop(snapshot);

    let record = SimulateRecord {
        format_version: FORMAT_VERSION.into(),
        sites,
        t_final,
        dt,
        shift_error,
        energy_initial: e0,
        energy_drift: drift,
        ripple_before,
        ripple_after,
        radiated,
    };
    write_record(&record, "simulate", &dir.join("simulate.json"))?;
    Ok(record)
}

fn far_field_summary(
    state: &LatticeState,
    profiles: &WaveProfiles,
    sites: usize,
    t_final: f64,
) -> (f64, f64, f64) {
    let half = (sites / 2) as f64;
    let core_band = 60.0;
    let seam = 0.92 * half;
    let shift = profiles.c * t_final;
    let initial = expected_bonds(profiles, sites, 0.0);
    let expected = expected_bonds(profiles, sites, t_final);
    let mut before: f64 = 0.0;
    let mut after: f64 = 0.0;
    let mut radiated: f64 = 0.0;
    for j in 0..sites {
        let x = state.position(j) as f64;
        if x.abs() > core_band && x.abs() < seam {
            before = before.max(initial[j].abs());
        }
        if (x - shift).abs() > core_band && x.abs() < seam {
            after = after.max(state.r[j].abs());
            radiated = radiated.max((state.r[j] - expected[j]).abs());
        }
    }
    (before, after, radiated)
}
