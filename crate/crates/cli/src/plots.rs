//! Gnuplot-compatible two-column data files for the standard figures:
//! eigencurve overlays, profile comparisons, and detuning sweeps.

use crate::stages::{write_columns, MicropteronRecord};
use micropteron_core::jost::JostSolution;
use micropteron_core::spectral::GridFunction;
use std::path::Path;

/// Profile overlay: the assembled wave against the bare solitary core.
pub fn emit_profile_overlay(
    varsigma: &GridFunction,
    rho1: &GridFunction,
    dir: &Path,
) -> anyhow::Result<()> {
    let grid = varsigma.grid();
    write_columns(
        &dir.join("profile_core.dat"),
        (0..grid.len()).map(|j| (grid.x(j), varsigma.values()[j])),
    )?;
    let grid = rho1.grid();
    write_columns(
        &dir.join("profile_wave.dat"),
        (0..grid.len()).map(|j| (grid.x(j), rho1.values()[j])),
    )?;
    Ok(())
}

/// Detuning sweeps of the ripple amplitude, corrector size, and phase shift.
pub fn emit_mu_sweep(
    records: &[MicropteronRecord],
    jost: &JostSolution,
    dir: &Path,
) -> anyhow::Result<()> {
    if records.is_empty() {
        return Ok(());
    }
    write_columns(
        &dir.join("sweep_amplitude.dat"),
        records.iter().map(|r| (r.mu, r.a)),
    )?;
    write_columns(
        &dir.join("sweep_corrector.dat"),
        records.iter().map(|r| (r.mu, r.eta1_sup + r.eta2_sup)),
    )?;
    write_columns(
        &dir.join("sweep_phase_shift.dat"),
        records.iter().map(|r| (r.mu, jost.theta)),
    )?;
    Ok(())
}
