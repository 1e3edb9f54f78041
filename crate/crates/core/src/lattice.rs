//! Direct symplectic integration of the diatomic chain, used to validate
//! every computed traveling wave.
//!
//! The state carries bond elongations r_j and particle velocities; the bond
//! form avoids reconstructing absolute positions while keeping the exact
//! energy and momentum of the particle system available.  Velocity Verlet on
//! this pair is the plain particle integrator with positions eliminated, so
//! it stays time-reversible and second-order.

use crate::micropteron::WaveProfiles;
use crate::{Error, Result};
use serde::Serialize;

/// Periodic chain state: M bonds and M particle velocities.
#[derive(Debug, Clone)]
pub struct LatticeState {
    /// Bond elongations r_j = u_{j+1} - u_j; bond j sits at position j - M/2.
    pub r: Vec<f64>,
    /// Particle velocities (gauge: zero mean).
    pub udot: Vec<f64>,
    /// Mass of even-position particles; odd-position particles have mass 1.
    pub mass_even: f64,
    pub t: f64,
}

fn spring_force(r: f64) -> f64 {
    r + r * r
}

impl LatticeState {
    pub fn sites(&self) -> usize {
        self.r.len()
    }

    /// Physical position of bond/particle index j.
    pub fn position(&self, j: usize) -> i64 {
        j as i64 - (self.r.len() / 2) as i64
    }

    fn mass_at(&self, j: usize) -> f64 {
        if self.position(j).rem_euclid(2) == 0 {
            self.mass_even
        } else {
            1.0
        }
    }

    /// Bond velocities r-dot = (difference of particle velocities).
    pub fn v(&self) -> Vec<f64> {
        let m = self.r.len();
        (0..m).map(|j| self.udot[(j + 1) % m] - self.udot[j]).collect()
    }

    /// Exact chain energy: kinetic plus the antiderivative of the force law.
    pub fn energy(&self) -> f64 {
        let kinetic: f64 = (0..self.sites())
            .map(|j| 0.5 * self.mass_at(j) * self.udot[j] * self.udot[j])
            .sum();
        let potential: f64 = self
            .r
            .iter()
            .map(|r| r * r / 2.0 + r * r * r / 3.0)
            .sum();
        kinetic + potential
    }

    /// Total momentum; conserved to roundoff on the periodic chain.
    pub fn momentum(&self) -> f64 {
        (0..self.sites())
            .map(|j| self.mass_at(j) * self.udot[j])
            .sum()
    }
}

/// Per-particle accelerations from the current bond elongations.
fn accelerations(state: &LatticeState, out: &mut [f64]) {
    let m = state.r.len();
    for j in 0..m {
        let prev = state.r[(j + m - 1) % m];
        out[j] = (spring_force(state.r[j]) - spring_force(prev)) / state.mass_at(j);
    }
}

/// One velocity-Verlet step; exactly reversible under dt -> -dt.
pub fn step(state: &mut LatticeState, dt: f64) {
    let m = state.r.len();
    let mut acc = vec![0.0; m];
    accelerations(state, &mut acc);
    for j in 0..m {
        state.udot[j] += 0.5 * dt * acc[j];
    }
    for j in 0..m {
        // r-dot = u-dot_{j+1} - u-dot_j
        state.r[j] += dt * (state.udot[(j + 1) % m] - state.udot[j]);
    }
    accelerations(state, &mut acc);
    for j in 0..m {
        state.udot[j] += 0.5 * dt * acc[j];
    }
    state.t += dt;
}

/// Default chain length: core plus travel distance plus buffer, adjusted a
/// little to minimize the ripple phase jump across the periodic seam.
pub fn default_site_count(profiles: &WaveProfiles) -> usize {
    let l = profiles.half_length();
    let base = 2 * ((1.5 * 2.0 * l).ceil() as usize).div_ceil(2);
    match profiles.ripple() {
        None => base,
        Some(w) => {
            let tau = 2.0 * std::f64::consts::PI;
            let mut best = base;
            let mut best_gap = f64::INFINITY;
            let mut m = base;
            while m <= base + 64 {
                let gap = (w.omega * m as f64 / tau).fract();
                let gap = gap.min(1.0 - gap);
                if gap < best_gap {
                    best_gap = gap;
                    best = m;
                }
                m += 2;
            }
            best
        }
    }
}

/// Sample the traveling wave onto a chain of `sites` bonds.
pub fn init_from_profiles(profiles: &WaveProfiles, sites: usize) -> Result<LatticeState> {
    if sites < 8 || sites % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "site count must be even and >= 8, got {sites}"
        )));
    }
    if (sites as f64) < 2.0 * profiles.half_length() {
        return Err(Error::InvalidParameter(
            "chain shorter than the profile support".into(),
        ));
    }
    let c = profiles.c;
    let half = (sites / 2) as i64;
    let mut r = vec![0.0; sites];
    let mut rdot = vec![0.0; sites];
    for j in 0..sites {
        let p = j as i64 - half;
        let x = p as f64;
        let (p1, p2) = profiles.p_values(x);
        let (d1, d2) = profiles.p_derivs(x);
        if p.rem_euclid(2) == 0 {
            r[j] = p1;
            rdot[j] = -c * d1;
        } else {
            r[j] = p2;
            rdot[j] = -c * d2;
        }
    }
    // close the periodic loop: bond velocities must sum to zero
    let mean = rdot.iter().sum::<f64>() / sites as f64;
    for v in rdot.iter_mut() {
        *v -= mean;
    }
    // integrate bond velocities into particle velocities, zero-mean gauge
    let mut udot = vec![0.0; sites];
    for j in 1..sites {
        udot[j] = udot[j - 1] + rdot[j - 1];
    }
    let mean_u = udot.iter().sum::<f64>() / sites as f64;
    for v in udot.iter_mut() {
        *v -= mean_u;
    }
    let mu = profiles.mu;
    Ok(LatticeState {
        r,
        udot,
        mass_even: 1.0 / (1.0 + mu),
        t: 0.0,
    })
}

/// Outcome of a propagation run compared against the initial profile
/// translated by c T.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub t_final: f64,
    pub dt: f64,
    /// sup_j |r_j(T) - profile(j - cT)|.
    pub shift_error: f64,
    /// max over the run of |E(t) - E(0)|.
    pub energy_drift: f64,
    pub energy_initial: f64,
    /// Far-field amplitude before and after the run.
    pub ripple_before: f64,
    pub ripple_after: f64,
    /// Largest deviation from the translated profile outside the core band.
    pub radiated: f64,
}

/// Bond values of the wave translated to time t, sampled at every chain
/// site.  The decaying parts are shifted spectrally once and read off at
/// the (integer) site positions; the ripple is evaluated in closed form.
pub fn expected_bonds(profiles: &WaveProfiles, sites: usize, t: f64) -> Vec<f64> {
    let shift = profiles.c * t;
    let sampled = profiles.translated_samples(shift);
    let half = (sites / 2) as i64;
    (0..sites)
        .map(|j| {
            let p = j as i64 - half;
            let (p1, p2) = sampled.bond_values(p as f64);
            if p.rem_euclid(2) == 0 {
                p1
            } else {
                p2
            }
        })
        .collect()
}

/// sup_j |r_j - profile(j - c t)| at the state's current time.
pub fn shift_error_now(state: &LatticeState, profiles: &WaveProfiles) -> f64 {
    let expected = expected_bonds(profiles, state.sites(), state.t);
    state
        .r
        .iter()
        .zip(&expected)
        .fold(0.0f64, |m, (r, e)| m.max((r - e).abs()))
}

/// Integrate to time T with step dt and compare against the translated wave.
pub fn run_and_compare(
    state: &mut LatticeState,
    profiles: &WaveProfiles,
    t_final: f64,
    dt: f64,
) -> Result<RunReport> {
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(Error::InvalidParameter("need positive dt and T".into()));
    }
    let c = profiles.c;
    let travel = c.abs() * t_final;
    let half = (state.sites() / 2) as f64;
    if travel + 0.35 * 2.0 * profiles.half_length() > half {
        return Err(Error::InvalidParameter(format!(
            "travel distance {travel:.1} does not fit the chain without wraparound"
        )));
    }

    let core_band = 60.0;
    let seam_margin = 0.92 * half;
    let far_field = |state: &LatticeState, core: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..state.sites() {
            let x = state.position(j) as f64;
            if (x - core).abs() > core_band && x.abs() < seam_margin {
                worst = worst.max(state.r[j].abs());
            }
        }
        worst
    };

    let e0 = state.energy();
    let ripple_before = far_field(state, 0.0);
    let steps = (t_final / dt).round() as usize;
    let mut drift: f64 = 0.0;
    for _ in 1..=steps {
        step(state, dt);
        let energy = state.energy();
        if !energy.is_finite() {
            return Err(Error::Guard(format!(
                "chain blew up at t = {:.3} (non-finite energy)",
                state.t
            )));
        }
        drift = drift.max((energy - e0).abs());
    }

    let mut shift_error: f64 = 0.0;
    let mut radiated: f64 = 0.0;
    let shift = c * state.t;
    let expected = expected_bonds(profiles, state.sites(), state.t);
    for j in 0..state.sites() {
        let err = (state.r[j] - expected[j]).abs();
        shift_error = shift_error.max(err);
        let xp = state.position(j) as f64;
        if (xp - shift).abs() > core_band && xp.abs() < seam_margin {
            radiated = radiated.max(err);
        }
    }
    let ripple_after = far_field(state, shift);

    Ok(RunReport {
        t_final: state.t,
        dt,
        shift_error,
        energy_drift: drift,
        energy_initial: e0,
        ripple_before,
        ripple_after,
        radiated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::WaveParameters;
    use crate::solitary::{default_grid, solve_monatomic};

    fn monatomic_profiles(eps: f64) -> WaveProfiles {
        let params = WaveParameters::from_epsilon(eps, 0.0).unwrap();
        let wave = solve_monatomic(&params, default_grid(eps)).unwrap();
        WaveProfiles::monatomic(&wave)
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let mut state = LatticeState {
            r: vec![0.0; 64],
            udot: vec![0.0; 64],
            mass_even: 0.99,
            t: 0.0,
        };
        for _ in 0..10 {
            step(&mut state, 0.05);
        }
        assert!(state.r.iter().all(|v| *v == 0.0));
        assert!(state.udot.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn verlet_is_time_reversible() {
        let profiles = monatomic_profiles(0.4);
        let mut state = init_from_profiles(&profiles, 512).unwrap();
        let orig = state.clone();
        for _ in 0..50 {
            step(&mut state, 0.02);
        }
        for _ in 0..50 {
            step(&mut state, -0.02);
        }
        let r_err = state
            .r
            .iter()
            .zip(&orig.r)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let v_err = state
            .udot
            .iter()
            .zip(&orig.udot)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(r_err < 1e-12, "r reversal error {r_err:.3e}");
        assert!(v_err < 1e-12, "v reversal error {v_err:.3e}");
    }

    #[test]
    fn momentum_is_conserved_to_roundoff() {
        let profiles = monatomic_profiles(0.4);
        let mut state = init_from_profiles(&profiles, 512).unwrap();
        let p0 = state.momentum();
        for _ in 0..500 {
            step(&mut state, 0.01);
        }
        assert!((state.momentum() - p0).abs() < 1e-11);
    }

    #[test]
    fn monatomic_wave_initialization_is_symmetric() {
        let profiles = monatomic_profiles(0.4);
        let state = init_from_profiles(&profiles, 512).unwrap();
        // mu = 0 wave: r_j = varsigma(j), even about the core
        let m = state.sites();
        for j in 1..m {
            let a = state.r[j];
            let b = state.r[m - j];
            assert!((a - b).abs() < 1e-12, "asymmetry at {j}");
        }
    }

    #[test]
    #[ignore = "diagnostic dump for manual inspection"]
    fn dump_drift_scaling() {
        let profiles = monatomic_profiles(0.2);
        let sites = default_site_count(&profiles);
        for dt in [0.02, 0.01, 0.005, 0.0025] {
            let mut state = init_from_profiles(&profiles, sites).unwrap();
            let report = run_and_compare(&mut state, &profiles, 50.0, dt).unwrap();
            eprintln!(
                "dt={dt}: drift={:.6e} shift={:.3e} E0={:.6e}",
                report.energy_drift, report.shift_error, report.energy_initial
            );
        }
    }

    #[test]
    fn energy_drift_scales_quadratically_in_dt() {
        // On an exact traveling wave the leading shadow-energy term is
        // constant along the orbit and the drift sits at roundoff, so the
        // second-order law is certified on a perturbed (non-steady) state.
        let profiles = monatomic_profiles(0.4);
        let drift = |dt: f64| -> f64 {
            let mut state = init_from_profiles(&profiles, 512).unwrap();
            for v in state.r.iter_mut() {
                *v *= 1.5;
            }
            let e0 = state.energy();
            let steps = (10.0 / dt).round() as usize;
            let mut worst: f64 = 0.0;
            for _ in 0..steps {
                step(&mut state, dt);
                worst = worst.max((state.energy() - e0).abs());
            }
            worst
        };
        let d1 = drift(0.02);
        let d2 = drift(0.01);
        let ratio = d1 / d2;
        assert!((ratio - 4.0).abs() <= 0.8, "drift ratio {ratio}");
    }

    #[test]
    fn wave_run_conserves_energy_below_dt_squared() {
        // the steady wave's own drift is orders below the generic dt^2 level
        let profiles = monatomic_profiles(0.4);
        let mut state = init_from_profiles(&profiles, 512).unwrap();
        let report = run_and_compare(&mut state, &profiles, 10.0, 0.01).unwrap();
        assert!(
            report.energy_drift < 1e-12 * report.energy_initial.max(1e-6),
            "drift {:.3e}",
            report.energy_drift
        );
    }

    #[test]
    fn solitary_wave_propagates_cleanly() {
        let profiles = monatomic_profiles(0.4);
        let mut state = init_from_profiles(&profiles, 512).unwrap();
        let report = run_and_compare(&mut state, &profiles, 20.0, 0.01).unwrap();
        assert!(report.shift_error <= 1e-3, "shift {:.3e}", report.shift_error);
        // no ripple: the far field holds only the solitary tail
        assert!(report.ripple_before < 1e-8);
    }
}
