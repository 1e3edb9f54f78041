//! Dispersion symbols of the lattice and the critical frequencies that
//! organize the whole construction.
//!
//! The constant-coefficient odd-channel operator is a Fourier multiplier with
//! symbol -c^2 k^2 + 2 + 2cos(k); its unique positive zero omega_c sets the
//! frequency of the far-field ripple.  For mu != 0 the relevant root comes
//! from the eigencurves of the 2x2 symbol matrix of the coupled system.

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// All solver inputs: wave speed, mass detuning, optional near-sonic
/// parameter and the exponential weight used by the one-sided inversions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WaveParameters {
    /// Wave speed, |c| > 1 strictly.
    pub c: f64,
    /// Mass detuning mu = 1/m - 1, |mu| < 1.
    pub mu: f64,
    /// Near-sonic parameter with c = (1 + epsilon^2/24)^(1/2), when tracked.
    pub epsilon: Option<f64>,
    /// Exponential weight rate, 0 < weight < 1.
    pub weight: f64,
}

impl WaveParameters {
    pub fn from_speed(c: f64, mu: f64) -> Result<Self> {
        Self::validate(c, mu)?;
        Ok(Self {
            c,
            mu,
            epsilon: None,
            weight: 0.25,
        })
    }

    /// Near-sonic parametrization c = sqrt(1 + epsilon^2 / 24).
    pub fn from_epsilon(epsilon: f64, mu: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let c = (1.0 + epsilon * epsilon / 24.0).sqrt();
        Self::validate(c, mu)?;
        Ok(Self {
            c,
            mu,
            epsilon: Some(epsilon),
            weight: 0.25,
        })
    }

    pub fn with_weight(mut self, weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight must lie in (0, 1), got {weight}"
            )));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        Self::validate(self.c, mu)?;
        self.mu = mu;
        Ok(self)
    }

    fn validate(c: f64, mu: f64) -> Result<()> {
        if !(c.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "requires |c| > 1, got c = {c}"
            )));
        }
        if !(mu.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "requires |mu| < 1, got mu = {mu}"
            )));
        }
        Ok(())
    }

    /// Near-sonic parameter implied by the speed.
    pub fn epsilon_from_speed(&self) -> f64 {
        (24.0 * (self.c * self.c - 1.0)).sqrt()
    }

    /// Consistency defect of the stored (c, epsilon) pair.
    pub fn epsilon_defect(&self) -> f64 {
        match self.epsilon {
            Some(e) => (self.c * self.c - 1.0 - e * e / 24.0).abs(),
            None => 0.0,
        }
    }
}

/// A located dispersion root with its certificate data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriticalFrequency {
    /// The positive root.
    pub omega: f64,
    /// |symbol value| at the root.
    pub residual: f64,
    /// Bracket used by the root finder.
    pub bracket: (f64, f64),
    /// |d(symbol)/dk| at the root; bounded away from zero certifies the root
    /// is simple.
    pub derivative: f64,
    /// Set when |mu| exceeds the conservative threshold under which the
    /// supporting lemmas are proved; the root itself is still certified by
    /// residual and bracket.
    pub beyond_proof_regime: bool,
}

/// Dispersion symbol -c^2 k^2 + 2 + 2cos(k); even in k.
pub fn symbol_b(c: f64, k: f64) -> f64 {
    -c * c * k * k + 2.0 + 2.0 * k.cos()
}

/// Analytic continuation of the symbol; used to check zero-freeness of the
/// shifted line before every weighted inversion.
pub fn symbol_b_complex(c: f64, z: Complex64) -> Complex64 {
    -c * c * z * z + 2.0 + 2.0 * z.cos()
}

/// d/dk of the dispersion symbol.
pub fn symbol_b_prime(c: f64, k: f64) -> f64 {
    -2.0 * c * c * k - 2.0 * k.sin()
}

/// Eigencurves of the 2x2 symbol matrix: 2 + mu -/+ sqrt(mu^2 + 4(1+mu)cos^2 K).
pub fn eigencurves(mu: f64, k: f64) -> (f64, f64) {
    let root = (mu * mu + 4.0 * (1.0 + mu) * k.cos() * k.cos()).sqrt();
    (2.0 + mu - root, 2.0 + mu + root)
}

/// Conservative mu-threshold mirroring the constants used in the supporting
/// lemmas: min(1/10, (c^2-1)/4, (2cos1 - 1)/8).
pub fn mu_threshold(c: f64) -> f64 {
    let a = 0.1f64;
    let b = (c * c - 1.0) / 4.0;
    let d = (2.0 * 1.0f64.cos() - 1.0) / 8.0;
    a.min(b).min(d)
}

/// Detuning at which the acoustic branch's sound speed sqrt(2(1+mu)/(2+mu))
/// reaches the wave speed: mu_crit = 2(c^2-1)/(2-c^2).  Beyond it the lower
/// eigencurve crosses c^2 K^2 at a nonzero K and localized correctors cease
/// to exist.  Only meaningful for 1 < c^2 < 2.
pub fn acoustic_crossover(c: f64) -> f64 {
    let c2 = c * c;
    if c2 >= 2.0 {
        f64::INFINITY
    } else {
        2.0 * (c2 - 1.0) / (2.0 - c2)
    }
}

const BRACKET_INSET: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-13;

/// Brent's method on a sign-changing bracket.
fn brent(mut f: impl FnMut(f64) -> f64, a0: f64, b0: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a0, b0);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a0}, {b0}] (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() < tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0)
            && !(mflag && (b - c).abs() < tol)
            && !(!mflag && (c - d).abs() < tol));
        if cond {
            s = (a + b) / 2.0;
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok(b)
}

/// Unique positive zero of the dispersion symbol, bracketed in
/// (sqrt(2)/|c|, pi/2).
pub fn critical_frequency(params: &WaveParameters) -> Result<CriticalFrequency> {
    let c = params.c.abs();
    let lo = 2.0f64.sqrt() / c + BRACKET_INSET;
    let hi = std::f64::consts::FRAC_PI_2 - BRACKET_INSET;
    let omega = brent(|k| symbol_b(c, k), lo, hi, ROOT_TOL)?;
    Ok(CriticalFrequency {
        omega,
        residual: symbol_b(c, omega).abs(),
        bracket: (lo, hi),
        derivative: symbol_b_prime(c, omega).abs(),
        beyond_proof_regime: false,
    })
}

/// Root of c^2 w^2 = lambda_plus(w) on the same bracket: the ripple
/// frequency of the detuned lattice.  Coincides with [`critical_frequency`]
/// at mu = 0.
pub fn critical_frequency_mu(params: &WaveParameters) -> Result<CriticalFrequency> {
    let c = params.c.abs();
    let mu = params.mu;
    let lo = 2.0f64.sqrt() / c + BRACKET_INSET;
    let hi = std::f64::consts::FRAC_PI_2 - BRACKET_INSET;
    let gap = |w: f64| c * c * w * w - eigencurves(mu, w).1;
    let omega = brent(gap, lo, hi, ROOT_TOL)?;
    // report the simplicity certificate of the underlying symbol branch
    let deriv = {
        let h = 1e-6;
        ((gap(omega + h) - gap(omega - h)) / (2.0 * h)).abs()
    };
    Ok(CriticalFrequency {
        omega,
        residual: gap(omega).abs(),
        bracket: (lo, hi),
        derivative: deriv,
        beyond_proof_regime: mu.abs() > mu_threshold(params.c),
    })
}

/// Tilt of the kernel eigenvector:
/// upsilon = mu sin(w) / (lambda_plus(w) - (2+mu)(1 - cos w)) at w = omega_mu.
pub fn kernel_coefficient(params: &WaveParameters) -> Result<f64> {
    let root = critical_frequency_mu(params)?;
    kernel_coefficient_at(params, root.omega)
}

pub(crate) fn kernel_coefficient_at(params: &WaveParameters, omega: f64) -> Result<f64> {
    let mu = params.mu;
    let denom = eigencurves(mu, omega).1 - (2.0 + mu) * (1.0 - omega.cos());
    if denom.abs() < 1e-8 {
        return Err(Error::Guard(format!(
            "kernel coefficient denominator {denom:.3e} too close to zero"
        )));
    }
    Ok(mu * omega.sin() / denom)
}
