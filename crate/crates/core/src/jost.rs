//! Jost solution of the adjoint linearization, its phase shift, and the
//! solvability functional that characterizes the range of the odd-channel
//! operator.
//!
//! The construction follows the one-sided weighted route: the constant
//! coefficient operator B_c is inverted on exponentially weighted lines via
//! the shifted symbol 1/B_c(-k + iq), the localized perturbation is folded in
//! by a Neumann iteration (with a Krylov fallback when the contraction is
//! marginal), and the bounded null solution is assembled from f(x) - f(-x).
//! Its tail is a phase-shifted sinusoid; everything downstream only needs
//! that phase shift and the pairing g -> integral of g * gamma.

use crate::dispersion::{critical_frequency, symbol_b_complex, symbol_b_prime, WaveParameters};
use crate::krylov::{gmres, FnOperator, GmresConfig};
use crate::spectral::{
    apply_lc, apply_lc_star, ComplexGridFunction, Grid, GridFunction, Parity,
};
use crate::util::SplitMix64;
use crate::{Error, Result};
use num_complex::Complex64;

/// Which real slice of f(x) - f(-x) carries the sinusoidal tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailBranch {
    Imaginary,
    Real,
}

/// The bounded null solution of the adjoint operator with its certificates.
#[derive(Debug, Clone)]
pub struct JostSolution {
    /// Odd, bounded, asymptotically sinusoidal samples (normalized so the
    /// tail is exactly sin(omega (x + theta))).
    pub gamma: GridFunction,
    /// gamma minus its analytic tail, rolled off over the outer band and
    /// low-passed; the split keeps residual evaluation away from the
    /// amplified roundoff of the weighted transforms.
    pub decaying: GridFunction,
    /// Critical frequency of the dispersion symbol.
    pub omega: f64,
    /// Phase shift of the tail.
    pub theta: f64,
    /// Fitted tail coefficients of sin(omega x) and cos(omega x).
    pub amp_sin: f64,
    pub amp_cos: f64,
    /// Residue functionals evaluated at M f (Laplace quadrature route).
    pub alpha: Complex64,
    pub beta: Complex64,
    /// One-sided weight used by the inversions.
    pub q: f64,
    /// Rate of the smooth switch in the two-sided tail formula.
    pub kappa: f64,
    /// sup over the outer tail window of |gamma - sin(omega (x + theta))|.
    pub tail_misfit: f64,
    /// Interior sup-norm of the adjoint residual applied to gamma.
    pub interior_residual: f64,
    /// |sin(omega theta)|: the resonance margin.
    pub sin_margin: f64,
    pub branch: TailBranch,
    pub neumann_contracted: bool,
    pub iterations: usize,
}

/// Weight rate used for the one-sided inversions: a quarter of the fitted
/// decay rate of the solitary wave, capped at 1/4.
///
/// The supporting estimates only need the weight strictly below half the
/// solitary rate; sitting at a quarter leaves the non-sinusoidal remainder
/// decaying at 3/4 of the solitary rate (it is limited by rate - q) and
/// keeps the exponential dynamic range of the weighted transforms far above
/// the roundoff floor.
pub fn weight_for(varsigma: &GridFunction, c: f64) -> f64 {
    let rate = varsigma
        .fitted_tail_rate()
        .unwrap_or_else(|| crate::solitary::linear_decay_rate(c));
    (0.25 * rate).min(0.25)
}

/// Grid used by the Jost stage: same half-length as the solitary stage, two
/// cells per lattice unit.  All spectra in play live below |k| ~ 2.5, and the
/// coarse spacing keeps the curvature amplification of the weighted-transform
/// noise floor far below the residual certificates.
pub fn jost_grid(half_length: f64) -> Result<Grid> {
    Grid::new(half_length, (half_length as usize) * 4)
}

/// Solve B_c f = g in the weighted class e^{q x} L^inf:
/// f = e^{q x} F^{-1}[ F[e^{-q x} g] / B_c(-k + iq) ].
///
/// Requires 0 < |q| < 1 so the shifted line carries no zeros of the symbol,
/// and e^{-q x} g must decay on the grid.
pub fn invert_b_weighted(
    params: &WaveParameters,
    q: f64,
    g: &ComplexGridFunction,
) -> Result<ComplexGridFunction> {
    let c = params.c;
    if !(q.abs() > 0.0 && q.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "weight must satisfy 0 < |q| < 1, got {q}"
        )));
    }
    let grid = *g.grid();
    if q.abs() * grid.half_length() > 40.0 {
        return Err(Error::Guard(
            "weighted inversion would exceed the safe exponential dynamic range".into(),
        ));
    }
    let mut min_abs = f64::INFINITY;
    for j in 0..grid.len() {
        let k = grid.wavenumber(j);
        min_abs = min_abs.min(symbol_b_complex(c, Complex64::new(-k, q)).norm());
    }
    if min_abs < 1e-10 {
        return Err(Error::Guard(format!(
            "shifted symbol nearly vanishes on the line (min {min_abs:.3e})"
        )));
    }
    let weighted = g.mul_exp(-q);
    let inverted = weighted.apply_symbol(|k| {
        Complex64::new(1.0, 0.0) / symbol_b_complex(c, Complex64::new(-k, q))
    });
    Ok(inverted.mul_exp(q))
}

/// 2(2 + A) h by exact index shifts; valid wherever the result is used
/// inside products with localized factors.
fn apply_m(h: &ComplexGridFunction, cells: i64) -> ComplexGridFunction {
    h.scale(Complex64::new(4.0, 0.0))
        .add(&h.shift_by_cells(cells).scale(Complex64::new(2.0, 0.0)))
        .add(&h.shift_by_cells(-cells).scale(Complex64::new(2.0, 0.0)))
}

const NEUMANN_TOL: f64 = 1e-13;
const NEUMANN_MAX: usize = 400;

struct NeumannOutcome {
    g: ComplexGridFunction,
    contracted: bool,
    iterations: usize,
}

/// Fixed point g = -[B^-]^{-1}[varsigma M (e + g)] with a GMRES fallback when
/// the iteration fails to contract.
fn solve_corrector(
    params: &WaveParameters,
    varsigma: &GridFunction,
    q: f64,
    e_wave: &ComplexGridFunction,
    cells: i64,
) -> Result<NeumannOutcome> {
    let grid = *e_wave.grid();
    let apply_k = |v: &ComplexGridFunction| -> Result<ComplexGridFunction> {
        let forced = apply_m(v, cells).mul_real(varsigma);
        Ok(invert_b_weighted(params, -q, &forced)?.scale(Complex64::new(-1.0, 0.0)))
    };

    let mut g = ComplexGridFunction::zeros(grid);
    let mut first_step = 0.0f64;
    let mut prev_step = f64::INFINITY;
    let mut grow = 0usize;
    for iter in 1..=NEUMANN_MAX {
        let next = apply_k(&e_wave.add(&g))?;
        let step = next.sub(&g).sup_norm();
        g = next;
        if iter == 1 {
            first_step = step;
        }
        if step < NEUMANN_TOL {
            return Ok(NeumannOutcome {
                g,
                contracted: true,
                iterations: iter,
            });
        }
        // tolerate an oscillating transient; bail only on sustained growth
        if step > prev_step {
            grow += 1;
            if grow >= 4 || step > 100.0 * first_step {
                break;
            }
        } else {
            grow = 0;
        }
        prev_step = step;
    }

    // Krylov fallback on (I - K) g = K e, flattening complex to re/im pairs.
    let n = grid.len();
    let to_vec = |f: &ComplexGridFunction| -> Vec<f64> {
        f.values().iter().flat_map(|c| [c.re, c.im]).collect()
    };
    let from_vec = |v: &[f64]| -> ComplexGridFunction {
        ComplexGridFunction::from_values(
            grid,
            v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect(),
        )
    };
    let params2 = *params;
    let vs = varsigma.clone();
    let op = FnOperator {
        n: 2 * n,
        f: move |x: &[f64], y: &mut [f64]| {
            let xf = from_vec(x);
            let forced = apply_m(&xf, cells).mul_real(&vs);
            let kx = invert_b_weighted(&params2, -q, &forced)
                .expect("weighted inversion inside fallback")
                .scale(Complex64::new(-1.0, 0.0));
            let out = xf.sub(&kx);
            for (yi, v) in y.iter_mut().zip(to_vec(&out)) {
                *yi = v;
            }
        },
    };
    let rhs_c = apply_k(e_wave)?;
    let rhs = to_vec(&rhs_c);
    let mut x = to_vec(&g);
    let cfg = GmresConfig {
        restart: 80,
        max_iters: 2000,
        tol: 1e-13,
        floor: 1e-10,
    };
    let stats = gmres(&op, None, &rhs, &mut x, &cfg).map_err(|_| {
        Error::Hypothesis(
            "one-sided inversion of the adjoint operator did not converge \
             (Neumann divergent and Krylov stalled): hypothesis 3 unverified"
                .into(),
        )
    })?;
    let g = from_vec(&x);
    // independent fixed-point residual before trusting the fallback
    let defect = apply_k(&e_wave.add(&g))?.sub(&g).sup_norm();
    if defect > 1e-9 * (1.0 + g.sup_norm()) {
        return Err(Error::Hypothesis(format!(
            "fallback corrector fails its own fixed-point equation \
             (defect {defect:.3e}): hypothesis 3 unverified"
        )));
    }
    Ok(NeumannOutcome {
        g,
        contracted: false,
        iterations: NEUMANN_MAX + stats.iterations,
    })
}

/// Least-squares fit of h ~ A sin(omega x) + B cos(omega x) over a window.
fn fit_tail(h: &GridFunction, omega: f64, a: f64, b: f64) -> (f64, f64) {
    let grid = h.grid();
    let (mut sss, mut scc, mut ssc, mut sy_s, mut sy_c) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..grid.len() {
        let x = grid.x(j);
        if x < a || x > b {
            continue;
        }
        let (s, c) = (omega * x).sin_cos();
        sss += s * s;
        scc += c * c;
        ssc += s * c;
        sy_s += s * h.values()[j];
        sy_c += c * h.values()[j];
    }
    let det = sss * scc - ssc * ssc;
    (
        (scc * sy_s - ssc * sy_c) / det,
        (sss * sy_c - ssc * sy_s) / det,
    )
}

/// Smooth odd switch used to write the two-sided tail in one formula.
fn switch(kappa: f64, x: f64) -> f64 {
    (kappa * x).tanh()
}

fn switch_d1(kappa: f64, x: f64) -> f64 {
    let s = 1.0 / (kappa * x).cosh();
    kappa * s * s
}

fn switch_d2(kappa: f64, x: f64) -> f64 {
    let s = 1.0 / (kappa * x).cosh();
    -2.0 * kappa * kappa * s * s * (kappa * x).tanh()
}

/// Analytic tail sin/cos split: cos(d) sin(omega x) + sin(d) T(x) cos(omega x).
fn tail_value(omega: f64, delta: f64, kappa: f64, x: f64) -> f64 {
    delta.cos() * (omega * x).sin() + delta.sin() * switch(kappa, x) * (omega * x).cos()
}

/// Construct the Jost solution at the parameters of `varsigma`.
///
/// `varsigma` must live on a grid whose spacing divides the lattice spacing;
/// see [`jost_grid`].
pub fn neumann_jost(params: &WaveParameters, varsigma: &GridFunction) -> Result<JostSolution> {
    let grid = *varsigma.grid();
    let cells = grid.cells_per_unit().ok_or_else(|| {
        Error::GridMismatch("jost stage needs a grid spacing dividing the lattice spacing".into())
    })? as i64;
    let c = params.c;
    let omega = critical_frequency(params)?.omega;
    let q = weight_for(varsigma, c);

    let e_wave = ComplexGridFunction::sample(grid, |x| Complex64::new(0.0, omega * x).exp());
    let outcome = solve_corrector(params, varsigma, q, &e_wave, cells)?;
    let f = e_wave.add(&outcome.g);

    // f(x) - f(-x) and its two real slices
    let f_tilde = f.sub(&f.mirror());
    let im_branch = f_tilde.imag_part(Parity::None);
    let re_branch = f_tilde.real_part(Parity::None);

    let l = grid.half_length();
    let (fit_lo, fit_hi) = (0.55 * l, 0.85 * l);
    let (a_im, b_im) = fit_tail(&im_branch, omega, fit_lo, fit_hi);
    let (a_re, b_re) = fit_tail(&re_branch, omega, fit_lo, fit_hi);
    let (branch, raw, amp_sin, amp_cos) =
        if a_im.hypot(b_im) >= a_re.hypot(b_re) {
            (TailBranch::Imaginary, im_branch, a_im, b_im)
        } else {
            (TailBranch::Real, re_branch, a_re, b_re)
        };
    let amp = amp_sin.hypot(amp_cos);
    if amp < 1e-8 {
        return Err(Error::Hypothesis(
            "tail amplitude degenerate: no usable sinusoidal branch".into(),
        ));
    }
    let sign = amp_sin.signum();
    let gamma_raw = GridFunction::from_values(
        grid,
        raw.values().iter().map(|v| sign * v / amp).collect(),
        Parity::None,
    );
    let delta = (amp_cos / amp_sin).atan(); // principal branch; sign folded above
    let theta = delta / omega;

    // Split off the analytic tail.  The remainder's true spectrum sits near
    // +-omega, so a gentle low-pass removes only the broadband roundoff that
    // the weighted transforms amplified near the domain ends; without it the
    // second derivative in the residual would magnify that noise floor.
    let kappa = (2.0 * q).max(0.06);
    let mut d_raw: Vec<f64> = (0..grid.len())
        .map(|j| {
            let x = grid.x(j);
            gamma_raw.values()[j] - tail_value(omega, delta, kappa, x)
        })
        .collect();
    // roll the remainder to zero across the outer 8% so the wrap point
    // carries no jump into the low-pass; its true content there is already
    // below 1e-10
    let (roll_a, roll_b) = (0.92 * l, 0.98 * l);
    for (j, v) in d_raw.iter_mut().enumerate() {
        let ax = grid.x(j).abs();
        if ax >= roll_b {
            *v = 0.0;
        } else if ax > roll_a {
            let t = (ax - roll_a) / (roll_b - roll_a);
            *v *= 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        }
    }
    let k_pass = (2.0 * omega).max(4.0);
    let decaying = GridFunction::from_values(grid, d_raw, Parity::None).apply_symbol(
        |k| {
            let a = k.abs();
            let w = if a <= k_pass {
                1.0
            } else if a <= k_pass + 1.0 {
                0.5 * (1.0 + (std::f64::consts::PI * (a - k_pass)).cos())
            } else {
                0.0
            };
            num_complex::Complex64::new(w, 0.0)
        },
        Parity::None,
    );
    // re-assemble gamma from its certified representation
    let gamma = GridFunction::sample(grid, Parity::None, |x| tail_value(omega, delta, kappa, x))
        .add(&decaying);

    // interior residual: analytic pieces plus a spectral pass on the decaying part
    let residual = {
        let sin_part = GridFunction::sample(grid, Parity::None, |x| {
            2.0 * (2.0 + 2.0 * omega.cos()) * (omega * x).sin()
        })
        .mul(varsigma)
        .scale(delta.cos());
        let t_cos = |x: f64| switch(kappa, x) * (omega * x).cos();
        let lstar_tcos = GridFunction::sample(grid, Parity::None, |x| {
            let second = switch_d2(kappa, x) * (omega * x).cos()
                - 2.0 * omega * switch_d1(kappa, x) * (omega * x).sin()
                - omega * omega * t_cos(x);
            c * c * second + 2.0 * t_cos(x) + t_cos(x + 1.0) + t_cos(x - 1.0)
        });
        let vs_weighted = {
            let shifted = GridFunction::sample(grid, Parity::None, |x| {
                2.0 * t_cos(x) + t_cos(x + 1.0) + t_cos(x - 1.0)
            });
            varsigma.mul(&shifted).scale(2.0)
        };
        let tcos_part = lstar_tcos.add(&vs_weighted).scale(delta.sin());
        let d_part = apply_lc_star(c, varsigma, &decaying);
        sin_part.add(&tcos_part).add(&d_part)
    };
    let interior_residual = residual.sup_norm_interior(0.9);

    let tail_misfit = {
        let mut worst: f64 = 0.0;
        for j in 0..grid.len() {
            let x = grid.x(j);
            if x >= 0.5 * l && x <= 0.9 * l {
                worst = worst.max((gamma.values()[j] - (omega * (x + theta)).sin()).abs());
            }
        }
        worst
    };

    let h_forcing = apply_m(&f, cells);
    let (alpha, beta) = residue_coefficients_at(params, omega, varsigma, &h_forcing);

    Ok(JostSolution {
        gamma,
        decaying,
        omega,
        theta,
        amp_sin,
        amp_cos,
        alpha,
        beta,
        q,
        kappa,
        tail_misfit,
        interior_residual,
        sin_margin: (omega * theta).sin().abs(),
        branch,
        neumann_contracted: outcome.contracted,
        iterations: outcome.iterations,
    })
}

/// One-sided Laplace transforms of varsigma * h at +- i omega, folded into
/// the residue functionals
/// alpha = -i (L+ + L-)(i omega) / B'(omega),
/// beta  = +i (L+ + L-)(-i omega) / B'(-omega).
pub fn residue_coefficients_at(
    params: &WaveParameters,
    omega: f64,
    varsigma: &GridFunction,
    h: &ComplexGridFunction,
) -> (Complex64, Complex64) {
    let grid = *h.grid();
    let weighted = h.mul_real(varsigma);
    let dx = grid.dx();
    let n = grid.len();
    let mid = n / 2; // x = 0

    let laplace = |z: Complex64| -> (Complex64, Complex64) {
        // L+[w](z) = int_0^inf w(s) e^{-sz} ds, trapezoid at grid resolution
        let mut plus = 0.5 * weighted.values()[mid];
        for j in mid + 1..n {
            let s = grid.x(j);
            plus += weighted.values()[j] * (-s * z).exp();
        }
        // L-[w](z) = int_0^inf w(-s) e^{sz} ds
        let mut minus = 0.5 * weighted.values()[mid];
        for j in 1..mid {
            let s = -grid.x(j); // positive
            minus += weighted.values()[j] * (s * z).exp();
        }
        (plus * dx, minus * dx)
    };

    let i = Complex64::new(0.0, 1.0);
    let z_plus = i * omega;
    let (lp, lm) = laplace(z_plus);
    let alpha = -i * (lp + lm) / symbol_b_prime(params.c, omega);
    let (lp2, lm2) = laplace(-z_plus);
    let beta = i * (lp2 + lm2) / symbol_b_prime(params.c, -omega);
    (alpha, beta)
}

/// Residue functionals at a real forcing h (convenience for panels/tests).
pub fn residue_coefficients(
    params: &WaveParameters,
    omega: f64,
    varsigma: &GridFunction,
    h: &GridFunction,
) -> (Complex64, Complex64) {
    residue_coefficients_at(params, omega, varsigma, &ComplexGridFunction::from_real(h))
}

/// The explicit odd forcing (2 + A)(varsigma sin(omega x)) whose pairing with
/// gamma has a closed form.
pub fn chi_c(omega: f64, varsigma: &GridFunction) -> GridFunction {
    let grid = *varsigma.grid();
    let sine = GridFunction::sample(grid, Parity::Odd, |x| (omega * x).sin());
    crate::spectral::two_plus_a(&varsigma.mul(&sine))
}

/// Closed form of the pairing iota[chi]:
/// (c^2 omega + sin omega) sin(omega theta).
///
/// Derivation: with L* gamma = 0 the pairing reduces to
/// -int_0^inf sin(omega x) (B gamma)(x) dx, and the boundary terms of the
/// two integrations by parts (one for the second derivative, one for the
/// shift average) evaluate on the sinusoidal tail to
/// -(c^2 omega + sin omega) sin(omega theta); all interior terms cancel
/// because the symbol vanishes at omega.  The prefactor is positive for
/// every supersonic speed, exceeding omega - sin omega.
pub fn iota_chi_closed_form(c: f64, omega: f64, theta: f64) -> f64 {
    (c * c * omega + omega.sin()) * (omega * theta).sin()
}

/// Derivative of gamma assembled from the analytic tail derivative plus the
/// spectral derivative of the decaying remainder (gamma itself is not
/// periodic, so a direct spectral derivative would ring).
pub fn gamma_derivative(jost: &JostSolution) -> GridFunction {
    let grid = *jost.gamma.grid();
    let delta = jost.omega * jost.theta;
    let (omega, kappa) = (jost.omega, jost.kappa);
    let tail_deriv = GridFunction::sample(grid, Parity::None, |x| {
        delta.cos() * omega * (omega * x).cos()
            + delta.sin()
                * (switch_d1(kappa, x) * (omega * x).cos()
                    - switch(kappa, x) * omega * (omega * x).sin())
    });
    tail_deriv.add(&jost.decaying.derivative(1))
}

/// Trapezoid pairing of gamma with a decaying odd function on gamma's grid.
pub fn functional_iota(jost: &JostSolution, g: &GridFunction) -> Result<f64> {
    IotaFunctional::new(jost, *g.grid())?.apply(g)
}

/// The solvability pairing g -> integral g gamma, with gamma resampled onto
/// the caller's grid once.
#[derive(Debug, Clone)]
pub struct IotaFunctional {
    gamma: GridFunction,
}

impl IotaFunctional {
    /// Assemble gamma on `target` from the analytic tail plus the resampled
    /// decaying remainder.  Half-lengths must match.
    pub fn new(jost: &JostSolution, target: Grid) -> Result<Self> {
        let delta = jost.omega * jost.theta;
        let d = jost.decaying.resample(target)?;
        let gamma = GridFunction::sample(target, Parity::None, |x| {
            tail_value(jost.omega, delta, jost.kappa, x)
        })
        .add(&d);
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> &GridFunction {
        &self.gamma
    }

    /// Trapezoid pairing; errors when the integrand does not decay.
    pub fn apply(&self, g: &GridFunction) -> Result<f64> {
        let grid = g.grid();
        let l = grid.half_length();
        let edge = g.sup_norm_window(0.98 * l, l).max(g.sup_norm_window(-l, -0.98 * l));
        if edge > 1e-10 * (1.0 + g.sup_norm()) {
            return Err(Error::Guard(format!(
                "iota integrand does not decay (edge amplitude {edge:.3e})"
            )));
        }
        Ok(self.gamma.inner(g))
    }
}

/// |iota[L_c f]| / ||f|| over a panel of seeded localized odd probes.
pub fn solvability_panel(
    params: &WaveParameters,
    varsigma: &GridFunction,
    iota: &IotaFunctional,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let grid = *varsigma.grid();
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut terms = Vec::new();
        for _ in 0..3 {
            let amp = rng.uniform(-1.0, 1.0);
            let freq = rng.uniform(0.3, 2.2);
            let width = rng.uniform(4.0, 12.0);
            terms.push((amp, freq, width));
        }
        let f = GridFunction::sample(grid, Parity::Odd, |x| {
            terms
                .iter()
                .map(|(a, b, w)| a * (b * x).sin() * (-(x / w) * (x / w)).exp())
                .sum()
        });
        let lf = apply_lc(params.c, varsigma, &f);
        let val = iota.apply(&lf)?.abs() / f.sup_norm().max(1e-300);
        out.push(val);
    }
    Ok(out)
}
