//! Exact application of the lattice operators on grid functions.
//!
//! The shift-by-one operators act spectrally (multipliers 2cos k and 2i sin k),
//! so the grid spacing does not need to divide the lattice spacing.  All
//! operators here preserve the even/odd bookkeeping of the traveling-wave
//! system: the 2x2 operator matrix maps (even, odd) pairs to (even, odd)
//! pairs, with a mean-zero first component.

use crate::dispersion::{symbol_b, WaveParameters};
use crate::krylov::{gmres, FnOperator, GmresConfig};
use crate::spectral::{Grid, GridFunction, Parity};
use crate::Result;
use num_complex::Complex64;

/// Pair of profiles (even first component, odd second component).
#[derive(Debug, Clone)]
pub struct ProfilePair {
    pub rho1: GridFunction,
    pub rho2: GridFunction,
}

impl ProfilePair {
    pub fn new(rho1: GridFunction, rho2: GridFunction) -> Self {
        assert!(rho1.grid().same(rho2.grid()), "profile pair grid mismatch");
        Self { rho1, rho2 }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            rho1: GridFunction::zeros(grid, Parity::Even),
            rho2: GridFunction::zeros(grid, Parity::Odd),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.rho1.grid()
    }

    pub fn add(&self, other: &ProfilePair) -> ProfilePair {
        ProfilePair::new(self.rho1.add(&other.rho1), self.rho2.add(&other.rho2))
    }

    pub fn sub(&self, other: &ProfilePair) -> ProfilePair {
        ProfilePair::new(self.rho1.sub(&other.rho1), self.rho2.sub(&other.rho2))
    }

    pub fn scale(&self, s: f64) -> ProfilePair {
        ProfilePair::new(self.rho1.scale(s), self.rho2.scale(s))
    }

    pub fn sup_norm(&self) -> f64 {
        self.rho1.sup_norm().max(self.rho2.sup_norm())
    }
}

/// A = S^1 + S^-1, applied as the multiplier 2cos(k).  Parity preserved.
pub fn shift_sum(f: &GridFunction) -> GridFunction {
    f.apply_symbol(|k| Complex64::new(2.0 * k.cos(), 0.0), f.parity())
}

/// delta = S^1 - S^-1, applied as the multiplier 2i sin(k).
///
/// Flips parity and always produces a mean-zero function.
pub fn shift_diff(f: &GridFunction) -> GridFunction {
    f.apply_symbol(|k| Complex64::new(0.0, 2.0 * k.sin()), f.parity().flipped())
        .enforced_mean_zero()
}

/// (2 - A) f via the multiplier 2 - 2cos(k); mean-zero by construction.
pub fn two_minus_a(f: &GridFunction) -> GridFunction {
    f.apply_symbol(|k| Complex64::new(2.0 - 2.0 * k.cos(), 0.0), f.parity())
        .enforced_mean_zero()
}

/// (2 + A) f via the multiplier 2 + 2cos(k).
pub fn two_plus_a(f: &GridFunction) -> GridFunction {
    f.apply_symbol(|k| Complex64::new(2.0 + 2.0 * k.cos(), 0.0), f.parity())
}

/// The 2x2 operator matrix of the traveling-wave system,
/// (1/2) [ (2+mu)(2-A)  mu delta ; -mu delta  (2+mu)(2+A) ].
pub fn apply_dmu(mu: f64, rho: &ProfilePair) -> ProfilePair {
    let first = two_minus_a(&rho.rho1)
        .scale(0.5 * (2.0 + mu))
        .add(&shift_diff(&rho.rho2).scale(0.5 * mu))
        .enforced_mean_zero();
    let second = shift_diff(&rho.rho1)
        .scale(-0.5 * mu)
        .add(&two_plus_a(&rho.rho2).scale(0.5 * (2.0 + mu)));
    debug_assert!(first.parity() == Parity::Even && second.parity() == Parity::Odd);
    ProfilePair::new(first, second)
}

/// Exact mu-derivative of the operator matrix,
/// (1/2) [ (2-A)  delta ; -delta  (2+A) ], so that D_mu = D_0 + mu * this.
pub fn dmu_derivative(rho: &ProfilePair) -> ProfilePair {
    let first = two_minus_a(&rho.rho1)
        .scale(0.5)
        .add(&shift_diff(&rho.rho2).scale(0.5))
        .enforced_mean_zero();
    let second = shift_diff(&rho.rho1)
        .scale(-0.5)
        .add(&two_plus_a(&rho.rho2).scale(0.5));
    ProfilePair::new(first, second)
}

/// Symmetric bilinear nonlinearity
/// Q(rho, rho') = (rho1 rho1' + rho2 rho2', rho1 rho2' + rho1' rho2).
pub fn bilinear_q(a: &ProfilePair, b: &ProfilePair) -> ProfilePair {
    let first = a.rho1.mul(&b.rho1).add(&a.rho2.mul(&b.rho2));
    let second = a.rho1.mul(&b.rho2).add(&b.rho1.mul(&a.rho2));
    debug_assert!(first.parity() == Parity::Even && second.parity() == Parity::Odd);
    ProfilePair::new(first, second)
}

/// Full traveling-wave residual c^2 rho'' + D_mu rho + D_mu Q(rho, rho).
///
/// Its sup-norm is the universal certificate that a profile pair solves the
/// system.  Only valid for profile pairs whose tails vanish on the grid.
pub fn residual_g(params: &WaveParameters, rho: &ProfilePair) -> ProfilePair {
    let c2 = params.c * params.c;
    let q = bilinear_q(rho, rho);
    let lin = ProfilePair::new(rho.rho1.add(&q.rho1), rho.rho2.add(&q.rho2));
    let d = apply_dmu(params.mu, &lin);
    let first = rho.rho1.derivative(2).scale(c2).add(&d.rho1).enforced_mean_zero();
    let second = rho.rho2.derivative(2).scale(c2).add(&d.rho2);
    ProfilePair::new(first, second)
}

/// Residual of the monatomic traveling-wave equation
/// c^2 f'' + (2-A)(f + f^2); equals the first component of the full
/// residual at (f, 0) with mu = 0.
pub fn monatomic_residual(c: f64, f: &GridFunction) -> GridFunction {
    let nonlinear = f.add(&f.mul(f));
    f.derivative(2)
        .scale(c * c)
        .add(&two_minus_a(&nonlinear))
        .enforced_mean_zero()
}

/// Auxiliary symbol -c^2 k^2 + 2 - 2cos(k): the constant-coefficient part of
/// the even-channel linearization.  Strictly negative for k != 0, double zero
/// at the origin.
pub fn symbol_mtilde(c: f64, k: f64) -> f64 {
    -c * c * k * k + 2.0 - 2.0 * k.cos()
}

/// B_c f = c^2 f'' + (2+A) f, a Fourier multiplier with symbol
/// -c^2 k^2 + 2 + 2cos(k).
pub fn apply_bc(c: f64, f: &GridFunction) -> GridFunction {
    f.apply_symbol(|k| Complex64::new(symbol_b(c, k), 0.0), f.parity())
}

/// H_c f = c^2 f'' + (2-A)((1 + 2 varsigma) f): linearization of the
/// monatomic problem at the solitary wave, acting on even functions.
pub fn apply_hc(c: f64, varsigma: &GridFunction, f: &GridFunction) -> GridFunction {
    let weighted = f.add(&varsigma.mul(f).scale(2.0));
    f.derivative(2)
        .scale(c * c)
        .add(&two_minus_a(&weighted))
        .enforced_mean_zero()
}

/// L_c f = B_c f + 2 (2+A)(varsigma f) on odd functions.
pub fn apply_lc(c: f64, varsigma: &GridFunction, f: &GridFunction) -> GridFunction {
    apply_bc(c, f).add(&two_plus_a(&varsigma.mul(f)).scale(2.0))
}

/// L_c^* g = B_c g + 2 varsigma (2+A) g, the L^2 adjoint of L_c.
pub fn apply_lc_star(c: f64, varsigma: &GridFunction, g: &GridFunction) -> GridFunction {
    apply_bc(c, g).add(&varsigma.mul(&two_plus_a(g)).scale(2.0))
}

/// Solve H_c f = g for even mean-zero f and g by preconditioned GMRES.
///
/// The preconditioner is the diagonal Fourier multiplier 1 / symbol_mtilde
/// restricted off the k = 0 mode; both operator and preconditioner project
/// out the mean so the iteration lives on the mean-zero subspace.
pub fn solve_hc(
    params: &WaveParameters,
    varsigma: &GridFunction,
    g: &GridFunction,
) -> Result<GridFunction> {
    solve_hc_scaled(params.c, 1.0, varsigma, g)
}

/// Solve [c^2 d^2/dx^2 + s (2-A)((1 + 2 varsigma) . )] f = g: the even
/// channel linearization with its difference part scaled by `s`.
///
/// s = 1 is the monatomic linearization; s = (2 + mu)/2 absorbs the
/// mass-detuning diagonal so fixed-point sweeps stay contractive near the
/// sonic limit.
pub fn solve_hc_scaled(
    c: f64,
    s: f64,
    varsigma: &GridFunction,
    g: &GridFunction,
) -> Result<GridFunction> {
    let grid = *g.grid();
    let n = grid.len();
    let vs = varsigma.clone();

    let op = FnOperator {
        n,
        f: move |x: &[f64], y: &mut [f64]| {
            let xf = GridFunction::from_values(grid, x.to_vec(), Parity::None);
            let weighted = xf.add(&vs.mul(&xf).scale(2.0));
            let out = xf
                .derivative(2)
                .scale(c * c)
                .add(&two_minus_a(&weighted).scale(s))
                .enforced_mean_zero();
            y.copy_from_slice(out.values());
        },
    };
    let pre = FnOperator {
        n,
        f: move |x: &[f64], y: &mut [f64]| {
            let xf = GridFunction::from_values(grid, x.to_vec(), Parity::None);
            let out = xf
                .apply_symbol(
                    |k| {
                        if k == 0.0 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            let m = -c * c * k * k + s * (2.0 - 2.0 * k.cos());
                            Complex64::new(1.0 / m, 0.0)
                        }
                    },
                    Parity::None,
                )
                .enforced_mean_zero();
            y.copy_from_slice(out.values());
        },
    };

    let rhs = g.clone().enforced_mean_zero();
    let mut x = vec![0.0; n];
    let cfg = GmresConfig {
        restart: 150,
        max_iters: 3000,
        tol: 1e-12,
        floor: 1e-9,
    };
    gmres(&op, Some(&pre), rhs.values(), &mut x, &cfg).map_err(|e| match e {
        crate::Error::NonConvergence { iterations, last_change, .. } => crate::Error::NonConvergence {
            stage: "solve_hc",
            iterations,
            last_change,
        },
        other => other,
    })?;
    Ok(GridFunction::from_values(grid, x, Parity::None)
        .symmetrized(Parity::Even)
        .enforced_mean_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn grid() -> Grid {
        Grid::new(16.0, 256).unwrap()
    }

    fn bump_even(g: Grid) -> GridFunction {
        GridFunction::sample(g, Parity::Even, |x| (-x * x / 6.0).exp())
    }

    fn bump_odd(g: Grid) -> GridFunction {
        GridFunction::sample(g, Parity::Odd, |x| x * (-x * x / 6.0).exp())
    }

    #[test]
    fn shift_sum_on_cosine_is_exact() {
        let g = grid();
        let w = 0.875; // multiple of pi/L so the mode is exactly on-grid
        let k = std::f64::consts::PI * 4.0 / 16.0;
        let _ = w;
        let f = GridFunction::sample(g, Parity::Even, |x| (k * x).cos());
        let af = shift_sum(&f);
        let exact = f.scale(2.0 * k.cos());
        assert!(af.sub(&exact).sup_norm() < 1e-12);
    }

    #[test]
    fn shift_diff_on_sine_is_exact() {
        let g = grid();
        let k = std::f64::consts::PI * 6.0 / 16.0;
        let f = GridFunction::sample(g, Parity::Odd, |x| (k * x).sin());
        let df = shift_diff(&f);
        // sin(k(x+1)) - sin(k(x-1)) = 2 sin(k) cos(kx)
        let exact = GridFunction::sample(g, Parity::Even, |x| 2.0 * k.sin() * (k * x).cos());
        assert!(df.sub(&exact).sup_norm() < 1e-12);
        assert_eq!(df.parity(), Parity::Even);
        assert!(df.mean_zero());
    }

    #[test]
    fn shift_operators_match_index_shifts() {
        // dx divides 1 here, so S^1 +- S^-1 can be checked against rotation
        let g = grid();
        let f = GridFunction::sample(g, Parity::Even, |x| (-x * x / 7.0).exp() * (1.1 * x).cos());
        let cells = g.cells_per_unit().unwrap() as i64;
        let a_spec = shift_sum(&f);
        let a_index = f.shift_by_cells(cells).add(&f.shift_by_cells(-cells));
        assert!(a_spec.sub(&a_index).sup_norm() < 1e-11);
        let d_spec = shift_diff(&f);
        let d_index = f.shift_by_cells(cells).sub(&f.shift_by_cells(-cells));
        assert!(d_spec.sub(&d_index).sup_norm() < 1e-11);
    }

    #[test]
    fn dmu_reduces_to_diagonal_at_mu_zero() {
        let g = grid();
        let rho = ProfilePair::new(bump_even(g), bump_odd(g));
        let out = apply_dmu(0.0, &rho);
        let exact_first = two_minus_a(&rho.rho1);
        let exact_second = two_plus_a(&rho.rho2);
        assert!(out.rho1.sub(&exact_first).sup_norm() < 1e-12);
        assert!(out.rho2.sub(&exact_second).sup_norm() < 1e-12);
    }

    #[test]
    fn dmu_is_affine_in_mu() {
        // D_mu = D_0 + mu * derivative, exactly
        let g = grid();
        let rho = ProfilePair::new(bump_even(g), bump_odd(g));
        let mu = 0.37;
        let full = apply_dmu(mu, &rho);
        let affine = apply_dmu(0.0, &rho).add(&dmu_derivative(&rho).scale(mu));
        assert!(full.sub(&affine).sup_norm() < 1e-12);
    }

    #[test]
    fn dmu_first_component_is_mean_zero() {
        let g = grid();
        // deliberately non-mean-zero input
        let rho = ProfilePair::new(
            GridFunction::sample(g, Parity::Even, |x| (-x * x / 9.0).exp() + 0.05),
            bump_odd(g),
        );
        let out = apply_dmu(0.13, &rho);
        assert!(out.rho1.mean().abs() < 1e-13);
        // cross-check against direct summation on a coarse grid
        let coarse = Grid::new(8.0, 16).unwrap();
        let rho_c = ProfilePair::new(
            GridFunction::sample(coarse, Parity::Even, |x| (0.3 * x).cos() + 0.2),
            GridFunction::sample(coarse, Parity::Odd, |x| (std::f64::consts::FRAC_PI_8 * x).sin()),
        );
        let out_c = apply_dmu(0.1, &rho_c);
        let direct_mean = out_c.rho1.values().iter().sum::<f64>() / 16.0;
        assert!(direct_mean.abs() < 1e-13);
    }

    #[test]
    fn q_symmetry_and_bilinearity() {
        let g = grid();
        let a = ProfilePair::new(bump_even(g), bump_odd(g));
        let b = ProfilePair::new(
            GridFunction::sample(g, Parity::Even, |x| (-x * x / 3.0).exp() * (0.8 * x).cos()),
            GridFunction::sample(g, Parity::Odd, |x| (0.5 * x).sin() * (-x * x / 5.0).exp()),
        );
        let ab = bilinear_q(&a, &b);
        let ba = bilinear_q(&b, &a);
        assert!(ab.sub(&ba).sup_norm() < 1e-14);

        let zero = ProfilePair::zeros(g);
        assert_eq!(bilinear_q(&a, &zero).sup_norm(), 0.0);

        let sum = bilinear_q(&a.add(&b), &b);
        let split = bilinear_q(&a, &b).add(&bilinear_q(&b, &b));
        assert!(sum.sub(&split).sup_norm() < 1e-13);

        // Q((f,0),(f,0)) = (f^2, 0)
        let f_only = ProfilePair::new(bump_even(g), GridFunction::zeros(g, Parity::Odd));
        let sq = bilinear_q(&f_only, &f_only);
        assert!(sq.rho1.sub(&f_only.rho1.mul(&f_only.rho1)).sup_norm() < 1e-14);
        assert_eq!(sq.rho2.sup_norm(), 0.0);
    }

    #[test]
    fn residual_vanishes_on_zero() {
        let g = grid();
        let params = WaveParameters::from_speed(2.0f64.sqrt(), 0.1).unwrap();
        let r = residual_g(&params, &ProfilePair::zeros(g));
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn lc_adjoint_pairing() {
        let g = grid();
        let c = 1.2;
        let varsigma = bump_even(g).scale(0.05);
        let f = bump_odd(g);
        let h = GridFunction::sample(g, Parity::Odd, |x| (0.9 * x).sin() * (-x * x / 4.0).exp());
        let lhs = apply_lc(c, &varsigma, &f).inner(&h);
        let rhs = f.inner(&apply_lc_star(c, &varsigma, &h));
        assert!(
            (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
            "adjoint defect {:.3e}",
            (lhs - rhs).abs()
        );
    }

    #[test]
    fn lc_reduces_to_bc_and_kills_critical_sine() {
        let params = WaveParameters::from_speed(2.0f64.sqrt(), 0.0).unwrap();
        let omega = crate::dispersion::critical_frequency(&params).unwrap().omega;
        // commensurate half-length so the critical sine is grid-periodic
        let m = (128.0 * omega / std::f64::consts::PI).round();
        let half = std::f64::consts::PI * m / omega;
        let g = Grid::new(half, 2048).unwrap();
        let zero_vs = GridFunction::zeros(g, Parity::Even);
        let f = GridFunction::sample(g, Parity::Odd, |x| (omega * x).sin());
        let bf = apply_lc(params.c, &zero_vs, &f);
        assert!(bf.sup_norm() < 1e-9, "got {:.3e}", bf.sup_norm());
    }

    #[test]
    fn characteristic_matrix_identity() {
        // det of the first-order system matrix equals symbol_b / c^2 on the real line
        let c: f64 = 1.3;
        for j in 0..200 {
            let k = -20.0 + 0.2 * j as f64;
            let z = Complex64::new(0.0, k); // z = ik
            let det = z * z + (Complex64::new(2.0, 0.0) + 2.0 * z.cosh()) / (c * c);
            let expect = symbol_b(c, k) / (c * c);
            assert!((det.re - expect).abs() < 1e-10);
            assert!(det.im.abs() < 1e-12);
        }
    }

    #[test]
    fn solve_hc_recovers_manufactured_solution() {
        let g = Grid::new(64.0, 1024).unwrap();
        let params = WaveParameters::from_epsilon(0.3, 0.0).unwrap();
        let varsigma = GridFunction::sample(g, Parity::Even, |x| {
            let e = 0.3;
            e * e / 4.0 * (e * x / 2.0).cosh().powi(-2)
        });
        let f_star = GridFunction::sample(g, Parity::Even, |x| (-x * x / 9.0).exp())
            .enforced_mean_zero();
        let rhs = apply_hc(params.c, &varsigma, &f_star);
        let f = solve_hc(&params, &varsigma, &rhs).unwrap();
        let err = f.sub(&f_star).sup_norm();
        assert!(err < 1e-8, "recovered with error {err:.3e}");
    }

    #[test]
    fn solve_hc_zero_rhs_gives_zero() {
        let g = Grid::new(32.0, 256).unwrap();
        let params = WaveParameters::from_epsilon(0.3, 0.0).unwrap();
        let varsigma = GridFunction::sample(g, Parity::Even, |x| 0.02 * (-x * x / 8.0).exp());
        let f = solve_hc(&params, &varsigma, &GridFunction::zeros(g, Parity::Even)).unwrap();
        assert!(f.sup_norm() < 1e-13);
    }

    #[test]
    fn solve_hc_is_linear() {
        let g = Grid::new(32.0, 512).unwrap();
        let params = WaveParameters::from_epsilon(0.35, 0.0).unwrap();
        let varsigma = GridFunction::sample(g, Parity::Even, |x| 0.03 * (-x * x / 10.0).exp());
        let rhs = two_minus_a(&GridFunction::sample(g, Parity::Even, |x| (-x * x / 5.0).exp()));
        let f1 = solve_hc(&params, &varsigma, &rhs).unwrap();
        let f2 = solve_hc(&params, &varsigma, &rhs.scale(2.5)).unwrap();
        assert!(f2.sub(&f1.scale(2.5)).sup_norm() < 1e-8);
    }
}
