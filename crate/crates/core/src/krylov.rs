//! Restarted GMRES with an optional left preconditioner.
//!
//! The grid operators are applied matrix-free through [`LinearOperator`];
//! preconditioners are diagonal Fourier multipliers supplied the same way.

use crate::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// y = A x
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Operator defined by a closure; convenient for composing projections.
pub struct FnOperator<F: Fn(&[f64], &mut [f64])> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    /// Relative tolerance on the preconditioned residual.
    pub tol: f64,
    /// Residual level still accepted when the iteration budget runs out;
    /// covers solves whose preconditioner amplification sets a roundoff
    /// floor above `tol`.  Zero means strict.
    pub floor: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 80,
            max_iters: 4000,
            tol: 1e-12,
            floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = 1.0 / (1.0 + t * t).sqrt();
        (c, c * t)
    } else {
        let t = a / b;
        let s = 1.0 / (1.0 + t * t).sqrt();
        (s * t, s)
    }
}

/// Solve A x = b with left-preconditioned restarted GMRES.
///
/// `precond` applies M^{-1}; pass `None` for unpreconditioned iteration.
/// `x` carries the initial guess in and the solution out.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[f64],
    x: &mut [f64],
    cfg: &GmresConfig,
) -> Result<GmresStats> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);

    let apply_pre = |src: &[f64], dst: &mut [f64]| match precond {
        Some(m) => m.apply(src, dst),
        None => dst.copy_from_slice(src),
    };

    let mut ax = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut pb = vec![0.0; n];
    apply_pre(b, &mut pb);
    let bnorm = norm(&pb).max(1e-300);

    let mut total = 0usize;
    let mut last_res;

    loop {
        op.apply(x, &mut ax);
        for i in 0..n {
            tmp[i] = b[i] - ax[i];
        }
        let mut r = vec![0.0; n];
        apply_pre(&tmp, &mut r);
        let beta = norm(&r);
        last_res = beta / bnorm;
        if last_res <= cfg.tol {
            return Ok(GmresStats {
                iterations: total,
                residual: last_res,
            });
        }
        if total >= cfg.max_iters {
            break;
        }

        let m = cfg.restart;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];

        for v in r.iter_mut() {
            *v /= beta;
        }
        basis.push(r);
        g[0] = beta;

        let mut k_done = 0usize;
        for k in 0..m {
            total += 1;
            op.apply(&basis[k], &mut ax);
            let mut w = vec![0.0; n];
            apply_pre(&ax, &mut w);

            for j in 0..=k {
                h[j][k] = dot(&w, &basis[j]);
                axpy(&mut w, -h[j][k], &basis[j]);
            }
            h[k + 1][k] = norm(&w);
            if h[k + 1][k] > 0.0 {
                for v in w.iter_mut() {
                    *v /= h[k + 1][k];
                }
            }
            basis.push(w);

            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            let t = c * g[k] + s * g[k + 1];
            g[k + 1] = -s * g[k] + c * g[k + 1];
            g[k] = t;

            k_done = k + 1;
            last_res = g[k_done].abs() / bnorm;
            if last_res <= cfg.tol || total >= cfg.max_iters {
                break;
            }
        }

        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut sum = g[i];
            for j in (i + 1)..k_done {
                sum -= h[i][j] * y[j];
            }
            y[i] = sum / h[i][i];
        }
        for j in 0..k_done {
            axpy(x, y[j], &basis[j]);
        }

        if total >= cfg.max_iters && last_res > cfg.tol {
            break;
        }
    }

    if last_res <= cfg.floor {
        return Ok(GmresStats {
            iterations: total,
            residual: last_res,
        });
    }
    Err(Error::NonConvergence {
        stage: "gmres",
        iterations: total,
        last_change: last_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        n: usize,
        a: Vec<f64>,
    }

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.n
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.n {
                y[i] = (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum();
            }
        }
    }

    #[test]
    fn solves_small_spd_system() {
        let n = 24;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 3.0 + i as f64 * 0.1;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let op = Dense { n, a };
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        op.apply(&xs, &mut b);
        let mut x = vec![0.0; n];
        let stats = gmres(&op, None, &b, &mut x, &GmresConfig::default()).unwrap();
        assert!(stats.residual <= 1e-12);
        for (xi, ei) in x.iter().zip(&xs) {
            assert!((xi - ei).abs() < 1e-9);
        }
    }

    #[test]
    fn reports_failure_on_iteration_cap() {
        // near-singular system, starved iteration budget
        let n = 40;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = if i == 0 { 1e-14 } else { 1.0 };
        }
        let op = Dense { n, a };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let cfg = GmresConfig {
            restart: 5,
            max_iters: 6,
            tol: 1e-14,
            floor: 0.0,
        };
        assert!(gmres(&op, None, &b, &mut x, &cfg).is_err());
    }
}
