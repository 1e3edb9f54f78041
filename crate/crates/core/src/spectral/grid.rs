//! Uniform symmetric grids and the function samples that live on them.
//!
//! Everything downstream works with samples on x_j = -L + 2Lj/N and treats
//! the domain as 2L-periodic, so shifts, derivatives and Fourier multipliers
//! are exact for band-limited data.  Localized functions are represented
//! faithfully as long as their tails sit below roundoff at |x| = L; the grid
//! choice per stage is responsible for that.

use crate::spectral::fft;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Symmetry tag carried by every grid function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Even, Parity::Even) | (Parity::Odd, Parity::Odd) => Parity::Even,
            (Parity::Even, Parity::Odd) | (Parity::Odd, Parity::Even) => Parity::Odd,
            _ => Parity::None,
        }
    }

    /// Parity after an operator that flips even and odd (the shift difference).
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }
}

/// Uniform symmetric periodic grid on [-L, L) with N points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_length: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid half length must be positive, got {half_length}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { half_length, n })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + self.dx() * j as f64
    }

    /// Signed integer mode index for DFT slot `j` (Nyquist mapped to +N/2).
    pub fn mode(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Wavenumber k_j = pi * mode / L.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.mode(j) as f64 / self.half_length
    }

    /// Number of grid cells per unit lattice spacing, when dx divides 1 exactly.
    pub fn cells_per_unit(&self) -> Option<usize> {
        let per = 1.0 / self.dx();
        let rounded = per.round();
        if (per - rounded).abs() < 1e-9 && rounded >= 1.0 {
            Some(rounded as usize)
        } else {
            None
        }
    }

    pub fn same(&self, other: &Grid) -> bool {
        self.n == other.n && (self.half_length - other.half_length).abs() < 1e-12
    }
}

/// Real samples on a [`Grid`] with a parity tag and a mean-zero flag.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    parity: Parity,
    mean_zero: bool,
}

impl GridFunction {
    pub fn from_values(grid: Grid, values: Vec<f64>, parity: Parity) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count must match grid");
        let f = Self {
            grid,
            values,
            parity,
            mean_zero: false,
        };
        debug_assert!(
            f.parity_defect() <= 1e-12 * (1.0 + f.sup_norm()),
            "declared parity violated by samples"
        );
        f
    }

    pub fn sample(grid: Grid, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self::from_values(grid, values, parity)
    }

    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            parity,
            mean_zero: true,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Worst deviation of the samples from the declared parity.
    ///
    /// The wrap point x = -L is its own mirror image and is excluded: sampled
    /// non-periodic oscillations (ripples) are pointwise symmetric everywhere
    /// else but carry an arbitrary boundary value there.
    pub fn parity_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        match self.parity {
            Parity::Even => {
                for j in 1..n {
                    worst = worst.max((self.values[n - j] - self.values[j]).abs());
                }
            }
            Parity::Odd => {
                worst = self.values[n / 2].abs();
                for j in 1..n {
                    worst = worst.max((self.values[n - j] + self.values[j]).abs());
                }
            }
            Parity::None => {}
        }
        worst
    }

    /// Mean of the samples (the zeroth Fourier coefficient).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.len() as f64
    }

    /// Project onto the given parity class by averaging mirror samples;
    /// used after iterative solves whose roundoff breaks exact symmetry.
    pub fn symmetrized(&self, parity: Parity) -> GridFunction {
        let n = self.grid.len();
        let values: Vec<f64> = match parity {
            Parity::Even => (0..n)
                .map(|j| 0.5 * (self.values[j] + self.values[(n - j) % n]))
                .collect(),
            Parity::Odd => {
                let mut v: Vec<f64> = (0..n)
                    .map(|j| 0.5 * (self.values[j] - self.values[(n - j) % n]))
                    .collect();
                v[0] = 0.0;
                v[n / 2] = 0.0;
                v
            }
            Parity::None => self.values.clone(),
        };
        GridFunction {
            grid: self.grid,
            values,
            parity,
            mean_zero: self.mean_zero,
        }
    }

    /// Subtract the mean and mark the function as mean-zero.
    ///
    /// Used after operations that guarantee a vanishing zeroth coefficient
    /// analytically, so roundoff cannot accumulate across fixed-point loops.
    pub fn enforced_mean_zero(mut self) -> Self {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
        self.mean_zero = true;
        self
    }

    pub fn with_mean_zero_flag(mut self, flag: bool) -> Self {
        self.mean_zero = flag;
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup over |x| <= fraction * L.
    pub fn sup_norm_interior(&self, fraction: f64) -> f64 {
        let bound = fraction * self.grid.half_length();
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.x(*j).abs() <= bound)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Sup over a <= x <= b.
    pub fn sup_norm_window(&self, a: f64, b: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let x = self.grid.x(*j);
                x >= a && x <= b
            })
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Periodic trapezoid rule, dx * sum.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Trapezoid pairing dx * sum f g.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        assert!(self.grid.same(&other.grid), "inner: grid mismatch");
        self.grid.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
            parity: self.parity,
            mean_zero: self.mean_zero,
        }
    }

    /// Pointwise product; parity follows the product rule.
    pub fn mul(&self, other: &GridFunction) -> GridFunction {
        assert!(self.grid.same(&other.grid), "mul: grid mismatch");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
            parity: self.parity.product(other.parity),
            mean_zero: false,
        }
    }

    fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert!(self.grid.same(&other.grid), "grid mismatch");
        let parity = if self.parity == other.parity {
            self.parity
        } else {
            Parity::None
        };
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            parity,
            mean_zero: self.mean_zero && other.mean_zero,
        }
    }

    /// f(-x) by index mirroring.
    pub fn mirror(&self) -> GridFunction {
        let n = self.grid.len();
        let values = (0..n).map(|j| self.values[(n - j) % n]).collect();
        GridFunction {
            grid: self.grid,
            values,
            parity: self.parity,
            mean_zero: self.mean_zero,
        }
    }

    /// f(x + cells * dx) by index rotation (exact for periodic data).
    pub fn shift_by_cells(&self, cells: i64) -> GridFunction {
        let n = self.grid.len() as i64;
        let values = (0..n)
            .map(|j| self.values[((j + cells).rem_euclid(n)) as usize])
            .collect();
        GridFunction {
            grid: self.grid,
            values,
            parity: Parity::None,
            mean_zero: self.mean_zero,
        }
    }

    /// Raw DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft::forward(&mut buf);
        buf
    }

    /// Largest |coefficient| / N over the top `band` fraction of modes;
    /// a smoothness proxy for "resolved on this grid".
    pub fn spectral_tail(&self, band: f64) -> f64 {
        let spec = self.spectrum();
        let n = self.grid.len();
        let cutoff = ((n / 2) as f64 * (1.0 - band)) as i64;
        let mut worst: f64 = 0.0;
        for (j, c) in spec.iter().enumerate() {
            if self.grid.mode(j).abs() >= cutoff {
                worst = worst.max(c.norm() / n as f64);
            }
        }
        worst
    }

    /// Apply a Fourier multiplier with symbol `symbol(k)`.
    ///
    /// The declared output parity is taken on trust by callers that know the
    /// symbol's symmetry; a debug assertion checks the result stays real.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex64, parity: Parity) -> GridFunction {
        let n = self.grid.len();
        let mut buf: Vec<Complex64> = self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft::forward(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            let mut s = symbol(self.grid.wavenumber(j));
            // The Nyquist slot has no conjugate partner; keep it real so the
            // inverse transform stays real.
            if j == n / 2 {
                s = Complex64::new(s.re, 0.0);
            }
            *c *= s;
        }
        fft::inverse(&mut buf);
        let max_im = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let max_re = buf.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
        debug_assert!(
            max_im <= 1e-10 * (1.0 + max_re),
            "multiplier produced non-real output (max imag {max_im:.3e})"
        );
        GridFunction {
            grid: self.grid,
            values: buf.iter().map(|c| c.re).collect(),
            parity,
            mean_zero: false,
        }
    }

    /// Spectral derivative of the given order.
    pub fn derivative(&self, order: u32) -> GridFunction {
        let parity = if order % 2 == 0 {
            self.parity
        } else {
            self.parity.flipped()
        };
        let f = self.apply_symbol(
            |k| Complex64::new(0.0, k).powu(order),
            parity,
        );
        if order % 2 == 1 {
            // Odd derivatives of periodic data integrate to zero.
            f.with_mean_zero_flag(true)
        } else {
            f
        }
    }

    /// Samples of f(x + s) for a uniform (non-integer-cell) shift.
    pub fn shift_by(&self, s: f64) -> GridFunction {
        self.apply_symbol(
            |k| Complex64::new(0.0, k * s).exp(),
            Parity::None,
        )
    }

    /// Evaluate the trigonometric interpolant at one point.
    pub fn eval_at(&self, x: f64) -> f64 {
        let spec = self.spectrum();
        let n = self.grid.len();
        let l = self.grid.half_length();
        let mut acc = 0.0;
        for (j, c) in spec.iter().enumerate() {
            let m = self.grid.mode(j);
            let phase = std::f64::consts::PI * m as f64 * (x + l) / l;
            if j == n / 2 {
                acc += c.re * phase.cos();
            } else {
                acc += c.re * phase.cos() - c.im * phase.sin();
            }
        }
        acc / n as f64
    }

    /// Transfer to another grid with the same half-length by spectral
    /// zero-padding or truncation.
    pub fn resample(&self, target: Grid) -> Result<GridFunction> {
        if (target.half_length() - self.grid.half_length()).abs() > 1e-12 {
            return Err(Error::GridMismatch(
                "resample requires identical half-lengths".into(),
            ));
        }
        let n_src = self.grid.len();
        let n_dst = target.len();
        if n_src == n_dst {
            return Ok(self.clone());
        }
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); n_dst];
        let keep = (n_src.min(n_dst)) / 2;
        for m in 0..=keep {
            let src_pos = m;
            let dst_pos = m;
            out[dst_pos] = spec[src_pos];
            if m > 0 && m < keep {
                out[n_dst - m] = spec[n_src - m];
            }
        }
        // halve the shared Nyquist line when truncating to keep realness
        if n_dst < n_src {
            out[keep] = Complex64::new(spec[keep].re, 0.0);
        }
        fft::inverse(&mut out);
        let scale = n_dst as f64 / n_src as f64;
        Ok(GridFunction {
            grid: target,
            values: out.iter().map(|c| c.re * scale).collect(),
            parity: self.parity,
            mean_zero: self.mean_zero,
        })
    }

    /// Exponential decay rate fitted to the right tail, from a log-linear
    /// regression of per-unit-cell envelope maxima.  Returns `None` when the
    /// tail never drops into the fit band (no visible decay).
    pub fn fitted_tail_rate(&self) -> Option<f64> {
        let peak = self.sup_norm();
        if peak == 0.0 {
            return None;
        }
        let hi = 1e-3 * peak;
        let lo = 1e-11 * peak;
        // envelope over unit-length bins on x > 0
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let l = self.grid.half_length();
        let mut bin_start = 1.0f64;
        while bin_start + 1.0 < l {
            let m = self.sup_norm_window(bin_start, bin_start + 1.0);
            if m > lo && m < hi {
                pts.push((bin_start + 0.5, m.ln()));
            }
            bin_start += 1.0;
        }
        if pts.len() < 4 {
            return None;
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if slope < 0.0 {
            Some(-slope)
        } else {
            None
        }
    }
}

/// Complex samples on a [`Grid`]; used by the one-sided weighted inversions.
#[derive(Debug, Clone)]
pub struct ComplexGridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexGridFunction {
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn sample(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_real(f: &GridFunction) -> Self {
        Self {
            grid: *f.grid(),
            values: f.values().iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real_part(&self, parity: Parity) -> GridFunction {
        GridFunction::from_values(self.grid, self.values.iter().map(|c| c.re).collect(), parity)
    }

    pub fn imag_part(&self, parity: Parity) -> GridFunction {
        GridFunction::from_values(self.grid, self.values.iter().map(|c| c.im).collect(), parity)
    }

    pub fn add(&self, other: &ComplexGridFunction) -> ComplexGridFunction {
        assert!(self.grid.same(&other.grid));
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexGridFunction) -> ComplexGridFunction {
        assert!(self.grid.same(&other.grid));
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> ComplexGridFunction {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn mul_real(&self, f: &GridFunction) -> ComplexGridFunction {
        assert!(self.grid.same(f.grid()));
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(f.values())
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Pointwise multiply by exp(q x).
    pub fn mul_exp(&self, q: f64) -> ComplexGridFunction {
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (q * self.grid.x(j)).exp())
                .collect(),
        }
    }

    pub fn mirror(&self) -> ComplexGridFunction {
        let n = self.grid.len();
        Self {
            grid: self.grid,
            values: (0..n).map(|j| self.values[(n - j) % n]).collect(),
        }
    }

    pub fn shift_by_cells(&self, cells: i64) -> ComplexGridFunction {
        let n = self.grid.len() as i64;
        Self {
            grid: self.grid,
            values: (0..n)
                .map(|j| self.values[((j + cells).rem_euclid(n)) as usize])
                .collect(),
        }
    }

    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex64) -> ComplexGridFunction {
        let mut buf = self.values.clone();
        fft::forward(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= symbol(self.grid.wavenumber(j));
        }
        fft::inverse(&mut buf);
        Self {
            grid: self.grid,
            values: buf,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}
