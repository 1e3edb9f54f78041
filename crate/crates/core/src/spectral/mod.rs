//! Grid/Fourier representation of functions and exact application of the
//! lattice operators.

mod fft;
mod grid;
pub mod io;
mod ops;

pub use grid::{ComplexGridFunction, Grid, GridFunction, Parity};
pub use ops::{
    apply_bc, apply_dmu, apply_hc, apply_lc, apply_lc_star, bilinear_q, dmu_derivative,
    monatomic_residual, residual_g, shift_diff, shift_sum, solve_hc, solve_hc_scaled,
    symbol_mtilde, two_minus_a, two_plus_a, ProfilePair,
};
