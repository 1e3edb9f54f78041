//! Numerical laboratory for micropteron traveling waves of the diatomic
//! Fermi-Pasta-Ulam-Tsingou lattice near the equal mass limit.
//!
//! The lattice couples particles of alternating masses 1 and m by springs
//! with force law F(r) = r + r².  Writing 1/m = 1 + μ, a traveling wave of
//! speed c solves an advance-delay system for a pair of profiles.  At μ = 0
//! the system reduces to the monatomic lattice, which carries a classical
//! exponentially localized solitary wave.  For small μ ≠ 0 the solitary wave
//! deforms into a *micropteron*: a wave whose profile approaches a small
//! periodic ripple at spatial infinity rather than zero.
//!
//! The crate builds that object constructively, one stage at a time:
//!
//! * [`dispersion`]: lattice dispersion symbols and the critical ripple
//!   frequencies that organize everything else;
//! * [`spectral`]: grid functions on truncated symmetric domains and exact
//!   (FFT-multiplier) application of all lattice operators;
//! * [`solitary`]: the monatomic solitary wave via Petviashvili iteration;
//! * [`periodic`]: the small-amplitude periodic wave family from a
//!   quantitative bifurcation fixed point, solved per Fourier mode;
//! * [`jost`]: the bounded, asymptotically sinusoidal null solution of the
//!   adjoint linearization, its phase shift, and the solvability functional;
//! * [`micropteron`]: the three-component fixed point (two localized
//!   correctors and a ripple amplitude) that assembles the final wave;
//! * [`lattice`]: direct symplectic integration of the finite chain used to
//!   validate every computed profile.

pub mod dispersion;
pub mod jost;
pub mod krylov;
pub mod lattice;
pub mod micropteron;
pub mod periodic;
pub mod solitary;
pub mod spectral;
pub(crate) mod util;

pub use dispersion::{CriticalFrequency, WaveParameters};
pub use jost::JostSolution;
pub use lattice::LatticeState;
pub use micropteron::MicropteronSolution;
pub use periodic::PeriodicWave;
pub use solitary::SolitaryWave;
pub use spectral::{Grid, GridFunction, Parity, ProfilePair};

/// Errors shared by all solver stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("{stage}: no convergence after {iterations} iterations (last change {last_change:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),

    #[error("numerical guard tripped: {0}")]
    Guard(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
