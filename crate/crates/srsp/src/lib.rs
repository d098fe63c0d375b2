//! Pseudo-spectral simulator and numerical verification harness for the 3-D
//! semi-relativistic Schrodinger-Poisson system with attractive Coulomb
//! coupling and fractional dissipation.
//!
//! The model couples a finite-rank stack of wavefunctions through one
//! self-consistent attractive potential; the kinetic operator is
//! `sqrt(-Lap + m^2)` and dissipation enters as `-i eps (-Lap)^alpha`.
//! Everything nonlocal is realized as a Fourier multiplier on a periodic
//! box, time stepping is Strang splitting between the diagonal linear flow
//! and the pointwise potential phase, and a diagnostics layer tracks the
//! conserved/dissipated functionals plus the virial quantities whose
//! interplay decides between finite-time collapse and arrest.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fft;
pub mod field;
pub mod grid;
pub mod hartree;
pub mod multiplier;
pub mod scenario;
pub mod semigroup;
pub mod snapshot;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{make_grid, Grid3};
pub use hartree::KernelMode;
pub use state::MixedState;
