//! Quantum dynamics of a polar linear rigid rotor driven by a rectangular
//! electric pulse.
//!
//! Everything runs in reduced units: the pulse duration `sigma` is measured in
//! units of `hbar / B`, the coupling `eta = mu * eps / B`, and the pulse strength
//! `P = eta * sigma`. Time inside the pulse is rescaled to `tau` in `[0, 1]`, so
//! the rotor obeys
//!
//! ```text
//! i dC/dtau = (sigma J^2 - P cos(theta)) C
//! ```
//!
//! in the truncated free-rotor basis `{|J, 0>}`.
//!
//! The crate is organised as
//!
//! - [`rotor`]: pulse parameters, the truncated basis, wavepackets and operator
//!   matrices,
//! - [`propagator`]: exact spectral propagation, an RK4 cross-check, the
//!   impulsive (delta-kick) limit and basis convergence,
//! - [`observables`]: kinetic energy, orientation, alignment, populations,
//! - [`analytic`]: the closed-form two-level model and its zero loci,
//! - [`sweep`]: parallel `(P, sigma)` sweeps with drop and minimum detection,
//! - [`io`]: CSV/JSON records and SVG figures,
//! - [`validation`]: the end-to-end reproduction checks used by `rotor validate`.

pub mod analytic;
mod error;
pub mod io;
pub mod observables;
pub mod propagator;
pub mod rotor;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
