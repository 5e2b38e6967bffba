//! Numerical engine for the photon wave function in linear, non-absorptive
//! media.
//!
//! The crate is organised around five computational modules:
//!
//! * [`fields`]: grids, field containers, helicity projection and the
//!   Riemann–Silberstein composition `Ψ± = √(ε/2)E± ± i√(1/2μ)B±`.
//! * [`propagator`]: pseudo-spectral time stepping of `(E, B)` in static
//!   linear media, the vacuum helicity stepper, and energy-continuity audits.
//! * [`modes`]: plane-wave mode amplitudes of the dressed photon and
//!   synthesis of one- and two-photon wave functions.
//! * [`scattering`]: retarded Green functions (shell and spectral forms) and
//!   first-order Born scattering.
//! * [`spdc`]: type-I down-conversion biphoton amplitudes, phase matching and
//!   Schmidt decomposition.
//!
//! All quantities are in natural units `c = ε₀ = μ₀ = ħ = 1`; see
//! [`fields::UnitSystem`] for conversion to SI.

pub mod error;
pub mod fields;
pub mod io;
pub mod modes;
pub mod propagator;
pub mod quadrature;
pub mod scattering;
pub mod selftest;
pub mod spdc;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
