//! Field containers, units, helicity projection, and the Riemann–Silberstein
//! photon wave function.

mod containers;
mod grid;
mod rs;
pub(crate) use rs::rs_compose_quiet;
mod units;

pub use containers::{
    ComplexVectorField, Finite, MediumMap, RSState, RealFieldPair, RealVectorField, ScalarField,
    VectorField,
};
pub use grid::Grid3;
pub use rs::{
    apply_sigma, energy_density, helicity_project, material_energy_density,
    material_energy_density_amplitudes, poynting_current, rs_compose, rs_decompose, HelicityParts,
};
pub use units::{Quantity, UnitSystem, SI_C, SI_EPSILON0, SI_HBAR, SI_MU0};
