//! Type-I parametric down-conversion in a crystal immersed in an
//! index-matched medium: pump models, the joint spectral amplitude with
//! finite interaction time and crystal size, phase matching, Schmidt
//! decomposition, the field commutator kernel, and the position-space
//! biphoton amplitude.

pub mod commutator;
pub mod jsa;
pub mod position;
pub mod pump;

pub use commutator::{commutator_from_green, commutator_kernel, commutator_kernel_continuum};
pub use jsa::{
    jsa_amplitude, marginal_spectrum, schmidt, separable_jsa, spdc_jsa, substitution_holds,
    JsaAxes, JsaGrid, Photon, SchmidtResult,
};
pub use position::{
    biphoton_position, nonlinear_source, pair_kernel, FieldSample, PositionQuadrature,
};
pub use pump::{
    k_z, phase_matching_factor, window_factor, Aperture, CrystalSpec, Filter, GriddedPump, Profile,
    PumpSpectrum, Temporal,
};
