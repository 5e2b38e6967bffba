//! Retarded Green functions of the medium wave equation and the first-order
//! (Born) scattered field of a localized perturbation.

pub mod born;
pub mod green;

pub use born::{
    born_scatter, source_term_b, source_term_e, DivergenceModel, FieldHistory, History,
    Observation, Perturbation, ScatterOutput, SourceTerm,
};
pub use green::{
    green_retarded, green_spectral, green_spectral_lattice, GaussianPulse, GreenSpec, KLattice,
    RetardedKernel,
};
