use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// SI speed of light in vacuum (m/s).
pub const SI_C: f64 = 299_792_458.0;
/// SI vacuum permittivity (F/m).
pub const SI_EPSILON0: f64 = 8.854_187_812_8e-12;
/// SI vacuum permeability, fixed by `c² = 1/(ε₀μ₀)` (H/m).
pub const SI_MU0: f64 = 1.0 / (SI_EPSILON0 * SI_C * SI_C);
/// SI reduced Planck constant (J s).
pub const SI_HBAR: f64 = 1.054_571_817e-34;

/// Physical dimension of a quantity crossing the SI boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Length,
    Time,
    AngularFrequency,
    Wavevector,
    Velocity,
    Energy,
    EnergyDensity,
    ElectricField,
    MagneticField,
    Dimensionless,
}

impl Quantity {
    pub fn si_unit(self) -> &'static str {
        match self {
            Quantity::Length => "m",
            Quantity::Time => "s",
            Quantity::AngularFrequency => "rad/s",
            Quantity::Wavevector => "rad/m",
            Quantity::Velocity => "m/s",
            Quantity::Energy => "J",
            Quantity::EnergyDensity => "J/m^3",
            Quantity::ElectricField => "V/m",
            Quantity::MagneticField => "T",
            Quantity::Dimensionless => "1",
        }
    }
}

/// Natural units with `c = ε₀ = μ₀ = ħ = 1` and a user-chosen length unit.
///
/// Every other internal unit follows from the length scale `ℓ`: time `ℓ/c`,
/// energy `ħc/ℓ`, energy density `ħc/ℓ⁴`, and fields from `ε₀E²` and
/// `B²/μ₀` being energy densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSystem {
    /// Metres per internal length unit.
    pub length_scale: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { length_scale: 1e-6 }
    }
}

impl UnitSystem {
    pub const C: f64 = 1.0;
    pub const EPSILON0: f64 = 1.0;
    pub const MU0: f64 = 1.0;
    pub const HBAR: f64 = 1.0;

    pub fn new(length_scale: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "length_scale must be positive and finite, got {length_scale}"
            )));
        }
        Ok(Self { length_scale })
    }

    /// SI value of one internal unit of `q`.
    pub fn si_per_internal(&self, q: Quantity) -> f64 {
        let l = self.length_scale;
        let energy_density = SI_HBAR * SI_C / l.powi(4);
        match q {
            Quantity::Length => l,
            Quantity::Time => l / SI_C,
            Quantity::AngularFrequency => SI_C / l,
            Quantity::Wavevector => 1.0 / l,
            Quantity::Velocity => SI_C,
            Quantity::Energy => SI_HBAR * SI_C / l,
            Quantity::EnergyDensity => energy_density,
            Quantity::ElectricField => (energy_density / SI_EPSILON0).sqrt(),
            Quantity::MagneticField => (energy_density * SI_MU0).sqrt(),
            Quantity::Dimensionless => 1.0,
        }
    }

    pub fn to_si(&self, value: f64, q: Quantity) -> f64 {
        value * self.si_per_internal(q)
    }

    pub fn from_si(&self, value: f64, q: Quantity) -> f64 {
        value / self.si_per_internal(q)
    }
}
