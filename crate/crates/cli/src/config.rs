//! Run configuration. Every struct rejects unknown keys.

use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Propagate,
    Scatter,
    SpdcJsa,
    SpdcPosition,
    Schmidt,
    Selftest,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Propagate => "propagate",
            Kind::Scatter => "scatter",
            Kind::SpdcJsa => "spdc-jsa",
            Kind::SpdcPosition => "spdc-position",
            Kind::Schmidt => "schmidt",
            Kind::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    /// Directory receiving all outputs and the manifest.
    pub output_dir: PathBuf,
    /// Worker threads; overrides the THREADS environment variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spdc: Option<SpdcConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selftest: Option<SelftestConfig>,
}

/// Internal units are natural (`c = ε₀ = μ₀ = ħ = 1`); this fixes the metre
/// value of one internal length unit for the SI columns in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length_scale_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: [usize; 3],
    pub len: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumConfig {
    Vacuum {},
    Uniform {
        chi_e: f64,
        #[serde(default)]
        chi_m: f64,
    },
    /// Gaussian bump `χ exp(−|r − c|²/2σ²)`.
    GaussianBump {
        chi_e: f64,
        #[serde(default)]
        chi_m: f64,
        center: [f64; 3],
        sigma: f64,
    },
    /// Slab `z_min ≤ z < z_max`.
    Slab {
        chi_e: f64,
        #[serde(default)]
        chi_m: f64,
        z_min: f64,
        z_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero {},
    /// `E = x̂ A cos(kz)`, `B = ŷ nA cos(kz)`, with `k = 2π mode / L_z`.
    PlaneWave {
        mode: i64,
        amplitude: f64,
        #[serde(default = "one")]
        index: f64,
    },
    /// x-polarized packet moving along +z, Gaussian in z and y, with a
    /// divergence-free displacement field.
    Packet {
        z0: f64,
        sigma: f64,
        k0: f64,
        waist: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    Rk4,
    Taylor,
    Helicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Simulated duration; the step is fitted to `cfl_fraction` of the CFL
    /// bound unless `dt` is given.
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "half")]
    pub cfl_fraction: f64,
    #[serde(default = "rk4")]
    pub integrator: IntegratorName,
    #[serde(default = "twelve")]
    pub taylor_order: usize,
    #[serde(default = "one_usize")]
    pub snapshot_every: usize,
    /// Also write field snapshots at every recorded frame.
    #[serde(default)]
    pub write_snapshots: bool,
}

fn half() -> f64 {
    0.5
}

fn rk4() -> IntegratorName {
    IntegratorName::Rk4
}

fn twelve() -> usize {
    12
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    /// Background susceptibilities `(χ_e, χ_m)`.
    pub background: [f64; 2],
    pub perturbation: PerturbationConfig,
    pub incident: IncidentConfig,
    #[serde(default)]
    pub divergence: DivergenceName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenConfig>,
    pub observation: ObservationConfig,
    /// Observation time.
    #[serde(default)]
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// Super-Gaussian ball `Δχ exp(−(r/a)⁴)`.
    Ball {
        center: [f64; 3],
        radius: f64,
        d_chi_e: f64,
        #[serde(default)]
        d_chi_m: f64,
    },
    /// Axis-aligned box with smooth edges of the given width.
    Box {
        min: [f64; 3],
        max: [f64; 3],
        edge: f64,
        d_chi_e: f64,
        #[serde(default)]
        d_chi_m: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentConfig {
    /// Harmonic plane wave `E₀ e^{i(k·r − ωt)}` in the background medium;
    /// `ω = |k|/n`.
    PlaneWave { k: [f64; 3], polarization: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceName {
    #[default]
    GaussLaw,
    FromField,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub k_max: f64,
    pub apodization: f64,
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationConfig {
    Points {
        points: Vec<[f64; 3]>,
    },
    FarField {
        center: [f64; 3],
        radius: f64,
        directions: Vec<[f64; 3]>,
    },
    /// Directions on a (θ, φ) grid, θ measured from +z.
    FarFieldGrid {
        center: [f64; 3],
        radius: f64,
        n_theta: usize,
        n_phi: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SpdcConfig {
    pub pump: PumpConfig,
    pub crystal: CrystalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<AxesConfig>,
    #[serde(default)]
    pub filters: [Option<FilterConfig>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub omega0: f64,
    /// Spectral width; absent for a monochromatic pump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_omega: Option<f64>,
    /// Gaussian waist; absent for a plane pump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    #[serde(default = "one")]
    pub chi2: f64,
    pub length: f64,
    pub n: f64,
    /// Transverse size `[D_x, D_y]`; absent for an unbounded crystal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<[f64; 2]>,
    /// Interaction time `T`; absent for an unlimited interaction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AxesConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub q_max: f64,
    pub n_q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterConfig {
    Hard { center: f64, width: f64 },
    Gaussian { center: f64, width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PositionConfig {
    /// Detector frequencies `(ω₁, ω₂)`.
    pub frequencies: [f64; 2],
    pub detector1: [f64; 3],
    pub detector2: DetectorScan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorScan {
    Points {
        points: Vec<[f64; 3]>,
    },
    /// Arc in the x–z plane at fixed radius, angle from +z.
    Arc {
        radius: f64,
        theta_min: f64,
        theta_max: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub order: usize,
    pub panels_per_cycle: f64,
    pub min_panels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default)]
    pub full: bool,
    #[serde(default)]
    pub fault: FaultName,
    /// Restrict to these criteria (1 to 12); all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum FaultName {
    #[default]
    None,
    FlipWorkSign,
}

impl ScenarioConfig {
    /// Checks that the blocks required by `kind` are present and no others.
    pub fn check_blocks(&self) -> Result<(), String> {
        let present = [
            ("grid", self.grid.is_some()),
            ("medium", self.medium.is_some()),
            ("initial", self.initial.is_some()),
            ("evolution", self.evolution.is_some()),
            ("scatter", self.scatter.is_some()),
            ("spdc", self.spdc.is_some()),
            ("position", self.position.is_some()),
            ("selftest", self.selftest.is_some()),
        ];
        let (required, optional): (&[&str], &[&str]) = match self.kind {
            Kind::Propagate => (&["grid", "medium", "initial", "evolution"], &[]),
            Kind::Scatter => (&["grid", "scatter"], &[]),
            Kind::SpdcJsa | Kind::Schmidt => (&["spdc"], &[]),
            Kind::SpdcPosition => (&["spdc", "position"], &[]),
            Kind::Selftest => (&[], &["selftest"]),
        };
        for (name, has) in present {
            if required.contains(&name) && !has {
                return Err(format!(
                    "kind {} requires a `{name}` block",
                    self.kind.name()
                ));
            }
            if has && !required.contains(&name) && !optional.contains(&name) {
                return Err(format!(
                    "block `{name}` is not used by kind {}",
                    self.kind.name()
                ));
            }
        }
        if matches!(self.kind, Kind::SpdcJsa | Kind::Schmidt)
            && self.spdc.is_some_and(|s| s.axes.is_none())
        {
            return Err(format!("kind {} requires `spdc.axes`", self.kind.name()));
        }
        if let Some(c) = self.selftest.as_ref().and_then(|s| s.criteria.as_ref()) {
            if let Some(bad) = c.iter().find(|&&n| !(1..=12).contains(&n)) {
                return Err(format!("selftest criterion {bad} outside 1..=12"));
            }
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        if let Some(u) = self.units {
            if !(u.length_scale_m.is_finite() && u.length_scale_m > 0.0) {
                return Err("units.length_scale_m must be positive".into());
            }
        }
        Ok(())
    }
}
