//! Pump spectra, crystal geometry, detector filters, and the closed-form
//! factors they contribute to the biphoton amplitude.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::{sinc, CompositeRule};
use crate::{Error, Result, C64};

/// Spectral envelope of the pump about `omega0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Temporal {
    Monochromatic,
    /// Amplitude `exp(−(ω − ω₀)²/2σ²)`.
    Gaussian {
        sigma_omega: f64,
    },
}

/// Transverse profile of the pump in position space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Plane,
    /// Amplitude `exp(−x²/w²)`.
    Gaussian {
        waist: f64,
    },
}

/// Tabulated `Ẽ₃(ω, q)` on a uniform grid, row-major in `ω` then `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GriddedPump {
    pub omegas: Vec<f64>,
    pub qs: Vec<f64>,
    pub values: Vec<C64>,
}

/// Extraordinary-polarized pump propagating along `ẑ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PumpSpectrum {
    Analytic {
        omega0: f64,
        temporal: Temporal,
        transverse: Profile,
    },
    Gridded {
        omega0: f64,
        table: GriddedPump,
    },
}

impl PumpSpectrum {
    pub fn monochromatic_plane(omega0: f64) -> Self {
        PumpSpectrum::Analytic {
            omega0,
            temporal: Temporal::Monochromatic,
            transverse: Profile::Plane,
        }
    }

    pub fn gaussian(omega0: f64, sigma_omega: f64, waist: f64) -> Self {
        PumpSpectrum::Analytic {
            omega0,
            temporal: Temporal::Gaussian { sigma_omega },
            transverse: Profile::Gaussian { waist },
        }
    }

    pub fn omega0(&self) -> f64 {
        match self {
            PumpSpectrum::Analytic { omega0, .. } | PumpSpectrum::Gridded { omega0, .. } => *omega0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w0 = self.omega0();
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pump centre frequency {w0}"
            )));
        }
        match self {
            PumpSpectrum::Analytic {
                temporal,
                transverse,
                ..
            } => {
                if let Temporal::Gaussian { sigma_omega } = temporal {
                    if !(sigma_omega.is_finite() && *sigma_omega > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "pump bandwidth {sigma_omega}"
                        )));
                    }
                }
                if let Profile::Gaussian { waist } = transverse {
                    if !(waist.is_finite() && *waist > 0.0) {
                        return Err(Error::InvalidParameter(format!("pump waist {waist}")));
                    }
                }
            }
            PumpSpectrum::Gridded { table, .. } => {
                let (nw, nq) = (table.omegas.len(), table.qs.len());
                if nw < 2 || nq < 2 || table.values.len() != nw * nq {
                    return Err(Error::InvalidParameter(format!(
                        "gridded pump needs ≥2×2 samples and {} values, got {}",
                        nw * nq,
                        table.values.len()
                    )));
                }
                for axis in [&table.omegas, &table.qs] {
                    if !uniform(axis) {
                        return Err(Error::InvalidParameter(
                            "gridded pump axes must be uniform and increasing".into(),
                        ));
                    }
                }
                if let Some(i) = table
                    .values
                    .iter()
                    .position(|v| !(v.re.is_finite() && v.im.is_finite()))
                {
                    return Err(Error::NonFinite {
                        what: "pump spectrum",
                        index: i,
                    });
                }
            }
        }
        Ok(())
    }

    /// Largest transverse wavevector carried by the pump, for paraxial checks.
    pub fn q_extent(&self) -> f64 {
        match self {
            PumpSpectrum::Analytic {
                transverse: Profile::Plane,
                ..
            } => 0.0,
            PumpSpectrum::Analytic {
                transverse: Profile::Gaussian { waist },
                ..
            } => 6.0 / waist,
            PumpSpectrum::Gridded { table, .. } => {
                table.qs.iter().fold(0.0f64, |m, q| m.max(q.abs()))
            }
        }
    }

    /// Spectral weight of the pump at `omega3` as seen through the
    /// interaction window, used for position-space amplitudes.
    pub fn spectral_weight(&self, omega3: f64, window: f64) -> Result<f64> {
        match self {
            PumpSpectrum::Analytic {
                omega0, temporal, ..
            } => Ok(match temporal {
                Temporal::Monochromatic => {
                    if window.is_infinite() {
                        return Err(Error::GridTooCoarse(
                            "monochromatic pump needs a finite interaction window".into(),
                        ));
                    }
                    window_factor(omega3 - omega0, window) / window
                }
                Temporal::Gaussian { sigma_omega } => {
                    (-(omega3 - omega0).powi(2) / (2.0 * sigma_omega * sigma_omega)).exp()
                }
            }),
            PumpSpectrum::Gridded { .. } => Err(Error::InvalidParameter(
                "position-space amplitudes need an analytic pump".into(),
            )),
        }
    }

    /// Transverse amplitude of the pump at `(x, y)`.
    pub fn profile(&self, x: f64, y: f64) -> f64 {
        match self {
            PumpSpectrum::Analytic {
                transverse: Profile::Gaussian { waist },
                ..
            } => (-(x * x + y * y) / (waist * waist)).exp(),
            _ => 1.0,
        }
    }

    /// Moments `M_j(ωs, qs) = ∫dω₃∫dq₃ ω₃ʲ Ẽ₃ W_T(ω₃ − ωs) S_D(q₃ − qs)`,
    /// `j = 0, 1, 2`. `dq` sets the discrete delta when the pump and the
    /// crystal are both transversely unbounded.
    pub fn moments(
        &self,
        omega_s: f64,
        q_s: f64,
        crystal: &CrystalSpec,
        dq: f64,
    ) -> Result<[C64; 3]> {
        let t = crystal.window;
        match self {
            PumpSpectrum::Analytic {
                omega0,
                temporal,
                transverse,
            } => {
                let x = transverse_factor(transverse, crystal, q_s, dq);
                let m: [f64; 3] = match temporal {
                    Temporal::Monochromatic => {
                        if t.is_infinite() {
                            return Err(Error::GridTooCoarse(
                                "monochromatic pump with unbounded window has zero bandwidth"
                                    .into(),
                            ));
                        }
                        let w = window_factor(omega0 - omega_s, t);
                        [w, w * omega0, w * omega0 * omega0]
                    }
                    Temporal::Gaussian { sigma_omega } => {
                        let s2 = sigma_omega * sigma_omega;
                        if t.is_infinite() {
                            let e = (-(omega_s - omega0).powi(2) / (2.0 * s2)).exp();
                            [e, e * omega_s, e * omega_s * omega_s]
                        } else {
                            // product of two Gaussians in ω₃
                            let tau2 = (t / (2.0 * PI).sqrt()).powi(2);
                            let prec = 1.0 / s2 + tau2;
                            let mean = (omega0 / s2 + omega_s * tau2) / prec;
                            let m0 = t
                                * (2.0 * PI / prec).sqrt()
                                * (-(omega0 - omega_s).powi(2) / (2.0 * (s2 + 1.0 / tau2))).exp();
                            [m0, m0 * mean, m0 * (mean * mean + 1.0 / prec)]
                        }
                    }
                };
                Ok(m.map(|v| x * v))
            }
            PumpSpectrum::Gridded { table, .. } => {
                Ok(gridded_moments(table, omega_s, q_s, crystal))
            }
        }
    }
}

fn uniform(axis: &[f64]) -> bool {
    if axis.len() < 2 {
        return false;
    }
    let d = axis[1] - axis[0];
    d > 0.0
        && axis
            .windows(2)
            .all(|w| ((w[1] - w[0]) - d).abs() <= 1e-9 * d.abs())
}

/// Fourier transform of the Gaussian interaction window of area `T`:
/// `T exp(−Δω²τ²/2)`, `τ = T/√(2π)`.
pub fn window_factor(d_omega: f64, t: f64) -> f64 {
    let tau = t / (2.0 * PI).sqrt();
    t * (-0.5 * d_omega * d_omega * tau * tau).exp()
}

/// `∫ a(x) e^{−i qs x} dx` over the crystal's transverse extent along `x`.
fn transverse_factor(profile: &Profile, crystal: &CrystalSpec, q_s: f64, dq: f64) -> C64 {
    let v = match (profile, crystal.aperture) {
        (Profile::Plane, Aperture::Infinite) => {
            if q_s.abs() < 0.5 * dq {
                1.0 / dq
            } else {
                0.0
            }
        }
        (Profile::Plane, Aperture::Finite { width_x, .. }) => width_x * sinc(q_s * width_x / 2.0),
        (Profile::Gaussian { waist }, Aperture::Infinite) => {
            waist * PI.sqrt() * (-q_s * q_s * waist * waist / 4.0).exp()
        }
        (Profile::Gaussian { waist }, Aperture::Finite { width_x, .. }) => {
            let half = 0.5 * width_x.min(12.0 * waist);
            let panels = ((q_s.abs() * half / PI).ceil() as usize + 4).max(8);
            CompositeRule::new(-half, half, panels, 16)
                .integrate(|x| (-x * x / (waist * waist)).exp() * (q_s * x).cos())
        }
    };
    C64::new(v, 0.0)
}

fn gridded_moments(table: &GriddedPump, omega_s: f64, q_s: f64, crystal: &CrystalSpec) -> [C64; 3] {
    let nq = table.qs.len();
    let dw = table.omegas[1] - table.omegas[0];
    let dqt = table.qs[1] - table.qs[0];
    // transverse convolution at one tabulated frequency row
    let row = |i: usize| -> C64 {
        let vals = &table.values[i * nq..(i + 1) * nq];
        match crystal.aperture {
            Aperture::Infinite => interp(&table.qs, vals, q_s),
            Aperture::Finite { width_x, .. } => table
                .qs
                .iter()
                .zip(vals)
                .map(|(q, v)| v * (dqt * width_x * sinc((q - q_s) * width_x / 2.0)))
                .sum(),
        }
    };
    if crystal.window.is_infinite() {
        let column: Vec<C64> = (0..table.omegas.len()).map(row).collect();
        let v = interp(&table.omegas, &column, omega_s);
        return [v, v * omega_s, v * omega_s * omega_s];
    }
    let mut m = [C64::new(0.0, 0.0); 3];
    for (i, &w3) in table.omegas.iter().enumerate() {
        let base = row(i) * (dw * window_factor(w3 - omega_s, crystal.window));
        m[0] += base;
        m[1] += base * w3;
        m[2] += base * w3 * w3;
    }
    m
}

/// Linear interpolation on a uniform axis, zero outside.
fn interp(axis: &[f64], vals: &[C64], x: f64) -> C64 {
    let d = axis[1] - axis[0];
    let s = (x - axis[0]) / d;
    if s < -1e-9 || s > (axis.len() - 1) as f64 + 1e-9 {
        return C64::new(0.0, 0.0);
    }
    let s = s.clamp(0.0, (axis.len() - 1) as f64);
    let i = (s.floor() as usize).min(axis.len() - 2);
    let w = s - i as f64;
    vals[i] * (1.0 - w) + vals[i + 1] * w
}

/// Transverse extent of the nonlinear crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Aperture {
    Infinite,
    Finite { width_x: f64, width_y: f64 },
}

/// Slab crystal centred at the origin, thickness `length` along `ẑ`,
/// immersed in a medium of the same linear index `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSpec {
    /// `χ′⁽²⁾ = χ⁽²⁾_ooe + χ⁽²⁾_oeo`.
    pub chi2: f64,
    pub length: f64,
    pub aperture: Aperture,
    pub n: f64,
    /// Area `T` of the interaction window; `f64::INFINITY` for the limit.
    pub window: f64,
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "crystal length {}",
                self.length
            )));
        }
        if !self.chi2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "nonlinear coefficient {}",
                self.chi2
            )));
        }
        if !(self.n.is_finite() && self.n > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "crystal index {} must exceed 1",
                self.n
            )));
        }
        if !(self.window > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interaction window {}",
                self.window
            )));
        }
        if let Aperture::Finite { width_x, width_y } = self.aperture {
            if !(width_x.is_finite() && width_x > 0.0 && width_y.is_finite() && width_y > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "crystal aperture {width_x} × {width_y}"
                )));
            }
        }
        Ok(())
    }

    /// Closed box membership, boundary included.
    pub fn contains(&self, r: [f64; 3]) -> bool {
        let in_z = r[2].abs() <= 0.5 * self.length;
        match self.aperture {
            Aperture::Infinite => in_z,
            Aperture::Finite { width_x, width_y } => {
                in_z && r[0].abs() <= 0.5 * width_x && r[1].abs() <= 0.5 * width_y
            }
        }
    }
}

/// Detector passband applied to one photon's frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Filter {
    Hard {
        center: f64,
        width: f64,
    },
    /// Amplitude transmission `exp(−(ω − c)²/2w²)`.
    Gaussian {
        center: f64,
        width: f64,
    },
}

impl Filter {
    pub fn transmission(&self, omega: f64) -> f64 {
        match *self {
            Filter::Hard { center, width } => {
                if (omega - center).abs() <= 0.5 * width {
                    1.0
                } else {
                    0.0
                }
            }
            Filter::Gaussian { center, width } => {
                (-(omega - center).powi(2) / (2.0 * width * width)).exp()
            }
        }
    }
}

/// `∫_{−L/2}^{L/2} e^{iΔk z} dz = L sinc(ΔkL/2)`.
pub fn phase_matching_factor(dk_z: f64, length: f64) -> Result<C64> {
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("crystal length {length}")));
    }
    Ok(C64::new(length * sinc(dk_z * length / 2.0), 0.0))
}

/// Longitudinal wavevector `√((nω)² − q²)`, `None` when evanescent.
pub fn k_z(n: f64, omega: f64, q: f64) -> Option<f64> {
    let k2 = (n * omega).powi(2) - q * q;
    (k2 >= 0.0).then(|| k2.sqrt())
}
