//! Joint spectral amplitude on a product `(ω₁, q₁; ω₂, q₂)` grid, with one
//! transverse wavevector component per photon.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pump::{k_z, phase_matching_factor, CrystalSpec, Filter, PumpSpectrum};
use crate::{Error, Result, C64};

/// Hard paraxial limit on `|q|/k`.
pub const PARAXIAL_LIMIT: f64 = 0.2;
/// Above this `|q|/k` a warning is logged.
pub const PARAXIAL_WARN: f64 = 0.1;
/// Minimum samples across the pump FWHM.
pub const MIN_SAMPLES_PER_FWHM: usize = 4;
pub const NORM_TOL: f64 = 1e-10;

/// Uniform frequency and transverse-wavevector axes shared by both photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsaAxes {
    pub omega: Vec<f64>,
    pub q: Vec<f64>,
    pub d_omega: f64,
    pub dq: f64,
}

impl JsaAxes {
    /// `n_omega` points on `[omega_min, omega_max]` and `n_q` points on
    /// `[−q_max, q_max]`. A single `q` point means the collinear slice `q = 0`
    /// with unit measure.
    pub fn new(
        omega_min: f64,
        omega_max: f64,
        n_omega: usize,
        q_max: f64,
        n_q: usize,
    ) -> Result<Self> {
        if n_omega < 2 || !(omega_min > 0.0 && omega_max > omega_min) {
            return Err(Error::InvalidParameter(format!(
                "frequency axis [{omega_min}, {omega_max}] with {n_omega} points"
            )));
        }
        if n_q == 0 || (n_q > 1 && !(q_max > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "transverse axis ±{q_max} with {n_q} points"
            )));
        }
        let d_omega = (omega_max - omega_min) / (n_omega - 1) as f64;
        let omega = (0..n_omega)
            .map(|i| omega_min + i as f64 * d_omega)
            .collect();
        let (q, dq) = if n_q == 1 {
            (vec![0.0], 1.0)
        } else {
            let dq = 2.0 * q_max / (n_q - 1) as f64;
            ((0..n_q).map(|i| -q_max + i as f64 * dq).collect(), dq)
        };
        Ok(Self {
            omega,
            q,
            d_omega,
            dq,
        })
    }

    /// Same ranges with every interval split in two.
    pub fn refined(&self) -> Self {
        let n_q = if self.q.len() == 1 {
            1
        } else {
            2 * self.q.len() - 1
        };
        let q_max = self.q.last().copied().unwrap_or(0.0);
        Self::new(
            self.omega[0],
            *self.omega.last().unwrap(),
            2 * self.omega.len() - 1,
            q_max,
            n_q,
        )
        .expect("refinement of valid axes")
    }

    /// Number of `(ω, q)` states per photon.
    pub fn states(&self) -> usize {
        self.omega.len() * self.q.len()
    }

    /// Integration weight of one `(ω, q)` cell.
    pub fn cell(&self) -> f64 {
        self.d_omega * self.dq
    }

    pub fn state(&self, s: usize) -> (f64, f64) {
        let nq = self.q.len();
        (self.omega[s / nq], self.q[s % nq])
    }
}

/// Symmetrized, unit-norm two-photon amplitude. `values[a * states + b]`
/// holds photon 1 in state `a` and photon 2 in state `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaGrid {
    pub axes: JsaAxes,
    pub values: Vec<C64>,
    /// Grid points zeroed because some wavevector was evanescent.
    pub evanescent: usize,
}

impl JsaGrid {
    /// Symmetrizes `f` by exchange and normalizes.
    pub fn from_fn(axes: JsaAxes, f: impl Fn(f64, f64, f64, f64) -> C64 + Sync) -> Result<Self> {
        let s = axes.states();
        let raw: Vec<C64> = (0..s * s)
            .into_par_iter()
            .map(|idx| {
                let (w1, q1) = axes.state(idx / s);
                let (w2, q2) = axes.state(idx % s);
                f(w1, q1, w2, q2)
            })
            .collect();
        Self::from_raw(axes, raw, 0)
    }

    fn from_raw(axes: JsaAxes, raw: Vec<C64>, evanescent: usize) -> Result<Self> {
        let s = axes.states();
        let mut values = vec![C64::new(0.0, 0.0); s * s];
        for a in 0..s {
            for b in 0..s {
                values[a * s + b] = raw[a * s + b] + raw[b * s + a];
            }
        }
        let mut g = Self {
            axes,
            values,
            evanescent,
        };
        let n = g.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm: n });
        }
        let inv = 1.0 / n.sqrt();
        g.values.iter_mut().for_each(|v| *v *= inv);
        Ok(g)
    }

    pub fn states(&self) -> usize {
        self.axes.states()
    }

    pub fn measure(&self) -> f64 {
        self.axes.cell().powi(2)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(())
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.values[a * self.states() + b]
    }

    /// Amplitude with the photon labels exchanged.
    pub fn swapped(&self) -> Self {
        let s = self.states();
        let mut out = self.clone();
        for a in 0..s {
            for b in 0..s {
                out.values[a * s + b] = self.values[b * s + a];
            }
        }
        out
    }

    /// `L²` distance between two unit-norm amplitudes on the same axes, after
    /// removing the global phase.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.axes != other.axes {
            return Err(Error::GridMismatch("JSA axes differ".into()));
        }
        let overlap: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.measure();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let d: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a * phase - b).norm_sqr())
            .sum();
        Ok((d * self.measure()).sqrt())
    }

    /// Fraction of `|Ψ|²` with `|ω₁ + ω₂ − ω₀| ≤ half_width`.
    pub fn mass_near_sum(&self, omega0: f64, half_width: f64) -> f64 {
        self.mass_where(|w1, _, w2, _| (w1 + w2 - omega0).abs() <= half_width)
    }

    pub fn mass_where(&self, pred: impl Fn(f64, f64, f64, f64) -> bool) -> f64 {
        let s = self.states();
        let mut m = 0.0;
        for a in 0..s {
            let (w1, q1) = self.axes.state(a);
            for b in 0..s {
                let (w2, q2) = self.axes.state(b);
                if pred(w1, q1, w2, q2) {
                    m += self.values[a * s + b].norm_sqr();
                }
            }
        }
        m * self.measure()
    }

    /// Distribution of `|Ψ|²` over a function of the two states, binned on
    /// `bins` (centres, uniform spacing). Returns the mass per bin.
    pub fn histogram(&self, bins: &[f64], key: impl Fn(f64, f64, f64, f64) -> f64) -> Vec<f64> {
        let s = self.states();
        let step = if bins.len() > 1 {
            bins[1] - bins[0]
        } else {
            1.0
        };
        let mut h = vec![0.0; bins.len()];
        for a in 0..s {
            let (w1, q1) = self.axes.state(a);
            for b in 0..s {
                let (w2, q2) = self.axes.state(b);
                let x = ((key(w1, q1, w2, q2) - bins[0]) / step).round();
                if x >= 0.0 && (x as usize) < bins.len() {
                    h[x as usize] += self.values[a * s + b].norm_sqr();
                }
            }
        }
        h.iter_mut().for_each(|v| *v *= self.measure());
        h
    }

    /// Matrix with rows indexed by photon 1 and unit Frobenius norm.
    pub fn matrix(&self) -> DMatrix<C64> {
        let s = self.states();
        let c = self.axes.cell();
        DMatrix::from_fn(s, s, |a, b| self.values[a * s + b] * c)
    }
}

/// Unsymmetrized amplitude for photon 1 in `(ω₁, q₁)`, photon 2 in
/// `(ω₂, q₂)`, before filters:
/// `√(ω₁ω₂) · E(ω₁, ω₂) · Φ_L(Δk_z)` where `E` carries the pump, the
/// interaction window and the transverse crystal factor, and
/// `Φ_L` is evaluated at the window centre `ω₃ = ω₁ + ω₂`, `q₃ = q₁ + q₂`.
/// Returns `None` when a wavevector is evanescent.
pub fn jsa_amplitude(
    pump: &PumpSpectrum,
    crystal: &CrystalSpec,
    (w1, q1): (f64, f64),
    (w2, q2): (f64, f64),
    dq: f64,
) -> Result<Option<C64>> {
    let m = pump.moments(w1 + w2, q1 + q2, crystal, dq)?;
    let energy = if substitution_holds(crystal.window, w2) {
        m[0]
    } else {
        // exact (ω₃ − ω₁)² weight relative to ω₂²
        (m[2] - m[1] * (2.0 * w1) + m[0] * (w1 * w1)) / (w2 * w2)
    };
    let (Some(k1), Some(k2), Some(k3)) = (
        k_z(crystal.n, w1, q1),
        k_z(crystal.n, w2, q2),
        k_z(crystal.n, w1 + w2, q1 + q2),
    ) else {
        return Ok(None);
    };
    let phi = phase_matching_factor(k3 - k1 - k2, crystal.length)?;
    Ok(Some(energy * phi * (w1 * w2).sqrt()))
}

/// `(ω₃ − ω₁)² → ω₂²` is used once the window is narrower than 1% of `ω₂`.
pub fn substitution_holds(window: f64, w2: f64) -> bool {
    window.is_infinite() || (2.0 * PI).sqrt() / window < 0.01 * w2
}

/// Assembles the symmetrized, normalized JSA on `axes`.
pub fn spdc_jsa(
    pump: &PumpSpectrum,
    crystal: &CrystalSpec,
    axes: &JsaAxes,
    filters: [Option<Filter>; 2],
) -> Result<JsaGrid> {
    pump.validate()?;
    crystal.validate()?;
    check_paraxial(crystal.n, axes)?;
    check_resolution(pump, crystal, axes)?;
    let s = axes.states();
    let rows: Vec<Result<(Vec<C64>, usize)>> = (0..s)
        .into_par_iter()
        .map(|a| {
            let (w1, q1) = axes.state(a);
            let f1 = filters[0].map_or(1.0, |f| f.transmission(w1));
            let mut row = vec![C64::new(0.0, 0.0); s];
            let mut evan = 0;
            for (b, v) in row.iter_mut().enumerate() {
                let (w2, q2) = axes.state(b);
                let f2 = filters[1].map_or(1.0, |f| f.transmission(w2));
                if f1 * f2 == 0.0 {
                    continue;
                }
                match jsa_amplitude(pump, crystal, (w1, q1), (w2, q2), axes.dq)? {
                    Some(x) => *v = x * (f1 * f2),
                    None => evan += 1,
                }
            }
            Ok((row, evan))
        })
        .collect();
    let mut raw = Vec::with_capacity(s * s);
    let mut evanescent = 0;
    for r in rows {
        let (row, e) = r?;
        raw.extend(row);
        evanescent += e;
    }
    if evanescent > 0 {
        warn!("{evanescent} JSA samples are evanescent and were set to zero");
    }
    JsaGrid::from_raw(axes.clone(), raw, evanescent)
}

/// Product amplitude `√(ω₁ω₂) g(ω₁, q₁) g(ω₂, q₂)`, separable by construction.
pub fn separable_jsa(axes: &JsaAxes, g: impl Fn(f64, f64) -> C64 + Sync) -> Result<JsaGrid> {
    JsaGrid::from_fn(axes.clone(), |w1, q1, w2, q2| {
        g(w1, q1) * g(w2, q2) * (w1 * w2).sqrt()
    })
}

fn check_paraxial(n: f64, axes: &JsaAxes) -> Result<()> {
    let q_max = axes.q.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let ratio = q_max / (n * axes.omega[0]);
    if ratio > PARAXIAL_LIMIT {
        return Err(Error::NotParaxial { ratio });
    }
    if ratio > PARAXIAL_WARN {
        warn!("transverse wavevectors reach |q|/k = {ratio:.3}");
    }
    Ok(())
}

/// Counts samples above half maximum of `|M₀|²` along the sum frequency and,
/// when the transverse factor is not a delta, along the sum wavevector.
fn check_resolution(pump: &PumpSpectrum, crystal: &CrystalSpec, axes: &JsaAxes) -> Result<()> {
    let nw = axes.omega.len();
    let w_lo = 2.0 * axes.omega[0];
    let sums: Vec<f64> = (0..2 * nw - 1)
        .map(|i| w_lo + i as f64 * axes.d_omega)
        .collect();
    let q_peak = 0.0;
    let along_w: Vec<f64> = sums
        .iter()
        .map(|&w| {
            pump.moments(w, q_peak, crystal, axes.dq)
                .map(|m| m[0].norm_sqr())
        })
        .collect::<Result<_>>()?;
    let count = above_half(&along_w);
    if count < MIN_SAMPLES_PER_FWHM {
        return Err(Error::GridTooCoarse(format!(
            "{count} frequency samples across the pump FWHM, need {MIN_SAMPLES_PER_FWHM}"
        )));
    }
    let delta_q = matches!(
        (pump, crystal.aperture),
        (
            PumpSpectrum::Analytic {
                transverse: super::pump::Profile::Plane,
                ..
            },
            super::pump::Aperture::Infinite
        )
    );
    if axes.q.len() > 1 && !delta_q {
        let w_peak = sums[along_w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)];
        let nq = axes.q.len();
        let qs: Vec<f64> = (0..2 * nq - 1)
            .map(|i| 2.0 * axes.q[0] + i as f64 * axes.dq)
            .collect();
        let along_q: Vec<f64> = qs
            .iter()
            .map(|&q| {
                pump.moments(w_peak, q, crystal, axes.dq)
                    .map(|m| m[0].norm_sqr())
            })
            .collect::<Result<_>>()?;
        let count = above_half(&along_q);
        if count < MIN_SAMPLES_PER_FWHM {
            return Err(Error::GridTooCoarse(format!(
                "{count} transverse samples across the pump FWHM, need {MIN_SAMPLES_PER_FWHM}"
            )));
        }
    }
    Ok(())
}

fn above_half(v: &[f64]) -> usize {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(*x));
    if peak == 0.0 {
        return 0;
    }
    v.iter().filter(|&&x| x >= 0.5 * peak).count()
}

/// Which photon to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Photon {
    One,
    Two,
}

/// Reduced distribution over `(ω, q)` of one photon, row-major in `ω` then
/// `q`; sums to 1 with weight `dω dq`.
pub fn marginal_spectrum(jsa: &JsaGrid, which: Photon) -> Vec<f64> {
    let s = jsa.states();
    let c = jsa.axes.cell();
    (0..s)
        .map(|a| {
            (0..s)
                .map(|b| match which {
                    Photon::One => jsa.values[a * s + b].norm_sqr(),
                    Photon::Two => jsa.values[b * s + a].norm_sqr(),
                })
                .sum::<f64>()
                * c
        })
        .collect()
}

/// Singular-value decomposition of the amplitude across the photon 1 |
/// photon 2 partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtResult {
    /// Descending Schmidt coefficients above the truncation level.
    pub lambdas: Vec<f64>,
    pub k: f64,
    pub rank: usize,
    /// Weight discarded by truncation, `1 − Σλ`.
    pub residual: f64,
}

/// Coefficients below this fraction of the largest are truncated.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

pub fn schmidt(jsa: &JsaGrid) -> Result<SchmidtResult> {
    jsa.check_normalized()?;
    let sv = jsa.matrix().singular_values();
    let mut lambdas: Vec<f64> = sv.iter().map(|s| s * s).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let top = lambdas.first().copied().unwrap_or(0.0);
    lambdas.retain(|&l| l > SCHMIDT_CUTOFF * top);
    let total: f64 = lambdas.iter().sum();
    let purity: f64 = lambdas.iter().map(|l| l * l).sum();
    Ok(SchmidtResult {
        k: 1.0 / purity,
        rank: lambdas.len(),
        residual: 1.0 - total,
        lambdas,
    })
}
