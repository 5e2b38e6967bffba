//! Position-space biphoton amplitude: coherent sum over nonlinear scatterers
//! in the crystal of pairs of outgoing spherical waves.

use std::f64::consts::PI;

use super::pump::{Aperture, CrystalSpec, PumpSpectrum};
use crate::quadrature::CompositeRule;
use crate::{Error, Result, C64};

/// A complex field value with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
}

impl FieldSample {
    /// `a e^{−iωt}` sampled at `t`.
    pub fn harmonic(amplitude: C64, omega: f64, t: f64) -> Self {
        let v = amplitude * C64::from_polar(1.0, -omega * t);
        let i = C64::new(0.0, 1.0);
        Self {
            value: v,
            d1: -i * omega * v,
            d2: -omega * omega * v,
        }
    }
}

/// Nonlinear source `−μ χ′ ∂²(E_o E_e)/∂t²` at `r`, with background
/// `μ = 1`. Zero outside the crystal; the boundary counts as inside.
pub fn nonlinear_source(
    pump: FieldSample,
    ordinary: FieldSample,
    r: [f64; 3],
    crystal: &CrystalSpec,
) -> C64 {
    if !crystal.contains(r) || crystal.chi2 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let d2 = pump.d2 * ordinary.value + pump.d1 * ordinary.d1 * 2.0 + pump.value * ordinary.d2;
    -d2 * crystal.chi2
}

/// Pair of outgoing spherical waves from one scatterer at `src`:
/// `ω₁² e^{ik₁R₁}/R₁ · ω₂² e^{ik₂R₂}/R₂`, `k = nω`.
pub fn pair_kernel(src: [f64; 3], r1: [f64; 3], r2: [f64; 3], (w1, w2): (f64, f64), n: f64) -> C64 {
    let d = |r: [f64; 3]| {
        ((r[0] - src[0]).powi(2) + (r[1] - src[1]).powi(2) + (r[2] - src[2]).powi(2)).sqrt()
    };
    let (a, b) = (d(r1), d(r2));
    C64::from_polar(w1 * w1 * w2 * w2 / (a * b), n * (w1 * a + w2 * b))
}

/// Quadrature resolution for [`biphoton_position`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionQuadrature {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panels per 2π of accumulated phase along each axis.
    pub panels_per_cycle: f64,
    pub min_panels: usize,
}

impl Default for PositionQuadrature {
    fn default() -> Self {
        Self {
            order: 12,
            panels_per_cycle: 1.0,
            min_panels: 4,
        }
    }
}

/// `∫d³r′ χ′ E₃(r′; ω₁+ω₂) [K(r₁, r₂; ω₁, ω₂) + K(r₂, r₁; ω₂, ω₁)]` over the
/// crystal, with global constants dropped. The pump field at `ω₃` is
/// `S(ω₃) a(x′, y′) e^{ik₃z′}`.
pub fn biphoton_position(
    pump: &PumpSpectrum,
    crystal: &CrystalSpec,
    r1: [f64; 3],
    r2: [f64; 3],
    (w1, w2): (f64, f64),
    quad: PositionQuadrature,
) -> Result<C64> {
    pump.validate()?;
    crystal.validate()?;
    for r in [r1, r2] {
        if crystal.contains(r) {
            return Err(Error::InsideSupport(format!(
                "detector at {r:?} lies inside the crystal"
            )));
        }
    }
    if crystal.chi2 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let w3 = w1 + w2;
    let weight = pump.spectral_weight(w3, crystal.window)?;
    let n = crystal.n;
    let (hx, hy) = match (crystal.aperture, pump) {
        (Aperture::Finite { width_x, width_y }, _) => (0.5 * width_x, 0.5 * width_y),
        (
            Aperture::Infinite,
            PumpSpectrum::Analytic {
                transverse: super::pump::Profile::Gaussian { waist },
                ..
            },
        ) => (6.0 * waist, 6.0 * waist),
        _ => {
            return Err(Error::InvalidParameter(
                "an unbounded crystal needs a transversely bounded pump in position space".into(),
            ))
        }
    };
    let hz = 0.5 * crystal.length;
    let half = [hx, hy, hz];
    // phase gradient bound per axis: pump minus the two outgoing directions,
    // plus wavefront curvature across the crystal
    let unit = |r: [f64; 3]| {
        let m = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        (r.map(|x| x / m), m)
    };
    let (u1, d1) = unit(r1);
    let (u2, d2) = unit(r2);
    let rules: Vec<CompositeRule> = (0..3)
        .map(|a| {
            let k3 = if a == 2 { n * w3 } else { 0.0 };
            let grad = (k3 - n * w1 * u1[a] - n * w2 * u2[a]).abs()
                + (k3 - n * w2 * u1[a] - n * w1 * u2[a]).abs()
                + n * w3 * 2.0 * half[a] * (1.0 / d1 + 1.0 / d2);
            let cycles = grad * 2.0 * half[a] / (2.0 * PI);
            let panels = ((cycles * quad.panels_per_cycle).ceil() as usize).max(quad.min_panels);
            CompositeRule::new(-half[a], half[a], panels, quad.order)
        })
        .collect();
    let k3 = n * w3;
    let mut acc = C64::new(0.0, 0.0);
    for (x, wx) in rules[0].iter() {
        for (y, wy) in rules[1].iter() {
            let a = pump.profile(x, y);
            if a == 0.0 {
                continue;
            }
            for (z, wz) in rules[2].iter() {
                let src = [x, y, z];
                let e3 = C64::from_polar(a, k3 * z);
                let k =
                    pair_kernel(src, r1, r2, (w1, w2), n) + pair_kernel(src, r2, r1, (w2, w1), n);
                acc += e3 * k * (wx * wy * wz);
            }
        }
    }
    Ok(acc * (crystal.chi2 * weight))
}
