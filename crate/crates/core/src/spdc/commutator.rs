//! Equal-polarization field commutator
//! `∫d³k ω/(2n(2π)³) e^{i(k·Δr − ωΔt)}` (ħ = c = 1) and its relation to the
//! second delay derivative of the spectral Green function,
//! `K = (i/4) ∂²G/∂Δt²`.

use std::f64::consts::PI;

use crate::quadrature::CompositeRule;
use crate::scattering::{green_spectral_lattice, GreenSpec, KLattice};
use crate::{Result, C64};

/// Direct sum over the band-limited lattice.
pub fn commutator_kernel(dr: [f64; 3], dt: f64, n: f64, band: &KLattice) -> C64 {
    let pre = 1.0 / (2.0 * n * n * (2.0 * PI).powi(3));
    band.sum(dr, dt, n, |k| k * pre)
}

/// Eighth-order central stencil for a second derivative.
const D2_STENCIL: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -1.0 / 5.0,
    8.0 / 5.0,
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// `(i/4) ∂²G/∂Δt²` with the lattice spectral Green function, differentiated
/// by an eighth-order stencil of step `h`. Needs `Δt > 4h`.
pub fn commutator_from_green(
    dr: [f64; 3],
    dt: f64,
    n: f64,
    band: &KLattice,
    h: f64,
) -> Result<C64> {
    let mut d2 = C64::new(0.0, 0.0);
    for (j, c) in D2_STENCIL.iter().enumerate() {
        let t = dt + (j as f64 - 4.0) * h;
        d2 += green_spectral_lattice(dr, t, n, band)? * *c;
    }
    Ok(d2 / (h * h) * C64::new(0.0, 0.25))
}

/// Continuum limit by radial quadrature,
/// `(4π/R) ∫ k f(k) sin(kR) dk` with `f = ω A(k) e^{−iωΔt}/(2n(2π)³)`.
pub fn commutator_kernel_continuum(dr: [f64; 3], dt: f64, spec: &GreenSpec) -> C64 {
    let n = spec.n;
    let r = (dr[0] * dr[0] + dr[1] * dr[1] + dr[2] * dr[2]).sqrt();
    let pre = 4.0 * PI / (2.0 * n * (2.0 * PI).powi(3));
    let panels = ((spec.k_max * (r + dt.abs() / n) / (2.0 * PI)).ceil() as usize + 8).max(16);
    let rule = CompositeRule::new(0.0, spec.k_max, panels, 16);
    let mut acc = C64::new(0.0, 0.0);
    for (k, w) in rule.iter() {
        let omega = k / n;
        let radial = if r > 0.0 { (k * r).sin() / r } else { k };
        acc += C64::from_polar(w * k * omega * radial * spec.taper(k), -omega * dt);
    }
    acc * pre
}
