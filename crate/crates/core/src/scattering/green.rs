//! Two forms of the retarded Green function, `ω = ck/n`:
//!
//! * shell form `G⁺ = (c/4πR) δ(R − (t−t′)c/n)`;
//! * spectral form `(2ic/(2π)³) ∫d³k/k e^{i(k·Δr − ωΔt)}`, band limited.
//!
//! The real part of the spectral form is `2(G⁺ − G⁻)`; its imaginary part is
//! a principal-value tail off the light shell. Only the real part enters
//! comparisons with the shell form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fields::Grid3;
use crate::quadrature::CompositeRule;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenSpec {
    /// Background index of refraction.
    pub n: f64,
    /// Band limit of the spectral form.
    pub k_max: f64,
    /// Width of the raised-cosine taper ending at `k_max`.
    pub apodization: f64,
    /// Distances below this are clamped to it and flagged.
    pub r_min: f64,
}

impl GreenSpec {
    pub fn new(n: f64, k_max: f64, apodization: f64, r_min: f64) -> Result<Self> {
        let s = Self {
            n,
            k_max,
            apodization,
            r_min,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::InvalidParameter(format!("index n = {}", self.n)));
        }
        if !(self.k_max.is_finite() && self.k_max > 0.0) {
            return Err(Error::InvalidParameter(format!("k_max = {}", self.k_max)));
        }
        if !(self.apodization >= 0.0 && self.apodization <= self.k_max) {
            return Err(Error::InvalidParameter(format!(
                "apodization width {} not in [0, k_max]",
                self.apodization
            )));
        }
        if !(self.r_min.is_finite() && self.r_min > 0.0) {
            return Err(Error::InvalidParameter(format!("r_min = {}", self.r_min)));
        }
        Ok(())
    }

    /// Phase velocity `c/n`.
    pub fn speed(&self) -> f64 {
        1.0 / self.n
    }

    /// Taper `A(k)`: 1 below `k_max − w`, raised cosine down to 0 at `k_max`.
    pub fn taper(&self, k: f64) -> f64 {
        let start = self.k_max - self.apodization;
        if k <= start {
            1.0
        } else if k >= self.k_max {
            0.0
        } else {
            0.5 * (1.0 + (PI * (k - start) / self.apodization).cos())
        }
    }

    fn k_rule(&self, panels: usize) -> CompositeRule {
        let start = self.k_max - self.apodization;
        let mut rule = CompositeRule::new(0.0, start, panels, 16);
        if self.apodization > 0.0 {
            let tail = CompositeRule::new(start, self.k_max, (panels / 4).max(4), 16);
            rule.nodes.extend(tail.nodes);
            rule.weights.extend(tail.weights);
        }
        rule
    }
}

/// `G⁺` at one source/observation pair, as the amplitude of a delta on the
/// shell `R = c(t − t′)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedKernel {
    /// `c/(4πR)`; zero when `t ≤ t′`.
    pub amplitude: f64,
    /// `c(t − t′)/n`; the kernel is supported where `R` equals this.
    pub shell_radius: f64,
    /// `R = |r − r′|` after clamping to `r_min`.
    pub distance: f64,
    /// Set when `|r − r′| < r_min`.
    pub regularized: bool,
}

impl RetardedKernel {
    /// The kernel smoothed by a normalized Gaussian of width `sigma` in `R`.
    pub fn smeared(&self, sigma: f64) -> f64 {
        let d = (self.distance - self.shell_radius) / sigma;
        self.amplitude * (-0.5 * d * d).exp() / (sigma * (2.0 * PI).sqrt())
    }
}

pub fn green_retarded(
    r: [f64; 3],
    t: f64,
    r_src: [f64; 3],
    t_src: f64,
    spec: &GreenSpec,
) -> RetardedKernel {
    let raw =
        ((r[0] - r_src[0]).powi(2) + (r[1] - r_src[1]).powi(2) + (r[2] - r_src[2]).powi(2)).sqrt();
    let regularized = raw < spec.r_min;
    let distance = raw.max(spec.r_min);
    let tau = t - t_src;
    let amplitude = if tau > 0.0 {
        1.0 / (4.0 * PI * distance)
    } else {
        0.0
    };
    RetardedKernel {
        amplitude,
        shell_radius: tau.max(0.0) * spec.speed(),
        distance,
        regularized,
    }
}

/// Band-limited spectral form at separation `Δr` and delay `Δt > 0`. The
/// angular integral is done analytically:
/// `(ic/(π²R)) ∫₀^{k_max} sin(kR) e^{−iωΔt} A(k) dk`.
pub fn green_spectral(dr: [f64; 3], dt: f64, spec: &GreenSpec) -> Result<C64> {
    if !(dt > 0.0) {
        return Err(Error::Causality(format!(
            "spectral Green function needs Δt > 0, got {dt}"
        )));
    }
    let r = (dr[0] * dr[0] + dr[1] * dr[1] + dr[2] * dr[2])
        .sqrt()
        .max(spec.r_min);
    let v = spec.speed();
    let panels = panels_for(spec.k_max * (r + v * dt));
    let mut acc = C64::new(0.0, 0.0);
    for (k, w) in spec.k_rule(panels).iter() {
        acc += C64::from_polar(w * (k * r).sin() * spec.taper(k), -k * v * dt);
    }
    Ok(acc * C64::new(0.0, 1.0 / (PI * PI * r)))
}

/// Band-limited wavevector lattice `k = 2πm/L` of a periodic box, used for
/// direct mode sums instead of radial quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct KLattice {
    pub box_grid: Grid3,
    pub k_max: f64,
    pub apodization: f64,
    /// Wavevectors with nonzero taper and their taper weights.
    points: Vec<([f64; 3], f64)>,
}

impl KLattice {
    /// Odd point counts avoid the sign-ambiguous Nyquist planes.
    pub fn new(box_grid: Grid3, k_max: f64, apodization: f64) -> Result<Self> {
        if box_grid.n.iter().any(|n| n % 2 == 0) {
            return Err(Error::InvalidGrid(
                "wavevector lattice needs odd point counts".into(),
            ));
        }
        let taper = GreenSpec {
            n: 1.0,
            k_max,
            apodization,
            r_min: 1.0,
        };
        taper.validate()?;
        let nyquist = (0..3)
            .map(|a| PI * box_grid.n[a] as f64 / box_grid.len[a])
            .fold(f64::INFINITY, f64::min);
        if k_max > nyquist {
            return Err(Error::InvalidParameter(format!(
                "k_max {k_max} above the lattice limit {nyquist}"
            )));
        }
        let points = (0..box_grid.size())
            .filter_map(|idx| {
                let k = box_grid.kvec(idx);
                let km = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                let a = taper.taper(km);
                (km > 0.0 && a > 0.0).then_some((k, a))
            })
            .collect();
        Ok(Self {
            box_grid,
            k_max,
            apodization,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ Δk³ A(k) w(|k|) e^{i(k·Δr − ω Δt)}` with `ω = |k|/n`.
    pub fn sum(&self, dr: [f64; 3], dt: f64, n: f64, weight: impl Fn(f64) -> f64) -> C64 {
        let dk3 = self.box_grid.k_cell_volume();
        let mut acc = C64::new(0.0, 0.0);
        for &(k, a) in &self.points {
            let km = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let phase = k[0] * dr[0] + k[1] * dr[1] + k[2] * dr[2] - km / n * dt;
            acc += C64::from_polar(a * weight(km), phase);
        }
        acc * dk3
    }
}

/// Spectral form summed directly over a wavevector lattice.
pub fn green_spectral_lattice(dr: [f64; 3], dt: f64, n: f64, lattice: &KLattice) -> Result<C64> {
    if !(dt > 0.0) {
        return Err(Error::Causality(format!(
            "spectral Green function needs Δt > 0, got {dt}"
        )));
    }
    Ok(lattice.sum(dr, dt, n, |k| 1.0 / k) * C64::new(0.0, 2.0 / (2.0 * PI).powi(3)))
}

/// Enough 16-point panels to resolve `phase / 2π` oscillations.
fn panels_for(phase: f64) -> usize {
    ((phase / (2.0 * PI)).ceil() as usize + 4).max(8)
}

/// Separable test source `f(r′, t′) = exp(−|r′|²/2s²) exp(−t′²/2τ²)`,
/// band limited through its Gaussian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub width: f64,
    pub duration: f64,
}

impl GaussianPulse {
    /// `∫d³r′∫dt′ G⁺ f` evaluated as a quadrature over retarded shells of
    /// radius `ρ` about the observation point.
    pub fn retarded_response(&self, r: f64, t: f64, spec: &GreenSpec) -> f64 {
        let (s, tau, v) = (self.width, self.duration, spec.speed());
        if r <= 0.0 {
            return 0.0;
        }
        // shells contribute where both the spatial and temporal envelopes are
        // non-negligible
        let lo = (r - 12.0 * s).max(v * (t - 12.0 * tau)).max(0.0);
        let hi = (r + 12.0 * s).min(v * (t + 12.0 * tau));
        if hi <= lo {
            return 0.0;
        }
        let rule = CompositeRule::new(lo, hi, 64, 16);
        let shell = |rho: f64| {
            let h = (-(t - rho / v).powi(2) / (2.0 * tau * tau)).exp();
            let ang = 2.0 * PI * s * s / r
                * ((-(r - rho).powi(2) / (2.0 * s * s)).exp()
                    - (-(r + rho).powi(2) / (2.0 * s * s)).exp());
            h * ang
        };
        spec.n / (4.0 * PI) * rule.integrate(shell)
    }

    /// `∫d³r′∫dt′ G_spec f` with the spectral form, using the analytic
    /// Fourier transforms of the pulse. Valid when the pulse has ended
    /// before `t`.
    pub fn spectral_response(&self, r: f64, t: f64, spec: &GreenSpec) -> C64 {
        let (s, tau, v) = (self.width, self.duration, spec.speed());
        let g_hat = |k: f64| (2.0 * PI).powf(1.5) * s.powi(3) * (-0.5 * k * k * s * s).exp();
        let h_hat = |w: f64| (2.0 * PI).sqrt() * tau * (-0.5 * w * w * tau * tau).exp();
        let panels = panels_for(spec.k_max * (r + v * t.abs()));
        let mut acc = C64::new(0.0, 0.0);
        for (k, w) in spec.k_rule(panels).iter() {
            let omega = k * v;
            let sinc_r = if r > 0.0 { (k * r).sin() / r } else { k };
            acc += C64::from_polar(
                w * sinc_r * g_hat(k) * h_hat(omega) * spec.taper(k),
                -omega * t,
            );
        }
        acc * C64::new(0.0, 2.0 * 4.0 * PI / (2.0 * PI).powi(3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GreenSpec::new(1.0, 10.0, 2.0, 0.1).is_ok());
        assert!(GreenSpec::new(0.0, 10.0, 2.0, 0.1).is_err());
        assert!(GreenSpec::new(1.0, 10.0, 20.0, 0.1).is_err());
        assert!(GreenSpec::new(1.0, 10.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn taper_is_continuous() {
        let s = GreenSpec::new(1.0, 10.0, 2.0, 0.1).unwrap();
        assert_eq!(s.taper(8.0), 1.0);
        assert!((s.taper(9.0) - 0.5).abs() < 1e-15);
        assert!(s.taper(10.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_form_rejects_non_positive_delay() {
        let s = GreenSpec::new(1.0, 10.0, 2.0, 0.1).unwrap();
        assert!(matches!(
            green_spectral([1.0, 0.0, 0.0], 0.0, &s),
            Err(Error::Causality(_))
        ));
    }
}
