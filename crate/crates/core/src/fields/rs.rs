//! Helicity projection and the Riemann–Silberstein map between `(E, B)` and
//! `Ψ±`.
//!
//! The helicity operator `σ̂` is nonlocal in position space and is applied
//! only in Fourier space, where `σ̂ F̃ = i k̂ × F̃` on the transverse part.

use num_complex::Complex64 as C64;

use super::{ComplexVectorField, MediumMap, RSState, RealFieldPair, RealVectorField, ScalarField};
use crate::spectral::{cdot, cross_c, polarization_basis, Spectral};
use crate::Result;

const I: C64 = C64::new(0.0, 1.0);

/// Output of [`helicity_project`]: `F = plus + minus + longitudinal`.
#[derive(Debug, Clone)]
pub struct HelicityParts {
    pub plus: ComplexVectorField,
    pub minus: ComplexVectorField,
    pub longitudinal: ComplexVectorField,
}

/// Spectral-space split of `F̃` into `(ê₊ê₊†F̃, ê₋ê₋†F̃, k̂k̂·F̃)`; the `k = 0`
/// component goes entirely to the longitudinal part.
fn project_k(sp: &Spectral, fk: &ComplexVectorField) -> [ComplexVectorField; 3] {
    let grid = fk.grid;
    let mut plus = ComplexVectorField::zeros(grid);
    let mut minus = ComplexVectorField::zeros(grid);
    let mut longi = ComplexVectorField::zeros(grid);
    for idx in 0..grid.size() {
        let v = fk.at(idx);
        match polarization_basis(sp.kvec(idx)) {
            None => {
                for a in 0..3 {
                    longi.comps[a][idx] = v[a];
                }
            }
            Some((ep, em, kh)) => {
                let ap = cdot(ep, v);
                let am = cdot(em, v);
                let al = kh[0] * v[0] + kh[1] * v[1] + kh[2] * v[2];
                for a in 0..3 {
                    plus.comps[a][idx] = ap * ep[a];
                    minus.comps[a][idx] = am * em[a];
                    longi.comps[a][idx] = al * kh[a];
                }
            }
        }
    }
    [plus, minus, longi]
}

pub fn helicity_project(sp: &Spectral, f: &ComplexVectorField) -> Result<HelicityParts> {
    f.check_finite("helicity_project input")?;
    sp.grid.ensure_same(&f.grid, "helicity_project")?;
    let [p, m, l] = project_k(sp, &sp.forward_vec(f));
    Ok(HelicityParts {
        plus: sp.inverse_vec(&p),
        minus: sp.inverse_vec(&m),
        longitudinal: sp.inverse_vec(&l),
    })
}

/// Helicity parts of a real field. They are real: `P±(-k) = P±(k)*`.
fn project_real(sp: &Spectral, f: &RealVectorField) -> [RealVectorField; 3] {
    let [p, m, l] = project_k(sp, &sp.forward_real_vec(f));
    [
        sp.inverse_real_vec(p),
        sp.inverse_real_vec(m),
        sp.inverse_real_vec(l),
    ]
}

/// `σ̂F`: `+F` on positive helicity, `-F` on negative, zero on longitudinal
/// content.
pub fn apply_sigma(sp: &Spectral, f: &ComplexVectorField) -> ComplexVectorField {
    let mut fk = sp.forward_vec(f);
    for idx in 0..f.grid.size() {
        let k = sp.kvec(idx);
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let v = fk.at(idx);
        let out = if kn == 0.0 {
            [C64::new(0.0, 0.0); 3]
        } else {
            let kh = [k[0] / kn, k[1] / kn, k[2] / kn].map(|x| C64::new(x, 0.0));
            cross_c(kh, v).map(|x| I * x)
        };
        for a in 0..3 {
            fk.comps[a][idx] = out[a];
        }
    }
    sp.inverse_vec(&fk)
}

fn apply_sigma_real(sp: &Spectral, f: &RealVectorField) -> RealVectorField {
    apply_sigma(sp, &f.to_complex()).re()
}

/// `Ψ± = √(ε/2) E± ± i √(1/(2μ)) B±` with `ε`, `μ` taken pointwise from the
/// medium (vacuum gives the bare photon, a uniform medium the dressed one).
///
/// For inhomogeneous media the weights are applied after projecting `E` and
/// `B`, so `Ψ±` are then not exact helicity eigenfields. Longitudinal content
/// of `E` is discarded.
pub fn rs_compose(sp: &Spectral, fields: &RealFieldPair, medium: &MediumMap) -> Result<RSState> {
    compose(sp, fields, medium, true)
}

/// [`rs_compose`] without the warning about discarded longitudinal content,
/// for fields where it is expected (`E` inside a dielectric).
pub(crate) fn rs_compose_quiet(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
) -> Result<RSState> {
    compose(sp, fields, medium, false)
}

fn compose(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
    warn: bool,
) -> Result<RSState> {
    let grid = fields.grid();
    sp.grid.ensure_same(&grid, "rs_compose fields")?;
    grid.ensure_same(&medium.grid, "rs_compose medium")?;
    let [ep, em, el] = project_real(sp, &fields.e);
    let [bp, bm, bl] = project_real(sp, &fields.b);
    let total = fields.e.sum_sq() + fields.b.sum_sq();
    if warn && total > 0.0 {
        let frac = (el.sum_sq() + bl.sum_sq()) / total;
        if frac > 1e-10 {
            log::warn!("rs_compose: discarding longitudinal content, energy fraction {frac:.3e}");
        }
    }
    let mut plus = ComplexVectorField::zeros(grid);
    let mut minus = ComplexVectorField::zeros(grid);
    for idx in 0..grid.size() {
        let we = (medium.epsilon(idx) / 2.0).sqrt();
        let wb = (1.0 / (2.0 * medium.mu(idx))).sqrt();
        for a in 0..3 {
            plus.comps[a][idx] = C64::new(we * ep.comps[a][idx], wb * bp.comps[a][idx]);
            minus.comps[a][idx] = C64::new(we * em.comps[a][idx], -wb * bm.comps[a][idx]);
        }
    }
    RSState::new(plus, minus, fields.t)
}

/// Inverse of [`rs_compose`]: `E = (Ψ′ + Ψ′*)/√(2ε)` and
/// `B = σ̂[√(2μ) Im Ψ′]`, which for uniform media is
/// `B = -i√(μ/2)[(σ̂Ψ′) - (σ̂Ψ′)*]`.
pub fn rs_decompose(sp: &Spectral, state: &RSState, medium: &MediumMap) -> Result<RealFieldPair> {
    let grid = state.grid();
    sp.grid.ensure_same(&grid, "rs_decompose state")?;
    grid.ensure_same(&medium.grid, "rs_decompose medium")?;
    let psi = state.psi();
    let mut e = RealVectorField::zeros(grid);
    let mut sb = RealVectorField::zeros(grid);
    for idx in 0..grid.size() {
        let ke = (2.0 / medium.epsilon(idx)).sqrt();
        let kb = (2.0 * medium.mu(idx)).sqrt();
        for a in 0..3 {
            e.comps[a][idx] = ke * psi.comps[a][idx].re;
            sb.comps[a][idx] = kb * psi.comps[a][idx].im;
        }
    }
    let b = apply_sigma_real(sp, &sb);
    RealFieldPair::new(e, b, state.t)
}

/// Pointwise `|Ψ|² = |Ψ⁺ + Ψ⁻|²`.
pub fn energy_density(state: &RSState) -> ScalarField {
    let psi = state.psi();
    ScalarField {
        grid: psi.grid,
        values: (0..psi.grid.size()).map(|i| psi.norm_sq_at(i)).collect(),
    }
}

/// Material energy density `u_mat` for real instantaneous fields, defined so
/// that `|Ψ′|² = |Ψ|² + u_mat` holds pointwise:
///
/// `u_mat = χ_e ε₀|E_T|²/2 − χ_m |σ̂B|²/(2(1+χ_m)μ₀)`
///
/// where `E_T` is the transverse part of `E`. Its cycle average for a
/// monochromatic dielectric wave equals [`material_energy_density_amplitudes`].
pub fn material_energy_density(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
) -> Result<ScalarField> {
    let grid = fields.grid();
    sp.grid
        .ensure_same(&grid, "material_energy_density fields")?;
    grid.ensure_same(&medium.grid, "material_energy_density medium")?;
    let [ep, em, _] = project_real(sp, &fields.e);
    let sb = apply_sigma_real(sp, &fields.b);
    let values = (0..grid.size())
        .map(|idx| {
            let et2: f64 = (0..3)
                .map(|a| (ep.comps[a][idx] + em.comps[a][idx]).powi(2))
                .sum();
            let sb2: f64 = (0..3).map(|a| sb.comps[a][idx].powi(2)).sum();
            let (ce, cm) = (medium.chi_e[idx], medium.chi_m[idx]);
            0.5 * ce * et2 - cm * sb2 / (2.0 * (1.0 + cm))
        })
        .collect();
    Ok(ScalarField { grid, values })
}

/// `u_mat = χ_e ε₀|E|²/4 + χ_m|B|²/[4(1+χ_m)μ₀]` for complex field amplitudes
/// (`E(t) = Re[E e^{-iωt}]`), i.e. the cycle-averaged material energy.
pub fn material_energy_density_amplitudes(e: [C64; 3], b: [C64; 3], chi_e: f64, chi_m: f64) -> f64 {
    let e2: f64 = e.iter().map(|v| v.norm_sqr()).sum();
    let b2: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    chi_e * e2 / 4.0 + chi_m * b2 / (4.0 * (1.0 + chi_m))
}

/// Photon current `S = Re[−i c Ψ* × (σ̂Ψ)]`.
pub fn poynting_current(sp: &Spectral, state: &RSState) -> Result<RealVectorField> {
    let grid = state.grid();
    sp.grid.ensure_same(&grid, "poynting_current")?;
    let psi = state.psi();
    let spsi = apply_sigma(sp, &psi);
    let mut s = RealVectorField::zeros(grid);
    for idx in 0..grid.size() {
        let conj = psi.at(idx).map(|v| v.conj());
        let c = cross_c(conj, spsi.at(idx));
        for a in 0..3 {
            s.comps[a][idx] = (-I * c[a]).re;
        }
    }
    Ok(s)
}

impl RSState {
    /// Checks transversality and helicity purity at the given relative
    /// tolerance (both measured as RMS ratios).
    pub fn check_invariants(&self, sp: &Spectral, tol: f64) -> Result<()> {
        let scale = (self.psi_plus.sum_sq() + self.psi_minus.sum_sq()).sqrt();
        if scale == 0.0 {
            return Ok(());
        }
        for (f, want_plus) in [(&self.psi_plus, true), (&self.psi_minus, false)] {
            let parts = helicity_project(sp, f)?;
            let div = sp.div_complex(f);
            let div_rms = div.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let kmax = sp
                .grid
                .spacing()
                .iter()
                .map(|d| std::f64::consts::PI / d)
                .fold(0.0, f64::max);
            if div_rms > tol * kmax * scale {
                return Err(crate::Error::NotTransverse {
                    fraction: div_rms / (kmax * scale),
                });
            }
            let wrong = if want_plus { &parts.minus } else { &parts.plus };
            let leak = (wrong.sum_sq() + parts.longitudinal.sum_sq()).sqrt() / scale;
            if leak > tol {
                return Err(crate::Error::InvalidParameter(format!(
                    "helicity impurity {leak:e}"
                )));
            }
        }
        Ok(())
    }
}
