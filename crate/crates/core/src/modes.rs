//! Plane-wave mode expansion of the dressed photon wave function in a uniform
//! medium, and one- and two-photon synthesis from spectral amplitudes.
//!
//! The continuum `Σ_s ∫d³k` is the lattice sum over the grid-dual wavevectors
//! times the cell volume `Δk³ = (2π)³/V`:
//!
//! `Ψ′(r, t) = Σ_s Σ_k Δk³ √(ħω/(2π)³) a_{ks} e^{i(k·r − ωt)} ê_{ks}`, `ω = c|k|/n`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::fields::{ComplexVectorField, Grid3, MediumMap, RSState};
use crate::spectral::{cdot, polarization_basis, Spectral};
use crate::{Error, Result};

/// Tolerance on `Σ_s∫d³k|a|² = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Largest admissible longitudinal energy fraction of a decomposed state.
pub const TRANSVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub const BOTH: [Helicity; 2] = [Helicity::Plus, Helicity::Minus];

    pub fn index(self) -> usize {
        match self {
            Helicity::Plus => 0,
            Helicity::Minus => 1,
        }
    }
}

/// Spectral amplitudes `a_{ks}` on the lattice of a grid, with the uniform
/// background that fixes `ω = c|k|/n`. Also used for one-photon spectra
/// `Ψ̃⁽¹⁾_s(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAmplitudes {
    pub grid: Grid3,
    pub chi_e: f64,
    pub chi_m: f64,
    /// `amps[s][idx]` at the wavevector of grid index `idx`.
    pub amps: [Vec<C64>; 2],
}

pub type OnePhotonSpectral = ModeAmplitudes;

/// `Δk³ √(ħω/(2π)³)`, the weight of one lattice mode in the expansion.
fn mode_weight(grid: &Grid3, omega: f64) -> f64 {
    grid.k_cell_volume() * (omega / (2.0 * PI).powi(3)).sqrt()
}

fn check_background(chi_e: f64, chi_m: f64) -> Result<()> {
    if !(chi_e.is_finite() && chi_m.is_finite() && 1.0 + chi_e > 0.0 && 1.0 + chi_m > 0.0) {
        return Err(Error::InvalidMedium(format!(
            "background χe = {chi_e}, χm = {chi_m}"
        )));
    }
    Ok(())
}

impl ModeAmplitudes {
    pub fn zeros(grid: Grid3, chi_e: f64, chi_m: f64) -> Result<Self> {
        check_background(chi_e, chi_m)?;
        let n = grid.size();
        Ok(Self {
            grid,
            chi_e,
            chi_m,
            amps: [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
        })
    }

    /// Fills every lattice mode from `f(k, s)`. The `k = 0` mode and the
    /// Nyquist planes of even axes are left empty.
    pub fn from_fn(
        grid: Grid3,
        chi_e: f64,
        chi_m: f64,
        mut f: impl FnMut([f64; 3], Helicity) -> C64,
    ) -> Result<Self> {
        let mut out = Self::zeros(grid, chi_e, chi_m)?;
        for idx in 0..grid.size() {
            let k = grid.kvec(idx);
            let m = grid.unravel(idx);
            if k == [0.0; 3] || (0..3).any(|a| grid.signed_index(a, m[a]).is_none()) {
                continue;
            }
            for s in Helicity::BOTH {
                out.amps[s.index()][idx] = f(k, s);
            }
        }
        out.check_finite()?;
        Ok(out)
    }

    pub fn index_of_refraction(&self) -> f64 {
        ((1.0 + self.chi_e) * (1.0 + self.chi_m)).sqrt()
    }

    pub fn omega(&self, idx: usize) -> f64 {
        let k = self.grid.kvec(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt() / self.index_of_refraction()
    }

    /// Lattice cell volume `Δk³`.
    pub fn measure(&self) -> f64 {
        self.grid.k_cell_volume()
    }

    pub fn get(&self, m: [i64; 3], s: Helicity) -> C64 {
        self.amps[s.index()][self.grid.index_of_mode(m)]
    }

    pub fn set(&mut self, m: [i64; 3], s: Helicity, a: C64) {
        let idx = self.grid.index_of_mode(m);
        self.amps[s.index()][idx] = a;
    }

    pub fn check_finite(&self) -> Result<()> {
        for a in &self.amps {
            if let Some(index) = a
                .iter()
                .position(|v| !(v.re.is_finite() && v.im.is_finite()))
            {
                return Err(Error::NonFinite {
                    what: "mode amplitudes",
                    index,
                });
            }
        }
        Ok(())
    }

    /// `Σ_s ∫d³k |a_{ks}|²`.
    pub fn norm_sq(&self) -> f64 {
        self.amps
            .iter()
            .flatten()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.measure()
    }

    /// `Σ_s ∫d³k ā_{ks} b_{ks}`.
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..2 {
            for (a, b) in self.amps[s].iter().zip(&other.amps[s]) {
                acc += a.conj() * b;
            }
        }
        acc * self.measure()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let norm = self.norm_sq();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sq();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(self.scaled(C64::new(1.0 / norm.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        for a in out.amps.iter_mut() {
            for v in a.iter_mut() {
                *v *= c;
            }
        }
        out
    }

    /// Amplitudes after free evolution by `dt`: `a_{ks} e^{−iω dt}`.
    pub fn phase_advanced(&self, dt: f64) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.size() {
            let ph = C64::from_polar(1.0, -self.omega(idx) * dt);
            for s in 0..2 {
                out.amps[s][idx] *= ph;
            }
        }
        out
    }

    /// Direct mode sum for `Ψ′(r, t)` at an arbitrary point.
    pub fn field_at(&self, r: [f64; 3], t: f64) -> [C64; 3] {
        let mut out = [C64::new(0.0, 0.0); 3];
        for idx in 0..self.grid.size() {
            let k = self.grid.kvec(idx);
            let Some((ep, em, _)) = polarization_basis(k) else {
                continue;
            };
            for (s, e) in [(0, ep), (1, em)] {
                let a = self.amps[s][idx];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let c = a * mode_function_scalar(
                    &self.grid,
                    lattice_k(&self.grid, idx),
                    self.omega(idx),
                    r,
                    t,
                );
                for i in 0..3 {
                    out[i] += c * e[i];
                }
            }
        }
        out
    }
}

/// Wavevector of the plane wave `e^{ik·r}` that grid index `idx` carries in
/// the FFT. Differs from `Grid3::kvec` only on Nyquist planes.
fn lattice_k(grid: &Grid3, idx: usize) -> [f64; 3] {
    let m = grid.unravel(idx);
    std::array::from_fn(|a| {
        let s = grid.signed_index(a, m[a]).unwrap_or(grid.n[a] as i64 / 2);
        std::f64::consts::TAU * s as f64 / grid.len[a]
    })
}

/// `Δk³ √(ħω/(2π)³) e^{i(k·r − ωt)}`.
fn mode_function_scalar(grid: &Grid3, k: [f64; 3], omega: f64, r: [f64; 3], t: f64) -> C64 {
    let phase = k[0] * r[0] + k[1] * r[1] + k[2] * r[2] - omega * t;
    C64::from_polar(mode_weight(grid, omega), phase)
}

/// Mode amplitudes of `Ψ′` at time `t` without the normalization check.
pub fn mode_coefficients(
    sp: &Spectral,
    psi: &ComplexVectorField,
    chi_e: f64,
    chi_m: f64,
    t: f64,
) -> Result<ModeAmplitudes> {
    sp.grid.ensure_same(&psi.grid, "mode decomposition")?;
    psi.check_finite("Ψ′")?;
    let grid = sp.grid;
    let mut out = ModeAmplitudes::zeros(grid, chi_e, chi_m)?;
    let fk = sp.forward_vec(psi);
    let inv_n = 1.0 / grid.size() as f64;
    let (mut total, mut longitudinal, mut zero_mode) = (0.0, 0.0, 0.0f64);
    for idx in 0..grid.size() {
        let c = fk.at(idx).map(|v| v * inv_n);
        let c2: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        total += c2;
        match polarization_basis(grid.kvec(idx)) {
            None => zero_mode = zero_mode.max(c2.sqrt()),
            Some((ep, em, kh)) => {
                longitudinal += (kh[0] * c[0] + kh[1] * c[1] + kh[2] * c[2]).norm_sqr();
                let omega = out.omega(idx);
                let back = C64::from_polar(1.0 / mode_weight(&grid, omega), omega * t);
                out.amps[0][idx] = cdot(ep, c) * back;
                out.amps[1][idx] = cdot(em, c) * back;
            }
        }
    }
    if total > 0.0 {
        if zero_mode > TRANSVERSE_TOL.sqrt() * total.sqrt() {
            return Err(Error::ZeroFrequencyMode {
                amplitude: zero_mode,
            });
        }
        if longitudinal > TRANSVERSE_TOL * total {
            return Err(Error::NotTransverse {
                fraction: longitudinal / total,
            });
        }
    }
    Ok(out)
}

/// Inverts the mode expansion: `a_{ks} = ⟨mode_{ks}|Ψ′⟩/√(ħω)`.
pub fn decompose(sp: &Spectral, state: &RSState, medium: &MediumMap) -> Result<ModeAmplitudes> {
    sp.grid.ensure_same(&medium.grid, "decompose medium")?;
    let (chi_e, chi_m) = medium
        .as_uniform()
        .ok_or_else(|| Error::InvalidMedium("mode decomposition needs a uniform medium".into()))?;
    let modes = mode_coefficients(sp, &state.psi(), chi_e, chi_m, state.t)?;
    modes.check_normalized()?;
    Ok(modes)
}

/// `H = Σ_s ∫d³k ħω |a_{ks}|²`.
pub fn total_energy(modes: &ModeAmplitudes) -> f64 {
    let mut acc = 0.0;
    for idx in 0..modes.grid.size() {
        let w = modes.omega(idx);
        acc += w * (modes.amps[0][idx].norm_sqr() + modes.amps[1][idx].norm_sqr());
    }
    acc * modes.measure()
}

/// `Ψ′(r, t)` on the grid from spectral amplitudes, split by helicity.
pub fn synthesize_one_photon(sp: &Spectral, spec: &OnePhotonSpectral, t: f64) -> Result<RSState> {
    sp.grid.ensure_same(&spec.grid, "one-photon synthesis")?;
    spec.check_finite()?;
    let grid = sp.grid;
    let scale = grid.size() as f64;
    let mut parts = [
        ComplexVectorField::zeros(grid),
        ComplexVectorField::zeros(grid),
    ];
    for idx in 0..grid.size() {
        let Some((ep, em, _)) = polarization_basis(grid.kvec(idx)) else {
            continue;
        };
        let omega = spec.omega(idx);
        let w = C64::from_polar(mode_weight(&grid, omega) * scale, -omega * t);
        for (s, e) in [(0, ep), (1, em)] {
            let c = spec.amps[s][idx] * w;
            for a in 0..3 {
                parts[s].comps[a][idx] = c * e[a];
            }
        }
    }
    let [p, m] = parts;
    RSState::new(sp.inverse_vec(&p), sp.inverse_vec(&m), t)
}

/// One lattice mode `(k, s)` addressed by signed lattice index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeKey {
    pub m: [i64; 3],
    pub s: Helicity,
}

impl ModeKey {
    pub fn new(m: [i64; 3], s: Helicity) -> Self {
        Self { m, s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TwoPhotonStorage {
    /// Explicit nonzero entries `Ψ̃⁽²⁾_{s,s'}(k, k')`.
    Sparse(Vec<(ModeKey, ModeKey, C64)>),
    /// `Σ_i w_i f_i(k,s) g_i(k',s')`.
    Factored(Vec<(C64, ModeAmplitudes, ModeAmplitudes)>),
}

/// Two-photon spectral amplitude on the product lattice. Normalization
/// refers to the symmetrized kernel `Ψ̃_{ss'}(k,k') + Ψ̃_{s's}(k',k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonSpectral {
    pub grid: Grid3,
    pub chi_e: f64,
    pub chi_m: f64,
    pub storage: TwoPhotonStorage,
}

impl TwoPhotonSpectral {
    pub fn sparse(
        grid: Grid3,
        chi_e: f64,
        chi_m: f64,
        entries: Vec<(ModeKey, ModeKey, C64)>,
    ) -> Result<Self> {
        check_background(chi_e, chi_m)?;
        if let Some(index) = entries
            .iter()
            .position(|e| !(e.2.re.is_finite() && e.2.im.is_finite()))
        {
            return Err(Error::NonFinite {
                what: "two-photon spectrum",
                index,
            });
        }
        Ok(Self {
            grid,
            chi_e,
            chi_m,
            storage: TwoPhotonStorage::Sparse(entries),
        })
    }

    pub fn factored(terms: Vec<(C64, ModeAmplitudes, ModeAmplitudes)>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty factored spectrum".into()))?;
        let (grid, chi_e, chi_m) = (first.1.grid, first.1.chi_e, first.1.chi_m);
        for (w, f, g) in &terms {
            for x in [f, g] {
                grid.ensure_same(&x.grid, "factored spectrum")?;
                if (x.chi_e, x.chi_m) != (chi_e, chi_m) {
                    return Err(Error::InvalidMedium(
                        "factors use different backgrounds".into(),
                    ));
                }
                x.check_finite()?;
            }
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::NonFinite {
                    what: "factor weight",
                    index: 0,
                });
            }
        }
        Ok(Self {
            grid,
            chi_e,
            chi_m,
            storage: TwoPhotonStorage::Factored(terms),
        })
    }

    pub fn storage_form(&self) -> &'static str {
        match self.storage {
            TwoPhotonStorage::Sparse(_) => "sparse",
            TwoPhotonStorage::Factored(_) => "factored",
        }
    }

    fn index_of_refraction(&self) -> f64 {
        ((1.0 + self.chi_e) * (1.0 + self.chi_m)).sqrt()
    }

    /// `Σ ∫d³k d³k' |Ψ̃_{ss'}(k,k') + Ψ̃_{s's}(k',k)|²`.
    pub fn symmetrized_norm_sq(&self) -> f64 {
        let dk6 = self.grid.k_cell_volume().powi(2);
        match &self.storage {
            TwoPhotonStorage::Sparse(entries) => {
                let mut sym: HashMap<(ModeKey, ModeKey), C64> = HashMap::new();
                for &(a, b, v) in entries {
                    *sym.entry((a, b)).or_default() += v;
                    *sym.entry((b, a)).or_default() += v;
                }
                let mut vals: Vec<_> = sym.into_iter().collect();
                vals.sort_by_key(|x| x.0);
                vals.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>() * dk6
            }
            TwoPhotonStorage::Factored(terms) => {
                let mut acc = C64::new(0.0, 0.0);
                for (wi, fi, gi) in terms {
                    for (wj, fj, gj) in terms {
                        let direct = fi.inner(fj) * gi.inner(gj);
                        let exchange = fi.inner(gj) * gi.inner(fj);
                        acc += wi.conj() * wj * (direct + exchange) * 2.0;
                    }
                }
                acc.re
            }
        }
    }

    /// Rescaled so the symmetrized kernel has unit L2 norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.symmetrized_norm_sq();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { norm });
        }
        let c = 1.0 / norm.sqrt();
        let mut out = self.clone();
        match &mut out.storage {
            TwoPhotonStorage::Sparse(entries) => entries.iter_mut().for_each(|e| e.2 *= c),
            TwoPhotonStorage::Factored(terms) => terms.iter_mut().for_each(|t| t.0 *= c),
        }
        Ok(out)
    }

    fn mode_vector(&self, key: ModeKey, r: [f64; 3], t: f64) -> [C64; 3] {
        let k = self.grid.kvec(self.grid.index_of_mode(key.m));
        let Some((ep, em, _)) = polarization_basis(k) else {
            return [C64::new(0.0, 0.0); 3];
        };
        let omega = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt() / self.index_of_refraction();
        let e = if key.s == Helicity::Plus { ep } else { em };
        let c = mode_function_scalar(
            &self.grid,
            lattice_k(&self.grid, self.grid.index_of_mode(key.m)),
            omega,
            r,
            t,
        );
        e.map(|v| v * c)
    }

    /// Unsymmetrized `A_{ab}(r1, r2) = Σ Ψ̃ φ_{ks}(r1)_a φ_{k's'}(r2)_b`.
    fn unsymmetrized(&self, r1: [f64; 3], r2: [f64; 3], t: f64) -> [[C64; 3]; 3] {
        let mut out = [[C64::new(0.0, 0.0); 3]; 3];
        let mut add = |w: C64, u: [C64; 3], v: [C64; 3]| {
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += w * u[a] * v[b];
                }
            }
        };
        match &self.storage {
            TwoPhotonStorage::Sparse(entries) => {
                for &(k1, k2, v) in entries {
                    add(v, self.mode_vector(k1, r1, t), self.mode_vector(k2, r2, t));
                }
            }
            TwoPhotonStorage::Factored(terms) => {
                for (w, f, g) in terms {
                    add(*w, f.field_at(r1, t), g.field_at(r2, t));
                }
            }
        }
        out
    }
}

fn transpose(m: [[C64; 3]; 3]) -> [[C64; 3]; 3] {
    std::array::from_fn(|a| std::array::from_fn(|b| m[b][a]))
}

/// Symmetrized two-photon amplitude `Ψ′_{ab}(r1, r2, t)`. Built as
/// `A(r1, r2) + A(r2, r1)ᵀ`, so swapping `(r1, a) ↔ (r2, b)` is exact.
pub fn synthesize_two_photon(
    spec: &TwoPhotonSpectral,
    r1: [f64; 3],
    r2: [f64; 3],
    t: f64,
) -> [[C64; 3]; 3] {
    let a12 = spec.unsymmetrized(r1, r2, t);
    let a21 = transpose(spec.unsymmetrized(r2, r1, t));
    std::array::from_fn(|a| std::array::from_fn(|b| a12[a][b] + a21[a][b]))
}
