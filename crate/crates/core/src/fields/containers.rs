use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use super::Grid3;
use crate::{Error, Result};

/// A 3-vector per grid point, stored as three component planes.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    pub grid: Grid3,
    pub comps: [Vec<T>; 3],
}

pub type RealVectorField = VectorField<f64>;
pub type ComplexVectorField = VectorField<C64>;

/// Finite-value check shared by the real and complex containers.
pub trait Finite: Copy {
    fn finite(self) -> bool;
    fn abs2(self) -> f64;
}

impl Finite for f64 {
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn abs2(self) -> f64 {
        self * self
    }
}

impl Finite for C64 {
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
}

impl<T: Copy + Default + Finite> VectorField<T> {
    pub fn zeros(grid: Grid3) -> Self {
        let n = grid.size();
        Self {
            grid,
            comps: std::array::from_fn(|_| vec![T::default(); n]),
        }
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> [T; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for idx in 0..grid.size() {
            let v = f(grid.position(idx));
            for a in 0..3 {
                out.comps[a][idx] = v[a];
            }
        }
        out
    }

    pub fn from_comps(grid: Grid3, comps: [Vec<T>; 3]) -> Result<Self> {
        for c in &comps {
            if c.len() != grid.size() {
                return Err(Error::GridMismatch(format!(
                    "component length {} for grid of {} points",
                    c.len(),
                    grid.size()
                )));
            }
        }
        Ok(Self { grid, comps })
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [T; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    /// First non-finite entry as a flat `point * 3 + component` index.
    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        for idx in 0..self.grid.size() {
            for a in 0..3 {
                if !self.comps[a][idx].finite() {
                    return Err(Error::NonFinite {
                        what,
                        index: idx * 3 + a,
                    });
                }
            }
        }
        Ok(())
    }

    /// `Σ |v|²` over grid points (no cell volume).
    pub fn sum_sq(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.abs2())
            .sum()
    }

    /// `∫ |v|² d³r` by the periodic trapezoid rule.
    pub fn integral_sq(&self) -> f64 {
        self.sum_sq() * self.grid.cell_volume()
    }

    /// Root-mean-square of `|v|` over grid points.
    pub fn rms(&self) -> f64 {
        (self.sum_sq() / self.grid.size() as f64).sqrt()
    }

    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        (0..3).map(|a| self.comps[a][idx].abs2()).sum()
    }
}

impl<T> VectorField<T>
where
    T: Copy + Default + Finite + Add<Output = T> + Sub<Output = T>,
{
    pub fn add(&self, other: &Self) -> Self {
        let comps = std::array::from_fn(|a| {
            self.comps[a]
                .iter()
                .zip(&other.comps[a])
                .map(|(&x, &y)| x + y)
                .collect()
        });
        Self {
            grid: self.grid,
            comps,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let comps = std::array::from_fn(|a| {
            self.comps[a]
                .iter()
                .zip(&other.comps[a])
                .map(|(&x, &y)| x - y)
                .collect()
        });
        Self {
            grid: self.grid,
            comps,
        }
    }

    /// RMS of `self - other` divided by RMS of `other`.
    pub fn relative_rms_diff(&self, other: &Self) -> f64 {
        let d = self.sub(other).sum_sq();
        let r = other.sum_sq();
        if r == 0.0 {
            d.sqrt()
        } else {
            (d / r).sqrt()
        }
    }
}

impl<T: Copy + Mul<f64, Output = T>> VectorField<T> {
    pub fn scaled(&self, s: f64) -> Self {
        let comps = std::array::from_fn(|a| self.comps[a].iter().map(|&x| x * s).collect());
        Self {
            grid: self.grid,
            comps,
        }
    }
}

impl RealVectorField {
    pub fn to_complex(&self) -> ComplexVectorField {
        let comps =
            std::array::from_fn(|a| self.comps[a].iter().map(|&x| C64::new(x, 0.0)).collect());
        VectorField {
            grid: self.grid,
            comps,
        }
    }
}

impl ComplexVectorField {
    pub fn re(&self) -> RealVectorField {
        let comps = std::array::from_fn(|a| self.comps[a].iter().map(|x| x.re).collect());
        VectorField {
            grid: self.grid,
            comps,
        }
    }

    pub fn im(&self) -> RealVectorField {
        let comps = std::array::from_fn(|a| self.comps[a].iter().map(|x| x.im).collect());
        VectorField {
            grid: self.grid,
            comps,
        }
    }

    /// `Σ_r a*(r)·b(r)` times the cell volume.
    pub fn inner(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..3 {
            for (x, y) in self.comps[a].iter().zip(&other.comps[a]) {
                acc += x.conj() * y;
            }
        }
        acc * self.grid.cell_volume()
    }

    pub fn scaled_c(&self, s: C64) -> Self {
        let comps = std::array::from_fn(|a| self.comps[a].iter().map(|&x| x * s).collect());
        VectorField {
            grid: self.grid,
            comps,
        }
    }
}

/// One real value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid3,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.size()],
        }
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        Self {
            grid,
            values: (0..grid.size()).map(|i| f(grid.position(i))).collect(),
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Real electric and magnetic fields at time `t` (internal units).
#[derive(Debug, Clone, PartialEq)]
pub struct RealFieldPair {
    pub e: RealVectorField,
    pub b: RealVectorField,
    pub t: f64,
}

impl RealFieldPair {
    pub fn new(e: RealVectorField, b: RealVectorField, t: f64) -> Result<Self> {
        e.grid.ensure_same(&b.grid, "E vs B")?;
        e.check_finite("E")?;
        b.check_finite("B")?;
        Ok(Self { e, b, t })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            e: VectorField::zeros(grid),
            b: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.e.grid
    }

    /// Builds the pair from the displacement field, `E = D/ε` pointwise. A
    /// divergence-free `D` gives data satisfying Gauss's law in the medium.
    pub fn from_displacement(
        d: RealVectorField,
        b: RealVectorField,
        medium: &MediumMap,
        t: f64,
    ) -> Result<Self> {
        d.grid.ensure_same(&medium.grid, "D vs medium")?;
        let mut e = d;
        for a in 0..3 {
            for (idx, v) in e.comps[a].iter_mut().enumerate() {
                *v /= medium.epsilon(idx);
            }
        }
        Self::new(e, b, t)
    }

    /// RMS of the concatenated `(E, B)` vector.
    pub fn rms(&self) -> f64 {
        ((self.e.sum_sq() + self.b.sum_sq()) / (2 * self.grid().size()) as f64).sqrt()
    }

    /// `∫ (ε₀|E|²/2 + |B|²/(2μ₀)) d³r`.
    pub fn electromagnetic_energy(&self) -> f64 {
        0.5 * (self.e.integral_sq() + self.b.integral_sq())
    }

    /// `∫ (ε|E|²/2 + |B|²/(2μ)) d³r`, conserved by linear non-absorptive media.
    pub fn medium_energy(&self, medium: &MediumMap) -> f64 {
        let mut acc = 0.0;
        for idx in 0..self.grid().size() {
            let e2: f64 = (0..3).map(|a| self.e.comps[a][idx].powi(2)).sum();
            let b2: f64 = (0..3).map(|a| self.b.comps[a][idx].powi(2)).sum();
            acc += 0.5 * (medium.epsilon(idx) * e2 + b2 / medium.mu(idx));
        }
        acc * self.grid().cell_volume()
    }

    pub fn relative_rms_diff(&self, other: &Self) -> f64 {
        let d = self.e.sub(&other.e).sum_sq() + self.b.sub(&other.b).sum_sq();
        let r = other.e.sum_sq() + other.b.sum_sq();
        if r == 0.0 {
            d.sqrt()
        } else {
            (d / r).sqrt()
        }
    }
}

/// Helicity-resolved photon wave function `Ψ = Ψ⁺ + Ψ⁻` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RSState {
    pub psi_plus: ComplexVectorField,
    pub psi_minus: ComplexVectorField,
    pub t: f64,
}

impl RSState {
    pub fn new(
        psi_plus: ComplexVectorField,
        psi_minus: ComplexVectorField,
        t: f64,
    ) -> Result<Self> {
        psi_plus.grid.ensure_same(&psi_minus.grid, "Ψ⁺ vs Ψ⁻")?;
        psi_plus.check_finite("Ψ⁺")?;
        psi_minus.check_finite("Ψ⁻")?;
        Ok(Self {
            psi_plus,
            psi_minus,
            t,
        })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            psi_plus: VectorField::zeros(grid),
            psi_minus: VectorField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.psi_plus.grid
    }

    pub fn psi(&self) -> ComplexVectorField {
        self.psi_plus.add(&self.psi_minus)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            psi_plus: self.psi_plus.scaled(s),
            psi_minus: self.psi_minus.scaled(s),
            t: self.t,
        }
    }

    /// `∫ |Ψ|² d³r`.
    pub fn energy(&self) -> f64 {
        self.psi().integral_sq()
    }

    pub fn relative_rms_diff(&self, other: &Self) -> f64 {
        let d = self.psi_plus.sub(&other.psi_plus).sum_sq()
            + self.psi_minus.sub(&other.psi_minus).sum_sq();
        let r = other.psi_plus.sum_sq() + other.psi_minus.sum_sq();
        if r == 0.0 {
            d.sqrt()
        } else {
            (d / r).sqrt()
        }
    }
}

/// Static linear susceptibilities `χ_e(r)`, `χ_m(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumMap {
    pub grid: Grid3,
    pub chi_e: Vec<f64>,
    pub chi_m: Vec<f64>,
}

impl MediumMap {
    pub fn new(grid: Grid3, chi_e: Vec<f64>, chi_m: Vec<f64>) -> Result<Self> {
        if chi_e.len() != grid.size() || chi_m.len() != grid.size() {
            return Err(Error::GridMismatch("susceptibility map size".into()));
        }
        for (what, map) in [("chi_e", &chi_e), ("chi_m", &chi_m)] {
            if let Some((i, v)) = map
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > -1.0))
            {
                return Err(Error::InvalidMedium(format!(
                    "{what}[{i}] = {v}: need finite 1+χ > 0"
                )));
            }
        }
        Ok(Self { grid, chi_e, chi_m })
    }

    pub fn vacuum(grid: Grid3) -> Self {
        Self {
            grid,
            chi_e: vec![0.0; grid.size()],
            chi_m: vec![0.0; grid.size()],
        }
    }

    pub fn uniform(grid: Grid3, chi_e: f64, chi_m: f64) -> Result<Self> {
        Self::new(grid, vec![chi_e; grid.size()], vec![chi_m; grid.size()])
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> (f64, f64)) -> Result<Self> {
        let (ce, cm) = (0..grid.size()).map(|i| f(grid.position(i))).unzip();
        Self::new(grid, ce, cm)
    }

    #[inline]
    pub fn epsilon(&self, idx: usize) -> f64 {
        1.0 + self.chi_e[idx]
    }

    #[inline]
    pub fn mu(&self, idx: usize) -> f64 {
        1.0 + self.chi_m[idx]
    }

    #[inline]
    pub fn index_of_refraction(&self, idx: usize) -> f64 {
        (self.epsilon(idx) * self.mu(idx)).sqrt()
    }

    pub fn min_index(&self) -> f64 {
        (0..self.grid.size())
            .map(|i| self.index_of_refraction(i))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_vacuum(&self) -> bool {
        self.chi_e.iter().chain(&self.chi_m).all(|&v| v == 0.0)
    }

    /// `(χ_e, χ_m)` when both maps are spatially constant.
    pub fn as_uniform(&self) -> Option<(f64, f64)> {
        let e0 = self.chi_e[0];
        let m0 = self.chi_m[0];
        (self.chi_e.iter().all(|&v| v == e0) && self.chi_m.iter().all(|&v| v == m0))
            .then_some((e0, m0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medium_rejects_nonpositive_permittivity() {
        let g = Grid3::cube(2, 1.0).unwrap();
        assert!(MediumMap::uniform(g, -1.0, 0.0).is_err());
        assert!(MediumMap::uniform(g, 0.0, f64::NAN).is_err());
        let m = MediumMap::uniform(g, 1.25, 0.0).unwrap();
        assert!((m.index_of_refraction(0) - 1.5).abs() < 1e-15);
        assert_eq!(m.as_uniform(), Some((1.25, 0.0)));
    }

    #[test]
    fn non_finite_field_reports_first_index() {
        let g = Grid3::cube(2, 1.0).unwrap();
        let mut e = RealVectorField::zeros(g);
        e.comps[1][3] = f64::NAN;
        e.comps[0][5] = f64::INFINITY;
        match e.check_finite("E") {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 3 * 3 + 1),
            other => panic!("{other:?}"),
        }
    }
}
