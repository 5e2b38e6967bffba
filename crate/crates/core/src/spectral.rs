//! Pseudo-spectral machinery on periodic grids: 3-D FFTs, curl, divergence,
//! and the circular polarization basis used for helicity projection.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::fields::{ComplexVectorField, Grid3, RealVectorField, ScalarField, VectorField};

const I: C64 = C64::new(0.0, 1.0);

/// Cached FFT plans for one grid. Forward transforms are unnormalized; the
/// inverse divides by the number of points.
#[derive(Clone)]
pub struct Spectral {
    pub grid: Grid3,
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    k_axes: [Vec<f64>; 3],
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid3) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = std::array::from_fn(|a| planner.plan_fft_forward(grid.n[a]));
        let inv = std::array::from_fn(|a| planner.plan_fft_inverse(grid.n[a]));
        Self {
            grid,
            fwd,
            inv,
            k_axes: grid.k_axes(),
        }
    }

    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let m = self.grid.unravel(idx);
        [
            self.k_axes[0][m[0]],
            self.k_axes[1][m[1]],
            self.k_axes[2][m[2]],
        ]
    }

    fn transform(&self, data: &mut [C64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.grid.n;
        debug_assert_eq!(data.len(), nx * ny * nz);
        if nz > 1 {
            let pz = &plans[2];
            data.par_chunks_mut(nz * ny)
                .for_each(|slab| pz.process(slab));
        }

        // y lines: transpose each x-slab so the lines are contiguous
        if ny > 1 {
            let py = &plans[1];
            data.par_chunks_mut(ny * nz).for_each(|slab| {
                let mut buf = vec![C64::new(0.0, 0.0); ny * nz];
                for j in 0..ny {
                    for k in 0..nz {
                        buf[k * ny + j] = slab[j * nz + k];
                    }
                }
                py.process(&mut buf);
                for j in 0..ny {
                    for k in 0..nz {
                        slab[j * nz + k] = buf[k * ny + j];
                    }
                }
            });
        }

        // x lines: gather one (y = j) plane at a time
        if nx > 1 {
            let px = &plans[0];
            let planes: Vec<Vec<C64>> = (0..ny)
                .into_par_iter()
                .map(|j| {
                    let mut buf = vec![C64::new(0.0, 0.0); nx * nz];
                    for i in 0..nx {
                        for k in 0..nz {
                            buf[k * nx + i] = data[(i * ny + j) * nz + k];
                        }
                    }
                    px.process(&mut buf);
                    buf
                })
                .collect();
            for (j, buf) in planes.into_iter().enumerate() {
                for i in 0..nx {
                    for k in 0..nz {
                        data[(i * ny + j) * nz + k] = buf[k * nx + i];
                    }
                }
            }
        }
    }

    pub fn forward_in_place(&self, data: &mut [C64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse_in_place(&self, data: &mut [C64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / self.grid.size() as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<C64> {
        let mut d: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward_in_place(&mut d);
        d
    }

    pub fn inverse_to_real(&self, mut data: Vec<C64>) -> Vec<f64> {
        self.inverse_in_place(&mut data);
        data.into_iter().map(|v| v.re).collect()
    }

    pub fn forward_vec(&self, f: &ComplexVectorField) -> ComplexVectorField {
        let mut out = f.clone();
        for c in out.comps.iter_mut() {
            self.forward_in_place(c);
        }
        out
    }

    pub fn forward_real_vec(&self, f: &RealVectorField) -> ComplexVectorField {
        VectorField {
            grid: f.grid,
            comps: std::array::from_fn(|a| self.forward_real(&f.comps[a])),
        }
    }

    pub fn inverse_vec(&self, f: &ComplexVectorField) -> ComplexVectorField {
        let mut out = f.clone();
        for c in out.comps.iter_mut() {
            self.inverse_in_place(c);
        }
        out
    }

    pub fn inverse_real_vec(&self, f: ComplexVectorField) -> RealVectorField {
        let [x, y, z] = f.comps;
        VectorField {
            grid: f.grid,
            comps: [
                self.inverse_to_real(x),
                self.inverse_to_real(y),
                self.inverse_to_real(z),
            ],
        }
    }

    /// `i k × F̃` on a spectral field.
    pub fn curl_k(&self, f: &ComplexVectorField) -> ComplexVectorField {
        let mut out = ComplexVectorField::zeros(f.grid);
        let [ox, oy, oz] = &mut out.comps;
        ox.par_iter_mut()
            .zip(oy.par_iter_mut())
            .zip(oz.par_iter_mut())
            .enumerate()
            .for_each(|(idx, ((x, y), z))| {
                let k = self.kvec(idx);
                let v = f.at(idx);
                *x = I * (k[1] * v[2] - k[2] * v[1]);
                *y = I * (k[2] * v[0] - k[0] * v[2]);
                *z = I * (k[0] * v[1] - k[1] * v[0]);
            });
        out
    }

    /// `i k · F̃` on a spectral field.
    pub fn div_k(&self, f: &ComplexVectorField) -> Vec<C64> {
        (0..self.grid.size())
            .into_par_iter()
            .map(|idx| {
                let k = self.kvec(idx);
                let v = f.at(idx);
                I * (k[0] * v[0] + k[1] * v[1] + k[2] * v[2])
            })
            .collect()
    }

    pub fn curl(&self, f: &RealVectorField) -> RealVectorField {
        self.inverse_real_vec(self.curl_k(&self.forward_real_vec(f)))
    }

    pub fn curl_complex(&self, f: &ComplexVectorField) -> ComplexVectorField {
        self.inverse_vec(&self.curl_k(&self.forward_vec(f)))
    }

    pub fn div(&self, f: &RealVectorField) -> ScalarField {
        let d = self.div_k(&self.forward_real_vec(f));
        ScalarField {
            grid: f.grid,
            values: self.inverse_to_real(d),
        }
    }

    pub fn div_complex(&self, f: &ComplexVectorField) -> Vec<C64> {
        let mut d = self.div_k(&self.forward_vec(f));
        self.inverse_in_place(&mut d);
        d
    }

    /// `∇(∇·F)` evaluated spectrally as `-k (k·F̃)`.
    pub fn grad_div_complex(&self, f: &ComplexVectorField) -> ComplexVectorField {
        let fk = self.forward_vec(f);
        let mut out = ComplexVectorField::zeros(f.grid);
        for idx in 0..self.grid.size() {
            let k = self.kvec(idx);
            let v = fk.at(idx);
            let kd = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
            for a in 0..3 {
                out.comps[a][idx] = -k[a] * kd;
            }
        }
        self.inverse_vec(&out)
    }
}

/// Circular polarization basis for wavevector `k`: `(ê₊, ê₋, k̂)`.
///
/// `ê± = (ê₁ ± i ê₂)/√2` with `ê₁ × ê₂ = k̂`, so that `i k̂ × ê± = ± ê±`.
/// The reference axis is ŷ, `ê₁ = ŷ × k̂ / |ŷ × k̂|`, which for `k̂ = ẑ` gives
/// `ê₊ = (x̂ + iŷ)/√2`. For `k̂ ∥ ŷ` the reference falls back to ẑ.
/// Returns `None` at `k = 0`.
pub fn polarization_basis(k: [f64; 3]) -> Option<([C64; 3], [C64; 3], [f64; 3])> {
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    if kn == 0.0 {
        return None;
    }
    let kh = [k[0] / kn, k[1] / kn, k[2] / kn];
    // ŷ × k̂ = (k̂z, 0, -k̂x)
    let mut e1 = [kh[2], 0.0, -kh[0]];
    let mut n1 = (e1[0] * e1[0] + e1[2] * e1[2]).sqrt();
    if n1 < 1e-8 {
        // ẑ × k̂ = (-k̂y, k̂x, 0)
        e1 = [-kh[1], kh[0], 0.0];
        n1 = (e1[0] * e1[0] + e1[1] * e1[1]).sqrt();
    }
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross(kh, e1);
    let plus = std::array::from_fn(|a| C64::new(e1[a], e2[a]) * FRAC_1_SQRT_2);
    let minus = std::array::from_fn(|a| C64::new(e1[a], -e2[a]) * FRAC_1_SQRT_2);
    Some((plus, minus, kh))
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn cross_c(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `a† · b`.
#[inline]
pub fn cdot(a: [C64; 3], b: [C64; 3]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}
