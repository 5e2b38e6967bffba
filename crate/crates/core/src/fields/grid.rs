use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Periodic rectangular grid, row-major with `z` fastest.
///
/// The wavevector lattice is the DFT dual of the point lattice,
/// `k = 2π m / L` with `m` the signed frequency index. On even axes the
/// Nyquist index has no well-defined sign; its wavevector component is taken
/// as zero so that real fields stay real under every spectral operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub len: [f64; 3],
}

impl Grid3 {
    pub fn new(n: [usize; 3], len: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if n[a] == 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: count must be positive"
                )));
            }
            if !(len[a].is_finite() && len[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: length {} not > 0",
                    len[a]
                )));
            }
        }
        Ok(Self { n, len })
    }

    /// Cubic grid with `n` points per axis and side `l`.
    pub fn cube(n: usize, l: f64) -> Result<Self> {
        Self::new([n; 3], [l; 3])
    }

    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.len[0] / self.n[0] as f64,
            self.len[1] / self.n[1] as f64,
            self.len[2] / self.n[2] as f64,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        let d = self.spacing();
        d[0].min(d[1]).min(d[2])
    }

    pub fn cell_volume(&self) -> f64 {
        let d = self.spacing();
        d[0] * d[1] * d[2]
    }

    pub fn volume(&self) -> f64 {
        self.len[0] * self.len[1] * self.len[2]
    }

    /// Volume of one cell of the wavevector lattice, `(2π)³/V`.
    pub fn k_cell_volume(&self) -> f64 {
        TAU.powi(3) / self.volume()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n[2];
        let j = (idx / self.n[2]) % self.n[1];
        let i = idx / (self.n[1] * self.n[2]);
        [i, j, k]
    }

    /// Position of a grid point; the origin is at index (0,0,0).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unravel(idx);
        let d = self.spacing();
        [
            ijk[0] as f64 * d[0],
            ijk[1] as f64 * d[1],
            ijk[2] as f64 * d[2],
        ]
    }

    /// Signed frequency index along `axis`, or `None` at the Nyquist index.
    pub fn signed_index(&self, axis: usize, m: usize) -> Option<i64> {
        let n = self.n[axis];
        if n.is_multiple_of(2) && m == n / 2 {
            None
        } else if m <= n / 2 {
            Some(m as i64)
        } else {
            Some(m as i64 - n as i64)
        }
    }

    /// Wavevector component along `axis` for frequency index `m`.
    pub fn k_component(&self, axis: usize, m: usize) -> f64 {
        match self.signed_index(axis, m) {
            Some(s) => TAU * s as f64 / self.len[axis],
            None => 0.0,
        }
    }

    /// Wavevector of flat spectral index `idx`.
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let m = self.unravel(idx);
        [
            self.k_component(0, m[0]),
            self.k_component(1, m[1]),
            self.k_component(2, m[2]),
        ]
    }

    /// Per-axis wavevector tables, cheaper than repeated `kvec` calls.
    pub fn k_axes(&self) -> [Vec<f64>; 3] {
        std::array::from_fn(|a| (0..self.n[a]).map(|m| self.k_component(a, m)).collect())
    }

    /// Flat spectral index holding the wavevector `-k` of `idx`.
    pub fn negated_index(&self, idx: usize) -> usize {
        let m = self.unravel(idx);
        let neg = |a: usize| (self.n[a] - m[a]) % self.n[a];
        self.index(neg(0), neg(1), neg(2))
    }

    /// Flat index of the lattice wavevector `2π·m/L` for signed integers `m`.
    pub fn index_of_mode(&self, m: [i64; 3]) -> usize {
        let wrap = |a: usize| m[a].rem_euclid(self.n[a] as i64) as usize;
        self.index(wrap(0), wrap(1), wrap(2))
    }

    pub fn same_shape(&self, other: &Grid3) -> bool {
        self.n == other.n && self.len == other.len
    }

    pub fn ensure_same(&self, other: &Grid3, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?}/{:?} vs {:?}/{:?}",
                self.n, self.len, other.n, other.len
            )))
        }
    }
}
