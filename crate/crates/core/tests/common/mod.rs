#![allow(dead_code)]

use photonwave::fields::{
    helicity_project, ComplexVectorField, Grid3, RealFieldPair, RealVectorField,
};
use photonwave::spectral::Spectral;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real vector field with Fourier content limited to |m| ≤ band per axis.
pub fn random_band_limited(sp: &Spectral, band: i64, rng: &mut ChaCha8Rng) -> RealVectorField {
    let g = sp.grid;
    let mut f = RealVectorField::zeros(g);
    let modes: Vec<[i64; 3]> = (0..6)
        .map(|_| {
            std::array::from_fn(|a| {
                if g.n[a] > 2 {
                    rng.gen_range(-band..=band)
                } else {
                    0
                }
            })
        })
        .collect();
    for m in modes {
        let amp: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for idx in 0..g.size() {
            let r = g.position(idx);
            let arg: f64 = (0..3)
                .map(|a| std::f64::consts::TAU * m[a] as f64 * r[a] / g.len[a])
                .sum::<f64>()
                + ph;
            for a in 0..3 {
                f.comps[a][idx] += amp[a] * arg.cos();
            }
        }
    }
    f
}

pub fn transverse_part(sp: &Spectral, f: &RealVectorField) -> RealVectorField {
    let parts = helicity_project(sp, &f.to_complex()).unwrap();
    parts.plus.add(&parts.minus).re()
}

pub fn random_transverse_pair(sp: &Spectral, band: i64, rng: &mut ChaCha8Rng) -> RealFieldPair {
    let e = transverse_part(sp, &random_band_limited(sp, band, rng));
    let b = transverse_part(sp, &random_band_limited(sp, band, rng));
    RealFieldPair::new(e, b, 0.0).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn small_grid() -> Grid3 {
    Grid3::new([8, 6, 10], [2.0, 1.5, 2.5]).unwrap()
}

pub fn complex_zero(g: Grid3) -> ComplexVectorField {
    ComplexVectorField::zeros(g)
}

/// Linearly polarized plane wave `E = x̂ cos(kz − ωt)`, `B = ŷ (k/ω) cos(kz − ωt)`.
pub fn plane_wave(g: Grid3, k: f64, omega: f64, t: f64) -> RealFieldPair {
    let e = RealVectorField::from_fn(g, |r| [(k * r[2] - omega * t).cos(), 0.0, 0.0]);
    let b = RealVectorField::from_fn(g, |r| [0.0, k / omega * (k * r[2] - omega * t).cos(), 0.0]);
    RealFieldPair::new(e, b, t).unwrap()
}

/// Right-moving x-polarized packet with Gaussian envelope along z and a
/// Gaussian profile in y; `D` is divergence free by construction.
pub fn packet(
    g: Grid3,
    medium: &photonwave::fields::MediumMap,
    z0: f64,
    sigma: f64,
    k0: f64,
    waist: Option<f64>,
) -> RealFieldPair {
    let yc = 0.5 * g.len[1];
    let prof = move |r: [f64; 3]| {
        let trans = waist.map_or(1.0, |w| (-(r[1] - yc).powi(2) / (2.0 * w * w)).exp());
        trans * (-(r[2] - z0).powi(2) / (2.0 * sigma * sigma)).exp() * (k0 * r[2]).cos()
    };
    let d = RealVectorField::from_fn(g, |r| [prof(r), 0.0, 0.0]);
    let b = RealVectorField::from_fn(g, |r| [0.0, prof(r), 0.0]);
    let b = transverse_part(&Spectral::new(g), &b);
    RealFieldPair::from_displacement(d, b, medium, 0.0).unwrap()
}
