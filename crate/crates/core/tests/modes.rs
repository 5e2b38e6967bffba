mod common;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use photonwave::fields::*;
use photonwave::modes::*;
use photonwave::propagator::step_rs_vacuum;
use photonwave::spectral::{polarization_basis, Spectral};
use photonwave::Error;
use rand::Rng;

use common::*;

fn zgrid() -> Grid3 {
    Grid3::new([4, 4, 16], [2.0, 2.0, 8.0]).unwrap()
}

/// `A ê_s e^{ik·r}` with amplitude chosen so that `∫|Ψ′|² = energy`.
fn plane_mode(g: Grid3, k: [f64; 3], s: Helicity, energy: f64) -> ComplexVectorField {
    let (ep, em, _) = polarization_basis(k).unwrap();
    let e = if s == Helicity::Plus { ep } else { em };
    let amp = (energy / g.volume()).sqrt();
    ComplexVectorField::from_fn(g, |r| {
        let ph = C64::from_polar(amp, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]);
        e.map(|v| v * ph)
    })
}

fn state(psi: ComplexVectorField, sp: &Spectral) -> RSState {
    let parts = helicity_project(sp, &psi).unwrap();
    RSState::new(parts.plus, parts.minus, 0.0).unwrap()
}

fn random_spectrum(g: Grid3, chi_e: f64, seed: u64, band: f64) -> ModeAmplitudes {
    let mut r = rng(seed);
    ModeAmplitudes::from_fn(g, chi_e, 0.0, |k, _| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let env = (-k2 / (2.0 * band * band)).exp();
        C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)) * env
    })
    .unwrap()
    .normalized()
    .unwrap()
}

#[test]
fn single_mode_decomposes_to_one_amplitude() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = [0.0, 0.0, TAU * 3.0 / 8.0];
    let omega = k[2];
    let st = state(plane_mode(g, k, Helicity::Plus, omega), &sp);
    let modes = decompose(&sp, &st, &MediumMap::vacuum(g)).unwrap();
    let a = modes.get([0, 0, 3], Helicity::Plus);
    assert!((a.norm_sqr() * modes.measure() - 1.0).abs() < 1e-12);
    let rest: f64 = modes.norm_sq() - a.norm_sqr() * modes.measure();
    assert!(rest.abs() < 1e-12);
}

#[test]
fn two_mode_weights_follow_energy_over_frequency() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k1 = [0.0, 0.0, TAU / 8.0];
    let k2 = [TAU / 2.0, 0.0, TAU * 2.0 / 8.0];
    let (w1r, w2r) = (k1[2], (k2[0] * k2[0] + k2[2] * k2[2]).sqrt());
    // energies w_i with w1/ω1 + w2/ω2 = 1 and w1 = 2 w2
    let w2 = 1.0 / (2.0 / w1r + 1.0 / w2r);
    let w1 = 2.0 * w2;
    let psi = plane_mode(g, k1, Helicity::Plus, w1).add(&plane_mode(g, k2, Helicity::Minus, w2));
    let modes = decompose(&sp, &state(psi, &sp), &MediumMap::vacuum(g)).unwrap();
    let a1 = modes.get([0, 0, 1], Helicity::Plus).norm_sqr();
    let a2 = modes.get([1, 0, 2], Helicity::Minus).norm_sqr();
    let want = (w1 / w1r) / (w2 / w2r);
    assert!((a1 / a2 / want - 1.0).abs() < 1e-12);
}

fn normalized_compose(sp: &Spectral, med: &MediumMap, seed: u64) -> RSState {
    let (chi_e, chi_m) = med.as_uniform().unwrap();
    let f = random_transverse_pair(sp, 2, &mut rng(seed));
    let st = rs_compose(sp, &f, med).unwrap();
    let norm = mode_coefficients(sp, &st.psi(), chi_e, chi_m, 0.0)
        .unwrap()
        .norm_sq();
    st.scaled(1.0 / norm.sqrt())
}

#[test]
fn decompose_synthesize_round_trip() {
    let g = small_grid();
    let sp = Spectral::new(g);
    for (i, med) in [
        MediumMap::vacuum(g),
        MediumMap::uniform(g, 1.25, 0.4).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let mut st = normalized_compose(&sp, med, 30 + i as u64);
        st.t = 0.7;
        let modes = decompose(&sp, &st, med).unwrap();
        let back = synthesize_one_photon(&sp, &modes, st.t).unwrap();
        assert!(back.relative_rms_diff(&st) < 1e-12);
    }
}

#[test]
fn synthesize_decompose_is_identity_on_spectra() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let med = MediumMap::uniform(g, 0.5, 0.0).unwrap();
    let spec = random_spectrum(g, 0.5, 3, 4.0);
    let st = synthesize_one_photon(&sp, &spec, 0.3).unwrap();
    let back = decompose(&sp, &st, &med).unwrap();
    let diff = back.scaled(C64::new(-1.0, 0.0));
    let d: f64 = (0..2)
        .map(|s| {
            spec.amps[s]
                .iter()
                .zip(&diff.amps[s])
                .map(|(a, b)| (a + b).norm_sqr())
                .sum::<f64>()
        })
        .sum();
    assert!((d * spec.measure()).sqrt() < 1e-12);
}

#[test]
fn decompose_rejections() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let vac = MediumMap::vacuum(g);
    let k = [0.0, 0.0, TAU / 8.0];
    let good = state(plane_mode(g, k, Helicity::Plus, k[2]), &sp);

    let bump = MediumMap::from_fn(g, |r| (0.1 * r[0], 0.0)).unwrap();
    assert!(matches!(
        decompose(&sp, &good, &bump),
        Err(Error::InvalidMedium(_))
    ));
    assert!(matches!(
        decompose(&sp, &good.scaled(2.0), &vac),
        Err(Error::NotNormalized { .. })
    ));

    let mut longi = good.clone();
    for idx in 0..g.size() {
        longi.psi_plus.comps[2][idx] += C64::from_polar(0.1, k[2] * g.position(idx)[2]);
    }
    assert!(matches!(
        decompose(&sp, &longi, &vac),
        Err(Error::NotTransverse { .. })
    ));

    let mut dc = good.clone();
    for v in dc.psi_plus.comps[0].iter_mut() {
        *v += C64::new(0.01, 0.0);
    }
    assert!(matches!(
        decompose(&sp, &dc, &vac),
        Err(Error::ZeroFrequencyMode { .. })
    ));
}

#[test]
fn hamiltonian_examples() {
    let g = zgrid();
    let mut m = ModeAmplitudes::zeros(g, 0.0, 0.0).unwrap();
    let dk = m.measure();
    m.set([0, 0, 2], Helicity::Plus, C64::new(1.0 / dk.sqrt(), 0.0));
    let w = TAU * 2.0 / 8.0;
    assert!((total_energy(&m) - w).abs() < 1e-14);

    let mut m2 = ModeAmplitudes::zeros(g, 0.0, 0.0).unwrap();
    let a = C64::new((0.5 / dk).sqrt(), 0.0);
    m2.set([0, 0, 2], Helicity::Plus, a);
    m2.set([0, 0, 4], Helicity::Minus, a);
    assert!((total_energy(&m2) - 1.5 * w).abs() < 1e-14);
}

#[test]
fn parseval_energy_identity_on_random_states() {
    let g = small_grid();
    let sp = Spectral::new(g);
    for (seed, med) in [
        (1, MediumMap::vacuum(g)),
        (2, MediumMap::uniform(g, 1.25, 0.0).unwrap()),
        (3, MediumMap::uniform(g, 0.3, 0.7).unwrap()),
    ] {
        let st = normalized_compose(&sp, &med, seed);
        let h = total_energy(&decompose(&sp, &st, &med).unwrap());
        let direct = energy_density(&st).integral();
        assert!((h - direct).abs() <= 1e-10 * direct, "{h} vs {direct}");
    }
}

#[test]
fn delta_spectrum_gives_plane_wave_of_energy_omega() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let mut m = ModeAmplitudes::zeros(g, 1.25, 0.0).unwrap();
    m.set(
        [1, 0, 3],
        Helicity::Minus,
        C64::new(0.0, 1.0 / m.measure().sqrt()),
    );
    let st = synthesize_one_photon(&sp, &m, 0.4).unwrap();
    let idx = g.index_of_mode([1, 0, 3]);
    assert!((energy_density(&st).integral() - m.omega(idx)).abs() < 1e-12);
    // density is uniform for a single mode
    let d = energy_density(&st);
    let mean = d.integral() / g.volume();
    assert!(d.values.iter().all(|v| (v - mean).abs() < 1e-12 * mean));
    st.check_invariants(&sp, 1e-10).unwrap();
}

#[test]
fn synthesized_packet_translates_at_c_over_n() {
    // modes along +z only on a 1-D lattice: ω = ck/n is exactly linear
    let g = Grid3::new([1, 1, 256], [1.0, 1.0, 64.0]).unwrap();
    let sp = Spectral::new(g);
    let n = 1.5;
    let (k0, sk) = (TAU * 20.0 / 64.0, TAU * 3.0 / 64.0);
    let spec = ModeAmplitudes::from_fn(g, n * n - 1.0, 0.0, |k, s| {
        if s == Helicity::Plus && k[2] > 0.0 {
            C64::from_polar((-(k[2] - k0).powi(2) / (2.0 * sk * sk)).exp(), -k[2] * 16.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .unwrap()
    .normalized()
    .unwrap();
    let shift_cells = 40;
    let t = shift_cells as f64 * g.spacing()[2] * n;
    let d0 = energy_density(&synthesize_one_photon(&sp, &spec, 0.0).unwrap());
    let d1 = energy_density(&synthesize_one_photon(&sp, &spec, t).unwrap());
    let scale = d0.max_abs();
    for i in 0..256 {
        let j = (i + shift_cells) % 256;
        assert!((d1.values[j] - d0.values[i]).abs() < 1e-12 * scale);
    }
}

#[test]
fn time_shift_commutes_with_synthesis() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let spec = random_spectrum(g, 0.0, 17, 5.0);
    let t = 0.83;
    let a = synthesize_one_photon(&sp, &spec, t).unwrap();
    let b = synthesize_one_photon(&sp, &spec.phase_advanced(t), 0.0).unwrap();
    let mut b = b;
    b.t = t;
    assert!(a.relative_rms_diff(&b) < 1e-12);
    let mut c = step_rs_vacuum(&sp, &synthesize_one_photon(&sp, &spec, 0.0).unwrap(), t).unwrap();
    c.t = t;
    assert!(a.relative_rms_diff(&c) < 1e-12);
    a.check_invariants(&sp, 1e-10).unwrap();
}

#[test]
fn direct_mode_sum_matches_grid_synthesis() {
    let g = Grid3::new([4, 6, 8], [2.0, 3.0, 4.0]).unwrap();
    let sp = Spectral::new(g);
    let spec = random_spectrum(g, 0.2, 5, 3.0);
    let st = synthesize_one_photon(&sp, &spec, 0.25).unwrap();
    let psi = st.psi();
    for idx in [0, 7, 50, 191] {
        let v = spec.field_at(g.position(idx), 0.25);
        let w = psi.at(idx);
        for a in 0..3 {
            assert!((v[a] - w[a]).norm() < 1e-12);
        }
    }
}

fn two_photon_grid() -> Grid3 {
    Grid3::new([4, 4, 8], [2.0, 2.0, 4.0]).unwrap()
}

fn random_key(r: &mut impl Rng) -> ModeKey {
    let m = [
        r.gen_range(-1..=1),
        r.gen_range(-1..=1),
        r.gen_range(-3..=3),
    ];
    let m = if m == [0, 0, 0] { [0, 0, 1] } else { m };
    ModeKey::new(
        m,
        if r.gen_bool(0.5) {
            Helicity::Plus
        } else {
            Helicity::Minus
        },
    )
}

#[test]
fn two_photon_amplitude_is_exchange_symmetric() {
    let g = two_photon_grid();
    for seed in 0..50 {
        let mut r = rng(seed);
        let entries = (0..6)
            .map(|_| {
                (
                    random_key(&mut r),
                    random_key(&mut r),
                    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let spec = TwoPhotonSpectral::sparse(g, 0.3, 0.0, entries)
            .unwrap()
            .normalized()
            .unwrap();
        assert!((spec.symmetrized_norm_sq() - 1.0).abs() < 1e-12);
        let r1 = [
            r.gen_range(0.0..2.0),
            r.gen_range(0.0..2.0),
            r.gen_range(0.0..4.0),
        ];
        let r2 = [
            r.gen_range(0.0..2.0),
            r.gen_range(0.0..2.0),
            r.gen_range(0.0..4.0),
        ];
        let t = r.gen_range(0.0..1.0);
        let a = synthesize_two_photon(&spec, r1, r2, t);
        let b = synthesize_two_photon(&spec, r2, r1, t);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[i][j], b[j][i]);
            }
        }
    }
}

#[test]
fn product_spectrum_gives_symmetrized_tensor_product() {
    let g = two_photon_grid();
    let f = random_spectrum(g, 0.0, 41, 3.0);
    let h = random_spectrum(g, 0.0, 42, 3.0);
    let spec =
        TwoPhotonSpectral::factored(vec![(C64::new(1.0, 0.0), f.clone(), h.clone())]).unwrap();
    let (r1, r2, t) = ([0.3, 1.1, 2.0], [1.7, 0.2, 3.3], 0.4);
    let out = synthesize_two_photon(&spec, r1, r2, t);
    let (f1, f2, h1, h2) = (
        f.field_at(r1, t),
        f.field_at(r2, t),
        h.field_at(r1, t),
        h.field_at(r2, t),
    );
    for a in 0..3 {
        for b in 0..3 {
            let want = f1[a] * h2[b] + h1[a] * f2[b];
            assert!((out[a][b] - want).norm() < 1e-12 * want.norm().max(1e-3));
        }
    }
}

#[test]
fn single_pair_matches_hand_evaluation() {
    let g = two_photon_grid();
    let chi = 1.25;
    let n = 1.5;
    let (m1, m2) = ([0, 1, 2], [1, 0, -1]);
    let c = C64::new(0.3, -0.7);
    let spec = TwoPhotonSpectral::sparse(
        g,
        chi,
        0.0,
        vec![(
            ModeKey::new(m1, Helicity::Plus),
            ModeKey::new(m2, Helicity::Minus),
            c,
        )],
    )
    .unwrap();
    let kv = |m: [i64; 3]| {
        [
            TAU * m[0] as f64 / 2.0,
            TAU * m[1] as f64 / 2.0,
            TAU * m[2] as f64 / 4.0,
        ]
    };
    let (k1, k2) = (kv(m1), kv(m2));
    let norm = |k: [f64; 3]| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let dk3 = (TAU).powi(3) / 16.0;
    let phi = |k: [f64; 3], e: [C64; 3], r: [f64; 3], t: f64| {
        let w = norm(k) / n;
        let amp = dk3 * (w / (TAU).powi(3)).sqrt();
        let ph = C64::from_polar(amp, k[0] * r[0] + k[1] * r[1] + k[2] * r[2] - w * t);
        e.map(|v| v * ph)
    };
    let e1 = polarization_basis(k1).unwrap().0;
    let e2 = polarization_basis(k2).unwrap().1;
    let (r1, r2, t) = ([0.5, 0.25, 1.0], [1.5, 1.0, 3.5], 0.2);
    let out = synthesize_two_photon(&spec, r1, r2, t);
    let (a1, b2) = (phi(k1, e1, r1, t), phi(k2, e2, r2, t));
    let (a2, b1) = (phi(k1, e1, r2, t), phi(k2, e2, r1, t));
    for a in 0..3 {
        for b in 0..3 {
            let want = c * (a1[a] * b2[b] + b1[a] * a2[b]);
            assert!((out[a][b] - want).norm() < 1e-13);
        }
    }
    // symmetrized norm of one off-diagonal entry: 2|c|²Δk⁶
    assert!((spec.symmetrized_norm_sq() - 2.0 * c.norm_sqr() * dk3 * dk3).abs() < 1e-12);
    let _ = PI;
}

#[test]
fn factored_and_sparse_storage_agree() {
    let g = two_photon_grid();
    let dk = g.k_cell_volume();
    let mut f = ModeAmplitudes::zeros(g, 0.0, 0.0).unwrap();
    let mut h = ModeAmplitudes::zeros(g, 0.0, 0.0).unwrap();
    f.set([0, 0, 1], Helicity::Plus, C64::new(0.6, 0.0));
    f.set([1, 0, 0], Helicity::Minus, C64::new(0.0, 0.8));
    h.set([0, 1, -2], Helicity::Plus, C64::new(1.0, 0.0));
    let w = C64::new(0.5, 0.5);
    let fac = TwoPhotonSpectral::factored(vec![(w, f.clone(), h.clone())]).unwrap();
    let mut entries = Vec::new();
    for (mf, sf) in [([0, 0, 1], Helicity::Plus), ([1, 0, 0], Helicity::Minus)] {
        entries.push((
            ModeKey::new(mf, sf),
            ModeKey::new([0, 1, -2], Helicity::Plus),
            w * f.get(mf, sf),
        ));
    }
    let sparse = TwoPhotonSpectral::sparse(g, 0.0, 0.0, entries).unwrap();
    assert!((fac.symmetrized_norm_sq() / sparse.symmetrized_norm_sq() - 1.0).abs() < 1e-12);
    let (r1, r2) = ([0.1, 0.9, 2.2], [1.3, 0.4, 0.7]);
    let a = synthesize_two_photon(&fac, r1, r2, 0.0);
    let b = synthesize_two_photon(&sparse, r1, r2, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            assert!((a[i][j] - b[i][j]).norm() < 1e-12);
        }
    }
    assert_eq!(fac.storage_form(), "factored");
    assert_eq!(sparse.storage_form(), "sparse");
    let _ = dk;
}
