mod common;

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64 as C64;
use photonwave::fields::*;
use photonwave::spectral::{cross, polarization_basis, Spectral};
use photonwave::Error;

use common::*;

fn zgrid() -> Grid3 {
    Grid3::new([4, 4, 16], [1.0, 1.0, 4.0]).unwrap()
}

fn single_mode(g: Grid3, k: f64, pol: [C64; 3]) -> ComplexVectorField {
    ComplexVectorField::from_fn(g, |r| {
        let ph = C64::from_polar(1.0, k * r[2]);
        pol.map(|p| p * ph)
    })
}

#[test]
fn helicity_eigenmode_projects_onto_itself() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    let (ep, _, _) = polarization_basis([0.0, 0.0, k]).unwrap();
    let f = single_mode(g, k, ep);
    let parts = helicity_project(&sp, &f).unwrap();
    assert!(parts.plus.relative_rms_diff(&f) < 1e-13);
    assert!(parts.minus.rms() < 1e-13 && parts.longitudinal.rms() < 1e-13);
}

#[test]
fn linear_polarization_splits_evenly() {
    // x̂ = (ê₊ + ê₋)/√2 for k ∥ ẑ, so each part is (x̂ ± iŷ)/2 e^{ikz}.
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 3.0 / 4.0;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let f = single_mode(g, k, [one, zero, zero]);
    let parts = helicity_project(&sp, &f).unwrap();
    let want_p = single_mode(g, k, [C64::new(0.5, 0.0), C64::new(0.0, 0.5), zero]);
    let want_m = single_mode(g, k, [C64::new(0.5, 0.0), C64::new(0.0, -0.5), zero]);
    assert!(parts.plus.relative_rms_diff(&want_p) < 1e-13);
    assert!(parts.minus.relative_rms_diff(&want_m) < 1e-13);
    assert!(parts.longitudinal.rms() < 1e-13);
    // amplitude 1/√2 on each basis vector
    let (ep, em, _) = polarization_basis([0.0, 0.0, k]).unwrap();
    let amp_p = ep[0].conj() * one;
    let amp_m = em[0].conj() * one;
    assert!(
        (amp_p.norm() - FRAC_1_SQRT_2).abs() < 1e-15
            && (amp_m.norm() - FRAC_1_SQRT_2).abs() < 1e-15
    );
}

#[test]
fn longitudinal_mode_is_purely_longitudinal() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let zero = C64::new(0.0, 0.0);
    let f = single_mode(g, TAU / 4.0, [zero, zero, C64::new(1.0, 0.0)]);
    let parts = helicity_project(&sp, &f).unwrap();
    assert!(parts.longitudinal.relative_rms_diff(&f) < 1e-13);
    assert!(parts.plus.rms() < 1e-13 && parts.minus.rms() < 1e-13);
}

#[test]
fn constant_field_goes_to_longitudinal() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let f = ComplexVectorField::from_fn(g, |_| [C64::new(1.0, 0.0); 3]);
    let parts = helicity_project(&sp, &f).unwrap();
    assert!(parts.longitudinal.relative_rms_diff(&f) < 1e-14);
}

#[test]
fn projection_sums_back_is_idempotent_and_orthogonal() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let mut r = rng(7);
    let f = random_band_limited(&sp, 2, &mut r).to_complex();
    let p = helicity_project(&sp, &f).unwrap();
    let sum = p.plus.add(&p.minus).add(&p.longitudinal);
    assert!(sum.relative_rms_diff(&f) < 1e-13);
    let scale = f.inner(&f).norm();
    for part in [&p.plus, &p.minus, &p.longitudinal] {
        let again = helicity_project(&sp, part).unwrap();
        let total = again.plus.add(&again.minus).add(&again.longitudinal);
        assert!(total.relative_rms_diff(part) < 1e-13);
    }
    let pp = helicity_project(&sp, &p.plus).unwrap();
    assert!(pp.plus.relative_rms_diff(&p.plus) < 1e-12);
    assert!(pp.minus.rms() < 1e-12 * p.plus.rms().max(1e-300) + 1e-14);
    for (a, b) in [
        (&p.plus, &p.minus),
        (&p.plus, &p.longitudinal),
        (&p.minus, &p.longitudinal),
    ] {
        assert!(a.inner(b).norm() <= 1e-12 * scale);
    }
}

#[test]
fn projection_rejects_non_finite_input() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let mut f = ComplexVectorField::zeros(g);
    f.comps[2][10] = C64::new(f64::NAN, 0.0);
    match helicity_project(&sp, &f) {
        Err(Error::NonFinite { index, .. }) => assert_eq!(index, 32),
        other => panic!("expected NonFinite, got {other:?}"),
    }
}

fn plane_wave_pair(g: Grid3, k: f64, omega: f64, t: f64, b_scale: f64) -> RealFieldPair {
    let e = RealVectorField::from_fn(g, |r| [(k * r[2] - omega * t).cos(), 0.0, 0.0]);
    let b = RealVectorField::from_fn(g, |r| [0.0, b_scale * (k * r[2] - omega * t).cos(), 0.0]);
    RealFieldPair::new(e, b, t).unwrap()
}

#[test]
fn compose_of_zero_is_zero() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let s = rs_compose(&sp, &RealFieldPair::zeros(g), &MediumMap::vacuum(g)).unwrap();
    assert_eq!(s.psi().sum_sq(), 0.0);
    let back = rs_decompose(&sp, &s, &MediumMap::vacuum(g)).unwrap();
    assert_eq!(back.e.sum_sq() + back.b.sum_sq(), 0.0);
}

#[test]
fn vacuum_plane_wave_density_integrates_to_field_energy() {
    // Pointwise |Ψ|² of a linearly polarized plane wave is the cycle average
    // ε₀|E₀|²/2 (σ̂ is nonlocal); its integral equals ∫ε₀E²/2 + B²/2μ₀.
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    for t in [0.0, 0.1, 0.37] {
        let f = plane_wave_pair(g, k, k, t, 1.0);
        let s = rs_compose(&sp, &f, &MediumMap::vacuum(g)).unwrap();
        let dens = energy_density(&s);
        for v in &dens.values {
            assert!((v - 0.5).abs() < 1e-13);
        }
        let want = f.electromagnetic_energy();
        assert!((dens.integral() - want).abs() < 1e-12 * want);
    }
}

#[test]
fn dielectric_plane_wave_obeys_dressed_identity() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    let f = plane_wave_pair(g, k, k / 1.5, 0.2, 1.0);
    let med = MediumMap::uniform(g, 1.25, 0.0).unwrap();
    let dressed = energy_density(&rs_compose(&sp, &f, &med).unwrap());
    let bare = energy_density(&rs_compose(&sp, &f, &MediumMap::vacuum(g)).unwrap());
    let umat = material_energy_density(&sp, &f, &med).unwrap();
    for i in 0..g.size() {
        assert!((dressed.values[i] - bare.values[i] - umat.values[i]).abs() < 1e-12);
    }
}

#[test]
fn material_energy_vanishes_in_vacuum() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let f = random_transverse_pair(&sp, 2, &mut rng(1));
    let u = material_energy_density(&sp, &f, &MediumMap::vacuum(g)).unwrap();
    assert_eq!(u.max_abs(), 0.0);
}

#[test]
fn material_energy_amplitude_form_matches_direct_substitution() {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let u = material_energy_density_amplitudes([one, zero, zero], [zero; 3], 1.25, 0.0);
    assert_eq!(u, 0.3125);
}

#[test]
fn instantaneous_material_energy_cycle_averages_to_amplitude_form() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU / 4.0;
    let chi: f64 = 1.25;
    let n = (1.0 + chi).sqrt();
    let omega = k / n;
    let med = MediumMap::uniform(g, chi, 0.0).unwrap();
    let samples = 8;
    let mut avg = 0.0;
    for s in 0..samples {
        let t = TAU / omega * s as f64 / samples as f64;
        let f = plane_wave_pair(g, k, omega, t, n);
        avg += material_energy_density(&sp, &f, &med).unwrap().values[5] / samples as f64;
    }
    let e = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let b = [C64::new(0.0, 0.0), C64::new(n, 0.0), C64::new(0.0, 0.0)];
    let want = material_energy_density_amplitudes(e, b, chi, 0.0);
    assert!((avg - want).abs() < 1e-12, "{avg} vs {want}");
}

#[test]
fn compose_decompose_round_trip_on_transverse_fields() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let mut r = rng(11);
    let media = [
        MediumMap::vacuum(g),
        MediumMap::uniform(g, 1.25, 0.3).unwrap(),
        MediumMap::from_fn(g, |p| {
            (
                0.5 + 0.4 * (TAU * p[0] / 2.0).sin(),
                0.2 * (TAU * p[2] / 2.5).cos().powi(2),
            )
        })
        .unwrap(),
    ];
    for med in &media {
        for _ in 0..3 {
            let f = random_transverse_pair(&sp, 2, &mut r);
            let s = rs_compose(&sp, &f, med).unwrap();
            let back = rs_decompose(&sp, &s, med).unwrap();
            assert!(back.relative_rms_diff(&f) < 1e-12);
        }
    }
}

#[test]
fn uniform_decompose_matches_sigma_form() {
    // B = -i√(μ/2)[(σ̂Ψ′) − (σ̂Ψ′)*] for uniform media.
    let g = small_grid();
    let sp = Spectral::new(g);
    let f = random_transverse_pair(&sp, 2, &mut rng(3));
    let med = MediumMap::uniform(g, 0.7, 0.4).unwrap();
    let s = rs_compose(&sp, &f, &med).unwrap();
    let spsi = apply_sigma(&sp, &s.psi());
    let mu: f64 = 1.4;
    let b = RealVectorField::from_comps(
        g,
        std::array::from_fn(|a| {
            spsi.comps[a]
                .iter()
                .map(|v| (C64::new(0.0, -(mu / 2.0).sqrt()) * (v - v.conj())).re)
                .collect()
        }),
    )
    .unwrap();
    assert!(b.relative_rms_diff(&f.b) < 1e-12);
}

#[test]
fn pure_helicity_state_has_quadrature_fields_of_equal_magnitude() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    let (ep, _, _) = polarization_basis([0.0, 0.0, k]).unwrap();
    let plus = single_mode(g, k, ep);
    let s = RSState::new(plus, ComplexVectorField::zeros(g), 0.0).unwrap();
    let f = rs_decompose(&sp, &s, &MediumMap::vacuum(g)).unwrap();
    for idx in 0..g.size() {
        let e = f.e.at(idx);
        let b = f.b.at(idx);
        let ne = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((ne - nb).abs() < 1e-13);
        assert!((e[0] * b[0] + e[1] * b[1] + e[2] * b[2]).abs() < 1e-13);
    }
}

#[test]
fn doubling_psi_quadruples_density() {
    let g = small_grid();
    let sp = Spectral::new(g);
    let f = random_transverse_pair(&sp, 2, &mut rng(5));
    let s = rs_compose(&sp, &f, &MediumMap::vacuum(g)).unwrap();
    let d1 = energy_density(&s);
    let d2 = energy_density(&s.scaled(2.0));
    for (a, b) in d1.values.iter().zip(&d2.values) {
        assert!((4.0 * a - b).abs() <= 1e-14 * b.abs().max(1.0));
    }
    assert_eq!(energy_density(&RSState::zeros(g)).max_abs(), 0.0);
}

#[test]
fn current_of_zero_state_is_zero() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let s = poynting_current(&sp, &RSState::zeros(g)).unwrap();
    assert_eq!(s.sum_sq(), 0.0);
}

/// Cycle averages of S and E×B for a monochromatic state sampled at 8 times.
fn cycle_averages(
    sp: &Spectral,
    make: impl Fn(f64) -> RealFieldPair,
    period: f64,
) -> (Vec<[f64; 3]>, Vec<[f64; 3]>, Vec<f64>) {
    let g = sp.grid;
    let n = 8;
    let mut s_avg = vec![[0.0; 3]; g.size()];
    let mut p_avg = vec![[0.0; 3]; g.size()];
    let mut u_avg = vec![0.0; g.size()];
    for i in 0..n {
        let f = make(period * i as f64 / n as f64);
        let st = rs_compose(sp, &f, &MediumMap::vacuum(g)).unwrap();
        let s = poynting_current(sp, &st).unwrap();
        let u = energy_density(&st);
        for idx in 0..g.size() {
            let ex = cross(f.e.at(idx), f.b.at(idx));
            for a in 0..3 {
                s_avg[idx][a] += s.comps[a][idx] / n as f64;
                p_avg[idx][a] += ex[a] / n as f64;
            }
            u_avg[idx] += u.values[idx] / n as f64;
        }
    }
    (s_avg, p_avg, u_avg)
}

#[test]
fn helicity_plane_wave_current_is_c_times_energy_density() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    // circular +helicity wave: E = x̂cosφ − ŷsinφ, B = x̂ sinφ + ŷ cosφ
    let make = |t: f64| {
        let e = RealVectorField::from_fn(g, |r| {
            let p = k * r[2] - k * t;
            [p.cos(), -p.sin(), 0.0]
        });
        let b = RealVectorField::from_fn(g, |r| {
            let p = k * r[2] - k * t;
            [p.sin(), p.cos(), 0.0]
        });
        RealFieldPair::new(e, b, t).unwrap()
    };
    let (s, p, u) = cycle_averages(&sp, make, TAU / k);
    for idx in 0..g.size() {
        assert!(s[idx][0].abs() < 1e-12 && s[idx][1].abs() < 1e-12);
        assert!((s[idx][2] - u[idx]).abs() < 1e-12);
        for a in 0..3 {
            assert!((s[idx][a] - p[idx][a]).abs() <= 1e-10 * p[idx][2].abs());
        }
    }
}

#[test]
fn counter_propagating_modes_carry_no_net_current() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let k = TAU * 2.0 / 4.0;
    let make = |t: f64| {
        let e = RealVectorField::from_fn(g, |r| {
            [
                (k * r[2] - k * t).cos() + (-k * r[2] - k * t).cos(),
                0.0,
                0.0,
            ]
        });
        let b = RealVectorField::from_fn(g, |r| {
            [
                0.0,
                (k * r[2] - k * t).cos() - (-k * r[2] - k * t).cos(),
                0.0,
            ]
        });
        RealFieldPair::new(e, b, t).unwrap()
    };
    let (s, p, _) = cycle_averages(&sp, make, TAU / k);
    let mut net = [0.0; 3];
    for idx in 0..g.size() {
        for a in 0..3 {
            net[a] += s[idx][a];
            assert!((s[idx][a] - p[idx][a]).abs() < 1e-12);
        }
    }
    assert!(net.iter().all(|v| v.abs() < 1e-11));
}

#[test]
fn cycle_averaged_current_matches_poynting_vector_on_random_monochromatic_state() {
    // Monochromatic vacuum state: each lattice mode at the same |k|.
    let g = Grid3::new([8, 8, 8], [1.0, 1.0, 1.0]).unwrap();
    let sp = Spectral::new(g);
    let k = TAU * 2.0;
    let dirs = [[k, 0.0, 0.0], [0.0, -k, 0.0], [0.0, 0.0, k]];
    let amps = [(0.7, 0.3), (0.2, 1.1), (0.5, -0.4)];
    let make = |t: f64| {
        let mut e = RealVectorField::zeros(g);
        let mut b = RealVectorField::zeros(g);
        for (kv, (a1, a2)) in dirs.iter().zip(amps) {
            let (ep, _, kh) = polarization_basis(*kv).unwrap();
            for idx in 0..g.size() {
                let r = g.position(idx);
                let ph = C64::from_polar(1.0, kv[0] * r[0] + kv[1] * r[1] + kv[2] * r[2] - k * t)
                    * C64::new(a1, a2);
                let ev = ep.map(|v| (v * ph).re);
                let bv = cross(kh, ev);
                for a in 0..3 {
                    e.comps[a][idx] += ev[a];
                    b.comps[a][idx] += bv[a];
                }
            }
        }
        RealFieldPair::new(e, b, t).unwrap()
    };
    let (s, p, _) = cycle_averages(&sp, make, TAU / k);
    let scale = p
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let diff = s
        .iter()
        .zip(&p)
        .map(|(a, b)| (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-10 * scale, "{diff} vs {scale}");
}

#[test]
fn compose_rejects_grid_mismatch() {
    let g = zgrid();
    let sp = Spectral::new(g);
    let other = Grid3::cube(4, 1.0).unwrap();
    assert!(matches!(
        rs_compose(&sp, &RealFieldPair::zeros(g), &MediumMap::vacuum(other)),
        Err(Error::GridMismatch(_))
    ));
}
