mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use photonwave::fields::Grid3;
use photonwave::scattering::{GreenSpec, KLattice};
use photonwave::spdc::{
    biphoton_position, commutator_from_green, commutator_kernel, commutator_kernel_continuum,
    jsa_amplitude, marginal_spectrum, nonlinear_source, pair_kernel, phase_matching_factor,
    schmidt, separable_jsa, spdc_jsa, substitution_holds, Aperture, CrystalSpec, FieldSample,
    Filter, GriddedPump, JsaAxes, JsaGrid, Photon, PositionQuadrature, PumpSpectrum,
};
use photonwave::{Error, C64};
use rand::Rng;

fn crystal(length: f64, aperture: Aperture, window: f64) -> CrystalSpec {
    CrystalSpec {
        chi2: 1.0,
        length,
        aperture,
        n: 1.5,
        window,
    }
}

/// Reference entangled scenario: Gaussian pump, thick crystal, Gaussian
/// filters on both detectors.
fn reference_scenario(axes: &JsaAxes) -> JsaGrid {
    let pump = PumpSpectrum::gaussian(2.0, 0.03, 10.0);
    let c = crystal(200.0, Aperture::Infinite, f64::INFINITY);
    let f = Filter::Gaussian {
        center: 1.0,
        width: 0.05,
    };
    spdc_jsa(&pump, &c, axes, [Some(f), Some(f)]).unwrap()
}

fn reference_axes() -> JsaAxes {
    JsaAxes::new(0.85, 1.15, 31, 0.2, 15).unwrap()
}

/// Schmidt number from purity, `(Tr ρ)²/Tr ρ²` with `ρ = M M†`.
fn purity_oracle(jsa: &JsaGrid) -> f64 {
    let m: DMatrix<C64> = jsa.matrix();
    let rho = &m * m.adjoint();
    let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    let tr2: f64 = rho.iter().map(|v| v.norm_sqr()).sum();
    tr * tr / tr2
}

#[test]
fn phase_matching_examples() {
    assert_eq!(phase_matching_factor(0.0, 3.0).unwrap(), C64::new(3.0, 0.0));
    let l = 2.0;
    assert!(phase_matching_factor(2.0 * PI / l, l).unwrap().norm() < 1e-15);
    for dk in [0.5, 5.0, 50.0] {
        let thin = phase_matching_factor(dk, 1e-6).unwrap().re / 1e-6;
        assert!((thin - 1.0).abs() < 1e-8);
    }
    assert!(phase_matching_factor(1.0, 0.0).is_err());
}

#[test]
fn substitution_rule_follows_window_width() {
    assert!(substitution_holds(f64::INFINITY, 1.0));
    assert!(substitution_holds(1000.0, 1.0));
    assert!(!substitution_holds(10.0, 1.0));
}

#[test]
fn nonlinear_source_examples() {
    let c = crystal(
        2.0,
        Aperture::Finite {
            width_x: 4.0,
            width_y: 4.0,
        },
        100.0,
    );
    let (w3, w1, t) = (2.0, 0.7, 0.3);
    let pump = FieldSample::harmonic(C64::new(1.0, 0.0), w3, t);
    let conj_ordinary = FieldSample::harmonic(C64::new(1.0, 0.0), -w1, t);
    let s = nonlinear_source(pump, conj_ordinary, [0.0; 3], &c);
    let want = C64::from_polar((w3 - w1).powi(2), -(w3 - w1) * t);
    assert!((s - want).norm() < 1e-14);
    let zero = CrystalSpec {
        chi2: 0.0,
        ..c.clone()
    };
    assert_eq!(
        nonlinear_source(pump, conj_ordinary, [0.0; 3], &zero),
        C64::new(0.0, 0.0)
    );
    assert_eq!(
        nonlinear_source(pump, conj_ordinary, [0.0, 0.0, 1.01], &c),
        C64::new(0.0, 0.0)
    );
    assert_eq!(
        nonlinear_source(pump, conj_ordinary, [2.0, -2.0, 1.0], &c),
        s
    );
}

fn band(n: f64) -> (KLattice, f64) {
    let lat = KLattice::new(Grid3::cube(21, 40.0).unwrap(), 1.5, 0.4).unwrap();
    (lat, n)
}

#[test]
fn commutator_matches_green_second_derivative() {
    let mut rng = common::rng(17);
    for i in 0..20 {
        let (lat, n) = band(if i % 2 == 0 { 1.0 } else { 1.5 });
        let dr = [
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        ];
        let dt = rng.gen_range(1.0..20.0);
        let direct = commutator_kernel(dr, dt, n, &lat);
        let green = commutator_from_green(dr, dt, n, &lat, 0.02).unwrap();
        let err = (direct - green).norm() / direct.norm();
        assert!(err <= 1e-8, "point {i}: relative error {err:e}");
    }
}

#[test]
fn commutator_scales_with_index() {
    let (lat, _) = band(1.0);
    for dr in [[0.0; 3], [1.0, 2.0, -0.5]] {
        let one = commutator_kernel(dr, 0.0, 1.0, &lat);
        let two = commutator_kernel(dr, 0.0, 2.0, &lat);
        assert!((one / two - C64::new(4.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn commutator_spreads_along_the_light_shell() {
    let (lat, n) = band(1.0);
    let spec = GreenSpec::new(n, 1.5, 0.4, 1e-6).unwrap();
    let mut peaks = Vec::new();
    for dt in [5.0, 10.0] {
        let r = dt / n;
        let lattice = commutator_kernel([r, 0.0, 0.0], dt, n, &lat);
        let continuum = commutator_kernel_continuum([r, 0.0, 0.0], dt, &spec);
        assert!(
            (lattice - continuum).norm() < 0.05 * continuum.norm(),
            "{lattice} vs {continuum}"
        );
        peaks.push(continuum.norm());
    }
    let ratio = peaks[1] / peaks[0];
    assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn separable_input_has_unit_schmidt_number() {
    let axes = JsaAxes::new(0.8, 1.2, 15, 0.1, 7).unwrap();
    let jsa = separable_jsa(&axes, |w, q| {
        C64::from_polar((-(w - 1.0).powi(2) / 0.01 - q * q / 0.002).exp(), 3.0 * w)
    })
    .unwrap();
    let s = schmidt(&jsa).unwrap();
    assert!((s.k - 1.0).abs() < 1e-6, "K = {}", s.k);
    assert!((s.lambdas.iter().sum::<f64>() + s.residual - 1.0).abs() < 1e-8);
}

#[test]
fn two_orthogonal_terms_give_schmidt_two() {
    let axes = JsaAxes::new(0.8, 1.2, 11, 0.1, 1).unwrap();
    let f = |w: f64| {
        if w < 0.99 {
            (-(w - 0.9).powi(2) / 0.01).exp()
        } else {
            0.0
        }
    };
    let g = |w: f64| {
        if w > 1.01 {
            (-(w - 1.1).powi(2) / 0.01).exp()
        } else {
            0.0
        }
    };
    let jsa = JsaGrid::from_fn(axes, |w1, _, w2, _| C64::new(f(w1) * g(w2), 0.0)).unwrap();
    let s = schmidt(&jsa).unwrap();
    assert!((s.k - 2.0).abs() < 1e-6, "K = {}", s.k);
    assert!((s.lambdas[0] - 0.5).abs() < 1e-6 && (s.lambdas[1] - 0.5).abs() < 1e-6);
}

#[test]
fn schmidt_rejects_unnormalized_input() {
    let axes = JsaAxes::new(0.8, 1.2, 5, 0.1, 1).unwrap();
    let mut jsa = separable_jsa(&axes, |w, _| C64::new(w, 0.0)).unwrap();
    jsa.values.iter_mut().for_each(|v| *v *= 1.1);
    assert!(matches!(schmidt(&jsa), Err(Error::NotNormalized { .. })));
}

fn mono_energy_jsa(t: f64) -> JsaGrid {
    let axes = JsaAxes::new(0.5, 1.5, 121, 0.0, 1).unwrap();
    spdc_jsa(
        &PumpSpectrum::monochromatic_plane(2.0),
        &crystal(0.01, Aperture::Infinite, t),
        &axes,
        [None, None],
    )
    .unwrap()
}

fn sum_frequency_rms(jsa: &JsaGrid, omega0: f64) -> f64 {
    jsa.mass_where(|_, _, _, _| true);
    let s = jsa.states();
    let mut m2 = 0.0;
    for a in 0..s {
        let (w1, _) = jsa.axes.state(a);
        for b in 0..s {
            let (w2, _) = jsa.axes.state(b);
            m2 += jsa.get(a, b).norm_sqr() * (w1 + w2 - omega0).powi(2);
        }
    }
    (m2 * jsa.measure()).sqrt()
}

#[test]
fn finite_window_concentrates_mass_on_energy_conservation() {
    let ts = [12.5, 25.0, 50.0, 125.0];
    let mut products = Vec::new();
    let mut outside = Vec::new();
    for &t in &ts {
        let jsa = mono_energy_jsa(t);
        jsa.check_normalized().unwrap();
        assert!(jsa.mass_near_sum(2.0, 2.0 * PI / t) >= 0.99);
        products.push(sum_frequency_rms(&jsa, 2.0) * t);
        outside.push(1.0 - jsa.mass_near_sum(2.0, 0.05));
    }
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    for p in &products {
        assert!((p / mean - 1.0).abs() < 0.1, "width × T = {products:?}");
    }
    assert!(outside.windows(2).all(|w| w[1] < w[0]), "{outside:?}");
}

#[test]
fn monochromatic_pump_leaves_broad_marginals() {
    let jsa = mono_energy_jsa(125.0);
    let p1 = marginal_spectrum(&jsa, Photon::One);
    let p2 = marginal_spectrum(&jsa, Photon::Two);
    let total: f64 = p1.iter().sum::<f64>() * jsa.axes.cell();
    assert!((total - 1.0).abs() < 1e-10);
    for (a, b) in p1.iter().zip(&p2) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    let mean: f64 = jsa
        .axes
        .omega
        .iter()
        .zip(&p1)
        .map(|(w, p)| w * p)
        .sum::<f64>()
        * jsa.axes.cell();
    let var: f64 = jsa
        .axes
        .omega
        .iter()
        .zip(&p1)
        .map(|(w, p)| (w - mean).powi(2) * p)
        .sum::<f64>()
        * jsa.axes.cell();
    assert!(var.sqrt() > 10.0 * sum_frequency_rms(&jsa, 2.0));
}

#[test]
fn product_amplitude_has_product_marginals() {
    let axes = JsaAxes::new(0.8, 1.2, 13, 0.1, 5).unwrap();
    let g = |w: f64, q: f64| C64::new((-(w - 1.0).powi(2) / 0.02 - q * q / 0.01).exp(), 0.0);
    let jsa = separable_jsa(&axes, g).unwrap();
    let p = marginal_spectrum(&jsa, Photon::One);
    let want: Vec<f64> = (0..axes.states())
        .map(|s| {
            let (w, q) = axes.state(s);
            w * g(w, q).norm_sqr()
        })
        .collect();
    let z: f64 = want.iter().sum::<f64>() * axes.cell();
    for (a, b) in p.iter().zip(&want) {
        assert!((a - b / z).abs() < 1e-12);
    }
}

fn transverse_peak_fraction(width: f64) -> f64 {
    let axes = JsaAxes::new(0.95, 1.05, 21, 0.12, 45).unwrap();
    let c = crystal(
        0.01,
        Aperture::Finite {
            width_x: width,
            width_y: width,
        },
        100.0,
    );
    let jsa = spdc_jsa(
        &PumpSpectrum::monochromatic_plane(2.0),
        &c,
        &axes,
        [None, None],
    )
    .unwrap();
    jsa.mass_where(|_, q1, _, q2| (q1 + q2).abs() < 0.5 * axes.dq)
}

#[test]
fn transverse_momentum_spread_scales_inversely_with_crystal_width() {
    let narrow = transverse_peak_fraction(100.0);
    let wide = transverse_peak_fraction(200.0);
    let ratio = wide / narrow;
    assert!(
        (ratio / 2.0 - 1.0).abs() < 0.1,
        "peak-density ratio {ratio}"
    );
}

fn paraxial_target(axes: &JsaAxes) -> JsaGrid {
    JsaGrid::from_fn(axes.clone(), |w1, q1, w2, q2| {
        let (ws, qs) = (w1 + w2, q1 + q2);
        C64::new(
            (w1 * w2).sqrt()
                * (-(ws - 2.0).powi(2) / (2.0 * 0.05f64.powi(2)) - qs * qs * 400.0 / 4.0).exp(),
            0.0,
        )
    })
    .unwrap()
}

#[test]
fn jsa_converges_to_the_paraxial_closed_form() {
    let axes = JsaAxes::new(0.8, 1.2, 41, 0.2, 15).unwrap();
    let pump = PumpSpectrum::gaussian(2.0, 0.05, 20.0);
    let target = paraxial_target(&axes);
    let mut d = Vec::new();
    for (l, t) in [(300.0, 60.0), (30.0, 300.0), (1.0, 2000.0)] {
        let jsa = spdc_jsa(
            &pump,
            &crystal(l, Aperture::Infinite, t),
            &axes,
            [None, None],
        )
        .unwrap();
        d.push(jsa.distance(&target).unwrap());
    }
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    assert!(d[2] <= 1e-2, "{d:?}");
}

#[test]
fn gaussian_pump_schmidt_number_matches_refined_oracle() {
    let axes = reference_axes();
    let coarse = schmidt(&reference_scenario(&axes)).unwrap();
    let oracle = purity_oracle(&reference_scenario(&axes.refined()));
    assert!(
        (coarse.k / oracle - 1.0).abs() <= 0.01,
        "K {} vs oracle {oracle}",
        coarse.k
    );
    assert!(oracle > 1.5);
    assert!(coarse.lambdas.windows(2).all(|w| w[0] >= w[1]));
    assert!((coarse.lambdas.iter().sum::<f64>() + coarse.residual - 1.0).abs() < 1e-8);
}

#[test]
fn symmetrized_jsa_is_exchange_symmetric() {
    let mut rng = common::rng(5);
    let axes = JsaAxes::new(0.8, 1.2, 15, 0.1, 9).unwrap();
    for _ in 0..50 {
        let omegas: Vec<f64> = (0..41).map(|i| 1.5 + i as f64 * 0.025).collect();
        let qs: Vec<f64> = (0..21).map(|i| -0.3 + i as f64 * 0.03).collect();
        let blobs: Vec<(f64, f64, f64, f64, C64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(1.9..2.1),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(0.1..0.15),
                    rng.gen_range(0.06..0.1),
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                )
            })
            .collect();
        let mut values = Vec::new();
        for &w in &omegas {
            for &q in &qs {
                values.push(
                    blobs
                        .iter()
                        .map(|(w0, q0, s, r, c)| {
                            c * (-(w - w0).powi(2) / (2.0 * s * s)
                                - (q - q0).powi(2) / (2.0 * r * r))
                                .exp()
                        })
                        .sum(),
                );
            }
        }
        let pump = PumpSpectrum::Gridded {
            omega0: 2.0,
            table: GriddedPump { omegas, qs, values },
        };
        let jsa = spdc_jsa(
            &pump,
            &crystal(5.0, Aperture::Infinite, f64::INFINITY),
            &axes,
            [None, None],
        )
        .unwrap();
        assert_eq!(jsa.swapped().values, jsa.values);
        jsa.check_normalized().unwrap();
    }
}

#[test]
fn jsa_rejects_coarse_or_wide_grids() {
    let pump = PumpSpectrum::gaussian(2.0, 0.01, 20.0);
    let c = crystal(1.0, Aperture::Infinite, f64::INFINITY);
    let coarse = JsaAxes::new(0.8, 1.2, 11, 0.1, 11).unwrap();
    assert!(matches!(
        spdc_jsa(&pump, &c, &coarse, [None, None]),
        Err(Error::GridTooCoarse(_))
    ));
    let wide = JsaAxes::new(0.8, 1.2, 81, 0.5, 11).unwrap();
    assert!(matches!(
        spdc_jsa(&pump, &c, &wide, [None, None]),
        Err(Error::NotParaxial { .. })
    ));
    let mono = PumpSpectrum::monochromatic_plane(2.0);
    assert!(spdc_jsa(&mono, &c, &coarse, [None, None]).is_err());
}

#[test]
fn hard_filters_restrict_support() {
    let axes = JsaAxes::new(0.5, 1.5, 61, 0.0, 1).unwrap();
    let f = Filter::Hard {
        center: 1.0,
        width: 0.2,
    };
    let jsa = spdc_jsa(
        &PumpSpectrum::monochromatic_plane(2.0),
        &crystal(0.01, Aperture::Infinite, 50.0),
        &axes,
        [Some(f), Some(f)],
    )
    .unwrap();
    assert!(
        jsa.mass_where(
            |w1, _, w2, _| (w1 - 1.0).abs() <= 0.1 + 1e-12 && (w2 - 1.0).abs() <= 0.1 + 1e-12
        ) > 1.0 - 1e-12
    );
}

#[test]
fn pair_kernel_falls_as_product_of_distances() {
    let src = [0.1, -0.2, 0.3];
    let r1 = [5.0, 1.0, 20.0];
    let r2 = [-3.0, 2.0, 15.0];
    let d = |r: [f64; 3]| {
        ((r[0] - src[0]).powi(2) + (r[1] - src[1]).powi(2) + (r[2] - src[2]).powi(2)).sqrt()
    };
    let k = pair_kernel(src, r1, r2, (0.9, 1.1), 1.5);
    let want = 0.81 * 1.21 / (d(r1) * d(r2));
    assert!((k.norm() - want).abs() < 1e-15 * want.max(1.0));
}

fn slab() -> (PumpSpectrum, CrystalSpec) {
    let lambda = 2.0 * PI / 1.5;
    (
        PumpSpectrum::monochromatic_plane(2.0),
        crystal(
            2.0,
            Aperture::Finite {
                width_x: 10.0 * lambda,
                width_y: 2.0,
            },
            200.0,
        ),
    )
}

fn far(theta: f64, r: f64) -> [f64; 3] {
    [r * theta.sin(), 0.0, r * theta.cos()]
}

#[test]
fn position_amplitude_basic_cases() {
    let (pump, c) = slab();
    let zero = CrystalSpec {
        chi2: 0.0,
        ..c.clone()
    };
    let q = PositionQuadrature::default();
    assert_eq!(
        biphoton_position(&pump, &zero, far(0.0, 1e4), far(0.1, 1e4), (1.0, 1.0), q).unwrap(),
        C64::new(0.0, 0.0)
    );
    assert!(matches!(
        biphoton_position(&pump, &c, [0.0; 3], far(0.1, 1e4), (1.0, 1.0), q),
        Err(Error::InsideSupport(_))
    ));
    let a = biphoton_position(&pump, &c, far(0.02, 1e5), far(-0.03, 1e5), (0.9, 1.1), q).unwrap();
    let b = biphoton_position(&pump, &c, far(-0.03, 1e5), far(0.02, 1e5), (1.1, 0.9), q).unwrap();
    assert!((a - b).norm() <= 1e-12 * a.norm());
}

#[test]
fn far_field_coincidences_agree_with_the_jsa() {
    let (pump, c) = slab();
    let (w, k, r) = (1.0, 1.5, 1e6);
    let th1 = 0.03;
    let thetas: Vec<f64> = (0..41).map(|i| -0.1 + i as f64 * 0.0035).collect();
    let q = PositionQuadrature::default();
    let pos: Vec<f64> = thetas
        .iter()
        .map(|&t| {
            biphoton_position(&pump, &c, far(th1, r), far(t, r), (w, w), q)
                .unwrap()
                .norm_sqr()
        })
        .collect();
    let spec: Vec<f64> = thetas
        .iter()
        .map(|&t| {
            let a = (w, k * th1.sin());
            let b = (w, k * t.sin());
            let x = jsa_amplitude(&pump, &c, a, b, 1.0).unwrap().unwrap()
                + jsa_amplitude(&pump, &c, b, a, 1.0).unwrap().unwrap();
            x.norm_sqr()
        })
        .collect();
    let (pm, sm) = (
        pos.iter().cloned().fold(0.0, f64::max),
        spec.iter().cloned().fold(0.0, f64::max),
    );
    for (i, (p, s)) in pos.iter().zip(&spec).enumerate() {
        assert!(
            (p / pm - s / sm).abs() <= 0.02,
            "theta {}: {} vs {}",
            thetas[i],
            p / pm,
            s / sm
        );
    }
    // coincidences peak where q₁ + q₂ = 0
    let imax = (0..pos.len())
        .max_by(|&a, &b| pos[a].total_cmp(&pos[b]))
        .unwrap();
    assert!((thetas[imax] + th1).abs() <= 0.0035);
}
