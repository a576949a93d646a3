use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use orbitlet_core::error::Error;
use orbitlet_core::groups::{CatalogId, GroupChart};
use orbitlet_core::linalg::{Freq, Mat};
use orbitlet_core::orbits::Interval;
use orbitlet_core::profile::FrequencyProfile;
use orbitlet_core::transform::{
    analyze, fourier, h_nodes, inverse_fourier, l2g_inner, l2g_norm, quasiregular_apply, random_band_limited,
    reproducing_check, synthesize, Band, CoefficientField, Grid, HNodeSpec, HNodes, HRange, SampledSignal,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cat(id: CatalogId) -> GroupChart {
    GroupChart::catalog(id)
}

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn origin_index(grid: &Grid) -> usize {
    (0..grid.len()).find(|&i| grid.point(i).norm() < 1e-12).unwrap()
}

/// Index of the node whose matrix equals `m`.
fn node_with(nodes: &HNodes, m: &Mat) -> Option<usize> {
    nodes.elements.iter().position(|e| e.matrix.max_abs_diff(m) < 1e-9)
}

#[test]
fn fourier_round_trip_and_unitarity() {
    let grid = Grid::new(vec![-3.0], vec![0.3], vec![60]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 0.0,
            max: 8.0,
            positive: false,
        },
        &mut rng,
    )
    .unwrap();
    let s = fourier(&f).unwrap();
    assert!((s.norm_sq() - f.norm_sq()).abs() < 1e-12);
    let back = inverse_fourier(&s).unwrap();
    assert!(back.relative_error(&f) < 1e-13);
}

#[test]
fn fourier_of_gaussian_matches_closed_form() {
    let grid = Grid::centered(1, 256, 0.1).unwrap();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.point(i).get(0);
            Complex64::new((-x * x / 2.0).exp(), 0.0)
        })
        .collect();
    let s = fourier(&SampledSignal::new(grid.clone(), values).unwrap()).unwrap();
    for (i, v) in s.values.iter().enumerate() {
        let w = grid.frequency(i).get(0);
        assert!((v - Complex64::new((-w * w / 2.0).exp(), 0.0)).norm() < 1e-12, "{w}");
    }
}

#[test]
fn translation_covariance() {
    let af = cat(CatalogId::Affine1dPlus);
    let grid = Grid::centered(1, 256, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 0.0,
            max: 5.0,
            positive: true,
        },
        &mut rng,
    )
    .unwrap();
    let psi = FrequencyProfile::LogBump {
        center: LN_2,
        width: LN_2,
        amplitude: 1.0,
    };
    let nodes = h_nodes(&af, &HNodeSpec::with_nodes(&af, 32)).unwrap();
    let m = 7;
    let moved = quasiregular_apply(&f, &Freq::scalar(m as f64 * 0.5), &Mat::identity(1)).unwrap();
    let a = analyze(&f, &psi, &af, &nodes).unwrap();
    let b = analyze(&moved, &psi, &af, &nodes).unwrap();
    let n = grid.len();
    for j in 0..nodes.len() {
        let shifted: Vec<Complex64> = (0..n).map(|i| a.node_values(j)[(i + n - m) % n]).collect();
        assert!(max_dev(b.node_values(j), &shifted) < 1e-12);
    }
}

#[test]
fn dyadic_dilation_covariance() {
    let dy = cat(CatalogId::Dyadic1d);
    let grid = Grid::centered(1, 4096, 0.125).unwrap();
    // localized in space and frequency so that f(y/2) still fits on the grid
    let f = SampledSignal::new(
        grid.clone(),
        (0..grid.len())
            .map(|i| {
                let y = grid.point(i).get(0);
                Complex64::new(y, 0.3) * (-y * y / 2.0).exp()
            })
            .collect(),
    )
    .unwrap();
    // smooth, so Riemann sums on the coarse and fine lattices agree
    let g = FrequencyProfile::LogBump {
        center: LN_2,
        width: LN_2,
        amplitude: 1.0,
    };
    let nodes = h_nodes(&dy, &HNodeSpec::default_for(&dy)).unwrap();
    let h0 = Mat::scalar(2.0);
    let moved = quasiregular_apply(&f, &Freq::scalar(0.0), &h0).unwrap();
    assert!((moved.norm_sq() - f.norm_sq()).abs() < 1e-12 * f.norm_sq());
    let a = analyze(&f, &g, &dy, &nodes).unwrap();
    let b = analyze(&moved, &g, &dy, &nodes).unwrap();
    let o = origin_index(&grid);
    let inv = h0.inverse().unwrap();
    let mut matched = 0;
    // larger scales put the window on too few lattice frequencies
    for (j, e) in nodes
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| e.matrix.get(0, 0) <= 1.0)
    {
        if let Some(k) = node_with(&nodes, &inv.mul(&e.matrix)) {
            let d = (b.node_values(j)[o] - a.node_values(k)[o]).norm();
            assert!(d < 1e-10);
            matched += 1;
        }
    }
    assert!(matched >= 4);
}

#[test]
fn rotation_covariance() {
    let se = cat(CatalogId::Se2Rot);
    let grid = Grid::centered(2, 32, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 0.0,
            max: 4.0,
            positive: false,
        },
        &mut rng,
    )
    .unwrap();
    let g = FrequencyProfile::Box {
        axes: vec![Interval::new(1.0, 2.0), Interval::new(0.0, 1.0)],
        amplitude: 1.0,
    };
    let nodes = h_nodes(
        &se,
        &HNodeSpec {
            blocks: vec![HRange {
                lo: 0.0,
                hi: TAU,
                nodes: 8,
            }],
        },
    )
    .unwrap();
    let h0 = Mat::from_rows([[0.0, -1.0], [1.0, 0.0]]);
    let moved = quasiregular_apply(&f, &Freq::pair(0.0, 0.0), &h0).unwrap();
    let a = analyze(&f, &g, &se, &nodes).unwrap();
    let b = analyze(&moved, &g, &se, &nodes).unwrap();
    let o = origin_index(&grid);
    let inv = h0.inverse().unwrap();
    for (j, e) in nodes.elements.iter().enumerate() {
        let k = node_with(&nodes, &inv.mul(&e.matrix)).expect("rotation permutes the nodes");
        assert!((b.node_values(j)[o] - a.node_values(k)[o]).norm() < 1e-12);
    }
}

#[test]
fn off_lattice_dilation_is_rejected() {
    let grid = Grid::centered(1, 64, 0.5).unwrap();
    let f = SampledSignal::zeros(grid);
    let r = quasiregular_apply(&f, &Freq::scalar(0.0), &Mat::scalar(1.5));
    assert!(matches!(r, Err(Error::GridMismatch(_))));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let se = cat(CatalogId::Se2Rot);
    let grid = Grid::centered(1, 64, 0.5).unwrap();
    let nodes = h_nodes(&se, &HNodeSpec::default_for(&se)).unwrap();
    let r = analyze(&SampledSignal::zeros(grid), &FrequencyProfile::shannon(), &se, &nodes);
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn analysis_is_linear(seed in any::<u64>(), re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let af = cat(CatalogId::Affine1dFull);
        let grid = Grid::centered(1, 128, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let band = Band { min: 0.0, max: 6.0, positive: false };
        let f = random_band_limited(&grid, &band, &mut rng).unwrap();
        let h = random_band_limited(&grid, &band, &mut rng).unwrap();
        let c = Complex64::new(re, im);
        let combo = SampledSignal::new(
            grid.clone(),
            f.values.iter().zip(&h.values).map(|(x, y)| c * x + y).collect(),
        ).unwrap();
        let psi = FrequencyProfile::RadialPower { c: 1.0, p: 1.0, q: 0.5 };
        let nodes = h_nodes(&af, &HNodeSpec::with_nodes(&af, 16)).unwrap();
        let vf = analyze(&f, &psi, &af, &nodes).unwrap();
        let vh = analyze(&h, &psi, &af, &nodes).unwrap();
        let vc = analyze(&combo, &psi, &af, &nodes).unwrap();
        let expect: Vec<Complex64> = vf.values.iter().zip(&vh.values).map(|(x, y)| c * x + y).collect();
        prop_assert!(max_dev(&vc.values, &expect) <= 1e-12 * (1.0 + max_abs(&expect)));
    }

    #[test]
    fn synthesis_is_the_adjoint(seed in any::<u64>()) {
        let af = cat(CatalogId::Affine1dPlus);
        let grid = Grid::centered(1, 128, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let band = Band { min: 0.0, max: 6.0, positive: false };
        let f = random_band_limited(&grid, &band, &mut rng).unwrap();
        let h = random_band_limited(&grid, &band, &mut rng).unwrap();
        let psi = FrequencyProfile::LogBump { center: 0.0, width: 1.5, amplitude: 1.0 };
        let nodes = h_nodes(&af, &HNodeSpec::with_nodes(&af, 24)).unwrap();
        let vf = analyze(&f, &psi, &af, &nodes).unwrap();
        // a field not in the range of the transform
        let mut field = CoefficientField::zeros(grid.clone(), vf.nodes.clone());
        for (i, v) in field.values.iter_mut().enumerate() {
            *v = h.values[i % grid.len()] * Complex64::new(1.0, (i / grid.len()) as f64 * 0.1);
        }
        let lhs = l2g_inner(&vf, &field).unwrap();
        let s = synthesize(&field, &psi, &af).unwrap();
        let rhs: Complex64 = f.values.iter().zip(&s.values).map(|(x, y)| x * y.conj()).sum::<Complex64>() * grid.cell();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        let n = l2g_norm(&vf);
        prop_assert!((l2g_inner(&vf, &vf).unwrap().re - n).abs() <= 1e-12 * n);
    }
}

#[test]
fn dyadic_shannon_reproduces() {
    let dy = cat(CatalogId::Dyadic1d);
    let grid = Grid::centered(1, 1024, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 1e-9,
            max: 3.0,
            positive: false,
        },
        &mut rng,
    )
    .unwrap();
    let g = FrequencyProfile::shannon();
    let nodes = h_nodes(&dy, &HNodeSpec::default_for(&dy)).unwrap();
    let field = analyze(&f, &g, &dy, &nodes).unwrap();
    assert!(reproducing_check(&field, &g, &dy, 16).unwrap() < 1e-6);
}

#[test]
fn non_admissible_window_fails_to_reproduce() {
    // χ_[1,2) on the affine group has T² = ln 2, so V V* acts as ln 2 on the range
    let af = cat(CatalogId::Affine1dPlus);
    let grid = Grid::centered(1, 256, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 0.0,
            max: 6.0,
            positive: true,
        },
        &mut rng,
    )
    .unwrap();
    let chi = FrequencyProfile::interval(1.0, 2.0, 1.0);
    let spec = HNodeSpec {
        blocks: vec![HRange {
            lo: -16.0 * LN_2,
            hi: 16.0 * LN_2,
            nodes: 1024,
        }],
    };
    let nodes = h_nodes(&af, &spec).unwrap();
    let field = analyze(&f, &chi, &af, &nodes).unwrap();
    let dev = reproducing_check(&field, &chi, &af, field.nodes.len()).unwrap();
    let scale = max_abs(&field.values);
    assert!((dev / scale - (1.0 - LN_2)).abs() < 1e-9, "{}", dev / scale);
}
