use std::f64::consts::TAU;

use num_complex::Complex64;
use orbitlet_core::admissibility::piece_region;
use orbitlet_core::error::Error;
use orbitlet_core::groups::{random_point, CatalogId, GroupChart};
use orbitlet_core::linalg::Freq;
use orbitlet_core::orbits::{
    classify_point, cross_section, quotient_measure, random_samples, verify_semi_invariance, Interval, OrbitAtlas,
    QuotientMass, Region, Verdict,
};
use orbitlet_core::plancherel::{
    beta_integral, duflo_moore_apply, random_quasi_samples, verify_quasi_invariance, OrbitFunction, OrbitMeasure,
};
use orbitlet_core::transform::{h_nodes, HNodeSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cat(id: CatalogId) -> GroupChart {
    GroupChart::catalog(id)
}

const REGULAR_GROUPS: [CatalogId; 6] = [
    CatalogId::Affine1dPlus,
    CatalogId::Affine1dFull,
    CatalogId::Sim2,
    CatalogId::Diag2,
    CatalogId::DiagLine2,
    CatalogId::Se2Rot,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdicts_are_constant_on_orbits(
        idx in 0usize..REGULAR_GROUPS.len(),
        x in -3.0..3.0f64,
        y in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let c = cat(REGULAR_GROUPS[idx]);
        let w = if c.ambient_dim() == 1 { Freq::scalar(x) } else { Freq::pair(x, y) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
        let a = classify_point(&c, &w, None).unwrap().verdict;
        let b = classify_point(&c, &w.act(&h.matrix), None).unwrap().verdict;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cross_section_recovers_the_frequency(idx in 0usize..REGULAR_GROUPS.len(), seed in any::<u64>()) {
        let c = cat(REGULAR_GROUPS[idx]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (w, _) in random_samples(&c, 4, &mut rng).unwrap() {
            let (a, h) = cross_section(&c, &w).unwrap();
            prop_assert!(a.act(&h.matrix).sub(&w).norm() <= 1e-12 * (1.0 + w.norm()));
            // the representative of a point on the same orbit is the same
            let g = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
            let (a2, _) = cross_section(&c, &w.act(&g.matrix)).unwrap();
            prop_assert!(a2.sub(&a).norm() <= 1e-9 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn quotient_measure_is_additive(lo in 0.01..1.0f64, mid in 1.0..2.0f64, hi in 2.0..5.0f64) {
        let atlas = OrbitAtlas::for_chart(&cat(CatalogId::Se2Rot)).unwrap();
        let m = |a: f64, b: f64| quotient_measure(&atlas, &piece_region(0, vec![Interval::new(a, b)])).unwrap().value();
        let whole = m(lo, hi);
        prop_assert!((m(lo, mid) + m(mid, hi) - whole).abs() <= 1e-12 * whole);
    }
}

#[test]
fn zero_frequency_is_not_regular_for_dilation_groups() {
    for id in REGULAR_GROUPS.into_iter().filter(|&id| id != CatalogId::Se2Rot) {
        let c = cat(id);
        let z = if c.ambient_dim() == 1 {
            Freq::scalar(0.0)
        } else {
            Freq::pair(0.0, 0.0)
        };
        assert_ne!(classify_point(&c, &z, None).unwrap().verdict, Verdict::Rc, "{id}");
        assert!(matches!(cross_section(&c, &z), Err(Error::NotRegular(_))));
    }
}

#[test]
fn unbounded_regions_have_infinite_quotient_measure() {
    let atlas = OrbitAtlas::for_chart(&cat(CatalogId::Se2Rot)).unwrap();
    assert_eq!(
        quotient_measure(&atlas, &Region::everything(&atlas)).unwrap(),
        QuotientMass::Infinite
    );
    let bad = piece_region(7, vec![]);
    assert!(quotient_measure(&atlas, &bad).is_err());
}

#[test]
fn semi_invariance_of_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for id in REGULAR_GROUPS {
        let c = cat(id);
        let s = random_samples(&c, 32, &mut rng).unwrap();
        assert!(verify_semi_invariance(&c, &s).unwrap() < 1e-12, "{id}");
    }
}

#[test]
fn quasi_invariance_of_the_orbit_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for id in REGULAR_GROUPS {
        let c = cat(id);
        let s = random_quasi_samples(&c, 16, &mut rng).unwrap();
        assert!(verify_quasi_invariance(&c, &s).unwrap() < 1e-12, "{id}");
    }
}

#[test]
fn duflo_moore_powers_compose() {
    let c = cat(CatalogId::Sim2);
    let nodes = h_nodes(&c, &HNodeSpec::with_nodes(&c, 8)).unwrap();
    let a = Freq::pair(1.0, 0.0);
    let f = OrbitFunction::sample(&a, &nodes, |w| Complex64::new(w.get(0), w.get(1)), OrbitMeasure::Mu);
    let half = duflo_moore_apply(&c, &f, 0.5).unwrap();
    let back = duflo_moore_apply(&c, &duflo_moore_apply(&c, &half, 0.5).unwrap(), -1.0).unwrap();
    for (x, y) in back.values.iter().zip(&f.values) {
        assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
    }
    assert!(duflo_moore_apply(
        &c,
        &OrbitFunction {
            representative: Freq::pair(0.0, 0.0),
            ..f
        },
        1.0
    )
    .is_err());
}

#[test]
fn beta_integral_on_circles() {
    // dω = r dr dθ with the radial factor carried by λ̄, so β is dθ
    let c = cat(CatalogId::Se2Rot);
    for r in [0.3, 1.7] {
        let v = beta_integral(&c, &Freq::pair(r, 0.0), &|_| 1.0).unwrap();
        assert!((v - TAU).abs() < 1e-10, "{v}");
        let w = beta_integral(&c, &Freq::pair(0.0, r), &|w| w.get(0) * w.get(0)).unwrap();
        assert!((w - TAU * r * r / 2.0).abs() < 1e-10, "{w}");
    }
}
