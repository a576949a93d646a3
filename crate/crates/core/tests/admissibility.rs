use orbitlet_core::admissibility::{
    calderon_s, calderon_t, check_admissible, default_probe_grid, full_region, least_power, piece_region,
    synthesize_unimodular, synthesize_weakly_admissible, AdmissibilityVerdict,
};
use orbitlet_core::error::Error;
use orbitlet_core::groups::{random_point, CatalogId, GroupChart, TruncationSpec};
use orbitlet_core::linalg::Freq;
use orbitlet_core::orbits::{kappa, Interval};
use orbitlet_core::profile::FrequencyProfile;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cat(id: CatalogId) -> GroupChart {
    GroupChart::catalog(id)
}

fn random_freq(c: &GroupChart, rng: &mut ChaCha8Rng) -> Freq {
    loop {
        let w = if c.ambient_dim() == 1 {
            Freq::scalar(rng.gen_range(-3.0..3.0))
        } else {
            Freq::pair(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
        };
        if w.as_slice().iter().all(|x| x.abs() > 0.1) {
            return w;
        }
    }
}

#[test]
fn calderon_function_is_constant_on_orbits() {
    let profile = FrequencyProfile::RadialPower { c: 1.0, p: 1.0, q: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for id in [
        CatalogId::Affine1dPlus,
        CatalogId::Affine1dFull,
        CatalogId::Sim2,
        CatalogId::Diag2,
        CatalogId::Se2Rot,
    ] {
        let c = cat(id);
        let tr = TruncationSpec::default_for(&c);
        for _ in 0..4 {
            let w = random_freq(&c, &mut rng);
            let h = c.evaluate_element(&random_point(&c, &mut rng, 1.5)).unwrap();
            let a = calderon_t(&c, &profile, &w, &tr).unwrap();
            let b = calderon_t(&c, &profile, &w.act(&h.matrix), &tr).unwrap();
            // on DIAG2 the radial profile is not square integrable along orbits
            assert_eq!(a.divergent, id == CatalogId::Diag2);
            assert_eq!(a.divergent, b.divergent);
            if !a.divergent {
                assert!((a.value - b.value).abs() <= 1e-9 * a.value, "{id}: {a:?} {b:?}");
            }
        }
    }
}

#[test]
fn unimodular_s_is_t_scaled_by_kappa() {
    let se = cat(CatalogId::Se2Rot);
    let tr = TruncationSpec::default_for(&se);
    let g = FrequencyProfile::Box {
        axes: vec![Interval::new(0.5, 2.0), Interval::new(-1.0, 1.0)],
        amplitude: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..8 {
        let w = random_freq(&se, &mut rng);
        let t = calderon_t(&se, &g, &w, &tr).unwrap().squared;
        let s = calderon_s(&se, &g, &w, &tr).unwrap().squared;
        let k = kappa(&se, &w).unwrap();
        assert!((s - k * t).abs() <= 1e-9 * (1.0 + s), "{s} {k} {t}");
    }
}

#[test]
fn unimodular_synthesis_is_admissible_on_its_region_only() {
    let se = cat(CatalogId::Se2Rot);
    let region = piece_region(0, vec![Interval::new(0.5, 2.0)]);
    let g = synthesize_unimodular(&se, &region).unwrap();
    let tr = TruncationSpec::default_for(&se);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let probes = default_probe_grid(&se, &region, 16, 2, &mut rng).unwrap();
    let rep = check_admissible(&se, &g, &probes, 1e-6, &tr).unwrap();
    assert_eq!(rep.verdict, AdmissibilityVerdict::Admissible, "{rep:?}");
    assert_eq!(rep.values.len(), probes.len());
    let outside = [Freq::pair(3.0, 0.0), Freq::pair(0.0, -0.1)];
    let rep = check_admissible(&se, &g, &outside, 1e-6, &tr).unwrap();
    assert_eq!(rep.verdict, AdmissibilityVerdict::NotAdmissible);
    assert_eq!(rep.t_max, 0.0);
}

#[test]
fn weak_fallback_is_weakly_admissible() {
    let af = cat(CatalogId::Affine1dFull);
    let region = full_region(&af).unwrap();
    let g = synthesize_weakly_admissible(&af, &region).unwrap();
    let tr = TruncationSpec::default_for(&af);
    let probes: Vec<Freq> = [-5.0, -1.0, -0.01, 0.02, 1.0, 7.0]
        .iter()
        .map(|&x| Freq::scalar(x))
        .collect();
    let rep = check_admissible(&af, &g, &probes, 1e-6, &tr).unwrap();
    assert_eq!(rep.verdict, AdmissibilityVerdict::WeaklyAdmissible, "{rep:?}");
    assert!(rep.t_min > 0.0 && rep.t_max.is_finite());
}

#[test]
fn gaussian_on_the_affine_group_is_divergent() {
    let af = cat(CatalogId::Affine1dPlus);
    let g = FrequencyProfile::RadialPower { c: 1.0, p: 0.0, q: 1.0 };
    let tr = TruncationSpec::default_for(&af);
    let rep = check_admissible(&af, &g, &[Freq::scalar(1.0), Freq::scalar(2.0)], 1e-6, &tr).unwrap();
    assert_eq!(rep.verdict, AdmissibilityVerdict::Divergent);
    assert_eq!(rep.divergent_probes, 2);
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["verdict"], "DIVERGENT");
}

#[test]
fn empty_probe_grid_is_an_error() {
    let af = cat(CatalogId::Affine1dPlus);
    let r = check_admissible(
        &af,
        &FrequencyProfile::shannon(),
        &[],
        1e-6,
        &TruncationSpec::default_for(&af),
    );
    assert!(matches!(r, Err(Error::EmptyProbeGrid)));
}

proptest! {
    #[test]
    fn least_power_is_least(delta in 0.05..0.95f64, mass in 1e-3..1e3f64, n in 0usize..40) {
        let k = least_power(delta, mass, n);
        let bound = 2f64.powi(-(n as i32));
        prop_assert!(delta.powi(k as i32) * mass < bound);
        if k > 0 {
            prop_assert!(delta.powi(k as i32 - 1) * mass >= bound);
        }
    }
}
