use orbitlet_core::error::Error;
use orbitlet_core::expr::Expr;
use orbitlet_core::groups::{
    check_left_invariance, dual_act, modular_g, random_point, Block, CatalogId, ChartFn, ChartGaussian, CustomChart,
    GroupChart, TruncationSpec,
};
use orbitlet_core::linalg::{ChartPoint, Freq};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cat(id: CatalogId) -> GroupChart {
    GroupChart::catalog(id)
}

fn continuous_catalog() -> impl Strategy<Value = CatalogId> {
    prop::sample::select(vec![
        CatalogId::Affine1dPlus,
        CatalogId::Affine1dFull,
        CatalogId::Dyadic1d,
        CatalogId::Sim2,
        CatalogId::Diag2,
        CatalogId::DiagLine2,
        CatalogId::Se2Rot,
        CatalogId::Sl2zDyadic,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn modular_function_is_multiplicative(id in continuous_catalog(), seed in any::<u64>()) {
        let c = cat(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
        let b = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
        let ab = c.compose(&a, &b).unwrap();
        let lhs = modular_g(&ab);
        let rhs = modular_g(&a) * modular_g(&b);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{id}: {lhs} vs {rhs}");
    }

    #[test]
    fn dual_action_is_a_right_action(id in continuous_catalog(), seed in any::<u64>(), x in -3.0..3.0f64, y in -3.0..3.0f64) {
        let c = cat(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = if c.ambient_dim() == 1 { Freq::scalar(x) } else { Freq::pair(x, y) };
        let a = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
        let b = c.evaluate_element(&random_point(&c, &mut rng, 2.0)).unwrap();
        let ab = c.compose(&a, &b).unwrap();
        let lhs = dual_act(&dual_act(&w, &a).unwrap(), &b).unwrap();
        let rhs = dual_act(&w, &ab).unwrap();
        let scale = 1.0 + rhs.norm();
        prop_assert!(lhs.sub(&rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn locate_inverts_embed(id in continuous_catalog(), seed in any::<u64>()) {
        let c = cat(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_point(&c, &mut rng, 3.0);
        let back = c.locate(&c.embed(&t)).unwrap();
        for i in 0..t.len() {
            let d = (back.get(i) - t.get(i)).abs();
            let d = if c.blocks()[i].is_periodic() { d.min((d - std::f64::consts::TAU).abs()) } else { d };
            prop_assert!(d < 1e-12, "{id} {t:?} {back:?}");
        }
    }
}

#[test]
fn unimodular_exactly_for_identity_and_rotations() {
    for id in CatalogId::ALL {
        let expect = matches!(id, CatalogId::Identity(_) | CatalogId::Se2Rot);
        assert_eq!(cat(id).is_unimodular(), expect, "{id}");
    }
}

#[test]
fn left_invariance_of_haar_measure() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for id in CatalogId::ALL {
        let c = cat(id);
        if c.chart_dim() == 0 || id == CatalogId::Sl2zDyadic {
            continue;
        }
        let tr = TruncationSpec::default_for(&c);
        let gs: Vec<ChartGaussian> = (0..3)
            .map(|_| ChartGaussian::new(&c, random_point(&c, &mut rng, 1.0), 0.7))
            .collect();
        let fs: Vec<Box<ChartFn>> = gs
            .into_iter()
            .map(|g| Box::new(move |t: &ChartPoint| g.eval(t)) as Box<ChartFn>)
            .collect();
        let samples: Vec<(ChartPoint, &ChartFn)> = fs
            .iter()
            .map(|f| (random_point(&c, &mut rng, 1.0), f.as_ref()))
            .collect();
        let err = check_left_invariance(&c, &samples, &tr).unwrap();
        assert!(err < 1e-8, "{id}: {err}");
    }
}

#[test]
fn sl2z_counting_measure_is_invariant_on_finite_sets() {
    let c = cat(CatalogId::Sl2zDyadic);
    // functions supported on a single element have Haar integral 1 and so do
    // their left translates
    let tr = TruncationSpec::default_for(&c);
    let target = ChartPoint::new(&[1.0, 3.0]).unwrap();
    let f = move |t: &ChartPoint| if *t == target { 1.0 } else { 0.0 };
    let h0 = ChartPoint::new(&[0.0, 2.0]).unwrap();
    let err = check_left_invariance(&c, &[(h0, &f)], &tr).unwrap();
    assert_eq!(err, 0.0);
}

fn affine_in_linear_coordinates(density: &str) -> GroupChart {
    GroupChart::custom(CustomChart {
        ambient_dim: 1,
        blocks: vec![Block::Continuous {
            lo: 0.0,
            hi: f64::INFINITY,
            periodic: false,
        }],
        embed: vec![Expr::parse("t1").unwrap()],
        density: Expr::parse(density).unwrap(),
        modular: Expr::parse("1").unwrap(),
    })
    .unwrap()
}

#[test]
fn corrupted_haar_density_is_detected() {
    let tr = |c: &GroupChart| {
        let mut t = TruncationSpec::default_for(c);
        t.blocks[0].as_mut().unwrap().lo = 0.0;
        t.blocks[0].as_mut().unwrap().hi = 60.0;
        t.blocks[0].as_mut().unwrap().nodes = 20000;
        t
    };
    let f = |t: &ChartPoint| {
        let x = t.get(0);
        x * x * (-x).exp()
    };
    let h0 = ChartPoint::new(&[0.5]).unwrap();
    let good = affine_in_linear_coordinates("1/t1");
    let e = check_left_invariance(&good, &[(h0, &f)], &tr(&good)).unwrap();
    assert!(e < 1e-8, "{e}");
    let bad = affine_in_linear_coordinates("1");
    let e = check_left_invariance(&bad, &[(h0, &f)], &tr(&bad)).unwrap();
    assert!(e > 0.1, "{e}");
}

#[test]
fn singular_custom_chart_is_rejected() {
    let r = GroupChart::custom(CustomChart {
        ambient_dim: 1,
        blocks: vec![Block::real_line()],
        embed: vec![Expr::parse("0*t1").unwrap()],
        density: Expr::parse("1").unwrap(),
        modular: Expr::parse("1").unwrap(),
    });
    assert!(matches!(r, Err(Error::InvalidChart(_))));
}
