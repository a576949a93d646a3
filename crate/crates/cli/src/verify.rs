//! The invariant batteries behind `orbitlet verify`.

use std::f64::consts::{LN_2, PI, TAU};

use orbitlet_core::admissibility::default_probe_grid;
use orbitlet_core::groups::{
    check_left_invariance, random_point, CatalogId, ChartFn, ChartGaussian, GroupChart, TruncationSpec,
};
use orbitlet_core::linalg::{ChartPoint, Freq};
use orbitlet_core::orbits::{
    classify_point, random_samples, verify_disintegration, verify_semi_invariance, DisintegrationSpec, OrbitAtlas,
    Verdict,
};
use orbitlet_core::plancherel::{verify_quasi_invariance, verify_scaling_law, verify_td_correspondence, QuasiSample};
use orbitlet_core::transform::{analyze, fourier, h_nodes, l2g_norm, random_band_limited, Band, Grid, HNodeSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::cli::Level;
use crate::commands::{to_json, Context, IDENTITY_TOL};
use crate::defaults::{default_wavelet, oracle_profile, scaling_regions};
use crate::report::{CliError, Outcome, RunReport};

const LEFT_INVARIANCE_TOL: f64 = 1e-8;
const DISINTEGRATION_TOL: f64 = 1e-4;
const TD_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-3;

/// Sample counts per level.
struct Budget {
    left: usize,
    semi: usize,
    td_orbits: usize,
    td_duplicates: usize,
    oracle_signals: usize,
}

impl Budget {
    fn of(level: Level) -> Self {
        match level {
            Level::Fast => Self {
                left: 2,
                semi: 200,
                td_orbits: 4,
                td_duplicates: 1,
                oracle_signals: 1,
            },
            Level::Full => Self {
                left: 6,
                semi: 1000,
                td_orbits: 16,
                td_duplicates: 2,
                oracle_signals: 3,
            },
        }
    }
}

/// `all`, or comma-separated catalog ids.
pub fn parse_groups(arg: &str) -> Result<Vec<CatalogId>, CliError> {
    if arg.trim().eq_ignore_ascii_case("all") {
        return Ok(CatalogId::ALL.to_vec());
    }
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse::<CatalogId>()
                .map_err(|_| CliError::Config(format!("unknown group `{}`", s.trim())))
        })
        .collect()
}

fn judged(pass: bool, results: serde_json::Value) -> Outcome {
    Outcome::judged(pass, if pass { "HOLDS" } else { "VIOLATED" }, results)
}

fn battery_points(dim: usize) -> Vec<Freq> {
    if dim == 1 {
        [0.0, 1.0, -0.3, 7.5].iter().map(|&x| Freq::scalar(x)).collect()
    } else {
        [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 2f64.sqrt()),
            (3.0, 2.0),
            (-1.0, 0.5),
        ]
        .iter()
        .map(|&(x, y)| Freq::pair(x, y))
        .collect()
    }
}

/// Batteries that need a regular orbit, in report order.
const REGULAR_BATTERIES: [&str; 7] = [
    "left_invariance",
    "semi_invariance",
    "quasi_invariance",
    "disintegration",
    "td_correspondence",
    "scaling",
    "oracle_equality",
];

pub fn verify_suite(ctx: &Context, ids: &[CatalogId], level: Level, r: &mut RunReport) {
    let budget = Budget::of(level);
    let mut rng = ctx.rng();
    for &id in ids {
        let chart = GroupChart::catalog(id);
        let name = |b: &str| format!("{id}/{b}");
        r.run(&name("classification"), || classification(&chart));
        if OrbitAtlas::for_chart(&chart).is_err() {
            for b in REGULAR_BATTERIES {
                r.skip(&name(b), "no regular orbits: the set of regular frequencies is empty");
            }
            continue;
        }
        if chart.chart_dim() == 0 {
            r.skip(&name("left_invariance"), "trivial group");
        } else {
            r.run(&name("left_invariance"), || {
                left_invariance(&chart, budget.left, &mut rng)
            });
        }
        let samples = r.step(&name("semi_invariance"), || {
            let s = random_samples(&chart, budget.semi, &mut rng)?;
            let e = verify_semi_invariance(&chart, &s)?;
            Ok((
                judged(e < IDENTITY_TOL, json!({"samples": s.len(), "max_relative_error": e})),
                (s, e),
            ))
        });
        match samples {
            Some((s, semi)) => {
                r.run(&name("quasi_invariance"), || {
                    let q: Vec<QuasiSample> = s
                        .iter()
                        .map(|(g, h)| {
                            let x: Vec<f64> = (0..chart.ambient_dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                            Ok(QuasiSample {
                                x: Freq::new(&x)?,
                                h: *h,
                                gamma: *g,
                            })
                        })
                        .collect::<Result<_, CliError>>()?;
                    let e = verify_quasi_invariance(&chart, &q)?;
                    let gap = (e - semi).abs();
                    Ok(judged(
                        e < IDENTITY_TOL && gap <= 1e-12,
                        json!({"samples": q.len(), "max_relative_error": e, "gap_to_semi_invariance": gap}),
                    ))
                });
            }
            None => r.skip(&name("quasi_invariance"), "semi-invariance battery did not pass"),
        }
        r.run(&name("disintegration"), || disintegration(&chart));
        r.run(&name("td_correspondence"), || {
            td_correspondence(&chart, &budget, &mut rng)
        });
        if chart.is_unimodular() {
            r.run(&name("scaling"), || scaling(&chart));
        } else {
            r.skip(&name("scaling"), "group is not unimodular");
        }
        r.run(&name("oracle_equality"), || {
            oracle_equality(id, &chart, budget.oracle_signals, &mut rng)
        });
    }
}

fn classification(chart: &GroupChart) -> Result<Outcome, CliError> {
    let pts = battery_points(chart.ambient_dim());
    let mut verdicts = vec![];
    for p in &pts {
        verdicts.push(classify_point(chart, p, None)?.verdict);
    }
    // with no atlas there must be no regular point at all
    let pass = OrbitAtlas::for_chart(chart).is_ok() || verdicts.iter().all(|v| *v != Verdict::Rc);
    let listed: Vec<_> = pts
        .iter()
        .zip(&verdicts)
        .map(|(p, v)| json!({"point": p.as_slice(), "verdict": v.to_string()}))
        .collect();
    Ok(judged(pass, json!({"points": listed})))
}

fn left_invariance(chart: &GroupChart, n: usize, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let tr = TruncationSpec::default_for(chart);
    let fs: Vec<ChartGaussian> = (0..n)
        .map(|_| ChartGaussian::new(chart, random_point(chart, rng, 1.0), 0.7))
        .collect();
    let closures: Vec<Box<ChartFn>> = fs
        .into_iter()
        .map(|g| Box::new(move |t: &ChartPoint| g.eval(t)) as Box<ChartFn>)
        .collect();
    let samples: Vec<(ChartPoint, &ChartFn)> = closures
        .iter()
        .map(|f| (random_point(chart, rng, 1.0), f.as_ref()))
        .collect();
    let e = check_left_invariance(chart, &samples, &tr)?;
    Ok(judged(
        e < LEFT_INVARIANCE_TOL,
        json!({"samples": n, "max_relative_error": e}),
    ))
}

fn disintegration(chart: &GroupChart) -> Result<Outcome, CliError> {
    let gauss = |w: &Freq| (-w.norm_sq()).exp();
    let closed = PI.powf(chart.ambient_dim() as f64 / 2.0);
    let rep = verify_disintegration(chart, &gauss, &DisintegrationSpec::default_for(chart))?;
    let e = (rep.iterated - rep.direct)
        .abs()
        .max((rep.direct - closed).abs())
        .max((rep.iterated - closed).abs());
    let mut v = to_json(&rep)?;
    v["closed_form"] = json!(closed);
    v["max_error"] = json!(e);
    Ok(judged(e <= DISINTEGRATION_TOL, v))
}

fn td_correspondence(chart: &GroupChart, b: &Budget, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let (profile, region) = default_wavelet(chart)?;
    let probes = default_probe_grid(chart, &region, b.td_orbits, b.td_duplicates, rng)?;
    let rep = verify_td_correspondence(chart, &profile, &probes, &TruncationSpec::default_for(chart))?;
    let e = rep.max_relative_error;
    Ok(judged(e <= TD_TOL, to_json(&rep)?))
}

fn scaling(chart: &GroupChart) -> Result<Outcome, CliError> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    let regions = scaling_regions(&atlas);
    let k = chart.ambient_dim() as f64;
    let mut worst: f64 = 0.0;
    for a in [0.5, 2.0, 3.0] {
        for e in verify_scaling_law(chart, a, &regions)?.exponents {
            worst = worst.max((e - k).abs());
        }
    }
    Ok(judged(
        worst <= IDENTITY_TOL,
        json!({"dimension": chart.ambient_dim(), "max_exponent_deviation": worst}),
    ))
}

/// T_H² of [`oracle_profile`] in closed form.
fn oracle_t2(id: CatalogId, w: &Freq) -> f64 {
    let r = w.norm();
    let on = |b: bool, v: f64| if b { v } else { 0.0 };
    match id {
        CatalogId::Identity(_) => on(w.as_slice().iter().all(|x| (-1.0..1.0).contains(x)), 1.0),
        CatalogId::Affine1dPlus => on(w.get(0) > 0.0, LN_2),
        CatalogId::Affine1dFull => on(r > 0.0, 2.0 * LN_2),
        CatalogId::Dyadic1d | CatalogId::Sim2 => on(r > 0.0, 1.0),
        CatalogId::Diag2 => on(w.get(0) > 0.0 && w.get(1) > 0.0, LN_2 * LN_2),
        CatalogId::DiagLine2 => on(w.get(0) > 0.0, LN_2),
        CatalogId::Se2Rot => on((0.5..2.0).contains(&r), TAU),
        CatalogId::Sl2zDyadic => f64::NAN,
    }
}

/// ‖V_g f‖² against Σ |f̂(γ)|² T_H(γ)² Δγ with T_H in closed form.
fn oracle_equality(
    id: CatalogId,
    chart: &GroupChart,
    signals: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome, CliError> {
    let profile = oracle_profile(id).ok_or_else(|| CliError::Config(format!("no oracle profile for {id}")))?;
    let (grid, spec) = if chart.ambient_dim() == 1 {
        (Grid::centered(1, 512, 0.5)?, HNodeSpec::with_nodes(chart, 256))
    } else {
        (Grid::centered(2, 32, 0.5)?, HNodeSpec::with_nodes(chart, 64))
    };
    let nodes = h_nodes(chart, &spec)?;
    let band = Band {
        min: 0.0,
        max: 6.0,
        positive: false,
    };
    let mut worst: f64 = 0.0;
    for _ in 0..signals {
        let f = random_band_limited(&grid, &band, rng)?;
        let v = l2g_norm(&analyze(&f, &profile, chart, &nodes)?);
        let s = fourier(&f)?;
        let o: f64 = s
            .values
            .iter()
            .enumerate()
            .map(|(i, x)| x.norm_sqr() * oracle_t2(id, &grid.frequency(i)) * grid.freq_cell())
            .sum();
        worst = worst.max((v - o).abs() / f.norm_sq());
    }
    Ok(judged(
        worst <= ORACLE_TOL,
        json!({"signals": signals, "nodes": nodes.len(), "max_relative_error": worst}),
    ))
}
