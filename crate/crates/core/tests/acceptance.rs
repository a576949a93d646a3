//! Acceptance criteria, one line each. Reference values are recomputed here
//! by quadratures that do not go through the library's Haar integrator.

use std::f64::consts::{LN_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use orbitlet_core::admissibility::{
    calderon_t, check_admissible, default_probe_grid, full_region, l2_norm_direct, l2_norm_via_quotient, piece_region,
    synthesize_nonunimodular, synthesize_unimodular, AdmissibilityVerdict, DirectGrid, QuotientNormSpec, TilingOptions,
};
use orbitlet_core::error::Error;
use orbitlet_core::groups::{CatalogId, GroupChart, TruncationSpec};
use orbitlet_core::linalg::{ChartPoint, Freq};
use orbitlet_core::orbits::{
    classify_point, cross_section, quotient_measure, random_samples, verify_disintegration, verify_semi_invariance,
    DisintegrationSpec, Interval, OrbitAtlas, Verdict,
};
use orbitlet_core::plancherel::{
    identify_plancherel_density, verify_quasi_invariance, verify_scaling_law, CandidateDensity, QuasiSample,
};
use orbitlet_core::profile::FrequencyProfile;
use orbitlet_core::transform::{
    analyze, fourier, h_nodes, l2g_norm, random_band_limited, signal_from_spectrum, synthesize, Band, Grid, HNodeSpec,
    HRange,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cat(id: CatalogId) -> GroupChart {
    GroupChart::catalog(id)
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` panels of degree 16,
/// written out here so the reference values share no code with the crate.
fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.755_404_408_355_003,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let m = a + (p as f64 + 0.5) * h;
        for i in 0..8 {
            let d = 0.5 * h * X[i];
            s += 0.5 * h * W[i] * (f(m - d) + f(m + d));
        }
    }
    s
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dyadic_isometry() -> Outcome {
    let start = Instant::now();
    let dy = cat(CatalogId::Dyadic1d);
    let g = FrequencyProfile::shannon();
    let grid = Grid::centered(1, 4096, 1.0).map_err(|e| e.to_string())?;
    let nodes = h_nodes(&dy, &HNodeSpec::default_for(&dy)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let band = Band {
        min: 1e-9,
        max: 3.0,
        positive: false,
    };
    let mut worst: f64 = 0.0;
    let mut oracle_worst: f64 = 0.0;
    for _ in 0..10 {
        let f = random_band_limited(&grid, &band, &mut rng).map_err(|e| e.to_string())?;
        let field = analyze(&f, &g, &dy, &nodes).map_err(|e| e.to_string())?;
        let ratio = l2g_norm(&field) / f.norm_sq();
        worst = worst.max((ratio - 1.0).abs());
        // oracle: Σ|f̂|² Σ_j |ĝ(2ʲγ)|² Δγ
        let spec = fourier(&f).map_err(|e| e.to_string())?;
        let mut o = 0.0;
        for (i, v) in spec.values.iter().enumerate() {
            let w = grid.frequency(i).get(0);
            let t2: f64 = (-60..=60)
                .map(|j| {
                    let x = (w * 2f64.powi(j)).abs();
                    if (1.0..2.0).contains(&x) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .sum();
            o += v.norm_sqr() * t2 * grid.freq_cell();
        }
        oracle_worst = oracle_worst.max((o / f.norm_sq() - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && oracle_worst <= 1e-9 && secs < 5.0,
        format!("max |ratio-1| = {worst:.2e}, oracle {oracle_worst:.2e}, {secs:.2} s"),
    )
}

fn calderon_constant() -> Outcome {
    let af = cat(CatalogId::Affine1dPlus);
    let tr = TruncationSpec::default_for(&af);
    let chi = FrequencyProfile::interval(1.0, 2.0, 1.0);
    let mut worst: f64 = 0.0;
    for i in 0..32 {
        let w = 10f64.powf(-3.0 + 6.0 * i as f64 / 31.0);
        let t = calderon_t(&af, &chi, &Freq::scalar(w), &tr).map_err(|e| e.to_string())?;
        // oracle: ∫ χ(ωa) da/a over a ∈ [1/ω, 2/ω]
        let oracle = gl(|a| 1.0 / a, 1.0 / w, 2.0 / w, 64);
        worst = worst.max((t.squared - oracle).abs()).max((oracle - LN_2).abs());
    }
    let g = FrequencyProfile::interval(1.0, 2.0, 1.0 / LN_2.sqrt());
    let region = piece_region(1, vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let probes = default_probe_grid(&af, &region, 64, 8, &mut rng).map_err(|e| e.to_string())?;
    let rep = check_admissible(&af, &g, &probes, 1e-6, &tr).map_err(|e| e.to_string())?;
    check(
        worst <= 1e-6 && rep.verdict == AdmissibilityVerdict::Admissible,
        format!(
            "max |T²-ln2| = {worst:.2e}, normalized verdict {:?}, dev {:.2e}",
            rep.verdict, rep.max_deviation
        ),
    )
}

fn sim2_closed_form() -> Outcome {
    let sim = cat(CatalogId::Sim2);
    let tr = TruncationSpec::default_for(&sim);
    let c = (2.0 / PI).sqrt();
    let g = FrequencyProfile::RadialPower { c, p: 1.0, q: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let r: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let th: f64 = rng.gen_range(0.0..TAU);
        let w = Freq::pair(r * th.cos(), r * th.sin());
        let t = calderon_t(&sim, &g, &w, &tr).map_err(|e| e.to_string())?;
        // oracle: 2-D quadrature over (ln a, θ) of |ĝ(ω a R_θ)|²
        let oracle = gl(
            |th| {
                gl(
                    |s| {
                        let a = s.exp();
                        let v = Freq::pair(
                            a * (w.get(0) * th.cos() - w.get(1) * th.sin()),
                            a * (w.get(0) * th.sin() + w.get(1) * th.cos()),
                        );
                        let x = v.norm();
                        (c * x * (-x * x).exp()).powi(2)
                    },
                    -r.ln() - 20.0,
                    -r.ln() + 5.0,
                    100,
                )
            },
            0.0,
            TAU,
            4,
        )
        .sqrt();
        worst = worst.max((t.value - oracle).abs()).max((oracle - 1.0).abs());
    }
    check(worst <= 1e-6, format!("max |T-1| = {worst:.2e} over 32 probes"))
}

fn unimodular_dichotomy() -> Outcome {
    let se = cat(CatalogId::Se2Rot);
    let atlas = OrbitAtlas::for_chart(&se).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    for r in [1.0, 2.0, 3.5] {
        let region = piece_region(0, vec![Interval::new(0.0, r)]);
        let g = synthesize_unimodular(&se, &region).map_err(|e| e.to_string())?;
        for (x, y) in [(0.1, 0.2), (0.5 * r, 0.0), (0.0, -0.9 * r), (r, 0.0), (1.1 * r, 0.3)] {
            let inside = (x * x + y * y).sqrt() < r;
            let v = g.eval_re(&Freq::pair(x, y));
            let expect = if inside { 1.0 / TAU.sqrt() } else { 0.0 };
            shape_ok &= (v - expect).abs() < 1e-15;
        }
        let q = quotient_measure(&atlas, &region).map_err(|e| e.to_string())?.value();
        let oracle = gl(|u| u, 0.0, r, 4);
        worst = worst.max((q - oracle).abs()).max((oracle - r * r / 2.0).abs());
    }
    let full = full_region(&se).map_err(|e| e.to_string())?;
    let err = synthesize_unimodular(&se, &full);
    let raised = err == Err(Error::NotStronglySquareIntegrable);
    check(
        shape_ok && worst <= 1e-6 && raised,
        format!("profile (2π)^-1/2 χ: {shape_ok}, max |λ̄-R²/2| = {worst:.2e}, full plane raises: {raised}"),
    )
}

fn nonunimodular_tiling() -> Outcome {
    let dl = cat(CatalogId::DiagLine2);
    let region = full_region(&dl).map_err(|e| e.to_string())?;
    let h0 = ChartPoint::new(&[(0.5f64).ln()]).map_err(|e| e.to_string())?;
    let opts = TilingOptions::default_for(&dl);
    let syn = synthesize_nonunimodular(&dl, &region, &h0, &opts).map_err(|e| e.to_string())?;

    // admissibility on 64 orbit representatives
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let probes = default_probe_grid(&dl, &region, 64, 0, &mut rng).map_err(|e| e.to_string())?;
    let mut tiles = std::collections::BTreeSet::new();
    let atlas = OrbitAtlas::for_chart(&dl).map_err(|e| e.to_string())?;
    for p in &probes {
        let (a, _) = cross_section(&dl, p).map_err(|e| e.to_string())?;
        let (part, u) = atlas.locate(&a).ok_or("probe off the transversal")?;
        tiles.insert((part, u[0].floor() as i64));
    }
    let rep = check_admissible(&dl, &syn.profile, &probes, 1e-6, &opts.trunc).map_err(|e| e.to_string())?;

    // kₙ by direct substitution, with strip masses from the closed form
    // ∫₀^{ln2} e^t dt / ln 2 of the base window
    let mass = gl(|t| t.exp(), 0.0, LN_2, 4) / LN_2;
    let delta = syn.contraction_modular;
    let mut k_ok = (delta - 0.5).abs() < 1e-15;
    for (n, t) in syn.tiles.iter().enumerate() {
        let target = 2f64.powi(-(n as i32));
        let k = t.power as i32;
        k_ok &= (t.mass - mass).abs() < 1e-9;
        k_ok &= delta.powi(k) * mass < target;
        k_ok &= k == 0 || delta.powi(k - 1) * mass >= target;
    }

    // ‖ĝ‖² two ways
    let quotient =
        l2_norm_via_quotient(&dl, &syn.profile, &QuotientNormSpec::default_for(&dl)).map_err(|e| e.to_string())?;
    let grid = DirectGrid {
        axes: vec![
            DirectGrid::symmetric_graded_axis(2f64.powi(-50), 4.0, 8),
            orbitlet_core::quadrature::gauss_legendre_nodes(-64.0, 64.0, 128, 4, &[]),
        ],
    };
    let direct = l2_norm_direct(&syn.profile, &grid);
    let agree = (direct - quotient).abs();
    check(
        rep.verdict == AdmissibilityVerdict::Admissible && tiles.len() >= 8 && k_ok && agree <= 1e-3,
        format!(
            "verdict {:?} (dev {:.2e}) over {} tiles, kₙ ok: {k_ok}, ‖ĝ‖² direct {direct:.6} vs quotient {quotient:.6} (bound {:.6})",
            rep.verdict, rep.max_deviation, tiles.len(), syn.norm_bound
        ),
    )
}

fn semi_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut groups = 0;
    for id in CatalogId::ALL {
        let c = cat(id);
        if OrbitAtlas::for_chart(&c).is_err() {
            continue;
        }
        groups += 1;
        let s = random_samples(&c, 1000, &mut rng).map_err(|e| e.to_string())?;
        let semi = verify_semi_invariance(&c, &s).map_err(|e| e.to_string())?;
        let q: Vec<QuasiSample> = s
            .iter()
            .map(|(g, h)| QuasiSample {
                x: Freq::new(&vec![rng.gen_range(-3.0..3.0); c.ambient_dim()]).unwrap(),
                h: *h,
                gamma: *g,
            })
            .collect();
        let quasi = verify_quasi_invariance(&c, &q).map_err(|e| e.to_string())?;
        worst = worst.max(semi).max(quasi);
        gap = gap.max((semi - quasi).abs());
    }
    check(
        worst < 1e-10 && gap <= 1e-12,
        format!("{groups} groups, max rel. error {worst:.2e}, |quasi - semi| ≤ {gap:.2e}"),
    )
}

fn disintegration() -> Outcome {
    let gauss = |w: &Freq| (-w.norm_sq()).exp();
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for (id, closed) in [
        (CatalogId::Sim2, PI),
        (CatalogId::Se2Rot, PI),
        (CatalogId::Affine1dPlus, PI.sqrt()),
    ] {
        let c = cat(id);
        let r = verify_disintegration(&c, &gauss, &DisintegrationSpec::default_for(&c)).map_err(|e| e.to_string())?;
        let e = (r.iterated - r.direct)
            .abs()
            .max((r.direct - closed).abs())
            .max((r.iterated - closed).abs());
        worst = worst.max(e);
        parts.push(format!("{id} {e:.1e}"));
    }
    check(worst <= 1e-4, parts.join(", "))
}

fn scaling_law() -> Outcome {
    let se = cat(CatalogId::Se2Rot);
    let regions = vec![
        piece_region(0, vec![Interval::new(0.0, 1.0)]),
        piece_region(0, vec![Interval::new(0.5, 2.0)]),
    ];
    let mut worst: f64 = 0.0;
    for a in [0.5, 2.0, 3.0] {
        let r = verify_scaling_law(&se, a, &regions).map_err(|e| e.to_string())?;
        for e in &r.exponents {
            worst = worst.max((e - 2.0).abs());
        }
    }
    check(worst <= 1e-10, format!("max |exponent - 2| = {worst:.2e}"))
}

fn oracle_equality() -> Outcome {
    let af = cat(CatalogId::Affine1dPlus);
    let chi = FrequencyProfile::interval(1.0, 2.0, 1.0);
    let grid = Grid::centered(1, 1024, 0.5).map_err(|e| e.to_string())?;
    // spacing ln2/128 in ln a, so every orbit sees the window exactly
    let spec = HNodeSpec {
        blocks: vec![HRange {
            lo: -16.0 * LN_2,
            hi: 16.0 * LN_2,
            nodes: 4096,
        }],
    };
    let nodes = h_nodes(&af, &spec).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let band = Band {
        min: 0.0,
        max: 6.0,
        positive: true,
    };
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let f = random_band_limited(&grid, &band, &mut rng).map_err(|e| e.to_string())?;
        let v = l2g_norm(&analyze(&f, &chi, &af, &nodes).map_err(|e| e.to_string())?);
        // oracle: ∫|f̂|² T² with T² = ∫ χ(γa) da/a evaluated per frequency
        let s = fourier(&f).map_err(|e| e.to_string())?;
        let mut o = 0.0;
        for (i, x) in s.values.iter().enumerate() {
            let w = grid.frequency(i).get(0);
            if w > 0.0 && x.norm_sqr() > 0.0 {
                o += x.norm_sqr() * gl(|a| 1.0 / a, 1.0 / w, 2.0 / w, 16) * grid.freq_cell();
            }
        }
        worst = worst.max((v - o).abs()).max((v - LN_2 * f.norm_sq()).abs());
    }
    check(worst <= 1e-3, format!("max |‖Vf‖² - ln2‖f‖²| = {worst:.2e}"))
}

fn reconstruction() -> Outcome {
    // dyadic Shannon
    let dy = cat(CatalogId::Dyadic1d);
    let grid = Grid::centered(1, 2048, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let f = random_band_limited(
        &grid,
        &Band {
            min: 1e-9,
            max: 3.0,
            positive: false,
        },
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    let g = FrequencyProfile::shannon();
    let nodes = h_nodes(&dy, &HNodeSpec::default_for(&dy)).map_err(|e| e.to_string())?;
    let back =
        synthesize(&analyze(&f, &g, &dy, &nodes).map_err(|e| e.to_string())?, &g, &dy).map_err(|e| e.to_string())?;
    let dyadic_err = back.relative_error(&f);

    // affine group, smooth wavelet in ln|ω| normalized so that T ≡ 1
    let af = cat(CatalogId::Affine1dPlus);
    let raw = FrequencyProfile::LogBump {
        center: LN_2,
        width: 2.0 * LN_2,
        amplitude: 1.0,
    };
    let t = calderon_t(&af, &raw, &Freq::scalar(1.0), &TruncationSpec::default_for(&af)).map_err(|e| e.to_string())?;
    let psi = FrequencyProfile::LogBump {
        center: LN_2,
        width: 2.0 * LN_2,
        amplitude: 1.0 / t.value,
    };
    let grid = Grid::centered(1, 1024, 0.25).map_err(|e| e.to_string())?;
    let bump = |w: &Freq| {
        let x = w.get(0);
        if x > 1.0 && x < 4.0 {
            let s = (2.0 * x - 5.0) / 3.0;
            Complex64::new((1.0 - 1.0 / (1.0 - s * s)).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let f = signal_from_spectrum(&grid, bump).map_err(|e| e.to_string())?;
    let mut errs = vec![];
    for n in [32, 64, 128, 256] {
        let spec = HNodeSpec {
            blocks: vec![HRange {
                lo: -6.0 * LN_2,
                hi: 6.0 * LN_2,
                nodes: n,
            }],
        };
        let nodes = h_nodes(&af, &spec).map_err(|e| e.to_string())?;
        let back = synthesize(&analyze(&f, &psi, &af, &nodes).map_err(|e| e.to_string())?, &psi, &af)
            .map_err(|e| e.to_string())?;
        errs.push(back.relative_error(&f));
    }
    let monotone = errs.windows(2).all(|p| p[1] < p[0]);
    check(
        dyadic_err < 1e-6 && errs[3] < 1e-2 && monotone,
        format!(
            "dyadic {dyadic_err:.1e}; affine at 32/64/128/256 nodes {}",
            errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn classifier_regression() -> Outcome {
    let start = Instant::now();
    let sl = cat(CatalogId::Sl2zDyadic);
    let a = classify_point(&sl, &Freq::pair(1.0, 2f64.sqrt()), None)
        .map_err(|e| e.to_string())?
        .verdict;
    let b = classify_point(&cat(CatalogId::Affine1dPlus), &Freq::scalar(0.0), None)
        .map_err(|e| e.to_string())?
        .verdict;
    let c = classify_point(&cat(CatalogId::Sim2), &Freq::pair(1.0, 0.0), None)
        .map_err(|e| e.to_string())?
        .verdict;
    // battery: every catalog group on a fixed set of frequencies
    let mut n = 0;
    for id in CatalogId::ALL {
        let g = cat(id);
        let pts: Vec<Freq> = if g.ambient_dim() == 1 {
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
        };
        for p in pts {
            classify_point(&g, &p, None).map_err(|e| e.to_string())?;
            n += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        a == Verdict::CNotRc && b == Verdict::NotC && c == Verdict::Rc && secs < 10.0,
        format!("{a}, {b}, {c}; battery of {n} points in {secs:.2} s"),
    )
}

fn density_identification() -> Outcome {
    let af = cat(CatalogId::Affine1dPlus);
    let se = cat(CatalogId::Se2Rot);
    let cases = [
        (
            af,
            FrequencyProfile::interval(1.0, 2.0, 1.0 / LN_2.sqrt()),
            vec![Freq::scalar(0.2), Freq::scalar(1.0), Freq::scalar(40.0)],
        ),
        (
            se,
            FrequencyProfile::Annulus {
                inner: 0.0,
                outer: 3.0,
                amplitude: 1.0 / TAU.sqrt(),
            },
            vec![Freq::pair(0.5, 0.0), Freq::pair(0.0, 1.5), Freq::pair(-2.0, 1.0)],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (chart, g, probes) in &cases {
        for factor in [1.0, 2.0] {
            let c = identify_plancherel_density(chart, &CandidateDensity::Canonical { factor }, g, probes, 1e-6)
                .map_err(|e| e.to_string())?;
            for e in c.estimates {
                worst = worst.max((e - factor).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("max |estimate - expected| = {worst:.2e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("dyadic isometry", dyadic_isometry),
        ("Calderón constant", calderon_constant),
        ("SIM2 closed form", sim2_closed_form),
        ("unimodular dichotomy", unimodular_dichotomy),
        ("non-unimodular tiling", nonunimodular_tiling),
        ("semi-/quasi-invariance", semi_invariance),
        ("disintegration", disintegration),
        ("scaling law", scaling_law),
        ("oracle equality", oracle_equality),
        ("reconstruction", reconstruction),
        ("classifier regression", classifier_regression),
        ("density identification", density_identification),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
