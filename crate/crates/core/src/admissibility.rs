//! Calderón functionals, admissibility checks and admissible-vector
//! construction.

use core::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{
    haar_integrate_with_breaks, modular_g, random_point, Block, BlockTruncation, GroupChart, TruncationSpec,
    DEFAULT_SCALE_CLIP, DEFAULT_SCALE_NODES,
};
use crate::linalg::{ChartPoint, Freq};
use crate::orbits::{
    classify_point, kappa, quotient_measure, Interval, OrbitAtlas, QuotientMass, Region, RegionPiece, TransversalPart,
    Verdict,
};
use crate::profile::{FrequencyProfile, Tile};
use crate::quadrature::{adaptive_gauss_legendre, gauss_legendre_nodes, pairwise_sum, Node};

/// Value of a Calderón functional at one frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalderonValue {
    /// The functional itself (square root of the orbit integral); +∞ when
    /// divergent.
    #[serde(with = "crate::orbits::bound")]
    pub value: f64,
    /// The orbit integral before the square root.
    #[serde(with = "crate::orbits::bound")]
    pub squared: f64,
    /// Error estimate for `squared`.
    pub error: f64,
    pub divergent: bool,
}

/// Partial values above this count as divergent.
pub const DIVERGENCE_CEILING: f64 = 1e6;
/// Relative growth per truncation doubling that counts as divergent.
pub const DIVERGENCE_GROWTH: f64 = 0.1;

fn require_regular(chart: &GroupChart, w: &Freq) -> Result<()> {
    let c = classify_point(chart, w, None)?;
    let ok = match chart.catalog_id() {
        Some(_) => c.verdict == Verdict::Rc,
        // the generic probe may be inconclusive; only definite verdicts reject
        None => matches!(c.verdict, Verdict::Rc | Verdict::Unknown),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotRegular(w.as_slice().to_vec()))
    }
}

/// Fewest nodes on a support window of an unbounded block.
const MIN_SUPPORT_NODES: usize = 128;

/// Truncation restricted to the chart support of the integrand, and whether
/// every unbounded block got clipped to it.
fn support_truncation(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    w: &Freq,
    trunc: &TruncationSpec,
) -> (TruncationSpec, bool) {
    let support = profile.chart_support(chart, w);
    let mut out = trunc.clone();
    out.blocks.resize(chart.chart_dim(), None);
    let mut exact = true;
    for (i, b) in chart.blocks().iter().enumerate() {
        let s = support.as_ref().and_then(|s| s.get(i).copied().flatten());
        match (s, *b) {
            (Some((lo, hi)), Block::Continuous { .. }) => {
                let nodes = trunc
                    .blocks
                    .get(i)
                    .copied()
                    .flatten()
                    .map(|t| t.nodes)
                    .unwrap_or(DEFAULT_SCALE_NODES);
                // keep the default node density on a short support window
                let nodes = if b.is_bounded() {
                    nodes
                } else {
                    let share = (hi - lo) / (2.0 * DEFAULT_SCALE_CLIP);
                    ((nodes as f64 * share).ceil() as usize).clamp(MIN_SUPPORT_NODES.min(nodes), nodes)
                };
                out.blocks[i] = Some(BlockTruncation { lo, hi, nodes });
            }
            (Some((lo, hi)), Block::Discrete { .. }) => {
                out.blocks[i] = Some(BlockTruncation {
                    lo: lo.ceil() - 1.0,
                    hi: hi.ceil(),
                    nodes: 0,
                });
            }
            (None, _) => {
                if !b.is_bounded() {
                    exact = false;
                }
            }
        }
    }
    (out, exact)
}

/// Most coarse tensor points used while widening a truncation.
const WIDEN_BUDGET: f64 = 1e6;

/// Thin the continuous unbounded blocks evenly so the tensor grid stays
/// within [`WIDEN_BUDGET`].
fn capped(chart: &GroupChart, mut tr: TruncationSpec) -> TruncationSpec {
    let scalable: Vec<usize> = chart
        .blocks()
        .iter()
        .enumerate()
        .filter(|(i, b)| b.is_continuous() && !b.is_bounded() && tr.blocks.get(*i).copied().flatten().is_some())
        .map(|(i, _)| i)
        .collect();
    let total: f64 = chart
        .blocks()
        .iter()
        .zip(&tr.blocks)
        .filter_map(|(b, t)| {
            t.map(|t| {
                if b.is_continuous() {
                    t.nodes.max(1) as f64
                } else {
                    (t.hi - t.lo + 1.0).max(1.0)
                }
            })
        })
        .product();
    if total <= WIDEN_BUDGET || scalable.is_empty() {
        return tr;
    }
    let shrink = (WIDEN_BUDGET / total).powf(1.0 / scalable.len() as f64);
    for i in scalable {
        if let Some(b) = tr.blocks[i].as_mut() {
            b.nodes = ((b.nodes as f64 * shrink).floor() as usize).max(1);
        }
    }
    tr
}

fn orbit_integral(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    w: &Freq,
    trunc: &TruncationSpec,
    weighted: bool,
) -> Result<CalderonValue> {
    require_regular(chart, w)?;
    let integrand = |t: &ChartPoint| -> f64 {
        let v = w.act(&chart.embed(t));
        let g2 = profile.norm_sq_at(&v);
        if !weighted || g2 == 0.0 {
            return g2;
        }
        match kappa(chart, &v) {
            Ok(k) => g2 * k,
            Err(_) => f64::NAN,
        }
    };
    let breaks = profile.breakpoints(chart, w);
    let (tr, exact) = support_truncation(chart, profile, w, trunc);
    let first = haar_integrate_with_breaks(chart, &integrand, &tr, &breaks)?;
    let negligible = |edge: f64, v: f64| edge <= 1e-13 + 1e-10 * v.abs();
    if exact || negligible(first.truncation_error, first.value) {
        let error = first.discretization_error + if exact { 0.0 } else { first.truncation_error };
        return Ok(finish(first.value, error, false));
    }
    // truncation cuts off mass: widen the clip and watch the partial values
    let mut values = vec![first.value];
    let mut last = first;
    for d in 1..=3 {
        let wide = capped(chart, tr.widened(chart, 2f64.powi(d)));
        last = haar_integrate_with_breaks(chart, &integrand, &wide, &breaks)?;
        values.push(last.value);
        if last.value > DIVERGENCE_CEILING {
            return Ok(finish(last.value, last.error(), true));
        }
        if negligible(last.truncation_error, last.value) {
            return Ok(finish(last.value, last.error(), false));
        }
    }
    let growing = values
        .windows(2)
        .all(|p| p[1] > p[0] && (p[1] - p[0]) > DIVERGENCE_GROWTH * p[0].abs());
    if growing {
        return Ok(finish(last.value, last.error(), true));
    }
    Ok(finish(last.value, last.error(), false))
}

fn finish(squared: f64, error: f64, divergent: bool) -> CalderonValue {
    if divergent {
        CalderonValue {
            value: f64::INFINITY,
            squared: f64::INFINITY,
            error,
            divergent,
        }
    } else {
        CalderonValue {
            value: squared.max(0.0).sqrt(),
            squared,
            error,
            divergent,
        }
    }
}

/// T_H(ĝ)(ω) = (∫_H |ĝ(ωh)|² dμ_H(h))^{1/2}.
pub fn calderon_t(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    w: &Freq,
    trunc: &TruncationSpec,
) -> Result<CalderonValue> {
    orbit_integral(chart, profile, w, trunc, false)
}

/// S_H(ĝ)(ω) = (∫_H |ĝ(ωh)|² κ(ωh) dμ_H(h))^{1/2}.
pub fn calderon_s(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    w: &Freq,
    trunc: &TruncationSpec,
) -> Result<CalderonValue> {
    orbit_integral(chart, profile, w, trunc, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AdmissibilityVerdict {
    Admissible,
    WeaklyAdmissible,
    NotAdmissible,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub verdict: AdmissibilityVerdict,
    pub probes: usize,
    pub tolerance: f64,
    #[serde(with = "crate::orbits::bound")]
    pub t_min: f64,
    #[serde(with = "crate::orbits::bound")]
    pub t_max: f64,
    #[serde(with = "crate::orbits::bound")]
    pub t_mean: f64,
    /// max |T_H − 1| over the probes.
    #[serde(with = "crate::orbits::bound")]
    pub max_deviation: f64,
    /// Largest quadrature error estimate of T_H² over the probes.
    pub quadrature_error: f64,
    pub divergent_probes: usize,
    /// T_H at every probe, in probe order.
    #[serde(default)]
    pub values: Vec<f64>,
}

/// Evaluate T_H on the probe grid and classify.
pub fn check_admissible(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    probes: &[Freq],
    tol: f64,
    trunc: &TruncationSpec,
) -> Result<AdmissibilityReport> {
    if probes.is_empty() {
        return Err(Error::EmptyProbeGrid);
    }
    let vals: Vec<CalderonValue> = probes
        .par_iter()
        .map(|w| calderon_t(chart, profile, w, trunc))
        .collect::<Result<_>>()?;
    let ts: Vec<f64> = vals.iter().map(|v| v.value).collect();
    let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t_mean = pairwise_sum(&ts) / ts.len() as f64;
    let max_deviation = ts.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let quadrature_error = vals.iter().map(|v| v.error).fold(0.0, f64::max);
    let divergent_probes = vals.iter().filter(|v| v.divergent).count();
    let verdict = if divergent_probes > 0 {
        AdmissibilityVerdict::Divergent
    } else if max_deviation <= tol {
        AdmissibilityVerdict::Admissible
    } else if t_min > 0.0 && t_max.is_finite() {
        AdmissibilityVerdict::WeaklyAdmissible
    } else {
        AdmissibilityVerdict::NotAdmissible
    };
    Ok(AdmissibilityReport {
        verdict,
        probes: probes.len(),
        tolerance: tol,
        t_min,
        t_max,
        t_mean,
        max_deviation,
        quadrature_error,
        divergent_probes,
        values: ts,
    })
}

/// Default number of orbit representatives in a probe grid.
pub const DEFAULT_PROBE_ORBITS: usize = 64;
/// Default number of off-transversal duplicates per orbit.
pub const DEFAULT_PROBE_DUPLICATES: usize = 8;
/// Unbounded transversal coordinates are probed up to this magnitude.
pub const PROBE_EXTENT: f64 = 32.0;

fn spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![];
    }
    let (l, h) = (lo.max(-PROBE_EXTENT), hi.min(PROBE_EXTENT));
    if !(h > l) {
        return vec![];
    }
    if l >= 0.0 || h <= 0.0 {
        let sign = if h <= 0.0 { -1.0 } else { 1.0 };
        let (a, b) = if sign > 0.0 { (l, h) } else { (-h, -l) };
        let a = if a == 0.0 { b * 1e-3 } else { a };
        let ratio = (b / a).ln();
        return (0..n)
            .map(|i| sign * a * (ratio * (i as f64 + 0.5) / n as f64).exp())
            .collect();
    }
    let n_pos = n.div_ceil(2);
    let mut v = spaced(0.0, h, n_pos);
    v.extend(spaced(l, 0.0, n - n_pos));
    v
}

/// Orbit representatives spaced logarithmically along the transversal
/// region, each followed by `duplicates` random points of the same orbit.
pub fn default_probe_grid<R: Rng + ?Sized>(
    chart: &GroupChart,
    region: &Region,
    orbits: usize,
    duplicates: usize,
    rng: &mut R,
) -> Result<Vec<Freq>> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    region.validate(&atlas)?;
    let atoms = region
        .pieces
        .iter()
        .filter(|p| matches!(atlas.transversal[p.part], TransversalPart::Atom { .. }))
        .count();
    let continuous = region.pieces.len() - atoms;
    let per_piece = if continuous > 0 {
        (orbits.saturating_sub(atoms)).div_ceil(continuous)
    } else {
        0
    };
    let mut reps = Vec::new();
    for piece in &region.pieces {
        let part = &atlas.transversal[piece.part];
        match part {
            TransversalPart::Atom { point, .. } => reps.push(*point),
            TransversalPart::Segment { lo, hi, .. } => {
                let iv = piece.bounds.first().copied().unwrap_or(Interval::all());
                let (l, h) = iv.intersect(*lo, *hi);
                for u in spaced(l, h, per_piece) {
                    reps.push(part.point(&[u]));
                }
            }
            TransversalPart::Whole { dim } => {
                for _ in 0..per_piece {
                    let mut c = Vec::with_capacity(*dim);
                    for i in 0..*dim {
                        let iv = piece.bounds.get(i).copied().unwrap_or(Interval::all());
                        let (l, h) = iv.intersect(-PROBE_EXTENT, PROBE_EXTENT);
                        c.push(if h > l { rng.gen_range(l..h) } else { l });
                    }
                    reps.push(Freq::new(&c)?);
                }
            }
        }
    }
    let mut out = Vec::with_capacity(reps.len() * (duplicates + 1));
    for a in reps {
        out.push(a);
        for _ in 0..duplicates {
            let t = random_point(chart, rng, 2.0);
            out.push(a.act(&chart.embed(&t)));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyProbeGrid);
    }
    Ok(out)
}

/// Default chart window B: the whole range of compact blocks, `[0, ln 2)`
/// for unbounded continuous blocks and `{0}` for discrete blocks. Returns
/// the window and its Haar measure.
pub fn default_window(chart: &GroupChart) -> (Vec<Interval>, f64) {
    let mut mass = 1.0;
    let window = chart
        .blocks()
        .iter()
        .map(|b| match *b {
            Block::Continuous { lo, hi, .. } if b.is_bounded() => {
                mass *= hi - lo;
                Interval::new(lo, hi)
            }
            Block::Continuous { .. } => {
                mass *= LN_2;
                Interval::new(0.0, LN_2)
            }
            Block::Discrete { .. } => Interval::new(0.0, 1.0),
        })
        .collect();
    (window, mass)
}

fn catalog_atlas(chart: &GroupChart) -> Result<OrbitAtlas> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    Ok(atlas)
}

fn window_profile(chart: &GroupChart, region: &Region, decay: bool) -> Result<FrequencyProfile> {
    let id = chart.catalog_id().ok_or_else(|| Error::NoAtlas(chart.name()))?;
    let (window, mass) = default_window(chart);
    Ok(FrequencyProfile::OrbitWindow {
        group: id,
        region: region.clone(),
        window,
        amplitude: 1.0 / mass.sqrt(),
        decay,
    })
}

/// ĝ = χ_{AB∩U} / T_H(χ_{AB∩U}) for a unimodular group and a region of
/// finite quotient measure.
pub fn synthesize_unimodular(chart: &GroupChart, region: &Region) -> Result<FrequencyProfile> {
    if !chart.is_unimodular() {
        return Err(Error::NotUnimodular);
    }
    let atlas = catalog_atlas(chart)?;
    if !quotient_measure(&atlas, region)?.is_finite() {
        return Err(Error::NotStronglySquareIntegrable);
    }
    window_profile(chart, region, false)
}

/// A bounded, positive-T_H profile for any region: the normalized window
/// profile damped by `1/(1 + |a|²)` along the transversal.
pub fn synthesize_weakly_admissible(chart: &GroupChart, region: &Region) -> Result<FrequencyProfile> {
    let atlas = catalog_atlas(chart)?;
    region.validate(&atlas)?;
    window_profile(chart, region, true)
}

/// Options for the tiling construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingOptions {
    /// Unbounded transversal coordinates are tiled up to this magnitude.
    pub extent: f64,
    pub trunc: TruncationSpec,
}

impl TilingOptions {
    pub fn default_for(chart: &GroupChart) -> Self {
        Self {
            extent: 64.0,
            trunc: TruncationSpec::default_for(chart),
        }
    }
}

/// Result of the non-unimodular construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiledSynthesis {
    pub profile: FrequencyProfile,
    /// The contraction actually used (h₀ or h₀⁻¹).
    pub contraction: ChartPoint,
    /// Δ_G of the contraction (< 1).
    pub contraction_modular: f64,
    /// True when the region has finite quotient measure and a single
    /// untransformed tile suffices.
    pub degenerate: bool,
    pub tiles: Vec<Tile>,
    /// Σ Δ_G(c)^{k_n} ∫_{V_n} S_H² dλ̄, which equals ‖ĝ‖².
    pub norm_bound: f64,
}

/// Absolute accuracy target for tile masses.
const TILE_MASS_TOL: f64 = 1e-10;

/// ∫ over a transversal piece of S_H(profile)² dλ̄.
fn piece_mass(
    chart: &GroupChart,
    atlas: &OrbitAtlas,
    profile: &FrequencyProfile,
    part: usize,
    bounds: Option<(f64, f64)>,
    trunc: &TruncationSpec,
) -> Result<f64> {
    match &atlas.transversal[part] {
        TransversalPart::Atom { point, weight } => Ok(weight * calderon_s(chart, profile, point, trunc)?.squared),
        p @ TransversalPart::Segment { density, .. } => {
            let (l, h) = bounds.expect("segment bounds");
            let mut err: Option<Error> = None;
            let mut f = |u: f64| -> f64 {
                match calderon_s(chart, profile, &p.point(&[u]), trunc) {
                    Ok(v) => v.squared * density.eval(u),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            };
            let (v, _) = adaptive_gauss_legendre(&mut f, l, h, 4, TILE_MASS_TOL, 40);
            match err {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        TransversalPart::Whole { .. } => Err(Error::Unimodular),
    }
}

struct TileCandidate {
    part: usize,
    bounds: Option<(f64, f64)>,
    key: (f64, u8, f64, usize),
}

/// Build an admissible vector for a non-unimodular group over `region` by
/// tiling the orbit space and pushing each tile's mass down with powers of a
/// contraction derived from `h0`.
pub fn synthesize_nonunimodular(
    chart: &GroupChart,
    region: &Region,
    h0: &ChartPoint,
    opts: &TilingOptions,
) -> Result<TiledSynthesis> {
    if chart.is_unimodular() {
        return Err(Error::Unimodular);
    }
    let id = chart.catalog_id().ok_or_else(|| Error::NoAtlas(chart.name()))?;
    let atlas = catalog_atlas(chart)?;
    region.validate(&atlas)?;
    let g0 = chart.evaluate_element(h0)?;
    let d0 = modular_g(&g0);
    if !d0.is_finite() || (d0 - 1.0).abs() < 1e-12 {
        return Err(Error::BadContraction(d0));
    }
    let c = if d0 < 1.0 {
        g0
    } else {
        chart.inverse(&g0).ok_or(Error::BadContraction(d0))?
    };
    let dc = modular_g(&c);

    let base = window_profile(chart, region, false)?;
    let degenerate = quotient_measure(&atlas, region)?.is_finite();

    // candidate tiles
    let mut cands = Vec::new();
    for piece in &region.pieces {
        match &atlas.transversal[piece.part] {
            TransversalPart::Atom { point, .. } => {
                let pos = point.as_slice().iter().sum::<f64>();
                cands.push(TileCandidate {
                    part: piece.part,
                    bounds: None,
                    key: (0.0, 0, -pos, piece.part),
                });
            }
            TransversalPart::Segment { base: b, lo, hi, .. } => {
                let iv = piece.bounds.first().copied().unwrap_or(Interval::all());
                let (l, h) = iv.intersect(*lo, *hi);
                let (l, h) = (l.max(-opts.extent), h.min(opts.extent));
                if !(h > l) {
                    continue;
                }
                let pos = b.as_slice().iter().sum::<f64>();
                if degenerate {
                    cands.push(TileCandidate {
                        part: piece.part,
                        bounds: Some((l, h)),
                        key: (l.abs().min(h.abs()), 0, -pos, piece.part),
                    });
                    continue;
                }
                let mut m = l.floor();
                while m < h {
                    let (sl, sh) = (m.max(l), (m + 1.0).min(h));
                    if sh > sl {
                        let dist = if sl >= 0.0 { sl } else { -sh };
                        let neg = u8::from(sl < 0.0);
                        cands.push(TileCandidate {
                            part: piece.part,
                            bounds: Some((sl, sh)),
                            key: (dist, neg, -pos, piece.part),
                        });
                    }
                    m += 1.0;
                }
            }
            TransversalPart::Whole { .. } => return Err(Error::Unimodular),
        }
    }
    cands.sort_by(|a, b| a.key.partial_cmp(&b.key).expect("finite keys"));

    let masses: Vec<f64> = cands
        .par_iter()
        .map(|c| piece_mass(chart, &atlas, &base, c.part, c.bounds, &opts.trunc))
        .collect::<Result<_>>()?;

    let mut tiles = Vec::with_capacity(cands.len());
    let mut norm_bound = 0.0;
    for (n, (cand, &mass)) in cands.iter().zip(&masses).enumerate() {
        let power = if degenerate { 0 } else { least_power(dc, mass, n) };
        norm_bound += dc.powi(power as i32) * mass;
        tiles.push(Tile {
            part: cand.part,
            bounds: cand.bounds.map(|(l, h)| vec![Interval::new(l, h)]).unwrap_or_default(),
            power,
            mass,
        });
    }
    let profile = FrequencyProfile::Tiled {
        group: id,
        base: Box::new(base),
        contraction: c.point,
        tiles: tiles.clone(),
    };
    Ok(TiledSynthesis {
        profile,
        contraction: c.point,
        contraction_modular: dc,
        degenerate,
        tiles,
        norm_bound,
    })
}

/// Least k ≥ 0 with `delta^k · mass < 2^{-n}`.
pub fn least_power(delta: f64, mass: f64, n: usize) -> u32 {
    let target = 2f64.powi(-(n as i32));
    if mass < target {
        return 0;
    }
    let mut k = ((target / mass).ln() / delta.ln()).floor().max(0.0) as u32;
    while k > 0 && delta.powi(k as i32 - 1) * mass < target {
        k -= 1;
    }
    while delta.powi(k as i32) * mass >= target {
        k += 1;
    }
    k
}

/// Options for [`l2_norm_via_quotient`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientNormSpec {
    /// Unbounded transversal coordinates are integrated up to this
    /// magnitude.
    pub extent: f64,
    pub trunc: TruncationSpec,
}

impl QuotientNormSpec {
    pub fn default_for(chart: &GroupChart) -> Self {
        Self {
            extent: 64.0,
            trunc: TruncationSpec::default_for(chart),
        }
    }
}

/// ‖ĝ‖² = ∫_{U/H} S_H(ĝ)² dλ̄, evaluated on the transversal.
pub fn l2_norm_via_quotient(chart: &GroupChart, profile: &FrequencyProfile, spec: &QuotientNormSpec) -> Result<f64> {
    let atlas = catalog_atlas(chart)?;
    let mut parts = Vec::new();
    for (i, part) in atlas.transversal.iter().enumerate() {
        let v = match part {
            TransversalPart::Atom { .. } => piece_mass(chart, &atlas, profile, i, None, &spec.trunc)?,
            TransversalPart::Segment { lo, hi, .. } => {
                let (l, h) = (lo.max(-spec.extent), hi.min(spec.extent));
                // unit panels keep the adaptive rule from skipping narrow tiles
                let mut edges = vec![l];
                let mut m = l.floor() + 1.0;
                while m < h {
                    edges.push(m);
                    m += 1.0;
                }
                edges.push(h);
                let pieces: Vec<f64> = edges
                    .par_windows(2)
                    .map(|e| piece_mass(chart, &atlas, profile, i, Some((e[0], e[1])), &spec.trunc))
                    .collect::<Result<_>>()?;
                pairwise_sum(&pieces)
            }
            TransversalPart::Whole { dim } => {
                let grid = DirectGrid::linear(*dim, spec.extent.min(16.0), 1.0, 8);
                l2_norm_direct(profile, &grid)
            }
        };
        parts.push(v);
    }
    Ok(pairwise_sum(&parts))
}

/// Tensor-product quadrature grid on frequency space.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectGrid {
    pub axes: Vec<Vec<Node>>,
}

impl DirectGrid {
    /// `[-extent, extent]ᵏ` split into panels of width `panel`, Gauss–Legendre
    /// of the given degree on each.
    pub fn linear(dim: usize, extent: f64, panel: f64, degree: usize) -> Self {
        let panels = ((2.0 * extent / panel).round() as usize).max(1);
        let axis = gauss_legendre_nodes(-extent, extent, panels, degree, &[]);
        Self { axes: vec![axis; dim] }
    }

    /// Dyadic panels `±[2^j, 2^{j+1})` covering `±[min, max]` plus one panel
    /// on `[-min, min]`.
    pub fn symmetric_graded_axis(min: f64, max: f64, degree: usize) -> Vec<Node> {
        let pos = crate::quadrature::graded_nodes(min, max, degree, &[]);
        let mut axis: Vec<Node> = pos.iter().rev().map(|n| Node { x: -n.x, w: n.w }).collect();
        axis.extend(gauss_legendre_nodes(-min, min, 1, degree, &[]));
        axis.extend(pos);
        axis
    }
}

/// ∫ |ĝ(ω)|² dω on a tensor grid.
pub fn l2_norm_direct(profile: &FrequencyProfile, grid: &DirectGrid) -> f64 {
    match grid.axes.len() {
        1 => {
            let terms: Vec<f64> = grid.axes[0]
                .iter()
                .map(|n| n.w * profile.norm_sq_at(&Freq::scalar(n.x)))
                .collect();
            pairwise_sum(&terms)
        }
        2 => {
            let (ax, ay) = (&grid.axes[0], &grid.axes[1]);
            let rows: Vec<f64> = ax
                .par_iter()
                .map(|a| {
                    let terms: Vec<f64> = ay
                        .iter()
                        .map(|b| a.w * b.w * profile.norm_sq_at(&Freq::pair(a.x, b.x)))
                        .collect();
                    pairwise_sum(&terms)
                })
                .collect();
            pairwise_sum(&rows)
        }
        _ => f64::NAN,
    }
}

/// A region covering the whole transversal.
pub fn full_region(chart: &GroupChart) -> Result<Region> {
    Ok(Region::everything(&catalog_atlas(chart)?))
}

/// A region made of a single transversal piece.
pub fn piece_region(part: usize, bounds: Vec<Interval>) -> Region {
    Region {
        pieces: vec![RegionPiece { part, bounds }],
    }
}

/// λ̄ of a region, or an error if it is infinite.
pub fn finite_quotient_measure(chart: &GroupChart, region: &Region) -> Result<f64> {
    match quotient_measure(&catalog_atlas(chart)?, region)? {
        QuotientMass::Finite(v) => Ok(v),
        QuotientMass::Infinite => Err(Error::NotStronglySquareIntegrable),
    }
}
