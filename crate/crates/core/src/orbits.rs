//! Dual orbits: stabilizer classification, transversals, cross-sections,
//! the density κ and the quotient measure λ̄.
//!
//! Conventions for λ̄ (together with the Haar normalizations of
//! [`crate::groups`] they fix κ):
//!
//! | group | transversal | λ̄ | κ(ω) |
//! |---|---|---|---|
//! | IDENTITY(k) | ℝ̂ᵏ | Lebesgue | 1 |
//! | AFFINE1D_PLUS | {−1, +1} | weight 1 each | \|ω\| |
//! | AFFINE1D_FULL | {+1} | weight 1 | \|ω\| |
//! | DYADIC1D | ±[1, 2) | du/u | \|ω\| |
//! | SIM2 | {e₁} | weight 1 | \|ω\|² |
//! | DIAG2 | {(±1, ±1)} | weight 1 each | \|ω₁ω₂\| |
//! | DIAGLINE2 | {(±1, u) : u ∈ ℝ} | du on each line | \|ω₁\| |
//! | SE2ROT | {(u, 0) : u ≥ 0} | u du | 1 |

use core::f64::consts::TAU;
use core::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{
    haar_integrate, modular_g, random_point, wrap, Block, CatalogId, GroupChart, GroupElement, TruncationSpec,
};
use crate::linalg::{ChartPoint, Freq};
use crate::quadrature::{gauss_legendre_nodes, pairwise_sum};

/// Stabilizer verdict for a frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// Compact stabilizer and locally closed orbit.
    #[serde(rename = "RC")]
    Rc,
    /// Compact stabilizer, orbit not regular.
    #[serde(rename = "C_NOT_RC")]
    CNotRc,
    /// Noncompact stabilizer.
    #[serde(rename = "NOT_C")]
    NotC,
    /// The numerical probe was inconclusive.
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Rc => "RC",
            Verdict::CNotRc => "C_NOT_RC",
            Verdict::NotC => "NOT_C",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

/// One ε-level of the sublevel-set probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub epsilon: f64,
    /// Half-width of the largest window searched.
    pub window: f64,
    /// Sublevel points found inside the base window.
    pub inside: usize,
    /// Sublevel points found outside the base window.
    pub outside: usize,
    /// Exact stabilizer points found outside the base window.
    pub stabilizer_outside: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// `closed-form` or `probe`.
    pub method: String,
    pub detail: String,
    /// ε that decided the verdict, if any.
    pub epsilon: Option<f64>,
    pub probes: Vec<ProbeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Witness,
}

impl Classification {
    fn closed(verdict: Verdict, detail: impl Into<String>) -> Self {
        Self {
            verdict,
            witness: Witness {
                method: "closed-form".into(),
                detail: detail.into(),
                epsilon: None,
                probes: vec![],
            },
        }
    }
}

/// Default ε schedule, relative to |ω|.
pub const DEFAULT_EPSILONS: [f64; 3] = [1e-2, 1e-1, 1.0];

fn check_dim(chart: &GroupChart, omega: &Freq) -> Result<()> {
    if omega.dim() != chart.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.ambient_dim(),
            got: omega.dim(),
        });
    }
    Ok(())
}

/// Classify the stabilizer of `omega`. Catalog groups use closed forms;
/// custom charts use [`probe_classify`] with the given relative ε schedule
/// (default [`DEFAULT_EPSILONS`]).
pub fn classify_point(chart: &GroupChart, omega: &Freq, epsilons: Option<&[f64]>) -> Result<Classification> {
    check_dim(chart, omega)?;
    match chart.catalog_id() {
        Some(id) => Ok(classify_catalog(id, omega)),
        None => probe_classify(chart, omega, epsilons.unwrap_or(&DEFAULT_EPSILONS)),
    }
}

fn classify_catalog(id: CatalogId, w: &Freq) -> Classification {
    use Verdict::*;
    let zero = w.is_zero();
    match id {
        CatalogId::Identity(_) => Classification::closed(Rc, "trivial group"),
        CatalogId::Affine1dPlus | CatalogId::Affine1dFull | CatalogId::Dyadic1d | CatalogId::Sim2 => {
            if zero {
                Classification::closed(NotC, "stabilizer of 0 is the noncompact group")
            } else {
                Classification::closed(Rc, "free action on an open orbit")
            }
        }
        CatalogId::Se2Rot => {
            let d = if zero {
                "H is compact"
            } else {
                "trivial stabilizer, circle orbit"
            };
            Classification::closed(Rc, d)
        }
        CatalogId::Diag2 => {
            if w.get(0) != 0.0 && w.get(1) != 0.0 {
                Classification::closed(Rc, "open quadrant orbit")
            } else {
                Classification::closed(NotC, "a diagonal factor fixes ω")
            }
        }
        CatalogId::DiagLine2 => {
            if w.get(0) != 0.0 {
                Classification::closed(Rc, "free action on a half-line")
            } else {
                Classification::closed(NotC, "H fixes the ω₂ axis")
            }
        }
        CatalogId::Sl2zDyadic => {
            if zero {
                return Classification::closed(NotC, "stabilizer of 0 is the noncompact group");
            }
            let (a, b) = (w.get(0), w.get(1));
            let ratio = if a.abs() >= b.abs() { b / a } else { a / b };
            match rational_approx(ratio, 100_000, 1e-13) {
                Some((p, q)) => {
                    Classification::closed(NotC, format!("ω₂/ω₁ ≈ {p}/{q} is rational: unipotent stabilizer"))
                }
                None => Classification::closed(CNotRc, "irrational slope: finite stabilizer, dense orbit"),
            }
        }
    }
}

/// Best rational approximation with denominator ≤ `max_den` that matches
/// `x` within `tol` (relative to max(1, |x|)).
pub fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let scale = x.abs().max(1.0);
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let p2 = ai.checked_mul(p1)?.checked_add(p0)?;
        let q2 = ai.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol * scale {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Base probe window half-width in chart coordinates.
pub const PROBE_BASE_WINDOW: f64 = 4.0;
const PROBE_DOUBLINGS: u32 = 3;
const PROBE_MAX_POINTS: usize = 2_000_000;

/// Sublevel-set probe: for each ε in the schedule, sample
/// `{t : |ω h(t) − ω| ≤ ε|ω|}` on windows `W₀·2ʲ`, j = 0..3.
///
/// The sublevel set is declared bounded (RC) when no point lies outside the
/// base window. Exact stabilizer points outside the base window give NOT_C.
/// Anything else is UNKNOWN.
pub fn probe_classify(chart: &GroupChart, omega: &Freq, epsilons: &[f64]) -> Result<Classification> {
    check_dim(chart, omega)?;
    let probe = |verdict, detail: &str, epsilon, probes| Classification {
        verdict,
        witness: Witness {
            method: "probe".into(),
            detail: detail.into(),
            epsilon,
            probes,
        },
    };
    if omega.is_zero() {
        return Ok(if chart.is_compact() {
            probe(Verdict::Rc, "ω = 0 and H is compact", None, vec![])
        } else {
            probe(Verdict::NotC, "ω = 0 and H is noncompact", None, vec![])
        });
    }
    let norm = omega.norm();
    let w_outer = PROBE_BASE_WINDOW * 2f64.powi(PROBE_DOUBLINGS as i32);
    let axes = probe_axes(chart, w_outer);
    let mut records = Vec::new();
    let mut stab_outside = 0usize;
    for &eps_rel in epsilons {
        let eps = eps_rel * norm;
        let mut rec = ProbeRecord {
            epsilon: eps,
            window: w_outer,
            inside: 0,
            outside: 0,
            stabilizer_outside: 0,
        };
        for_each_grid_point(&axes, |t| {
            let g = chart.embed(t);
            let dev = omega.act(&g).sub(omega).norm();
            if dev.is_nan() || dev > eps {
                return;
            }
            if inside_base(chart, t) {
                rec.inside += 1;
            } else {
                rec.outside += 1;
                if dev <= 1e-9 * norm {
                    rec.stabilizer_outside += 1;
                }
            }
        });
        stab_outside = stab_outside.max(rec.stabilizer_outside);
        let bounded = rec.outside == 0;
        records.push(rec);
        if bounded {
            return Ok(probe(
                Verdict::Rc,
                "sublevel set stays inside the base window",
                Some(eps),
                records,
            ));
        }
    }
    if stab_outside > 0 {
        return Ok(probe(
            Verdict::NotC,
            "exact stabilizer points far from the identity",
            None,
            records,
        ));
    }
    Ok(probe(Verdict::Unknown, "sublevel sets inconclusive", None, records))
}

fn inside_base(chart: &GroupChart, t: &ChartPoint) -> bool {
    chart
        .blocks()
        .iter()
        .enumerate()
        .all(|(i, b)| b.is_bounded() || t.get(i).abs() <= PROBE_BASE_WINDOW + 1e-12)
}

fn probe_axes(chart: &GroupChart, w: f64) -> Vec<Vec<f64>> {
    let blocks = chart.blocks();
    let n_cont_unbounded = blocks
        .iter()
        .filter(|b| b.is_continuous() && !b.is_bounded())
        .count()
        .max(1);
    let mut step = PROBE_BASE_WINDOW / 16.0;
    loop {
        let axes: Vec<Vec<f64>> = blocks.iter().map(|b| axis(b, w, step)).collect();
        let total: usize = axes.iter().map(Vec::len).product();
        if total <= PROBE_MAX_POINTS {
            return axes;
        }
        step *= 2f64.powf(1.0 / n_cont_unbounded as f64);
    }
}

fn axis(b: &Block, w: f64, step: f64) -> Vec<f64> {
    match *b {
        Block::Continuous { lo, hi, .. } => {
            let (l, h) = (lo.max(-w), hi.min(w));
            let n = ((h - l) / step).ceil() as i64;
            let mut v: Vec<f64> = (0..=n).map(|i| l + i as f64 * step).filter(|&x| x <= h).collect();
            // make sure the identity coordinate is sampled
            if l <= 0.0 && h >= 0.0 && !v.contains(&0.0) {
                v.push(0.0);
            }
            v
        }
        Block::Discrete { lo, hi } => {
            let wi = w as i64;
            (lo.max(-wi)..=hi.min(wi)).map(|j| j as f64).collect()
        }
    }
}

fn for_each_grid_point(axes: &[Vec<f64>], mut f: impl FnMut(&ChartPoint)) {
    let d = axes.len();
    if axes.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; d];
    let mut t = ChartPoint::zeros(d);
    loop {
        for i in 0..d {
            t.set(i, axes[i][idx[i]]);
        }
        f(&t);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Quotient-measure density on a continuous transversal piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// du
    Uniform,
    /// u du
    Radial,
    /// du / u
    Reciprocal,
}

impl Density {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::Radial => u,
            Density::Reciprocal => 1.0 / u,
        }
    }

    /// ∫_lo^hi density(u) du.
    pub fn mass(self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        match self {
            Density::Uniform => hi - lo,
            Density::Radial => 0.5 * (hi * hi - lo * lo),
            Density::Reciprocal => (hi / lo).ln(),
        }
    }
}

/// One piece of a Borel transversal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransversalPart {
    /// A single open orbit representative.
    Atom { point: Freq, weight: f64 },
    /// Points `base + u·direction` for u in `[lo, hi)`.
    Segment {
        base: Freq,
        direction: Freq,
        #[serde(with = "bound")]
        lo: f64,
        #[serde(with = "bound")]
        hi: f64,
        density: Density,
    },
    /// All of ℝ̂ᵏ with Lebesgue measure (trivial group).
    Whole { dim: usize },
}

impl TransversalPart {
    pub fn dims(&self) -> usize {
        match self {
            TransversalPart::Atom { .. } => 0,
            TransversalPart::Segment { .. } => 1,
            TransversalPart::Whole { dim } => *dim,
        }
    }

    /// Transversal point for local coordinates `u`.
    pub fn point(&self, u: &[f64]) -> Freq {
        match self {
            TransversalPart::Atom { point, .. } => *point,
            TransversalPart::Segment { base, direction, .. } => base.add(&direction.scale(u[0])),
            TransversalPart::Whole { .. } => Freq::new(u).expect("dimension 1 or 2"),
        }
    }
}

/// Description of orbit space data for a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitAtlas {
    pub group: CatalogId,
    pub transversal: Vec<TransversalPart>,
    /// Closed form of κ, for display.
    pub kappa: String,
}

impl OrbitAtlas {
    pub fn for_chart(chart: &GroupChart) -> Result<Self> {
        let id = chart.catalog_id().ok_or_else(|| Error::NoAtlas(chart.name()))?;
        let inf = f64::INFINITY;
        let atom = |p: Freq| TransversalPart::Atom { point: p, weight: 1.0 };
        let (transversal, kappa) = match id {
            CatalogId::Identity(k) => (vec![TransversalPart::Whole { dim: k as usize }], "1"),
            CatalogId::Affine1dPlus => (vec![atom(Freq::scalar(-1.0)), atom(Freq::scalar(1.0))], "|ω|"),
            CatalogId::Affine1dFull => (vec![atom(Freq::scalar(1.0))], "|ω|"),
            CatalogId::Dyadic1d => (
                [-1.0, 1.0]
                    .iter()
                    .map(|&s| TransversalPart::Segment {
                        base: Freq::scalar(0.0),
                        direction: Freq::scalar(s),
                        lo: 1.0,
                        hi: 2.0,
                        density: Density::Reciprocal,
                    })
                    .collect(),
                "|ω|",
            ),
            CatalogId::Sim2 => (vec![atom(Freq::pair(1.0, 0.0))], "|ω|²"),
            CatalogId::Diag2 => (
                [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
                    .iter()
                    .map(|&(a, b)| atom(Freq::pair(a, b)))
                    .collect(),
                "|ω₁ω₂|",
            ),
            CatalogId::DiagLine2 => (
                [-1.0, 1.0]
                    .iter()
                    .map(|&s| TransversalPart::Segment {
                        base: Freq::pair(s, 0.0),
                        direction: Freq::pair(0.0, 1.0),
                        lo: -inf,
                        hi: inf,
                        density: Density::Uniform,
                    })
                    .collect(),
                "|ω₁|",
            ),
            CatalogId::Se2Rot => (
                vec![TransversalPart::Segment {
                    base: Freq::pair(0.0, 0.0),
                    direction: Freq::pair(1.0, 0.0),
                    lo: 0.0,
                    hi: inf,
                    density: Density::Radial,
                }],
                "1",
            ),
            CatalogId::Sl2zDyadic => return Err(Error::NoAtlas(id.to_string())),
        };
        Ok(Self {
            group: id,
            transversal,
            kappa: kappa.to_string(),
        })
    }

    /// Shared atlas of a catalog group.
    pub fn catalog_ref(id: CatalogId) -> Result<&'static OrbitAtlas> {
        static ATLASES: OnceLock<Vec<Option<OrbitAtlas>>> = OnceLock::new();
        let all = ATLASES.get_or_init(|| {
            CatalogId::ALL
                .iter()
                .map(|&i| OrbitAtlas::for_chart(GroupChart::catalog_ref(i)).ok())
                .collect()
        });
        let pos = CatalogId::ALL.iter().position(|&i| i == id).expect("enumerated");
        all[pos].as_ref().ok_or_else(|| Error::NoAtlas(id.to_string()))
    }

    /// Transversal part index and local coordinates of a transversal point.
    pub fn locate(&self, a: &Freq) -> Option<(usize, Vec<f64>)> {
        for (i, part) in self.transversal.iter().enumerate() {
            match part {
                TransversalPart::Atom { point, .. } => {
                    if point == a {
                        return Some((i, vec![]));
                    }
                }
                TransversalPart::Segment {
                    base,
                    direction,
                    lo,
                    hi,
                    ..
                } => {
                    let d = a.sub(base);
                    let u = d.dot(direction) / direction.norm_sq();
                    let off = d.sub(&direction.scale(u)).norm();
                    if off == 0.0 && u >= *lo && u < *hi {
                        return Some((i, vec![u]));
                    }
                }
                TransversalPart::Whole { .. } => return Some((i, a.as_slice().to_vec())),
            }
        }
        None
    }
}

/// Serde helpers for bounds that may be infinite: finite values are numbers,
/// infinities are `null` (with the sign given by context) or the strings
/// `"inf"` / `"-inf"`.
pub mod bound {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> core::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> core::result::Result<f64, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            Some(Repr::Num(x)) => Ok(x),
            Some(Repr::Text(t)) => match t.trim() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("bad bound `{other}`"))),
            },
            None => Ok(f64::NAN),
        }
    }
}

/// An interval `[lo, hi)`, possibly unbounded. `null` or missing bounds
/// deserialize as unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawInterval")]
pub struct Interval {
    #[serde(with = "bound")]
    pub lo: f64,
    #[serde(with = "bound")]
    pub hi: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    #[serde(with = "bound", default = "neg_inf")]
    lo: f64,
    #[serde(with = "bound", default = "pos_inf")]
    hi: f64,
}

impl From<RawInterval> for Interval {
    fn from(r: RawInterval) -> Self {
        Interval { lo: r.lo, hi: r.hi }.normalized()
    }
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }.normalized()
    }

    pub fn all() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    fn normalized(self) -> Self {
        Self {
            lo: if self.lo.is_nan() { f64::NEG_INFINITY } else { self.lo },
            hi: if self.hi.is_nan() { f64::INFINITY } else { self.hi },
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let s = self.normalized();
        x >= s.lo && x < s.hi
    }

    pub fn intersect(&self, lo: f64, hi: f64) -> (f64, f64) {
        let s = self.normalized();
        (s.lo.max(lo), s.hi.min(hi))
    }
}

/// A piece of a transversal region: a transversal part and, for continuous
/// parts, one interval per local coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPiece {
    pub part: usize,
    #[serde(default)]
    pub bounds: Vec<Interval>,
}

/// A finite union of transversal pieces. Its H-saturation is the frequency
/// set `U = A·H` used by the admissibility routines.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Region {
    pub pieces: Vec<RegionPiece>,
}

impl Region {
    /// Every transversal part, unrestricted.
    pub fn everything(atlas: &OrbitAtlas) -> Self {
        Self {
            pieces: atlas
                .transversal
                .iter()
                .enumerate()
                .map(|(i, p)| RegionPiece {
                    part: i,
                    bounds: vec![Interval::all(); p.dims()],
                })
                .collect(),
        }
    }

    pub fn validate(&self, atlas: &OrbitAtlas) -> Result<()> {
        for p in &self.pieces {
            let part = atlas
                .transversal
                .get(p.part)
                .ok_or_else(|| Error::InvalidRegion(format!("no transversal part {}", p.part)))?;
            if !p.bounds.is_empty() && p.bounds.len() != part.dims() {
                return Err(Error::InvalidRegion(format!(
                    "part {} needs {} bounds, got {}",
                    p.part,
                    part.dims(),
                    p.bounds.len()
                )));
            }
        }
        Ok(())
    }

    /// Does the transversal point with local coordinates `u` on `part` lie
    /// in the region?
    pub fn contains_local(&self, part: usize, u: &[f64]) -> bool {
        self.pieces
            .iter()
            .any(|p| p.part == part && (p.bounds.is_empty() || p.bounds.iter().zip(u).all(|(iv, &x)| iv.contains(x))))
    }

    /// Is ω in the saturation `A_region · H`?
    pub fn contains_freq(&self, chart: &GroupChart, atlas: &OrbitAtlas, omega: &Freq) -> bool {
        match cross_section(chart, omega) {
            Ok((a, _)) => match atlas.locate(&a) {
                Some((part, u)) => self.contains_local(part, &u),
                None => false,
            },
            Err(_) => false,
        }
    }
}

/// λ̄ of a region: finite, or infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuotientMass {
    Finite(f64),
    Infinite,
}

impl QuotientMass {
    pub fn value(self) -> f64 {
        match self {
            QuotientMass::Finite(x) => x,
            QuotientMass::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, QuotientMass::Finite(_))
    }
}

impl Serialize for QuotientMass {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        bound::serialize(&self.value(), s)
    }
}

impl<'de> Deserialize<'de> for QuotientMass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let x = bound::deserialize(d)?;
        Ok(if x.is_finite() {
            QuotientMass::Finite(x)
        } else {
            QuotientMass::Infinite
        })
    }
}

/// λ̄(region). Overlapping pieces are counted once per piece.
pub fn quotient_measure(atlas: &OrbitAtlas, region: &Region) -> Result<QuotientMass> {
    region.validate(atlas)?;
    let mut total = 0.0;
    for piece in &region.pieces {
        let m = match &atlas.transversal[piece.part] {
            TransversalPart::Atom { weight, .. } => *weight,
            TransversalPart::Segment { lo, hi, density, .. } => {
                let iv = piece.bounds.first().copied().unwrap_or(Interval::all());
                let (l, h) = iv.intersect(*lo, *hi);
                if !(h > l) {
                    0.0
                } else if !l.is_finite() || !h.is_finite() {
                    return Ok(QuotientMass::Infinite);
                } else {
                    density.mass(l, h)
                }
            }
            TransversalPart::Whole { dim } => {
                let mut vol = 1.0;
                for i in 0..*dim {
                    let iv = piece.bounds.get(i).copied().unwrap_or(Interval::all());
                    let (l, h) = iv.intersect(f64::NEG_INFINITY, f64::INFINITY);
                    if !(h > l) {
                        vol = 0.0;
                        break;
                    }
                    if !l.is_finite() || !h.is_finite() {
                        return Ok(QuotientMass::Infinite);
                    }
                    vol *= h - l;
                }
                vol
            }
        };
        total += m;
    }
    Ok(QuotientMass::Finite(total))
}

fn require_regular(chart: &GroupChart, omega: &Freq) -> Result<()> {
    check_dim(chart, omega)?;
    let c = classify_point(chart, omega, None)?;
    if c.verdict != Verdict::Rc {
        return Err(Error::NotRegular(omega.as_slice().to_vec()));
    }
    Ok(())
}

/// Transversal representative `a` and group element `h` with `a·h = ω`.
pub fn cross_section(chart: &GroupChart, omega: &Freq) -> Result<(Freq, GroupElement)> {
    let id = chart
        .catalog_id()
        .filter(|&id| id != CatalogId::Sl2zDyadic)
        .ok_or_else(|| Error::NoAtlas(chart.name()))?;
    require_regular(chart, omega)?;
    let w = omega;
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let pt = |c: &[f64]| ChartPoint::new(c).expect("chart dimension");
    let (a, t) = match id {
        CatalogId::Identity(_) => (*w, ChartPoint::zeros(0)),
        CatalogId::Affine1dPlus => (Freq::scalar(sign(w.get(0))), pt(&[w.get(0).abs().ln()])),
        CatalogId::Affine1dFull => {
            let x = w.get(0);
            (Freq::scalar(1.0), pt(&[if x < 0.0 { 1.0 } else { 0.0 }, x.abs().ln()]))
        }
        CatalogId::Dyadic1d => {
            let x = w.get(0);
            let (m, e) = split_binary(x.abs());
            (Freq::scalar(sign(x) * m), pt(&[e as f64]))
        }
        CatalogId::Sim2 => (
            Freq::pair(1.0, 0.0),
            pt(&[w.norm().ln(), wrap((-w.get(1)).atan2(w.get(0)), 0.0, TAU)]),
        ),
        CatalogId::Diag2 => (
            Freq::pair(sign(w.get(0)), sign(w.get(1))),
            pt(&[w.get(0).abs().ln(), w.get(1).abs().ln()]),
        ),
        CatalogId::DiagLine2 => (Freq::pair(sign(w.get(0)), w.get(1)), pt(&[w.get(0).abs().ln()])),
        CatalogId::Se2Rot => {
            let theta = if w.is_zero() {
                0.0
            } else {
                wrap(w.get(1).atan2(w.get(0)), 0.0, TAU)
            };
            (Freq::pair(w.norm(), 0.0), pt(&[theta]))
        }
        CatalogId::Sl2zDyadic => unreachable!(),
    };
    let h = chart.evaluate_element(&t)?;
    Ok((a, h))
}

/// `x = m·2^e` with `m ∈ [1, 2)`, exact for positive finite `x`.
fn split_binary(x: f64) -> (f64, i32) {
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    if exp_bits == 0 {
        // subnormal: renormalize first
        let (m, e) = split_binary(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let e = exp_bits - 1023;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (m, e)
}

/// Closed-form κ(ω) under the conventions above.
pub fn kappa(chart: &GroupChart, omega: &Freq) -> Result<f64> {
    let id = chart
        .catalog_id()
        .filter(|&id| id != CatalogId::Sl2zDyadic)
        .ok_or_else(|| Error::NoAtlas(chart.name()))?;
    require_regular(chart, omega)?;
    let w = omega;
    Ok(match id {
        CatalogId::Identity(_) | CatalogId::Se2Rot => 1.0,
        CatalogId::Affine1dPlus | CatalogId::Affine1dFull | CatalogId::Dyadic1d => w.get(0).abs(),
        CatalogId::Sim2 => w.norm_sq(),
        CatalogId::Diag2 => (w.get(0) * w.get(1)).abs(),
        CatalogId::DiagLine2 => w.get(0).abs(),
        CatalogId::Sl2zDyadic => unreachable!(),
    })
}

/// Max relative error of `κ(ωh)·Δ_G(h) = κ(ω)` over the samples, using the
/// supplied κ.
pub fn verify_semi_invariance_with(
    chart: &GroupChart,
    samples: &[(Freq, ChartPoint)],
    kappa_fn: &dyn Fn(&Freq) -> Result<f64>,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (w, t) in samples {
        require_regular(chart, w)?;
        let h = chart.evaluate_element(t)?;
        let k0 = kappa_fn(w)?;
        let k1 = kappa_fn(&w.act(&h.matrix))?;
        worst = worst.max((k1 * modular_g(&h) - k0).abs() / k0);
    }
    Ok(worst)
}

/// [`verify_semi_invariance_with`] for the closed-form κ.
pub fn verify_semi_invariance(chart: &GroupChart, samples: &[(Freq, ChartPoint)]) -> Result<f64> {
    verify_semi_invariance_with(chart, samples, &|w| kappa(chart, w))
}

/// Random `(ω, t)` pairs with ω regular (rejection sampling on `[-3, 3]ᵏ`)
/// and `t` drawn by [`random_point`].
pub fn random_samples<R: Rng + ?Sized>(chart: &GroupChart, n: usize, rng: &mut R) -> Result<Vec<(Freq, ChartPoint)>> {
    let k = chart.ambient_dim();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 100 * n + 1000 {
            return Err(Error::NotRegularRegion);
        }
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let w = Freq::new(&v)?;
        if classify_point(chart, &w, None)?.verdict != Verdict::Rc {
            continue;
        }
        out.push((w, random_point(chart, rng, 2.0)));
    }
    Ok(out)
}

/// Truncation for [`verify_disintegration`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationSpec {
    /// Direct quadrature covers `[-radius, radius]ᵏ`; unbounded transversal
    /// coordinates are clipped to the same radius.
    pub radius: f64,
    /// Gauss–Legendre panels per axis (degree 16).
    pub panels: usize,
    pub chart: TruncationSpec,
}

impl DisintegrationSpec {
    pub fn default_for(chart: &GroupChart) -> Self {
        Self {
            radius: 8.0,
            panels: 32,
            chart: TruncationSpec::default_for(chart),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationReport {
    pub direct: f64,
    pub iterated: f64,
    pub relative_error: f64,
}

/// Compare `∫ f dω` with `∫_A ∫_H f(ah) κ(ah) dμ_H(h) dλ̄(a)`.
pub fn verify_disintegration(
    chart: &GroupChart,
    f: &(dyn Fn(&Freq) -> f64 + Sync),
    spec: &DisintegrationSpec,
) -> Result<DisintegrationReport> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    let r = spec.radius;
    let k = chart.ambient_dim();
    let axis = gauss_legendre_nodes(-r, r, spec.panels, 16, &[0.0]);
    let direct = if k == 1 {
        let terms: Vec<f64> = axis.iter().map(|n| n.w * f(&Freq::scalar(n.x))).collect();
        pairwise_sum(&terms)
    } else {
        let mut terms = Vec::with_capacity(axis.len() * axis.len());
        for a in &axis {
            for b in &axis {
                terms.push(a.w * b.w * f(&Freq::pair(a.x, b.x)));
            }
        }
        pairwise_sum(&terms)
    };

    let orbit_integral = |a: &Freq| -> Result<f64> {
        let g = |t: &ChartPoint| {
            let w = a.act(&chart.embed(t));
            match kappa(chart, &w) {
                Ok(kv) => f(&w) * kv,
                Err(_) => 0.0,
            }
        };
        Ok(haar_integrate(chart, &g, &spec.chart)?.value)
    };

    let mut parts = Vec::new();
    for part in &atlas.transversal {
        let v = match part {
            TransversalPart::Atom { point, weight } => weight * orbit_integral(point)?,
            TransversalPart::Segment { lo, hi, density, .. } => {
                let (l, h) = (lo.max(-r), hi.min(r));
                let nodes = gauss_legendre_nodes(l, h, spec.panels, 16, &[]);
                let mut terms = Vec::with_capacity(nodes.len());
                for n in &nodes {
                    terms.push(n.w * density.eval(n.x) * orbit_integral(&part.point(&[n.x]))?);
                }
                pairwise_sum(&terms)
            }
            TransversalPart::Whole { .. } => direct,
        };
        parts.push(v);
    }
    let iterated = pairwise_sum(&parts);
    Ok(DisintegrationReport {
        direct,
        iterated,
        relative_error: (iterated - direct).abs() / direct.abs(),
    })
}
