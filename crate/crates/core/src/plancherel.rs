//! Orbit functions, the Duflo–Moore operator as multiplication by κ, and
//! checks tying admissibility to the quotient measure.

use core::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admissibility::{calderon_s, calderon_t};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::groups::{haar_integrate, modular_g, CatalogId, GroupChart, TruncationSpec};
use crate::linalg::{ChartPoint, Freq};
use crate::orbits::{
    classify_point, cross_section, kappa, quotient_measure, random_samples, Interval, OrbitAtlas, QuotientMass, Region,
    RegionPiece, TransversalPart, Verdict,
};
use crate::profile::FrequencyProfile;
use crate::quadrature::{adaptive_gauss_legendre, pairwise_sum};
use crate::transform::HNodes;

/// Which orbit measure the samples of an [`OrbitFunction`] refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitMeasure {
    /// Image of Haar measure under h ↦ ah.
    Mu,
    /// Disintegration of Lebesgue measure, β = κ·μ.
    Beta,
}

/// Samples of a function on one orbit aH.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitFunction {
    pub representative: Freq,
    pub points: Vec<Freq>,
    pub values: Vec<Complex64>,
    pub measure: OrbitMeasure,
}

impl OrbitFunction {
    /// Sample `f` at the points `a·h` for the given H nodes.
    pub fn sample(a: &Freq, nodes: &HNodes, f: impl Fn(&Freq) -> Complex64, measure: OrbitMeasure) -> Self {
        let points: Vec<Freq> = nodes.elements.iter().map(|e| a.act(&e.matrix)).collect();
        let values = points.iter().map(&f).collect();
        Self {
            representative: *a,
            points,
            values,
            measure,
        }
    }
}

fn require_regular(chart: &GroupChart, w: &Freq) -> Result<()> {
    if classify_point(chart, w, None)?.verdict == Verdict::Rc {
        Ok(())
    } else {
        Err(Error::NotRegular(w.as_slice().to_vec()))
    }
}

/// Multiply the samples by κ^power.
pub fn duflo_moore_apply(chart: &GroupChart, f: &OrbitFunction, power: f64) -> Result<OrbitFunction> {
    require_regular(chart, &f.representative)?;
    let mut out = f.clone();
    for (v, w) in out.values.iter_mut().zip(&f.points) {
        *v *= kappa(chart, w)?.powf(power);
    }
    Ok(out)
}

/// Absolute tolerance per panel of the orbit quadratures.
const ORBIT_TOL: f64 = 1e-13;
/// Looser tolerance for the outer variable of a nested quadrature, whose
/// integrand carries the inner quadrature's error.
const OUTER_TOL: f64 = 1e-10;
/// Half-lines are integrated in log-radius over `[-LOG_EXTENT, LOG_EXTENT]`,
/// on panels of width `LOG_PANEL`.
const LOG_EXTENT: f64 = 40.0;
const LOG_PANEL: f64 = 4.0;

fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_gauss_legendre(f, a, b, 8, tol, 40).0
}

/// ∫₀^∞ g(r) dr, in the variable s = ln r.
fn half_line(g: &mut dyn FnMut(f64) -> f64, tol: f64) -> f64 {
    let n = (2.0 * LOG_EXTENT / LOG_PANEL) as usize;
    let parts: Vec<f64> = (0..n)
        .map(|i| {
            let lo = -LOG_EXTENT + i as f64 * LOG_PANEL;
            adaptive(
                &mut |s: f64| {
                    let r = s.exp();
                    g(r) * r
                },
                lo,
                lo + LOG_PANEL,
                tol,
            )
        })
        .collect();
    pairwise_sum(&parts)
}

fn circle(g: &mut dyn FnMut(f64) -> f64, tol: f64) -> f64 {
    let parts: Vec<f64> = (0..8)
        .map(|i| {
            let lo = TAU * i as f64 / 8.0;
            adaptive(g, lo, lo + TAU / 8.0, tol)
        })
        .collect();
    pairwise_sum(&parts)
}

/// ∫_{aH} f dβ, using an explicit parametrization of the orbit in frequency
/// space (independent of the Haar quadrature on H).
pub fn beta_integral(chart: &GroupChart, a: &Freq, f: &dyn Fn(&Freq) -> f64) -> Result<f64> {
    let id = chart
        .catalog_id()
        .filter(|&i| i != CatalogId::Sl2zDyadic)
        .ok_or_else(|| Error::NoAtlas(chart.name()))?;
    require_regular(chart, a)?;
    let sgn = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    Ok(match id {
        CatalogId::Identity(_) => f(a),
        CatalogId::Affine1dPlus => {
            let s = sgn(a.get(0));
            half_line(&mut |r| f(&Freq::scalar(s * r)), ORBIT_TOL)
        }
        CatalogId::Affine1dFull => half_line(&mut |r| f(&Freq::scalar(r)) + f(&Freq::scalar(-r)), ORBIT_TOL),
        CatalogId::Dyadic1d => {
            let terms: Vec<f64> = (-1000..=1000)
                .map(|j| {
                    let w = a.scale(2f64.powi(j));
                    let v = f(&w);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * w.get(0).abs()
                    }
                })
                .collect();
            pairwise_sum(&terms)
        }
        CatalogId::Sim2 => half_line(
            &mut |r| r * circle(&mut |t| f(&Freq::pair(r * t.cos(), r * t.sin())), ORBIT_TOL),
            OUTER_TOL,
        ),
        CatalogId::Diag2 => {
            let (s1, s2) = (sgn(a.get(0)), sgn(a.get(1)));
            half_line(
                &mut |x| half_line(&mut |y| f(&Freq::pair(s1 * x, s2 * y)), ORBIT_TOL),
                OUTER_TOL,
            )
        }
        CatalogId::DiagLine2 => {
            let (s, u) = (sgn(a.get(0)), a.get(1));
            half_line(&mut |r| f(&Freq::pair(s * r, u)), ORBIT_TOL)
        }
        CatalogId::Se2Rot => {
            let r = a.norm();
            circle(&mut |t| f(&Freq::pair(r * t.cos(), r * t.sin())), ORBIT_TOL)
        }
        CatalogId::Sl2zDyadic => unreachable!(),
    })
}

/// Discrepancies between the Haar-side Calderón functionals and their
/// orbit-measure counterparts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdReport {
    /// T_H from Haar quadrature, per probe.
    pub t_haar: Vec<f64>,
    /// ‖κ^{-1/2} ĝ‖_{L²(β)} per probe.
    pub t_orbit: Vec<f64>,
    pub s_haar: Vec<f64>,
    /// ‖ĝ‖_{L²(β)} per probe.
    pub s_orbit: Vec<f64>,
    pub max_relative_error: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Check T_H(ĝ)(γH) = ‖κ^{-1/2} ĝ|_{γH}‖_{L²(β)} and S_H(ĝ)(γH) =
/// ‖ĝ|_{γH}‖_{L²(β)} at each probe.
pub fn verify_td_correspondence(
    chart: &GroupChart,
    profile: &FrequencyProfile,
    probes: &[Freq],
    trunc: &TruncationSpec,
) -> Result<TdReport> {
    let mut r = TdReport {
        t_haar: vec![],
        t_orbit: vec![],
        s_haar: vec![],
        s_orbit: vec![],
        max_relative_error: 0.0,
    };
    for w in probes {
        require_regular(chart, w)?;
        let t = calderon_t(chart, profile, w, trunc)?.value;
        let s = calderon_s(chart, profile, w, trunc)?.value;
        let tb = beta_integral(chart, w, &|v| {
            let g = profile.norm_sq_at(v);
            if g == 0.0 {
                0.0
            } else {
                g / kappa(chart, v).unwrap_or(f64::NAN)
            }
        })?
        .sqrt();
        let sb = beta_integral(chart, w, &|v| profile.norm_sq_at(v))?.sqrt();
        r.max_relative_error = r.max_relative_error.max(rel(t, tb)).max(rel(s, sb));
        r.t_haar.push(t);
        r.t_orbit.push(tb);
        r.s_haar.push(s);
        r.s_orbit.push(sb);
    }
    Ok(r)
}

/// One sample for [`verify_quasi_invariance`]: a group element (x, h) and a
/// frequency γ on a regular orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiSample {
    pub x: Freq,
    pub h: ChartPoint,
    pub gamma: Freq,
}

/// Random samples built on [`random_samples`] with x uniform in `[-3, 3]ᵏ`.
pub fn random_quasi_samples<R: Rng + ?Sized>(chart: &GroupChart, n: usize, rng: &mut R) -> Result<Vec<QuasiSample>> {
    let k = chart.ambient_dim();
    random_samples(chart, n, rng)?
        .into_iter()
        .map(|(gamma, h)| {
            let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            Ok(QuasiSample {
                x: Freq::new(&x)?,
                h,
                gamma,
            })
        })
        .collect()
}

fn test_orbit_function(w: &Freq) -> Complex64 {
    Complex64::new(1.0, w.get(0)) * (-0.1 * w.norm_sq()).exp()
}

/// Max relative error of σ(x,h) K σ(x,h)* = Δ_G(h)⁻¹ K, evaluated pointwise
/// by composing the operators on a smooth orbit function, with
/// (σ(x,h)φ)(γ) = |det h|^{1/2} e^{-iγx} φ(γh).
pub fn verify_quasi_invariance(chart: &GroupChart, samples: &[QuasiSample]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in samples {
        require_regular(chart, &s.gamma)?;
        let e = chart.evaluate_element(&s.h)?;
        let hinv = e
            .matrix
            .inverse()
            .ok_or_else(|| Error::OutOfDomain(s.h.as_slice().to_vec()))?;
        let hinv_x = hinv.apply(&s.x);
        let root = e.det.abs().sqrt();
        let sigma_adj = |eta: &Freq| -> Complex64 {
            Complex64::from_polar(1.0 / root, eta.dot(&hinv_x)) * test_orbit_function(&eta.act(&hinv))
        };
        let gh = s.gamma.act(&e.matrix);
        let lhs = Complex64::from_polar(root, -s.gamma.dot(&s.x)) * kappa(chart, &gh)? * sigma_adj(&gh);
        let rhs = kappa(chart, &s.gamma)? * test_orbit_function(&s.gamma) / modular_g(&e);
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    Ok(worst)
}

/// A candidate for the quotient measure, compared against the canonical λ̄.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateDensity {
    /// `factor · λ̄`.
    Canonical { factor: f64 },
    /// Density in the transversal coordinate `t1` with respect to `du` on
    /// segments and to counting measure on atoms (where `t1 = 0`).
    Expr { density: Expr },
}

impl CandidateDensity {
    /// dλ̃/dλ̄ at a transversal point.
    fn ratio(&self, part: &TransversalPart, u: &[f64]) -> f64 {
        match self {
            CandidateDensity::Canonical { factor } => *factor,
            CandidateDensity::Expr { density } => {
                let x = u.first().copied().unwrap_or(0.0);
                let canonical = match part {
                    TransversalPart::Atom { weight, .. } => *weight,
                    TransversalPart::Segment { density, .. } => density.eval(x),
                    TransversalPart::Whole { .. } => 1.0,
                };
                density.eval(&[x]) / canonical
            }
        }
    }
}

/// Per-orbit estimates of dλ̃/dλ̄.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityComparison {
    /// Transversal point of each probe orbit.
    pub orbits: Vec<Freq>,
    pub estimates: Vec<f64>,
    /// max |estimate − 1|.
    pub max_deviation: f64,
}

/// Transport an admissible profile to the candidate normalization by
/// scaling each orbit by √(dλ̃/dλ̄), then measure ‖K^{-1/2}η‖² on every probe
/// orbit with the orbit quadrature. Estimates are 1 exactly when the
/// candidate is the canonical λ̄.
pub fn identify_plancherel_density(
    chart: &GroupChart,
    candidate: &CandidateDensity,
    profile: &FrequencyProfile,
    probes: &[Freq],
    tol: f64,
) -> Result<DensityComparison> {
    let atlas = OrbitAtlas::for_chart(chart)?;
    let mut out = DensityComparison {
        orbits: vec![],
        estimates: vec![],
        max_deviation: 0.0,
    };
    for w in probes {
        require_regular(chart, w)?;
        let (a, _) = cross_section(chart, w)?;
        let (part, u) = atlas
            .locate(&a)
            .ok_or_else(|| Error::NotRegular(a.as_slice().to_vec()))?;
        let t2 = beta_integral(chart, &a, &|v| {
            let g = profile.norm_sq_at(v);
            if g == 0.0 {
                0.0
            } else {
                g / kappa(chart, v).unwrap_or(f64::NAN)
            }
        })?;
        if !((t2 - 1.0).abs() <= tol) {
            return Err(Error::NotAdmissibleInput(format!(
                "T_H² = {t2} on the orbit of {:?}",
                a.as_slice()
            )));
        }
        let rho = candidate.ratio(&atlas.transversal[part], &u);
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::NotAdmissibleInput(format!(
                "candidate density ratio {rho} at {:?}",
                a.as_slice()
            )));
        }
        let est = beta_integral(chart, &a, &|v| {
            let g = profile.norm_sq_at(v);
            if g == 0.0 {
                0.0
            } else {
                rho * g / kappa(chart, v).unwrap_or(f64::NAN)
            }
        })?;
        out.max_deviation = out.max_deviation.max((est - 1.0).abs());
        out.orbits.push(a);
        out.estimates.push(est);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub factor: f64,
    pub dimension: usize,
    /// λ̄(W) per region.
    pub measures: Vec<f64>,
    /// λ̄(aW) per region.
    pub scaled_measures: Vec<f64>,
    /// log_a(λ̄(aW)/λ̄(W)) per region (NaN when a = 1).
    pub exponents: Vec<f64>,
    /// max |λ̄(aW) − aᵏλ̄(W)| / (aᵏλ̄(W)).
    pub max_relative_error: f64,
    /// max relative error of ∫φ dμ_{aγH} = ∫φ(a·) dμ_{γH} at region midpoints.
    pub image_measure_error: f64,
}

fn scale_bound(chart: &GroupChart, atlas: &OrbitAtlas, part: &TransversalPart, u: f64, a: f64) -> Result<f64> {
    if !u.is_finite() {
        return Ok(u);
    }
    let (b, _) = cross_section(chart, &part.point(&[u]).scale(a))?;
    let (_, v) = atlas
        .locate(&b)
        .ok_or_else(|| Error::NotRegular(b.as_slice().to_vec()))?;
    Ok(v[0])
}

fn scale_region(chart: &GroupChart, atlas: &OrbitAtlas, region: &Region, a: f64) -> Result<Region> {
    let mut pieces = Vec::new();
    for p in &region.pieces {
        let part = &atlas.transversal[p.part];
        let bounds = match part {
            TransversalPart::Atom { .. } => p.bounds.clone(),
            TransversalPart::Whole { .. } => p.bounds.iter().map(|iv| Interval::new(iv.lo * a, iv.hi * a)).collect(),
            TransversalPart::Segment { .. } => {
                let iv = p.bounds.first().copied().unwrap_or(Interval::all());
                let lo = scale_bound(chart, atlas, part, iv.lo, a)?;
                let hi = scale_bound(chart, atlas, part, iv.hi, a)?;
                vec![Interval::new(lo.min(hi), lo.max(hi))]
            }
        };
        pieces.push(RegionPiece { part: p.part, bounds });
    }
    Ok(Region { pieces })
}

fn midpoint(part: &TransversalPart, bounds: &[Interval]) -> Vec<f64> {
    let mid = |iv: &Interval, lo: f64, hi: f64| {
        let (l, h) = iv.intersect(lo, hi);
        match (l.is_finite(), h.is_finite()) {
            (true, true) => 0.5 * (l + h),
            (true, false) => l + 1.0,
            (false, true) => h - 1.0,
            (false, false) => 0.0,
        }
    };
    match part {
        TransversalPart::Atom { .. } => vec![],
        TransversalPart::Segment { lo, hi, .. } => {
            vec![mid(&bounds.first().copied().unwrap_or(Interval::all()), *lo, *hi)]
        }
        TransversalPart::Whole { dim } => (0..*dim)
            .map(|i| {
                mid(
                    &bounds.get(i).copied().unwrap_or(Interval::all()),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                )
            })
            .collect(),
    }
}

/// Check λ̄(aW) = aᵏ λ̄(W) for a unimodular group and regions of finite
/// quotient measure.
pub fn verify_scaling_law(chart: &GroupChart, a: f64, regions: &[Region]) -> Result<ScalingReport> {
    if !chart.is_unimodular() {
        return Err(Error::NotUnimodular);
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::OutOfDomain(vec![a]));
    }
    let atlas = OrbitAtlas::for_chart(chart)?;
    let k = chart.ambient_dim();
    let ak = a.powi(k as i32);
    let trunc = TruncationSpec::default_for(chart);
    let phi = |w: &Freq| (-w.norm_sq()).exp() * (1.0 + w.get(0) * w.get(0));
    let mut r = ScalingReport {
        factor: a,
        dimension: k,
        measures: vec![],
        scaled_measures: vec![],
        exponents: vec![],
        max_relative_error: 0.0,
        image_measure_error: 0.0,
    };
    for region in regions {
        region.validate(&atlas)?;
        let m = match quotient_measure(&atlas, region)? {
            QuotientMass::Finite(v) => v,
            QuotientMass::Infinite => return Err(Error::NotStronglySquareIntegrable),
        };
        let scaled = scale_region(chart, &atlas, region, a)?;
        let ms = quotient_measure(&atlas, &scaled)?.value();
        r.exponents
            .push(if a == 1.0 { f64::NAN } else { (ms / m).ln() / a.ln() });
        r.max_relative_error = r.max_relative_error.max(rel(ms, ak * m));
        r.measures.push(m);
        r.scaled_measures.push(ms);

        for p in &region.pieces {
            let part = &atlas.transversal[p.part];
            let g = part.point(&midpoint(part, &p.bounds));
            if classify_point(chart, &g, None)?.verdict != Verdict::Rc {
                continue;
            }
            let ag = g.scale(a);
            // μ = β/κ on the orbit of aγ
            let lhs = beta_integral(chart, &ag, &|v| phi(v) / kappa(chart, v).unwrap_or(f64::NAN))?;
            let rhs = if chart.chart_dim() == 0 {
                phi(&ag)
            } else {
                haar_integrate(chart, &|t| phi(&g.act(&chart.embed(t)).scale(a)), &trunc)?.value
            };
            r.image_measure_error = r.image_measure_error.max(rel(lhs, rhs));
        }
    }
    Ok(r)
}
