//! Quadrature building blocks: deterministic summation, composite midpoint
//! nodes with breakpoints, and Gauss–Legendre panels.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Fixed-order pairwise summation. The result depends only on the order of
/// `terms`, never on thread scheduling.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const BASE: usize = 16;
    if terms.len() <= BASE {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// A quadrature node with its weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub x: f64,
    pub w: f64,
}

/// Minimum number of midpoint cells per panel.
pub const MIN_PANEL_NODES: usize = 4;

/// Composite midpoint nodes on `[lo, hi]`, split at every breakpoint strictly
/// inside the interval. Roughly `n` cells are distributed over the panels in
/// proportion to their length.
pub fn midpoint_nodes(lo: f64, hi: f64, n: usize, breakpoints: &[f64]) -> Vec<Node> {
    if !(hi > lo) || n == 0 {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi && b.is_finite())
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let total = hi - lo;
    let mut out = Vec::with_capacity(n + MIN_PANEL_NODES * edges.len());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        let cells = ((n as f64 * len / total).round() as usize).max(MIN_PANEL_NODES);
        let h = len / cells as f64;
        out.extend((0..cells).map(|i| Node {
            x: a + (i as f64 + 0.5) * h,
            w: h,
        }));
    }
    out
}

fn legendre_rule(degree: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (1..=32)
            .map(|d| GaussLegendre::new(NonZeroUsize::new(d).unwrap()))
            .collect()
    });
    &rules[degree.clamp(1, 32) - 1]
}

/// Gauss–Legendre nodes on `[lo, hi]`: `panels` equal panels (further split
/// at breakpoints), `degree` points each (degree ≤ 32).
pub fn gauss_legendre_nodes(lo: f64, hi: f64, panels: usize, degree: usize, breakpoints: &[f64]) -> Vec<Node> {
    if !(hi > lo) || panels == 0 {
        return Vec::new();
    }
    let mut edges: Vec<f64> = (0..=panels)
        .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
        .collect();
    edges.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    let rule = legendre_rule(degree);
    let mut out = Vec::with_capacity(edges.len() * degree);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push(Node {
                x: mid + half * x,
                w: half * w,
            });
        }
    }
    out
}

/// Gauss–Legendre nodes on geometrically graded panels `[2^j, 2^(j+1))`
/// covering `[lo, hi]` with `0 < lo < hi`.
pub fn graded_nodes(lo: f64, hi: f64, degree: usize, breakpoints: &[f64]) -> Vec<Node> {
    if !(hi > lo) || lo <= 0.0 {
        return Vec::new();
    }
    let mut edges = vec![lo];
    let mut e = 2f64.powi(lo.log2().floor() as i32 + 1);
    while e < hi {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(hi);
    edges.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup();
    let rule = legendre_rule(degree);
    let mut out = Vec::with_capacity(edges.len() * degree);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push(Node {
                x: mid + half * x,
                w: half * w,
            });
        }
    }
    out
}

fn gl_panel(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, degree: usize) -> f64 {
    gl_panel_values(f, a, b, degree).0
}

/// The panel sum and the integrand at the nodes.
fn gl_panel_values(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, degree: usize) -> (f64, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let rule = legendre_rule(degree).as_node_weight_pairs();
    let values: Vec<f64> = rule.iter().map(|&(x, _)| f(mid + half * x)).collect();
    let terms: Vec<f64> = rule.iter().zip(&values).map(|(&(_, w), v)| half * w * v).collect();
    (pairwise_sum(&terms), values)
}

/// The interpolant through the node values of a panel, at both ends.
fn extrapolate_to_ends(values: &[f64], degree: usize) -> (f64, f64) {
    let rule = legendre_rule(degree).as_node_weight_pairs();
    let at = |t: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (&(xi, _), v)) in rule.iter().zip(values).enumerate() {
            let wi = rule
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(1.0, |p, (_, &(xj, _))| p / (xi - xj));
            let c = wi / (t - xi);
            num += c * v;
            den += c;
        }
        num / den
    };
    (at(-1.0), at(1.0))
}

/// Adaptive bisection with a `degree`-point Gauss–Legendre rule on each
/// panel. Panels are split until the two halves agree with the whole panel
/// to `tol` (absolute) or `max_depth` is reached, with at most
/// [`MAX_SPLITS`] splits per call. Returns the value and the accumulated
/// error estimate.
pub fn adaptive_gauss_legendre(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    degree: usize,
    tol: f64,
    max_depth: u32,
) -> (f64, f64) {
    if !(b > a) {
        return (0.0, 0.0);
    }
    let degree = degree.max(2);
    let whole = gl_panel(f, a, b, degree);
    let mut budget = MAX_SPLITS;
    adaptive_step(f, a, b, whole, degree, tol, max_depth, &mut budget)
}

/// Split budget of one adaptive call. Integrands that are noisy at every
/// scale (a jump sitting exactly on a rounding boundary) would otherwise
/// cost 2^max_depth panels.
pub const MAX_SPLITS: usize = 2048;

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    degree: usize,
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let (left, lv) = gl_panel_values(f, a, m, degree);
    let (right, rv) = gl_panel_values(f, m, b, degree);
    let diff = (left + right - whole).abs();
    // Between a panel end and its outermost node no Gauss rule looks, so a
    // jump or kink there goes unseen by the halves-against-whole test. The
    // node interpolants of the halves are extrapolated to the ends and
    // compared with the integrand. The ends are pulled inside by a hair so
    // that a jump sitting exactly on an endpoint, which no interior rule
    // feels, does not trigger refinement.
    let hair = 1e-12 * (b - a);
    let (fa, fm, fb) = (f(a + hair), f(m), f(b - hair));
    let (la, lm) = extrapolate_to_ends(&lv, degree);
    let (rm, rb) = extrapolate_to_ends(&rv, degree);
    let mismatch = (la - fa)
        .abs()
        .max((lm - fm).abs())
        .max((rm - fm).abs())
        .max((rb - fb).abs());
    let outermost = legendre_rule(degree)
        .as_node_weight_pairs()
        .iter()
        .fold(0.0f64, |x, &(t, _)| x.max(t));
    let gap = 0.25 * (1.0 - outermost) * (b - a);
    let size = fa.abs().max(fm.abs()).max(fb.abs());
    let blind = mismatch * gap > tol.max(64.0 * f64::EPSILON * size * gap);
    // below this, the halves differ by rounding alone
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if (diff <= tol.max(floor) && !blind) || depth == 0 || *budget == 0 {
        return (left + right, diff);
    }
    *budget -= 1;
    let (l, el) = adaptive_step(f, a, m, left, degree, 0.5 * tol, depth - 1, budget);
    let (r, er) = adaptive_step(f, m, b, right, degree, 0.5 * tol, depth - 1, budget);
    (l + r, el + er)
}
