//! Dilation groups H < GL(k, ℝ) given by global parametrization charts.
//!
//! Every catalog chart uses Haar density 1 in its coordinates: `da/a` for
//! scale blocks (`a = e^t`), `dθ` with total mass 2π for rotation blocks, and
//! counting measure for discrete blocks. All catalog groups have Δ_H ≡ 1.

use core::f64::consts::{LN_2, TAU};
use core::fmt;
use core::str::FromStr;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{ChartPoint, Freq, Mat};
use crate::quadrature::{midpoint_nodes, pairwise_sum, Node};

/// Named groups with closed-form charts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CatalogId {
    /// The trivial group in dimension k.
    Identity(u8),
    /// `{a > 0}` acting on ℝ.
    Affine1dPlus,
    /// `{a ≠ 0}` acting on ℝ.
    Affine1dFull,
    /// `{2^j : j ∈ ℤ}`.
    Dyadic1d,
    /// Similitudes `e^s R_θ` of the plane.
    Sim2,
    /// Positive diagonal matrices `diag(e^s, e^t)`.
    Diag2,
    /// `diag(e^t, 1)`: dilations along the first axis only.
    DiagLine2,
    /// Rotations SO(2).
    Se2Rot,
    /// `{2^k h : k ∈ ℤ, h ∈ SL(2, ℤ)}`.
    Sl2zDyadic,
}

impl CatalogId {
    pub const ALL: [CatalogId; 10] = [
        CatalogId::Identity(1),
        CatalogId::Identity(2),
        CatalogId::Affine1dPlus,
        CatalogId::Affine1dFull,
        CatalogId::Dyadic1d,
        CatalogId::Sim2,
        CatalogId::Diag2,
        CatalogId::DiagLine2,
        CatalogId::Se2Rot,
        CatalogId::Sl2zDyadic,
    ];

    pub fn ambient_dim(self) -> usize {
        match self {
            CatalogId::Identity(k) => k as usize,
            CatalogId::Affine1dPlus | CatalogId::Affine1dFull | CatalogId::Dyadic1d => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogId::Identity(k) => write!(f, "IDENTITY({k})"),
            CatalogId::Affine1dPlus => f.write_str("AFFINE1D_PLUS"),
            CatalogId::Affine1dFull => f.write_str("AFFINE1D_FULL"),
            CatalogId::Dyadic1d => f.write_str("DYADIC1D"),
            CatalogId::Sim2 => f.write_str("SIM2"),
            CatalogId::Diag2 => f.write_str("DIAG2"),
            CatalogId::DiagLine2 => f.write_str("DIAGLINE2"),
            CatalogId::Se2Rot => f.write_str("SE2ROT"),
            CatalogId::Sl2zDyadic => f.write_str("SL2Z_DYADIC"),
        }
    }
}

impl FromStr for CatalogId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let id = match up.as_str() {
            "IDENTITY" | "IDENTITY1" | "IDENTITY(1)" => CatalogId::Identity(1),
            "IDENTITY2" | "IDENTITY(2)" => CatalogId::Identity(2),
            "AFFINE1D_PLUS" => CatalogId::Affine1dPlus,
            "AFFINE1D_FULL" => CatalogId::Affine1dFull,
            "DYADIC1D" => CatalogId::Dyadic1d,
            "SIM2" => CatalogId::Sim2,
            "DIAG2" => CatalogId::Diag2,
            "DIAGLINE2" => CatalogId::DiagLine2,
            "SE2ROT" => CatalogId::Se2Rot,
            "SL2Z_DYADIC" => CatalogId::Sl2zDyadic,
            _ => return Err(Error::InvalidChart(format!("unknown catalog group `{s}`"))),
        };
        Ok(id)
    }
}

impl TryFrom<String> for CatalogId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CatalogId> for String {
    fn from(id: CatalogId) -> Self {
        id.to_string()
    }
}

/// One block of chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    /// An interval of reals; either end may be infinite. `periodic` marks an
    /// angle coordinate whose ends are identified.
    Continuous { lo: f64, hi: f64, periodic: bool },
    /// An inclusive integer range; `i64::MIN` / `i64::MAX` mean unbounded.
    Discrete { lo: i64, hi: i64 },
}

impl Block {
    pub fn real_line() -> Self {
        Block::Continuous {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            periodic: false,
        }
    }

    pub fn circle() -> Self {
        Block::Continuous {
            lo: 0.0,
            hi: TAU,
            periodic: true,
        }
    }

    pub fn integers() -> Self {
        Block::Discrete {
            lo: i64::MIN,
            hi: i64::MAX,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match *self {
            Block::Continuous { lo, hi, .. } => lo.is_finite() && hi.is_finite(),
            Block::Discrete { lo, hi } => lo != i64::MIN && hi != i64::MAX,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Block::Continuous { .. })
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Block::Continuous { periodic: true, .. })
    }

    fn contains(&self, x: f64) -> bool {
        match *self {
            Block::Continuous { lo, hi, .. } => x >= lo && x <= hi,
            Block::Discrete { lo, hi } => x.fract() == 0.0 && x >= lo as f64 && x <= hi as f64,
        }
    }
}

/// A user-defined chart with expression-valued embedding, Haar density and
/// modular function.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomChart {
    pub ambient_dim: usize,
    pub blocks: Vec<Block>,
    /// Row-major k×k entries of h(t).
    pub embed: Vec<Expr>,
    pub density: Expr,
    pub modular: Expr,
}

#[derive(Clone, Debug)]
enum ChartKind {
    Catalog(CatalogId),
    Custom(Arc<CustomChart>),
}

/// A dilation group with a global chart, Haar density and modular data.
#[derive(Clone, Debug)]
pub struct GroupChart {
    ambient_dim: usize,
    blocks: Vec<Block>,
    kind: ChartKind,
    unimodular: bool,
}

/// A group element with cached matrix and modular values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub point: ChartPoint,
    pub matrix: Mat,
    pub det: f64,
    pub modular_h: f64,
    pub modular_g: f64,
}

impl GroupChart {
    pub fn catalog(id: CatalogId) -> Self {
        let blocks = match id {
            CatalogId::Identity(_) => vec![],
            CatalogId::Affine1dPlus | CatalogId::DiagLine2 => vec![Block::real_line()],
            CatalogId::Affine1dFull => {
                vec![Block::Discrete { lo: 0, hi: 1 }, Block::real_line()]
            }
            CatalogId::Dyadic1d => vec![Block::integers()],
            CatalogId::Sim2 => vec![Block::real_line(), Block::circle()],
            CatalogId::Diag2 => vec![Block::real_line(), Block::real_line()],
            CatalogId::Se2Rot => vec![Block::circle()],
            CatalogId::Sl2zDyadic => vec![Block::integers(), Block::Discrete { lo: 0, hi: i64::MAX }],
        };
        let unimodular = matches!(id, CatalogId::Identity(_) | CatalogId::Se2Rot);
        Self {
            ambient_dim: id.ambient_dim(),
            blocks,
            kind: ChartKind::Catalog(id),
            unimodular,
        }
    }

    /// Build a chart from expressions. Unimodularity of G is decided by
    /// sampling Δ_G at interior chart points.
    pub fn custom(def: CustomChart) -> Result<Self> {
        let k = def.ambient_dim;
        if !(1..=2).contains(&k) {
            return Err(Error::InvalidChart(format!("ambient dimension {k} unsupported")));
        }
        if def.embed.len() != k * k {
            return Err(Error::InvalidChart(format!(
                "embedding needs {} entries, got {}",
                k * k,
                def.embed.len()
            )));
        }
        if def.blocks.len() > crate::linalg::MAX_CHART_DIM {
            return Err(Error::InvalidChart("too many parameter blocks".into()));
        }
        let d = def.blocks.len();
        let used = def
            .embed
            .iter()
            .chain([&def.density, &def.modular])
            .map(Expr::max_var)
            .max()
            .unwrap_or(0);
        if used > d {
            return Err(Error::InvalidChart(format!(
                "expression uses t{used} but the chart has {d} blocks"
            )));
        }
        let mut chart = Self {
            ambient_dim: k,
            blocks: def.blocks.clone(),
            kind: ChartKind::Custom(Arc::new(def)),
            unimodular: false,
        };
        let probes = [-0.7, 0.0, 0.45, 1.3];
        let mut uni = true;
        for &p in &probes {
            let mut t = ChartPoint::zeros(d);
            for (i, b) in chart.blocks.iter().enumerate() {
                t.set(i, interior_sample(b, p));
            }
            let g = chart.element_unchecked(&t);
            if !g.det.is_finite() || g.det == 0.0 {
                return Err(Error::InvalidChart(format!("h(t) is singular at {:?}", t.as_slice())));
            }
            if (g.modular_g - 1.0).abs() > 1e-12 {
                uni = false;
            }
        }
        chart.unimodular = uni;
        Ok(chart)
    }

    /// Shared instance of a catalog chart.
    pub fn catalog_ref(id: CatalogId) -> &'static GroupChart {
        static CHARTS: OnceLock<Vec<GroupChart>> = OnceLock::new();
        let charts = CHARTS.get_or_init(|| CatalogId::ALL.iter().map(|&i| Self::catalog(i)).collect());
        let pos = CatalogId::ALL
            .iter()
            .position(|&i| i == id)
            .expect("catalog ids are enumerated in ALL");
        &charts[pos]
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of chart coordinates.
    pub fn chart_dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn catalog_id(&self) -> Option<CatalogId> {
        match self.kind {
            ChartKind::Catalog(id) => Some(id),
            ChartKind::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ChartKind::Catalog(id) => id.to_string(),
            ChartKind::Custom(_) => "CUSTOM".to_string(),
        }
    }

    /// Δ_G ≡ 1.
    pub fn is_unimodular(&self) -> bool {
        self.unimodular
    }

    /// H is compact iff every block is bounded.
    pub fn is_compact(&self) -> bool {
        self.blocks.iter().all(Block::is_bounded)
    }

    pub fn identity_point(&self) -> ChartPoint {
        ChartPoint::zeros(self.blocks.len())
    }

    pub fn identity(&self) -> GroupElement {
        self.element_unchecked(&self.identity_point())
    }

    pub fn in_domain(&self, t: &ChartPoint) -> bool {
        t.len() == self.blocks.len() && self.blocks.iter().zip(t.as_slice()).all(|(b, &x)| b.contains(x))
    }

    /// h(t) without domain checks.
    pub fn embed(&self, t: &ChartPoint) -> Mat {
        match &self.kind {
            ChartKind::Catalog(id) => catalog_embed(*id, t),
            ChartKind::Custom(c) => {
                let vals: Vec<f64> = c.embed.iter().map(|e| e.eval(t.as_slice())).collect();
                Mat::from_row_major(&vals).unwrap_or(Mat::scalar(f64::NAN))
            }
        }
    }

    /// Haar density w(t) in chart coordinates.
    pub fn haar_density(&self, t: &ChartPoint) -> f64 {
        match &self.kind {
            ChartKind::Catalog(_) => 1.0,
            ChartKind::Custom(c) => c.density.eval(t.as_slice()),
        }
    }

    /// Δ_H(h(t)).
    pub fn modular_h(&self, t: &ChartPoint) -> f64 {
        match &self.kind {
            ChartKind::Catalog(_) => 1.0,
            ChartKind::Custom(c) => c.modular.eval(t.as_slice()),
        }
    }

    fn element_unchecked(&self, t: &ChartPoint) -> GroupElement {
        let matrix = self.embed(t);
        let det = match &self.kind {
            ChartKind::Catalog(id) => catalog_det(*id, t),
            ChartKind::Custom(_) => matrix.det(),
        };
        let modular_h = self.modular_h(t);
        GroupElement {
            point: *t,
            matrix,
            det,
            modular_h,
            modular_g: modular_h / det.abs(),
        }
    }

    /// Evaluate the chart at `t`, checking the parameter domain.
    pub fn evaluate_element(&self, t: &ChartPoint) -> Result<GroupElement> {
        if !self.in_domain(t) {
            return Err(Error::OutOfDomain(t.as_slice().to_vec()));
        }
        Ok(self.element_unchecked(t))
    }

    /// Chart coordinates of a matrix in H, if it lies in H.
    pub fn locate(&self, m: &Mat) -> Option<ChartPoint> {
        if m.dim() != self.ambient_dim {
            return None;
        }
        match &self.kind {
            ChartKind::Catalog(id) => catalog_locate(*id, m),
            ChartKind::Custom(_) => self.locate_numeric(m),
        }
    }

    /// Element with the given matrix, if it lies in H.
    pub fn element_of(&self, m: &Mat) -> Option<GroupElement> {
        let t = self.locate(m)?;
        Some(self.element_unchecked(&t))
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Option<GroupElement> {
        self.element_of(&a.matrix.mul(&b.matrix))
    }

    pub fn inverse(&self, a: &GroupElement) -> Option<GroupElement> {
        self.element_of(&a.matrix.inverse()?)
    }

    /// Damped Gauss–Newton over the continuous coordinates; discrete
    /// coordinates are searched in a window around 0.
    fn locate_numeric(&self, m: &Mat) -> Option<ChartPoint> {
        let d = self.blocks.len();
        let target = m.row_major();
        let scale = 1.0 + m.max_abs();
        let resid = |t: &ChartPoint| -> Vec<f64> {
            let e = self.embed(t).row_major();
            e.iter().zip(&target).map(|(a, b)| a - b).collect()
        };
        let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

        let discrete: Vec<usize> = (0..d).filter(|&i| !self.blocks[i].is_continuous()).collect();
        let mut combos: Vec<Vec<f64>> = vec![vec![]];
        for &i in &discrete {
            let (lo, hi) = match self.blocks[i] {
                Block::Discrete { lo, hi } => (lo.max(-16), hi.min(16)),
                _ => unreachable!(),
            };
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (lo..=hi).map(move |v| {
                        let mut c2 = c.clone();
                        c2.push(v as f64);
                        c2
                    })
                })
                .collect();
        }
        for combo in combos {
            let mut t = ChartPoint::zeros(d);
            for (j, &i) in discrete.iter().enumerate() {
                t.set(i, combo[j]);
            }
            for (i, b) in self.blocks.iter().enumerate() {
                if b.is_continuous() {
                    t.set(i, interior_sample(b, 0.0));
                }
            }
            let cont: Vec<usize> = (0..d).filter(|&i| self.blocks[i].is_continuous()).collect();
            let mut r = resid(&t);
            let mut lambda = 1e-3;
            for _ in 0..200 {
                if norm(&r) < 1e-13 * scale || cont.is_empty() {
                    break;
                }
                // numerical Jacobian
                let mut jac = vec![vec![0.0; cont.len()]; r.len()];
                for (c, &i) in cont.iter().enumerate() {
                    let h = 1e-7 * (1.0 + t.get(i).abs());
                    let mut tp = t;
                    tp.set(i, t.get(i) + h);
                    let rp = resid(&tp);
                    for (row, (a, b)) in jac.iter_mut().zip(rp.iter().zip(&r)) {
                        row[c] = (a - b) / h;
                    }
                }
                let n = cont.len();
                let mut a = vec![vec![0.0; n]; n];
                let mut g = vec![0.0; n];
                for (row, ri) in jac.iter().zip(&r) {
                    for p in 0..n {
                        g[p] += row[p] * ri;
                        for q in 0..n {
                            a[p][q] += row[p] * row[q];
                        }
                    }
                }
                for (p, row) in a.iter_mut().enumerate() {
                    row[p] *= 1.0 + lambda;
                    row[p] += 1e-14;
                }
                let step = solve_small(a, g)?;
                let mut trial = t;
                for (c, &i) in cont.iter().enumerate() {
                    trial.set(i, t.get(i) - step[c]);
                }
                let rt = resid(&trial);
                if norm(&rt) < norm(&r) {
                    t = trial;
                    r = rt;
                    lambda = (lambda * 0.3).max(1e-12);
                } else {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        break;
                    }
                }
            }
            if norm(&r) < 1e-9 * scale {
                for (i, b) in self.blocks.iter().enumerate() {
                    if let Block::Continuous { lo, hi, periodic: true } = *b {
                        t.set(i, wrap(t.get(i), lo, hi));
                    }
                }
                if self.in_domain(&t) {
                    return Some(t);
                }
            }
        }
        None
    }
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn interior_sample(b: &Block, p: f64) -> f64 {
    match *b {
        Block::Continuous { lo, hi, .. } => match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + (hi - lo) * (0.5 + 0.3 * p.tanh()),
            (true, false) => lo + 1.0 + p.abs(),
            (false, true) => hi - 1.0 - p.abs(),
            (false, false) => p,
        },
        Block::Discrete { lo, hi } => {
            let v = p.round() as i64;
            v.clamp(lo, hi) as f64
        }
    }
}

/// Reduce `x` into `[lo, hi)` modulo the period.
pub fn wrap(x: f64, lo: f64, hi: f64) -> f64 {
    let p = hi - lo;
    let mut y = (x - lo).rem_euclid(p) + lo;
    if y >= hi {
        y -= p;
    }
    y
}

/// `m^k` by repeated squaring.
pub fn mat_pow(m: &Mat, k: u32) -> Mat {
    let mut result = Mat::identity(m.dim());
    let mut base = *m;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.mul(&base);
        }
        base = base.mul(&base);
        e >>= 1;
    }
    result
}

/// Right dual action `ω · h`.
pub fn dual_act(omega: &Freq, g: &GroupElement) -> Result<Freq> {
    if omega.dim() != g.matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.matrix.dim(),
            got: omega.dim(),
        });
    }
    Ok(omega.act(&g.matrix))
}

/// Δ_G(x, h) = Δ_H(h) |det h|⁻¹ (independent of the translation part).
pub fn modular_g(g: &GroupElement) -> f64 {
    g.modular_h / g.det.abs()
}

fn catalog_embed(id: CatalogId, t: &ChartPoint) -> Mat {
    match id {
        CatalogId::Identity(k) => Mat::identity(k as usize),
        CatalogId::Affine1dPlus => Mat::scalar(t.get(0).exp()),
        CatalogId::Affine1dFull => {
            let sign = if t.get(0) == 0.0 { 1.0 } else { -1.0 };
            Mat::scalar(sign * t.get(1).exp())
        }
        CatalogId::Dyadic1d => Mat::scalar(pow2(t.get(0))),
        CatalogId::Sim2 => Mat::rotation(t.get(1)).scaled(t.get(0).exp()),
        CatalogId::Diag2 => Mat::diag(t.get(0).exp(), t.get(1).exp()),
        CatalogId::DiagLine2 => Mat::diag(t.get(0).exp(), 1.0),
        // R_θᵀ so that ω · h rotates ω counter-clockwise by θ.
        CatalogId::Se2Rot => Mat::rotation(t.get(0)).transpose(),
        CatalogId::Sl2zDyadic => match sl2z_element(t.get(1)) {
            Some(s) => Mat::from_rows([[s[0] as f64, s[1] as f64], [s[2] as f64, s[3] as f64]]).scaled(pow2(t.get(0))),
            None => Mat::identity(2).scaled(f64::NAN),
        },
    }
}

fn catalog_det(id: CatalogId, t: &ChartPoint) -> f64 {
    match id {
        CatalogId::Identity(_) | CatalogId::Se2Rot => 1.0,
        CatalogId::Affine1dPlus | CatalogId::DiagLine2 => t.get(0).exp(),
        CatalogId::Affine1dFull => catalog_embed(id, t).det(),
        CatalogId::Dyadic1d => pow2(t.get(0)),
        CatalogId::Sim2 => (2.0 * t.get(0)).exp(),
        CatalogId::Diag2 => (t.get(0) + t.get(1)).exp(),
        CatalogId::Sl2zDyadic => pow2(2.0 * t.get(0)),
    }
}

fn pow2(j: f64) -> f64 {
    if j.fract() == 0.0 && j.abs() < 1000.0 {
        2f64.powi(j as i32)
    } else {
        j.exp2()
    }
}

fn catalog_locate(id: CatalogId, m: &Mat) -> Option<ChartPoint> {
    let tol = 1e-9 * (1.0 + m.max_abs());
    let pt = |c: &[f64]| ChartPoint::new(c).ok();
    match id {
        CatalogId::Identity(k) => (m.max_abs_diff(&Mat::identity(k as usize)) < tol).then(|| ChartPoint::zeros(0)),
        CatalogId::Affine1dPlus => {
            let a = m.get(0, 0);
            (a > 0.0).then(|| pt(&[a.ln()])).flatten()
        }
        CatalogId::Affine1dFull => {
            let a = m.get(0, 0);
            (a != 0.0)
                .then(|| pt(&[if a > 0.0 { 0.0 } else { 1.0 }, a.abs().ln()]))
                .flatten()
        }
        CatalogId::Dyadic1d => {
            let a = m.get(0, 0);
            if a <= 0.0 {
                return None;
            }
            let j = a.log2().round();
            ((pow2(j) - a).abs() <= 1e-12 * a).then(|| pt(&[j])).flatten()
        }
        CatalogId::Sim2 => {
            let (a, b) = (m.get(0, 0), m.get(1, 0));
            if (m.get(1, 1) - a).abs() > tol || (m.get(0, 1) + b).abs() > tol {
                return None;
            }
            let r2 = a * a + b * b;
            if r2 == 0.0 {
                return None;
            }
            pt(&[0.5 * r2.ln(), wrap(b.atan2(a), 0.0, TAU)])
        }
        CatalogId::Diag2 => {
            let (a, b) = (m.get(0, 0), m.get(1, 1));
            (a > 0.0 && b > 0.0 && m.get(0, 1).abs() <= tol && m.get(1, 0).abs() <= tol)
                .then(|| pt(&[a.ln(), b.ln()]))
                .flatten()
        }
        CatalogId::DiagLine2 => {
            let a = m.get(0, 0);
            (a > 0.0 && (m.get(1, 1) - 1.0).abs() <= tol && m.get(0, 1).abs() <= tol && m.get(1, 0).abs() <= tol)
                .then(|| pt(&[a.ln()]))
                .flatten()
        }
        CatalogId::Se2Rot => {
            let (c, s) = (m.get(0, 0), m.get(0, 1));
            if (m.get(1, 1) - c).abs() > tol || (m.get(1, 0) + s).abs() > tol || (c * c + s * s - 1.0).abs() > tol {
                return None;
            }
            pt(&[wrap(s.atan2(c), 0.0, TAU)])
        }
        CatalogId::Sl2zDyadic => {
            let det = m.det();
            if det <= 0.0 {
                return None;
            }
            let k = (det.log2() / 2.0).round();
            let s = m.scaled(1.0 / pow2(k));
            let mut ints = [0i64; 4];
            for (i, x) in s.row_major().iter().enumerate() {
                let r = x.round();
                if (x - r).abs() > 1e-9 {
                    return None;
                }
                ints[i] = r as i64;
            }
            let idx = sl2z_index(&ints)?;
            pt(&[k, idx as f64])
        }
    }
}

/// Largest max-norm enumerated for SL(2, ℤ).
const SL2Z_MAX_NORM: i64 = 40;

struct Sl2zTable {
    elements: Vec<[i64; 4]>,
    index: HashMap<[i64; 4], usize>,
}

fn sl2z_table() -> &'static Sl2zTable {
    static TABLE: OnceLock<Sl2zTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut elements = vec![[1, 0, 0, 1], [-1, 0, 0, -1]];
        for n in 1..=SL2Z_MAX_NORM {
            let mut shell = Vec::new();
            for a in -n..=n {
                for b in -n..=n {
                    for c in -n..=n {
                        let ds: Vec<i64> = if a != 0 {
                            let num = 1 + b * c;
                            if num % a == 0 {
                                vec![num / a]
                            } else {
                                vec![]
                            }
                        } else if b * c == -1 {
                            (-n..=n).collect()
                        } else {
                            vec![]
                        };
                        for d in ds {
                            let m = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
                            if m == n && a * d - b * c == 1 {
                                let e = [a, b, c, d];
                                if e != [1, 0, 0, 1] && e != [-1, 0, 0, -1] {
                                    shell.push(e);
                                }
                            }
                        }
                    }
                }
            }
            shell.sort();
            shell.dedup();
            elements.extend(shell);
        }
        let index = elements.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        Sl2zTable { elements, index }
    })
}

/// The n-th element of SL(2, ℤ) in the fixed enumeration (identity, −identity,
/// then shells of increasing max-norm in lexicographic order).
pub fn sl2z_element(n: f64) -> Option<[i64; 4]> {
    if n < 0.0 || n.fract() != 0.0 {
        return None;
    }
    sl2z_table().elements.get(n as usize).copied()
}

pub fn sl2z_index(e: &[i64; 4]) -> Option<usize> {
    sl2z_table().index.get(e).copied()
}

/// Number of enumerated SL(2, ℤ) elements.
pub fn sl2z_enumerated() -> usize {
    sl2z_table().elements.len()
}

/// Clip and node count for one block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTruncation {
    pub lo: f64,
    pub hi: f64,
    /// Midpoint cells for continuous blocks; ignored for discrete blocks.
    pub nodes: usize,
}

/// Per-block truncation of the chart domain used by Haar quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub blocks: Vec<Option<BlockTruncation>>,
}

/// Default clip of unbounded scale coordinates.
pub const DEFAULT_SCALE_CLIP: f64 = 30.0;
/// Default midpoint cells for unbounded continuous blocks.
pub const DEFAULT_SCALE_NODES: usize = 1200;
/// Default midpoint cells for compact continuous blocks.
pub const DEFAULT_COMPACT_NODES: usize = 64;
/// Default clip of unbounded integer coordinates.
pub const DEFAULT_INTEGER_CLIP: i64 = 60;

impl TruncationSpec {
    pub fn default_for(chart: &GroupChart) -> Self {
        let blocks = chart
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Some(match *b {
                    Block::Continuous { lo, hi, .. } => BlockTruncation {
                        lo: if lo.is_finite() { lo } else { -DEFAULT_SCALE_CLIP },
                        hi: if hi.is_finite() { hi } else { DEFAULT_SCALE_CLIP },
                        nodes: if b.is_bounded() {
                            DEFAULT_COMPACT_NODES
                        } else {
                            DEFAULT_SCALE_NODES
                        },
                    },
                    Block::Discrete { lo, hi } => {
                        let sl2z_index_block = chart.catalog_id() == Some(CatalogId::Sl2zDyadic) && i == 1;
                        let (l, h) = if sl2z_index_block {
                            (0, 1999)
                        } else {
                            (lo.max(-DEFAULT_INTEGER_CLIP), hi.min(DEFAULT_INTEGER_CLIP))
                        };
                        BlockTruncation {
                            lo: l as f64,
                            hi: h as f64,
                            nodes: 0,
                        }
                    }
                })
            })
            .collect();
        Self { blocks }
    }

    /// Truncation covering exactly the box `window` (one `(lo, hi)` per block).
    pub fn window(chart: &GroupChart, window: &[(f64, f64)], nodes: usize) -> Self {
        let blocks = chart
            .blocks
            .iter()
            .zip(window)
            .map(|(_, &(lo, hi))| Some(BlockTruncation { lo, hi, nodes }))
            .collect();
        Self { blocks }
    }

    /// Same node density, but every clip of an unbounded block widened by
    /// `factor` about its centre.
    pub fn widened(&self, chart: &GroupChart, factor: f64) -> Self {
        let blocks = self
            .blocks
            .iter()
            .zip(&chart.blocks)
            .map(|(t, b)| {
                t.map(|t| {
                    if b.is_bounded() {
                        return t;
                    }
                    let c = 0.5 * (t.lo + t.hi);
                    let r = 0.5 * (t.hi - t.lo) * factor;
                    let (mut lo, mut hi) = (c - r, c + r);
                    if let Block::Discrete { lo: bl, hi: bh } = *b {
                        lo = lo.round().max(bl as f64);
                        hi = hi.round().min(bh as f64);
                    }
                    BlockTruncation {
                        lo,
                        hi,
                        nodes: ((t.nodes as f64) * factor).round() as usize,
                    }
                })
            })
            .collect();
        Self { blocks }
    }

    /// Same clips with `factor` times the node count.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|t| {
                    t.map(|t| BlockTruncation {
                        nodes: t.nodes * factor,
                        ..t
                    })
                })
                .collect(),
        }
    }
}

/// Result of a Haar quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarIntegral {
    pub value: f64,
    /// Discretization error estimate (node doubling).
    pub discretization_error: f64,
    /// Mass carried by the outermost sixteenth of every clipped unbounded
    /// block; large values signal a truncation that cuts off mass.
    pub truncation_error: f64,
}

impl HaarIntegral {
    pub fn error(&self) -> f64 {
        self.discretization_error + self.truncation_error
    }
}

struct BlockGrid {
    nodes: Vec<Node>,
    edge: Vec<bool>,
}

fn block_grid(
    chart: &GroupChart,
    i: usize,
    trunc: &TruncationSpec,
    breaks: &[f64],
    refine: usize,
) -> Result<BlockGrid> {
    let b = chart.blocks[i];
    let t = trunc.blocks.get(i).copied().flatten();
    let clipped = !b.is_bounded();
    match b {
        Block::Continuous { lo, hi, .. } => {
            let (l, h, n) = match t {
                Some(t) => (t.lo.max(lo), t.hi.min(hi), t.nodes.max(1)),
                None if b.is_bounded() => (lo, hi, DEFAULT_COMPACT_NODES),
                None => return Err(Error::TruncationMissing(i)),
            };
            let nodes = midpoint_nodes(l, h, n * refine, breaks);
            let band = (h - l) / 16.0;
            let edge = nodes
                .iter()
                .map(|nd| clipped && (nd.x < l + band || nd.x > h - band))
                .collect();
            Ok(BlockGrid { nodes, edge })
        }
        Block::Discrete { lo, hi } => {
            let (l, h) = match t {
                Some(t) => ((t.lo as i64).max(lo), (t.hi as i64).min(hi)),
                None if b.is_bounded() => (lo, hi),
                None => return Err(Error::TruncationMissing(i)),
            };
            let span = (h - l + 1).max(1) as f64;
            let band = (span / 16.0).ceil().max(1.0) as i64;
            let nodes: Vec<Node> = (l..=h).map(|j| Node { x: j as f64, w: 1.0 }).collect();
            let edge = (l..=h).map(|j| clipped && (j < l + band || j > h - band)).collect();
            Ok(BlockGrid { nodes, edge })
        }
    }
}

fn tensor_sum(chart: &GroupChart, f: &(dyn Fn(&ChartPoint) -> f64 + Sync), grids: &[BlockGrid]) -> Result<(f64, f64)> {
    let d = grids.len();
    if d == 0 {
        let t = ChartPoint::zeros(0);
        let v = f(&t) * chart.haar_density(&t);
        if !v.is_finite() {
            return Err(Error::NonFinite(vec![]));
        }
        return Ok((v, 0.0));
    }
    let sizes: Vec<usize> = grids.iter().map(|g| g.nodes.len()).collect();
    // rows over the last block, summed pairwise, then pairwise over rows
    let row = sizes[d - 1];
    let rows: usize = sizes[..d - 1].iter().product();
    let per_row: Vec<(f64, f64)> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut t = ChartPoint::zeros(d);
            let mut w0 = 1.0;
            let mut edge0 = false;
            let mut lin = r;
            for b in (0..d - 1).rev() {
                let idx = lin % sizes[b];
                lin /= sizes[b];
                let nd = grids[b].nodes[idx];
                t.set(b, nd.x);
                w0 *= nd.w;
                edge0 |= grids[b].edge[idx];
            }
            let mut values = Vec::with_capacity(row);
            let mut edges = Vec::with_capacity(row);
            for (idx, nd) in grids[d - 1].nodes.iter().enumerate() {
                t.set(d - 1, nd.x);
                let v = f(&t) * chart.haar_density(&t) * w0 * nd.w;
                if !v.is_finite() {
                    return Err(Error::NonFinite(t.as_slice().to_vec()));
                }
                values.push(v);
                edges.push(if edge0 || grids[d - 1].edge[idx] { v.abs() } else { 0.0 });
            }
            Ok((pairwise_sum(&values), pairwise_sum(&edges)))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = per_row.iter().map(|p| p.0).collect();
    let edges: Vec<f64> = per_row.iter().map(|p| p.1).collect();
    Ok((pairwise_sum(&values), pairwise_sum(&edges)))
}

/// Integrate `f` against left Haar measure over the truncated chart.
///
/// Continuous blocks use composite midpoint cells split at `breaks[block]`;
/// the returned value is the Richardson extrapolation of the n- and 2n-cell
/// sums, with their difference as the discretization error estimate.
pub fn haar_integrate_with_breaks(
    chart: &GroupChart,
    f: &(dyn Fn(&ChartPoint) -> f64 + Sync),
    trunc: &TruncationSpec,
    breaks: &[Vec<f64>],
) -> Result<HaarIntegral> {
    let d = chart.blocks.len();
    let empty: Vec<f64> = Vec::new();
    let br = |i: usize| breaks.get(i).unwrap_or(&empty).as_slice();
    let coarse: Vec<BlockGrid> = (0..d)
        .map(|i| block_grid(chart, i, trunc, br(i), 1))
        .collect::<Result<_>>()?;
    let (coarse_sum, _) = tensor_sum(chart, f, &coarse)?;
    let has_continuous = chart.blocks.iter().any(Block::is_continuous);
    if !has_continuous {
        let (_, edge) = tensor_sum(chart, f, &coarse)?;
        return Ok(HaarIntegral {
            value: coarse_sum,
            discretization_error: 0.0,
            truncation_error: edge,
        });
    }
    let fine: Vec<BlockGrid> = (0..d)
        .map(|i| block_grid(chart, i, trunc, br(i), 2))
        .collect::<Result<_>>()?;
    let (fine_sum, edge) = tensor_sum(chart, f, &fine)?;
    let diff = fine_sum - coarse_sum;
    Ok(HaarIntegral {
        value: fine_sum + diff / 3.0,
        discretization_error: diff.abs() / 3.0,
        truncation_error: edge,
    })
}

/// [`haar_integrate_with_breaks`] without breakpoints.
pub fn haar_integrate(
    chart: &GroupChart,
    f: &(dyn Fn(&ChartPoint) -> f64 + Sync),
    trunc: &TruncationSpec,
) -> Result<HaarIntegral> {
    haar_integrate_with_breaks(chart, f, trunc, &[])
}

/// A smooth bump in chart coordinates: Gaussian in scale and integer
/// coordinates, von Mises in periodic ones.
#[derive(Clone, Debug)]
pub struct ChartGaussian {
    pub center: ChartPoint,
    pub width: f64,
    periodic: Vec<bool>,
}

impl ChartGaussian {
    pub fn new(chart: &GroupChart, center: ChartPoint, width: f64) -> Self {
        Self {
            center,
            width,
            periodic: chart.blocks.iter().map(Block::is_periodic).collect(),
        }
    }

    pub fn eval(&self, t: &ChartPoint) -> f64 {
        let s2 = self.width * self.width;
        let mut e = 0.0;
        for (i, &p) in self.periodic.iter().enumerate() {
            let d = t.get(i) - self.center.get(i);
            e += if p { (d.cos() - 1.0) / s2 } else { -0.5 * d * d / s2 };
        }
        e.exp()
    }
}

/// A real function of chart coordinates.
pub type ChartFn = dyn Fn(&ChartPoint) -> f64 + Sync;

/// Max relative error of `∫ f(h₀h) dμ_H(h)` against `∫ f dμ_H` over the
/// samples `(h₀, f)`.
pub fn check_left_invariance(
    chart: &GroupChart,
    samples: &[(ChartPoint, &ChartFn)],
    trunc: &TruncationSpec,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (h0, f) in samples {
        let g0 = chart.evaluate_element(h0)?;
        let base = haar_integrate(chart, *f, trunc)?.value;
        let shifted = |t: &ChartPoint| -> f64 {
            let m = g0.matrix.mul(&chart.embed(t));
            match chart.locate(&m) {
                Some(p) => f(&p),
                None => f64::NAN,
            }
        };
        let moved = haar_integrate(chart, &shifted, trunc)?.value;
        let rel = if base == 0.0 {
            moved.abs()
        } else {
            (moved - base).abs() / base.abs()
        };
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Random chart point: continuous unbounded coordinates uniform in
/// `[-spread, spread]`, compact ones uniform over their range, integer ones
/// uniform in `[-spread, spread]` (SL(2, ℤ) indices in the first 24 elements).
pub fn random_point<R: Rng + ?Sized>(chart: &GroupChart, rng: &mut R, spread: f64) -> ChartPoint {
    let mut t = chart.identity_point();
    for (i, b) in chart.blocks.iter().enumerate() {
        let x = match *b {
            Block::Continuous { lo, hi, .. } if b.is_bounded() => rng.gen_range(lo..hi),
            Block::Continuous { lo, hi, .. } => rng.gen_range(lo.max(-spread)..hi.min(spread)),
            Block::Discrete { lo, hi } => {
                if chart.catalog_id() == Some(CatalogId::Sl2zDyadic) && i == 1 {
                    rng.gen_range(0..24) as f64
                } else {
                    let s = spread.round() as i64;
                    rng.gen_range(lo.max(-s)..=hi.min(s)) as f64
                }
            }
        };
        t.set(i, x);
    }
    t
}

/// log 2, the Haar mass of the default scale window `[0, ln 2)`.
pub const SCALE_WINDOW: f64 = LN_2;

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn pt(c: &[f64]) -> ChartPoint {
        ChartPoint::new(c).unwrap()
    }

    #[test]
    fn catalog_elements() {
        let g = GroupChart::catalog(CatalogId::Affine1dPlus);
        assert_eq!(g.evaluate_element(&pt(&[0.0])).unwrap().matrix, Mat::scalar(1.0));
        let d = GroupChart::catalog(CatalogId::Dyadic1d);
        assert_eq!(d.evaluate_element(&pt(&[3.0])).unwrap().matrix, Mat::scalar(8.0));
        let s = GroupChart::catalog(CatalogId::Sim2);
        let m = s.evaluate_element(&pt(&[0.0, FRAC_PI_2])).unwrap().matrix;
        assert!(m.max_abs_diff(&Mat::from_rows([[0.0, -1.0], [1.0, 0.0]])) < 1e-15);
    }

    #[test]
    fn out_of_domain() {
        let d = GroupChart::catalog(CatalogId::Dyadic1d);
        assert!(matches!(d.evaluate_element(&pt(&[0.5])), Err(Error::OutOfDomain(_))));
        let r = GroupChart::catalog(CatalogId::Se2Rot);
        assert!(r.evaluate_element(&pt(&[7.0])).is_err());
        assert!(r.evaluate_element(&pt(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn dual_action_examples() {
        let a = GroupChart::catalog(CatalogId::Affine1dPlus);
        let g = a.evaluate_element(&pt(&[2f64.ln()])).unwrap();
        assert!((dual_act(&Freq::scalar(5.0), &g).unwrap().get(0) - 10.0).abs() < 1e-14);
        let s = GroupChart::catalog(CatalogId::Sim2);
        let r = s.evaluate_element(&pt(&[0.0, FRAC_PI_2])).unwrap();
        let w = dual_act(&Freq::pair(1.0, 0.0), &r).unwrap();
        assert!(w.sub(&Freq::pair(0.0, -1.0)).norm() < 1e-15);
        assert!(matches!(
            dual_act(&Freq::scalar(1.0), &r),
            Err(Error::DimensionMismatch { .. })
        ));
        let w0 = Freq::pair(0.3, -2.0);
        assert_eq!(dual_act(&w0, &s.identity()).unwrap(), w0);
    }

    #[test]
    fn modular_function_examples() {
        let a = GroupChart::catalog(CatalogId::Affine1dPlus);
        let g = a.evaluate_element(&pt(&[2f64.ln()])).unwrap();
        assert!((modular_g(&g) - 0.5).abs() < 1e-15);
        let r = GroupChart::catalog(CatalogId::Se2Rot);
        assert_eq!(modular_g(&r.evaluate_element(&pt(&[1.234])).unwrap()), 1.0);
        let d = GroupChart::catalog(CatalogId::Dyadic1d);
        assert_eq!(modular_g(&d.evaluate_element(&pt(&[3.0])).unwrap()), 0.125);
    }

    #[test]
    fn unimodular_flags() {
        for id in CatalogId::ALL {
            let expect = matches!(id, CatalogId::Identity(_) | CatalogId::Se2Rot);
            assert_eq!(GroupChart::catalog(id).is_unimodular(), expect, "{id}");
        }
    }

    #[test]
    fn haar_integral_examples() {
        let a = GroupChart::catalog(CatalogId::Affine1dPlus);
        // χ_[1,2)(a) in chart t = ln a
        let f = |t: &ChartPoint| {
            let x = t.get(0).exp();
            if (1.0..2.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        };
        let tr = TruncationSpec::default_for(&a);
        let r = haar_integrate_with_breaks(&a, &f, &tr, &[vec![0.0, LN_2]]).unwrap();
        assert!((r.value - LN_2).abs() < 1e-12, "{r:?}");

        let rot = GroupChart::catalog(CatalogId::Se2Rot);
        let one = |_: &ChartPoint| 1.0;
        let r = haar_integrate(&rot, &one, &TruncationSpec::default_for(&rot)).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-12);

        let d = GroupChart::catalog(CatalogId::Dyadic1d);
        let g = |t: &ChartPoint| if (0.0..=2.0).contains(&t.get(0)) { 1.0 } else { 0.0 };
        let r = haar_integrate(&d, &g, &TruncationSpec::default_for(&d)).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.discretization_error, 0.0);
    }

    #[test]
    fn truncation_is_required_for_unbounded_blocks() {
        let a = GroupChart::catalog(CatalogId::Affine1dPlus);
        let spec = TruncationSpec { blocks: vec![None] };
        let one = |_: &ChartPoint| 1.0;
        assert_eq!(haar_integrate(&a, &one, &spec), Err(Error::TruncationMissing(0)));
        let nan = |_: &ChartPoint| f64::NAN;
        let tr = TruncationSpec::default_for(&a);
        assert!(matches!(haar_integrate(&a, &nan, &tr), Err(Error::NonFinite(_))));
    }

    #[test]
    fn tensor_functions_factorize() {
        let g = GroupChart::catalog(CatalogId::Diag2);
        let tr = TruncationSpec::default_for(&g);
        let f = |t: &ChartPoint| (-t.get(0).powi(2)).exp() * (-(t.get(1) - 1.0).powi(2) / 2.0).exp();
        let r = haar_integrate(&g, &f, &tr).unwrap();
        let expect = PI.sqrt() * (2.0 * PI).sqrt();
        assert!((r.value - expect).abs() < 1e-12);
    }

    #[test]
    fn locate_round_trips() {
        for id in CatalogId::ALL {
            let chart = GroupChart::catalog(id);
            let mut rng = rand::thread_rng();
            for _ in 0..20 {
                let t = random_point(&chart, &mut rng, 3.0);
                let m = chart.embed(&t);
                let back = chart.locate(&m).unwrap_or_else(|| panic!("{id} {t:?}"));
                let m2 = chart.embed(&back);
                assert!(m.max_abs_diff(&m2) <= 1e-12 * (1.0 + m.max_abs()), "{id}");
            }
        }
    }

    #[test]
    fn sl2z_enumeration_is_consistent() {
        assert!(sl2z_enumerated() > 1000);
        for n in [0usize, 1, 2, 17, 500] {
            let e = sl2z_element(n as f64).unwrap();
            assert_eq!(e[0] * e[3] - e[1] * e[2], 1);
            assert_eq!(sl2z_index(&e), Some(n));
        }
    }
}
