//! Frequency-side wavelet profiles ĝ.

use core::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::groups::{mat_pow, wrap, Block, CatalogId, GroupChart};
use crate::linalg::{ChartPoint, Freq};
use crate::orbits::{cross_section, Interval, OrbitAtlas, Region};

/// One tile of a tiled profile: a piece of the transversal together with
/// the contraction power used on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub part: usize,
    /// Local-coordinate bounds (empty for atoms).
    #[serde(default)]
    pub bounds: Vec<Interval>,
    pub power: u32,
    /// ∫ S_H(base)² dλ̄ over the tile.
    pub mass: f64,
}

impl Tile {
    fn contains(&self, part: usize, u: &[f64]) -> bool {
        part == self.part && self.bounds.iter().zip(u).all(|(iv, &x)| iv.contains(x))
    }
}

/// An evaluable ĝ. Serialized with a `kind` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyProfile {
    Zero,
    /// `amplitude` on the box `∏ [lo_i, hi_i)`.
    Box {
        axes: Vec<Interval>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude` on `inner ≤ |ω| < outer`.
    Annulus {
        inner: f64,
        #[serde(with = "crate::orbits::bound")]
        outer: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `c |ω|^p e^{-q|ω|²}`.
    RadialPower {
        c: f64,
        p: f64,
        q: f64,
    },
    /// `amplitude · exp(1 − 1/(1 − s²))` with `s = (ln|ω| − center)/width`,
    /// zero for `|s| ≥ 1`.
    LogBump {
        center: f64,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Sum of profiles with (intended) disjoint supports.
    Union {
        parts: Vec<FrequencyProfile>,
    },
    Scaled {
        factor: f64,
        inner: std::boxed::Box<FrequencyProfile>,
    },
    /// `inner` restricted to the saturation of a transversal region.
    Masked {
        group: CatalogId,
        region: Region,
        inner: std::boxed::Box<FrequencyProfile>,
    },
    /// `amplitude` on `{a·h(t) : a ∈ region, t ∈ window}`; with `decay`, the
    /// value is further divided by `1 + |a|²`.
    OrbitWindow {
        group: CatalogId,
        region: Region,
        window: Vec<Interval>,
        amplitude: f64,
        #[serde(default)]
        decay: bool,
    },
    /// On tile n: `Δ_H(c)^{k_n/2} · base(ω c^{k_n})` for the contraction `c`.
    Tiled {
        group: CatalogId,
        base: std::boxed::Box<FrequencyProfile>,
        contraction: ChartPoint,
        tiles: Vec<Tile>,
    },
    /// Samples on a 1-D grid `origin + i·spacing`, zero outside. Evaluation
    /// between grid nodes is undefined (NaN).
    Grid {
        origin: f64,
        spacing: f64,
        values: Vec<[f64; 2]>,
    },
}

fn one() -> f64 {
    1.0
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl FrequencyProfile {
    /// χ_{1 ≤ |ω| < 2}: the dyadic Shannon profile.
    pub fn shannon() -> Self {
        FrequencyProfile::Annulus {
            inner: 1.0,
            outer: 2.0,
            amplitude: 1.0,
        }
    }

    /// `amplitude` on `[lo, hi)` in one dimension.
    pub fn interval(lo: f64, hi: f64, amplitude: f64) -> Self {
        FrequencyProfile::Box {
            axes: vec![Interval::new(lo, hi)],
            amplitude,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        FrequencyProfile::Scaled {
            factor,
            inner: std::boxed::Box::new(self),
        }
    }

    pub fn eval(&self, w: &Freq) -> Complex64 {
        Complex64::new(self.eval_re(w), 0.0) + self.eval_im(w)
    }

    fn eval_im(&self, w: &Freq) -> Complex64 {
        match self {
            FrequencyProfile::Grid { .. } => Complex64::new(0.0, self.grid_value(w).im),
            FrequencyProfile::Union { parts } => parts.iter().map(|p| p.eval_im(w)).sum(),
            FrequencyProfile::Scaled { factor, inner } => inner.eval_im(w) * *factor,
            FrequencyProfile::Masked { group, region, inner } => {
                if masked_contains(*group, region, w) {
                    inner.eval_im(w)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            FrequencyProfile::Tiled {
                group,
                base,
                contraction,
                tiles,
            } => match tiled_target(*group, contraction, tiles, w) {
                Some((w2, f)) => base.eval_im(&w2) * f,
                None => Complex64::new(0.0, 0.0),
            },
            _ => Complex64::new(0.0, 0.0),
        }
    }

    fn grid_value(&self, w: &Freq) -> Complex64 {
        let FrequencyProfile::Grid {
            origin,
            spacing,
            values,
        } = self
        else {
            unreachable!()
        };
        if w.dim() != 1 {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let i = (w.get(0) - origin) / spacing;
        let r = i.round();
        let last = values.len() as f64 - 1.0;
        if i < -1e-9 || i > last + 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
        if (i - r).abs() > 1e-9 {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let v = values[r as usize];
        Complex64::new(v[0], v[1])
    }

    /// Real part of ĝ(ω). All closed forms except `Grid` are real.
    pub fn eval_re(&self, w: &Freq) -> f64 {
        match self {
            FrequencyProfile::Zero => 0.0,
            FrequencyProfile::Box { axes, amplitude } => {
                if axes.len() != w.dim() {
                    return f64::NAN;
                }
                if axes.iter().zip(w.as_slice()).all(|(iv, &x)| iv.contains(x)) {
                    *amplitude
                } else {
                    0.0
                }
            }
            FrequencyProfile::Annulus {
                inner,
                outer,
                amplitude,
            } => {
                let r = w.norm();
                if r >= *inner && r < *outer {
                    *amplitude
                } else {
                    0.0
                }
            }
            FrequencyProfile::RadialPower { c, p, q } => {
                let r2 = w.norm_sq();
                let rp = if *p == 0.0 { 1.0 } else { r2.sqrt().powf(*p) };
                c * rp * (-q * r2).exp()
            }
            FrequencyProfile::LogBump {
                center,
                width,
                amplitude,
            } => {
                let r = w.norm();
                if r == 0.0 {
                    return 0.0;
                }
                amplitude * bump((r.ln() - center) / width)
            }
            FrequencyProfile::Union { parts } => parts.iter().map(|p| p.eval_re(w)).sum(),
            FrequencyProfile::Scaled { factor, inner } => factor * inner.eval_re(w),
            FrequencyProfile::Masked { group, region, inner } => {
                if masked_contains(*group, region, w) {
                    inner.eval_re(w)
                } else {
                    0.0
                }
            }
            FrequencyProfile::OrbitWindow {
                group,
                region,
                window,
                amplitude,
                decay,
            } => {
                let chart = GroupChart::catalog_ref(*group);
                let Ok(atlas) = OrbitAtlas::catalog_ref(*group) else {
                    return f64::NAN;
                };
                let Ok((a, h)) = cross_section(chart, w) else {
                    return 0.0;
                };
                let Some((part, u)) = atlas.locate(&a) else {
                    return 0.0;
                };
                if !region.contains_local(part, &u) {
                    return 0.0;
                }
                if !window.iter().zip(h.point.as_slice()).all(|(iv, &t)| iv.contains(t)) {
                    return 0.0;
                }
                if *decay {
                    amplitude / (1.0 + a.norm_sq())
                } else {
                    *amplitude
                }
            }
            FrequencyProfile::Tiled {
                group,
                base,
                contraction,
                tiles,
            } => match tiled_target(*group, contraction, tiles, w) {
                Some((w2, f)) => f * base.eval_re(&w2),
                None => 0.0,
            },
            FrequencyProfile::Grid { .. } => self.grid_value(w).re,
        }
    }

    /// |ĝ(ω)|².
    pub fn norm_sq_at(&self, w: &Freq) -> f64 {
        match self {
            FrequencyProfile::Grid { .. } => self.grid_value(w).norm_sqr(),
            _ if !self.has_imaginary_part() => {
                let v = self.eval_re(w);
                v * v
            }
            _ => self.eval(w).norm_sqr(),
        }
    }

    fn has_imaginary_part(&self) -> bool {
        match self {
            FrequencyProfile::Grid { .. } => true,
            FrequencyProfile::Union { parts } => parts.iter().any(Self::has_imaginary_part),
            FrequencyProfile::Scaled { inner, .. } | FrequencyProfile::Masked { inner, .. } => {
                inner.has_imaginary_part()
            }
            FrequencyProfile::Tiled { base, .. } => base.has_imaginary_part(),
            _ => false,
        }
    }

    /// Chart box outside of which `t ↦ ĝ(ω h(t))` vanishes. `None` entries
    /// (or a `None` result) mean no bound is known.
    pub fn chart_support(&self, chart: &GroupChart, w: &Freq) -> Option<Vec<Option<(f64, f64)>>> {
        let d = chart.chart_dim();
        match self {
            FrequencyProfile::Zero => None,
            FrequencyProfile::Box { .. } | FrequencyProfile::Annulus { .. } | FrequencyProfile::LogBump { .. } => {
                if let Some((block, scale)) = radial_block(chart) {
                    let (rlo, rhi) = self.radial_range(w.dim())?;
                    let r = w.norm();
                    if r == 0.0 || !(rhi > rlo) || rlo <= 0.0 || !rhi.is_finite() {
                        return None;
                    }
                    let mut out = vec![None; d];
                    out[block] = Some(((rlo / r).ln() / scale, (rhi / r).ln() / scale));
                    return Some(out);
                }
                if let (FrequencyProfile::Box { axes, .. }, Some(CatalogId::Diag2)) = (self, chart.catalog_id()) {
                    let mut out = vec![None; d];
                    for i in 0..2 {
                        let (lo, hi) = abs_range(&axes[i]);
                        let x = w.get(i).abs();
                        if x > 0.0 && lo > 0.0 && hi.is_finite() {
                            out[i] = Some(((lo / x).ln(), (hi / x).ln()));
                        }
                    }
                    return Some(out);
                }
                None
            }
            FrequencyProfile::RadialPower { .. } | FrequencyProfile::Grid { .. } => None,
            FrequencyProfile::Union { parts } => {
                let mut acc: Option<Vec<Option<(f64, f64)>>> = None;
                for p in parts {
                    let s = p.chart_support(chart, w)?;
                    acc = Some(match acc {
                        None => s,
                        Some(a) => a
                            .iter()
                            .zip(&s)
                            .map(|(x, y)| match (x, y) {
                                (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
                                _ => None,
                            })
                            .collect(),
                    });
                }
                acc
            }
            FrequencyProfile::Scaled { inner, .. } | FrequencyProfile::Masked { inner, .. } => {
                inner.chart_support(chart, w)
            }
            FrequencyProfile::OrbitWindow { group, window, .. } => {
                if chart.catalog_id() != Some(*group) {
                    return None;
                }
                let (_, h) = cross_section(chart, w).ok()?;
                let out = chart
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let iv = window.get(i)?;
                        if b.is_bounded() || !iv.lo.is_finite() || !iv.hi.is_finite() {
                            return None;
                        }
                        let t = h.point.get(i);
                        Some((iv.lo - t, iv.hi - t))
                    })
                    .collect();
                Some(out)
            }
            FrequencyProfile::Tiled {
                group,
                base,
                contraction,
                tiles,
            } => {
                if chart.catalog_id() != Some(*group) {
                    return None;
                }
                let (w2, _) = tiled_target(*group, contraction, tiles, w)?;
                base.chart_support(chart, &w2)
            }
        }
    }

    /// Chart coordinates, per block, where `t ↦ ĝ(ω h(t))` may jump.
    pub fn breakpoints(&self, chart: &GroupChart, w: &Freq) -> Vec<Vec<f64>> {
        let d = chart.chart_dim();
        let mut out = vec![Vec::new(); d];
        self.push_breakpoints(chart, w, &mut out);
        out
    }

    fn push_breakpoints(&self, chart: &GroupChart, w: &Freq, out: &mut [Vec<f64>]) {
        match self {
            FrequencyProfile::Box { axes, .. } => {
                if let Some((block, scale)) = radial_block(chart) {
                    let r = w.norm();
                    if r > 0.0 && w.dim() == 1 {
                        for b in [axes[0].lo, axes[0].hi] {
                            if b.is_finite() && b != 0.0 {
                                out[block].push((b.abs() / r).ln() / scale);
                            }
                        }
                    }
                } else if matches!(chart.catalog_id(), Some(CatalogId::Diag2) | Some(CatalogId::DiagLine2)) {
                    for (i, o) in out.iter_mut().enumerate() {
                        let x = w.get(i).abs();
                        for b in [axes[i].lo, axes[i].hi] {
                            if x > 0.0 && b.is_finite() && b != 0.0 {
                                o.push((b.abs() / x).ln());
                            }
                        }
                    }
                }
            }
            FrequencyProfile::Annulus { inner, outer, .. } => {
                if let Some((block, scale)) = radial_block(chart) {
                    let r = w.norm();
                    if r > 0.0 {
                        for b in [*inner, *outer] {
                            if b.is_finite() && b > 0.0 {
                                out[block].push((b / r).ln() / scale);
                            }
                        }
                    }
                }
            }
            FrequencyProfile::Union { parts } => {
                for p in parts {
                    p.push_breakpoints(chart, w, out);
                }
            }
            FrequencyProfile::Scaled { inner, .. } | FrequencyProfile::Masked { inner, .. } => {
                inner.push_breakpoints(chart, w, out)
            }
            FrequencyProfile::OrbitWindow { group, window, .. } => {
                if chart.catalog_id() != Some(*group) {
                    return;
                }
                let Ok((_, h)) = cross_section(chart, w) else {
                    return;
                };
                for (i, b) in chart.blocks().iter().enumerate() {
                    let Some(iv) = window.get(i) else { continue };
                    let t = h.point.get(i);
                    for e in [iv.lo, iv.hi] {
                        if !e.is_finite() {
                            continue;
                        }
                        let x = match *b {
                            Block::Continuous { lo, hi, periodic: true } => wrap(e - t, lo, hi),
                            _ => e - t,
                        };
                        out[i].push(x);
                    }
                }
            }
            FrequencyProfile::Tiled {
                group,
                base,
                contraction,
                tiles,
            } => {
                if chart.catalog_id() != Some(*group) {
                    return;
                }
                if let Some((w2, _)) = tiled_target(*group, contraction, tiles, w) {
                    base.push_breakpoints(chart, &w2, out);
                }
            }
            _ => {}
        }
    }

    /// Range of |ω| on which a radial-type profile can be nonzero.
    fn radial_range(&self, dim: usize) -> Option<(f64, f64)> {
        match self {
            FrequencyProfile::Box { axes, .. } if dim == 1 && axes.len() == 1 => Some(abs_range(&axes[0])),
            FrequencyProfile::Annulus { inner, outer, .. } => Some((*inner, *outer)),
            FrequencyProfile::LogBump { center, width, .. } => Some(((center - width).exp(), (center + width).exp())),
            _ => None,
        }
    }
}

/// `[min |x|, max |x|]` over an interval.
fn abs_range(iv: &Interval) -> (f64, f64) {
    let (lo, hi) = (iv.lo, iv.hi);
    if lo <= 0.0 && hi >= 0.0 {
        (0.0, lo.abs().max(hi.abs()))
    } else {
        (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
    }
}

/// Block along which |ω h(t)| = |ω| e^{scale·t_block}.
fn radial_block(chart: &GroupChart) -> Option<(usize, f64)> {
    match chart.catalog_id()? {
        CatalogId::Affine1dPlus | CatalogId::Sim2 => Some((0, 1.0)),
        CatalogId::Affine1dFull => Some((1, 1.0)),
        CatalogId::Dyadic1d => Some((0, LN_2)),
        _ => None,
    }
}

fn masked_contains(group: CatalogId, region: &Region, w: &Freq) -> bool {
    let chart = GroupChart::catalog_ref(group);
    match OrbitAtlas::catalog_ref(group) {
        Ok(atlas) => region.contains_freq(chart, atlas, w),
        Err(_) => false,
    }
}

/// For a tiled profile: the point `ω c^k` at which the base is evaluated,
/// and the factor `Δ_H(c)^{k/2}`.
fn tiled_target(group: CatalogId, contraction: &ChartPoint, tiles: &[Tile], w: &Freq) -> Option<(Freq, f64)> {
    let chart = GroupChart::catalog_ref(group);
    let atlas = OrbitAtlas::catalog_ref(group).ok()?;
    let (a, _) = cross_section(chart, w).ok()?;
    let (part, u) = atlas.locate(&a)?;
    let tile = tiles.iter().find(|t| t.contains(part, &u))?;
    let c = chart.embed(contraction);
    let ck = mat_pow(&c, tile.power);
    let factor = chart.modular_h(contraction).powf(0.5 * tile.power as f64);
    Some((w.act(&ck), factor))
}
