//! Grid Fourier transforms and the discretized wavelet transform
//! V_g f(x, h) = ⟨f, π(x, h) g⟩ on an (x, h) grid.

use core::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Block, GroupChart, GroupElement};
use crate::linalg::{ChartPoint, Freq, Mat};
use crate::profile::FrequencyProfile;
use crate::quadrature::pairwise_sum;

/// Uniform periodic grid on ℝᵏ, row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
}

impl Grid {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let g = Self { origin, spacing, shape };
        g.validate()?;
        Ok(g)
    }

    /// `n` points per axis centred on the origin with spacing `dx`.
    pub fn centered(dim: usize, n: usize, dx: f64) -> Result<Self> {
        let o = -(n as f64 / 2.0) * dx;
        Self::new(vec![o; dim], vec![dx; dim], vec![n; dim])
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.shape.len();
        if !(1..=2).contains(&k) || self.origin.len() != k || self.spacing.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "grid needs 1 or 2 axes with matching origin and spacing, got shape {:?}",
                self.shape
            )));
        }
        if self.shape.contains(&0) {
            return Err(Error::ShapeMismatch("empty axis".into()));
        }
        if self.spacing.iter().any(|&d| !(d > 0.0 && d.is_finite())) || self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::ShapeMismatch("spacing must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Δx₁⋯Δx_k.
    pub fn cell(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// 2π/(n Δx) per axis.
    pub fn freq_spacing(&self) -> Vec<f64> {
        self.shape
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &d)| TAU / (n as f64 * d))
            .collect()
    }

    /// Δω₁⋯Δω_k.
    pub fn freq_cell(&self) -> f64 {
        self.freq_spacing().iter().product()
    }

    fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.shape[1], idx % self.shape[1]],
        }
    }

    pub fn point(&self, idx: usize) -> Freq {
        let m = self.multi_index(idx);
        let c: Vec<f64> = (0..self.dim())
            .map(|a| self.origin[a] + m[a] as f64 * self.spacing[a])
            .collect();
        Freq::new(&c).expect("grid dimension")
    }

    /// Signed frequency index along an axis (FFT ordering).
    fn signed(j: usize, n: usize) -> f64 {
        if 2 * j < n {
            j as f64
        } else {
            j as f64 - n as f64
        }
    }

    pub fn frequency(&self, idx: usize) -> Freq {
        let m = self.multi_index(idx);
        let dw = self.freq_spacing();
        let c: Vec<f64> = (0..self.dim())
            .map(|a| Self::signed(m[a], self.shape[a]) * dw[a])
            .collect();
        Freq::new(&c).expect("grid dimension")
    }

    pub fn frequencies(&self) -> Vec<Freq> {
        (0..self.len()).map(|i| self.frequency(i)).collect()
    }

    /// Largest representable |frequency| per axis.
    pub fn nyquist(&self) -> Vec<f64> {
        self.spacing.iter().map(|d| core::f64::consts::PI / d).collect()
    }

    /// Frequency-grid index of `w`, if it is a grid frequency.
    pub fn frequency_index(&self, w: &Freq) -> Option<usize> {
        let dw = self.freq_spacing();
        let mut idx = 0;
        for a in 0..self.dim() {
            let n = self.shape[a];
            let s = w.get(a) / dw[a];
            let r = s.round();
            if (s - r).abs() > 1e-6 {
                return None;
            }
            let r = r as i64;
            let half = n as i64;
            if 2 * r >= half || 2 * r < -half {
                return None;
            }
            let j = r.rem_euclid(n as i64) as usize;
            idx = idx * n + j;
        }
        Some(idx)
    }
}

fn fft_in_place(values: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    match shape.len() {
        1 => plan(shape[0], &mut planner).process(values),
        _ => {
            let (n0, n1) = (shape[0], shape[1]);
            plan(n1, &mut planner).process(values);
            let mut t = vec![Complex64::new(0.0, 0.0); values.len()];
            for i in 0..n0 {
                for j in 0..n1 {
                    t[j * n0 + i] = values[i * n1 + j];
                }
            }
            plan(n0, &mut planner).process(&mut t);
            for i in 0..n0 {
                for j in 0..n1 {
                    values[i * n1 + j] = t[j * n0 + i];
                }
            }
        }
    }
}

/// Samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// ‖f‖² = Σ |f|² Δx.
    pub fn norm_sq(&self) -> f64 {
        let t: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&t) * self.grid.cell()
    }

    /// ‖f − g‖ / ‖g‖.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        let t: Vec<f64> = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .collect();
        (pairwise_sum(&t) * self.grid.cell() / reference.norm_sq()).sqrt()
    }
}

/// Frequency samples f̂(ω_j) on the dual grid of a spatial [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn norm_sq(&self) -> f64 {
        let t: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        pairwise_sum(&t) * self.grid.freq_cell()
    }

    /// Sample a closed-form spectrum on the frequency grid.
    pub fn from_fn(grid: Grid, f: impl Fn(&Freq) -> Complex64 + Sync) -> Result<Self> {
        grid.validate()?;
        let values = (0..grid.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| f(&grid.frequency(i)))
            .collect();
        Ok(Self { grid, values })
    }
}

fn origin_phase(grid: &Grid, w: &Freq) -> Complex64 {
    let s: f64 = (0..grid.dim()).map(|a| w.get(a) * grid.origin[a]).sum();
    Complex64::from_polar(1.0, -s)
}

/// f̂(ω) = (2π)^{-k/2} ∫ f(x) e^{-iωx} dx on the grid. Unitary: Σ|f|²Δx =
/// Σ|f̂|²Δω.
pub fn fourier(signal: &SampledSignal) -> Result<Spectrum> {
    let grid = &signal.grid;
    if signal.values.len() != grid.len() {
        return Err(Error::ShapeMismatch("value count".into()));
    }
    let mut v = signal.values.clone();
    fft_in_place(&mut v, &grid.shape, false);
    let c = TAU.powf(-(grid.dim() as f64) / 2.0) * grid.cell();
    for (i, x) in v.iter_mut().enumerate() {
        *x *= c * origin_phase(grid, &grid.frequency(i));
    }
    Ok(Spectrum {
        grid: grid.clone(),
        values: v,
    })
}

/// Inverse of [`fourier`].
pub fn inverse_fourier(spectrum: &Spectrum) -> Result<SampledSignal> {
    let grid = &spectrum.grid;
    if spectrum.values.len() != grid.len() {
        return Err(Error::ShapeMismatch("value count".into()));
    }
    let c = TAU.powf(-(grid.dim() as f64) / 2.0) * grid.freq_cell();
    let mut v: Vec<Complex64> = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| x * c * origin_phase(grid, &grid.frequency(i)).conj())
        .collect();
    fft_in_place(&mut v, &grid.shape, true);
    Ok(SampledSignal {
        grid: grid.clone(),
        values: v,
    })
}

/// Per-block node layout for the H quadrature: `nodes` midpoints on
/// `[lo, hi)` for continuous blocks, every integer in `[lo, hi]` for
/// discrete ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRange {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HNodeSpec {
    pub blocks: Vec<HRange>,
}

/// Nodes per continuous block by default.
pub const DEFAULT_H_NODES: usize = 64;

impl HNodeSpec {
    /// Scale-like blocks cover `[-16 ln 2, 16 ln 2)`, compact blocks their
    /// full range, integer blocks `[-16, 16]`.
    pub fn default_for(chart: &GroupChart) -> Self {
        Self::with_nodes(chart, DEFAULT_H_NODES)
    }

    pub fn with_nodes(chart: &GroupChart, nodes: usize) -> Self {
        let blocks = chart
            .blocks()
            .iter()
            .map(|b| match *b {
                Block::Continuous { lo, hi, .. } if b.is_bounded() => HRange { lo, hi, nodes },
                Block::Continuous { lo, hi, .. } => HRange {
                    lo: lo.max(-16.0 * LN_2),
                    hi: hi.min(16.0 * LN_2),
                    nodes,
                },
                Block::Discrete { lo, hi } => HRange {
                    lo: lo.max(-16) as f64,
                    hi: hi.min(16) as f64,
                    nodes: 0,
                },
            })
            .collect();
        Self { blocks }
    }

    /// Same layout with every continuous block given the same `range` and
    /// `nodes`.
    pub fn uniform(chart: &GroupChart, lo: f64, hi: f64, nodes: usize) -> Self {
        let mut s = Self::with_nodes(chart, nodes);
        for (r, b) in s.blocks.iter_mut().zip(chart.blocks()) {
            match b {
                Block::Continuous { .. } if !b.is_bounded() => {
                    r.lo = lo;
                    r.hi = hi;
                }
                Block::Discrete { .. } if !b.is_bounded() => {
                    r.lo = lo;
                    r.hi = hi;
                }
                _ => {}
            }
        }
        s
    }
}

/// H quadrature nodes with Haar weights.
#[derive(Clone, Debug, PartialEq)]
pub struct HNodes {
    pub elements: Vec<GroupElement>,
    /// Haar weight of each node (density × cell width).
    pub weights: Vec<f64>,
}

impl HNodes {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Tensor-product nodes in chart coordinates.
pub fn h_nodes(chart: &GroupChart, spec: &HNodeSpec) -> Result<HNodes> {
    let blocks = chart.blocks();
    if spec.blocks.len() != blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: blocks.len(),
            got: spec.blocks.len(),
        });
    }
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(blocks.len());
    for (b, r) in blocks.iter().zip(&spec.blocks) {
        let axis: Vec<(f64, f64)> = match b {
            Block::Continuous { .. } => {
                if r.nodes == 0 || !(r.hi > r.lo) || !r.lo.is_finite() || !r.hi.is_finite() {
                    return Err(Error::GridMismatch(format!("bad node range {r:?}")));
                }
                let w = (r.hi - r.lo) / r.nodes as f64;
                (0..r.nodes).map(|i| (r.lo + (i as f64 + 0.5) * w, w)).collect()
            }
            Block::Discrete { lo, hi } => {
                let l = (r.lo.ceil() as i64).max(*lo);
                let h = (r.hi.floor() as i64).min(*hi);
                (l..=h).map(|j| (j as f64, 1.0)).collect()
            }
        };
        if axis.is_empty() {
            return Err(Error::GridMismatch(format!("no nodes in range {r:?}")));
        }
        axes.push(axis);
    }
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(vec![], 1.0)];
    for axis in &axes {
        pts = pts
            .into_iter()
            .flat_map(|(c, w)| {
                axis.iter().map(move |&(x, dx)| {
                    let mut c2 = c.clone();
                    c2.push(x);
                    (c2, w * dx)
                })
            })
            .collect();
    }
    let mut elements = Vec::with_capacity(pts.len());
    let mut weights = Vec::with_capacity(pts.len());
    for (c, w) in pts {
        let t = ChartPoint::new(&c)?;
        elements.push(chart.evaluate_element(&t)?);
        weights.push(w * chart.haar_density(&t));
    }
    Ok(HNodes { elements, weights })
}

/// One H node of a coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldNode {
    pub point: Vec<f64>,
    /// Haar weight on H.
    pub haar_weight: f64,
    /// Left Haar weight on G per unit x-volume: (2π)^{-k} |det h|^{-1} times
    /// the Haar weight.
    pub weight: f64,
}

/// Samples of V_g f on (x-grid) × (H nodes), node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    pub grid: Grid,
    pub nodes: Vec<FieldNode>,
    pub values: Vec<Complex64>,
}

impl CoefficientField {
    pub fn node_values(&self, i: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn zeros(grid: Grid, nodes: Vec<FieldNode>) -> Self {
        let n = grid.len() * nodes.len();
        Self {
            grid,
            nodes,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

fn left_weight(k: usize, e: &GroupElement, haar: f64) -> f64 {
    TAU.powi(-(k as i32)) * haar / e.det.abs()
}

fn dilated_profile(grid: &Grid, profile: &FrequencyProfile, h: &Mat) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = grid.frequency(i).act(h);
        let v = profile.eval(&w);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::ProfileUnevaluable(format!(
                "profile is not defined at {:?}",
                w.as_slice()
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn check_dims(chart: &GroupChart, grid: &Grid) -> Result<()> {
    if chart.ambient_dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.ambient_dim(),
            got: grid.dim(),
        });
    }
    Ok(())
}

/// V_g f(x, h) at every grid point and node, computed per node as
/// (2π)^{k/2} |det h|^{1/2} F⁻¹[f̂ · conj ĝ(·h)].
pub fn analyze(
    signal: &SampledSignal,
    profile: &FrequencyProfile,
    chart: &GroupChart,
    nodes: &HNodes,
) -> Result<CoefficientField> {
    check_dims(chart, &signal.grid)?;
    let spec = fourier(signal)?;
    let k = signal.grid.dim();
    let per_node: Vec<Vec<Complex64>> = nodes
        .elements
        .par_iter()
        .map(|e| analyze_node(&spec, profile, e))
        .collect::<Result<_>>()?;
    let field_nodes = nodes
        .elements
        .iter()
        .zip(&nodes.weights)
        .map(|(e, &w)| FieldNode {
            point: e.point.as_slice().to_vec(),
            haar_weight: w,
            weight: left_weight(k, e, w),
        })
        .collect();
    Ok(CoefficientField {
        grid: signal.grid.clone(),
        nodes: field_nodes,
        values: per_node.concat(),
    })
}

fn analyze_node(spec: &Spectrum, profile: &FrequencyProfile, e: &GroupElement) -> Result<Vec<Complex64>> {
    let k = spec.grid.dim();
    let g = dilated_profile(&spec.grid, profile, &e.matrix)?;
    let c = TAU.powf(k as f64 / 2.0) * e.det.abs().sqrt();
    let values = spec.values.iter().zip(&g).map(|(f, g)| f * g.conj() * c).collect();
    let s = Spectrum {
        grid: spec.grid.clone(),
        values,
    };
    Ok(inverse_fourier(&s)?.values)
}

/// ‖F‖²_{L²(G)} = Σ_h weight_h Σ_x Δx |F(x, h)|².
pub fn l2g_norm(field: &CoefficientField) -> f64 {
    let n = field.grid.len();
    let cell = field.grid.cell();
    let per: Vec<f64> = field
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| {
            let t: Vec<f64> = field.values[i * n..(i + 1) * n].iter().map(|v| v.norm_sqr()).collect();
            node.weight * cell * pairwise_sum(&t)
        })
        .collect();
    pairwise_sum(&per)
}

/// ⟨F, G⟩_{L²(G)}.
pub fn l2g_inner(a: &CoefficientField, b: &CoefficientField) -> Result<Complex64> {
    if a.grid != b.grid || a.nodes != b.nodes {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let n = a.grid.len();
    let cell = a.grid.cell();
    let per: Vec<Complex64> = a
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let s: Complex64 = a.values[i * n..(i + 1) * n]
                .iter()
                .zip(&b.values[i * n..(i + 1) * n])
                .map(|(x, y)| x * y.conj())
                .sum();
            s * node.weight * cell
        })
        .collect();
    Ok(per.iter().sum())
}

/// Nodes summed per parallel chunk in [`synthesize`].
const SYNTH_CHUNK: usize = 16;

/// ∫_G F(x, h) π(x, h) g dμ_G, the adjoint of [`analyze`] on the same grids.
pub fn synthesize(field: &CoefficientField, profile: &FrequencyProfile, chart: &GroupChart) -> Result<SampledSignal> {
    check_dims(chart, &field.grid)?;
    let n = field.grid.len();
    if field.values.len() != n * field.nodes.len() {
        return Err(Error::GridMismatch(format!(
            "{} values for {} nodes on {} grid points",
            field.values.len(),
            field.nodes.len(),
            n
        )));
    }
    let k = field.grid.dim();
    let idx: Vec<usize> = (0..field.nodes.len()).collect();
    let partial: Vec<Vec<Complex64>> = idx
        .par_chunks(SYNTH_CHUNK)
        .map(|chunk| -> Result<Vec<Complex64>> {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for &i in chunk {
                let node = &field.nodes[i];
                let t = ChartPoint::new(&node.point)?;
                let e = chart.evaluate_element(&t)?;
                let g = dilated_profile(&field.grid, profile, &e.matrix)?;
                let s = SampledSignal {
                    grid: field.grid.clone(),
                    values: field.node_values(i).to_vec(),
                };
                let vh = fourier(&s)?;
                let c = node.weight * TAU.powf(k as f64 / 2.0) * e.det.abs().sqrt();
                for ((a, v), g) in acc.iter_mut().zip(&vh.values).zip(&g) {
                    *a += v * g * c;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Complex64::new(0.0, 0.0); n];
    for p in &partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    inverse_fourier(&Spectrum {
        grid: field.grid.clone(),
        values: total,
    })
}

/// max |V_g(V_g* F) − F| over an evenly spaced subset of `probes` nodes.
/// Since V_g(V_g* F) = F ∗ V_g g, this is the reproducing-kernel defect.
pub fn reproducing_check(
    field: &CoefficientField,
    profile: &FrequencyProfile,
    chart: &GroupChart,
    probes: usize,
) -> Result<f64> {
    let rec = synthesize(field, profile, chart)?;
    let spec = fourier(&rec)?;
    let m = field.nodes.len();
    if m == 0 || probes == 0 {
        return Ok(0.0);
    }
    let step = (m as f64 / probes.min(m) as f64).max(1.0);
    let picks: Vec<usize> = (0..probes.min(m))
        .map(|i| ((i as f64 * step) as usize).min(m - 1))
        .collect();
    let devs: Vec<f64> = picks
        .par_iter()
        .map(|&i| -> Result<f64> {
            let t = ChartPoint::new(&field.nodes[i].point)?;
            let e = chart.evaluate_element(&t)?;
            let v = analyze_node(&spec, profile, &e)?;
            Ok(v.iter()
                .zip(field.node_values(i))
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(0.0, f64::max))
}

/// π(x₀, h₀) f, i.e. y ↦ |det h₀|^{-1/2} f(h₀⁻¹(y − x₀)), computed on the
/// spectrum as |det h₀|^{1/2} e^{-iγx₀} f̂(γh₀). The dilation must map the
/// frequency grid into itself; frequencies pushed outside the grid are
/// dropped.
pub fn quasiregular_apply(signal: &SampledSignal, x0: &Freq, h0: &Mat) -> Result<SampledSignal> {
    let grid = &signal.grid;
    if x0.dim() != grid.dim() || h0.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: x0.dim(),
        });
    }
    let spec = fourier(signal)?;
    let c = h0.det().abs().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let g = grid.frequency(i);
        let gh = g.act(h0);
        let dw = grid.freq_spacing();
        let on_lattice = (0..grid.dim()).all(|a| {
            let s = gh.get(a) / dw[a];
            (s - s.round()).abs() <= 1e-6
        });
        if !on_lattice {
            return Err(Error::GridMismatch(
                "dilation does not map the frequency grid into itself".into(),
            ));
        }
        let f = grid.frequency_index(&gh).map(|j| spec.values[j]).unwrap_or_default();
        values.push(f * c * Complex64::from_polar(1.0, -g.dot(x0)));
    }
    inverse_fourier(&Spectrum {
        grid: grid.clone(),
        values,
    })
}

/// Frequency band for random test signals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    /// Grid frequencies with `min ≤ |ω| ≤ max` are populated.
    pub min: f64,
    pub max: f64,
    /// Restrict to ω₁ > 0.
    #[serde(default)]
    pub positive: bool,
}

impl Band {
    pub fn contains(&self, w: &Freq) -> bool {
        let r = w.norm();
        r >= self.min && r <= self.max && (!self.positive || w.get(0) > 0.0)
    }
}

/// Random signal with independent uniform spectral coefficients on the
/// band, normalized to ‖f‖ = 1.
pub fn random_band_limited<R: Rng + ?Sized>(grid: &Grid, band: &Band, rng: &mut R) -> Result<SampledSignal> {
    grid.validate()?;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let w = grid.frequency(i);
        values.push(if band.contains(&w) {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let mut spec = Spectrum {
        grid: grid.clone(),
        values,
    };
    let n = spec.norm_sq();
    if n == 0.0 {
        return Err(Error::ShapeMismatch("band contains no grid frequency".into()));
    }
    let s = n.sqrt().recip();
    for v in &mut spec.values {
        *v *= s;
    }
    inverse_fourier(&spec)
}

/// Signal whose spectrum is the given closed form sampled on the grid.
pub fn signal_from_spectrum(grid: &Grid, f: impl Fn(&Freq) -> Complex64 + Sync) -> Result<SampledSignal> {
    inverse_fourier(&Spectrum::from_fn(grid.clone(), f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::CatalogId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_is_self_reciprocal() {
        let grid = Grid::centered(1, 512, 0.05).unwrap();
        let f = SampledSignal::new(
            grid.clone(),
            (0..grid.len())
                .map(|i| Complex64::new((-grid.point(i).norm_sq() / 2.0).exp(), 0.0))
                .collect(),
        )
        .unwrap();
        let s = fourier(&f).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            let w = grid.frequency(i);
            let e = (-w.norm_sq() / 2.0).exp();
            assert!((v - e).norm() < 1e-10, "{w:?} {v} {e}");
        }
    }

    #[test]
    fn unitary_round_trip_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = Grid::new(vec![0.3, -1.0], vec![0.1, 0.2], vec![16, 12]).unwrap();
        let values: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = SampledSignal::new(grid, values).unwrap();
        let s = fourier(&f).unwrap();
        assert!((s.norm_sq() - f.norm_sq()).abs() < 1e-12 * f.norm_sq());
        let back = inverse_fourier(&s).unwrap();
        assert!(back.relative_error(&f) < 1e-13);
    }

    #[test]
    fn dyadic_shannon_pairing() {
        let dy = GroupChart::catalog(CatalogId::Dyadic1d);
        let grid = Grid::centered(1, 256, 0.25).unwrap();
        let g = FrequencyProfile::shannon();
        // g itself, sampled on the grid
        let f = signal_from_spectrum(&grid, |w| g.eval(w)).unwrap();
        let nodes = h_nodes(
            &dy,
            &HNodeSpec {
                blocks: vec![HRange {
                    lo: 0.0,
                    hi: 0.0,
                    nodes: 0,
                }],
            },
        )
        .unwrap();
        let field = analyze(&f, &g, &dy, &nodes).unwrap();
        let idx = grid.len() / 2;
        assert!(grid.point(idx).norm() < 1e-15);
        // the Riemann sum of |ĝ|² over the frequency grid
        let dw = grid.freq_cell();
        let expect: f64 = (0..grid.len()).map(|i| g.norm_sq_at(&grid.frequency(i)) * dw).sum();
        assert!((expect - 2.0).abs() < 0.05);
        assert!((field.node_values(0)[idx] - expect).norm() < 1e-12);
    }

    #[test]
    fn zero_signal_gives_zero_field() {
        let af = GroupChart::catalog(CatalogId::Affine1dPlus);
        let grid = Grid::centered(1, 64, 0.5).unwrap();
        let f = SampledSignal::zeros(grid);
        let nodes = h_nodes(&af, &HNodeSpec::with_nodes(&af, 8)).unwrap();
        let field = analyze(&f, &FrequencyProfile::interval(1.0, 2.0, 1.0), &af, &nodes).unwrap();
        assert_eq!(l2g_norm(&field), 0.0);
        let back = synthesize(&field, &FrequencyProfile::interval(1.0, 2.0, 1.0), &af).unwrap();
        assert!(back.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn node_layout() {
        let sim = GroupChart::catalog(CatalogId::Sim2);
        let n = h_nodes(&sim, &HNodeSpec::with_nodes(&sim, 8)).unwrap();
        assert_eq!(n.len(), 64);
        let total: f64 = n.weights.iter().sum();
        assert!((total - 32.0 * LN_2 * TAU).abs() < 1e-12);
        let af = GroupChart::catalog(CatalogId::Affine1dFull);
        let n = h_nodes(&af, &HNodeSpec::with_nodes(&af, 4)).unwrap();
        assert_eq!(n.len(), 8);
    }
}
