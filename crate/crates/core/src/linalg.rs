//! Fixed-size vectors and matrices for ambient dimensions 1 and 2.
//!
//! Frequencies are row vectors; the dual action is `ω · h`. Spatial points
//! are column vectors acted on by `h x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 2;

/// A point of ℝᵏ or its dual, k ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Freq {
    len: usize,
    v: [f64; MAX_DIM],
}

impl Freq {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() > MAX_DIM {
            return Err(Error::DimensionMismatch {
                expected: MAX_DIM,
                got: values.len(),
            });
        }
        let mut v = [0.0; MAX_DIM];
        v[..values.len()].copy_from_slice(values);
        Ok(Self { len: values.len(), v })
    }

    pub const fn scalar(x: f64) -> Self {
        Self { len: 1, v: [x, 0.0] }
    }

    pub const fn pair(x: f64, y: f64) -> Self {
        Self { len: 2, v: [x, y] }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            len: dim,
            v: [0.0; MAX_DIM],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.len]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.v[i]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = *self;
        for x in &mut out.v[..self.len] {
            *x *= a;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.len {
            out.v[i] -= other.v[i];
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.len {
            out.v[i] += other.v[i];
        }
        out
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        (0..self.len).map(|i| self.v[i] * other.v[i]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.as_slice().iter().all(|&x| x == 0.0)
    }

    /// Row vector times matrix: the dual action `ω · h`.
    #[inline]
    pub fn act(&self, h: &Mat) -> Self {
        debug_assert_eq!(self.len, h.n);
        let mut out = [0.0; MAX_DIM];
        for (j, o) in out.iter_mut().enumerate().take(self.len) {
            *o = (0..self.len).map(|i| self.v[i] * h.m[i][j]).sum();
        }
        Self { len: self.len, v: out }
    }
}

impl TryFrom<Vec<f64>> for Freq {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Freq::new(&v)
    }
}

impl From<Freq> for Vec<f64> {
    fn from(f: Freq) -> Self {
        f.as_slice().to_vec()
    }
}

/// A real k×k matrix, k ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    m: [[f64; MAX_DIM]; MAX_DIM],
}

impl Mat {
    pub fn identity(n: usize) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in m.iter_mut().enumerate().take(n) {
            row[i] = 1.0;
        }
        Self { n, m }
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            n: 1,
            m: [[x, 0.0], [0.0, 0.0]],
        }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self {
            n: 2,
            m: [[a, 0.0], [0.0, b]],
        }
    }

    pub fn from_rows(rows: [[f64; 2]; 2]) -> Self {
        Self { n: 2, m: rows }
    }

    /// Build from row-major entries; `entries.len()` must be 1 or 4.
    pub fn from_row_major(entries: &[f64]) -> Result<Self> {
        match entries.len() {
            1 => Ok(Self::scalar(entries[0])),
            4 => Ok(Self::from_rows([[entries[0], entries[1]], [entries[2], entries[3]]])),
            n => Err(Error::DimensionMismatch { expected: 4, got: n }),
        }
    }

    /// Counter-clockwise rotation acting on column vectors.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows([[c, -s], [s, c]])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            out.extend_from_slice(&self.m[i][..self.n]);
        }
        out
    }

    #[inline]
    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.m[0][0],
            _ => self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0],
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in m.iter_mut().enumerate().take(self.n) {
            for (j, x) in row.iter_mut().enumerate().take(self.n) {
                *x = (0..self.n).map(|l| self.m[i][l] * other.m[l][j]).sum();
            }
        }
        Self { n: self.n, m }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= a;
            }
        }
        out
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(match self.n {
            1 => Self::scalar(1.0 / self.m[0][0]),
            _ => Self::from_rows([
                [self.m[1][1] / d, -self.m[0][1] / d],
                [-self.m[1][0] / d, self.m[0][0] / d],
            ]),
        })
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    /// Matrix times column vector: the spatial action `h x`.
    pub fn apply(&self, x: &Freq) -> Freq {
        let mut out = Freq::zeros(self.n);
        for i in 0..self.n {
            out.v[i] = (0..self.n).map(|j| self.m[i][j] * x.v[j]).sum();
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Self {
            n: self.n,
            m: [[0.0; MAX_DIM]; MAX_DIM],
        })
    }
}

/// Maximum number of chart coordinates (dim GL(2, ℝ)).
pub const MAX_CHART_DIM: usize = 4;

/// Coordinates of a point in a group chart. Discrete coordinates are stored
/// as integer-valued floats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChartPoint {
    len: usize,
    c: [f64; MAX_CHART_DIM],
}

impl ChartPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() > MAX_CHART_DIM {
            return Err(Error::DimensionMismatch {
                expected: MAX_CHART_DIM,
                got: coords.len(),
            });
        }
        let mut c = [0.0; MAX_CHART_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { len: coords.len(), c })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            c: [0.0; MAX_CHART_DIM],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.len]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.c[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, x: f64) {
        self.c[i] = x;
    }
}

impl TryFrom<Vec<f64>> for ChartPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ChartPoint::new(&v)
    }
}

impl From<ChartPoint> for Vec<f64> {
    fn from(p: ChartPoint) -> Self {
        p.as_slice().to_vec()
    }
}
