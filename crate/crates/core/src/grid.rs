//! Dense, x-fastest 3D arrays.

use crate::{Error, Result};

#[inline]
pub(crate) fn flat_index(dims: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}

pub(crate) fn volume(dims: [usize; 3]) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Uniform cell-centered scalar field. Values are stored x-fastest, then y,
/// then z.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl ScalarGrid {
    /// Builds a grid, rejecting empty dimensions, length mismatches and
    /// non-finite values.
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDims(format!("{dims:?} has an empty axis")));
        }
        if values.len() != volume(dims) {
            return Err(Error::InvalidDims(format!(
                "{dims:?} needs {} values, got {}",
                volume(dims),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { dims, values })
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Result<Self> {
        Self::new(dims, vec![value; volume(dims)])
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(volume(dims));
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        flat_index(self.dims, i, j, k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// `(min, max)` over all values.
    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn value_range(&self) -> f64 {
        let (lo, hi) = self.min_max();
        hi - lo
    }

    /// Largest pointwise absolute difference. Panics on mismatched dims.
    pub fn max_abs_diff(&self, other: &ScalarGrid) -> f64 {
        assert_eq!(self.dims, other.dims, "grid dims differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copies out the sub-box `[lo, lo + shape)`.
    pub fn extract(&self, lo: [usize; 3], shape: [usize; 3]) -> ScalarGrid {
        let mut values = Vec::with_capacity(volume(shape));
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                let start = self.index(lo[0], lo[1] + j, lo[2] + k);
                values.extend_from_slice(&self.values[start..start + shape[0]]);
            }
        }
        ScalarGrid { dims: shape, values }
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &ScalarGrid) -> bool {
        self.dims == other.dims
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Boolean companion of [`ScalarGrid`], same layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask3 {
    pub dims: [usize; 3],
    pub values: Vec<bool>,
}

impl Mask3 {
    pub fn new(dims: [usize; 3], fill: bool) -> Self {
        Self { dims, values: vec![fill; volume(dims)] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.values[flat_index(self.dims, i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let idx = flat_index(self.dims, i, j, k);
        self.values[idx] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn all(&self) -> bool {
        self.values.iter().all(|&v| v)
    }

    pub fn any(&self) -> bool {
        self.values.iter().any(|&v| v)
    }
}
