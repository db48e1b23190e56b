use serde::{Deserialize, Serialize};

use crate::amr::LevelRaster;
use crate::grid::flat_index;
use crate::{Error, Mask3, Result, ScalarGrid};

/// Point samples at cell corners; one more than the cell count per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexGrid {
    pub dims: [usize; 3],
    pub values: Vec<f64>,
    /// Vertices with at least one adjacent cell.
    pub present: Mask3,
}

impl VertexGrid {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[flat_index(self.dims, i, j, k)]
    }

    pub fn to_grid(&self) -> Result<ScalarGrid> {
        ScalarGrid::new(self.dims, self.values.clone())
    }
}

/// Averages the existing cells around every corner. `present(i, j, k)`
/// says whether a cell carries data.
fn average_corners(dims: [usize; 3], value: impl Fn(usize) -> f64, present: impl Fn(usize) -> bool) -> VertexGrid {
    let vd = dims.map(|d| d + 1);
    let mut values = vec![0.0; vd.iter().product()];
    let mut mask = Mask3::new(vd, false);
    for k in 0..vd[2] {
        for j in 0..vd[1] {
            for i in 0..vd[0] {
                let mut sum = 0.0;
                let mut n = 0u32;
                for ck in k.saturating_sub(1)..(k + 1).min(dims[2]) {
                    for cj in j.saturating_sub(1)..(j + 1).min(dims[1]) {
                        for ci in i.saturating_sub(1)..(i + 1).min(dims[0]) {
                            let c = flat_index(dims, ci, cj, ck);
                            if present(c) {
                                sum += value(c);
                                n += 1;
                            }
                        }
                    }
                }
                if n > 0 {
                    let v = flat_index(vd, i, j, k);
                    values[v] = sum / n as f64;
                    mask.values[v] = true;
                }
            }
        }
    }
    VertexGrid { dims: vd, values, present: mask }
}

/// Cell-to-vertex resampling: each vertex is the mean of its 1 to 8
/// adjacent cells.
pub fn resample_to_vertices(grid: &ScalarGrid) -> VertexGrid {
    let v = grid.values();
    average_corners(grid.dims(), |c| v[c], |_| true)
}

/// Same, restricted to the cells a level actually holds.
pub fn resample_level(raster: &LevelRaster) -> VertexGrid {
    average_corners(raster.dims, |c| raster.values[c], |c| raster.present.values[c])
}

/// Linear resolution gain of the vertex lattice over an `n`-cell axis.
pub fn resolution_ratio(n: usize) -> f64 {
    (n as f64 + 1.0) / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demo1d {
    pub original: Vec<f64>,
    pub blocked: Vec<f64>,
    pub resampled: Vec<f64>,
}

/// One-dimensional picture of block artifacts and their smoothing:
/// `blocked` replaces each block by its mean, `resampled` averages
/// neighbouring cells of `blocked` onto the `n + 1` cell corners.
pub fn demo_1d(values: &[f64], block: usize) -> Result<Demo1d> {
    if block == 0 {
        return Err(Error::InvalidDims("block must be positive".into()));
    }
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDims("values must be non-empty and finite".into()));
    }
    let mut blocked = Vec::with_capacity(values.len());
    for chunk in values.chunks(block) {
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        blocked.extend(std::iter::repeat(mean).take(chunk.len()));
    }
    let n = blocked.len();
    let resampled = (0..=n)
        .map(|i| match i {
            0 => blocked[0],
            i if i == n => blocked[n - 1],
            i => (blocked[i - 1] + blocked[i]) / 2.0,
        })
        .collect();
    Ok(Demo1d { original: values.to_vec(), blocked, resampled })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_vertex_is_mean_of_four_cells() {
        // A one-cell-thick slab: the interior vertex column of a 2×2 layout.
        let g = ScalarGrid::new([2, 2, 1], vec![8.0, 6.0, 6.0, 4.0]).unwrap();
        let v = resample_to_vertices(&g);
        assert_eq!(v.dims, [3, 3, 2]);
        assert_eq!(v.get(1, 1, 0), 6.0);
        assert_eq!(v.get(0, 0, 0), 8.0);
        assert_eq!(v.get(1, 0, 1), 7.0);
    }

    #[test]
    fn partial_level_ignores_missing_cells() {
        let mut present = Mask3::new([2, 1, 1], false);
        present.set(0, 0, 0, true);
        let r = LevelRaster { dims: [2, 1, 1], present, values: vec![3.0, 100.0] };
        let v = resample_level(&r);
        assert_eq!(v.get(1, 0, 0), 3.0);
        assert!(!v.present.get(2, 0, 0));
    }

    #[test]
    fn demo_matches_block_example() {
        let d = demo_1d(&(0..9).map(f64::from).collect::<Vec<_>>(), 3).unwrap();
        assert_eq!(d.blocked, [1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 7.0, 7.0, 7.0]);
        assert_eq!(d.resampled, [1.0, 1.0, 1.0, 2.5, 4.0, 4.0, 5.5, 7.0, 7.0, 7.0]);
        assert!(demo_1d(&[1.0], 0).is_err());
    }

    #[test]
    fn resolution_gain() {
        assert!((resolution_ratio(512) - 1.001953125).abs() < 1e-15);
    }
}
