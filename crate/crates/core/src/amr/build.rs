//! Gradient-tagged two-level hierarchies built from a fine field.

use super::{AmrDataset, IndexBox, Patch, REFINEMENT_RATIO};
use crate::grid::volume;
use crate::{Error, Result, ScalarGrid};

/// 2³ block mean of `fine`. Dims must be even.
pub fn coarsen_mean(fine: &ScalarGrid) -> Result<ScalarGrid> {
    let fd = fine.dims();
    if fd.iter().any(|d| d % 2 != 0) {
        return Err(Error::InvalidDims(format!("{fd:?} is not divisible by 2")));
    }
    let cd = fd.map(|d| d / 2);
    ScalarGrid::from_fn(cd, |i, j, k| {
        let mut sum = 0.0;
        for dk in 0..2 {
            for dj in 0..2 {
                for di in 0..2 {
                    sum += fine.get(2 * i + di, 2 * j + dj, 2 * k + dk);
                }
            }
        }
        sum / 8.0
    })
}

/// Tiles of `tile³` coarse cells holding at least one cell whose
/// central-difference gradient norm (unit-cube coordinates, one-sided at the
/// domain boundary) exceeds `theta`. Returned x-fastest over the tile grid.
pub fn tag_tiles(coarse: &ScalarGrid, theta: f64, tile: usize) -> (Vec<bool>, [usize; 3]) {
    let cd = coarse.dims();
    let tiles = cd.map(|d| d.div_ceil(tile));
    let mut tagged = vec![false; volume(tiles)];
    let deriv = |pos: [usize; 3], axis: usize| -> f64 {
        let n = cd[axis];
        if n == 1 {
            return 0.0;
        }
        let h = 1.0 / n as f64;
        let mut lo = pos;
        let mut hi = pos;
        let span = if pos[axis] == 0 {
            hi[axis] += 1;
            h
        } else if pos[axis] == n - 1 {
            lo[axis] -= 1;
            h
        } else {
            lo[axis] -= 1;
            hi[axis] += 1;
            2.0 * h
        };
        (coarse.get(hi[0], hi[1], hi[2]) - coarse.get(lo[0], lo[1], lo[2])) / span
    };
    for k in 0..cd[2] {
        for j in 0..cd[1] {
            for i in 0..cd[0] {
                let t = (i / tile) + tiles[0] * ((j / tile) + tiles[1] * (k / tile));
                if tagged[t] {
                    continue;
                }
                let g = (0..3).map(|a| deriv([i, j, k], a).powi(2)).sum::<f64>().sqrt();
                if g > theta {
                    tagged[t] = true;
                }
            }
        }
    }
    (tagged, tiles)
}

/// Two-level dataset from a fine field: the coarse level is the block mean
/// over the whole domain, and one fine patch per tagged `tile³` coarse tile
/// carries the original fine values. Fine dims must be divisible by
/// `2·tile`.
pub fn build_amr(fine: &ScalarGrid, theta: f64, tile: usize) -> Result<AmrDataset> {
    check_divisible(fine.dims(), tile)?;
    let coarse = coarsen_mean(fine)?;
    let (tagged, tiles) = tag_tiles(&coarse, theta, tile);
    build_from_parts(fine, coarse, tile, |t| tagged[t[0] + tiles[0] * (t[1] + tiles[1] * t[2])])
}

/// Same as [`build_amr`] with an explicit tile selection; `refine` receives
/// tile coordinates.
pub fn build_amr_from_tiles(
    fine: &ScalarGrid,
    tile: usize,
    refine: impl Fn([usize; 3]) -> bool,
) -> Result<AmrDataset> {
    check_divisible(fine.dims(), tile)?;
    let coarse = coarsen_mean(fine)?;
    build_from_parts(fine, coarse, tile, refine)
}

fn check_divisible(dims: [usize; 3], tile: usize) -> Result<()> {
    if tile == 0 || dims.iter().any(|d| d % (REFINEMENT_RATIO * tile) != 0) {
        return Err(Error::InvalidDims(format!(
            "{dims:?} is not divisible by {} (2 x tile {tile})",
            REFINEMENT_RATIO * tile
        )));
    }
    Ok(())
}

fn build_from_parts(
    fine: &ScalarGrid,
    coarse: ScalarGrid,
    tile: usize,
    refine: impl Fn([usize; 3]) -> bool,
) -> Result<AmrDataset> {
    let cd = coarse.dims();
    let tiles = cd.map(|d| d / tile);
    let ft = tile * REFINEMENT_RATIO;
    let mut fine_patches = Vec::new();
    for tk in 0..tiles[2] {
        for tj in 0..tiles[1] {
            for ti in 0..tiles[0] {
                if !refine([ti, tj, tk]) {
                    continue;
                }
                let lo = [ti * ft, tj * ft, tk * ft];
                let sub = fine.extract(lo, [ft; 3]);
                fine_patches.push(Patch::from_grid(lo.map(|v| v as i64), sub));
            }
        }
    }
    let coarse_patch = Patch::new(IndexBox::from_dims(cd), coarse.into_values())?;
    Ok(AmrDataset::new(cd, vec![vec![coarse_patch], fine_patches]))
}
