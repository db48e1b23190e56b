//! Iso-surface extraction from AMR hierarchies.
//!
//! * Re-sampling: every level is averaged onto its own vertex lattice and
//!   contoured over the cells no finer level covers. Levels meet with
//!   mismatched vertices, so the surface cracks at interfaces.
//! * Dual: every level is contoured on the lattice of its cell centres.
//!   Neighbouring levels leave a gap, closed either by padding (coarse dual
//!   cells reach one coarse cell into the fine footprint, using the
//!   redundant coarse values) or by stitching cells.
//!
//! Stitching works on the finest vertex lattice. Around every vertex `v`
//! the eight finest cell positions are mapped to the finest cell that
//! actually exists there; the hexahedron spanned by those cell centres is
//! an ordinary dual cell inside one level, a collapsed duplicate far from
//! an interface (skipped), or a degenerate pyramid/wedge-like cell bridging
//! two levels. All of them are contoured with the same face-consistent
//! table, so the surface closes across interfaces.

use super::contour::{contour_hex, hex_is_flat, Hex};
use super::mesh::{MeshBuilder, Node, TriKind, TriMesh};
use super::resample::resample_level;
use crate::amr::{level_cell_size, AmrDataset, AmrLevel, LevelRaster};
use crate::grid::{flat_index, volume};
use crate::{Error, Mask3, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GapMode {
    Padding,
    Stitch,
}

/// Value range over every stored datum, redundant ones included.
fn data_range(ds: &AmrDataset) -> f64 {
    let (lo, hi) = ds
        .levels
        .iter()
        .flat_map(|l| &l.patches)
        .flat_map(|p| &p.data)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo <= hi {
        hi - lo
    } else {
        0.0
    }
}

fn level_tag(level: usize) -> u8 {
    level.min(u8::MAX as usize) as u8
}

/// Re-sampling + marching cubes, one level at a time.
pub fn extract_resampled(ds: &AmrDataset, iso: f64) -> Result<TriMesh> {
    ds.ensure_valid()?;
    let mut b = MeshBuilder::for_range(data_range(ds));
    let mut offset = 0u64;
    for l in 0..ds.num_levels() {
        let raster = ds.rasterize(l)?;
        let shadow = if l + 1 < ds.num_levels() { Some(ds.redundant_mask(l)?) } else { None };
        let vg = resample_level(&raster);
        let h = level_cell_size(l);
        let vd = vg.dims;
        let d = raster.dims;
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = flat_index(d, i, j, k);
                    if !raster.present.values[c] || shadow.as_ref().is_some_and(|s| s.values[c]) {
                        continue;
                    }
                    let hex: Hex = std::array::from_fn(|n| {
                        let p = [i + (n & 1), j + (n >> 1 & 1), k + (n >> 2 & 1)];
                        let v = flat_index(vd, p[0], p[1], p[2]);
                        Node { id: offset + v as u64, pos: p.map(|x| x as f64 * h), value: vg.values[v] }
                    });
                    contour_hex(&mut b, &hex, iso, level_tag(l), TriKind::Regular);
                }
            }
        }
        offset += volume(vd) as u64;
    }
    Ok(b.finish())
}

/// Cell centres of one level, with the hexahedra they span.
#[derive(Clone, Debug)]
pub struct DualLattice {
    pub level_index: usize,
    pub cell_size: f64,
    pub dims: [usize; 3],
    pub present: Mask3,
    pub values: Vec<f64>,
    /// Added to flat cell indices to form mesh-wide point ids.
    pub id_offset: u64,
}

impl DualLattice {
    pub fn from_raster(raster: &LevelRaster, level_index: usize, id_offset: u64) -> Self {
        Self {
            level_index,
            cell_size: level_cell_size(level_index),
            dims: raster.dims,
            present: raster.present.clone(),
            values: raster.values.clone(),
            id_offset,
        }
    }

    pub fn node(&self, c: [usize; 3]) -> Option<Node> {
        let idx = flat_index(self.dims, c[0], c[1], c[2]);
        self.present.values[idx].then(|| Node {
            id: self.id_offset + idx as u64,
            pos: c.map(|x| (x as f64 + 0.5) * self.cell_size),
            value: self.values[idx],
        })
    }

    /// Hexahedron with lowest corner at cell `lo`, if all eight centres exist.
    pub fn hex(&self, lo: [usize; 3]) -> Option<Hex> {
        if (0..3).any(|a| lo[a] + 1 >= self.dims[a]) {
            return None;
        }
        let mut out = [Node { id: 0, pos: [0.0; 3], value: 0.0 }; 8];
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = self.node([lo[0] + (n & 1), lo[1] + (n >> 1 & 1), lo[2] + (n >> 2 & 1)])?;
        }
        Some(out)
    }

    /// Lowest corners of all hexahedra, z-slowest.
    pub fn hex_origins(&self) -> Vec<[usize; 3]> {
        let d = self.dims;
        let mut out = Vec::new();
        for k in 0..d[2].saturating_sub(1) {
            for j in 0..d[1].saturating_sub(1) {
                for i in 0..d[0].saturating_sub(1) {
                    if self.hex([i, j, k]).is_some() {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    pub fn num_hexes(&self) -> usize {
        self.hex_origins().len()
    }
}

/// Dual lattice of a standalone level; its index space is taken to start
/// at the origin and end at the largest patch corner.
pub fn build_dual(level: &AmrLevel) -> DualLattice {
    let mut dims = [0usize; 3];
    for p in &level.patches {
        for a in 0..3 {
            dims[a] = dims[a].max((p.bounds.hi[a] + 1).max(0) as usize);
        }
    }
    let mut present = Mask3::new(dims, false);
    let mut values = vec![0.0; volume(dims)];
    for p in &level.patches {
        for c in p.bounds.cells() {
            if c.iter().any(|&x| x < 0) {
                continue;
            }
            let idx = flat_index(dims, c[0] as usize, c[1] as usize, c[2] as usize);
            present.values[idx] = true;
            values[idx] = p.get(c);
        }
    }
    let raster = LevelRaster { dims, present, values };
    DualLattice::from_raster(&raster, level.level_index, 0)
}

fn dual_lattices(ds: &AmrDataset) -> Result<Vec<DualLattice>> {
    let mut offset = 0u64;
    let mut out = Vec::with_capacity(ds.num_levels());
    for l in 0..ds.num_levels() {
        let r = ds.rasterize(l)?;
        out.push(DualLattice::from_raster(&r, l, offset));
        offset += volume(r.dims) as u64;
    }
    Ok(out)
}

/// Cells within one cell (in every direction) of a cell not covered by the
/// next finer level.
fn padded_region(shadow: &Mask3) -> Mask3 {
    let d = shadow.dims;
    let mut out = Mask3::new(d, false);
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                if shadow.get(i, j, k) {
                    continue;
                }
                for ck in k.saturating_sub(1)..(k + 2).min(d[2]) {
                    for cj in j.saturating_sub(1)..(j + 2).min(d[1]) {
                        for ci in i.saturating_sub(1)..(i + 2).min(d[0]) {
                            out.set(ci, cj, ck, true);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dual-cell extraction with the chosen gap treatment.
pub fn extract_dual(ds: &AmrDataset, iso: f64, mode: GapMode) -> Result<TriMesh> {
    ds.ensure_valid()?;
    match mode {
        GapMode::Padding => extract_padded(ds, iso),
        GapMode::Stitch => {
            if ds.refinement_ratio != 2 {
                return Err(Error::Unsupported(format!(
                    "stitching needs refinement ratio 2, got {}",
                    ds.refinement_ratio
                )));
            }
            extract_stitched(ds, iso)
        }
    }
}

fn extract_padded(ds: &AmrDataset, iso: f64) -> Result<TriMesh> {
    let lattices = dual_lattices(ds)?;
    let mut b = MeshBuilder::for_range(data_range(ds));
    for (l, lat) in lattices.iter().enumerate() {
        let allowed = if l + 1 < ds.num_levels() { Some(padded_region(&ds.redundant_mask(l)?)) } else { None };
        for lo in lat.hex_origins() {
            if let Some(allowed) = &allowed {
                let inside = (0..8).all(|n| allowed.get(lo[0] + (n & 1), lo[1] + (n >> 1 & 1), lo[2] + (n >> 2 & 1)));
                if !inside {
                    continue;
                }
            }
            let hex = lat.hex(lo).expect("origin listed");
            contour_hex(&mut b, &hex, iso, level_tag(l), TriKind::Regular);
        }
    }
    Ok(b.finish())
}

fn extract_stitched(ds: &AmrDataset, iso: f64) -> Result<TriMesh> {
    let lattices = dual_lattices(ds)?;
    let finest = ds.num_levels() - 1;
    let fd = ds.level_dims(finest);
    // Finest existing cell covering finest-index cell `q`.
    let cover = |q: [usize; 3]| -> Node {
        for l in (0..=finest).rev() {
            let shift = finest - l;
            if let Some(n) = lattices[l].node(q.map(|x| x >> shift)) {
                return n;
            }
        }
        unreachable!("a valid dataset covers the domain at level 0")
    };
    let mut b = MeshBuilder::for_range(data_range(ds));
    for k in 1..fd[2] {
        for j in 1..fd[1] {
            for i in 1..fd[0] {
                let hex: Hex = std::array::from_fn(|n| cover([i - 1 + (n & 1), j - 1 + (n >> 1 & 1), k - 1 + (n >> 2 & 1)]));
                if hex_is_flat(&hex) {
                    continue;
                }
                let levels = hex.map(|n| node_level(&lattices, n.id));
                let lo = *levels.iter().min().unwrap();
                let kind = if levels.iter().all(|&l| l == lo) { TriKind::Regular } else { TriKind::Stitch };
                contour_hex(&mut b, &hex, iso, level_tag(lo), kind);
            }
        }
    }
    Ok(b.finish())
}

fn node_level(lattices: &[DualLattice], id: u64) -> usize {
    lattices.iter().rposition(|l| id >= l.id_offset).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::{IndexBox, Patch};

    fn level_from_boxes(boxes: &[([i64; 3], [i64; 3])]) -> AmrLevel {
        let patches = boxes
            .iter()
            .map(|&(lo, hi)| {
                let b = IndexBox::new(lo, hi).unwrap();
                Patch::new(b, vec![1.0; b.volume()]).unwrap()
            })
            .collect();
        AmrLevel::new(0, patches)
    }

    #[test]
    fn full_level_dual_count() {
        let lat = build_dual(&level_from_boxes(&[([0, 0, 0], [4, 4, 4])]));
        assert_eq!(lat.num_hexes(), 64);
    }

    #[test]
    fn abutting_patches_share_dual_cells() {
        let lat = build_dual(&level_from_boxes(&[([0, 0, 0], [1, 3, 3]), ([2, 0, 0], [3, 3, 3])]));
        // Same as one 4³ block: the seam column of dual cells exists.
        assert_eq!(lat.num_hexes(), 27);
        assert!(lat.hex([1, 0, 0]).is_some());
    }

    #[test]
    fn isolated_cell_has_no_dual_cells() {
        let lat = build_dual(&level_from_boxes(&[([2, 2, 2], [2, 2, 2])]));
        assert_eq!(lat.num_hexes(), 0);
    }

    #[test]
    fn padding_reaches_one_cell() {
        let mut shadow = Mask3::new([6, 1, 1], false);
        for i in 2..6 {
            shadow.set(i, 0, 0, true);
        }
        let r = padded_region(&shadow);
        let row: Vec<bool> = (0..6).map(|i| r.get(i, 0, 0)).collect();
        assert_eq!(row, [true, true, true, false, false, false]);
    }
}
