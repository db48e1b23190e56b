//! Patch-based AMR hierarchy: levels of disjoint cell-centered patches,
//! refinement ratio 2, coarse data retained under finer patches.

mod build;
mod container;
mod field;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use build::{build_amr, build_amr_from_tiles, coarsen_mean, tag_tiles};
pub use container::{read_container, write_container};
pub use field::{generate_field, FieldKind};

use crate::grid::{flat_index, volume};
use crate::{Error, Mask3, Result, ScalarGrid};

pub const REFINEMENT_RATIO: usize = 2;

/// Inclusive cell-index box in one level's index space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl IndexBox {
    pub fn new(lo: [i64; 3], hi: [i64; 3]) -> Result<Self> {
        let b = Self { lo, hi };
        if !b.is_valid() {
            return Err(Error::InvalidDims(format!("box lo {lo:?} exceeds hi {hi:?}")));
        }
        Ok(b)
    }

    /// Box covering `[0, dims)`.
    pub fn from_dims(dims: [usize; 3]) -> Self {
        Self {
            lo: [0; 3],
            hi: [dims[0] as i64 - 1, dims[1] as i64 - 1, dims[2] as i64 - 1],
        }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.lo[a] <= self.hi[a])
    }

    pub fn shape(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| (self.hi[a] - self.lo[a] + 1).max(0) as usize)
    }

    pub fn volume(&self) -> usize {
        volume(self.shape())
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] <= self.hi[a])
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    pub fn intersection(&self, other: &IndexBox) -> Option<IndexBox> {
        let b = IndexBox {
            lo: [0, 1, 2].map(|a| self.lo[a].max(other.lo[a])),
            hi: [0, 1, 2].map(|a| self.hi[a].min(other.hi[a])),
        };
        b.is_valid().then_some(b)
    }

    /// Index box of the parent cells one level coarser.
    pub fn coarsen(&self, ratio: usize) -> IndexBox {
        let r = ratio as i64;
        IndexBox {
            lo: self.lo.map(|v| v.div_euclid(r)),
            hi: self.hi.map(|v| v.div_euclid(r)),
        }
    }

    /// Index box of all children one level finer.
    pub fn refine(&self, ratio: usize) -> IndexBox {
        let r = ratio as i64;
        IndexBox {
            lo: self.lo.map(|v| v * r),
            hi: self.hi.map(|v| (v + 1) * r - 1),
        }
    }

    /// Cells in x-fastest order.
    pub fn cells(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let [lo, hi] = [self.lo, self.hi];
        (lo[2]..=hi[2]).flat_map(move |k| {
            (lo[1]..=hi[1]).flat_map(move |j| (lo[0]..=hi[0]).map(move |i| [i, j, k]))
        })
    }

    /// Flat x-fastest offset of `p` inside the box.
    #[inline]
    pub fn local_index(&self, p: [i64; 3]) -> usize {
        let s = self.shape();
        flat_index(
            s,
            (p[0] - self.lo[0]) as usize,
            (p[1] - self.lo[1]) as usize,
            (p[2] - self.lo[2]) as usize,
        )
    }
}

/// One rectangular block of cells and its data.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub bounds: IndexBox,
    pub data: Vec<f64>,
}

impl Patch {
    pub fn new(bounds: IndexBox, data: Vec<f64>) -> Result<Self> {
        if !bounds.is_valid() {
            return Err(Error::InvalidDims(format!("invalid patch box {bounds:?}")));
        }
        if data.len() != bounds.volume() {
            return Err(Error::InvalidDims(format!(
                "patch box holds {} cells but {} values were given",
                bounds.volume(),
                data.len()
            )));
        }
        Ok(Self { bounds, data })
    }

    pub fn from_grid(lo: [i64; 3], grid: ScalarGrid) -> Self {
        let d = grid.dims();
        let bounds = IndexBox {
            lo,
            hi: [0, 1, 2].map(|a| lo[a] + d[a] as i64 - 1),
        };
        Self { bounds, data: grid.into_values() }
    }

    pub fn get(&self, p: [i64; 3]) -> f64 {
        self.data[self.bounds.local_index(p)]
    }

    pub fn to_grid(&self) -> Result<ScalarGrid> {
        ScalarGrid::new(self.bounds.shape(), self.data.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmrLevel {
    pub level_index: usize,
    /// Physical edge length of one cell; 1.0 on the coarsest level.
    pub cell_size: f64,
    pub patches: Vec<Patch>,
}

impl AmrLevel {
    pub fn new(level_index: usize, patches: Vec<Patch>) -> Self {
        Self {
            level_index,
            cell_size: level_cell_size(level_index),
            patches,
        }
    }

    pub fn covered_cells(&self) -> usize {
        self.patches.iter().map(|p| p.bounds.volume()).sum()
    }
}

pub fn level_cell_size(level: usize) -> f64 {
    (REFINEMENT_RATIO as f64).powi(-(level as i32))
}

/// Dense view of one level: which cells carry data, and their values.
#[derive(Clone, Debug)]
pub struct LevelRaster {
    pub dims: [usize; 3],
    pub present: Mask3,
    pub values: Vec<f64>,
}

impl LevelRaster {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        flat_index(self.dims, i, j, k)
    }

    /// Value at a possibly out-of-range cell, `None` when absent.
    #[inline]
    pub fn lookup(&self, p: [i64; 3]) -> Option<f64> {
        if (0..3).any(|a| p[a] < 0 || p[a] >= self.dims[a] as i64) {
            return None;
        }
        let idx = self.index(p[0] as usize, p[1] as usize, p[2] as usize);
        self.present.values[idx].then(|| self.values[idx])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmrDataset {
    pub coarse_dims: [usize; 3],
    pub refinement_ratio: usize,
    pub levels: Vec<AmrLevel>,
}

/// One broken dataset invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoLevels,
    RefinementRatio(usize),
    LevelIndex { level: usize, found: usize },
    CellSize { level: usize },
    InvalidBox { level: usize, patch: usize },
    DataLength { level: usize, patch: usize },
    OutsideDomain { level: usize, patch: usize },
    Overlap { level: usize, first: usize, second: usize },
    Nesting { level: usize, patch: usize },
    CoarseCoverage,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NoLevels => write!(f, "dataset has no levels"),
            Violation::RefinementRatio(r) => write!(f, "unsupported refinement ratio {r}"),
            Violation::LevelIndex { level, found } => {
                write!(f, "level index mismatch at level {level} (found {found})")
            }
            Violation::CellSize { level } => write!(f, "cell size mismatch at level {level}"),
            Violation::InvalidBox { level, patch } => {
                write!(f, "invalid box at level {level} patch {patch}")
            }
            Violation::DataLength { level, patch } => {
                write!(f, "data length mismatch at level {level} patch {patch}")
            }
            Violation::OutsideDomain { level, patch } => {
                write!(f, "domain violation at level {level} patch {patch}")
            }
            Violation::Overlap { level, first, second } => {
                write!(f, "overlap at level {level} patches {first} and {second}")
            }
            Violation::Nesting { level, patch } => {
                write!(f, "nesting violation at level {level} patch {patch}")
            }
            Violation::CoarseCoverage => write!(f, "level 0 does not cover the domain"),
        }
    }
}

impl AmrDataset {
    /// Builds a dataset with the fixed refinement ratio, numbering levels in
    /// order. Call [`AmrDataset::validate`] to check the invariants.
    pub fn new(coarse_dims: [usize; 3], levels: Vec<Vec<Patch>>) -> Self {
        Self {
            coarse_dims,
            refinement_ratio: REFINEMENT_RATIO,
            levels: levels
                .into_iter()
                .enumerate()
                .map(|(l, patches)| AmrLevel::new(l, patches))
                .collect(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_dims(&self, level: usize) -> [usize; 3] {
        let s = self.refinement_ratio.pow(level as u32);
        self.coarse_dims.map(|d| d * s)
    }

    pub fn finest_dims(&self) -> [usize; 3] {
        self.level_dims(self.num_levels().saturating_sub(1))
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.num_levels() {
            return Err(Error::LevelOutOfRange { level, num_levels: self.num_levels() });
        }
        Ok(())
    }

    /// Every violated invariant, in a fixed order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.levels.is_empty() {
            out.push(Violation::NoLevels);
            return out;
        }
        if self.refinement_ratio != REFINEMENT_RATIO {
            out.push(Violation::RefinementRatio(self.refinement_ratio));
            return out;
        }
        for (l, level) in self.levels.iter().enumerate() {
            if level.level_index != l {
                out.push(Violation::LevelIndex { level: l, found: level.level_index });
            }
            if level.cell_size != level_cell_size(l) {
                out.push(Violation::CellSize { level: l });
            }
            let domain = IndexBox::from_dims(self.level_dims(l));
            for (p, patch) in level.patches.iter().enumerate() {
                if !patch.bounds.is_valid() {
                    out.push(Violation::InvalidBox { level: l, patch: p });
                    continue;
                }
                if patch.data.len() != patch.bounds.volume() {
                    out.push(Violation::DataLength { level: l, patch: p });
                }
                if l == 0 && !domain.contains_box(&patch.bounds) {
                    out.push(Violation::OutsideDomain { level: l, patch: p });
                }
            }
            for a in 0..level.patches.len() {
                for b in a + 1..level.patches.len() {
                    let (pa, pb) = (&level.patches[a].bounds, &level.patches[b].bounds);
                    if pa.is_valid() && pb.is_valid() && pa.intersection(pb).is_some() {
                        out.push(Violation::Overlap { level: l, first: a, second: b });
                    }
                }
            }
            if l > 0 {
                let parent = self.occupancy(l - 1);
                let parent_domain = IndexBox::from_dims(parent.dims);
                for (p, patch) in level.patches.iter().enumerate() {
                    if !patch.bounds.is_valid() {
                        continue;
                    }
                    let cb = patch.bounds.coarsen(self.refinement_ratio);
                    let nested = parent_domain.contains_box(&cb)
                        && cb
                            .cells()
                            .all(|c| parent.get(c[0] as usize, c[1] as usize, c[2] as usize));
                    if !nested {
                        out.push(Violation::Nesting { level: l, patch: p });
                    }
                }
            }
        }
        if !self.occupancy(0).all() {
            out.push(Violation::CoarseCoverage);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::InvalidDataset(msgs.join("; ")))
        }
    }

    /// Cells of `level` that carry data. Out-of-domain patch cells are ignored.
    pub fn occupancy(&self, level: usize) -> Mask3 {
        let dims = self.level_dims(level);
        let mut mask = Mask3::new(dims, false);
        let domain = IndexBox::from_dims(dims);
        for patch in &self.levels[level].patches {
            if let Some(b) = patch.bounds.intersection(&domain) {
                for c in b.cells() {
                    mask.set(c[0] as usize, c[1] as usize, c[2] as usize, true);
                }
            }
        }
        mask
    }

    /// Dense copy of one level's patch union.
    pub fn rasterize(&self, level: usize) -> Result<LevelRaster> {
        self.check_level(level)?;
        let dims = self.level_dims(level);
        let mut present = Mask3::new(dims, false);
        let mut values = vec![0.0; volume(dims)];
        for patch in &self.levels[level].patches {
            for c in patch.bounds.cells() {
                let idx = flat_index(dims, c[0] as usize, c[1] as usize, c[2] as usize);
                present.values[idx] = true;
                values[idx] = patch.get(c);
            }
        }
        Ok(LevelRaster { dims, present, values })
    }

    /// Flattens the hierarchy to the finest index space: coarse cells are
    /// replicated over their children, finer patches overwrite their
    /// footprint.
    pub fn uniformize(&self) -> Result<ScalarGrid> {
        self.ensure_valid()?;
        let finest = self.num_levels() - 1;
        let dims = self.finest_dims();
        let mut out = vec![0.0; volume(dims)];
        for (l, level) in self.levels.iter().enumerate() {
            let s = self.refinement_ratio.pow((finest - l) as u32) as i64;
            for patch in &level.patches {
                for (c, &v) in patch.bounds.cells().zip(&patch.data) {
                    for dk in 0..s {
                        for dj in 0..s {
                            let row = flat_index(
                                dims,
                                (c[0] * s) as usize,
                                (c[1] * s + dj) as usize,
                                (c[2] * s + dk) as usize,
                            );
                            out[row..row + s as usize].fill(v);
                        }
                    }
                }
            }
        }
        ScalarGrid::new(dims, out)
    }

    /// Cells of `level` shadowed by a patch of `level + 1`.
    pub fn redundant_mask(&self, level: usize) -> Result<Mask3> {
        if level + 1 >= self.num_levels() {
            return Err(Error::LevelOutOfRange { level, num_levels: self.num_levels() });
        }
        let dims = self.level_dims(level);
        let mut mask = Mask3::new(dims, false);
        let domain = IndexBox::from_dims(dims);
        for patch in &self.levels[level + 1].patches {
            if let Some(b) = patch.bounds.coarsen(self.refinement_ratio).intersection(&domain) {
                for c in b.cells() {
                    mask.set(c[0] as usize, c[1] as usize, c[2] as usize, true);
                }
            }
        }
        Ok(mask)
    }

    /// Fraction of the domain volume where each level holds the finest data,
    /// coarse to fine. Sums to one for a valid dataset.
    pub fn level_densities(&self) -> Vec<f64> {
        let n = self.num_levels();
        let mut out = Vec::with_capacity(n);
        for l in 0..n {
            let total = volume(self.level_dims(l)) as f64;
            let covered = self.occupancy(l);
            let leaf = if l + 1 < n {
                let shadow = self.redundant_mask(l).expect("level in range");
                covered
                    .values
                    .iter()
                    .zip(&shadow.values)
                    .filter(|(&c, &s)| c && !s)
                    .count()
            } else {
                covered.count()
            };
            out.push(leaf as f64 / total);
        }
        out
    }

    /// Fraction of the domain covered by `level`'s patches.
    pub fn coverage(&self, level: usize) -> f64 {
        self.occupancy(level).count() as f64 / volume(self.level_dims(level)) as f64
    }

    /// Total number of stored values, redundant ones included.
    pub fn stored_values(&self) -> usize {
        self.levels.iter().map(AmrLevel::covered_cells).sum()
    }

    /// Returns a copy with every patch's data replaced through `f`, which
    /// receives `(level, patch index, patch)`.
    pub fn map_patches(
        &self,
        mut f: impl FnMut(usize, usize, &Patch) -> Result<Vec<f64>>,
    ) -> Result<AmrDataset> {
        let mut out = self.clone();
        for (l, level) in out.levels.iter_mut().enumerate() {
            for (p, patch) in level.patches.iter_mut().enumerate() {
                let data = f(l, p, &self.levels[l].patches[p])?;
                *patch = Patch::new(patch.bounds, data)?;
            }
        }
        Ok(out)
    }

    /// Bitwise equality of structure and data.
    pub fn bit_eq(&self, other: &AmrDataset) -> bool {
        self.coarse_dims == other.coarse_dims
            && self.refinement_ratio == other.refinement_ratio
            && self.levels.len() == other.levels.len()
            && self.levels.iter().zip(&other.levels).all(|(a, b)| {
                a.level_index == b.level_index
                    && a.cell_size.to_bits() == b.cell_size.to_bits()
                    && a.patches.len() == b.patches.len()
                    && a.patches.iter().zip(&b.patches).all(|(pa, pb)| {
                        pa.bounds == pb.bounds
                            && pa.data.len() == pb.data.len()
                            && pa.data.iter().zip(&pb.data).all(|(x, y)| x.to_bits() == y.to_bits())
                    })
            })
    }
}
