//! End-to-end runs: generate → build AMR → compress per level → decompress
//! → verify → extract → measure, plus the full experiment matrix.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amr::{build_amr, build_amr_from_tiles, generate_field, AmrDataset, FieldKind, IndexBox, Patch};
use crate::codec::{compress_with_abs, decompress, BoundMode, CodecId, CompressedField, ErrorBound};
use crate::iso::{census, extract, CrackCensus, Method, TriMesh};
use crate::metrics::{make_report, psnr, rssim, ssim3d, QualityReport, QualityRow, SSIM_WINDOW};
use crate::{Error, Result, ScalarGrid};

pub const DEFAULT_TILE: usize = 8;
pub const DEFAULT_DIMS: usize = 64;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BOUNDS: [f64; 3] = [1e-4, 1e-3, 1e-2];
pub const SEED_ENV: &str = "AMRLAB_SEED";

/// Refinement threshold giving roughly 40% (smooth) and 60% (irregular)
/// fine coverage on 64³ fields.
pub fn default_theta(kind: FieldKind) -> f64 {
    match kind {
        FieldKind::Smooth => 3.5,
        FieldKind::Irregular => 38.0,
    }
}

/// `AMRLAB_SEED` when set and parseable, otherwise `flag`.
pub fn effective_seed(flag: u64) -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(flag)
}

pub fn generate_dataset(kind: FieldKind, dims: usize, seed: u64, theta: f64) -> Result<AmrDataset> {
    let fine = generate_field(kind, [dims; 3], seed)?;
    build_amr(&fine, theta, DEFAULT_TILE)
}

/// Mean of the uniformized field, the default iso value.
pub fn default_iso(ds: &AmrDataset) -> Result<f64> {
    let u = ds.uniformize()?;
    Ok(u.values().iter().sum::<f64>() / u.len() as f64)
}

/// Two-level sphere test case: signed distance to a sphere of radius 9.7
/// centred in a 32³ coarse domain, with the central 2³ tiles (coarse cells
/// 8..24 on each axis) refined, so the level interface cuts the surface.
pub fn two_level_sphere() -> Result<AmrDataset> {
    let c = 16.0;
    let fine = ScalarGrid::from_fn([64; 3], |i, j, k| {
        let p = [i, j, k].map(|x| (x as f64 + 0.5) * 0.5 - c);
        (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 9.7
    })?;
    build_amr_from_tiles(&fine, DEFAULT_TILE, |t| t.iter().all(|&x| (1..3).contains(&x)))
}

/// Every patch of a dataset compressed on its own, sharing one absolute
/// bound per level.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedDataset {
    pub coarse_dims: [usize; 3],
    pub refinement_ratio: usize,
    pub codec: CodecId,
    pub bound: ErrorBound,
    pub level_eb_abs: Vec<f64>,
    pub levels: Vec<Vec<(IndexBox, CompressedField)>>,
}

/// Value range over all patches of one level.
pub fn level_range(ds: &AmrDataset, level: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &ds.levels[level].patches {
        for &v in &p.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo <= hi {
        hi - lo
    } else {
        0.0
    }
}

pub fn compress_dataset(ds: &AmrDataset, codec: CodecId, bound: ErrorBound) -> Result<CompressedDataset> {
    ds.ensure_valid()?;
    let mut level_eb_abs = Vec::with_capacity(ds.num_levels());
    let mut levels = Vec::with_capacity(ds.num_levels());
    for (l, level) in ds.levels.iter().enumerate() {
        let eb_abs = bound.resolve_for_range(level_range(ds, l));
        let patches = level
            .patches
            .par_iter()
            .map(|p| Ok((p.bounds, compress_with_abs(&p.to_grid()?, codec, bound, eb_abs)?)))
            .collect::<Result<Vec<_>>>()?;
        level_eb_abs.push(eb_abs);
        levels.push(patches);
    }
    Ok(CompressedDataset {
        coarse_dims: ds.coarse_dims,
        refinement_ratio: ds.refinement_ratio,
        codec,
        bound,
        level_eb_abs,
        levels,
    })
}

pub fn decompress_dataset(cd: &CompressedDataset) -> Result<AmrDataset> {
    let mut levels = Vec::with_capacity(cd.levels.len());
    for level in &cd.levels {
        let patches = level
            .par_iter()
            .map(|(b, cf)| Patch::new(*b, decompress(cf)?.into_values()))
            .collect::<Result<Vec<_>>>()?;
        levels.push(patches);
    }
    let mut ds = AmrDataset::new(cd.coarse_dims, levels);
    ds.refinement_ratio = cd.refinement_ratio;
    ds.ensure_valid()?;
    Ok(ds)
}

impl CompressedDataset {
    pub fn compressed_bytes(&self) -> usize {
        self.levels.iter().flatten().map(|(_, cf)| cf.len()).sum()
    }

    pub fn raw_bytes(&self) -> usize {
        self.levels.iter().flatten().map(|(b, _)| 8 * b.volume()).sum()
    }

    pub fn compression_ratio(&self) -> f64 {
        self.raw_bytes() as f64 / self.compressed_bytes() as f64
    }

    pub fn level_compression_ratio(&self, level: usize) -> f64 {
        let raw: usize = self.levels[level].iter().map(|(b, _)| 8 * b.volume()).sum();
        let comp: usize = self.levels[level].iter().map(|(_, cf)| cf.len()).sum();
        raw as f64 / comp as f64
    }
}

#[derive(Serialize, Deserialize)]
struct CompressedManifest {
    version: u32,
    coarse_dims: [usize; 3],
    refinement_ratio: usize,
    codec: String,
    eb_mode: String,
    eb: f64,
    levels: Vec<CompressedLevel>,
}

#[derive(Serialize, Deserialize)]
struct CompressedLevel {
    eb_abs: f64,
    patches: Vec<CompressedPatch>,
}

#[derive(Serialize, Deserialize)]
struct CompressedPatch {
    lo: [i64; 3],
    hi: [i64; 3],
    file: String,
}

pub const COMPRESSED_MANIFEST: &str = "compressed.json";

/// Writes `compressed.json` plus one `L{level}_P{patch}.amrz` per patch.
pub fn write_compressed(cd: &CompressedDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut levels = Vec::new();
    for (l, level) in cd.levels.iter().enumerate() {
        let mut patches = Vec::new();
        for (p, (b, cf)) in level.iter().enumerate() {
            let file = format!("L{l}_P{p}.amrz");
            fs::write(dir.join(&file), cf.to_bytes())?;
            patches.push(CompressedPatch { lo: b.lo, hi: b.hi, file });
        }
        levels.push(CompressedLevel { eb_abs: cd.level_eb_abs[l], patches });
    }
    let m = CompressedManifest {
        version: 1,
        coarse_dims: cd.coarse_dims,
        refinement_ratio: cd.refinement_ratio,
        codec: cd.codec.as_str().into(),
        eb_mode: cd.bound.mode.as_str().into(),
        eb: cd.bound.value,
        levels,
    };
    fs::write(dir.join(COMPRESSED_MANIFEST), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

pub fn read_compressed(dir: &Path) -> Result<CompressedDataset> {
    let text = fs::read_to_string(dir.join(COMPRESSED_MANIFEST))?;
    let m: CompressedManifest =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("{COMPRESSED_MANIFEST}: {e}")))?;
    let bound = ErrorBound::new(m.eb_mode.parse()?, m.eb)?;
    let codec: CodecId = m.codec.parse()?;
    let mut levels = Vec::new();
    let mut level_eb_abs = Vec::new();
    for level in m.levels {
        let mut patches = Vec::new();
        for p in level.patches {
            if p.file.contains('/') || p.file.contains('\\') || p.file.contains("..") {
                return Err(Error::Malformed(format!("bad patch file name {:?}", p.file)));
            }
            let cf = CompressedField::from_bytes(fs::read(dir.join(&p.file))?)?;
            let b = IndexBox::new(p.lo, p.hi)?;
            if cf.dims != b.shape() {
                return Err(Error::Malformed(format!("{}: dims {:?} do not match box", p.file, cf.dims)));
            }
            patches.push((b, cf));
        }
        level_eb_abs.push(level.eb_abs);
        levels.push(patches);
    }
    Ok(CompressedDataset {
        coarse_dims: m.coarse_dims,
        refinement_ratio: m.refinement_ratio,
        codec,
        bound,
        level_eb_abs,
        levels,
    })
}

/// Largest pointwise error per level, checked against that level's bound.
/// Fails with [`Error::InvalidErrorBound`] on any violation.
pub fn verify_bound(orig: &AmrDataset, recon: &AmrDataset, cd: &CompressedDataset) -> Result<Vec<f64>> {
    if orig.num_levels() != recon.num_levels() {
        return Err(Error::InvalidDataset("level count differs".into()));
    }
    let mut out = Vec::new();
    for (l, (a, b)) in orig.levels.iter().zip(&recon.levels).enumerate() {
        let mut max_err: f64 = 0.0;
        if a.patches.len() != b.patches.len() {
            return Err(Error::InvalidDataset(format!("level {l}: patch count differs")));
        }
        for (p, q) in a.patches.iter().zip(&b.patches) {
            if p.bounds != q.bounds {
                return Err(Error::InvalidDataset(format!("level {l}: patch boxes differ")));
            }
            for (x, y) in p.data.iter().zip(&q.data) {
                max_err = max_err.max((x - y).abs());
            }
        }
        let eb = cd.level_eb_abs[l];
        if !(max_err <= eb) {
            return Err(Error::InvalidErrorBound(format!(
                "level {l}: max error {max_err:e} exceeds bound {eb:e}"
            )));
        }
        out.push(max_err);
    }
    Ok(out)
}

/// Quality of one reconstruction, before iso-surface extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldQuality {
    pub cr: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

pub fn field_quality(orig: &AmrDataset, recon: &AmrDataset, cd: &CompressedDataset) -> Result<FieldQuality> {
    let a = orig.uniformize()?;
    let b = recon.uniformize()?;
    Ok(FieldQuality { cr: cd.compression_ratio(), psnr_db: psnr(&a, &b)?, ssim: ssim3d(&a, &b, SSIM_WINDOW)? })
}

pub fn quality_row(cd: &CompressedDataset, q: &FieldQuality, method: Method, c: &CrackCensus) -> QualityRow {
    QualityRow {
        codec: cd.codec.as_str().into(),
        eb_mode: cd.bound.mode.as_str().into(),
        eb: cd.bound.value,
        cr: q.cr,
        psnr_db: q.psnr_db,
        ssim: q.ssim,
        rssim: rssim(q.ssim),
        method: method.as_str().into(),
        interface_open_edges: c.interface_open_edges,
        domain_open_edges: c.domain_open_edges,
        open_edge_length: c.total_open_edge_length,
    }
}

pub fn extract_with_census(ds: &AmrDataset, iso: f64, method: Method) -> Result<(TriMesh, CrackCensus)> {
    let mesh = extract(ds, iso, method)?;
    let c = census(ds, &mesh, method);
    Ok((mesh, c))
}

/// Settings of a full experiment sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub kinds: Vec<FieldKind>,
    pub dims: usize,
    pub seed: u64,
    /// `None` uses [`default_theta`] per kind.
    pub theta: Option<f64>,
    pub codecs: Vec<CodecId>,
    pub bound_mode: BoundMode,
    pub bounds: Vec<f64>,
    /// `None` uses the mean of each original uniformized field.
    pub iso: Option<f64>,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            kinds: vec![FieldKind::Smooth, FieldKind::Irregular],
            dims: DEFAULT_DIMS,
            seed: DEFAULT_SEED,
            theta: None,
            codecs: CodecId::ALL.to_vec(),
            bound_mode: BoundMode::Relative,
            bounds: DEFAULT_BOUNDS.to_vec(),
            iso: None,
            methods: Method::ALL.to_vec(),
            out_dir: out_dir.into(),
            jobs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &eb in &self.bounds {
            ErrorBound::new(self.bound_mode, eb)?;
        }
        if self.kinds.is_empty() || self.codecs.is_empty() || self.bounds.is_empty() || self.methods.is_empty() {
            return Err(Error::Unsupported("empty sweep axis".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Unsupported("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn expected_rows(&self) -> usize {
        self.kinds.len() * self.codecs.len() * self.bounds.len() * self.methods.len()
    }
}

/// One matrix row with the field kind that produced it (the report format
/// itself has no kind column).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRow {
    pub kind: FieldKind,
    pub row: QualityRow,
}

struct Cell {
    kind_index: usize,
    codec: CodecId,
    eb: f64,
}

fn cell_file(kind: FieldKind, codec: CodecId, mode: BoundMode, eb: f64) -> String {
    format!("{}_{}_{}{:e}.csv", kind.as_str(), codec.as_str(), mode.as_str(), eb)
}

/// Runs the sweep. Every (kind, codec, bound) cell writes its rows to
/// `out_dir/cells/`; the merged report is `out_dir/report.csv` (kinds in
/// configuration order), with one `report_<kind>.csv` per kind.
pub fn run_matrix(cfg: &RunConfig) -> Result<Vec<MatrixRow>> {
    cfg.validate()?;
    let cells_dir = cfg.out_dir.join("cells");
    fs::create_dir_all(&cells_dir)?;

    let datasets = cfg
        .kinds
        .iter()
        .map(|&k| {
            let theta = cfg.theta.unwrap_or_else(|| default_theta(k));
            let ds = generate_dataset(k, cfg.dims, cfg.seed, theta)?;
            let iso = match cfg.iso {
                Some(v) => v,
                None => default_iso(&ds)?,
            };
            Ok((ds, iso))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for kind_index in 0..cfg.kinds.len() {
        for &codec in &cfg.codecs {
            for &eb in &cfg.bounds {
                cells.push(Cell { kind_index, codec, eb });
            }
        }
    }

    let run_cell = |cell: &Cell| -> Result<Vec<QualityRow>> {
        let (ds, iso) = &datasets[cell.kind_index];
        let bound = ErrorBound::new(cfg.bound_mode, cell.eb)?;
        let cd = compress_dataset(ds, cell.codec, bound)?;
        let recon = decompress_dataset(&cd)?;
        verify_bound(ds, &recon, &cd)?;
        let q = field_quality(ds, &recon, &cd)?;
        let mut rows = Vec::new();
        for &m in &cfg.methods {
            let (_, c) = extract_with_census(&recon, *iso, m)?;
            rows.push(quality_row(&cd, &q, m, &c));
        }
        let name = cell_file(cfg.kinds[cell.kind_index], cell.codec, cfg.bound_mode, cell.eb);
        make_report(rows.clone()).write(&cells_dir.join(name))?;
        Ok(rows)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<QualityRow>>> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let mut out = Vec::with_capacity(cfg.expected_rows());
    for (cell, rows) in cells.iter().zip(results) {
        let kind = cfg.kinds[cell.kind_index];
        out.extend(rows?.into_iter().map(|row| MatrixRow { kind, row }));
    }
    // Merge from the per-cell files so the report is exactly what was written.
    let mut merged = Vec::new();
    for cell in &cells {
        let name = cell_file(cfg.kinds[cell.kind_index], cell.codec, cfg.bound_mode, cell.eb);
        merged.extend(QualityReport::from_csv(&fs::read_to_string(cells_dir.join(name))?)?.rows);
    }
    make_report(merged).write(&cfg.out_dir.join("report.csv"))?;
    for &kind in &cfg.kinds {
        let rows = out.iter().filter(|r| r.kind == kind).map(|r| r.row.clone()).collect();
        make_report(rows).write(&cfg.out_dir.join(format!("report_{}.csv", kind.as_str())))?;
    }
    Ok(out)
}
