//! Reconstruction quality metrics and the tabular report.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::flat_index;
use crate::{Error, Result, ScalarGrid};

pub const SSIM_WINDOW: usize = 7;

fn same_dims(a: &ScalarGrid, b: &ScalarGrid) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::InvalidDims(format!("shape mismatch {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

pub fn mse(orig: &ScalarGrid, recon: &ScalarGrid) -> Result<f64> {
    same_dims(orig, recon)?;
    let s: f64 = orig.values().iter().zip(recon.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / orig.len() as f64)
}

/// Peak signal-to-noise ratio in dB, using the value range of `orig` as the
/// peak. Identical inputs give `+inf`.
pub fn psnr(orig: &ScalarGrid, recon: &ScalarGrid) -> Result<f64> {
    let range = orig.value_range();
    if !(range > 0.0) {
        return Err(Error::InvalidDataset("psnr needs a non-constant reference".into()));
    }
    let m = mse(orig, recon)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * range.log10() - 10.0 * m.log10())
}

/// Sums over every valid `w`-wide window along one axis.
fn box_sum_axis(src: &[f64], dims: [usize; 3], axis: usize, w: usize) -> (Vec<f64>, [usize; 3]) {
    let mut out_dims = dims;
    out_dims[axis] = dims[axis] + 1 - w;
    let mut out = vec![0.0; out_dims.iter().product()];
    for k in 0..out_dims[2] {
        for j in 0..out_dims[1] {
            for i in 0..out_dims[0] {
                let mut p = [i, j, k];
                let mut s = 0.0;
                for _ in 0..w {
                    s += src[flat_index(dims, p[0], p[1], p[2])];
                    p[axis] += 1;
                }
                out[flat_index(out_dims, i, j, k)] = s;
            }
        }
    }
    (out, out_dims)
}

fn box_mean(src: &[f64], dims: [usize; 3], w: usize) -> Vec<f64> {
    let (a, d) = box_sum_axis(src, dims, 0, w);
    let (b, d) = box_sum_axis(&a, d, 1, w);
    let (c, _) = box_sum_axis(&b, d, 2, w);
    let n = (w * w * w) as f64;
    c.into_iter().map(|s| s / n).collect()
}

/// Mean structural similarity over all valid `window³` cubes, uniform
/// weights, stride 1. Constants use the range of `orig`.
pub fn ssim3d(orig: &ScalarGrid, recon: &ScalarGrid, window: usize) -> Result<f64> {
    same_dims(orig, recon)?;
    let dims = orig.dims();
    if window == 0 || dims.iter().any(|&d| d < window) {
        return Err(Error::InvalidDims(format!("ssim window {window} exceeds dims {dims:?}")));
    }
    let l = orig.value_range();
    let c1 = (0.01 * l).powi(2);
    let c2 = (0.03 * l).powi(2);
    let x = orig.values();
    let y = recon.values();
    let prod = |f: &dyn Fn(usize) -> f64| (0..x.len()).map(f).collect::<Vec<f64>>();
    let fields = [
        x.to_vec(),
        y.to_vec(),
        prod(&|i| x[i] * x[i]),
        prod(&|i| y[i] * y[i]),
        prod(&|i| x[i] * y[i]),
    ];
    let means: Vec<Vec<f64>> = fields.iter().map(|f| box_mean(f, dims, window)).collect();
    let n = means[0].len();
    let mut total = 0.0;
    for w in 0..n {
        let (mx, my) = (means[0][w], means[1][w]);
        let vx = (means[2][w] - mx * mx).max(0.0);
        let vy = (means[3][w] - my * my).max(0.0);
        let cxy = means[4][w] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        total += if den == 0.0 { 1.0 } else { num / den };
    }
    Ok(total / n as f64)
}

pub fn rssim(ssim: f64) -> f64 {
    1.0 - ssim
}

/// Mean absolute jump between neighbouring cells that straddle a block
/// boundary (`p + 1` a multiple of `block`), pooled over all three axes.
pub fn block_discontinuity(grid: &ScalarGrid, block: usize) -> f64 {
    let dims = grid.dims();
    let v = grid.values();
    let mut sum = 0.0;
    let mut count = 0usize;
    for axis in 0..3 {
        let step = [1, dims[0], dims[0] * dims[1]][axis];
        for p in (block - 1..dims[axis].saturating_sub(1)).step_by(block) {
            for_each_plane(dims, axis, p, |idx| {
                sum += (v[idx + step] - v[idx]).abs();
                count += 1;
            });
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Same statistic on a vertex lattice whose cells are blocked by `block`:
/// the vertex at a block boundary sits on the plane, so both half-steps
/// touching it are pooled.
pub fn vertex_block_discontinuity(grid: &ScalarGrid, block: usize) -> f64 {
    let dims = grid.dims();
    let v = grid.values();
    let mut sum = 0.0;
    let mut count = 0usize;
    for axis in 0..3 {
        let step = [1, dims[0], dims[0] * dims[1]][axis];
        // Interior planes only; the lattice ends are domain faces.
        for q in (block..dims[axis].saturating_sub(1)).step_by(block) {
            for_each_plane(dims, axis, q, |idx| {
                sum += (v[idx] - v[idx - step]).abs() + (v[idx + step] - v[idx]).abs();
                count += 2;
            });
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn for_each_plane(dims: [usize; 3], axis: usize, p: usize, mut f: impl FnMut(usize)) {
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for u in 0..dims[b] {
        for t in 0..dims[a] {
            let mut c = [0; 3];
            c[axis] = p;
            c[a] = t;
            c[b] = u;
            f(flat_index(dims, c[0], c[1], c[2]));
        }
    }
}

/// One line of the quality report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub codec: String,
    pub eb_mode: String,
    pub eb: f64,
    pub cr: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub rssim: f64,
    pub method: String,
    pub interface_open_edges: u64,
    pub domain_open_edges: u64,
    pub open_edge_length: f64,
}

pub const CSV_HEADER: &str =
    "codec,eb_mode,eb,cr,psnr_db,ssim,rssim,method,interface_open_edges,domain_open_edges,open_edge_length";

fn fmt_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl QualityRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.codec,
            self.eb_mode,
            fmt_real(self.eb),
            fmt_real(self.cr),
            fmt_real(self.psnr_db),
            fmt_real(self.ssim),
            fmt_real(self.rssim),
            self.method,
            self.interface_open_edges,
            self.domain_open_edges,
            fmt_real(self.open_edge_length),
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 11 {
            return Err(Error::Malformed(format!("expected 11 fields, got {}", f.len())));
        }
        let real = |s: &str| -> Result<f64> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => s.parse().map_err(|_| Error::Malformed(format!("bad number {s:?}"))),
            }
        };
        let int = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::Malformed(format!("bad count {s:?}"))) };
        Ok(Self {
            codec: f[0].into(),
            eb_mode: f[1].into(),
            eb: real(f[2])?,
            cr: real(f[3])?,
            psnr_db: real(f[4])?,
            ssim: real(f[5])?,
            rssim: real(f[6])?,
            method: f[7].into(),
            interface_open_edges: int(f[8])?,
            domain_open_edges: int(f[9])?,
            open_edge_length: real(f[10])?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
}

pub fn make_report(rows: Vec<QualityRow>) -> QualityReport {
    QualityReport { rows }
}

impl QualityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.to_csv());
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            _ => return Err(Error::Malformed("missing report header".into())),
        }
        Ok(Self { rows: lines.map(QualityRow::from_csv).collect::<Result<_>>()? })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3]) -> ScalarGrid {
        ScalarGrid::from_fn(dims, |i, j, k| (i + 2 * j + 3 * k) as f64).unwrap()
    }

    #[test]
    fn psnr_closed_form() {
        let a = ScalarGrid::from_fn([8, 8, 8], |i, _, _| if i == 0 { 0.0 } else { 1.0 }).unwrap();
        let b = ScalarGrid::new(a.dims(), a.values().iter().map(|v| v + 0.001).collect()).unwrap();
        assert!((psnr(&a, &b).unwrap() - 60.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_identity_and_bounds() {
        let a = ramp([9, 9, 9]);
        assert_eq!(ssim3d(&a, &a, 7).unwrap(), 1.0);
        assert!(ssim3d(&a, &ScalarGrid::filled([6, 6, 6], 0.0).unwrap(), 7).is_err());
    }

    #[test]
    fn box_mean_matches_brute_force() {
        let g = ScalarGrid::from_fn([9, 8, 7], |i, j, k| ((i * 31 + j * 17 + k * 7) % 11) as f64).unwrap();
        let m = box_mean(g.values(), g.dims(), 3);
        let od = [7, 6, 5];
        for k in 0..od[2] {
            for j in 0..od[1] {
                for i in 0..od[0] {
                    let mut s = 0.0;
                    for c in 0..3 {
                        for b in 0..3 {
                            for a in 0..3 {
                                s += g.get(i + a, j + b, k + c);
                            }
                        }
                    }
                    assert!((m[flat_index(od, i, j, k)] - s / 27.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn discontinuity_sees_only_block_planes() {
        // Piecewise-constant in 6-wide slabs along x with unit steps.
        let g = ScalarGrid::from_fn([12, 6, 6], |i, _, _| (i / 6) as f64).unwrap();
        // One x-plane of 36 unit jumps; y/z have no interior planes at 6.
        assert_eq!(block_discontinuity(&g, 6), 1.0);
        let v = ScalarGrid::from_fn([13, 7, 7], |i, _, _| i.min(6) as f64).unwrap();
        assert_eq!(vertex_block_discontinuity(&v, 6), 0.5);
    }

    #[test]
    fn csv_roundtrip_with_infinity() {
        let row = QualityRow {
            codec: "LR".into(),
            eb_mode: "rel".into(),
            eb: 1e-3,
            cr: 12.5,
            psnr_db: f64::INFINITY,
            ssim: 1.0,
            rssim: 0.0,
            method: "resample".into(),
            interface_open_edges: 4,
            domain_open_edges: 0,
            open_edge_length: 0.25,
        };
        let rep = make_report(vec![row.clone()]);
        let text = rep.to_csv();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains(",inf,"));
        assert_eq!(QualityReport::from_csv(&text).unwrap(), rep);
    }
}
