//! Block-wise compressor: 6³ blocks, each predicted either by the 3D
//! Lorenzo predictor or by a least-squares plane.
//!
//! Stream layout after the common header and Huffman table:
//! predictor flags (one bit per block), plane coefficients (4 f64 per
//! regression block), per-block code bit counts and outlier counts (varints),
//! the packed code stream length (u64) and bytes, then outliers (f64).

use rayon::prelude::*;

use super::bits::{BitReader, BitWriter, ByteCursor, PutLe};
use super::huffman::HuffmanCode;
use super::quantize::{QuantSink, QuantSource};
use crate::grid::{flat_index, volume};
use crate::{Error, Result, ScalarGrid};

pub const LR_BLOCK: usize = 6;

/// Lorenzo prediction from the seven previously visited neighbours, in the
/// order `(i−1,j,k), (i,j−1,k), (i,j,k−1), (i−1,j−1,k), (i−1,j,k−1),
/// (i,j−1,k−1), (i−1,j−1,k−1)`. Missing neighbours are passed as zero.
#[inline]
pub fn lorenzo3d(n: [f64; 7]) -> f64 {
    n[0] + n[1] + n[2] - n[3] - n[4] - n[5] + n[6]
}

/// Lorenzo prediction at local `(i, j, k)` of a block buffer, treating
/// everything outside the block as zero.
#[inline]
fn lorenzo_local(buf: &[f64], shape: [usize; 3], i: usize, j: usize, k: usize) -> f64 {
    let at = |di: usize, dj: usize, dk: usize| -> f64 {
        if i < di || j < dj || k < dk {
            0.0
        } else {
            buf[flat_index(shape, i - di, j - dj, k - dk)]
        }
    };
    lorenzo3d([
        at(1, 0, 0),
        at(0, 1, 0),
        at(0, 0, 1),
        at(1, 1, 0),
        at(1, 0, 1),
        at(0, 1, 1),
        at(1, 1, 1),
    ])
}

#[inline]
fn plane_predict(c: &[f64; 4], i: usize, j: usize, k: usize) -> f64 {
    c[0] + c[1] * i as f64 + c[2] * j as f64 + c[3] * k as f64
}

/// Least-squares fit of `b0 + b1·i + b2·j + b3·k` over a full block. The
/// centered index columns of a box are orthogonal, so each slope is a
/// one-dimensional regression.
pub fn fit_plane(block: &[f64], shape: [usize; 3]) -> [f64; 4] {
    let n = block.len() as f64;
    let means = shape.map(|s| (s as f64 - 1.0) / 2.0);
    let mut mean_v = 0.0;
    let mut cov = [0.0; 3];
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let v = block[flat_index(shape, i, j, k)];
                mean_v += v;
                cov[0] += (i as f64 - means[0]) * v;
                cov[1] += (j as f64 - means[1]) * v;
                cov[2] += (k as f64 - means[2]) * v;
            }
        }
    }
    mean_v /= n;
    let mut slopes = [0.0; 3];
    for a in 0..3 {
        let s = shape[a] as f64;
        // Σ (i − ī)² over the axis, times the other two extents.
        let ss = (s * (s * s - 1.0) / 12.0) * (n / s);
        slopes[a] = if ss > 0.0 { cov[a] / ss } else { 0.0 };
    }
    let b0 = mean_v - slopes[0] * means[0] - slopes[1] * means[1] - slopes[2] * means[2];
    [b0, slopes[0], slopes[1], slopes[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGeom {
    pub lo: [usize; 3],
    pub shape: [usize; 3],
}

pub fn block_grid(dims: [usize; 3]) -> [usize; 3] {
    dims.map(|d| d.div_ceil(LR_BLOCK))
}

/// Blocks x-fastest over the block grid; boundary blocks are ragged.
pub fn blocks(dims: [usize; 3]) -> Vec<BlockGeom> {
    let nb = block_grid(dims);
    let mut out = Vec::with_capacity(volume(nb));
    for bk in 0..nb[2] {
        for bj in 0..nb[1] {
            for bi in 0..nb[0] {
                let lo = [bi * LR_BLOCK, bj * LR_BLOCK, bk * LR_BLOCK];
                let shape = [0, 1, 2].map(|a| LR_BLOCK.min(dims[a] - lo[a]));
                out.push(BlockGeom { lo, shape });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockPredictor {
    Lorenzo,
    Regression([f64; 4]),
}

/// Picks the predictor with the smaller sum of absolute residuals, both
/// evaluated on original values. Ties go to Lorenzo, which needs no side data.
pub fn select_predictor(block: &[f64], shape: [usize; 3]) -> BlockPredictor {
    let coef = fit_plane(block, shape);
    let mut lorenzo_err = 0.0;
    let mut plane_err = 0.0;
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let v = block[flat_index(shape, i, j, k)];
                lorenzo_err += (v - lorenzo_local(block, shape, i, j, k)).abs();
                plane_err += (v - plane_predict(&coef, i, j, k)).abs();
            }
        }
    }
    if plane_err < lorenzo_err {
        BlockPredictor::Regression(coef)
    } else {
        BlockPredictor::Lorenzo
    }
}

struct EncodedBlock {
    predictor: BlockPredictor,
    sink: QuantSink,
}

fn encode_block(grid: &ScalarGrid, g: BlockGeom, eb_abs: f64, max_code: i32) -> EncodedBlock {
    let orig = grid.extract(g.lo, g.shape).into_values();
    let predictor = select_predictor(&orig, g.shape);
    let mut sink = QuantSink::new(eb_abs, max_code);
    let mut recon = vec![0.0; orig.len()];
    for k in 0..g.shape[2] {
        for j in 0..g.shape[1] {
            for i in 0..g.shape[0] {
                let idx = flat_index(g.shape, i, j, k);
                let pred = match &predictor {
                    BlockPredictor::Lorenzo => lorenzo_local(&recon, g.shape, i, j, k),
                    BlockPredictor::Regression(c) => plane_predict(c, i, j, k),
                };
                recon[idx] = sink.push(orig[idx], pred);
            }
        }
    }
    EncodedBlock { predictor, sink }
}

/// Appends the Huffman table and the LR streams for `grid`; returns the
/// outlier count.
pub(crate) fn encode(grid: &ScalarGrid, eb_abs: f64, max_code: i32, out: &mut Vec<u8>) -> u32 {
    let geoms = blocks(grid.dims());
    let encoded: Vec<EncodedBlock> = geoms
        .par_iter()
        .map(|&g| encode_block(grid, g, eb_abs, max_code))
        .collect();

    let all_codes: Vec<i32> = encoded.iter().flat_map(|b| b.sink.codes.iter().copied()).collect();
    let table = HuffmanCode::from_symbols(&all_codes);
    table.write_table(out);

    let mut flags = vec![0u8; geoms.len().div_ceil(8)];
    for (b, blk) in encoded.iter().enumerate() {
        if matches!(blk.predictor, BlockPredictor::Regression(_)) {
            flags[b / 8] |= 1 << (b % 8);
        }
    }
    out.extend_from_slice(&flags);
    for blk in &encoded {
        if let BlockPredictor::Regression(c) = blk.predictor {
            for v in c {
                out.put_f64(v);
            }
        }
    }

    let mut w = BitWriter::new();
    let mut bit_counts = Vec::with_capacity(encoded.len());
    for blk in &encoded {
        let before = w.bits_written();
        blk.sink.encode_codes(&table, &mut w);
        bit_counts.push(w.bits_written() - before);
    }
    for &c in &bit_counts {
        out.put_varint(c);
    }
    for blk in &encoded {
        out.put_varint(blk.sink.outliers.len() as u64);
    }
    let code_bytes = w.finish();
    out.put_u64(code_bytes.len() as u64);
    out.extend_from_slice(&code_bytes);
    let mut n_outliers = 0u32;
    for blk in &encoded {
        for &v in &blk.sink.outliers {
            out.put_f64(v);
            n_outliers += 1;
        }
    }
    n_outliers
}

/// Parsed LR side information, enough to decode any block independently.
pub(crate) struct LrStreams<'a> {
    pub geoms: Vec<BlockGeom>,
    pub predictors: Vec<BlockPredictor>,
    pub bit_offsets: Vec<u64>,
    pub outlier_offsets: Vec<usize>,
    pub table: HuffmanCode,
    pub code_bytes: &'a [u8],
    pub outliers: Vec<f64>,
    pub eb_abs: f64,
}

impl<'a> LrStreams<'a> {
    pub fn parse(cur: &mut ByteCursor<'a>, dims: [usize; 3], eb_abs: f64, n_outliers: usize) -> Result<Self> {
        let table = HuffmanCode::read_table(cur)?;
        let geoms = blocks(dims);
        let nb = geoms.len();
        let flags = cur.take(nb.div_ceil(8))?;
        let mut predictors = Vec::with_capacity(nb);
        for b in 0..nb {
            if flags[b / 8] >> (b % 8) & 1 == 1 {
                let c = [cur.f64()?, cur.f64()?, cur.f64()?, cur.f64()?];
                predictors.push(BlockPredictor::Regression(c));
            } else {
                predictors.push(BlockPredictor::Lorenzo);
            }
        }
        let mut bit_offsets = Vec::with_capacity(nb + 1);
        let mut acc = 0u64;
        for _ in 0..nb {
            bit_offsets.push(acc);
            acc += cur.varint()?;
        }
        bit_offsets.push(acc);
        let mut outlier_offsets = Vec::with_capacity(nb + 1);
        let mut acc_o = 0usize;
        for _ in 0..nb {
            outlier_offsets.push(acc_o);
            acc_o += cur.varint()? as usize;
        }
        outlier_offsets.push(acc_o);
        if acc_o != n_outliers {
            return Err(Error::Malformed(format!(
                "block outlier counts sum to {acc_o}, header says {n_outliers}"
            )));
        }
        let code_len = cur.u64()? as usize;
        let code_bytes = cur.take(code_len)?;
        if bit_offsets[nb].div_ceil(8) as usize != code_len {
            return Err(Error::Malformed("code stream length disagrees with block bit counts".into()));
        }
        let outliers = (0..n_outliers).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Self { geoms, predictors, bit_offsets, outlier_offsets, table, code_bytes, outliers, eb_abs })
    }

    pub fn decode_block(&self, b: usize) -> Result<Vec<f64>> {
        let g = self.geoms[b];
        let bits = BitReader::at(self.code_bytes, self.bit_offsets[b]);
        let outliers = &self.outliers[self.outlier_offsets[b]..self.outlier_offsets[b + 1]];
        let mut src = QuantSource::new(&self.table, bits, outliers, self.eb_abs);
        let mut recon = vec![0.0; volume(g.shape)];
        for k in 0..g.shape[2] {
            for j in 0..g.shape[1] {
                for i in 0..g.shape[0] {
                    let pred = match &self.predictors[b] {
                        BlockPredictor::Lorenzo => lorenzo_local(&recon, g.shape, i, j, k),
                        BlockPredictor::Regression(c) => plane_predict(c, i, j, k),
                    };
                    recon[flat_index(g.shape, i, j, k)] = src.next(pred)?;
                }
            }
        }
        Ok(recon)
    }

    pub fn decode_all(&self, dims: [usize; 3]) -> Result<ScalarGrid> {
        let decoded: Vec<Vec<f64>> = (0..self.geoms.len())
            .into_par_iter()
            .map(|b| self.decode_block(b))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; volume(dims)];
        for (g, vals) in self.geoms.iter().zip(decoded) {
            for k in 0..g.shape[2] {
                for j in 0..g.shape[1] {
                    let dst = flat_index(dims, g.lo[0], g.lo[1] + j, g.lo[2] + k);
                    let src = flat_index(g.shape, 0, j, k);
                    out[dst..dst + g.shape[0]].copy_from_slice(&vals[src..src + g.shape[0]]);
                }
            }
        }
        ScalarGrid::new(dims, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenzo_of_constant_is_constant() {
        let c = 3.25;
        let buf = vec![c; 27];
        assert_eq!(lorenzo_local(&buf, [3, 3, 3], 2, 2, 2), c);
    }

    #[test]
    fn lorenzo_first_point_predicts_zero() {
        let buf = vec![5.0; 8];
        assert_eq!(lorenzo_local(&buf, [2, 2, 2], 0, 0, 0), 0.0);
    }

    #[test]
    fn lorenzo_exact_on_linear_interior() {
        // Brute force over a 6³ block of an integer-valued linear field.
        let shape = [6, 6, 6];
        let f = |i: usize, j: usize, k: usize| 3.0 * i as f64 - 2.0 * j as f64 + 5.0 * k as f64 + 7.0;
        let mut buf = vec![0.0; 216];
        for k in 0..6 {
            for j in 0..6 {
                for i in 0..6 {
                    buf[flat_index(shape, i, j, k)] = f(i, j, k);
                }
            }
        }
        for k in 1..6 {
            for j in 1..6 {
                for i in 1..6 {
                    assert_eq!(lorenzo_local(&buf, shape, i, j, k), f(i, j, k));
                }
            }
        }
    }

    #[test]
    fn plane_fit_recovers_linear_block() {
        let shape = [6, 4, 3];
        let mut buf = vec![0.0; volume(shape)];
        for k in 0..3 {
            for j in 0..4 {
                for i in 0..6 {
                    buf[flat_index(shape, i, j, k)] = 0.5 + 0.25 * i as f64 - 1.5 * j as f64 + 2.0 * k as f64;
                }
            }
        }
        let c = fit_plane(&buf, shape);
        for (got, want) in c.iter().zip([0.5, 0.25, -1.5, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn plane_fit_handles_flat_axes() {
        let c = fit_plane(&[1.0, 3.0], [2, 1, 1]);
        assert_eq!(c, [1.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn ragged_blocks_tile_the_grid() {
        let g = blocks([13, 6, 7]);
        assert_eq!(g.len(), 3 * 1 * 2);
        assert_eq!(g[2], BlockGeom { lo: [12, 0, 0], shape: [1, 6, 6] });
        assert_eq!(g.iter().map(|b| volume(b.shape)).sum::<usize>(), 13 * 6 * 7);
    }
}
