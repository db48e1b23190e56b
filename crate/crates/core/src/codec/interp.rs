//! Global multilevel interpolation compressor.
//!
//! Anchors on the stride-`s₀` lattice are stored verbatim. Each following
//! level halves the spacing `h` and fills the new points by linear
//! interpolation between already reconstructed neighbours `p ± h`, sweeping
//! along z, then y, then x. A point whose `p + h` falls outside the grid
//! copies `p − h`.
//!
//! Stream layout after the common header and Huffman table: anchors (f64),
//! packed code stream length (u64) and bytes, then outliers (f64).

use super::bits::{BitReader, BitWriter, ByteCursor, PutLe};
use super::huffman::HuffmanCode;
use super::quantize::{QuantSink, QuantSource};
use crate::grid::{flat_index, volume};
use crate::{Result, ScalarGrid};

/// Largest power of two not above `min(dims) / 2`, at least 2.
pub fn anchor_stride(dims: [usize; 3]) -> usize {
    let half = dims.iter().copied().min().unwrap_or(0) / 2;
    if half < 2 {
        2
    } else {
        1 << (usize::BITS - 1 - half.leading_zeros())
    }
}

fn anchors(dims: [usize; 3], s0: usize) -> impl Iterator<Item = usize> {
    let idx = move |i, j, k| flat_index(dims, i, j, k);
    (0..dims[2]).step_by(s0).flat_map(move |k| {
        (0..dims[1])
            .step_by(s0)
            .flat_map(move |j| (0..dims[0]).step_by(s0).map(move |i| idx(i, j, k)))
    })
}

pub fn anchor_count(dims: [usize; 3]) -> usize {
    let s0 = anchor_stride(dims);
    dims.iter().map(|&d| (d - 1) / s0 + 1).product()
}

/// Visits every non-anchor point in coding order as `(target, lo, hi)`
/// flat indices, where `hi` is `None` past the upper boundary.
fn visit<E>(
    dims: [usize; 3],
    mut f: impl FnMut(usize, usize, Option<usize>) -> Result<(), E>,
) -> Result<(), E> {
    let s0 = anchor_stride(dims);
    let stride = [1, dims[0], dims[0] * dims[1]];
    let mut h = s0 / 2;
    while h >= 1 {
        for axis in [2usize, 1, 0] {
            // Axes swept earlier in this level are already dense at `h`.
            let (start, step): (Vec<usize>, Vec<usize>) = (0..3)
                .map(|b| match b.cmp(&axis) {
                    std::cmp::Ordering::Equal => (h, 2 * h),
                    std::cmp::Ordering::Greater => (0, h),
                    std::cmp::Ordering::Less => (0, 2 * h),
                })
                .unzip();
            for k in (start[2]..dims[2]).step_by(step[2]) {
                for j in (start[1]..dims[1]).step_by(step[1]) {
                    for i in (start[0]..dims[0]).step_by(step[0]) {
                        let p = [i, j, k];
                        let t = flat_index(dims, i, j, k);
                        let lo = t - h * stride[axis];
                        let hi = (p[axis] + h < dims[axis]).then(|| t + h * stride[axis]);
                        f(t, lo, hi)?;
                    }
                }
            }
        }
        h /= 2;
    }
    Ok(())
}

#[inline]
fn predict(buf: &[f64], lo: usize, hi: Option<usize>) -> f64 {
    match hi {
        Some(hi) => (buf[lo] + buf[hi]) / 2.0,
        None => buf[lo],
    }
}

pub(crate) fn encode(grid: &ScalarGrid, eb_abs: f64, max_code: i32, out: &mut Vec<u8>) -> u32 {
    let dims = grid.dims();
    let orig = grid.values();
    let mut recon = vec![0.0; orig.len()];
    let s0 = anchor_stride(dims);
    let anchor_idx: Vec<usize> = anchors(dims, s0).collect();
    for &a in &anchor_idx {
        recon[a] = orig[a];
    }
    let mut sink = QuantSink::new(eb_abs, max_code);
    visit::<()>(dims, |t, lo, hi| {
        let pred = predict(&recon, lo, hi);
        recon[t] = sink.push(orig[t], pred);
        Ok(())
    })
    .expect("infallible");

    let table = HuffmanCode::from_symbols(&sink.codes);
    table.write_table(out);
    for &a in &anchor_idx {
        out.put_f64(orig[a]);
    }
    let mut w = BitWriter::new();
    sink.encode_codes(&table, &mut w);
    let code_bytes = w.finish();
    out.put_u64(code_bytes.len() as u64);
    out.extend_from_slice(&code_bytes);
    for &v in &sink.outliers {
        out.put_f64(v);
    }
    sink.outliers.len() as u32
}

pub(crate) fn decode(
    cur: &mut ByteCursor<'_>,
    dims: [usize; 3],
    eb_abs: f64,
    n_outliers: usize,
) -> Result<ScalarGrid> {
    let table = HuffmanCode::read_table(cur)?;
    let s0 = anchor_stride(dims);
    let mut recon = vec![0.0; volume(dims)];
    for a in anchors(dims, s0) {
        recon[a] = cur.f64()?;
    }
    let code_len = cur.u64()? as usize;
    let code_bytes = cur.take(code_len)?;
    let outliers = (0..n_outliers).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
    let mut src = QuantSource::new(&table, BitReader::new(code_bytes), &outliers, eb_abs);
    visit::<crate::Error>(dims, |t, lo, hi| {
        let pred = predict(&recon, lo, hi);
        recon[t] = src.next(pred)?;
        Ok(())
    })?;
    ScalarGrid::new(dims, recon)
}
