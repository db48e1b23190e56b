//! Prediction-based, error-bounded lossy compression.
//!
//! Two codecs share one container: [`CodecId::Lr`] (6³ blocks with Lorenzo
//! or plane prediction, blocks decodable on their own) and
//! [`CodecId::Interp`] (global multilevel linear interpolation). Both
//! quantize residuals into bins of `2·eb_abs`, Huffman-code the bin
//! indices, and store out-of-range points verbatim.
//!
//! Container layout, little-endian: magic `AMRZ`, u8 codec id, u8 bound
//! mode, f64 bound value, f64 resolved absolute bound, 3×u32 dims, u32
//! outlier count, canonical Huffman table, codec streams.

mod bits;
pub mod huffman;
mod interp;
pub mod lorenzo_regression;
pub mod quantize;

use std::fmt;
use std::str::FromStr;

pub use huffman::{huffman_decode, huffman_encode, HuffmanCode};
pub use interp::{anchor_count, anchor_stride};
pub use lorenzo_regression::{lorenzo3d, BlockGeom, BlockPredictor, LR_BLOCK};
pub use quantize::{quantize, QuantOutcome, DEFAULT_MAX_CODE};

use bits::{ByteCursor, PutLe};
use lorenzo_regression::LrStreams;

use crate::grid::volume;
use crate::{Error, Result, ScalarGrid};

pub const MAGIC: &[u8; 4] = b"AMRZ";
pub const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 8 + 12 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodecId {
    Lr,
    Interp,
}

impl CodecId {
    pub const ALL: [CodecId; 2] = [CodecId::Lr, CodecId::Interp];

    pub fn as_str(&self) -> &'static str {
        match self {
            CodecId::Lr => "LR",
            CodecId::Interp => "INTERP",
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            CodecId::Lr => 0,
            CodecId::Interp => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(CodecId::Lr),
            1 => Ok(CodecId::Interp),
            other => Err(Error::Malformed(format!("unknown codec id {other}"))),
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodecId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "sz-lr" => Ok(CodecId::Lr),
            "interp" | "sz-interp" => Ok(CodecId::Interp),
            _ => Err(Error::Unsupported(format!("unknown codec {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundMode {
    Absolute,
    Relative,
}

impl BoundMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMode::Absolute => "abs",
            BoundMode::Relative => "rel",
        }
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" | "absolute" => Ok(BoundMode::Absolute),
            "rel" | "relative" => Ok(BoundMode::Relative),
            _ => Err(Error::Unsupported(format!("unknown bound mode {s:?}"))),
        }
    }
}

/// User-facing error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBound {
    pub mode: BoundMode,
    pub value: f64,
}

impl ErrorBound {
    pub fn new(mode: BoundMode, value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidErrorBound(format!("bound must be positive and finite, got {value}")));
        }
        Ok(Self { mode, value })
    }

    pub fn absolute(value: f64) -> Result<Self> {
        Self::new(BoundMode::Absolute, value)
    }

    pub fn relative(value: f64) -> Result<Self> {
        Self::new(BoundMode::Relative, value)
    }

    /// Absolute bound for data spanning `value_range`. A relative bound on
    /// constant data resolves to the smallest positive normal f64.
    pub fn resolve_for_range(&self, value_range: f64) -> f64 {
        match self.mode {
            BoundMode::Absolute => self.value,
            BoundMode::Relative => {
                let eb = self.value * value_range;
                if eb > 0.0 {
                    eb
                } else {
                    f64::MIN_POSITIVE
                }
            }
        }
    }

    pub fn resolve(&self, grid: &ScalarGrid) -> f64 {
        self.resolve_for_range(grid.value_range())
    }
}

/// Self-describing compressed grid. `payload` is the complete file image,
/// header included.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedField {
    pub codec: CodecId,
    pub bound: ErrorBound,
    pub eb_abs: f64,
    pub dims: [usize; 3],
    pub outlier_count: u32,
    pub payload: Vec<u8>,
}

impl CompressedField {
    pub fn to_bytes(&self) -> &[u8] {
        &self.payload
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let mut cur = ByteCursor::new(&bytes);
        let header = Header::read(&mut cur)?;
        Ok(Self {
            codec: header.codec,
            bound: header.bound,
            eb_abs: header.eb_abs,
            dims: header.dims,
            outlier_count: header.outliers,
            payload: bytes,
        })
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

struct Header {
    codec: CodecId,
    bound: ErrorBound,
    eb_abs: f64,
    dims: [usize; 3],
    outliers: u32,
}

impl Header {
    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.put_u8(self.codec.to_byte());
        out.put_u8(match self.bound.mode {
            BoundMode::Absolute => 0,
            BoundMode::Relative => 1,
        });
        out.put_f64(self.bound.value);
        out.put_f64(self.eb_abs);
        for d in self.dims {
            out.put_u32(d as u32);
        }
        out.put_u32(self.outliers);
    }

    fn read(cur: &mut ByteCursor<'_>) -> Result<Self> {
        if cur.take(4)? != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        let codec = CodecId::from_byte(cur.u8()?)?;
        let mode = match cur.u8()? {
            0 => BoundMode::Absolute,
            1 => BoundMode::Relative,
            m => return Err(Error::Malformed(format!("unknown bound mode {m}"))),
        };
        let value = cur.f64()?;
        let eb_abs = cur.f64()?;
        let dims = [cur.u32()? as usize, cur.u32()? as usize, cur.u32()? as usize];
        let outliers = cur.u32()?;
        let bound = ErrorBound::new(mode, value).map_err(|e| Error::Malformed(e.to_string()))?;
        if !(eb_abs > 0.0) || !eb_abs.is_finite() {
            return Err(Error::Malformed(format!("bad absolute bound {eb_abs}")));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Malformed(format!("bad dims {dims:?}")));
        }
        Ok(Self { codec, bound, eb_abs, dims, outliers })
    }
}

/// Compresses with an already resolved absolute bound; `bound` is recorded
/// in the header as provenance.
pub fn compress_with_abs(
    grid: &ScalarGrid,
    codec: CodecId,
    bound: ErrorBound,
    eb_abs: f64,
) -> Result<CompressedField> {
    if !(eb_abs > 0.0) || !eb_abs.is_finite() {
        return Err(Error::InvalidErrorBound(format!("eb_abs must be positive, got {eb_abs}")));
    }
    let dims = grid.dims();
    let mut body = Vec::new();
    let outliers = match codec {
        CodecId::Lr => lorenzo_regression::encode(grid, eb_abs, DEFAULT_MAX_CODE, &mut body),
        CodecId::Interp => interp::encode(grid, eb_abs, DEFAULT_MAX_CODE, &mut body),
    };
    let header = Header { codec, bound, eb_abs, dims, outliers };
    let mut payload = Vec::with_capacity(HEADER_LEN + body.len());
    header.write(&mut payload);
    payload.extend_from_slice(&body);
    Ok(CompressedField { codec, bound, eb_abs, dims, outlier_count: outliers, payload })
}

pub fn compress(grid: &ScalarGrid, codec: CodecId, bound: ErrorBound) -> Result<CompressedField> {
    compress_with_abs(grid, codec, bound, bound.resolve(grid))
}

pub fn compress_lr(grid: &ScalarGrid, bound: ErrorBound) -> Result<CompressedField> {
    compress(grid, CodecId::Lr, bound)
}

pub fn compress_interp(grid: &ScalarGrid, bound: ErrorBound) -> Result<CompressedField> {
    compress(grid, CodecId::Interp, bound)
}

pub fn decompress(cf: &CompressedField) -> Result<ScalarGrid> {
    let mut cur = ByteCursor::new(&cf.payload);
    let h = Header::read(&mut cur)?;
    match h.codec {
        CodecId::Lr => LrStreams::parse(&mut cur, h.dims, h.eb_abs, h.outliers as usize)?.decode_all(h.dims),
        CodecId::Interp => interp::decode(&mut cur, h.dims, h.eb_abs, h.outliers as usize),
    }
}

pub fn decompress_lr(cf: &CompressedField) -> Result<ScalarGrid> {
    expect_codec(cf, CodecId::Lr)?;
    decompress(cf)
}

pub fn decompress_interp(cf: &CompressedField) -> Result<ScalarGrid> {
    expect_codec(cf, CodecId::Interp)?;
    decompress(cf)
}

fn expect_codec(cf: &CompressedField, want: CodecId) -> Result<()> {
    if cf.codec != want {
        return Err(Error::Unsupported(format!("expected a {want} stream, found {}", cf.codec)));
    }
    Ok(())
}

/// Number of LR blocks in a stream.
pub fn lr_block_count(cf: &CompressedField) -> usize {
    volume(lorenzo_regression::block_grid(cf.dims))
}

/// Decodes a single LR block without touching the others. Returns the
/// block geometry and its values (x-fastest within the block).
pub fn decompress_lr_block(cf: &CompressedField, block: usize) -> Result<(BlockGeom, ScalarGrid)> {
    expect_codec(cf, CodecId::Lr)?;
    let mut cur = ByteCursor::new(&cf.payload);
    let h = Header::read(&mut cur)?;
    let streams = LrStreams::parse(&mut cur, h.dims, h.eb_abs, h.outliers as usize)?;
    let geom = *streams
        .geoms
        .get(block)
        .ok_or_else(|| Error::Unsupported(format!("block {block} out of range")))?;
    let values = streams.decode_block(block)?;
    Ok((geom, ScalarGrid::new(geom.shape, values)?))
}

/// Per-block predictor choice of an LR stream.
pub fn lr_predictors(cf: &CompressedField) -> Result<Vec<BlockPredictor>> {
    expect_codec(cf, CodecId::Lr)?;
    let mut cur = ByteCursor::new(&cf.payload);
    let h = Header::read(&mut cur)?;
    Ok(LrStreams::parse(&mut cur, h.dims, h.eb_abs, h.outliers as usize)?.predictors)
}

/// Raw size over stored size, header included.
pub fn compression_ratio(original: &ScalarGrid, cf: &CompressedField) -> f64 {
    raw_bytes(original.dims()) as f64 / cf.len() as f64
}

pub fn raw_bytes(dims: [usize; 3]) -> usize {
    8 * volume(dims)
}

/// Decodes the quantization code stream of a field, escapes included, in
/// coding order. Intended for inspection and tests.
pub fn quantization_codes(cf: &CompressedField) -> Result<Vec<i32>> {
    let mut cur = ByteCursor::new(&cf.payload);
    let h = Header::read(&mut cur)?;
    match h.codec {
        CodecId::Lr => {
            let s = LrStreams::parse(&mut cur, h.dims, h.eb_abs, h.outliers as usize)?;
            let total = volume(h.dims);
            let mut r = bits::BitReader::new(s.code_bytes);
            (0..total).map(|_| s.table.decode(&mut r)).collect()
        }
        CodecId::Interp => {
            let table = HuffmanCode::read_table(&mut cur)?;
            cur.take(anchor_count(h.dims) * 8)?;
            let len = cur.u64()? as usize;
            let bytes = cur.take(len)?;
            let n = volume(h.dims) - anchor_count(h.dims);
            let mut r = bits::BitReader::new(bytes);
            (0..n).map(|_| table.decode(&mut r)).collect()
        }
    }
}
