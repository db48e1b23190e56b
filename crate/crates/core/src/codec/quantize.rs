//! Error-bounded linear quantization of prediction residuals.

use super::bits::{BitReader, BitWriter};
use super::huffman::HuffmanCode;
use crate::{Error, Result};

/// Codes with magnitude at or above this escape to verbatim storage.
pub const DEFAULT_MAX_CODE: i32 = 1 << 15;
/// Huffman symbol marking an outlier.
pub const ESCAPE: i32 = i32::MIN;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuantOutcome {
    Code(i32),
    Outlier(f64),
}

impl QuantOutcome {
    pub fn reconstruct(&self, prediction: f64, eb_abs: f64) -> f64 {
        match *self {
            QuantOutcome::Code(c) => reconstruct(prediction, eb_abs, c),
            QuantOutcome::Outlier(v) => v,
        }
    }
}

#[inline]
pub fn reconstruct(prediction: f64, eb_abs: f64, code: i32) -> f64 {
    prediction + 2.0 * eb_abs * code as f64
}

/// Quantizes `original` against `prediction` with bins of width `2·eb_abs`,
/// rounding half away from zero. Falls back to an outlier when the code is
/// out of range or when floating-point rounding would break the bound.
pub fn quantize(original: f64, prediction: f64, eb_abs: f64, max_code: i32) -> Result<QuantOutcome> {
    if !(eb_abs > 0.0) || !eb_abs.is_finite() {
        return Err(Error::InvalidErrorBound(format!("eb_abs must be positive and finite, got {eb_abs}")));
    }
    if !original.is_finite() || !prediction.is_finite() {
        return Err(Error::NonFinite(0));
    }
    Ok(quantize_point(original, prediction, eb_abs, max_code).0)
}

#[inline]
pub(crate) fn quantize_point(original: f64, prediction: f64, eb_abs: f64, max_code: i32) -> (QuantOutcome, f64) {
    let q = ((original - prediction) / (2.0 * eb_abs)).round();
    if q.is_finite() && q.abs() < max_code as f64 {
        let code = q as i32;
        let recon = reconstruct(prediction, eb_abs, code);
        if (recon - original).abs() <= eb_abs {
            return (QuantOutcome::Code(code), recon);
        }
    }
    (QuantOutcome::Outlier(original), original)
}

/// Collects quantization codes and outliers in emission order.
#[derive(Default)]
pub(crate) struct QuantSink {
    pub codes: Vec<i32>,
    pub outliers: Vec<f64>,
    eb_abs: f64,
    max_code: i32,
}

impl QuantSink {
    pub fn new(eb_abs: f64, max_code: i32) -> Self {
        Self { codes: Vec::new(), outliers: Vec::new(), eb_abs, max_code }
    }

    /// Quantizes one point and returns its reconstruction.
    #[inline]
    pub fn push(&mut self, original: f64, prediction: f64) -> f64 {
        let (outcome, recon) = quantize_point(original, prediction, self.eb_abs, self.max_code);
        match outcome {
            QuantOutcome::Code(c) => self.codes.push(c),
            QuantOutcome::Outlier(v) => {
                self.codes.push(ESCAPE);
                self.outliers.push(v);
            }
        }
        recon
    }

    pub fn encode_codes(&self, table: &HuffmanCode, w: &mut BitWriter) {
        for &c in &self.codes {
            table.encode(w, c);
        }
    }
}

/// Decoding counterpart of [`QuantSink`].
pub(crate) struct QuantSource<'a> {
    table: &'a HuffmanCode,
    bits: BitReader<'a>,
    outliers: &'a [f64],
    next_outlier: usize,
    eb_abs: f64,
}

impl<'a> QuantSource<'a> {
    pub fn new(table: &'a HuffmanCode, bits: BitReader<'a>, outliers: &'a [f64], eb_abs: f64) -> Self {
        Self { table, bits, outliers, next_outlier: 0, eb_abs }
    }

    #[inline]
    pub fn next(&mut self, prediction: f64) -> Result<f64> {
        let sym = self.table.decode(&mut self.bits)?;
        if sym == ESCAPE {
            let v = *self
                .outliers
                .get(self.next_outlier)
                .ok_or_else(|| Error::Truncated("outlier stream exhausted".into()))?;
            self.next_outlier += 1;
            Ok(v)
        } else {
            Ok(reconstruct(prediction, self.eb_abs, sym))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_prediction_gives_code_zero() {
        let q = quantize(1.25, 1.25, 1e-3, DEFAULT_MAX_CODE).unwrap();
        assert_eq!(q, QuantOutcome::Code(0));
        assert_eq!(q.reconstruct(1.25, 1e-3), 1.25);
    }

    #[test]
    fn residual_of_3_9_bounds_rounds_to_code_2() {
        let eb = 0.5;
        let q = quantize(3.9 * eb, 0.0, eb, DEFAULT_MAX_CODE).unwrap();
        assert_eq!(q, QuantOutcome::Code(2));
        let err = (q.reconstruct(0.0, eb) - 3.9 * eb).abs();
        assert!((err - 0.1 * eb).abs() < 1e-12 && err <= eb);
    }

    #[test]
    fn huge_residual_is_an_outlier() {
        let eb = 1e-3;
        let orig = 1e6 * eb;
        let q = quantize(orig, 0.0, eb, DEFAULT_MAX_CODE).unwrap();
        assert_eq!(q, QuantOutcome::Outlier(orig));
        assert_eq!(q.reconstruct(0.0, eb), orig);
    }

    #[test]
    fn half_rounds_away_from_zero() {
        assert_eq!(quantize(1.0, 0.0, 1.0, 100).unwrap(), QuantOutcome::Code(1));
        assert_eq!(quantize(-1.0, 0.0, 1.0, 100).unwrap(), QuantOutcome::Code(-1));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(quantize(1.0, 0.0, 0.0, 100).is_err());
        assert!(quantize(f64::NAN, 0.0, 1.0, 100).is_err());
        assert!(quantize(1.0, f64::INFINITY, 1.0, 100).is_err());
    }

    proptest! {
        #[test]
        fn reconstruction_within_bound(
            orig in -1e12f64..1e12,
            pred in -1e12f64..1e12,
            eb_exp in -12i32..3,
        ) {
            let eb = 10f64.powi(eb_exp);
            let q = quantize(orig, pred, eb, DEFAULT_MAX_CODE).unwrap();
            prop_assert!((q.reconstruct(pred, eb) - orig).abs() <= eb);
        }
    }
}
