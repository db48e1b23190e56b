use proptest::prelude::*;

use amrlab_core::codec::huffman::{huffman_decode, huffman_encode};
use amrlab_core::codec::quantize::{quantize, QuantOutcome, DEFAULT_MAX_CODE};
use amrlab_core::codec::{
    compress, compress_with_abs, decompress, decompress_lr_block, lr_block_count, quantization_codes, BoundMode,
    CodecId, CompressedField, ErrorBound,
};
use amrlab_core::ScalarGrid;

fn codec() -> impl Strategy<Value = CodecId> {
    prop_oneof![Just(CodecId::Lr), Just(CodecId::Interp)]
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => -10.0f64..10.0,
        1 => -1e6f64..1e6,
        1 => Just(0.0),
    ]
}

fn grid() -> impl Strategy<Value = ScalarGrid> {
    (1usize..14, 1usize..14, 1usize..14).prop_flat_map(|(x, y, z)| {
        prop::collection::vec(value(), x * y * z).prop_map(move |v| ScalarGrid::new([x, y, z], v).unwrap())
    })
}

fn smooth_grid() -> impl Strategy<Value = ScalarGrid> {
    (8usize..20, 8usize..20, 8usize..20, -2.0f64..2.0, 0.5f64..4.0).prop_map(|(x, y, z, a, f)| {
        ScalarGrid::from_fn([x, y, z], |i, j, k| a * (f * i as f64 / x as f64).sin() + (j * k) as f64 / 50.0).unwrap()
    })
}

fn max_err(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn bound_holds_for_any_finite_input(
        g in grid(),
        c in codec(),
        mode in prop_oneof![Just(BoundMode::Absolute), Just(BoundMode::Relative)],
        exp in -6i32..0,
    ) {
        let bound = ErrorBound::new(mode, 10f64.powi(exp)).unwrap();
        let cf = compress(&g, c, bound).unwrap();
        let r = decompress(&cf).unwrap();
        let lo = g.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = g.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eb_abs = match mode {
            BoundMode::Absolute => bound.value,
            BoundMode::Relative if hi > lo => bound.value * (hi - lo),
            // Zero range: the smallest positive bound, so constants stay exact.
            BoundMode::Relative => f64::MIN_POSITIVE,
        };
        prop_assert_eq!(cf.eb_abs, eb_abs);
        prop_assert!(max_err(&g, &r) <= eb_abs);
        prop_assert_eq!(r.dims(), g.dims());
    }

    #[test]
    fn whole_pipeline_is_deterministic(g in grid(), c in codec()) {
        let b = ErrorBound::relative(1e-3).unwrap();
        let c1 = compress(&g, c, b).unwrap();
        let c2 = compress(&g, c, b).unwrap();
        prop_assert_eq!(c1.to_bytes(), c2.to_bytes());
        let r1 = decompress(&c1).unwrap();
        let r2 = decompress(&CompressedField::from_bytes(c1.to_bytes().to_vec()).unwrap()).unwrap();
        prop_assert!(r1.bit_eq(&r2));
        let again = compress(&r1, c, b).unwrap();
        let again2 = compress(&r2, c, b).unwrap();
        prop_assert_eq!(again.to_bytes(), again2.to_bytes());
    }

    #[test]
    fn lr_blocks_decode_independently(g in grid()) {
        let cf = compress(&g, CodecId::Lr, ErrorBound::relative(1e-2).unwrap()).unwrap();
        let full = decompress(&cf).unwrap();
        for b in 0..lr_block_count(&cf) {
            let (geom, vals) = decompress_lr_block(&cf, b).unwrap();
            prop_assert!(full.extract(geom.lo, geom.shape).bit_eq(&vals));
        }
    }

    #[test]
    fn looser_bound_never_compresses_worse(g in smooth_grid(), c in codec()) {
        let tight = compress(&g, c, ErrorBound::relative(1e-4).unwrap()).unwrap();
        let loose = compress(&g, c, ErrorBound::relative(1e-2).unwrap()).unwrap();
        prop_assert!(loose.len() <= tight.len());
    }

    #[test]
    fn huffman_roundtrip(codes in prop::collection::vec(-40i32..40, 0..2000)) {
        let bytes = huffman_encode(&codes);
        prop_assert_eq!(huffman_decode(&bytes, codes.len()).unwrap(), codes);
    }

    #[test]
    fn quantizer_respects_bound(orig in -1e3f64..1e3, pred in -1e3f64..1e3, exp in -8i32..1) {
        let eb = 10f64.powi(exp);
        let q = quantize(orig, pred, eb, DEFAULT_MAX_CODE).unwrap();
        prop_assert!((q.reconstruct(pred, eb) - orig).abs() <= eb);
    }
}

#[test]
fn quantizer_worked_examples() {
    let eb = 1e-3;
    // 3.9·eb rounds to code 2 (bin width 2·eb); error |3.9 − 4|·eb.
    let q = quantize(5.0 + 3.9 * eb, 5.0, eb, DEFAULT_MAX_CODE).unwrap();
    assert_eq!(q, QuantOutcome::Code(2));
    assert!((q.reconstruct(5.0, eb) - (5.0 + 3.9 * eb)).abs() <= 0.1 * eb + 1e-15);
    let big = 5.0 + 1e6 * eb;
    assert_eq!(quantize(big, 5.0, eb, DEFAULT_MAX_CODE).unwrap(), QuantOutcome::Outlier(big));
}

#[test]
fn constant_grid_compresses_well() {
    let zero = ScalarGrid::filled([32; 3], 0.0).unwrap();
    for c in CodecId::ALL {
        let cf = compress_with_abs(&zero, c, ErrorBound::absolute(1e-3).unwrap(), 1e-3).unwrap();
        assert!(quantization_codes(&cf).unwrap().iter().all(|&q| q == 0));
        let cr = (8 * zero.len()) as f64 / cf.len() as f64;
        assert!(cr > 50.0, "{c}: {cr}");
    }
    // Non-zero constant under the interpolation codec: anchors carry the value.
    let three = ScalarGrid::filled([32; 3], 3.0).unwrap();
    let cf = compress(&three, CodecId::Interp, ErrorBound::absolute(1e-3).unwrap()).unwrap();
    assert!((8 * three.len()) as f64 / cf.len() as f64 > 50.0);
}

#[test]
fn linear_grids_give_zero_residuals() {
    let lin = |d: [usize; 3]| {
        ScalarGrid::from_fn(d, |i, j, k| 0.25 * i as f64 - 0.5 * j as f64 + 0.125 * k as f64 + 2.0).unwrap()
    };
    // LR: every block picks whichever predictor is exact, so codes vanish.
    let g = lin([18, 12, 24]);
    let cf = compress(&g, CodecId::Lr, ErrorBound::absolute(1e-6).unwrap()).unwrap();
    assert!(quantization_codes(&cf).unwrap().iter().all(|&q| q == 0));
    let g = lin([9, 9, 9]);
    let cf = compress(&g, CodecId::Interp, ErrorBound::absolute(1e-6).unwrap()).unwrap();
    assert!(quantization_codes(&cf).unwrap().iter().all(|&q| q == 0));
}
