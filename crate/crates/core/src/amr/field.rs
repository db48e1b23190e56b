//! Deterministic synthetic fields.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::rng::{splitmix64, unit_f64};
use crate::{Error, Result, ScalarGrid};

pub const MIN_FIELD_DIM: usize = 8;

const NOISE_OCTAVES: u64 = 4;
/// Lattice intervals across the unit cube for the first octave.
const NOISE_BASE_RES: usize = 4;
const SKEW: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Analytic, band-limited field.
    Smooth,
    /// Log-normal-like value noise.
    Irregular,
}

impl FieldKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldKind::Smooth => "smooth",
            FieldKind::Irregular => "irregular",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(FieldKind::Smooth),
            "irregular" => Ok(FieldKind::Irregular),
            other => Err(Error::Unsupported(format!("unknown field kind {other:?}"))),
        }
    }
}

/// Samples a synthetic field at the cell centers of the unit cube.
///
/// `Smooth` is `sin(2πx)cos(2πy)sin(2πz)·exp(−4|p − ½|²)` and ignores the
/// seed. `Irregular` is four octaves of trilinear value noise with lattice
/// values hashed from `(seed, octave, lattice index)`, normalized to
/// `[-1, 1]` and passed through `exp(3v)`.
pub fn generate_field(kind: FieldKind, dims: [usize; 3], seed: u64) -> Result<ScalarGrid> {
    if dims.iter().any(|&d| d < MIN_FIELD_DIM) {
        return Err(Error::InvalidDims(format!(
            "{dims:?}: every axis needs at least {MIN_FIELD_DIM} cells"
        )));
    }
    let center = |i: usize, n: usize| (i as f64 + 0.5) / n as f64;
    match kind {
        FieldKind::Smooth => ScalarGrid::from_fn(dims, |i, j, k| {
            let (x, y, z) = (center(i, dims[0]), center(j, dims[1]), center(k, dims[2]));
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2) + (z - 0.5).powi(2);
            (2.0 * PI * x).sin() * (2.0 * PI * y).cos() * (2.0 * PI * z).sin() * (-4.0 * r2).exp()
        }),
        FieldKind::Irregular => {
            let octaves: Vec<NoiseOctave> = (0..NOISE_OCTAVES)
                .map(|o| NoiseOctave::new(seed, o, NOISE_BASE_RES << o))
                .collect();
            let norm: f64 = octaves.iter().map(|o| o.amplitude).sum();
            ScalarGrid::from_fn(dims, |i, j, k| {
                let p = [center(i, dims[0]), center(j, dims[1]), center(k, dims[2])];
                let v: f64 = octaves.iter().map(|o| o.amplitude * o.sample(p)).sum::<f64>() / norm;
                (SKEW * v).exp()
            })
        }
    }
}

struct NoiseOctave {
    res: usize,
    amplitude: f64,
    lattice: Vec<f64>,
}

impl NoiseOctave {
    fn new(seed: u64, octave: u64, res: usize) -> Self {
        let n = res + 1;
        let octave_key = splitmix64(splitmix64(seed) ^ octave);
        let lattice = (0..n * n * n)
            .map(|idx| 2.0 * unit_f64(splitmix64(octave_key ^ idx as u64)) - 1.0)
            .collect();
        Self { res, amplitude: 0.5f64.powi(octave as i32), lattice }
    }

    fn sample(&self, p: [f64; 3]) -> f64 {
        let n = self.res + 1;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let x = p[a] * self.res as f64;
            let cell = (x.floor() as usize).min(self.res - 1);
            base[a] = cell;
            frac[a] = x - cell as f64;
        }
        let at = |dx: usize, dy: usize, dz: usize| {
            self.lattice[(base[0] + dx) + n * ((base[1] + dy) + n * (base[2] + dz))]
        };
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let [fx, fy, fz] = frac;
        let c00 = lerp(at(0, 0, 0), at(1, 0, 0), fx);
        let c10 = lerp(at(0, 1, 0), at(1, 1, 0), fx);
        let c01 = lerp(at(0, 0, 1), at(1, 0, 1), fx);
        let c11 = lerp(at(0, 1, 1), at(1, 1, 1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }
}
