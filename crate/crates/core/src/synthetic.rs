//! Labelled synthetic series families for smoke tests and benchmarks.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::series::RawSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Two sine cycles.
    Sine,
    /// Flat low, linear rise over 80% of the length, flat high.
    Ramp,
    /// Two square-wave cycles.
    Square,
    /// Four cycles of slow rise, fast fall.
    Sawtooth,
    /// Four cycles of fast rise, slow fall.
    ReverseSawtooth,
    /// Four symmetric triangle cycles.
    Triangle,
}

impl Family {
    /// Sine, ramp, and square: families that differ in overall shape.
    pub const SHAPES: [Family; 3] = [Self::Sine, Self::Ramp, Self::Square];
    /// Families that visit the same levels with different segment slopes.
    pub const SLOPES: [Family; 3] = [Self::Sawtooth, Self::ReverseSawtooth, Self::Triangle];

    /// Noise-free value at (possibly shifted, fractional) time `t` for a
    /// series of length `len`.
    pub fn value(&self, t: f64, len: usize) -> f64 {
        let len = len as f64;
        let cycle = |rise: f64| {
            let period = len / 4.0;
            let phase = (t / period).rem_euclid(1.0);
            if phase < rise {
                -1.0 + 2.0 * phase / rise
            } else {
                1.0 - 2.0 * (phase - rise) / (1.0 - rise)
            }
        };
        match self {
            Self::Sine => (TAU * 2.0 * t / len).sin(),
            Self::Ramp => 2.0 * (t / (0.8 * len)).clamp(0.0, 1.0) - 1.0,
            Self::Square => {
                if (TAU * 2.0 * t / len).sin() >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Sawtooth => cycle(0.8),
            Self::ReverseSawtooth => cycle(0.2),
            Self::Triangle => cycle(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub families: Vec<Family>,
    pub per_family: usize,
    pub length: usize,
    /// Additive per-sample noise, uniform in `±jitter`.
    pub jitter: f64,
    /// Largest delay, as a fraction of the length.
    pub max_shift: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            families: Family::SHAPES.to_vec(),
            per_family: 20,
            length: 100,
            jitter: 0.1,
            max_shift: 0.1,
            seed: 0,
        }
    }
}

/// Generate `per_family` series of each family, labelled `1..=families`,
/// in shuffled order.
pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<RawSeries>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_shift = (cfg.max_shift * cfg.length as f64).floor() as usize;
    let mut raw: Vec<(i64, Vec<f64>)> = Vec::with_capacity(cfg.families.len() * cfg.per_family);
    for (f, family) in cfg.families.iter().enumerate() {
        for _ in 0..cfg.per_family {
            let shift = rng.random_range(0..=max_shift) as f64;
            let values = (0..cfg.length)
                .map(|t| {
                    let noise = if cfg.jitter > 0.0 {
                        rng.random_range(-cfg.jitter..=cfg.jitter)
                    } else {
                        0.0
                    };
                    family.value(t as f64 - shift, cfg.length) + noise
                })
                .collect();
            raw.push((f as i64 + 1, values));
        }
    }
    raw.shuffle(&mut rng);
    raw.into_iter()
        .enumerate()
        .map(|(id, (label, values))| RawSeries::new(values, Some(label), id))
        .collect()
}

/// Write series in UCR comma-separated format.
pub fn to_ucr_string(series: &[RawSeries]) -> String {
    let mut out = String::new();
    for s in series {
        out.push_str(&s.label().unwrap_or(0).to_string());
        for v in s.values() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}
