//! Deterministic, seedable sampling from the noise families used by the toy
//! experiment, plus the uniform covariate sampler.
//!
//! # Generator
//!
//! Sampling is driven by a small counter-based generator so that draw streams
//! are reproducible bit-for-bit across platforms and implementations. The
//! algorithm, in full:
//!
//! * State is a pair `(seed, counter)` of unsigned 64-bit integers; a fresh
//!   stream starts at `counter = 0`.
//! * The i-th raw output (1-based) is `mix64(seed + i * 0x9E3779B97F4A7C15)`,
//!   all arithmetic wrapping mod 2^64, where `mix64` is the SplitMix64
//!   finalizer:
//!
//!   ```text
//!   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//!   z ^= z >> 27;  z *= 0x94D049BB133111EB;
//!   z ^= z >> 31;
//!   ```
//!
//! * A uniform draw in the open interval (0, 1) takes the top 53 bits of a
//!   raw output, scales by 2^-53, and redraws on an exact zero.
//! * [`RngState::split`] derives the child stream for task `index` as
//!   `(mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15)), 0)`. Splitting reads
//!   neither the parent counter nor any draws, so parallel work can derive
//!   children from `(master seed, task index)` in any order.
//!
//! # Transforms
//!
//! Each family maps uniforms to a draw at scale 1 and multiplies by the scale
//! last, so a draw at scale `s` is exactly `s` times the draw at scale 1 from
//! the same stream position. Laplace and Logistic invert their CDFs on one
//! uniform, Cauchy uses `tan(pi (u - 1/2))`, and Gaussian uses the
//! Box-Muller transform (two uniforms per draw).

use std::error::Error;
use std::fmt;

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Counter-based deterministic generator state.
///
/// Equal seeds produce identical draw streams; see the module docs for the
/// exact algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    counter: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(
            self.seed
                .wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform draw in the open interval (0, 1).
    ///
    /// Exact zeros are rejected so downstream log/tan transforms never see an
    /// endpoint; 1.0 is unreachable with 53-bit mantissas.
    pub fn next_open01(&mut self) -> f64 {
        loop {
            let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Derive the independent child stream for `index`.
    ///
    /// Distinct indices give distinct child seeds, and the parent is left
    /// untouched.
    pub fn split(&self, index: u64) -> Self {
        Self {
            seed: mix64(self.seed ^ mix64(index.wrapping_add(GOLDEN_GAMMA))),
            counter: 0,
        }
    }
}

/// Derive a child seed from a master seed and a path of task indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut rng = RngState::new(seed);
    for &index in path {
        rng = rng.split(index);
    }
    rng.seed
}

/// Noise family of the label perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Laplace,
    Logistic,
    Cauchy,
    Gaussian,
    None,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 5] = [
        NoiseFamily::Laplace,
        NoiseFamily::Logistic,
        NoiseFamily::Cauchy,
        NoiseFamily::Gaussian,
        NoiseFamily::None,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::Logistic => "logistic",
            NoiseFamily::Cauchy => "cauchy",
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::None => "none",
        }
    }
}

/// Noise family plus its canonical scale parameter (Laplace `b`, Logistic
/// `s`, Cauchy `gamma`, Gaussian `sigma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub scale: f64,
}

/// Invalid noise specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpecError {
    pub scale: f64,
}

impl fmt::Display for NoiseSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "noise scale must be finite and >= 0, got {}", self.scale)
    }
}

impl Error for NoiseSpecError {}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self, NoiseSpecError> {
        let spec = Self { family, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn none() -> Self {
        Self {
            family: NoiseFamily::None,
            scale: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseSpecError> {
        if self.scale.is_finite() && self.scale >= 0.0 {
            Ok(())
        } else {
            Err(NoiseSpecError { scale: self.scale })
        }
    }
}

/// One zero-location draw from the configured family.
///
/// The `None` family returns exactly 0 without consuming any draws.
pub fn sample_noise(spec: &NoiseSpec, rng: &mut RngState) -> f64 {
    match spec.family {
        NoiseFamily::None => 0.0,
        NoiseFamily::Laplace => {
            let u = rng.next_open01();
            let r = u - 0.5;
            spec.scale * (-r.signum() * (1.0 - 2.0 * r.abs()).ln())
        }
        NoiseFamily::Logistic => {
            let u = rng.next_open01();
            spec.scale * (u / (1.0 - u)).ln()
        }
        NoiseFamily::Cauchy => {
            let u = rng.next_open01();
            spec.scale * (std::f64::consts::PI * (u - 0.5)).tan()
        }
        NoiseFamily::Gaussian => {
            let u1 = rng.next_open01();
            let u2 = rng.next_open01();
            spec.scale * ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos())
        }
    }
}

/// Uniform draw in `[lo, hi]`.
pub fn sample_uniform(lo: f64, hi: f64, rng: &mut RngState) -> f64 {
    assert!(lo <= hi, "sample_uniform needs lo <= hi, got [{lo}, {hi}]");
    lo + (hi - lo) * rng.next_open01()
}
