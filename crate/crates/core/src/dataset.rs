//! Seeded 2-D toy datasets for flow-matching training.
//!
//! Generators are pure functions of the RNG stream, so a corpus is
//! reproducible bit-for-bit given a seed.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::math;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyDataset {
    /// Two interleaved half-circles, centered and scaled to roughly
    /// `[-3, 3] x [-1.5, 1.5]`, with sigma = 0.05 Gaussian jitter.
    TwoMoons,
    /// Eight isotropic Gaussians (sigma = 0.15) on a circle of radius 2.
    GaussianRing,
    /// Uniform samples on the black cells of a 4x4 board over `[-2, 2]^2`.
    Checkerboard,
}

impl ToyDataset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "two-moons" => Ok(Self::TwoMoons),
            "gaussian-ring" => Ok(Self::GaussianRing),
            "checkerboard" => Ok(Self::Checkerboard),
            _ => Err(Error::InvalidParameter(
                "unknown dataset (expected two-moons, gaussian-ring, or checkerboard)",
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TwoMoons => "two-moons",
            Self::GaussianRing => "gaussian-ring",
            Self::Checkerboard => "checkerboard",
        }
    }

    pub fn sample_point<R: Rng + ?Sized>(self, rng: &mut R) -> [f64; 2] {
        match self {
            Self::TwoMoons => {
                let theta = core::f64::consts::PI * rng.random::<f64>();
                let (mut px, mut py) = if rng.random::<bool>() {
                    (math::cos(theta), math::sin(theta))
                } else {
                    (1.0 - math::cos(theta), 0.5 - math::sin(theta))
                };
                px += 0.05 * rng.sample::<f64, _>(StandardNormal);
                py += 0.05 * rng.sample::<f64, _>(StandardNormal);
                [2.0 * (px - 0.5), 2.0 * (py - 0.25)]
            }
            Self::GaussianRing => {
                let k = rng.random_range(0..8) as f64;
                let angle = core::f64::consts::FRAC_PI_4 * k;
                [
                    2.0 * math::cos(angle) + 0.15 * rng.sample::<f64, _>(StandardNormal),
                    2.0 * math::sin(angle) + 0.15 * rng.sample::<f64, _>(StandardNormal),
                ]
            }
            Self::Checkerboard => {
                // Pick a column, then one of the two black rows in that
                // column's parity class, then a uniform offset inside the cell.
                let col = rng.random_range(0..4i32);
                let row_pair = rng.random_range(0..2i32);
                let row = 2 * row_pair + ((col + 1) % 2);
                [
                    -2.0 + col as f64 + rng.random::<f64>(),
                    -2.0 + row as f64 + rng.random::<f64>(),
                ]
            }
        }
    }

    pub fn sample_batch<R: Rng + ?Sized>(self, rng: &mut R, count: usize) -> Vec<[f64; 2]> {
        (0..count).map(|_| self.sample_point(rng)).collect()
    }
}

/// `dim` i.i.d. standard-normal draws.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}
