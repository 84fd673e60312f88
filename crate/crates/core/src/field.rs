//! The velocity-field interface and its call counter.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::Error;
use crate::latent::{Latent, Velocity};
use crate::Result;

/// Monotone counter of `evaluate` calls — the NFE meter. Fields are shared
/// read-only across parallel trajectory workers, so the counter is atomic.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        Self(AtomicU64::new(0))
    }

    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// A velocity field `v = u(x, c, t)`.
///
/// `evaluate` must be deterministic and pure given fixed parameters, and must
/// bump the eval counter by exactly one per call. The optional `condition`
/// vector is part of the signature for forward compatibility; none of the
/// built-in fields use it. Fields are shared across trajectory workers,
/// hence the thread-safety supertraits.
pub trait VelocityField: Send + Sync {
    /// Dimension of latents this field accepts and velocities it returns.
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &Latent, condition: Option<&[f64]>, t: f64) -> Result<Velocity>;

    /// Number of `evaluate` calls so far.
    fn eval_count(&self) -> u64;

    fn reset_eval_count(&self);
}

pub(crate) fn check_field_dim(expected: usize, x: &Latent) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.dim(),
        });
    }
    Ok(())
}

/// Constant field `v(x, t) = k`. Euler integration is exact on it, which
/// makes it the canonical sampler smoke test.
#[derive(Debug)]
pub struct ConstantField {
    value: Vec<f64>,
    calls: EvalCounter,
}

impl ConstantField {
    pub fn new(value: Vec<f64>) -> Result<Self> {
        // Reuse the latent invariants (finite, dim >= 2).
        let value = Latent::flat(value)?.into_data();
        Ok(Self {
            value,
            calls: EvalCounter::new(),
        })
    }
}

impl VelocityField for ConstantField {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn evaluate(&self, x: &Latent, _condition: Option<&[f64]>, _t: f64) -> Result<Velocity> {
        check_field_dim(self.dim(), x)?;
        self.calls.bump();
        Ok(Latent::raw(self.value.clone(), x.shape()))
    }

    fn eval_count(&self) -> u64 {
        self.calls.get()
    }

    fn reset_eval_count(&self) {
        self.calls.reset();
    }
}
