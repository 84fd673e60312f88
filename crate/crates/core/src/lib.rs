//! Rectified-flow sampling with velocity decomposition and estimation.
//!
//! A rectified-flow sampler integrates `dx/dt = v(x, t)` from noise at `t = 0`
//! to data at `t = 1`, calling a velocity field once per step. This crate
//! implements a training-free way to skip most of those calls: the velocity at
//! each step is decomposed exactly into a component parallel to the current
//! latent and an orthogonal remainder,
//!
//! ```text
//! v = alpha * x + beta * ||x|| * u,     u ⊥ x,  ||u|| = 1
//! ```
//!
//! and during the stable phase of sampling the scalar coefficients
//! `(alpha, beta)` evolve near-linearly in `t` while `u` barely rotates.
//! Anchor steps run the real field and refresh the decomposition; the steps in
//! between synthesize a velocity from linearly extrapolated coefficients and
//! the reused direction, applied to the *current* latent.
//!
//! Module map:
//!
//! - [`latent`]: flat/grid latent vectors, time grids, and the small vector
//!   algebra everything else is built on.
//! - [`decompose`]: the exact parallel/orthogonal decomposition and its inverse.
//! - [`field`], [`gaussian`], [`controlled`], [`mlp`]: pluggable velocity
//!   fields with a shared call counter (the NFE meter).
//! - [`dataset`], [`train`]: seeded 2-D toy datasets and a flow-matching
//!   trainer for the MLP field.
//! - [`schedule`], [`estimator`]: full/estimated step planning, anchor
//!   history, coefficient extrapolation, and stable-phase detection.
//! - [`sampler`]: the Euler baseline sampler, the accelerated sampler, and
//!   per-step trace recording.
//! - [`metrics`]: fidelity metrics (MSE, relative L2, cosine, PSNR, SSIM)
//!   against a full-step baseline.
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature instead of the default `std` for such builds. All arithmetic is
//! `f64`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("vde-core needs either the `std` (default) or `libm` feature");

pub mod controlled;
pub mod dataset;
pub mod decompose;
pub mod error;
pub mod estimator;
pub mod field;
pub mod gaussian;
pub mod latent;
pub(crate) mod math;
pub mod metrics;
pub mod mlp;
pub mod sampler;
pub mod schedule;
pub mod train;

pub use controlled::{ControlledField, PiecewisePoly};
pub use dataset::ToyDataset;
pub use decompose::{decompose, decompose_with_fallback, recompose, Decomposition};
pub use error::Error;
pub use estimator::{
    detect_stable_phase, estimate_velocity, extrapolate_coefficients, AnchorHistory,
    StablePhaseConfig,
};
pub use field::{ConstantField, VelocityField};
pub use gaussian::GaussianAnalyticField;
pub use latent::{axpy, dot, interpolate, norm, Latent, Shape, TimeGrid, Velocity};
pub use metrics::{cosine, mse, psnr, rel_l2, retention_report, ssim, RetentionReport};
pub use mlp::{Activation, Layer, MlpField, TimeFeatures};
pub use sampler::{
    record_component_dynamics, sample_full, sample_vde, ComponentDynamics, DynamicsAggregate,
    SampleResult, TraceRow, TrajectoryTrace, VdeMode,
};
pub use schedule::{plan_schedule, SamplingSchedule, StepMode};
pub use train::{train_flow_matching, TrainConfig, TrainReport};

/// Result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;
