//! Anchor history, coefficient extrapolation, velocity synthesis, and
//! stable-phase detection.
//!
//! Estimated steps never see the model. They take the two most recent
//! full-pass ("anchor") decompositions, fit the line through each scalar
//! coefficient over time, evaluate it at the current step, reuse the newest
//! anchor's orthogonal direction, and rebuild a velocity from the *current*
//! latent:
//!
//! ```text
//! v_hat(x, t) = alpha_hat(t) * x + beta_hat(t) * ||x|| * u_anchor
//! ```
//!
//! Because `x` enters directly, the estimate adapts to the evolving state —
//! the failure mode of replaying cached features (stale output applied to a
//! changed input) cannot occur by construction.

use crate::decompose::{Decomposition, EPS_X};
use crate::error::Error;
use crate::latent::{norm_slice, Latent, Velocity};
use crate::Result;

/// When a true coefficient is this close to zero, the stable-phase relative
/// error is measured against the floor instead of the coefficient.
pub const COEFF_FLOOR: f64 = 1e-9;

/// One stored anchor: a full-pass decomposition plus the step it ran at.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorRecord {
    pub step: usize,
    pub decomposition: Decomposition,
}

/// Ring of the two most recent anchors, ordered by step index. "Most recent"
/// is defined by step order, not by time value, so the logic is indifferent
/// to whether the grid runs 0 -> 1 or a sigma-style 1 -> 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnchorHistory {
    older: Option<AnchorRecord>,
    newer: Option<AnchorRecord>,
}

impl AnchorHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: usize, decomposition: Decomposition) {
        let record = AnchorRecord {
            step,
            decomposition,
        };
        self.older = self.newer.take();
        self.newer = Some(record);
    }

    pub fn len(&self) -> usize {
        usize::from(self.older.is_some()) + usize::from(self.newer.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.newer.is_none()
    }

    /// Newest anchor by step order.
    pub fn latest(&self) -> Option<&AnchorRecord> {
        self.newer.as_ref()
    }

    /// `(older, newer)` pair; errors if fewer than two anchors are stored.
    pub fn pair(&self) -> Result<(&AnchorRecord, &AnchorRecord)> {
        match (&self.older, &self.newer) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InsufficientHistory),
        }
    }
}

/// Fit lines through the two anchors' `(t, alpha)` and `(t, beta)` points and
/// evaluate them at `t`.
pub fn extrapolate_coefficients(history: &AnchorHistory, t: f64) -> Result<(f64, f64)> {
    let (older, newer) = history.pair()?;
    let (d1, d2) = (&older.decomposition, &newer.decomposition);
    let dt = d2.t - d1.t;
    if dt == 0.0 {
        return Err(Error::CoincidentAnchors);
    }
    let alpha = d1.alpha + (d2.alpha - d1.alpha) / dt * (t - d1.t);
    let beta = d1.beta + (d2.beta - d1.beta) / dt * (t - d1.t);
    Ok((alpha, beta))
}

/// Synthesize the estimated velocity at `(x, t)` from the anchor history.
pub fn estimate_velocity(x: &Latent, t: f64, history: &AnchorHistory) -> Result<Velocity> {
    let (alpha_hat, beta_hat) = extrapolate_coefficients(history, t)?;
    let anchor = history.latest().ok_or(Error::InsufficientHistory)?;
    let u = &anchor.decomposition.u;
    if u.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: u.len(),
        });
    }
    let x_norm = norm_slice(x.data());
    if x_norm <= EPS_X {
        return Err(Error::ZeroLatentNorm);
    }
    let scale = beta_hat * x_norm;
    let data = x
        .data()
        .iter()
        .zip(u)
        .map(|(xi, ui)| alpha_hat * xi + scale * ui)
        .collect();
    Ok(Latent::raw(data, x.shape()))
}

/// Thresholds for stable-phase detection: coefficient extrapolation error
/// below `epsilon` and adjacent-direction cosine above `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StablePhaseConfig {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for StablePhaseConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            delta: 0.99,
        }
    }
}

impl StablePhaseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter("epsilon must be in (0, 1)"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Relative error with the near-zero floor applied to the denominator.
pub(crate) fn guarded_rel_err(predicted: f64, truth: f64) -> f64 {
    (predicted - truth).abs() / truth.abs().max(COEFF_FLOOR)
}

/// Find the first index `i` in a run of *consecutive full-step*
/// decompositions where the line through steps `i, i+1` predicts step `i+2`
/// within `epsilon` (both coefficients, relative) and the directions at `i`
/// and `i+1` have cosine above `delta`. Returns `Ok(None)` when no index
/// qualifies; needs at least three entries.
pub fn detect_stable_phase(
    trace: &[Decomposition],
    cfg: &StablePhaseConfig,
) -> Result<Option<usize>> {
    cfg.validate()?;
    if trace.len() < 3 {
        return Err(Error::TraceTooShort);
    }
    for i in 0..trace.len() - 2 {
        if stable_at(&trace[i], &trace[i + 1], &trace[i + 2], cfg)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The stable-phase criterion for one triple of consecutive decompositions.
pub(crate) fn stable_at(
    d0: &Decomposition,
    d1: &Decomposition,
    d2: &Decomposition,
    cfg: &StablePhaseConfig,
) -> Result<bool> {
    let dt = d1.t - d0.t;
    if dt == 0.0 {
        return Err(Error::CoincidentAnchors);
    }
    let alpha_hat = d0.alpha + (d1.alpha - d0.alpha) / dt * (d2.t - d0.t);
    let beta_hat = d0.beta + (d1.beta - d0.beta) / dt * (d2.t - d0.t);
    let coeff_err = guarded_rel_err(alpha_hat, d2.alpha).max(guarded_rel_err(beta_hat, d2.beta));
    let cos = cosine_of(&d0.u, &d1.u);
    Ok(coeff_err < cfg.epsilon && cos > cfg.delta)
}

fn cosine_of(a: &[f64], b: &[f64]) -> f64 {
    // Anchor directions are unit vectors; the plain dot product is the cosine.
    crate::latent::dot_slice(a, b)
}
