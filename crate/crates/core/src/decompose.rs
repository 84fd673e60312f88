//! Exact parallel/orthogonal decomposition of a velocity against a latent.
//!
//! Any velocity `v` splits uniquely relative to a nonzero latent `x` as
//!
//! ```text
//! v = alpha * x + beta * ||x|| * u        with  u ⊥ x,  ||u|| = 1,  beta >= 0
//! ```
//!
//! computed as `alpha = <v, x> / ||x||^2`, residual `r = v - alpha * x`,
//! then `u = r / ||r||` and `beta = ||r|| / ||x||`. Normalizing `beta` by
//! `||x||` makes both coefficients unitless, which is what lets them be
//! extrapolated across steps where `||x||` changes.

use alloc::vec::Vec;

use crate::error::Error;
use crate::latent::{dot_slice, norm_slice, Latent, Velocity};
use crate::Result;

/// Norm floor below which a latent counts as zero and decomposition fails.
pub const EPS_X: f64 = 1e-12;

/// Residual threshold, relative to `||v||`, below which the orthogonal part
/// is treated as exactly zero.
pub const EPS_R: f64 = 1e-10;

/// The `(alpha, beta, u)` triple for one velocity, tagged with the time it
/// was computed at so extrapolation needs no side-channel bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Parallel coefficient (unitless).
    pub alpha: f64,
    /// Normalized orthogonal magnitude (unitless, `>= 0`).
    pub beta: f64,
    /// Unit direction orthogonal to the latent the decomposition was
    /// computed against.
    pub u: Vec<f64>,
    /// Time of the velocity evaluation.
    pub t: f64,
}

/// Decompose `v` relative to `x`.
///
/// When the residual vanishes (`v` parallel to `x`), `beta = 0` and `u` falls
/// back to a deterministic unit vector orthogonal to `x`; see
/// [`decompose_with_fallback`] to supply a previous anchor's direction
/// instead.
pub fn decompose(v: &Velocity, x: &Latent, t: f64) -> Result<Decomposition> {
    decompose_with_fallback(v, x, t, None)
}

/// Like [`decompose`], but a degenerate residual reuses `fallback_u` (when
/// given and orthogonal-compatible) rather than the constructed fallback.
/// With `beta = 0` any orthogonal unit is equivalent in the reconstruction;
/// reusing the previous anchor's direction keeps traces continuous.
pub fn decompose_with_fallback(
    v: &Velocity,
    x: &Latent,
    t: f64,
    fallback_u: Option<&[f64]>,
) -> Result<Decomposition> {
    if v.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: v.dim(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let x_norm = norm_slice(x.data());
    if !x_norm.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if x_norm <= EPS_X {
        return Err(Error::ZeroLatentNorm);
    }
    let v_norm = norm_slice(v.data());
    if !v_norm.is_finite() {
        return Err(Error::NonFiniteInput);
    }

    let alpha = dot_slice(v.data(), x.data()) / (x_norm * x_norm);
    let residual: Vec<f64> = v
        .data()
        .iter()
        .zip(x.data())
        .map(|(vi, xi)| vi - alpha * xi)
        .collect();
    let r_norm = norm_slice(&residual);

    if r_norm > EPS_R * v_norm {
        let u = residual.iter().map(|r| r / r_norm).collect();
        Ok(Decomposition {
            alpha,
            beta: r_norm / x_norm,
            u,
            t,
        })
    } else {
        let u = match fallback_u {
            Some(prev) if prev.len() == x.dim() => prev.to_vec(),
            _ => orthogonal_unit(x.data()),
        };
        Ok(Decomposition {
            alpha,
            beta: 0.0,
            u,
            t,
        })
    }
}

/// Reconstruct `alpha * x + beta * ||x|| * u`.
pub fn recompose(d: &Decomposition, x: &Latent) -> Result<Velocity> {
    if d.u.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: d.u.len(),
        });
    }
    let x_norm = norm_slice(x.data());
    if x_norm <= EPS_X {
        return Err(Error::ZeroLatentNorm);
    }
    let scale = d.beta * x_norm;
    let data = x
        .data()
        .iter()
        .zip(&d.u)
        .map(|(xi, ui)| d.alpha * xi + scale * ui)
        .collect();
    Ok(Latent::raw(data, x.shape()))
}

/// Deterministic unit vector orthogonal to `x`: Gram-Schmidt of the first
/// standard basis vector not parallel to `x`. Requires `dim >= 2`, which the
/// latent type guarantees.
fn orthogonal_unit(x: &[f64]) -> Vec<f64> {
    let x_norm2 = dot_slice(x, x);
    let mut best = Vec::new();
    for k in 0..x.len() {
        let coeff = x[k] / x_norm2;
        let mut w: Vec<f64> = x.iter().map(|xi| -coeff * xi).collect();
        w[k] += 1.0;
        let w_norm = norm_slice(&w);
        // ||w||^2 = 1 - x_k^2/||x||^2, zero only when e_k is parallel to x.
        if w_norm > 1e-6 {
            for wi in w.iter_mut() {
                *wi /= w_norm;
            }
            return w;
        }
        if best.is_empty() {
            best = w;
        }
    }
    best
}
