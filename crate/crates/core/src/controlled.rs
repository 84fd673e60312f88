//! A velocity field whose decomposition coefficients are chosen directly.
//!
//! `ControlledField` returns `a(t)*x + b(t)*||x||*unit(P(w; x))` where
//! `P(w; x)` projects the fixed reference vector `w` orthogonal to `x`.
//! Decomposing its output against `x` recovers exactly `alpha = a(t)` and
//! `beta = b(t)` (for `b(t) >= 0`), which makes it the ground-truth harness
//! for extrapolation and stable-phase logic: any scalar schedule can be
//! realized and checked without a trained model.

use alloc::vec::Vec;

use crate::error::Error;
use crate::field::{check_field_dim, EvalCounter, VelocityField};
use crate::latent::{dot_slice, norm_slice, Latent, Velocity};
use crate::Result;

/// Scalar function of `t` given as polynomial pieces over `[0, 1]`.
///
/// `breaks` are the interior breakpoints; piece `i` applies on
/// `[breaks[i-1], breaks[i])` (last piece is closed on the right) and is
/// evaluated in the global variable `t`, so continuity is up to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    breaks: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl PiecewisePoly {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if pieces.is_empty() || pieces.len() != breaks.len() + 1 {
            return Err(Error::InvalidParameter(
                "need exactly one more piece than breakpoints",
            ));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "breakpoints must be strictly increasing",
            ));
        }
        if !breaks.iter().all(|b| b.is_finite()) || !pieces.iter().flatten().all(|c| c.is_finite())
        {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { breaks, pieces })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: alloc::vec![alloc::vec![c]],
        }
    }

    /// `c0 + c1 * t`.
    pub fn affine(c0: f64, c1: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: alloc::vec![alloc::vec![c0, c1]],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.breaks.iter().take_while(|b| t >= **b).count();
        horner(&self.pieces[idx], t)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[derive(Debug)]
pub struct ControlledField {
    a: PiecewisePoly,
    b: PiecewisePoly,
    w: Vec<f64>,
    calls: EvalCounter,
}

impl ControlledField {
    pub fn new(a: PiecewisePoly, b: PiecewisePoly, w: Vec<f64>) -> Result<Self> {
        let w = Latent::flat(w)?.into_data();
        Ok(Self {
            a,
            b,
            w,
            calls: EvalCounter::new(),
        })
    }

    pub fn coefficients(&self) -> (&PiecewisePoly, &PiecewisePoly) {
        (&self.a, &self.b)
    }

    pub fn reference(&self) -> &[f64] {
        &self.w
    }
}

impl VelocityField for ControlledField {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn evaluate(&self, x: &Latent, _condition: Option<&[f64]>, t: f64) -> Result<Velocity> {
        check_field_dim(self.dim(), x)?;
        let x_norm = norm_slice(x.data());
        if x_norm <= crate::decompose::EPS_X {
            return Err(Error::ZeroLatentNorm);
        }
        // P(w; x) = w - (<w,x>/||x||^2) x
        let coeff = dot_slice(&self.w, x.data()) / (x_norm * x_norm);
        let proj: Vec<f64> = self
            .w
            .iter()
            .zip(x.data())
            .map(|(wi, xi)| wi - coeff * xi)
            .collect();
        let p_norm = norm_slice(&proj);
        if p_norm <= 1e-12 * norm_slice(&self.w) {
            return Err(Error::DegenerateDirection);
        }
        self.calls.bump();
        let a_t = self.a.eval(t);
        let scale = self.b.eval(t) * x_norm / p_norm;
        let data = x
            .data()
            .iter()
            .zip(&proj)
            .map(|(xi, pi)| a_t * xi + scale * pi)
            .collect();
        Ok(Latent::raw(data, x.shape()))
    }

    fn eval_count(&self) -> u64 {
        self.calls.get()
    }

    fn reset_eval_count(&self) {
        self.calls.reset();
    }
}
