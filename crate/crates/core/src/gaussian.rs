//! Closed-form marginal velocity field for Gaussian endpoints.
//!
//! For `x0 ~ N(0, I)` and `x1 ~ N(mu1, s1^2 I)` drawn independently, the
//! latent `x_t = t*x1 + (1-t)*x0` is jointly Gaussian with both endpoints,
//! so the marginal flow velocity `v(x, t) = E[x1 - x0 | x_t = x]` has a
//! closed form. Conditioning each endpoint on `x_t`:
//!
//! ```text
//! Var(x_t)      = t^2 s1^2 + (1-t)^2          (per axis)
//! Cov(x1,  x_t) = t s1^2,   Cov(x0, x_t) = 1 - t
//! E[x1 - x0 | x_t = x] = mu1 + A(t) * (x - t*mu1)
//! A(t) = (t s1^2 - (1-t)) / (t^2 s1^2 + (1-t)^2)
//! ```
//!
//! The field is affine in `x` at every `t` and is the desk-scale stand-in
//! for a trained model: smooth coefficients, slowly rotating orthogonal
//! direction. The coefficients are pinned by a Monte-Carlo conditional-mean
//! oracle in the tests.

use alloc::vec::Vec;

use crate::error::Error;
use crate::field::{check_field_dim, EvalCounter, VelocityField};
use crate::latent::{Latent, Velocity};
use crate::Result;

#[derive(Debug)]
pub struct GaussianAnalyticField {
    mu1: Vec<f64>,
    s1: f64,
    calls: EvalCounter,
}

impl GaussianAnalyticField {
    /// `mu1` is the target mean, `s1 > 0` the target isotropic std.
    pub fn new(mu1: Vec<f64>, s1: f64) -> Result<Self> {
        if mu1.len() < 2 {
            return Err(Error::DimensionTooSmall(mu1.len()));
        }
        if !mu1.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if !(s1.is_finite() && s1 > 0.0) {
            return Err(Error::InvalidParameter("s1 must be positive"));
        }
        Ok(Self {
            mu1,
            s1,
            calls: EvalCounter::new(),
        })
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    /// The scalar gain `A(t)` multiplying `(x - t*mu1)`.
    pub fn gain(&self, t: f64) -> f64 {
        let s2 = self.s1 * self.s1;
        let omt = 1.0 - t;
        (t * s2 - omt) / (t * t * s2 + omt * omt)
    }
}

impl VelocityField for GaussianAnalyticField {
    fn dim(&self) -> usize {
        self.mu1.len()
    }

    fn evaluate(&self, x: &Latent, _condition: Option<&[f64]>, t: f64) -> Result<Velocity> {
        check_field_dim(self.dim(), x)?;
        // The interpolation variance degenerates at t = 1.
        if !(0.0..1.0).contains(&t) {
            return Err(Error::TimeOutOfRange(t));
        }
        self.calls.bump();
        let a = self.gain(t);
        let data = x
            .data()
            .iter()
            .zip(&self.mu1)
            .map(|(xi, mi)| mi + a * (xi - t * mi))
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::standard_normal;
    use crate::latent::norm;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_endpoints_cancel_at_half_time() {
        // mu1 = 0, s1 = 1: A(0.5) = 0, so v = 0 everywhere.
        let f = GaussianAnalyticField::new(vec![0.0, 0.0], 1.0).unwrap();
        let x = Latent::flat(vec![1.3, -0.4]).unwrap();
        let v = f.evaluate(&x, None, 0.5).unwrap();
        assert!(norm(&v) < 1e-15);
    }

    #[test]
    fn mean_path_velocity_is_mu1() {
        let mu1 = vec![5.0, 5.0];
        let f = GaussianAnalyticField::new(mu1.clone(), 1.0).unwrap();
        for &t in &[0.0, 0.25, 0.6, 0.95] {
            let x = Latent::flat(mu1.iter().map(|m| t * m).collect()).unwrap();
            let v = f.evaluate(&x, None, t).unwrap();
            for (vi, mi) in v.data().iter().zip(&mu1) {
                assert!((vi - mi).abs() < 1e-12, "t={t}");
            }
        }
    }

    #[test]
    fn rejects_endpoint_time() {
        let f = GaussianAnalyticField::new(vec![1.0, 2.0], 0.5).unwrap();
        let x = Latent::flat(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            f.evaluate(&x, None, 1.0),
            Err(Error::TimeOutOfRange(_))
        ));
    }

    #[test]
    fn field_is_affine_in_x() {
        let f = GaussianAnalyticField::new(vec![1.5, -0.5, 2.0], 0.8).unwrap();
        let x = Latent::flat(vec![0.3, 1.1, -0.7]).unwrap();
        let y = Latent::flat(vec![-0.2, 0.4, 0.9]).unwrap();
        let xy = Latent::flat(x.data().iter().zip(y.data()).map(|(a, b)| a + b).collect()).unwrap();
        let zero = Latent::flat(vec![0.0; 3]).unwrap();
        for &t in &[0.1, 0.5, 0.9] {
            let fxy = f.evaluate(&xy, None, t).unwrap();
            let fx = f.evaluate(&x, None, t).unwrap();
            let fy = f.evaluate(&y, None, t).unwrap();
            let f0 = f.evaluate(&zero, None, t).unwrap();
            for i in 0..3 {
                let second_diff = fxy.data()[i] - fx.data()[i] - fy.data()[i] + f0.data()[i];
                assert!(second_diff.abs() < 1e-10);
            }
        }
    }

    // Monte-Carlo oracle for the conditional mean: draw endpoint pairs, keep
    // those whose interpolant lands within 0.05 of the query point, and
    // average x1 - x0. The closed form must match within 3 standard errors.
    #[test]
    fn monte_carlo_conditional_mean_oracle() {
        let mu1 = vec![1.5, -0.5];
        let s1 = 0.8;
        let t = 0.4;
        let query = [0.7, -0.1];

        let f = GaussianAnalyticField::new(mu1.clone(), s1).unwrap();
        let x = Latent::flat(query.to_vec()).unwrap();
        let predicted = f.evaluate(&x, None, t).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut sum = [0.0f64; 2];
        let mut sum_sq = [0.0f64; 2];
        let mut hits = 0usize;
        for _ in 0..1_000_000 {
            let x0 = standard_normal(&mut rng, 2);
            let z = standard_normal(&mut rng, 2);
            let x1 = [mu1[0] + s1 * z[0], mu1[1] + s1 * z[1]];
            let xt = [t * x1[0] + (1.0 - t) * x0[0], t * x1[1] + (1.0 - t) * x0[1]];
            let d2 = (xt[0] - query[0]).powi(2) + (xt[1] - query[1]).powi(2);
            if d2 <= 0.05 * 0.05 {
                let v = [x1[0] - x0[0], x1[1] - x0[1]];
                for i in 0..2 {
                    sum[i] += v[i];
                    sum_sq[i] += v[i] * v[i];
                }
                hits += 1;
            }
        }
        assert!(hits > 500, "too few binned samples: {hits}");
        for i in 0..2 {
            let mean = sum[i] / hits as f64;
            let var = (sum_sq[i] / hits as f64 - mean * mean).max(0.0);
            let se = (var / hits as f64).sqrt();
            let diff = (predicted.data()[i] - mean).abs();
            assert!(
                diff <= 3.0 * se + 1e-3,
                "axis {i}: closed form {} vs binned mean {} (se {se}, {hits} hits)",
                predicted.data()[i],
                mean
            );
        }
    }
}
