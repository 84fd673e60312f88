//! Latent vectors, time grids, and the vector algebra used everywhere else.
//!
//! A [`Latent`] is a flat `f64` vector with an optional 2-D grid shape. The
//! shape is metadata only: every operation treats the data as a flat vector,
//! grids exist so image-style metrics (PSNR/SSIM) know how to window.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::Result;

/// Logical layout of a latent: flat of length `d`, or an `rows x cols` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Flat(usize),
    Grid { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(d) => d,
            Shape::Grid { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Shape::Grid { .. })
    }
}

/// A point on a sampling trajectory (or an endpoint of one).
///
/// Invariants enforced at construction: all entries finite, dimension >= 2
/// (the orthogonal complement of a 1-D vector is trivial, so decomposition
/// would be meaningless), and grid shapes cover the data exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    data: Vec<f64>,
    shape: Shape,
}

/// Velocities share the latent representation: same dimension, same shape.
pub type Velocity = Latent;

impl Latent {
    /// Flat latent of dimension `data.len()`.
    pub fn flat(data: Vec<f64>) -> Result<Self> {
        let shape = Shape::Flat(data.len());
        Self::with_shape(data, shape)
    }

    /// Grid-shaped latent; `rows * cols` must equal `data.len()`.
    pub fn grid(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_shape(data, Shape::Grid { rows, cols })
    }

    pub fn with_shape(data: Vec<f64>, shape: Shape) -> Result<Self> {
        if shape.len() != data.len() {
            if let Shape::Grid { rows, cols } = shape {
                return Err(Error::InvalidShape {
                    rows,
                    cols,
                    len: data.len(),
                });
            }
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                got: data.len(),
            });
        }
        if data.len() < 2 {
            return Err(Error::DimensionTooSmall(data.len()));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { data, shape })
    }

    /// Zero latent of the given shape.
    pub fn zeros(shape: Shape) -> Result<Self> {
        Self::with_shape(vec![0.0; shape.len()], shape)
    }

    /// Bypasses validation; callers must uphold the invariants themselves.
    pub(crate) fn raw(data: Vec<f64>, shape: Shape) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self { data, shape }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Dimension of the underlying vector.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Re-label with a new shape of the same length.
    pub fn reshaped(&self, shape: Shape) -> Result<Self> {
        Self::with_shape(self.data.clone(), shape)
    }
}

fn check_dims(a: &Latent, b: &Latent) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Linear interpolation `t * x1 + (1 - t) * x0` for `t` in `[0, 1]`.
///
/// This is the path a rectified flow is trained along; its time derivative
/// `x1 - x0` is the regression target for the velocity field.
pub fn interpolate(x0: &Latent, x1: &Latent, t: f64) -> Result<Latent> {
    check_dims(x0, x1)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    let data = x0
        .data
        .iter()
        .zip(&x1.data)
        .map(|(a, b)| t * b + (1.0 - t) * a)
        .collect();
    Ok(Latent::raw(data, x0.shape))
}

/// Euclidean inner product.
pub fn dot(a: &Latent, b: &Latent) -> Result<f64> {
    check_dims(a, b)?;
    Ok(dot_slice(&a.data, &b.data))
}

/// Euclidean (L2) norm.
pub fn norm(a: &Latent) -> f64 {
    norm_slice(&a.data)
}

/// `s * a + b`; the result keeps `b`'s shape (so Euler updates keep the
/// state's shape no matter how the velocity was labeled).
pub fn axpy(s: f64, a: &Latent, b: &Latent) -> Result<Latent> {
    check_dims(a, b)?;
    let data = a.data.iter().zip(&b.data).map(|(x, y)| s * x + y).collect();
    Ok(Latent::raw(data, b.shape))
}

pub(crate) fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_slice(a: &[f64]) -> f64 {
    math::sqrt(dot_slice(a, a))
}

/// Strictly increasing solver times `t_0 = 0 < t_1 < ... < t_{T-1} < 1`.
///
/// Step `i` advances by `dt_i = t_{i+1} - t_i`; the final step advances by
/// `1 - t_{T-1}` so the integration always lands exactly on `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    steps: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid `t_i = i / T`. The canonical rectified-flow choice; use
    /// [`TimeGrid::from_points`] for shifted or custom spacings.
    pub fn uniform(step_count: usize) -> Result<Self> {
        if step_count == 0 {
            return Err(Error::InvalidGrid("a grid needs at least one step"));
        }
        let t = step_count as f64;
        Self::from_points((0..step_count).map(|i| i as f64 / t).collect())
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("a grid needs at least one step"));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at t = 0"));
        }
        if !points.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidGrid("grid times must be finite"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("grid times must be strictly increasing"));
        }
        if *points.last().expect("non-empty") >= 1.0 {
            return Err(Error::InvalidGrid("grid must end strictly before t = 1"));
        }
        Ok(Self { steps: points })
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn time(&self, step: usize) -> f64 {
        self.steps[step]
    }

    /// Step size at `step`; the last step reaches `t = 1`.
    pub fn dt(&self, step: usize) -> f64 {
        match self.steps.get(step + 1) {
            Some(next) => next - self.steps[step],
            None => 1.0 - self.steps[step],
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat2(a: f64, b: f64) -> Latent {
        Latent::flat(vec![a, b]).unwrap()
    }

    #[test]
    fn interpolate_endpoints() {
        let x0 = flat2(1.0, 0.0);
        let x1 = flat2(0.0, 1.0);
        assert_eq!(interpolate(&x0, &x1, 0.0).unwrap(), x0);
        assert_eq!(interpolate(&x0, &x1, 1.0).unwrap(), x1);
    }

    #[test]
    fn interpolate_midpoint() {
        let x0 = flat2(2.0, 0.0);
        let x1 = flat2(0.0, 2.0);
        let mid = interpolate(&x0, &x1, 0.5).unwrap();
        assert_eq!(mid.data(), &[1.0, 1.0]);
    }

    #[test]
    fn interpolate_rejects_bad_inputs() {
        let x0 = flat2(1.0, 0.0);
        let x1 = Latent::flat(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            interpolate(&x0, &x1, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        let x1 = flat2(0.0, 1.0);
        assert!(matches!(
            interpolate(&x0, &x1, 1.5),
            Err(Error::TimeOutOfRange(_))
        ));
        assert!(matches!(
            interpolate(&x0, &x1, -0.1),
            Err(Error::TimeOutOfRange(_))
        ));
    }

    #[test]
    fn vector_ops_hand_values() {
        assert_eq!(dot(&flat2(1.0, 0.0), &flat2(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(norm(&flat2(3.0, 4.0)), 5.0);
        let r = axpy(2.0, &flat2(1.0, 1.0), &flat2(0.0, 1.0)).unwrap();
        assert_eq!(r.data(), &[2.0, 3.0]);
    }

    #[test]
    fn construction_invariants() {
        assert!(matches!(
            Latent::flat(vec![1.0]),
            Err(Error::DimensionTooSmall(1))
        ));
        assert!(matches!(
            Latent::flat(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteInput)
        ));
        assert!(matches!(
            Latent::grid(2, 3, vec![0.0; 5]),
            Err(Error::InvalidShape { .. })
        ));
        assert!(Latent::grid(2, 3, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn grid_shape_is_metadata_only() {
        let a = Latent::grid(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Latent::flat(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(norm(&a), norm(&b));
        assert_eq!(dot(&a, &b).unwrap(), 30.0);
    }

    #[test]
    fn uniform_grid_layout() {
        let g = TimeGrid::uniform(4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(g.dt(0), 0.25);
        // Last step closes the gap to t = 1.
        assert_eq!(g.dt(3), 0.25);
        let total: f64 = (0..g.len()).map(|i| g.dt(i)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            TimeGrid::from_points(vec![0.1, 0.5]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            TimeGrid::from_points(vec![0.0, 0.5, 0.5]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            TimeGrid::from_points(vec![0.0, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(TimeGrid::from_points(vec![0.0, 0.3, 0.9]).is_ok());
    }

    proptest! {
        // interpolate is affine in t: the value at the midpoint of two times
        // equals the midpoint of the two interpolants.
        #[test]
        fn prop_interpolate_affine_in_t(
            x0 in proptest::collection::vec(-10.0f64..10.0, 2..8),
            x1 in proptest::collection::vec(-10.0f64..10.0, 2..8),
            ta in 0.0f64..1.0,
            tb in 0.0f64..1.0,
        ) {
            let d = x0.len().min(x1.len());
            let x0 = Latent::flat(x0[..d].to_vec()).unwrap();
            let x1 = Latent::flat(x1[..d].to_vec()).unwrap();
            let mid_t = interpolate(&x0, &x1, 0.5 * (ta + tb)).unwrap();
            let a = interpolate(&x0, &x1, ta).unwrap();
            let b = interpolate(&x0, &x1, tb).unwrap();
            let mid_v = interpolate(&a, &b, 0.5).unwrap();
            let scale = norm(&mid_t).max(1.0);
            for (p, q) in mid_t.data().iter().zip(mid_v.data()) {
                prop_assert!((p - q).abs() <= 1e-12 * scale);
            }
        }

        // a - a is exactly zero in floating point.
        #[test]
        fn prop_axpy_self_cancellation(
            a in proptest::collection::vec(-1e6f64..1e6, 2..16),
        ) {
            let a = Latent::flat(a).unwrap();
            let z = axpy(-1.0, &a, &a).unwrap();
            prop_assert!(norm(&z) <= 1e-14 * norm(&a));
        }
    }
}
