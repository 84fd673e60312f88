//! A small dense MLP velocity field with Fourier time features.
//!
//! This plays the role of "the expensive model": a learned field whose
//! forward pass is what the estimated steps avoid. It is deliberately plain —
//! dense layers, one activation, manual forward pass — so weights serialize
//! to a flat, inspectable format.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::Error;
use crate::field::{check_field_dim, EvalCounter, VelocityField};
use crate::latent::{Latent, Velocity};
use crate::math;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Gelu,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            "gelu" => Ok(Self::Gelu),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Relu => "relu",
            Self::Gelu => "gelu",
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Self::Tanh => math::tanh(z),
            Self::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            // tanh form of gelu
            Self::Gelu => 0.5 * z * (1.0 + math::tanh(GELU_C * (z + 0.044715 * z * z * z))),
        }
    }

    /// Derivative at `z` (pre-activation).
    pub fn grad(self, z: f64) -> f64 {
        match self {
            Self::Tanh => {
                let t = math::tanh(z);
                1.0 - t * t
            }
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gelu => {
                let inner = GELU_C * (z + 0.044715 * z * z * z);
                let t = math::tanh(inner);
                let dinner = GELU_C * (1.0 + 3.0 * 0.044715 * z * z);
                0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * dinner
            }
        }
    }
}

/// sqrt(2/pi)
const GELU_C: f64 = 0.7978845608028654;

/// Timestep embedding appended to the latent before the first layer:
/// optionally the raw `t`, then `fourier_pairs` pairs
/// `(sin(2^k pi t), cos(2^k pi t))` for `k = 0..pairs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeFeatures {
    pub fourier_pairs: usize,
    pub include_raw: bool,
}

impl Default for TimeFeatures {
    fn default() -> Self {
        Self {
            fourier_pairs: 4,
            include_raw: true,
        }
    }
}

impl TimeFeatures {
    pub fn len(&self) -> usize {
        usize::from(self.include_raw) + 2 * self.fourier_pairs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, t: f64, out: &mut Vec<f64>) {
        if self.include_raw {
            out.push(t);
        }
        let mut freq = core::f64::consts::PI;
        for _ in 0..self.fourier_pairs {
            out.push(math::sin(freq * t));
            out.push(math::cos(freq * t));
            freq *= 2.0;
        }
    }
}

/// One dense layer, weights row-major `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn new(in_dim: usize, out_dim: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if w.len() != in_dim * out_dim || b.len() != out_dim {
            return Err(Error::InvalidParameter("layer weight shapes inconsistent"));
        }
        if !w.iter().chain(b.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            in_dim,
            out_dim,
            w,
            b,
        })
    }

    /// `out = W * input + b`, written into `out` (resized as needed).
    pub(crate) fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.in_dim);
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug)]
pub struct MlpField {
    layers: Vec<Layer>,
    activation: Activation,
    time_features: TimeFeatures,
    data_dim: usize,
    calls: EvalCounter,
}

impl MlpField {
    /// The input of the first layer must be `data_dim + time_features.len()`
    /// where `data_dim` is the output of the last layer.
    pub fn new(
        layers: Vec<Layer>,
        activation: Activation,
        time_features: TimeFeatures,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("mlp needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::InvalidParameter("layer dimensions do not chain"));
            }
        }
        let data_dim = layers.last().expect("non-empty").out_dim;
        if data_dim < 2 {
            return Err(Error::DimensionTooSmall(data_dim));
        }
        if layers[0].in_dim != data_dim + time_features.len() {
            return Err(Error::InvalidParameter(
                "first layer must accept latent plus time features",
            ));
        }
        Ok(Self {
            layers,
            activation,
            time_features,
            data_dim,
            calls: EvalCounter::new(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn time_features(&self) -> TimeFeatures {
        self.time_features
    }

    /// Forward pass on a raw slice (time features already appended).
    pub(crate) fn forward_raw(&self, input: &[f64]) -> Vec<f64> {
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut next);
            if i != last {
                for z in next.iter_mut() {
                    *z = self.activation.apply(*z);
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub(crate) fn embed(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut input = Vec::with_capacity(x.len() + self.time_features.len());
        input.extend_from_slice(x);
        self.time_features.write(t, &mut input);
        input
    }
}

impl VelocityField for MlpField {
    fn dim(&self) -> usize {
        self.data_dim
    }

    fn evaluate(&self, x: &Latent, _condition: Option<&[f64]>, t: f64) -> Result<Velocity> {
        check_field_dim(self.data_dim, x)?;
        self.calls.bump();
        let out = self.forward_raw(&self.embed(x.data(), t));
        Latent::with_shape(out, x.shape())
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
    use alloc::vec;

    fn no_time() -> TimeFeatures {
        TimeFeatures {
            fourier_pairs: 0,
            include_raw: false,
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let layers = vec![
            Layer::new(2, 3, vec![0.0; 6], vec![0.0; 3]).unwrap(),
            Layer::new(3, 2, vec![0.0; 6], vec![0.0; 2]).unwrap(),
        ];
        let f = MlpField::new(layers, Activation::Tanh, no_time()).unwrap();
        let x = Latent::flat(vec![1.0, -2.0]).unwrap();
        let v = f.evaluate(&x, None, 0.3).unwrap();
        assert_eq!(v.data(), &[0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layers = vec![Layer::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap()];
        let f = MlpField::new(layers, Activation::Relu, no_time()).unwrap();
        let x = Latent::flat(vec![0.25, -4.0]).unwrap();
        let v = f.evaluate(&x, None, 0.9).unwrap();
        assert_eq!(v.data(), x.data());
    }

    #[test]
    fn shape_validation() {
        // First layer must account for time features.
        let layers = vec![Layer::new(2, 2, vec![0.0; 4], vec![0.0; 2]).unwrap()];
        assert!(matches!(
            MlpField::new(layers, Activation::Tanh, TimeFeatures::default()),
            Err(Error::InvalidParameter(_))
        ));

        let layers = vec![
            Layer::new(2, 3, vec![0.0; 6], vec![0.0; 3]).unwrap(),
            Layer::new(4, 2, vec![0.0; 8], vec![0.0; 2]).unwrap(),
        ];
        assert!(matches!(
            MlpField::new(layers, Activation::Tanh, no_time()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unknown_activation_rejected() {
        assert!(matches!(
            Activation::parse("swish"),
            Err(Error::UnknownActivation(_))
        ));
        assert_eq!(Activation::parse("gelu").unwrap(), Activation::Gelu);
    }

    #[test]
    fn time_feature_layout() {
        let tf = TimeFeatures::default();
        assert_eq!(tf.len(), 9);
        let mut out = Vec::new();
        tf.write(0.5, &mut out);
        assert_eq!(out.len(), 9);
        assert_eq!(out[0], 0.5);
        // sin(pi/2) = 1, cos(pi/2) = 0
        assert!((out[1] - 1.0).abs() < 1e-15);
        assert!(out[2].abs() < 1e-15);
    }

    #[test]
    fn activation_gradients_match_finite_differences() {
        let h = 1e-6;
        for act in [Activation::Tanh, Activation::Relu, Activation::Gelu] {
            for &z in &[-1.3, -0.2, 0.4, 2.1] {
                let fd = (act.apply(z + h) - act.apply(z - h)) / (2.0 * h);
                assert!(
                    (act.grad(z) - fd).abs() < 1e-6,
                    "{:?} at {z}: {} vs {fd}",
                    act,
                    act.grad(z)
                );
            }
        }
    }
}
