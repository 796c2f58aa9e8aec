use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// Fully connected layer `activation(W x + b)` with `W` stored out x in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::ShapeMismatch(format!(
                "weights have {} rows but bias has {} entries",
                weights.nrows(),
                bias.len()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || rng.random_range(-bound..=bound));
        Self {
            weights,
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// One sample per row.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(Error::ShapeMismatch(format!(
                "layer expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        Ok(self.apply(x.view()))
    }

    pub(crate) fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias;
        if self.activation == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }

    /// Backpropagates `d_out` given the layer input and output of the forward pass.
    ///
    /// The ReLU subgradient at zero is taken as zero.
    pub(crate) fn backward(
        &self,
        input: &Array2<f64>,
        output: &Array2<f64>,
        d_out: &Array2<f64>,
    ) -> (LayerGrad, Array2<f64>) {
        let dz = match self.activation {
            Activation::Identity => d_out.clone(),
            Activation::Relu => {
                let mut dz = d_out.clone();
                dz.zip_mut_with(output, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                dz
            }
        };
        let grad = LayerGrad {
            weights: dz.t().dot(input),
            bias: dz.sum_axis(Axis(0)),
        };
        let d_in = dz.dot(&self.weights);
        (grad, d_in)
    }
}

/// Applies a single layer to a batch; see [`DenseLayer::forward`].
pub fn forward(layer: &DenseLayer, x: &Array2<f64>) -> Result<Array2<f64>> {
    layer.forward(x)
}

/// Gradient of a loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: Array2::zeros(layer.weights.raw_dim()),
            bias: Array1::zeros(layer.bias.raw_dim()),
        }
    }

    pub fn matches(&self, layer: &DenseLayer) -> bool {
        self.weights.dim() == layer.weights.dim() && self.bias.len() == layer.bias.len()
    }
}

/// Per-layer gradients in the same order as [`super::Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like<'a>(layers: impl IntoIterator<Item = &'a DenseLayer>) -> Self {
        Self {
            layers: layers.into_iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for g in &mut self.layers {
            g.weights *= k;
            g.bias *= k;
        }
        self
    }

    /// Flattened in layer order, weights before bias.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
            .collect()
    }
}
