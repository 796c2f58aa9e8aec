use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layer::{DenseLayer, Gradients};
use crate::error::{Error, Result};

/// Training objective, averaged over every output element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
    Mae,
}

impl Loss {
    /// Loss value and its gradient with respect to `predicted`.
    pub fn evaluate(&self, predicted: &Array2<f64>, targets: &Array2<f64>) -> (f64, Array2<f64>) {
        let n = predicted.len() as f64;
        let diff = predicted - targets;
        match self {
            Loss::Mse => {
                let value = diff.iter().map(|d| d * d).sum::<f64>() / n;
                (value, diff.mapv(|d| 2.0 * d / n))
            }
            Loss::Mae => {
                let value = diff.iter().map(|d| d.abs()).sum::<f64>() / n;
                let grad = diff.mapv(|d| {
                    if d > 0.0 {
                        1.0 / n
                    } else if d < 0.0 {
                        -1.0 / n
                    } else {
                        0.0
                    }
                });
                (value, grad)
            }
        }
    }

    pub fn value(&self, predicted: &Array2<f64>, targets: &Array2<f64>) -> f64 {
        let n = predicted.len() as f64;
        match self {
            Loss::Mse => predicted
                .iter()
                .zip(targets)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / n,
            Loss::Mae => predicted
                .iter()
                .zip(targets)
                .map(|(p, t)| (p - t).abs())
                .sum::<f64>()
                / n,
        }
    }
}

/// A differentiable map from lookback rows to horizon rows whose trainable
/// parameters are all dense layers.
pub trait Network {
    /// Whatever the backward pass needs from the forward pass.
    type Cache;

    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;

    fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, Self::Cache)>;

    /// Parameter gradients given the gradient of the loss w.r.t. the output.
    fn backward_cached(&self, cache: &Self::Cache, d_out: &Array2<f64>) -> Gradients;

    fn layers(&self) -> Vec<&DenseLayer>;
    fn layers_mut(&mut self) -> Vec<&mut DenseLayer>;

    fn predict_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.parameter_count()).sum()
    }
}

/// Loss and analytic gradients for one batch.
pub fn backward<N: Network>(
    net: &N,
    x: &Array2<f64>,
    targets: &Array2<f64>,
    loss: Loss,
) -> Result<(f64, Gradients)> {
    if targets.nrows() != x.nrows() || targets.ncols() != net.output_len() {
        return Err(Error::ShapeMismatch(format!(
            "targets {:?} for {} samples of {} outputs",
            targets.dim(),
            x.nrows(),
            net.output_len()
        )));
    }
    let (out, cache) = net.forward_cached(x)?;
    let (value, d_out) = loss.evaluate(&out, targets);
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((value, net.backward_cached(&cache, &d_out)))
}

/// A plain stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("empty layer stack".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::ShapeMismatch(format!(
                    "layer with {} outputs feeds layer with {} inputs",
                    pair[0].outputs(),
                    pair[1].inputs()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Returns every intermediate activation, input first.
    pub(crate) fn activations(&self, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
        if x.ncols() != self.layers[0].inputs() {
            return Err(Error::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.layers[0].inputs(),
                x.ncols()
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = layer.apply(acts.last().expect("non-empty").view());
            acts.push(next);
        }
        Ok(acts)
    }

    /// Parameter gradients and the gradient w.r.t. the input.
    pub(crate) fn backprop(&self, acts: &[Array2<f64>], d_out: &Array2<f64>) -> (Gradients, Array2<f64>) {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_out.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (g, d_in) = layer.backward(&acts[i], &acts[i + 1], &delta);
            grads.push(g);
            delta = d_in;
        }
        grads.reverse();
        (Gradients { layers: grads }, delta)
    }
}

impl Network for Mlp {
    type Cache = Vec<Array2<f64>>;

    fn input_len(&self) -> usize {
        self.layers[0].inputs()
    }

    fn output_len(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, Self::Cache)> {
        let acts = self.activations(x)?;
        Ok((acts.last().expect("non-empty").clone(), acts))
    }

    fn backward_cached(&self, cache: &Self::Cache, d_out: &Array2<f64>) -> Gradients {
        self.backprop(cache, d_out).0
    }

    fn layers(&self) -> Vec<&DenseLayer> {
        self.layers.iter().collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        self.layers.iter_mut().collect()
    }
}

/// Central-difference gradient of `backward`'s loss w.r.t. every parameter,
/// flattened like [`Gradients::flatten`]. Slow; for checks only.
pub fn numeric_gradient<N: Network>(
    net: &mut N,
    x: &Array2<f64>,
    targets: &Array2<f64>,
    loss: Loss,
    eps: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(net.parameter_count());
    let eval = |net: &N| -> Result<f64> { Ok(loss.value(&net.predict_batch(x)?, targets)) };
    let n_layers = net.layers().len();
    for li in 0..n_layers {
        let (rows, cols) = net.layers()[li].weights.dim();
        for r in 0..rows {
            for c in 0..cols {
                let orig = net.layers()[li].weights[[r, c]];
                net.layers_mut()[li].weights[[r, c]] = orig + eps;
                let plus = eval(net)?;
                net.layers_mut()[li].weights[[r, c]] = orig - eps;
                let minus = eval(net)?;
                net.layers_mut()[li].weights[[r, c]] = orig;
                out.push((plus - minus) / (2.0 * eps));
            }
        }
        for b in 0..net.layers()[li].bias.len() {
            let orig = net.layers()[li].bias[b];
            net.layers_mut()[li].bias[b] = orig + eps;
            let plus = eval(net)?;
            net.layers_mut()[li].bias[b] = orig - eps;
            let minus = eval(net)?;
            net.layers_mut()[li].bias[b] = orig;
            out.push((plus - minus) / (2.0 * eps));
        }
    }
    Ok(out)
}

/// Largest relative disagreement between analytic and numeric gradients.
///
/// Components where both are tiny are compared absolutely against `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs());
            if scale < floor {
                (a - n).abs() / floor
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}
