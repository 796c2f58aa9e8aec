//! Doubly residual stacks of basis-expansion blocks.
//!
//! Every block reads the running input residual, optionally pools it, runs a
//! dense stack ending in a linear coefficient layer, and maps the two halves
//! of the coefficients through fixed linear bases into a backcast and a
//! forecast. The backcast is subtracted from the residual handed to the next
//! block; forecasts are summed.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, Gradients};
use super::network::{Mlp, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    #[default]
    Max,
    Mean,
}

/// Non-overlapping pooling with left zero-padding to a multiple of `size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pooling {
    pub kind: PoolKind,
    pub size: usize,
}

impl Pooling {
    pub const IDENTITY: Pooling = Pooling {
        kind: PoolKind::Max,
        size: 1,
    };

    pub fn output_len(&self, input_len: usize) -> usize {
        input_len.div_ceil(self.size)
    }

    /// Pooled batch plus, for max pooling, the source column of each output
    /// (`None` when the maximum was a padding zero).
    pub(crate) fn apply(&self, x: &Array2<f64>) -> (Array2<f64>, Vec<Option<usize>>) {
        if self.size == 1 {
            return (x.clone(), Vec::new());
        }
        let (rows, len) = x.dim();
        let out_len = self.output_len(len);
        let pad = out_len * self.size - len;
        let mut out = Array2::zeros((rows, out_len));
        let mut argmax = match self.kind {
            PoolKind::Max => vec![None; rows * out_len],
            PoolKind::Mean => Vec::new(),
        };
        for r in 0..rows {
            for g in 0..out_len {
                let cols = (g * self.size..(g + 1) * self.size).map(|p| p.checked_sub(pad));
                match self.kind {
                    PoolKind::Max => {
                        let mut best = f64::NEG_INFINITY;
                        let mut at = None;
                        for c in cols {
                            let v = c.map_or(0.0, |c| x[[r, c]]);
                            if v > best {
                                best = v;
                                at = c;
                            }
                        }
                        out[[r, g]] = best;
                        argmax[r * out_len + g] = at;
                    }
                    PoolKind::Mean => {
                        let sum: f64 = cols.map(|c| c.map_or(0.0, |c| x[[r, c]])).sum();
                        out[[r, g]] = sum / self.size as f64;
                    }
                }
            }
        }
        (out, argmax)
    }

    pub(crate) fn backward(&self, d_out: &Array2<f64>, input_len: usize, argmax: &[Option<usize>]) -> Array2<f64> {
        if self.size == 1 {
            return d_out.clone();
        }
        let (rows, out_len) = d_out.dim();
        let pad = out_len * self.size - input_len;
        let mut d_in = Array2::zeros((rows, input_len));
        for r in 0..rows {
            for g in 0..out_len {
                let grad = d_out[[r, g]];
                match self.kind {
                    PoolKind::Max => {
                        if let Some(c) = argmax[r * out_len + g] {
                            d_in[[r, c]] += grad;
                        }
                    }
                    PoolKind::Mean => {
                        for p in g * self.size..(g + 1) * self.size {
                            if let Some(c) = p.checked_sub(pad) {
                                d_in[[r, c]] += grad / self.size as f64;
                            }
                        }
                    }
                }
            }
        }
        d_in
    }
}

/// One block: pooling, dense stack, linear coefficient layer, fixed bases.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisBlock {
    pub pooling: Pooling,
    /// Hidden ReLU layers followed by the linear coefficient layer.
    pub mlp: Mlp,
    /// `n_b x lookback`; backcast = theta_b . basis.
    pub backcast_basis: Array2<f64>,
    /// `n_f x horizon`; forecast = theta_f . basis.
    pub forecast_basis: Array2<f64>,
}

/// Forward-pass state kept for backpropagation.
#[derive(Debug, Clone)]
pub struct BlockCache {
    argmax: Vec<Option<usize>>,
    activations: Vec<Array2<f64>>,
}

impl BasisBlock {
    /// Glorot-initialised block with `hidden_layers` ReLU layers of `width`.
    pub fn new<R: Rng + ?Sized>(
        pooling: Pooling,
        lookback: usize,
        hidden_layers: usize,
        width: usize,
        backcast_basis: Array2<f64>,
        forecast_basis: Array2<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        if pooling.size == 0 {
            return Err(Error::InvalidPoolSize(0));
        }
        if hidden_layers == 0 || width == 0 {
            return Err(Error::Config("blocks need at least one hidden layer".into()));
        }
        if backcast_basis.ncols() != lookback {
            return Err(Error::ShapeMismatch(format!(
                "backcast basis spans {} points, lookback is {lookback}",
                backcast_basis.ncols()
            )));
        }
        let theta = backcast_basis.nrows() + forecast_basis.nrows();
        let mut layers = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = pooling.output_len(lookback);
        for _ in 0..hidden_layers {
            layers.push(DenseLayer::glorot(fan_in, width, Activation::Relu, rng));
            fan_in = width;
        }
        layers.push(DenseLayer::glorot(fan_in, theta, Activation::Identity, rng));
        Ok(Self {
            pooling,
            mlp: Mlp::new(layers)?,
            backcast_basis,
            forecast_basis,
        })
    }

    pub fn lookback(&self) -> usize {
        self.backcast_basis.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.forecast_basis.ncols()
    }

    pub fn theta_len(&self) -> (usize, usize) {
        (self.backcast_basis.nrows(), self.forecast_basis.nrows())
    }

    /// Coefficients for a batch of residual rows.
    pub fn theta(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let (_, _, cache) = self.forward_cached(x)?;
        Ok(cache.activations.into_iter().last().expect("non-empty"))
    }

    /// `(backcast, forecast, cache)` for a batch.
    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, BlockCache)> {
        if x.ncols() != self.lookback() {
            return Err(Error::ShapeMismatch(format!(
                "block expects {} inputs, got {}",
                self.lookback(),
                x.ncols()
            )));
        }
        let (pooled, argmax) = self.pooling.apply(x);
        let activations = self.mlp.activations(&pooled)?;
        let theta = activations.last().expect("non-empty");
        let n_b = self.backcast_basis.nrows();
        let backcast = theta.slice(s![.., ..n_b]).dot(&self.backcast_basis);
        let forecast = theta.slice(s![.., n_b..]).dot(&self.forecast_basis);
        Ok((backcast, forecast, BlockCache { argmax, activations }))
    }

    /// Parameter gradients and gradient w.r.t. the block input.
    pub fn backward(
        &self,
        cache: &BlockCache,
        d_backcast: &Array2<f64>,
        d_forecast: &Array2<f64>,
    ) -> (Gradients, Array2<f64>) {
        let d_theta = ndarray::concatenate(
            Axis(1),
            &[
                d_backcast.dot(&self.backcast_basis.t()).view(),
                d_forecast.dot(&self.forecast_basis.t()).view(),
            ],
        )
        .expect("rows agree");
        let (grads, d_pooled) = self.mlp.backprop(&cache.activations, &d_theta);
        let d_in = self.pooling.backward(&d_pooled, self.lookback(), &cache.argmax);
        (grads, d_in)
    }
}

/// A named group of blocks whose forecasts form one partial sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    pub name: String,
    pub blocks: Vec<BasisBlock>,
}

/// Full forward pass with every intermediate quantity exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposed {
    pub forecast: Array2<f64>,
    /// One partial forecast per stack, in stack order.
    pub stack_forecasts: Vec<Array2<f64>>,
    /// One forecast per block, in block order across stacks.
    pub block_forecasts: Vec<Array2<f64>>,
    pub block_backcasts: Vec<Array2<f64>>,
    /// Input minus every backcast.
    pub residual: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStackNet {
    pub stacks: Vec<Stack>,
}

impl ResidualStackNet {
    pub fn new(stacks: Vec<Stack>) -> Result<Self> {
        let first = stacks
            .iter()
            .flat_map(|s| s.blocks.first())
            .next()
            .ok_or_else(|| Error::Config("model needs at least one block".into()))?;
        let (l, h) = (first.lookback(), first.horizon());
        for stack in &stacks {
            if stack.blocks.is_empty() {
                return Err(Error::Config(format!("stack `{}` has no blocks", stack.name)));
            }
            if stack.blocks.iter().any(|b| b.lookback() != l || b.horizon() != h) {
                return Err(Error::ShapeMismatch(format!(
                    "stack `{}` disagrees on lookback/horizon",
                    stack.name
                )));
            }
        }
        Ok(Self { stacks })
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BasisBlock> {
        self.stacks.iter().flat_map(|s| s.blocks.iter())
    }

    fn first_block(&self) -> &BasisBlock {
        self.blocks().next().expect("validated non-empty")
    }

    pub fn decompose(&self, x: &Array2<f64>) -> Result<Decomposed> {
        let mut residual = x.clone();
        let mut forecast = Array2::zeros((x.nrows(), self.output_len()));
        let mut out = Decomposed {
            forecast: Array2::zeros((0, 0)),
            stack_forecasts: Vec::new(),
            block_forecasts: Vec::new(),
            block_backcasts: Vec::new(),
            residual: Array2::zeros((0, 0)),
        };
        for stack in &self.stacks {
            let mut partial = Array2::zeros(forecast.raw_dim());
            for block in &stack.blocks {
                let (b, f, _) = block.forward_cached(&residual)?;
                residual -= &b;
                partial += &f;
                out.block_backcasts.push(b);
                out.block_forecasts.push(f);
            }
            forecast += &partial;
            out.stack_forecasts.push(partial);
        }
        out.forecast = forecast;
        out.residual = residual;
        Ok(out)
    }
}

impl Network for ResidualStackNet {
    type Cache = Vec<BlockCache>;

    fn input_len(&self) -> usize {
        self.first_block().lookback()
    }

    fn output_len(&self) -> usize {
        self.first_block().horizon()
    }

    fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, Self::Cache)> {
        let mut residual = x.clone();
        let mut forecast = Array2::zeros((x.nrows(), self.output_len()));
        let mut caches = Vec::new();
        for block in self.blocks() {
            let (b, f, cache) = block.forward_cached(&residual)?;
            residual -= &b;
            forecast += &f;
            caches.push(cache);
        }
        Ok((forecast, caches))
    }

    fn backward_cached(&self, cache: &Self::Cache, d_out: &Array2<f64>) -> Gradients {
        let blocks: Vec<&BasisBlock> = self.blocks().collect();
        // Gradient w.r.t. the residual leaving the current block; the final
        // residual does not enter the loss.
        let mut d_residual: Array2<f64> = Array2::zeros((d_out.nrows(), self.input_len()));
        let mut per_block = Vec::with_capacity(blocks.len());
        for (block, c) in blocks.iter().zip(cache).rev() {
            let d_backcast = d_residual.mapv(|v| -v);
            let (grads, d_in) = block.backward(c, &d_backcast, d_out);
            d_residual += &d_in;
            per_block.push(grads);
        }
        per_block.reverse();
        Gradients {
            layers: per_block.into_iter().flat_map(|g| g.layers).collect(),
        }
    }

    fn layers(&self) -> Vec<&DenseLayer> {
        self.stacks
            .iter()
            .flat_map(|s| s.blocks.iter())
            .flat_map(|b| b.mlp.layers.iter())
            .collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        self.stacks
            .iter_mut()
            .flat_map(|s| s.blocks.iter_mut())
            .flat_map(|b| b.mlp.layers.iter_mut())
            .collect()
    }
}

impl ResidualStackNet {
    /// Stable tensor names for checkpoints: `stack{i}.block{j}.layer{k}`.
    pub fn layer_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, stack) in self.stacks.iter().enumerate() {
            for (j, block) in stack.blocks.iter().enumerate() {
                for k in 0..block.mlp.layers.len() {
                    names.push(format!("stack{i}.block{j}.layer{k}"));
                }
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn max_pool_with_padding() {
        let p = Pooling { kind: PoolKind::Max, size: 2 };
        let (out, arg) = p.apply(&array![[1.0, 3.0, 2.0, 5.0]]);
        assert_eq!(out, array![[3.0, 5.0]]);
        assert_eq!(arg, vec![Some(1), Some(3)]);
        let (out, arg) = p.apply(&array![[1.0, 2.0, 3.0]]);
        assert_eq!(out, array![[1.0, 3.0]]);
        assert_eq!(arg, vec![Some(0), Some(2)]);
        // A negative group loses to the padding zero.
        let (out, arg) = p.apply(&array![[-1.0, 2.0, 3.0]]);
        assert_eq!(out, array![[0.0, 3.0]]);
        assert_eq!(arg[0], None);
    }

    #[test]
    fn mean_pool_backward_spreads_gradient() {
        let p = Pooling { kind: PoolKind::Mean, size: 2 };
        let (out, _) = p.apply(&array![[1.0, 2.0, 3.0]]);
        assert_eq!(out, array![[0.5, 2.5]]);
        let d = p.backward(&array![[1.0, 1.0]], 3, &[]);
        assert_eq!(d, array![[0.5, 0.5, 0.5]]);
    }
}
