use serde::{Deserialize, Serialize};

use super::layer::{DenseLayer, Gradients};
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u32,
    pub first: Gradients,
    pub second: Gradients,
}

impl AdamState {
    pub fn new<'a>(layers: impl IntoIterator<Item = &'a DenseLayer> + Clone) -> Self {
        Self {
            step: 0,
            first: Gradients::zeros_like(layers.clone()),
            second: Gradients::zeros_like(layers),
        }
    }
}

fn check_shapes(params: &[&mut DenseLayer], grads: &Gradients) -> Result<()> {
    if params.len() != grads.layers.len()
        || params.iter().zip(&grads.layers).any(|(p, g)| !g.matches(p))
    {
        return Err(Error::ShapeMismatch(
            "gradients do not mirror the parameters".into(),
        ));
    }
    Ok(())
}

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut [&mut DenseLayer],
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    check_shapes(params, grads)?;
    check_shapes(params, &state.first)?;
    check_shapes(params, &state.second)?;
    state.step += 1;
    let c1 = 1.0 - BETA1.powi(state.step as i32);
    let c2 = 1.0 - BETA2.powi(state.step as i32);
    let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
    };
    for (i, layer) in params.iter_mut().enumerate() {
        let g = &grads.layers[i];
        let m = &mut state.first.layers[i];
        let v = &mut state.second.layers[i];
        ndarray::Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}

/// Plain gradient descent step.
pub fn sgd_step(params: &mut [&mut DenseLayer], grads: &Gradients, lr: f64) -> Result<()> {
    check_shapes(params, grads)?;
    for (layer, g) in params.iter_mut().zip(&grads.layers) {
        layer.weights.scaled_add(-lr, &g.weights);
        layer.bias.scaled_add(-lr, &g.bias);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::layer::{Activation, LayerGrad};
    use ndarray::{array, Array1, Array2};

    fn layer() -> DenseLayer {
        DenseLayer::new(array![[0.5, -1.0], [2.0, 0.0]], array![0.1, -0.2], Activation::Relu).unwrap()
    }

    fn grads(w: Array2<f64>, b: Array1<f64>) -> Gradients {
        Gradients {
            layers: vec![LayerGrad { weights: w, bias: b }],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut l = layer();
        let before = l.clone();
        let mut state = AdamState::new([&l]);
        let g = Gradients::zeros_like([&l]);
        adam_step(&mut [&mut l], &g, &mut state, 0.01).unwrap();
        assert_eq!(l, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut l = layer();
        let before = l.clone();
        let mut state = AdamState::new([&l]);
        let g = grads(array![[0.3, -2.0], [1e-3, 5.0]], array![-0.7, 0.2]);
        let lr = 0.01;
        adam_step(&mut [&mut l], &g, &mut state, lr).unwrap();
        for ((after, before), g) in l.weights.iter().zip(&before.weights).zip(&g.layers[0].weights) {
            let expected = -lr * g.signum();
            assert!(((after - before) - expected).abs() < 1e-6 * lr / g.abs().min(1.0));
        }
        for ((after, before), g) in l.bias.iter().zip(&before.bias).zip(&g.layers[0].bias) {
            assert!(((after - before) + lr * g.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let g = grads(array![[0.3, -2.0], [1e-3, 5.0]], array![-0.7, 0.2]);
        let run = || {
            let mut l = layer();
            let mut state = AdamState::new([&l]);
            for _ in 0..3 {
                adam_step(&mut [&mut l], &g, &mut state, 0.01).unwrap();
            }
            (l, state)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut l = layer();
        let mut state = AdamState::new([&l]);
        let g = grads(Array2::zeros((3, 2)), Array1::zeros(3));
        assert!(matches!(
            adam_step(&mut [&mut l], &g, &mut state, 0.01),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let mut l = layer();
        let g = grads(array![[1.0, 0.0], [0.0, -1.0]], array![0.0, 2.0]);
        sgd_step(&mut [&mut l], &g, 0.5).unwrap();
        assert_eq!(l.weights, array![[0.0, -1.0], [2.0, 0.5]]);
        assert_eq!(l.bias, array![0.1, -1.2]);
    }
}
