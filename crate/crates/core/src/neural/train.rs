use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::DenseLayer;
use super::network::{backward, Loss, Network};
use super::optim::{adam_step, sgd_step, AdamState, OptimizerKind};
use crate::error::{Error, Result};
use crate::series::WindowSet;

/// Optimisation hyperparameters for the neural forecasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Trailing share of windows held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
    pub loss: Loss,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            max_epochs: 500,
            batch_size: 64,
            patience: 25,
            validation_fraction: 0.1,
            seed: 42,
            loss: Loss::Mse,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be non-negative".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::Config(
                "max_epochs, batch_size and patience must be positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::Config(
                "validation_fraction must lie in (0, 0.5]".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch losses recorded by [`train`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were restored.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl History {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    pub fn best_val_loss(&self) -> f64 {
        self.val_loss.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn snapshot<N: Network>(net: &N) -> Vec<DenseLayer> {
    net.layers().into_iter().cloned().collect()
}

fn restore<N: Network>(net: &mut N, saved: Vec<DenseLayer>) {
    for (slot, layer) in net.layers_mut().into_iter().zip(saved) {
        *slot = layer;
    }
}

/// Mini-batch training with early stopping on a chronological hold-out.
///
/// The last `validation_fraction` of the windows (at least one) is used for
/// validation. With a single window there is nothing to hold out and the
/// end-of-epoch loss on that window drives early stopping instead. On return the network holds
/// the parameters of the best validation epoch.
pub fn train<N: Network>(net: &mut N, windows: &WindowSet, config: &TrainConfig) -> Result<History> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::EmptyWindows);
    }
    if windows.lookback != net.input_len() || windows.horizon != net.output_len() {
        return Err(Error::ShapeMismatch(format!(
            "windows are {}->{} but the network is {}->{}",
            windows.lookback,
            windows.horizon,
            net.input_len(),
            net.output_len()
        )));
    }

    let n = windows.len();
    let n_val = if n >= 2 {
        ((n as f64 * config.validation_fraction).floor() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let fit_set = windows.rows(0..n - n_val);
    let val_set = (n_val > 0).then(|| windows.rows(n - n_val..n));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(net.layers());
    let mut order: Vec<usize> = (0..fit_set.len()).collect();
    let mut history = History::default();
    let mut best = f64::INFINITY;
    let mut best_params = snapshot(net);
    let mut since_best = 0usize;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = fit_set.inputs.select(Axis(0), batch);
            let y = fit_set.targets.select(Axis(0), batch);
            let (loss, grads) = match backward(net, &x, &y, config.loss) {
                Ok(v) => v,
                Err(Error::NonFiniteLoss) => return Err(Error::DivergedLoss(epoch)),
                Err(e) => return Err(e),
            };
            if !grads.is_finite() {
                return Err(Error::DivergedLoss(epoch));
            }
            total += loss * batch.len() as f64;
            let mut params = net.layers_mut();
            match config.optimizer {
                OptimizerKind::Adam => adam_step(&mut params, &grads, &mut adam, config.learning_rate)?,
                OptimizerKind::Sgd => sgd_step(&mut params, &grads, config.learning_rate)?,
            }
        }
        let train_loss = total / fit_set.len() as f64;
        let val_loss = match &val_set {
            Some(v) => config.loss.value(&net.predict_batch(&v.inputs)?, &v.targets),
            None => config.loss.value(&net.predict_batch(&fit_set.inputs)?, &fit_set.targets),
        };
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::DivergedLoss(epoch));
        }
        history.train_loss.push(train_loss);
        history.val_loss.push(val_loss);

        if val_loss < best {
            best = val_loss;
            best_params = snapshot(net);
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    restore(net, best_params);
    log::debug!(
        "trained {} epochs, best validation loss {best:.6} at epoch {}",
        history.epochs(),
        history.best_epoch
    );
    Ok(history)
}
