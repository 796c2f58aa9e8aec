//! N-BEATS: stacks of fully connected blocks whose coefficients are expanded
//! through polynomial (trend), Fourier (seasonality) or identity (generic)
//! bases.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForecastModel;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::forecaster::{fit_net, forecast_recursive, net_parameters, predict_net, scaled_context};
use crate::neural::{BasisBlock, History, Network, Pooling, ResidualStackNet, Stack, TrainConfig};
use crate::series::{Scaler, Series};

/// Expansion applied to a block's coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Basis {
    /// Coefficients are the backcast and forecast themselves.
    Generic,
    Polynomial { degree: usize },
    Fourier { harmonics: usize },
}

impl Basis {
    /// Coefficient count for (backcast, forecast).
    pub fn theta_dims(&self, lookback: usize, horizon: usize) -> (usize, usize) {
        match *self {
            Basis::Generic => (lookback, horizon),
            Basis::Polynomial { degree } => (degree + 1, degree + 1),
            Basis::Fourier { harmonics } => (2 * harmonics + 1, 2 * harmonics + 1),
        }
    }

    /// Basis matrix with one row per coefficient over `len` time steps.
    pub fn matrix(&self, len: usize) -> Array2<f64> {
        match *self {
            Basis::Generic => Array2::eye(len),
            Basis::Polynomial { degree } => polynomial_basis(degree, len),
            Basis::Fourier { harmonics } => fourier_basis(harmonics, len),
        }
    }
}

/// Vandermonde rows `t^j`, `j = 0..=degree`, on `t = i / len`.
pub fn polynomial_basis(degree: usize, len: usize) -> Array2<f64> {
    Array2::from_shape_fn((degree + 1, len), |(j, i)| (i as f64 / len as f64).powi(j as i32))
}

/// Rows `1, cos(2 pi k t), sin(2 pi k t)` for `k = 1..=harmonics` on `t = i / len`.
pub fn fourier_basis(harmonics: usize, len: usize) -> Array2<f64> {
    Array2::from_shape_fn((2 * harmonics + 1, len), |(row, i)| {
        let t = i as f64 / len as f64;
        if row == 0 {
            return 1.0;
        }
        let k = (row + 1) / 2;
        let angle = 2.0 * PI * k as f64 * t;
        if row % 2 == 1 {
            angle.cos()
        } else {
            angle.sin()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NBeatsMode {
    /// Trend stack followed by a seasonality stack.
    #[default]
    Interpretable,
    /// One stack of generic blocks.
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NBeatsConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub mode: NBeatsMode,
    pub hidden_width: usize,
    /// Fully connected ReLU layers per block, before the coefficient layer.
    pub hidden_layers: usize,
    pub trend_blocks: usize,
    pub trend_degree: usize,
    pub seasonality_blocks: usize,
    /// Defaults to `horizon / 2`.
    pub harmonics: Option<usize>,
    pub generic_blocks: usize,
    pub train: TrainConfig,
}

impl Default for NBeatsConfig {
    fn default() -> Self {
        Self::new(120, 24)
    }
}

impl NBeatsConfig {
    pub fn new(lookback: usize, horizon: usize) -> Self {
        Self {
            lookback,
            horizon,
            mode: NBeatsMode::Interpretable,
            hidden_width: 256,
            hidden_layers: 4,
            trend_blocks: 3,
            trend_degree: 2,
            seasonality_blocks: 3,
            harmonics: None,
            generic_blocks: 4,
            train: TrainConfig::default(),
        }
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics.unwrap_or(self.horizon / 2)
    }

    /// `(stack name, basis, block count)` in wiring order.
    pub fn stack_layout(&self) -> Vec<(&'static str, Basis, usize)> {
        match self.mode {
            NBeatsMode::Interpretable => vec![
                ("trend", Basis::Polynomial { degree: self.trend_degree }, self.trend_blocks),
                (
                    "seasonality",
                    Basis::Fourier {
                        harmonics: self.harmonics(),
                    },
                    self.seasonality_blocks,
                ),
            ],
            NBeatsMode::Generic => vec![("generic", Basis::Generic, self.generic_blocks)],
        }
    }
}

/// Builds one N-BEATS block.
pub fn nbeats_block(
    basis: Basis,
    lookback: usize,
    horizon: usize,
    hidden_layers: usize,
    width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BasisBlock> {
    BasisBlock::new(
        Pooling::IDENTITY,
        lookback,
        hidden_layers,
        width,
        basis.matrix(lookback),
        basis.matrix(horizon),
        rng,
    )
}

/// `(backcast, forecast)` of a single block for one lookback vector.
pub fn block_forward(block: &BasisBlock, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != block.lookback() {
        return Err(Error::ShapeMismatch(format!(
            "block expects {} inputs, got {}",
            block.lookback(),
            x.len()
        )));
    }
    let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("length checked");
    let (b, f, _) = block.forward_cached(&row)?;
    Ok((b.row(0).to_vec(), f.row(0).to_vec()))
}

/// Forecast with its additive parts, on the network's (standardised) scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NBeatsOutput {
    pub forecast: Vec<f64>,
    /// `(stack name, partial forecast)`; the partials sum to `forecast`.
    pub stack_partials: Vec<(String, Vec<f64>)>,
    pub block_forecasts: Vec<Vec<f64>>,
    pub block_backcasts: Vec<Vec<f64>>,
    /// Input minus every backcast.
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NBeatsModel {
    pub config: NBeatsConfig,
    pub net: ResidualStackNet,
    scaler: Option<Scaler>,
    history: Option<History>,
}

impl NBeatsModel {
    /// Freshly initialised network; weights are seeded from `config.train.seed`.
    pub fn new(config: NBeatsConfig) -> Result<Self> {
        if config.lookback == 0 || config.horizon == 0 {
            return Err(Error::Config("lookback and horizon must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
        let mut stacks = Vec::new();
        for (name, basis, count) in config.stack_layout() {
            let blocks = (0..count)
                .map(|_| {
                    nbeats_block(
                        basis,
                        config.lookback,
                        config.horizon,
                        config.hidden_layers,
                        config.hidden_width,
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            stacks.push(Stack {
                name: name.to_string(),
                blocks,
            });
        }
        Ok(Self {
            net: ResidualStackNet::new(stacks)?,
            config,
            scaler: None,
            history: None,
        })
    }

    pub fn from_net(config: NBeatsConfig, net: ResidualStackNet) -> Self {
        Self {
            config,
            net,
            scaler: None,
            history: None,
        }
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    pub fn history(&self) -> Option<&History> {
        self.history.as_ref()
    }

    /// Runs the stacks on one lookback vector of network-scale values.
    pub fn model_forward(&self, x: &[f64]) -> Result<NBeatsOutput> {
        if x.len() != self.config.lookback {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} inputs, got {}",
                self.config.lookback,
                x.len()
            )));
        }
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("length checked");
        let d = self.net.decompose(&row)?;
        let first = |a: &Array2<f64>| a.row(0).to_vec();
        Ok(NBeatsOutput {
            forecast: first(&d.forecast),
            stack_partials: self
                .net
                .stacks
                .iter()
                .zip(&d.stack_forecasts)
                .map(|(s, p)| (s.name.clone(), first(p)))
                .collect(),
            block_forecasts: d.block_forecasts.iter().map(first).collect(),
            block_backcasts: d.block_backcasts.iter().map(first).collect(),
            residual: first(&d.residual),
        })
    }

    /// Decomposes the forecast that follows `context` (original units in,
    /// standardised parts out).
    pub fn explain(&self, context: &[f64]) -> Result<NBeatsOutput> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        let x = scaled_context(scaler, context, self.config.lookback)?;
        self.model_forward(x.row(0).as_slice().expect("contiguous"))
    }

    pub fn fit(&mut self, train: &Series) -> Result<&History> {
        let (scaler, history) = fit_net(&mut self.net, train, &self.config.train)?;
        self.scaler = Some(scaler);
        Ok(self.history.insert(history))
    }

    /// Forecast of `horizon` values after the last `lookback` values of `context`.
    pub fn predict(&self, context: &[f64]) -> Result<Vec<f64>> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        predict_net(&self.net, scaler, context)
    }

    fn header(&self) -> Result<String> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        serde_json::to_string(&serde_json::json!({
            "kind": "nbeats",
            "config": self.config,
            "scaler": scaler,
        }))
        .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let ckpt = Checkpoint::from_layers(self.header()?, &self.net.layer_names(), self.net.layers());
        ckpt.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ckpt = Checkpoint::load(path)?;
        let header: serde_json::Value =
            serde_json::from_str(&ckpt.header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if header["kind"] != "nbeats" {
            return Err(Error::Checkpoint("not an N-BEATS checkpoint".into()));
        }
        let config: NBeatsConfig = serde_json::from_value(header["config"].clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let scaler: Scaler = serde_json::from_value(header["scaler"].clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut model = Self::new(config)?;
        let names = model.net.layer_names();
        ckpt.load_into(&names, model.net.layers_mut())?;
        model.scaler = Some(scaler);
        Ok(model)
    }
}

impl ForecastModel for NBeatsModel {
    fn name(&self) -> &str {
        "NBEATS"
    }

    fn fit(&mut self, train: &Series) -> Result<()> {
        NBeatsModel::fit(self, train).map(|_| ())
    }

    fn forecast(&self, history: &[f64], steps: usize) -> Result<Vec<f64>> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        forecast_recursive(&self.net, scaler, history, steps)
    }

    fn parameters(&self) -> Vec<f64> {
        match &self.scaler {
            Some(scaler) => net_parameters(&self.net, scaler),
            None => Vec::new(),
        }
    }
}
