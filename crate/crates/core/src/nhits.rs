//! N-HiTS: blocks that read a pooled (coarser) view of the residual input and
//! emit a few knots that are linearly interpolated up to the full horizon.
//!
//! Blocks are ordered coarse to fine. "Level" here means a block index; `L`
//! always means the lookback length.

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ForecastModel;
use crate::neural::checkpoint::Checkpoint;
use crate::neural::forecaster::{fit_net, forecast_recursive, net_parameters, predict_net, scaled_context};
use crate::neural::{BasisBlock, History, Network, PoolKind, Pooling, ResidualStackNet, Stack, TrainConfig};
use crate::series::{Scaler, Series};

/// Non-overlapping pooling of `x` after left zero padding to a multiple of
/// `pool_size`.
pub fn pool_input(x: &[f64], pool_size: usize, kind: PoolKind) -> Result<Vec<f64>> {
    if pool_size == 0 {
        return Err(Error::InvalidPoolSize(pool_size));
    }
    let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("one row");
    let (out, _) = Pooling { kind, size: pool_size }.apply(&row);
    Ok(out.row(0).to_vec())
}

/// `n x len` matrix mapping `n` knots, spread evenly over `[0, len - 1]`, to
/// `len` linearly interpolated values.
pub fn interpolation_matrix(n: usize, len: usize) -> Result<Array2<f64>> {
    if n > len {
        return Err(Error::TooManyCoeffs { coeffs: n, horizon: len });
    }
    if n == 0 {
        return Err(Error::Config("at least one coefficient is required".into()));
    }
    let mut m = Array2::zeros((n, len));
    if n == 1 {
        m.fill(1.0);
        return Ok(m);
    }
    for i in 0..len {
        let pos = (i * (n - 1)) as f64 / (len - 1) as f64;
        let lo = (pos.floor() as usize).min(n - 1);
        let frac = pos - lo as f64;
        m[[lo, i]] += 1.0 - frac;
        if frac > 0.0 {
            m[[lo + 1, i]] += frac;
        }
    }
    Ok(m)
}

pub fn interpolate_forecast(coeffs: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let m = interpolation_matrix(coeffs.len(), horizon)?;
    Ok((0..horizon)
        .map(|i| coeffs.iter().zip(m.column(i)).map(|(c, w)| c * w).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NHitsConfig {
    pub lookback: usize,
    pub horizon: usize,
    /// One block per entry, coarse to fine.
    pub pools: Vec<usize>,
    pub pool_kind: PoolKind,
    /// Forecast knots per block; defaults to `ceil(horizon / pool)`.
    pub forecast_coeffs: Option<Vec<usize>>,
    /// Backcast knots per block; defaults to `ceil(lookback / pool)`.
    pub backcast_coeffs: Option<Vec<usize>>,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub train: TrainConfig,
}

impl Default for NHitsConfig {
    fn default() -> Self {
        Self::new(120, 24)
    }
}

impl NHitsConfig {
    pub fn new(lookback: usize, horizon: usize) -> Self {
        Self {
            lookback,
            horizon,
            pools: vec![8, 4, 1],
            pool_kind: PoolKind::Max,
            forecast_coeffs: None,
            backcast_coeffs: None,
            hidden_width: 256,
            hidden_layers: 2,
            train: TrainConfig::default(),
        }
    }

    /// `(pool, n_b, n_f)` for every block.
    pub fn block_layout(&self) -> Result<Vec<(usize, usize, usize)>> {
        let pick = |given: &Option<Vec<usize>>, len: usize| -> Result<Vec<usize>> {
            match given {
                Some(v) if v.len() != self.pools.len() => Err(Error::Config(format!(
                    "{} coefficient counts for {} blocks",
                    v.len(),
                    self.pools.len()
                ))),
                Some(v) => Ok(v.clone()),
                None => Ok(self.pools.iter().map(|p| len.div_ceil((*p).max(1))).collect()),
            }
        };
        let n_b = pick(&self.backcast_coeffs, self.lookback)?;
        let n_f = pick(&self.forecast_coeffs, self.horizon)?;
        Ok(self
            .pools
            .iter()
            .zip(n_b)
            .zip(n_f)
            .map(|((p, b), f)| (*p, b, f))
            .collect())
    }
}

/// Builds one N-HiTS block.
#[allow(clippy::too_many_arguments)]
pub fn nhits_block(
    pool: Pooling,
    lookback: usize,
    horizon: usize,
    backcast_coeffs: usize,
    forecast_coeffs: usize,
    hidden_layers: usize,
    width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BasisBlock> {
    if pool.size == 0 {
        return Err(Error::InvalidPoolSize(0));
    }
    BasisBlock::new(
        pool,
        lookback,
        hidden_layers,
        width,
        interpolation_matrix(backcast_coeffs, lookback)?,
        interpolation_matrix(forecast_coeffs, horizon)?,
        rng,
    )
}

pub fn block_forward(block: &BasisBlock, residual: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    crate::nbeats::block_forward(block, residual)
}

/// Forecast split into per-level signals, on the standardised scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NHitsOutput {
    pub forecast: Vec<f64>,
    /// One forecast per block, coarse first; they sum to `forecast`.
    pub levels: Vec<Vec<f64>>,
    pub backcasts: Vec<Vec<f64>>,
    /// Whatever of the input no block explained.
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NHitsModel {
    pub config: NHitsConfig,
    pub net: ResidualStackNet,
    scaler: Option<Scaler>,
    history: Option<History>,
}

impl NHitsModel {
    pub fn new(config: NHitsConfig) -> Result<Self> {
        if config.lookback == 0 || config.horizon == 0 {
            return Err(Error::Config("lookback and horizon must be positive".into()));
        }
        if config.pools.is_empty() {
            return Err(Error::Config("N-HiTS needs at least one block".into()));
        }
        if config.pools.windows(2).any(|w| w[1] > w[0]) {
            log::warn!("pool sizes {:?} are not coarse to fine", config.pools);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.train.seed);
        let blocks = config
            .block_layout()?
            .into_iter()
            .map(|(p, n_b, n_f)| {
                nhits_block(
                    Pooling {
                        kind: config.pool_kind,
                        size: p,
                    },
                    config.lookback,
                    config.horizon,
                    n_b,
                    n_f,
                    config.hidden_layers,
                    config.hidden_width,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let net = ResidualStackNet::new(vec![Stack {
            name: "nhits".into(),
            blocks,
        }])?;
        Ok(Self {
            config,
            net,
            scaler: None,
            history: None,
        })
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    pub fn history(&self) -> Option<&History> {
        self.history.as_ref()
    }

    pub fn model_forward(&self, x: &[f64]) -> Result<NHitsOutput> {
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
        Ok(NHitsOutput {
            forecast: first(&d.forecast),
            levels: d.block_forecasts.iter().map(first).collect(),
            backcasts: d.block_backcasts.iter().map(first).collect(),
            residual: first(&d.residual),
        })
    }

    pub fn explain(&self, context: &[f64]) -> Result<NHitsOutput> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        let x = scaled_context(scaler, context, self.config.lookback)?;
        self.model_forward(x.row(0).as_slice().expect("contiguous"))
    }

    pub fn fit(&mut self, train: &Series) -> Result<&History> {
        let (scaler, history) = fit_net(&mut self.net, train, &self.config.train)?;
        self.scaler = Some(scaler);
        Ok(self.history.insert(history))
    }

    pub fn predict(&self, context: &[f64]) -> Result<Vec<f64>> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        predict_net(&self.net, scaler, context)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let scaler = self.scaler.as_ref().ok_or(Error::NotFitted)?;
        let header = serde_json::to_string(&serde_json::json!({
            "kind": "nhits",
            "config": self.config,
            "scaler": scaler,
        }))
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Checkpoint::from_layers(header, &self.net.layer_names(), self.net.layers()).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ckpt = Checkpoint::load(path)?;
        let header: serde_json::Value =
            serde_json::from_str(&ckpt.header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if header["kind"] != "nhits" {
            return Err(Error::Checkpoint("not an N-HiTS checkpoint".into()));
        }
        let config: NHitsConfig = serde_json::from_value(header["config"].clone())
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

impl ForecastModel for NHitsModel {
    fn name(&self) -> &str {
        "NHITS"
    }

    fn fit(&mut self, train: &Series) -> Result<()> {
        NHitsModel::fit(self, train).map(|_| ())
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
