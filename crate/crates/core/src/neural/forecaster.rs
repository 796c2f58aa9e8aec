//! Fit/predict plumbing shared by the residual-stack forecasters.

use ndarray::Array2;

use super::residual::ResidualStackNet;
use super::train::{train, History, TrainConfig};
use super::Network;
use crate::error::{Error, Result};
use crate::series::{make_windows, Scaler, Series};

/// Scaler for training data; a constant series is only centred.
pub(crate) fn training_scaler(values: &[f64]) -> Result<Scaler> {
    match Scaler::fit(values) {
        Err(Error::ZeroVariance) => Ok(Scaler {
            mean: values[0],
            std: 1.0,
        }),
        other => other,
    }
}

pub(crate) fn fit_net(
    net: &mut ResidualStackNet,
    train_series: &Series,
    config: &TrainConfig,
) -> Result<(Scaler, History)> {
    let (lookback, horizon) = (net.input_len(), net.output_len());
    if train_series.len() < lookback + horizon {
        return Err(Error::SeriesTooShort {
            needed: lookback + horizon,
            actual: train_series.len(),
        });
    }
    let scaler = training_scaler(train_series.values())?;
    let scaled = scaler.transform(train_series.values());
    let windows = make_windows(&scaled, lookback, horizon, 1)?;
    let history = train(net, &windows, config)?;
    Ok((scaler, history))
}

/// Standardised lookback row built from the tail of `context`.
pub(crate) fn scaled_context(scaler: &Scaler, context: &[f64], lookback: usize) -> Result<Array2<f64>> {
    if context.len() < lookback {
        return Err(Error::SeriesTooShort {
            needed: lookback,
            actual: context.len(),
        });
    }
    let tail = scaler.transform(&context[context.len() - lookback..]);
    Ok(Array2::from_shape_vec((1, lookback), tail).expect("length checked"))
}

pub(crate) fn predict_net(net: &ResidualStackNet, scaler: &Scaler, context: &[f64]) -> Result<Vec<f64>> {
    let x = scaled_context(scaler, context, net.input_len())?;
    let out = net.predict_batch(&x)?;
    Ok(scaler.inverse(out.row(0).as_slice().expect("contiguous")))
}

/// Iterates one-shot forecasts, feeding predictions back as context, until
/// `steps` values exist.
pub(crate) fn forecast_recursive(
    net: &ResidualStackNet,
    scaler: &Scaler,
    history: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    let mut context = history.to_vec();
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let block = predict_net(net, scaler, &context)?;
        let take = block.len().min(steps - out.len());
        context.extend_from_slice(&block[..take]);
        out.extend_from_slice(&block[..take]);
    }
    Ok(out)
}

pub(crate) fn net_parameters(net: &ResidualStackNet, scaler: &Scaler) -> Vec<f64> {
    let mut out = vec![scaler.mean, scaler.std];
    for layer in net.layers() {
        out.extend(layer.weights.iter());
        out.extend(layer.bias.iter());
    }
    out
}
