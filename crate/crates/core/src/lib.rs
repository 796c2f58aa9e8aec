//! Forecasting toolkit for daily market data.
//!
//! The crate is organised around the pieces needed to compare neural and
//! classical forecasters on the same held-out segment:
//!
//! * [`series`] - OHLCV ingestion, train/test splitting, windowing and scaling.
//! * [`metrics`] - MAE, MSE, RMSE, MAPE and SMAPE plus the comparison table.
//! * [`indicators`] - exploratory statistics (ACF/PACF, Bollinger bands, MACD,
//!   Fourier components, decomposition, rolling statistics, ...).
//! * [`neural`] - dense layers, explicit backpropagation, Adam and the
//!   training loop shared by the neural forecasters.
//! * [`nbeats`] and [`nhits`] - basis-expansion and hierarchical-interpolation
//!   forecasters built on [`neural`].
//! * [`classical`] - ARIMA/SARIMA by conditional sum of squares and
//!   Holt-Winters exponential smoothing.
//! * [`bench`] - the benchmark harness behind the `bench` binary.

pub mod bench;
pub mod classical;
pub mod error;
pub mod indicators;
pub mod metrics;
pub mod model;
pub mod nbeats;
pub mod neural;
pub mod nhits;
pub mod series;

pub use error::{Error, Result};

pub use model::ForecastModel;
pub use series::{OhlcvFrame, Series};
