use crate::error::Result;
use crate::series::Series;

/// Common surface of every forecaster in the benchmark.
pub trait ForecastModel: Send {
    /// Label used in reports, e.g. `NBEATS`.
    fn name(&self) -> &str;

    /// Fits on the training segment only.
    fn fit(&mut self, train: &Series) -> Result<()>;

    /// Forecasts the `steps` observations that follow `history`.
    ///
    /// `history` starts with the training data and may extend past it with
    /// later actuals; fitted parameters are not changed.
    fn forecast(&self, history: &[f64], steps: usize) -> Result<Vec<f64>>;

    /// Every fitted quantity, flattened in a fixed order. Empty before `fit`.
    fn parameters(&self) -> Vec<f64>;
}
