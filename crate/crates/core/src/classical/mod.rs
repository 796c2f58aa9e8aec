//! Classical baselines: seasonal ARIMA fitted by conditional sum of squares,
//! with AIC order search, and Holt-Winters exponential smoothing.

pub mod arima;
pub mod difference;
pub mod ets;
pub mod simplex;

pub use arima::{
    auto_fit, auto_order, choose_d, has_cancelling_roots, choose_seasonal_d, css_loglik, css_loglik_with_burn_in, fit_arima,
    fit_arima_with_starts, forecast_arima, stability_ratio, ArimaOrder, ArimaParams, AutoCaps, AutoResult, Css,
    FitOptions, FittedArima, RootReport, SarimaConfig, SarimaModel,
};
pub use difference::{difference, Differencing};
pub use ets::{fit_ets, forecast_ets, EtsConfig, EtsModel, FittedEts, SeasonalMode, Smoothing};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
