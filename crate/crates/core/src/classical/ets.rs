//! Holt-Winters exponential smoothing.

use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::model::ForecastModel;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeasonalMode {
    None,
    #[default]
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtsConfig {
    pub seasonal: SeasonalMode,
    pub period: usize,
    pub trend: bool,
    /// Fixed smoothing constants; `None` means estimate.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

impl Default for EtsConfig {
    fn default() -> Self {
        Self {
            seasonal: SeasonalMode::Additive,
            period: 12,
            trend: true,
            alpha: None,
            beta: None,
            gamma: None,
        }
    }
}

impl EtsConfig {
    fn season(&self) -> usize {
        match self.seasonal {
            SeasonalMode::None => 0,
            _ => self.period,
        }
    }

    fn validate(&self, values: &[f64]) -> Result<()> {
        let s = self.season();
        if self.seasonal != SeasonalMode::None && s < 2 {
            return Err(Error::Config("seasonal smoothing needs a period of at least 2".into()));
        }
        let needed = if s > 0 { 2 * s } else { 3 };
        if values.len() < needed {
            return Err(Error::SeriesTooShort {
                needed,
                actual: values.len(),
            });
        }
        if self.seasonal == SeasonalMode::Multiplicative && values.iter().any(|v| *v <= 0.0) {
            return Err(Error::NonPositiveData);
        }
        for v in [self.alpha, self.beta, self.gamma].into_iter().flatten() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("smoothing constant {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Smoothing constants and the state after the last observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedEts {
    pub config: EtsConfig,
    pub smoothing: Smoothing,
    pub level: f64,
    pub trend: f64,
    /// Last `period` seasonal factors, oldest first.
    pub seasonals: Vec<f64>,
    /// One-step-ahead squared error summed after initialisation.
    pub sse: f64,
}

impl FittedEts {
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let s = self.seasonals.len();
        (1..=horizon)
            .map(|h| {
                let base = self.level + h as f64 * self.trend;
                match self.config.seasonal {
                    SeasonalMode::None => base,
                    SeasonalMode::Additive => base + self.seasonals[(h - 1) % s],
                    SeasonalMode::Multiplicative => base * self.seasonals[(h - 1) % s],
                }
            })
            .collect()
    }
}

struct State {
    level: f64,
    trend: f64,
    seasonals: Vec<f64>,
    first: usize,
}

fn initial_state(values: &[f64], config: &EtsConfig) -> State {
    let s = config.season();
    if s == 0 {
        let trend = if config.trend { values[1] - values[0] } else { 0.0 };
        return State {
            level: values[0],
            trend,
            seasonals: Vec::new(),
            first: 1,
        };
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let m1 = mean(&values[..s]);
    let m2 = mean(&values[s..2 * s]);
    let trend = if config.trend { (m2 - m1) / s as f64 } else { 0.0 };
    let centre = (s as f64 - 1.0) / 2.0;
    let seasonals = (0..s)
        .map(|i| {
            let base = m1 + (i as f64 - centre) * trend;
            match config.seasonal {
                SeasonalMode::Multiplicative => values[i] / base,
                _ => values[i] - base,
            }
        })
        .collect();
    State {
        level: m1 + centre * trend,
        trend,
        seasonals,
        first: s,
    }
}

fn run(values: &[f64], config: &EtsConfig, sm: Smoothing) -> FittedEts {
    let State {
        mut level,
        mut trend,
        mut seasonals,
        first,
    } = initial_state(values, config);
    let s = seasonals.len();
    let mut sse = 0.0;
    for (t, &y) in values.iter().enumerate().skip(first) {
        let season = if s > 0 { seasonals[(t - first) % s] } else { 0.0 };
        let (prediction, deseasonalised) = match config.seasonal {
            SeasonalMode::None => (level + trend, y),
            SeasonalMode::Additive => (level + trend + season, y - season),
            SeasonalMode::Multiplicative => ((level + trend) * season, y / season),
        };
        let err = y - prediction;
        sse += err * err;
        let prev = level;
        level = sm.alpha * deseasonalised + (1.0 - sm.alpha) * (level + trend);
        if config.trend {
            trend = sm.beta * (level - prev) + (1.0 - sm.beta) * trend;
        }
        if s > 0 {
            let slot = (t - first) % s;
            seasonals[slot] = match config.seasonal {
                SeasonalMode::Multiplicative => sm.gamma * y / level + (1.0 - sm.gamma) * season,
                _ => sm.gamma * (y - level) + (1.0 - sm.gamma) * season,
            };
        }
    }
    // Rotate so that the factor for the next step comes first.
    if s > 0 {
        let next = (values.len() - first) % s;
        seasonals.rotate_left(next);
    }
    FittedEts {
        config: config.clone(),
        smoothing: sm,
        level,
        trend,
        seasonals,
        sse: if sse.is_finite() { sse } else { f64::INFINITY },
    }
}

const BOUND: f64 = 1e-4;

/// Fits Holt-Winters by minimising one-step-ahead SSE: a 0.05 grid over the
/// free constants, then a simplex refinement inside `(1e-4, 1 - 1e-4)`.
pub fn fit_ets(values: &[f64], config: &EtsConfig) -> Result<FittedEts> {
    config.validate(values)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input".into()));
    }
    let seasonal = config.seasonal != SeasonalMode::None;
    // Free parameters: (which constant, fixed value if any).
    let slots = [
        (true, config.alpha),
        (config.trend, config.beta),
        (seasonal, config.gamma),
    ];
    let free: Vec<usize> = (0..3).filter(|&i| slots[i].0 && slots[i].1.is_none()).collect();
    let assemble = |x: &[f64]| {
        let mut v = [0.0; 3];
        for (i, (used, fixed)) in slots.iter().enumerate() {
            if *used {
                v[i] = fixed.unwrap_or(0.5);
            }
        }
        for (k, &i) in free.iter().enumerate() {
            v[i] = x[k].clamp(BOUND, 1.0 - BOUND);
        }
        Smoothing {
            alpha: v[0],
            beta: v[1],
            gamma: v[2],
        }
    };
    let objective = |x: &[f64]| run(values, config, assemble(x)).sse;

    let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let mut best = (f64::INFINITY, vec![0.5; free.len()]);
    let mut point = vec![0.0; free.len()];
    let total = grid.len().pow(free.len() as u32);
    for idx in 0..total {
        let mut rest = idx;
        for p in point.iter_mut() {
            *p = grid[rest % grid.len()];
            rest /= grid.len();
        }
        let f = objective(&point);
        if f < best.0 {
            best = (f, point.clone());
        }
    }
    if !free.is_empty() {
        let r = nelder_mead(
            objective,
            &best.1,
            &vec![0.025; free.len()],
            SimplexOptions {
                max_evals: 2000,
                ..SimplexOptions::default()
            },
        );
        if r.f < best.0 {
            best = (r.f, r.x);
        }
    }
    let fitted = run(values, config, assemble(&best.1));
    if !fitted.sse.is_finite() {
        return Err(Error::OptimizerFailed("exponential smoothing diverged".into()));
    }
    Ok(fitted)
}

pub fn forecast_ets(state: Option<&FittedEts>, horizon: usize) -> Result<Vec<f64>> {
    state.map(|s| s.forecast(horizon)).ok_or(Error::NotFitted)
}

/// Holt-Winters behind the common forecasting interface.
#[derive(Debug, Clone)]
pub struct EtsModel {
    pub config: EtsConfig,
    fitted: Option<FittedEts>,
}

impl EtsModel {
    pub fn new(config: EtsConfig) -> Self {
        Self { config, fitted: None }
    }

    pub fn fitted(&self) -> Option<&FittedEts> {
        self.fitted.as_ref()
    }
}

impl ForecastModel for EtsModel {
    fn name(&self) -> &str {
        "ETS"
    }

    fn fit(&mut self, train: &Series) -> Result<()> {
        self.fitted = Some(fit_ets(train.values(), &self.config)?);
        Ok(())
    }

    fn forecast(&self, history: &[f64], steps: usize) -> Result<Vec<f64>> {
        let fitted = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        self.config.validate(history)?;
        Ok(run(history, &self.config, fitted.smoothing).forecast(steps))
    }

    fn parameters(&self) -> Vec<f64> {
        let Some(f) = &self.fitted else { return Vec::new() };
        let s = f.smoothing;
        let mut out = vec![s.alpha, s.beta, s.gamma, f.level, f.trend];
        out.extend(&f.seasonals);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_series_continues_the_line() {
        let x: Vec<f64> = (0..40).map(|t| 3.0 + 2.5 * t as f64).collect();
        let config = EtsConfig {
            seasonal: SeasonalMode::None,
            ..EtsConfig::default()
        };
        let fit = fit_ets(&x, &config).unwrap();
        for (h, f) in fit.forecast(6).iter().enumerate() {
            assert!((f - (3.0 + 2.5 * (40 + h) as f64)).abs() < 1e-6);
        }
    }

    #[test]
    fn multiplicative_pattern_is_exact() {
        let s = [0.8, 1.1, 1.3, 0.8];
        let x: Vec<f64> = (0..48).map(|t| 100.0 * s[t % 4]).collect();
        let config = EtsConfig {
            seasonal: SeasonalMode::Multiplicative,
            period: 4,
            ..EtsConfig::default()
        };
        let fit = fit_ets(&x, &config).unwrap();
        assert!(fit.sse < 1e-12, "sse {}", fit.sse);
        for (h, f) in fit.forecast(8).iter().enumerate() {
            assert!((f - 100.0 * s[(48 + h) % 4]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_series_in_every_mode() {
        let x = vec![12.5; 40];
        for seasonal in [SeasonalMode::None, SeasonalMode::Additive, SeasonalMode::Multiplicative] {
            for trend in [false, true] {
                let config = EtsConfig {
                    seasonal,
                    period: 5,
                    trend,
                    ..EtsConfig::default()
                };
                let f = fit_ets(&x, &config).unwrap().forecast(7);
                assert!(f.iter().all(|v| (v - 12.5).abs() < 1e-9), "{seasonal:?} {trend}: {f:?}");
            }
        }
    }

    #[test]
    fn pure_trend_leaves_seasonals_near_zero() {
        let slope = 0.7;
        let x: Vec<f64> = (0..96).map(|t| 50.0 + slope * t as f64).collect();
        let config = EtsConfig {
            period: 12,
            ..EtsConfig::default()
        };
        let fit = fit_ets(&x, &config).unwrap();
        let worst = fit.seasonals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 0.05 * slope * 12.0, "max |seasonal| {worst}");
    }

    #[test]
    fn additive_seasonal_with_trend() {
        let pattern = [3.0, -1.0, -4.0, 2.0];
        let x: Vec<f64> = (0..60).map(|t| 10.0 + 0.5 * t as f64 + pattern[t % 4]).collect();
        let config = EtsConfig {
            period: 4,
            ..EtsConfig::default()
        };
        let fit = fit_ets(&x, &config).unwrap();
        for (h, f) in fit.forecast(8).iter().enumerate() {
            let t = 60 + h;
            assert!((f - (10.0 + 0.5 * t as f64 + pattern[t % 4])).abs() < 1e-6);
        }
    }

    #[test]
    fn errors() {
        let config = EtsConfig {
            seasonal: SeasonalMode::Multiplicative,
            period: 4,
            ..EtsConfig::default()
        };
        let mut x = vec![1.0; 20];
        x[3] = 0.0;
        assert!(matches!(fit_ets(&x, &config), Err(Error::NonPositiveData)));
        assert!(matches!(fit_ets(&[1.0; 7], &config), Err(Error::SeriesTooShort { .. })));
        assert!(matches!(forecast_ets(None, 2), Err(Error::NotFitted)));
        let fixed = EtsConfig {
            alpha: Some(1.5),
            ..EtsConfig::default()
        };
        assert!(fit_ets(&[1.0; 40], &fixed).is_err());
    }

    #[test]
    fn fixed_constants_are_respected() {
        let x: Vec<f64> = (0..50).map(|t| (t as f64 * 0.7).sin() * 5.0 + 20.0).collect();
        let config = EtsConfig {
            period: 9,
            alpha: Some(0.3),
            beta: Some(0.1),
            gamma: Some(0.2),
            ..EtsConfig::default()
        };
        let fit = fit_ets(&x, &config).unwrap();
        assert_eq!(
            fit.smoothing,
            Smoothing {
                alpha: 0.3,
                beta: 0.1,
                gamma: 0.2
            }
        );
        let mut model = EtsModel::new(config);
        model.fit(&Series::from_values("x", x.clone()).unwrap()).unwrap();
        assert_eq!(model.forecast(&x, 5).unwrap(), fit.forecast(5));
    }
}
