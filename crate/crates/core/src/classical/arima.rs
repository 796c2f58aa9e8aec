//! Seasonal ARIMA estimated by conditional sum of squares.
//!
//! The differenced series `w_t` is modelled as
//! `phi(L) Phi(L^S) (w_t - mu) = theta(L) Theta(L^S) eps_t`, with `mu` only
//! estimated when no differencing is applied. Residuals before the
//! conditioning start are zero.

use std::fmt;

use nalgebra::{Complex, DMatrix, Schur};
use serde::{Deserialize, Serialize};

use super::difference::{difference, Differencing};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::indicators::{acf, durbin_levinson};
use crate::model::ForecastModel;
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    /// Seasonal period `S`; ignored when every seasonal term is zero.
    pub period: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            ..Self::default()
        }
    }

    pub fn with_seasonal(self, seasonal_p: usize, seasonal_d: usize, seasonal_q: usize, period: usize) -> Self {
        Self {
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
            ..self
        }
    }

    pub fn is_seasonal(&self) -> bool {
        self.seasonal_p + self.seasonal_d + self.seasonal_q > 0
    }

    fn season(&self) -> usize {
        if self.is_seasonal() {
            self.period
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_seasonal() && self.period < 2 {
            return Err(Error::InvalidOrder(format!("{self}: seasonal terms need a period of at least 2")));
        }
        if self.d + self.seasonal_d > 3 {
            return Err(Error::InvalidOrder(format!("{self}: at most three differences")));
        }
        Ok(())
    }

    /// Number of AR and MA coefficients, excluding the mean.
    pub fn coefficient_count(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    pub fn ar_lag(&self) -> usize {
        self.p + self.seasonal_p * self.season()
    }

    pub fn ma_lag(&self) -> usize {
        self.q + self.seasonal_q * self.season()
    }

    /// Observations lost to differencing.
    pub fn differencing_loss(&self) -> usize {
        self.d + self.seasonal_d * self.season()
    }

    pub fn includes_mean(&self) -> bool {
        self.d + self.seasonal_d == 0
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)?;
        if self.is_seasonal() {
            write!(
                f,
                "({},{},{})[{}]",
                self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ArimaParams {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sar: Vec<f64>,
    pub sma: Vec<f64>,
    /// Mean of the differenced series, when estimated.
    pub mean: Option<f64>,
}

impl ArimaParams {
    pub fn zeros(order: &ArimaOrder, mean: Option<f64>) -> Self {
        Self {
            ar: vec![0.0; order.p],
            ma: vec![0.0; order.q],
            sar: vec![0.0; order.seasonal_p],
            sma: vec![0.0; order.seasonal_q],
            mean,
        }
    }

    fn check(&self, order: &ArimaOrder) -> Result<()> {
        let expected = (order.p, order.q, order.seasonal_p, order.seasonal_q);
        let got = (self.ar.len(), self.ma.len(), self.sar.len(), self.sma.len());
        if expected != got {
            return Err(Error::ShapeMismatch(format!(
                "order {order} needs (ar, ma, sar, sma) = {expected:?}, got {got:?}"
            )));
        }
        Ok(())
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = [&self.ar, &self.ma, &self.sar, &self.sma]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        v.extend(self.mean);
        v
    }

    fn from_slice(order: &ArimaOrder, with_mean: bool, v: &[f64]) -> Self {
        let mut it = v.iter().copied();
        let mut take = |n: usize| (0..n).map(|_| it.next().expect("length")).collect::<Vec<_>>();
        let ar = take(order.p);
        let ma = take(order.q);
        let sar = take(order.seasonal_p);
        let sma = take(order.seasonal_q);
        let mean = if with_mean { take(1).pop() } else { None };
        Self { ar, ma, sar, sma, mean }
    }

    /// Coefficients `a_k`, `k >= 1`, of `z_t = sum a_k z_{t-k} + ...` after
    /// multiplying out the seasonal factor. Index 0 is unused.
    pub fn ar_lag_polynomial(&self, period: usize) -> Vec<f64> {
        let full = poly_mul(&lag_poly(&self.ar, 1, -1.0), &lag_poly(&self.sar, period, -1.0));
        full.iter().enumerate().map(|(k, c)| if k == 0 { 0.0 } else { -c }).collect()
    }

    /// Coefficients `b_k` of `... + eps_t + sum b_k eps_{t-k}`. Index 0 is unused.
    pub fn ma_lag_polynomial(&self, period: usize) -> Vec<f64> {
        let mut full = poly_mul(&lag_poly(&self.ma, 1, 1.0), &lag_poly(&self.sma, period, 1.0));
        full[0] = 0.0;
        full
    }
}

/// `1 + sign * sum c_i L^(i * step)` as a dense coefficient vector.
fn lag_poly(coeffs: &[f64], step: usize, sign: f64) -> Vec<f64> {
    let mut p = vec![0.0; coeffs.len() * step + 1];
    p[0] = 1.0;
    for (i, c) in coeffs.iter().enumerate() {
        p[(i + 1) * step] = sign * c;
    }
    p
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn sparse(poly: &[f64]) -> Vec<(usize, f64)> {
    poly.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k, *c))
        .collect()
}

/// Conditional sum of squares and its Gaussian log-likelihood proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct Css {
    pub sse: f64,
    pub n_eff: usize,
    /// `-n_eff / 2 * (ln(2 pi sse / n_eff) + 1)`.
    pub loglik: f64,
    /// One per observation of the differenced series; zero before the
    /// conditioning start.
    pub residuals: Vec<f64>,
    pub start: usize,
}

fn residual_recursion(
    z: &[f64],
    ar: &[(usize, f64)],
    ma: &[(usize, f64)],
    start: usize,
    burn_in: &[f64],
) -> Result<Vec<f64>> {
    let n = z.len();
    let mut eps = vec![0.0; n];
    let from = burn_in.len().saturating_sub(start);
    for (offset, v) in burn_in[from..].iter().enumerate() {
        eps[start - (burn_in.len() - from) + offset] = *v;
    }
    for t in start..n {
        let mut e = z[t];
        for &(k, a) in ar {
            if k <= t {
                e -= a * z[t - k];
            }
        }
        for &(k, b) in ma {
            if k <= t {
                e -= b * eps[t - k];
            }
        }
        if !e.is_finite() {
            return Err(Error::NonFinite(format!("residual at t={t}")));
        }
        eps[t] = e;
    }
    Ok(eps)
}

fn centred(series: &[f64], mean: Option<f64>) -> Vec<f64> {
    match mean {
        Some(m) => series.iter().map(|v| v - m).collect(),
        None => series.to_vec(),
    }
}

fn css_inner(params: &ArimaParams, series: &[f64], order: &ArimaOrder, start: usize, burn_in: &[f64]) -> Result<Css> {
    params.check(order)?;
    if start >= series.len() {
        return Err(Error::SeriesTooShort {
            needed: start + 1,
            actual: series.len(),
        });
    }
    let s = order.season();
    let ar = sparse(&params.ar_lag_polynomial(s));
    let ma = sparse(&params.ma_lag_polynomial(s));
    let z = centred(series, params.mean);
    let residuals = residual_recursion(&z, &ar, &ma, start, burn_in)?;
    let sse: f64 = residuals[start..].iter().map(|e| e * e).sum();
    if !sse.is_finite() {
        return Err(Error::NonFinite("sum of squares".into()));
    }
    let n_eff = series.len() - start;
    let sigma2 = (sse / n_eff as f64).max(f64::MIN_POSITIVE);
    Ok(Css {
        sse,
        n_eff,
        loglik: -0.5 * n_eff as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0),
        residuals,
        start,
    })
}

/// CSS of an already differenced series, conditioning on the first
/// `order.ar_lag()` observations unless `start` says otherwise.
pub fn css_loglik(params: &ArimaParams, series: &[f64], order: &ArimaOrder, start: Option<usize>) -> Result<Css> {
    css_inner(params, series, order, start.unwrap_or(order.ar_lag()), &[])
}

/// Like [`css_loglik`], with explicit pre-sample residuals ending just
/// before the conditioning start. Values that would fall before the sample
/// are ignored.
pub fn css_loglik_with_burn_in(
    params: &ArimaParams,
    series: &[f64],
    order: &ArimaOrder,
    start: Option<usize>,
    burn_in: &[f64],
) -> Result<Css> {
    css_inner(params, series, order, start.unwrap_or(order.ar_lag()), burn_in)
}

/// Smallest modulus among the roots of the AR and MA lag polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub ar_min_modulus: Option<f64>,
    pub ma_min_modulus: Option<f64>,
}

impl RootReport {
    pub fn stationary(&self) -> bool {
        self.ar_min_modulus.is_none_or(|m| m > 1.0)
    }

    pub fn invertible(&self) -> bool {
        self.ma_min_modulus.is_none_or(|m| m > 1.0)
    }
}

/// Smallest root modulus of `1 - sum c_k L^k`.
fn min_root_modulus(c: &[f64]) -> Option<f64> {
    let roots = inverse_roots(c);
    if roots.is_empty() {
        return None;
    }
    let largest = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Some(if largest == 0.0 { f64::INFINITY } else { 1.0 / largest })
}

/// True when every AR factor is stationary and every MA factor invertible.
fn admissible(params: &ArimaParams) -> bool {
    let outside = |c: &[f64], sign: f64| match c {
        [] => true,
        [a] => a.abs() < 1.0,
        _ => {
            min_root_modulus(&lag_factor(c, sign)).is_none_or(|m| m > 1.0)
        }
    };
    outside(&params.ar, 1.0) && outside(&params.sar, 1.0) && outside(&params.ma, -1.0) && outside(&params.sma, -1.0)
}

/// Inverse roots (companion eigenvalues) of `1 - sum c_k L^k`.
fn inverse_roots(c: &[f64]) -> Vec<Complex<f64>> {
    let Some(degree) = c.iter().rposition(|v| *v != 0.0).filter(|d| *d > 0) else {
        return Vec::new();
    };
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for k in 0..degree {
        m[(0, k)] = c[k + 1];
    }
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    // Unbounded QR iteration never converges on cyclic companions such as
    // that of `1 - a L^S`.
    match Schur::try_new(m, f64::EPSILON, 200 * degree) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => durand_kerner(&c[1..=degree]),
    }
}

/// Roots of `z^n - c_1 z^(n-1) - ... - c_n`.
fn durand_kerner(c: &[f64]) -> Vec<Complex<f64>> {
    let n = c.len();
    let eval = |z: Complex<f64>| c.iter().fold(Complex::new(1.0, 0.0), |acc, &ck| acc * z - ck);
    let radius = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex<f64>> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(Complex::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = eval(z[i]) / denom;
            if step.is_finite() {
                z[i] -= step;
                shift = shift.max(step.norm());
            }
        }
        if shift <= 1e-14 * radius {
            break;
        }
    }
    z
}

/// `[0, sign * c_1, ..., sign * c_n]`, the form the root helpers take.
fn lag_factor(c: &[f64], sign: f64) -> Vec<f64> {
    std::iter::once(0.0).chain(c.iter().map(|v| sign * v)).collect()
}

pub const CANCELLATION_TOL: f64 = 0.1;

/// True when an AR factor and the matching MA factor share a root to within
/// [`CANCELLATION_TOL`], making the pair redundant.
pub fn has_cancelling_roots(params: &ArimaParams) -> bool {
    let close = |ar: &[f64], ma: &[f64]| {
        let a = inverse_roots(&lag_factor(ar, 1.0));
        let m = inverse_roots(&lag_factor(ma, -1.0));
        a.iter().any(|x| m.iter().any(|y| (x - y).norm() < CANCELLATION_TOL))
    };
    close(&params.ar, &params.ma) || close(&params.sar, &params.sma)
}

/// Root moduli factor by factor; a root `r` of `Phi(u)` with `u = L^S`
/// gives `S` roots of modulus `|r|^(1/S)` in `L`.
fn roots(params: &ArimaParams, period: usize) -> RootReport {
    let combine = |plain: &[f64], seasonal: &[f64], sign: f64| {
        let a = min_root_modulus(&lag_factor(plain, sign));
        let s = min_root_modulus(&lag_factor(seasonal, sign)).map(|m| m.powf(1.0 / period.max(1) as f64));
        match (a, s) {
            (Some(a), Some(s)) => Some(a.min(s)),
            (a, s) => a.or(s),
        }
    };
    RootReport {
        ar_min_modulus: combine(&params.ar, &params.sar, 1.0),
        ma_min_modulus: combine(&params.ma, &params.sma, -1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedArima {
    pub order: ArimaOrder,
    pub params: ArimaParams,
    /// `mu * (1 - sum a_k)`; zero without a mean.
    pub intercept: f64,
    pub sigma2: f64,
    pub sse: f64,
    pub n_eff: usize,
    pub loglik: f64,
    pub aic: f64,
    pub roots: RootReport,
    differenced: Vec<f64>,
    residuals: Vec<f64>,
    differencing: Differencing,
    start: usize,
}

impl FittedArima {
    /// Filters `values` through fixed parameters.
    pub fn new(order: ArimaOrder, params: ArimaParams, values: &[f64]) -> Result<Self> {
        Self::with_start(order, params, values, None)
    }

    fn with_start(order: ArimaOrder, params: ArimaParams, values: &[f64], start: Option<usize>) -> Result<Self> {
        order.validate()?;
        let (w, differencing) = difference(values, order.d, order.seasonal_d, order.season())?;
        let css = css_loglik(&params, &w, &order, start)?;
        let k = order.coefficient_count() + usize::from(params.mean.is_some()) + 1;
        let sigma2 = css.sse / css.n_eff as f64;
        let aic = css.n_eff as f64 * sigma2.max(f64::MIN_POSITIVE).ln() + 2.0 * k as f64;
        let ar_sum: f64 = params.ar_lag_polynomial(order.season()).iter().sum();
        let roots = roots(&params, order.season());
        Ok(Self {
            intercept: params.mean.unwrap_or(0.0) * (1.0 - ar_sum),
            order,
            sigma2,
            sse: css.sse,
            n_eff: css.n_eff,
            loglik: css.loglik,
            aic,
            roots,
            params,
            differenced: w,
            residuals: css.residuals,
            differencing,
            start: css.start,
        })
    }

    /// Residuals of the differenced series.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Same parameters, new data (e.g. training data followed by later actuals).
    pub fn refilter(&self, values: &[f64]) -> Result<Self> {
        Self::with_start(self.order, self.params.clone(), values, Some(self.start))
    }

    /// Forecasts `horizon` steps with future shocks set to zero.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let s = self.order.season();
        let ar = sparse(&self.params.ar_lag_polynomial(s));
        let ma = sparse(&self.params.ma_lag_polynomial(s));
        let n = self.differenced.len();
        let mut z = centred(&self.differenced, self.params.mean);
        let mut eps = self.residuals.clone();
        for t in n..n + horizon {
            let mut v = 0.0;
            for &(k, a) in &ar {
                if k <= t {
                    v += a * z[t - k];
                }
            }
            for &(k, b) in &ma {
                if k <= t {
                    v += b * eps[t - k];
                }
            }
            z.push(v);
            eps.push(0.0);
        }
        let mean = self.params.mean.unwrap_or(0.0);
        let future: Vec<f64> = z[n..].iter().map(|v| v + mean).collect();
        self.differencing.integrate(&future)
    }

    /// Human-readable coefficient summary.
    pub fn summary(&self) -> String {
        let mut out = format!("SARIMA{}\n", self.order);
        let mut line = |name: &str, values: &[f64]| {
            for (i, v) in values.iter().enumerate() {
                out.push_str(&format!("  {name}{}: {v:.6}\n", i + 1));
            }
        };
        line("ar", &self.params.ar);
        line("ma", &self.params.ma);
        line("sar", &self.params.sar);
        line("sma", &self.params.sma);
        if let Some(m) = self.params.mean {
            out.push_str(&format!("  mean: {m:.6}\n  intercept: {:.6}\n", self.intercept));
        }
        out.push_str(&format!("  sigma2: {:.6}\n  aic: {:.4}\n", self.sigma2, self.aic));
        let fmt_root = |r: Option<f64>| r.map_or("none".to_string(), |m| format!("{m:.4}"));
        out.push_str(&format!(
            "  min |AR root|: {} ({})\n  min |MA root|: {} ({})\n",
            fmt_root(self.roots.ar_min_modulus),
            if self.roots.stationary() { "stationary" } else { "non-stationary" },
            fmt_root(self.roots.ma_min_modulus),
            if self.roots.invertible() { "invertible" } else { "non-invertible" },
        ));
        out
    }
}

/// Random walk style forecast: `(0,1,0)` without coefficients.
pub fn forecast_arima(model: Option<&FittedArima>, horizon: usize) -> Result<Vec<f64>> {
    model.map(|m| m.forecast(horizon)).ok_or(Error::NotFitted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Conditioning start on the differenced series; defaults to the AR lag.
    pub start: Option<usize>,
    pub simplex: SimplexOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            start: None,
            simplex: SimplexOptions {
                max_evals: 3000,
                ftol: 1e-10,
                xtol: 1e-7,
            },
        }
    }
}

fn sample_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    let m = sample_mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Yule-Walker AR guesses; seasonal AR from the autocorrelation at lag `S`.
fn yule_walker_start(w: &[f64], order: &ArimaOrder, mean: Option<f64>) -> Option<ArimaParams> {
    let s = order.season();
    let max_lag = order.p.max(order.seasonal_p * s);
    if max_lag == 0 || max_lag >= w.len() {
        return None;
    }
    let r = acf(w, max_lag).ok()?;
    let mut params = ArimaParams::zeros(order, mean);
    if order.p > 0 {
        params.ar = durbin_levinson(&r, order.p).ok()?.0;
    }
    if order.seasonal_p > 0 {
        params.sar[0] = r[s].clamp(-0.9, 0.9);
    }
    Some(params)
}

/// Fits `order` by CSS with Nelder-Mead restarts from zero coefficients and
/// from Yule-Walker guesses. The search stays inside the stationary and
/// invertible region.
pub fn fit_arima(values: &[f64], order: ArimaOrder) -> Result<FittedArima> {
    fit_arima_with_starts(values, order, &FitOptions::default(), &[])
}

/// [`fit_arima`] with extra starting points and explicit options.
pub fn fit_arima_with_starts(
    values: &[f64],
    order: ArimaOrder,
    options: &FitOptions,
    extra_starts: &[ArimaParams],
) -> Result<FittedArima> {
    order.validate()?;
    let (w, _) = difference(values, order.d, order.seasonal_d, order.season())?;
    let needed = 10 + order.ar_lag() + order.ma_lag();
    if w.len() < needed.max(options.start.unwrap_or(0) + 10) {
        return Err(Error::SeriesTooShort {
            needed: needed + order.differencing_loss(),
            actual: values.len(),
        });
    }
    let with_mean = order.includes_mean();
    let mean0 = with_mean.then(|| sample_mean(&w));
    let start = options.start.unwrap_or(order.ar_lag());

    let mut starts = vec![ArimaParams::zeros(&order, mean0)];
    starts.extend(yule_walker_start(&w, &order, mean0));
    for extra in extra_starts {
        extra.check(&order)?;
        if extra.mean.is_some() != with_mean {
            return Err(Error::ShapeMismatch("start mean does not match the order".into()));
        }
        starts.push(extra.clone());
    }

    let objective = |v: &[f64]| {
        let params = ArimaParams::from_slice(&order, with_mean, v);
        if !admissible(&params) {
            return f64::INFINITY;
        }
        css_inner(&params, &w, &order, start, &[]).map_or(f64::INFINITY, |c| c.sse)
    };
    let mean_step = 0.1 * sample_std(&w).max(1e-3 * (1.0 + mean0.unwrap_or(0.0).abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in &starts {
        let x0 = s.to_vec();
        let mut steps = vec![0.1; x0.len()];
        if with_mean {
            *steps.last_mut().expect("mean") = mean_step;
        }
        let first = nelder_mead(objective, &x0, &steps, options.simplex);
        // Restarting from the optimum re-expands a collapsed simplex.
        let polished = nelder_mead(objective, &first.x, &steps, options.simplex);
        let r = if polished.f <= first.f { polished } else { first };
        if r.f.is_finite() && best.as_ref().is_none_or(|(f, _)| r.f < *f) {
            best = Some((r.f, r.x));
        }
    }
    let (_, x) = best.ok_or_else(|| Error::OptimizerFailed(format!("{order}: objective not finite at any start")))?;
    let fitted = FittedArima::with_start(order, ArimaParams::from_slice(&order, with_mean, &x), values, Some(start))?;
    if !fitted.roots.stationary() {
        log::warn!("SARIMA{order}: AR polynomial has a root inside the unit circle");
    }
    if !fitted.roots.invertible() {
        log::warn!("SARIMA{order}: MA polynomial has a root inside the unit circle");
    }
    Ok(fitted)
}

/// Spread of the rolling mean relative to the overall spread. Small values
/// mean the level is stable.
pub fn stability_ratio(values: &[f64], window: usize) -> f64 {
    let sd = sample_std(values);
    let mean = sample_mean(values);
    if values.len() <= window || sd <= 1e-12 * (1.0 + mean.abs()) {
        return 0.0;
    }
    let mut sum: f64 = values[..window].iter().sum();
    let mut rolling = vec![sum / window as f64];
    for t in window..values.len() {
        sum += values[t] - values[t - window];
        rolling.push(sum / window as f64);
    }
    sample_std(&rolling) / sd
}

pub const STABILITY_THRESHOLD: f64 = 0.5;

fn stability_window(n: usize, period: Option<usize>) -> usize {
    (n / 10).max(8).max(period.unwrap_or(0)).min(n / 2).max(1)
}

/// Differences while the rolling mean still wanders by at least half the
/// series' standard deviation.
pub fn choose_d(values: &[f64], max_d: usize, period: Option<usize>) -> usize {
    let mut x = values.to_vec();
    let mut d = 0;
    while d < max_d && x.len() > 16 && stability_ratio(&x, stability_window(x.len(), period)) >= STABILITY_THRESHOLD {
        x = x.windows(2).map(|w| w[1] - w[0]).collect();
        d += 1;
    }
    d
}

/// Seasonal differencing is applied when it removes over a third of the
/// variance (ratio of standard deviations below 0.8).
pub fn choose_seasonal_d(values: &[f64], period: usize, max_seasonal_d: usize) -> usize {
    if max_seasonal_d == 0 || period < 2 || values.len() <= 2 * period {
        return 0;
    }
    let diffed: Vec<f64> = (period..values.len()).map(|t| values[t] - values[t - period]).collect();
    let base = sample_std(values);
    if base <= 1e-12 {
        return 0;
    }
    usize::from(sample_std(&diffed) < 0.8 * base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoCaps {
    pub max_p: usize,
    pub max_d: usize,
    pub max_q: usize,
    pub max_seasonal_p: usize,
    pub max_seasonal_d: usize,
    pub max_seasonal_q: usize,
    /// Seasonal period; `None` searches non-seasonal orders only.
    pub period: Option<usize>,
}

impl Default for AutoCaps {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_d: 2,
            max_q: 3,
            max_seasonal_p: 2,
            max_seasonal_d: 1,
            max_seasonal_q: 2,
            period: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AutoResult {
    pub fitted: FittedArima,
    /// Every candidate that could be fitted, with its AIC, in search order.
    pub candidates: Vec<(ArimaOrder, f64)>,
}

pub const AIC_TIE: f64 = 1e-9;

/// Picks `d` (and `D`) by the stability heuristics, then searches the AR/MA
/// orders by AIC on a common conditioning start. Near ties go to fewer
/// coefficients, then to the lexicographically smallest `(p, q, P, Q)`.
pub fn auto_fit(values: &[f64], caps: &AutoCaps) -> Result<AutoResult> {
    let period = caps.period.filter(|s| *s >= 2);
    let d = choose_d(values, caps.max_d, period);
    let mut w = values.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|x| x[1] - x[0]).collect();
    }
    let (sd, sp_max, sq_max, s) = match period {
        Some(s) => (
            choose_seasonal_d(&w, s, caps.max_seasonal_d),
            caps.max_seasonal_p,
            caps.max_seasonal_q,
            s,
        ),
        None => (0, 0, 0, 0),
    };
    let mut grid = Vec::new();
    for p in 0..=caps.max_p {
        for q in 0..=caps.max_q {
            for sp in 0..=sp_max {
                for sq in 0..=sq_max {
                    let mut o = ArimaOrder::new(p, d, q);
                    if s > 0 && (sp + sd + sq) > 0 {
                        o = o.with_seasonal(sp, sd, sq, s);
                    }
                    grid.push(o);
                }
            }
        }
    }
    let common_start = grid.iter().map(|o| o.ar_lag()).max().unwrap_or(0);
    let largest = grid
        .iter()
        .map(|o| 10 + o.ar_lag() + o.ma_lag() + o.differencing_loss())
        .max()
        .unwrap_or(10)
        .max(common_start + 10 + d + sd * s);
    if values.len() < largest {
        return Err(Error::SeriesTooShort {
            needed: largest,
            actual: values.len(),
        });
    }

    let options = FitOptions {
        start: Some(common_start),
        ..FitOptions::default()
    };
    let mut candidates = Vec::new();
    let mut best: Option<FittedArima> = None;
    for order in grid {
        let fitted = match fit_arima_with_starts(values, order, &options, &[]) {
            Ok(f) => f,
            Err(e) => {
                log::debug!("SARIMA{order} skipped: {e}");
                continue;
            }
        };
        if has_cancelling_roots(&fitted.params) {
            log::debug!("SARIMA{order} skipped: AR and MA roots nearly cancel");
            continue;
        }
        candidates.push((order, fitted.aic));
        let better = match &best {
            None => true,
            Some(b) => {
                fitted.aic < b.aic - AIC_TIE
                    || ((fitted.aic - b.aic).abs() <= AIC_TIE
                        && fitted.order.coefficient_count() < b.order.coefficient_count())
            }
        };
        if better {
            best = Some(fitted);
        }
    }
    let fitted = best.ok_or_else(|| Error::OptimizerFailed("no candidate order could be fitted".into()))?;
    log::info!("auto order selected SARIMA{} (AIC {:.3})", fitted.order, fitted.aic);
    Ok(AutoResult { fitted, candidates })
}

pub fn auto_order(values: &[f64], caps: &AutoCaps) -> Result<ArimaOrder> {
    auto_fit(values, caps).map(|r| r.fitted.order)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SarimaConfig {
    /// Search the order by AIC instead of using `order`.
    pub auto: bool,
    pub order: ArimaOrder,
    pub caps: AutoCaps,
}

impl Default for SarimaConfig {
    fn default() -> Self {
        Self {
            auto: true,
            order: ArimaOrder::new(1, 1, 1),
            caps: AutoCaps::default(),
        }
    }
}

/// SARIMA behind the common forecasting interface.
#[derive(Debug, Clone)]
pub struct SarimaModel {
    pub config: SarimaConfig,
    fitted: Option<FittedArima>,
}

impl SarimaModel {
    pub fn new(config: SarimaConfig) -> Self {
        Self { config, fitted: None }
    }

    pub fn fitted(&self) -> Option<&FittedArima> {
        self.fitted.as_ref()
    }
}

impl ForecastModel for SarimaModel {
    fn name(&self) -> &str {
        "SARIMA"
    }

    fn fit(&mut self, train: &Series) -> Result<()> {
        let fitted = if self.config.auto {
            auto_fit(train.values(), &self.config.caps)?.fitted
        } else {
            fit_arima(train.values(), self.config.order)?
        };
        log::info!("{}", fitted.summary().trim_end());
        self.fitted = Some(fitted);
        Ok(())
    }

    fn forecast(&self, history: &[f64], steps: usize) -> Result<Vec<f64>> {
        let fitted = self.fitted.as_ref().ok_or(Error::NotFitted)?;
        Ok(fitted.refilter(history)?.forecast(steps))
    }

    fn parameters(&self) -> Vec<f64> {
        let Some(f) = &self.fitted else { return Vec::new() };
        let p = &f.params;
        let mut out: Vec<f64> = p.ar.iter().chain(&p.ma).chain(&p.sar).chain(&p.sma).copied().collect();
        out.extend(p.mean);
        out.push(f.sigma2);
        out
    }
}

#[cfg(test)]
mod root_tests {
    use super::*;

    #[test]
    fn cyclic_companion_roots_terminate() {
        // 1 - 0.5 L^4: every inverse root has modulus 0.5^(1/4).
        let roots = inverse_roots(&[0.0, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(roots.len(), 4);
        for z in &roots {
            assert!((z.norm() - 0.5f64.powf(0.25)).abs() < 1e-9, "{z}");
        }
    }

    #[test]
    fn durand_kerner_matches_known_roots() {
        // (z - 0.5)(z + 0.25)(z - 0.8) = z^3 - 1.05 z^2 + 0.075 z + 0.1
        let mut roots: Vec<f64> = durand_kerner(&[1.05, -0.075, -0.1]).iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        for (got, want) in roots.iter().zip([-0.25, 0.5, 0.8]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn seasonal_factor_moduli_take_the_period_root() {
        let params = ArimaParams {
            ar: vec![0.5],
            sma: vec![0.6],
            ..ArimaParams::default()
        };
        let r = roots(&params, 12);
        assert!((r.ar_min_modulus.unwrap() - 2.0).abs() < 1e-12);
        let want = (1.0 / 0.6f64).powf(1.0 / 12.0);
        assert!((r.ma_min_modulus.unwrap() - want).abs() < 1e-9);
    }
}
