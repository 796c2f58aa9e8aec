//! Exploratory statistics and technical indicators for price series.
//!
//! Rolling quantities that need a warm-up return `Option<f64>` per index, with
//! `None` for the positions that are not yet defined.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample autocorrelation for lags `0..=max_lag`, biased (1/n) estimator.
pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag >= n {
        return Err(Error::LagTooLarge { lag: max_lag, len: n });
    }
    let m = mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        // A constant series is perfectly correlated with itself only at lag 0.
        let mut out = vec![0.0; max_lag + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    Ok((0..=max_lag)
        .map(|k| {
            let ck: f64 = centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum();
            ck / c0
        })
        .collect())
}

/// Partial autocorrelation for lags `1..=max_lag` by Durbin-Levinson.
///
/// Index 0 of the result is lag 0 and is always 1.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if 2 * max_lag >= values.len() {
        return Err(Error::LagTooLarge {
            lag: max_lag,
            len: values.len(),
        });
    }
    let first = values[0];
    if values.iter().all(|v| *v == first) {
        return Err(Error::SingularRecursion(1));
    }
    let r = acf(values, max_lag)?;
    let (_, partial) = durbin_levinson(&r, max_lag)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    out.extend(partial);
    Ok(out)
}

/// Solves the Yule-Walker equations of every order up to `order`.
///
/// Returns the AR coefficients of order `order` and the partial
/// autocorrelations for lags `1..=order`.
pub(crate) fn durbin_levinson(r: &[f64], order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut phi = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut partial = Vec::with_capacity(order);
    let mut v = r[0];
    for k in 1..=order {
        if v.abs() < 1e-14 {
            return Err(Error::SingularRecursion(k));
        }
        let acc: f64 = (1..k).map(|j| prev[j - 1] * r[k - j]).sum();
        let kappa = (r[k] - acc) / v;
        phi[k - 1] = kappa;
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - kappa * prev[k - j - 1];
        }
        v *= 1.0 - kappa * kappa;
        partial.push(kappa);
        prev[..k].copy_from_slice(&phi[..k]);
    }
    Ok((phi, partial))
}

/// Middle, upper and lower Bollinger bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandsTriple {
    pub middle: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub lower: Vec<Option<f64>>,
    pub window: usize,
    pub k: f64,
}

/// Trailing rolling mean and population standard deviation.
pub fn rolling_stats(values: &[f64], window: usize) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    let n = values.len();
    if window == 0 || window > n {
        return Err(Error::WindowTooLarge { window, len: n });
    }
    let mut means = vec![None; n];
    let mut stds = vec![None; n];
    for end in window..=n {
        let w = &values[end - window..end];
        let m = mean(w);
        let var = w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / window as f64;
        means[end - 1] = Some(m);
        stds[end - 1] = Some(var.sqrt());
    }
    Ok((means, stds))
}

/// Rolling mean plus/minus `k` rolling standard deviations.
pub fn bollinger(values: &[f64], window: usize, k: f64) -> Result<BandsTriple> {
    let (means, stds) = rolling_stats(values, window)?;
    let width: Vec<Option<f64>> = stds.iter().map(|s| s.map(|s| k * s)).collect();
    let upper = means
        .iter()
        .zip(&width)
        .map(|(m, w)| Some((*m)? + (*w)?))
        .collect();
    let lower = means
        .iter()
        .zip(&width)
        .map(|(m, w)| Some((*m)? - (*w)?))
        .collect();
    Ok(BandsTriple {
        middle: means,
        upper,
        lower,
        window,
        k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMode {
    #[default]
    Simple,
    Log,
}

/// Day-over-day returns, length `n - 1`.
pub fn daily_returns(values: &[f64], mode: ReturnMode) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            actual: values.len(),
        });
    }
    match mode {
        ReturnMode::Simple => values
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                if w[0] == 0.0 {
                    Err(Error::DivisionByZero(i))
                } else {
                    Ok(w[1] / w[0] - 1.0)
                }
            })
            .collect(),
        ReturnMode::Log => {
            if let Some(i) = values.iter().position(|v| *v <= 0.0) {
                return Err(Error::NonPositive(i));
            }
            Ok(values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
        }
    }
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let edges = (0..=bins)
        .map(|i| lo + span * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0; bins];
    for v in values {
        let idx = (((v - lo) / span) * bins as f64).floor() as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Low-rank Fourier reconstructions of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierComponents {
    /// |X_k| for k in `0..=n/2`.
    pub magnitudes: Vec<f64>,
    /// `(count, reconstruction)` in the order the counts were requested.
    pub reconstructions: Vec<(usize, Vec<f64>)>,
}

/// Number of distinct frequency groups (DC, conjugate pairs, Nyquist).
pub fn spectrum_len(n: usize) -> usize {
    n / 2 + 1
}

/// Keeps the `c` strongest frequencies for each requested count and inverts.
///
/// A frequency `k` and its conjugate `n - k` are kept or dropped together, so
/// reconstructions stay real. The mean (DC term) competes like any other
/// frequency.
pub fn fourier_components(values: &[f64], counts: &[usize]) -> Result<FourierComponents> {
    let n = values.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, actual: n });
    }
    let available = spectrum_len(n);
    if let Some(&c) = counts.iter().find(|&&c| c > available) {
        return Err(Error::CountExceedsSpectrum { count: c, available });
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut spectrum);

    let magnitudes: Vec<f64> = spectrum[..available].iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..available).collect();
    // Stable sort keeps the lower frequency first among equal magnitudes.
    order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]));

    let reconstructions = counts
        .iter()
        .map(|&c| {
            let mut kept = vec![Complex::new(0.0, 0.0); n];
            for &k in &order[..c] {
                kept[k] = spectrum[k];
                if k != 0 {
                    kept[n - k] = spectrum[n - k];
                }
            }
            inverse.process(&mut kept);
            (c, kept.iter().map(|z| z.re / n as f64).collect())
        })
        .collect();

    Ok(FourierComponents {
        magnitudes,
        reconstructions,
    })
}

/// Labelled Pearson correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Columns left out because they had zero variance.
    pub dropped: Vec<String>,
}

/// Pearson correlations between equally long columns.
pub fn correlation_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    if let Some((_, first)) = columns.first() {
        if let Some((_, bad)) = columns.iter().find(|(_, c)| c.len() != first.len()) {
            return Err(Error::LengthMismatch {
                left: first.len(),
                right: bad.len(),
            });
        }
    }
    let mut labels = Vec::new();
    let mut centered: Vec<Vec<f64>> = Vec::new();
    let mut norms = Vec::new();
    let mut dropped = Vec::new();
    for (name, col) in columns {
        if col.is_empty() {
            dropped.push(name.clone());
            continue;
        }
        let m = mean(col);
        let c: Vec<f64> = col.iter().map(|v| v - m).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * m.abs().max(1.0) {
            log::warn!("correlation matrix: dropping zero-variance column `{name}`");
            dropped.push(name.clone());
            continue;
        }
        labels.push(name.clone());
        centered.push(c);
        norms.push(norm);
    }
    let k = labels.len();
    if k < 2 {
        return Err(Error::TooFewColumns(k));
    }
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in i + 1..k {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels,
        values,
        dropped,
    })
}

/// Exponential moving average with `alpha = 2 / (span + 1)`, seeded with the
/// first observation.
pub fn ema(values: &[f64], span: usize) -> Vec<f64> {
    let alpha = 2.0 / (span as f64 + 1.0);
    let mut out = Vec::with_capacity(values.len());
    let mut state = match values.first() {
        Some(&v) => v,
        None => return out,
    };
    for &v in values {
        state = alpha * v + (1.0 - alpha) * state;
        out.push(state);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacdTriple {
    pub macd_line: Vec<f64>,
    pub signal_line: Vec<f64>,
    pub histogram: Vec<f64>,
    pub spans: (usize, usize, usize),
}

pub fn macd(values: &[f64], fast: usize, slow: usize, signal: usize) -> Result<MacdTriple> {
    if fast == 0 || slow == 0 || signal == 0 {
        return Err(Error::Config("MACD spans must be positive".into()));
    }
    if values.len() < slow {
        return Err(Error::SeriesTooShort {
            needed: slow,
            actual: values.len(),
        });
    }
    let fast_ema = ema(values, fast);
    let slow_ema = ema(values, slow);
    let macd_line: Vec<f64> = fast_ema.iter().zip(&slow_ema).map(|(f, s)| f - s).collect();
    let signal_line = ema(&macd_line, signal);
    let histogram = macd_line.iter().zip(&signal_line).map(|(m, s)| m - s).collect();
    Ok(MacdTriple {
        macd_line,
        signal_line,
        histogram,
        spans: (fast, slow, signal),
    })
}

/// Additive classical decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<Option<f64>>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<Option<f64>>,
    pub period: usize,
}

/// Centered moving-average trend, per-phase seasonal means, residual remainder.
pub fn decompose(values: &[f64], period: usize) -> Result<Decomposition> {
    let n = values.len();
    if period == 0 || n < 2 * period {
        return Err(Error::PeriodTooLarge { period, len: n });
    }

    // Odd periods use a plain centered average; even periods a 2xP average
    // with half weight on the two end points.
    let weights: Vec<f64> = if period % 2 == 1 {
        vec![1.0 / period as f64; period]
    } else {
        let mut w = vec![1.0 / period as f64; period + 1];
        w[0] /= 2.0;
        w[period] /= 2.0;
        w
    };
    let half = weights.len() / 2;
    let mut trend = vec![None; n];
    for (t, slot) in trend.iter_mut().enumerate().take(n - half).skip(half) {
        *slot = Some(
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * values[t + j - half])
                .sum(),
        );
    }

    let mut phase_sum = vec![0.0; period];
    let mut phase_count = vec![0usize; period];
    for (t, tr) in trend.iter().enumerate() {
        if let Some(tr) = tr {
            phase_sum[t % period] += values[t] - tr;
            phase_count[t % period] += 1;
        }
    }
    let mut pattern: Vec<f64> = phase_sum
        .iter()
        .zip(&phase_count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let offset = mean(&pattern);
    pattern.iter_mut().for_each(|p| *p -= offset);

    let seasonal: Vec<f64> = (0..n).map(|t| pattern[t % period]).collect();
    let residual = trend
        .iter()
        .enumerate()
        .map(|(t, tr)| tr.map(|tr| values[t] - tr - seasonal[t]))
        .collect();
    Ok(Decomposition {
        trend,
        seasonal,
        residual,
        period,
    })
}
