use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What is needed to undo `(1 - L)^d (1 - L^S)^D`, both on the differenced
/// sample itself and on forecasts that follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Differencing {
    /// Lag of each applied step, in application order.
    pub lags: Vec<usize>,
    /// First `lag` values of each step's input.
    heads: Vec<Vec<f64>>,
    /// Last `lag` values of each step's input.
    tails: Vec<Vec<f64>>,
    /// Rounding error of every difference, so the sample inverts exactly.
    lost: Vec<Vec<f64>>,
}

/// `a + b` as a float plus its exact rounding error.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    (s, (a - (s - bp)) + (b - bp))
}

impl Differencing {
    pub fn is_identity(&self) -> bool {
        self.lags.is_empty()
    }

    /// Rebuilds the original series from its differenced form. The
    /// differenced sample itself round-trips bit for bit.
    pub fn invert(&self, differenced: &[f64]) -> Vec<f64> {
        let mut out = differenced.to_vec();
        for ((lag, head), lost) in self.lags.iter().zip(&self.heads).zip(&self.lost).rev() {
            let exact = lost.len() == out.len();
            let mut x = head.clone();
            x.reserve(out.len());
            for (t, y) in out.iter().enumerate() {
                let (s, e) = two_sum(*y, x[t]);
                let v = if exact { s + (e + lost[t]) } else { s + e };
                x.push(v);
            }
            debug_assert_eq!(x.len(), out.len() + lag);
            out = x;
        }
        out
    }

    /// Integrates forecasts of the differenced series into original units.
    pub fn integrate(&self, future: &[f64]) -> Vec<f64> {
        let mut out = future.to_vec();
        for (lag, tail) in self.lags.iter().zip(&self.tails).rev() {
            let mut x = tail.clone();
            for (t, y) in out.iter().enumerate() {
                let v = y + x[t];
                x.push(v);
            }
            out = x.split_off(*lag);
        }
        out
    }
}

/// Applies `(1 - L)^d` then `(1 - L^period)^seasonal_d`.
pub fn difference(values: &[f64], d: usize, seasonal_d: usize, period: usize) -> Result<(Vec<f64>, Differencing)> {
    if seasonal_d > 0 && period == 0 {
        return Err(Error::InvalidOrder("seasonal differencing needs a period".into()));
    }
    let lags: Vec<usize> = std::iter::repeat_n(1, d)
        .chain(std::iter::repeat_n(period, seasonal_d))
        .collect();
    let total: usize = lags.iter().sum();
    if values.len() <= total {
        return Err(Error::SeriesTooShort {
            needed: total + 1,
            actual: values.len(),
        });
    }
    let mut heads = Vec::with_capacity(lags.len());
    let mut tails = Vec::with_capacity(lags.len());
    let mut lost = Vec::with_capacity(lags.len());
    let mut x = values.to_vec();
    for &lag in &lags {
        heads.push(x[..lag].to_vec());
        tails.push(x[x.len() - lag..].to_vec());
        let (y, err): (Vec<f64>, Vec<f64>) = (lag..x.len()).map(|t| two_sum(x[t], -x[t - lag])).unzip();
        lost.push(err);
        x = y;
    }
    Ok((
        x,
        Differencing {
            lags,
            heads,
            tails,
            lost,
        },
    ))
}
