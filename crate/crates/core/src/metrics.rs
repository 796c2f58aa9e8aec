//! Point-forecast accuracy metrics and the model comparison table.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitudes below this are treated as zero by the percentage metrics.
pub const ZERO_EPS: f64 = 1e-12;

/// The five error metrics for one model. Percentages are plain numbers
/// (`2.5` means 2.5%).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mape: f64,
    pub smape: f64,
    /// Terms left out of MAPE because the actual value was (near) zero.
    #[serde(default)]
    pub mape_skipped: usize,
}

/// Scores `predicted` against `actual`.
pub fn evaluate(actual: &[f64], predicted: &[f64], model: &str) -> Result<MetricReport> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = actual
        .iter()
        .chain(predicted)
        .position(|v| !v.is_finite())
    {
        return Err(Error::NonFinite(format!("metric input at position {i}")));
    }

    let n = actual.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut ape_sum = 0.0;
    let mut ape_terms = 0usize;
    let mut sape_sum = 0.0;
    for (&y, &yhat) in actual.iter().zip(predicted) {
        let err = y - yhat;
        abs_sum += err.abs();
        sq_sum += err * err;
        if y.abs() >= ZERO_EPS {
            ape_sum += (err / y).abs();
            ape_terms += 1;
        }
        let denom = (y.abs() + yhat.abs()) / 2.0;
        if y.abs() >= ZERO_EPS || yhat.abs() >= ZERO_EPS {
            sape_sum += err.abs() / denom;
        }
    }
    if ape_terms == 0 {
        return Err(Error::AllTermsSkipped);
    }
    let mse = sq_sum / n;
    Ok(MetricReport {
        model: model.to_string(),
        mae: abs_sum / n,
        mse,
        rmse: mse.sqrt(),
        mape: 100.0 * ape_sum / ape_terms as f64,
        smape: 100.0 * sape_sum / n,
        mape_skipped: actual.len() - ape_terms,
    })
}

/// Rendered comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub text: String,
    pub rows: Vec<MetricReport>,
}

impl ReportTable {
    /// Writes `model,mae,mse,rmse,mape,smape` with full precision.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["model", "mae", "mse", "rmse", "mape", "smape"])?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.mae.to_string(),
                r.mse.to_string(),
                r.rmse.to_string(),
                r.mape.to_string(),
                r.smape.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads back a report CSV written by [`ReportTable::write_csv`].
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<MetricReport>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad number in report row {rec:?}")))
        };
        rows.push(MetricReport {
            model: rec.get(0).unwrap_or_default().to_string(),
            mae: num(1)?,
            mse: num(2)?,
            rmse: num(3)?,
            mape: num(4)?,
            smape: num(5)?,
            mape_skipped: 0,
        });
    }
    Ok(rows)
}

/// Lays the reports out as an aligned table in the given order.
///
/// MSE is shown with one decimal, everything else with two; the percentage
/// columns carry a `%` suffix.
pub fn report_table(reports: &[MetricReport]) -> Result<ReportTable> {
    if reports.is_empty() {
        return Err(Error::EmptyReportList);
    }
    let header = ["Model", "MAE", "MSE", "RMSE", "MAPE", "SMAPE"];
    let cells: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.2}", r.mae),
                format!("{:.1}", r.mse),
                format!("{:.2}", r.rmse),
                format!("{:.2}%", r.mape),
                format!("{:.2}%", r.smape),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }

    let mut text = String::new();
    let rule = |text: &mut String| {
        text.push('+');
        for w in widths {
            text.push_str(&"-".repeat(w + 2));
            text.push('+');
        }
        text.push('\n');
    };
    rule(&mut text);
    text.push('|');
    for (h, w) in header.iter().zip(widths) {
        let _ = write!(text, " {h:^w$} |");
    }
    text.push('\n');
    rule(&mut text);
    for row in &cells {
        text.push('|');
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(text, " {c:<w$} |");
            } else {
                let _ = write!(text, " {c:>w$} |");
            }
        }
        text.push('\n');
    }
    rule(&mut text);

    Ok(ReportTable {
        text,
        rows: reports.to_vec(),
    })
}
