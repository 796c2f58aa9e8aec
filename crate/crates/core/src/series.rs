//! Series data model, CSV ingestion, splitting, windowing and scaling.

use std::path::Path;

use chrono::{DateTime, Days, NaiveDate, NaiveDateTime};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered univariate series indexed by observation date.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    name: String,
    timestamps: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl Series {
    pub fn new(
        name: impl Into<String>,
        timestamps: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: values.len(),
            });
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "timestamps must be strictly increasing".into(),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at index {i}")));
        }
        Ok(Self {
            name: name.into(),
            timestamps,
            values,
        })
    }

    /// Builds a series on consecutive calendar days starting 2000-01-01.
    ///
    /// Intended for synthetic data where only observation order matters.
    pub fn from_values(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let timestamps = (0..values.len() as u64)
            .map(|i| start + Days::new(i))
            .collect();
        Self::new(name, timestamps, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same timestamps, new values. Used by transforms that preserve length.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            name: self.name.clone(),
            timestamps: self.timestamps.clone(),
            values,
        }
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            name: self.name.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }
}

/// Daily market data as exported by the usual finance portals.
#[derive(Debug, Clone, PartialEq)]
pub struct OhlcvFrame {
    pub timestamps: Vec<NaiveDate>,
    pub open: Vec<f64>,
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
    pub adj_close: Vec<f64>,
    pub volume: Vec<f64>,
}

impl OhlcvFrame {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Named column lookup: `open`, `high`, `low`, `close`, `adj_close`, `volume`.
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "open" => Some(&self.open),
            "high" => Some(&self.high),
            "low" => Some(&self.low),
            "close" => Some(&self.close),
            "adj_close" => Some(&self.adj_close),
            "volume" => Some(&self.volume),
            _ => None,
        }
    }

    /// Extracts any column as a [`Series`].
    pub fn series(&self, column: &str) -> Result<Series> {
        if self.is_empty() {
            return Err(Error::EmptyFrame);
        }
        let values = self
            .column(column)
            .ok_or_else(|| Error::MissingColumn(column.to_string()))?;
        Series::new(column, self.timestamps.clone(), values.to_vec())
    }
}

/// Maps frame fields to CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    /// When absent, `adj_close` is filled from the close column.
    pub adj_close: Option<String>,
    pub volume: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date: "Date".into(),
            open: "Open".into(),
            high: "High".into(),
            low: "Low".into(),
            close: "Close".into(),
            adj_close: Some("Adj Close".into()),
            volume: "Volume".into(),
        }
    }
}

/// A cleaned frame and the number of rows discarded on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub frame: OhlcvFrame,
    pub dropped_count: usize,
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.date_naive());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.date());
        }
    }
    None
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads an OHLCV CSV file.
///
/// Rows with an unparseable date, a missing or non-numeric cell, `high < low`,
/// negative volume, or a duplicated date are dropped and counted. The result is
/// sorted by date.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(&schema.date)?;
    let open_idx = find(&schema.open)?;
    let high_idx = find(&schema.high)?;
    let low_idx = find(&schema.low)?;
    let close_idx = find(&schema.close)?;
    let adj_idx = schema.adj_close.as_deref().map(find).transpose()?;
    let volume_idx = find(&schema.volume)?;

    let mut rows: Vec<(NaiveDate, [f64; 6])> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let cell = |i: usize| record.get(i).and_then(parse_number);
        let parsed = (|| {
            let date = parse_date(record.get(date_idx)?)?;
            let close = cell(close_idx)?;
            let adj = match adj_idx {
                Some(i) => cell(i)?,
                None => close,
            };
            Some((
                date,
                [
                    cell(open_idx)?,
                    cell(high_idx)?,
                    cell(low_idx)?,
                    close,
                    adj,
                    cell(volume_idx)?,
                ],
            ))
        })();
        match parsed {
            Some((date, v)) if v[1] >= v[2] && v[5] >= 0.0 => rows.push((date, v)),
            _ => dropped += 1,
        }
    }

    rows.sort_by_key(|(d, _)| *d);
    let before = rows.len();
    rows.dedup_by_key(|(d, _)| *d);
    dropped += before - rows.len();

    if rows.is_empty() {
        return Err(Error::EmptyAfterCleaning { dropped });
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} malformed rows", path.display());
    }

    let mut frame = OhlcvFrame {
        timestamps: Vec::with_capacity(rows.len()),
        open: Vec::with_capacity(rows.len()),
        high: Vec::with_capacity(rows.len()),
        low: Vec::with_capacity(rows.len()),
        close: Vec::with_capacity(rows.len()),
        adj_close: Vec::with_capacity(rows.len()),
        volume: Vec::with_capacity(rows.len()),
    };
    for (date, v) in rows {
        frame.timestamps.push(date);
        frame.open.push(v[0]);
        frame.high.push(v[1]);
        frame.low.push(v[2]);
        frame.close.push(v[3]);
        frame.adj_close.push(v[4]);
        frame.volume.push(v[5]);
    }
    Ok(Ingested {
        frame,
        dropped_count: dropped,
    })
}

/// The close column, named `close`.
pub fn close_series(frame: &OhlcvFrame) -> Result<Series> {
    frame.series("close")
}

/// How much of a series to hold out for testing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    /// Fraction of observations, floored, at least one.
    TestFraction(f64),
    TestLength(usize),
}

impl SplitSpec {
    pub fn test_len(&self, n: usize) -> Result<usize> {
        let len = match *self {
            SplitSpec::TestFraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::InvalidSplit(format!(
                        "test fraction {f} outside (0, 1)"
                    )));
                }
                ((n as f64 * f).floor() as usize).max(1)
            }
            SplitSpec::TestLength(len) => len,
        };
        if len == 0 || len >= n {
            return Err(Error::InvalidSplit(format!(
                "test length {len} for series of length {n}"
            )));
        }
        Ok(len)
    }
}

/// Splits into leading train and trailing test segments.
pub fn split(series: &Series, spec: SplitSpec) -> Result<(Series, Series)> {
    let n = series.len();
    let test_len = spec.test_len(n)?;
    let cut = n - test_len;
    Ok((series.slice(0..cut), series.slice(cut..n)))
}

/// Supervised (lookback, horizon) pairs cut from a series.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    /// One lookback window per row.
    pub inputs: Array2<f64>,
    /// The horizon window following each input row.
    pub targets: Array2<f64>,
    pub lookback: usize,
    pub horizon: usize,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// Rows `range` as a new window set.
    pub fn rows(&self, range: std::ops::Range<usize>) -> WindowSet {
        use ndarray::s;
        WindowSet {
            inputs: self.inputs.slice(s![range.clone(), ..]).to_owned(),
            targets: self.targets.slice(s![range, ..]).to_owned(),
            lookback: self.lookback,
            horizon: self.horizon,
        }
    }
}

/// Cuts contiguous windows `stride` apart.
pub fn make_windows(values: &[f64], lookback: usize, horizon: usize, stride: usize) -> Result<WindowSet> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::Config(
            "lookback, horizon and stride must be positive".into(),
        ));
    }
    let n = values.len();
    if lookback + horizon > n {
        return Err(Error::SeriesTooShort {
            needed: lookback + horizon,
            actual: n,
        });
    }
    let count = (n - lookback - horizon) / stride + 1;
    let inputs = Array2::from_shape_fn((count, lookback), |(r, c)| values[r * stride + c]);
    let targets = Array2::from_shape_fn((count, horizon), |(r, c)| {
        values[r * stride + lookback + c]
    });
    Ok(WindowSet {
        inputs,
        targets,
        lookback,
        horizon,
    })
}

/// Mean/standard-deviation scaler fitted on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    /// Population (1/n) statistics.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) || std <= 1e-12 * mean.abs() {
            return Err(Error::ZeroVariance);
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn inverse(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// Scales `train` and each of `apply_to` with statistics from `train` only.
pub fn standardize(train: &Series, apply_to: &[&Series]) -> Result<(Series, Vec<Series>, Scaler)> {
    let scaler = Scaler::fit(train.values())?;
    let scaled_train = train.with_values(scaler.transform(train.values()));
    let others = apply_to
        .iter()
        .map(|s| s.with_values(scaler.transform(s.values())))
        .collect();
    Ok((scaled_train, others, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "Date,Open,High,Low,Close,Adj Close,Volume\n";

    #[test]
    fn ingest_passthrough() {
        let f = write_csv(&format!(
            "{HEADER}2020-01-02,10,11,9,10,9.5,100\n2020-01-03,10,12,9,11,10.5,100\n2020-01-06,11,13,10,12,11.5,100\n"
        ));
        let ing = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ing.frame.len(), 3);
        assert_eq!(ing.frame.close, vec![10.0, 11.0, 12.0]);
        assert_eq!(ing.dropped_count, 0);
    }

    #[test]
    fn ingest_sorts_rows() {
        let ordered = write_csv(&format!(
            "{HEADER}2020-01-02,10,11,9,10,9.5,100\n2020-01-03,10,12,9,11,10.5,100\n2020-01-06,11,13,10,12,11.5,100\n"
        ));
        let shuffled = write_csv(&format!(
            "{HEADER}2020-01-06,11,13,10,12,11.5,100\n2020-01-02,10,11,9,10,9.5,100\n2020-01-03,10,12,9,11,10.5,100\n"
        ));
        let a = ingest_csv(ordered.path(), &CsvSchema::default()).unwrap();
        let b = ingest_csv(shuffled.path(), &CsvSchema::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ingest_drops_blank_close() {
        let f = write_csv(&format!(
            "{HEADER}2020-01-02,10,11,9,10,9.5,100\n2020-01-03,10,12,9,,10.5,100\n2020-01-06,11,13,10,12,11.5,100\n"
        ));
        let ing = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ing.frame.len(), 2);
        assert_eq!(ing.dropped_count, 1);
    }

    #[test]
    fn ingest_errors() {
        let missing = ingest_csv("/definitely/not/here.csv", &CsvSchema::default());
        assert!(matches!(missing, Err(Error::FileNotFound(_))));

        let f = write_csv("Date,Open,High,Low,Close,Volume\n2020-01-02,1,1,1,1,1\n");
        match ingest_csv(f.path(), &CsvSchema::default()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "Adj Close"),
            other => panic!("unexpected {other:?}"),
        }
        let schema = CsvSchema {
            adj_close: None,
            ..CsvSchema::default()
        };
        let ing = ingest_csv(f.path(), &schema).unwrap();
        assert_eq!(ing.frame.adj_close, ing.frame.close);

        let f = write_csv(&format!("{HEADER}2020-01-02,1,1,1,x,1,1\nnot-a-date,1,1,1,1,1,1\n"));
        assert!(matches!(
            ingest_csv(f.path(), &CsvSchema::default()),
            Err(Error::EmptyAfterCleaning { dropped: 2 })
        ));
    }

    #[test]
    fn ingest_accepts_datetime_stamps() {
        let f = write_csv(&format!(
            "{HEADER}2020-01-02T00:00:00Z,10,11,9,10,9.5,100\n2020-01-03 00:00:00,10,12,9,11,10.5,100\n"
        ));
        let ing = ingest_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ing.frame.len(), 2);
    }

    fn frame(close: Vec<f64>, adj: Vec<f64>) -> OhlcvFrame {
        let n = close.len();
        let s = Series::from_values("x", close.clone()).unwrap();
        OhlcvFrame {
            timestamps: s.timestamps().to_vec(),
            open: close.clone(),
            high: close.clone(),
            low: close.clone(),
            close,
            adj_close: adj,
            volume: vec![1.0; n],
        }
    }

    #[test]
    fn close_series_selects_close() {
        let f = frame(vec![10.0, 11.0, 12.0], vec![1.0, 2.0, 3.0]);
        let s = close_series(&f).unwrap();
        assert_eq!(s.values(), &[10.0, 11.0, 12.0]);
        assert_eq!(s.name(), "close");
        assert_eq!(close_series(&frame(vec![5.0], vec![5.0])).unwrap().len(), 1);
        assert!(matches!(
            close_series(&frame(vec![], vec![])),
            Err(Error::EmptyFrame)
        ));
    }

    #[test]
    fn split_examples() {
        let s = Series::from_values("x", (0..10).map(f64::from).collect()).unwrap();
        let (tr, te) = split(&s, SplitSpec::TestLength(2)).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (tr, te) = split(&s, SplitSpec::TestFraction(0.2)).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let (_, te) = split(&s, SplitSpec::TestFraction(0.01)).unwrap();
        assert_eq!(te.len(), 1);
        let two = Series::from_values("x", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            split(&two, SplitSpec::TestLength(2)),
            Err(Error::InvalidSplit(_))
        ));
        assert!(split(&two, SplitSpec::TestLength(0)).is_err());
    }

    #[test]
    fn window_examples() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = make_windows(&v, 3, 1, 1).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.inputs.row(0).to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(w.targets.row(0).to_vec(), vec![4.0]);
        assert_eq!(make_windows(&v, 4, 2, 1).unwrap().len(), 1);
        assert_eq!(make_windows(&v, 2, 1, 2).unwrap().len(), 2);
        assert!(matches!(
            make_windows(&v[..4], 3, 2, 1),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn standardize_examples() {
        let train = Series::from_values("x", vec![1.0, 2.0, 3.0]).unwrap();
        let (scaled, _, scaler) = standardize(&train, &[]).unwrap();
        assert_eq!(scaler.mean, 2.0);
        assert!((scaler.std - 0.816_496_580_927_726).abs() < 1e-12);
        let expect = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (a, b) in scaled.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let constant = Series::from_values("x", vec![4.0; 5]).unwrap();
        assert!(matches!(standardize(&constant, &[]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn standardize_uses_train_statistics() {
        let train = Series::from_values("x", vec![1.0, 2.0, 3.0]).unwrap();
        let test = Series::from_values("y", vec![4.0]).unwrap();
        let (_, others, scaler) = standardize(&train, &[&test]).unwrap();
        assert!((others[0].values()[0] - 2.0 / scaler.std).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_concatenates(values in prop::collection::vec(-1e6f64..1e6, 2..200), frac in 0.01f64..0.99) {
                let s = Series::from_values("x", values.clone()).unwrap();
                if let Ok((tr, te)) = split(&s, SplitSpec::TestFraction(frac)) {
                    let joined: Vec<f64> = tr.values().iter().chain(te.values()).copied().collect();
                    prop_assert_eq!(joined, values);
                }
            }

            #[test]
            fn windows_are_contiguous(values in prop::collection::vec(-1e3f64..1e3, 5..80), l in 1usize..10, h in 1usize..5, stride in 1usize..4) {
                prop_assume!(l + h <= values.len());
                let w = make_windows(&values, l, h, stride).unwrap();
                prop_assert_eq!(w.len(), (values.len() - l - h) / stride + 1);
                for r in 0..w.len() {
                    prop_assert_eq!(w.targets[[r, 0]], values[r * stride + l]);
                    prop_assert_eq!(w.inputs[[r, l - 1]], values[r * stride + l - 1]);
                }
            }

            #[test]
            fn scaler_round_trip(values in prop::collection::vec(-1e6f64..1e6, 2..100)) {
                if let Ok(scaler) = Scaler::fit(&values) {
                    let back = scaler.inverse(&scaler.transform(&values));
                    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    for (a, b) in back.iter().zip(&values) {
                        prop_assert!((a - b).abs() <= 1e-9 * max);
                    }
                }
            }
        }
    }
}
