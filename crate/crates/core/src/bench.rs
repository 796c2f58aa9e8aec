//! Benchmark harness: configuration, model comparison on a held-out segment,
//! exploratory plot data and the files behind the `bench` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classical::{EtsConfig, EtsModel, SarimaConfig, SarimaModel};
use crate::error::{Error, Result};
use crate::indicators::{
    acf, bollinger, correlation_matrix, daily_returns, decompose, fourier_components, histogram, macd,
    pacf, rolling_stats, spectrum_len, ReturnMode,
};
use crate::metrics::{evaluate, read_report_csv, report_table, MetricReport, ReportTable};
use crate::model::ForecastModel;
use crate::nbeats::{NBeatsConfig, NBeatsModel};
use crate::nhits::{NHitsConfig, NHitsModel};
use crate::series::{ingest_csv, CsvSchema, OhlcvFrame, Series, SplitSpec};

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";
pub const FORECASTS_CSV: &str = "forecasts.csv";
pub const SNAPSHOT_TOML: &str = "config_snapshot.toml";
pub const FAILURES_CSV: &str = "failures.csv";
pub const EDA_MANIFEST: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nbeats,
    Nhits,
    Sarima,
    Ets,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Nbeats => "NBEATS",
            ModelKind::Nhits => "NHITS",
            ModelKind::Sarima => "SARIMA",
            ModelKind::Ets => "ETS",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nbeats" => Ok(ModelKind::Nbeats),
            "nhits" => Ok(ModelKind::Nhits),
            "sarima" | "arima" => Ok(ModelKind::Sarima),
            "ets" | "holt-winters" => Ok(ModelKind::Ets),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// How the neural models cover a test segment longer than one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    /// Forecast H steps, then extend the context with the observed actuals.
    #[default]
    Rolling,
    /// Feed predictions back as context; no test actuals are seen.
    Recursive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, relative to the configuration file.
    pub path: PathBuf,
    /// Column to forecast: open, high, low, close, adj_close or volume.
    pub target: String,
    pub schema: CsvSchema,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::new(),
            target: "close".into(),
            schema: CsvSchema::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub horizon: usize,
    /// Defaults to five horizons.
    pub lookback: Option<usize>,
    pub evaluation: Evaluation,
    /// Enabled models, in report order.
    pub models: Vec<ModelKind>,
    /// Model `i` in `models` is seeded with `seed + i`.
    pub seed: u64,
    /// Relative to the configuration file.
    pub output_dir: PathBuf,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            horizon: 24,
            lookback: None,
            evaluation: Evaluation::Rolling,
            models: vec![ModelKind::Nbeats, ModelKind::Nhits, ModelKind::Sarima],
            seed: 42,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ForecastConfig {
    pub fn lookback(&self) -> usize {
        self.lookback.unwrap_or(5 * self.horizon)
    }
}

/// Figures produced by [`run_eda`], in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    ClosingPrices,
    AcfPacf,
    Bollinger,
    ReturnsHistogram,
    Fourier,
    Correlation,
    Macd,
    Decomposition,
    RollingStats,
}

impl Figure {
    pub const ALL: [Figure; 9] = [
        Figure::ClosingPrices,
        Figure::AcfPacf,
        Figure::Bollinger,
        Figure::ReturnsHistogram,
        Figure::Fourier,
        Figure::Correlation,
        Figure::Macd,
        Figure::Decomposition,
        Figure::RollingStats,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Figure::ClosingPrices => "01_closing_prices.csv",
            Figure::AcfPacf => "02_acf_pacf.csv",
            Figure::Bollinger => "03_bollinger.csv",
            Figure::ReturnsHistogram => "04_returns_histogram.csv",
            Figure::Fourier => "05_fourier.csv",
            Figure::Correlation => "06_correlation.csv",
            Figure::Macd => "07_macd.csv",
            Figure::Decomposition => "08_decomposition.csv",
            Figure::RollingStats => "09_rolling_stats.csv",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Figure::ClosingPrices => "closing_prices",
            Figure::AcfPacf => "acf_pacf",
            Figure::Bollinger => "bollinger",
            Figure::ReturnsHistogram => "returns_histogram",
            Figure::Fourier => "fourier",
            Figure::Correlation => "correlation",
            Figure::Macd => "macd",
            Figure::Decomposition => "decomposition",
            Figure::RollingStats => "rolling_stats",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaConfig {
    pub figures: Vec<Figure>,
    /// Subdirectory of the output directory.
    pub output_subdir: PathBuf,
    pub max_lag: usize,
    pub bollinger_window: usize,
    pub bollinger_k: f64,
    pub returns: ReturnMode,
    pub histogram_bins: usize,
    pub fourier_counts: Vec<usize>,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub decomposition_period: usize,
    pub rolling_window: usize,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            figures: Figure::ALL.to_vec(),
            output_subdir: PathBuf::from("eda"),
            max_lag: 40,
            bollinger_window: 20,
            bollinger_k: 2.0,
            returns: ReturnMode::Simple,
            histogram_bins: 50,
            fourier_counts: vec![3, 6, 9, 100],
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            decomposition_period: 5,
            rolling_window: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub data: DataConfig,
    pub split: SplitSpec,
    pub forecast: ForecastConfig,
    /// `lookback`, `horizon` and `train.seed` are taken from `[forecast]`.
    pub nbeats: NBeatsConfig,
    pub nhits: NHitsConfig,
    pub sarima: SarimaConfig,
    pub ets: EtsConfig,
    pub eda: EdaConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            split: SplitSpec::TestFraction(0.2),
            forecast: ForecastConfig::default(),
            nbeats: NBeatsConfig::default(),
            nhits: NHitsConfig::default(),
            sarima: SarimaConfig::default(),
            ets: EtsConfig::default(),
            eda: EdaConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: BenchConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn data_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.forecast.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.forecast.horizon == 0 {
            return Err(Error::Config("forecast.horizon must be at least 1".into()));
        }
        if self.forecast.lookback() == 0 {
            return Err(Error::Config("forecast.lookback must be at least 1".into()));
        }
        if self.forecast.models.is_empty() {
            return Err(Error::Config("forecast.models enables no model".into()));
        }
        let mut seen = Vec::new();
        for m in &self.forecast.models {
            if seen.contains(m) {
                return Err(Error::Config(format!("model `{}` listed twice", m.label())));
            }
            seen.push(*m);
        }
        if self.data.path.as_os_str().is_empty() {
            return Err(Error::Config("data.path is not set".into()));
        }
        Ok(())
    }

    /// The configuration with every derived default filled in, as run.
    pub fn resolved(&self) -> BenchConfig {
        let mut c = self.clone();
        let (lookback, horizon) = (c.forecast.lookback(), c.forecast.horizon);
        c.forecast.lookback = Some(lookback);
        for (i, kind) in c.forecast.models.clone().iter().enumerate() {
            let seed = c.forecast.seed.wrapping_add(i as u64);
            match kind {
                ModelKind::Nbeats => c.nbeats.train.seed = seed,
                ModelKind::Nhits => c.nhits.train.seed = seed,
                _ => {}
            }
        }
        c.nbeats.lookback = lookback;
        c.nbeats.horizon = horizon;
        c.nbeats.harmonics = Some(c.nbeats.harmonics());
        c.nhits.lookback = lookback;
        c.nhits.horizon = horizon;
        if let Ok(layout) = c.nhits.block_layout() {
            c.nhits.backcast_coeffs = Some(layout.iter().map(|b| b.1).collect());
            c.nhits.forecast_coeffs = Some(layout.iter().map(|b| b.2).collect());
        }
        c
    }

    /// TOML echo of [`BenchConfig::resolved`].
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(&self.resolved()).map_err(|e| Error::Config(e.to_string()))
    }

    fn load_frame(&self) -> Result<OhlcvFrame> {
        let ingested = ingest_csv(self.data_path(), &self.data.schema)?;
        if ingested.dropped_count > 0 {
            log::warn!("dropped {} malformed rows", ingested.dropped_count);
        }
        Ok(ingested.frame)
    }
}

/// A model that could not be fitted or could not forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFailure {
    pub model: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    /// One report per successful model, in configuration order.
    pub reports: Vec<MetricReport>,
    /// `(model, test forecast)` in configuration order.
    pub forecasts: Vec<(String, Vec<f64>)>,
    /// The full target series; `actual[split_index..]` is the test segment.
    pub actual: Vec<f64>,
    pub split_index: usize,
    /// Fitted parameters per successful model, see [`ForecastModel::parameters`].
    pub parameters: Vec<(String, Vec<f64>)>,
    pub failures: Vec<ModelFailure>,
    /// Resolved configuration.
    pub config: BenchConfig,
}

impl BenchResult {
    pub fn test(&self) -> &[f64] {
        &self.actual[self.split_index..]
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn build_model(kind: ModelKind, config: &BenchConfig) -> Result<Box<dyn ForecastModel>> {
    Ok(match kind {
        ModelKind::Nbeats => Box::new(NBeatsModel::new(config.nbeats.clone())?),
        ModelKind::Nhits => Box::new(NHitsModel::new(config.nhits.clone())?),
        ModelKind::Sarima => Box::new(SarimaModel::new(config.sarima.clone())),
        ModelKind::Ets => Box::new(EtsModel::new(config.ets.clone())),
    })
}

/// Test-segment forecast of one model fitted on `values[..split]`.
fn forecast_test(
    model: &dyn ForecastModel,
    kind: ModelKind,
    values: &[f64],
    split: usize,
    horizon: usize,
    evaluation: Evaluation,
) -> Result<Vec<f64>> {
    let test_len = values.len() - split;
    let neural = matches!(kind, ModelKind::Nbeats | ModelKind::Nhits);
    if !neural || evaluation == Evaluation::Recursive {
        return model.forecast(&values[..split], test_len);
    }
    let mut out = Vec::with_capacity(test_len);
    while out.len() < test_len {
        let origin = split + out.len();
        let steps = horizon.min(test_len - out.len());
        out.extend(model.forecast(&values[..origin], steps)?);
    }
    Ok(out)
}

/// Fits and scores every enabled model without writing anything.
///
/// Configuration and data problems are returned as errors. A model that
/// fails is recorded in [`BenchResult::failures`] and the others still run.
pub fn evaluate_models(config: &BenchConfig) -> Result<BenchResult> {
    config.validate()?;
    let frame = config.load_frame()?;
    let series = frame.series(&config.data.target)?;
    evaluate_series(config, series.values())
}

/// [`evaluate_models`] on an in-memory target series.
pub fn evaluate_series(config: &BenchConfig, values: &[f64]) -> Result<BenchResult> {
    config.validate()?;
    let resolved = config.resolved();
    let test_len = resolved.split.test_len(values.len())?;
    let split_index = values.len() - test_len;
    let train = Series::from_values(resolved.data.target.clone(), values[..split_index].to_vec())?;

    let mut result = BenchResult {
        reports: Vec::new(),
        forecasts: Vec::new(),
        actual: values.to_vec(),
        split_index,
        parameters: Vec::new(),
        failures: Vec::new(),
        config: resolved.clone(),
    };
    for &kind in &resolved.forecast.models {
        let label = kind.label();
        log::info!("fitting {label}");
        let outcome = (|| -> Result<(Vec<f64>, MetricReport, Vec<f64>)> {
            let mut model = build_model(kind, &resolved)?;
            model.fit(&train)?;
            let forecast = forecast_test(
                model.as_ref(),
                kind,
                values,
                split_index,
                resolved.forecast.horizon,
                resolved.forecast.evaluation,
            )?;
            let report = evaluate(&values[split_index..], &forecast, label)?;
            Ok((forecast, report, model.parameters()))
        })();
        match outcome {
            Ok((forecast, report, params)) => {
                result.forecasts.push((label.to_string(), forecast));
                result.reports.push(report);
                result.parameters.push((label.to_string(), params));
            }
            Err(source) => {
                let err = Error::Model {
                    model: label.to_string(),
                    source: Box::new(source),
                };
                log::error!("{err}");
                result.failures.push(ModelFailure {
                    model: label.to_string(),
                    message: err.to_string(),
                });
            }
        }
    }
    Ok(result)
}

/// Runs the benchmark and writes the report, plot data, configuration
/// snapshot and failure manifest to the output directory.
pub fn run_bench(config: &BenchConfig) -> Result<BenchResult> {
    let result = evaluate_models(config)?;
    write_bench_outputs(&result, &config.output_dir())?;
    Ok(result)
}

/// Writes the files of a finished run, always in the same order.
pub fn write_bench_outputs(result: &BenchResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    if !result.reports.is_empty() {
        let table = report_table(&result.reports)?;
        fs::write(dir.join(REPORT_TXT), &table.text)?;
        table.write_csv(dir.join(REPORT_CSV))?;
        emit_forecast_plotdata(result, dir.join(FORECASTS_CSV))?;
    }
    fs::write(dir.join(SNAPSHOT_TOML), result.config.snapshot()?)?;
    let mut w = csv::Writer::from_path(dir.join(FAILURES_CSV))?;
    w.write_record(["model", "error"])?;
    for f in &result.failures {
        w.write_record([&f.model, &f.message])?;
    }
    w.flush()?;
    Ok(())
}

/// Re-renders the comparison table of a finished run directory.
pub fn render_report(dir: impl AsRef<Path>) -> Result<ReportTable> {
    let rows = read_report_csv(dir.as_ref().join(REPORT_CSV))?;
    report_table(&rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `index,actual,<model>...`: one row per observation, model columns
/// empty on training rows.
pub fn emit_forecast_plotdata(result: &BenchResult, path: impl AsRef<Path>) -> Result<()> {
    if result.forecasts.is_empty() || result.actual.is_empty() {
        return Err(Error::EmptyResult);
    }
    let test_len = result.actual.len() - result.split_index;
    for (_, f) in &result.forecasts {
        if f.len() != test_len {
            return Err(Error::LengthMismatch {
                left: f.len(),
                right: test_len,
            });
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string(), "actual".to_string()];
    header.extend(result.forecasts.iter().map(|(m, _)| m.clone()));
    w.write_record(&header)?;
    for (i, a) in result.actual.iter().enumerate() {
        let mut row = vec![i.to_string(), a.to_string()];
        for (_, f) in &result.forecasts {
            row.push(fmt_opt(i.checked_sub(result.split_index).map(|j| f[j])));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed forecast plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub actual: Vec<f64>,
    pub split_index: usize,
    pub forecasts: Vec<(String, Vec<f64>)>,
}

impl PlotData {
    /// Metrics recomputed from the plotted values.
    pub fn reports(&self) -> Result<Vec<MetricReport>> {
        let test = &self.actual[self.split_index..];
        self.forecasts.iter().map(|(m, f)| evaluate(test, f, m)).collect()
    }
}

pub fn read_forecast_plotdata(path: impl AsRef<Path>) -> Result<PlotData> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let models: Vec<String> = reader.headers()?.iter().skip(2).map(str::to_string).collect();
    let mut actual = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); models.len()];
    let mut split_index = None;
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number `{s}` in plot data row {row}")))
        };
        actual.push(num(rec.get(1).unwrap_or_default())?);
        for (j, col) in columns.iter_mut().enumerate() {
            let cell = rec.get(j + 2).unwrap_or_default();
            if !cell.is_empty() {
                split_index.get_or_insert(row);
                col.push(num(cell)?);
            }
        }
    }
    let split_index = split_index.ok_or(Error::EmptyResult)?;
    Ok(PlotData {
        actual,
        split_index,
        forecasts: models.into_iter().zip(columns).collect(),
    })
}

/// One line of the EDA manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaEntry {
    pub figure: Figure,
    pub file: String,
    /// `None` when the file was written.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaOutcome {
    pub dir: PathBuf,
    pub entries: Vec<EdaEntry>,
}

impl EdaOutcome {
    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_some()).count()
    }
}

/// Writes one CSV per enabled figure plus `manifest.csv` under the EDA
/// output directory. A failing figure is listed in the manifest and the rest
/// are still written.
pub fn run_eda(config: &BenchConfig) -> Result<EdaOutcome> {
    let frame = config.load_frame()?;
    let dir = config.output_dir().join(&config.eda.output_subdir);
    eda_frame(&frame, &config.data.target, &config.eda, &dir)
}

/// [`run_eda`] on an in-memory frame.
pub fn eda_frame(frame: &OhlcvFrame, target: &str, eda: &EdaConfig, dir: &Path) -> Result<EdaOutcome> {
    let series = frame.series(target)?;
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for &figure in &eda.figures {
        let file = figure.file_name().to_string();
        let error = write_figure(figure, frame, series.values(), eda, &dir.join(&file))
            .err()
            .map(|e| {
                log::warn!("{}: {e}", figure.key());
                e.to_string()
            });
        entries.push(EdaEntry { figure, file, error });
    }
    let mut w = csv::Writer::from_path(dir.join(EDA_MANIFEST))?;
    w.write_record(["figure", "file", "status", "error"])?;
    for e in &entries {
        let status = if e.error.is_some() { "failed" } else { "ok" };
        w.write_record([e.figure.key(), &e.file, status, e.error.as_deref().unwrap_or("")])?;
    }
    w.flush()?;
    Ok(EdaOutcome {
        dir: dir.to_path_buf(),
        entries,
    })
}

fn write_rows(path: &Path, header: &[String], rows: Vec<Vec<String>>) -> Result<()> {
    // Build in memory so a failing figure leaves no partial file behind.
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(path, bytes)?;
    Ok(())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn write_figure(figure: Figure, frame: &OhlcvFrame, values: &[f64], eda: &EdaConfig, path: &Path) -> Result<()> {
    let n = values.len();
    let date = |i: usize| frame.timestamps[i].to_string();
    match figure {
        Figure::ClosingPrices => {
            let rows = (0..n).map(|i| vec![i.to_string(), date(i), values[i].to_string()]).collect();
            write_rows(path, &header(&["index", "date", "value"]), rows)
        }
        Figure::AcfPacf => {
            let a = acf(values, eda.max_lag)?;
            let p = pacf(values, eda.max_lag)?;
            let rows = (0..=eda.max_lag)
                .map(|k| vec![k.to_string(), a[k].to_string(), p[k].to_string()])
                .collect();
            write_rows(path, &header(&["lag", "acf", "pacf"]), rows)
        }
        Figure::Bollinger => {
            let b = bollinger(values, eda.bollinger_window, eda.bollinger_k)?;
            let rows = (0..n)
                .map(|i| vec![i.to_string(), date(i), fmt_opt(b.middle[i]), fmt_opt(b.upper[i]), fmt_opt(b.lower[i])])
                .collect();
            write_rows(path, &header(&["index", "date", "middle", "upper", "lower"]), rows)
        }
        Figure::ReturnsHistogram => {
            let r = daily_returns(values, eda.returns)?;
            let h = histogram(&r, eda.histogram_bins)?;
            let rows = h
                .counts
                .iter()
                .enumerate()
                .map(|(i, c)| vec![h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()])
                .collect();
            write_rows(path, &header(&["bin_start", "bin_end", "count"]), rows)
        }
        Figure::Fourier => {
            let f = fourier_components(values, &eda.fourier_counts)?;
            let mut head = header(&["index", "value"]);
            head.extend(f.reconstructions.iter().map(|(c, _)| format!("components_{c}")));
            head.push("magnitude".into());
            let m = spectrum_len(n);
            let rows = (0..n)
                .map(|i| {
                    let mut row = vec![i.to_string(), values[i].to_string()];
                    row.extend(f.reconstructions.iter().map(|(_, r)| r[i].to_string()));
                    row.push(if i < m { f.magnitudes[i].to_string() } else { String::new() });
                    row
                })
                .collect();
            write_rows(path, &head, rows)
        }
        Figure::Correlation => {
            let columns: Vec<(String, Vec<f64>)> = ["open", "high", "low", "close", "adj_close", "volume"]
                .iter()
                .map(|&c| (c.to_string(), frame.column(c).expect("known column").to_vec()))
                .collect();
            let m = correlation_matrix(&columns)?;
            let mut head = vec!["column".to_string()];
            head.extend(m.labels.iter().cloned());
            let rows = m
                .labels
                .iter()
                .zip(&m.values)
                .map(|(l, r)| {
                    let mut row = vec![l.clone()];
                    row.extend(r.iter().map(f64::to_string));
                    row
                })
                .collect();
            write_rows(path, &head, rows)
        }
        Figure::Macd => {
            let m = macd(values, eda.macd_fast, eda.macd_slow, eda.macd_signal)?;
            let rows = (0..n)
                .map(|i| {
                    vec![
                        i.to_string(),
                        date(i),
                        m.macd_line[i].to_string(),
                        m.signal_line[i].to_string(),
                        m.histogram[i].to_string(),
                    ]
                })
                .collect();
            write_rows(path, &header(&["index", "date", "macd", "signal", "histogram"]), rows)
        }
        Figure::Decomposition => {
            let d = decompose(values, eda.decomposition_period)?;
            let rows = (0..n)
                .map(|i| {
                    vec![
                        i.to_string(),
                        date(i),
                        values[i].to_string(),
                        fmt_opt(d.trend[i]),
                        d.seasonal[i].to_string(),
                        fmt_opt(d.residual[i]),
                    ]
                })
                .collect();
            write_rows(path, &header(&["index", "date", "observed", "trend", "seasonal", "residual"]), rows)
        }
        Figure::RollingStats => {
            let (means, stds) = rolling_stats(values, eda.rolling_window)?;
            let rows = (0..n)
                .map(|i| vec![i.to_string(), date(i), values[i].to_string(), fmt_opt(means[i]), fmt_opt(stds[i])])
                .collect();
            write_rows(path, &header(&["index", "date", "value", "rolling_mean", "rolling_std"]), rows)
        }
    }
}

/// Aligned text listing of an EDA manifest.
pub fn eda_summary(outcome: &EdaOutcome) -> String {
    let mut s = String::new();
    for e in &outcome.entries {
        let _ = match &e.error {
            None => writeln!(s, "ok      {}", e.file),
            Some(err) => writeln!(s, "failed  {}  ({err})", e.file),
        };
    }
    s
}
