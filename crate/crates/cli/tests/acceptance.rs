//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) so a full `cargo test` log
//! shows the status of every criterion.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fincast::bench::{evaluate_models, evaluate_series, BenchConfig, ModelKind, FORECASTS_CSV, REPORT_CSV, REPORT_TXT};
use fincast::classical::{difference, fit_arima, ArimaOrder, ArimaParams, FittedArima};
use fincast::indicators::{acf, bollinger, correlation_matrix, decompose, fourier_components, spectrum_len};
use fincast::metrics::evaluate;
use fincast::nbeats::{nbeats_block, Basis, NBeatsConfig, NBeatsMode, NBeatsModel};
use fincast::neural::{
    backward, max_relative_error, numeric_gradient, Activation, DenseLayer, Loss, Mlp, Network, Pooling,
    ResidualStackNet, Stack,
};
use fincast::nhits::{nhits_block, NHitsConfig, NHitsModel};
use fincast::series::{ingest_csv, CsvSchema};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Prints the verdict when dropped, so a panicking check still reports.
struct Verdict {
    id: u8,
    title: &'static str,
    start: Instant,
    detail: String,
    done: bool,
}

impl Verdict {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            start: Instant::now(),
            detail: String::new(),
            done: false,
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&s.into());
    }

    fn within(&mut self, budget: Duration) {
        let took = self.start.elapsed();
        self.note(format!("{:.1}s of {}s", took.as_secs_f64(), budget.as_secs()));
        assert!(took < budget, "criterion {} took {took:?}", self.id);
        self.done = true;
    }

    fn pass(&mut self) {
        self.done = true;
    }
}

impl Drop for Verdict {
    fn drop(&mut self) {
        let ok = self.done && !std::thread::panicking();
        let _ = writeln!(
            std::io::stderr(),
            "acceptance {}: {:<32} {} ({})",
            self.id,
            self.title,
            if ok { "PASS" } else { "FAIL" },
            self.detail
        );
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn metrics_match_direct_summation() {
    let mut v = Verdict::new(1, "metric oracle equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let actual: Vec<f64> = (0..n)
            .map(|_| {
                let mag = rng.random_range(0.5..1000.0);
                if rng.random_bool(0.2) { -mag } else { mag }
            })
            .collect();
        let predicted: Vec<f64> = actual.iter().map(|a| a + rng.random_range(-0.3..0.3) * a.abs()).collect();

        let mut abs = 0.0;
        let mut sq = 0.0;
        let mut ape = 0.0;
        let mut sape = 0.0;
        for (y, f) in actual.iter().zip(&predicted) {
            abs += (y - f).abs();
            sq += (y - f) * (y - f);
            ape += ((y - f) / y).abs();
            sape += 2.0 * (y - f).abs() / (y.abs() + f.abs());
        }
        let nf = n as f64;
        let oracle = [abs / nf, sq / nf, (sq / nf).sqrt(), 100.0 * ape / nf, 100.0 * sape / nf];

        let r = evaluate(&actual, &predicted, "m").unwrap();
        for (got, want) in [r.mae, r.mse, r.rmse, r.mape, r.smape].iter().zip(oracle) {
            assert!(rel_close(*got, want, 1e-10), "{got} vs {want}");
            worst = worst.max((got - want).abs() / want.abs().max(1e-300));
        }
    }
    v.note(format!("1000 pairs, max rel err {worst:.1e}"));
    v.within(Duration::from_secs(5));
}

fn randomise<N: Network>(net: &mut N, rng: &mut ChaCha8Rng, scale: f64) {
    let d = Normal::new(0.0, scale).unwrap();
    for l in net.layers_mut() {
        l.weights.mapv_inplace(|_| d.sample(rng));
        l.bias.mapv_inplace(|_| d.sample(rng));
    }
}

fn gradient_error<N: Network>(net: &mut N, rng: &mut ChaCha8Rng, batch: usize) -> f64 {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let x = Array2::from_shape_simple_fn((batch, net.input_len()), || unit.sample(rng));
    let y = Array2::from_shape_simple_fn((batch, net.output_len()), || unit.sample(rng));
    let (_, grads) = backward(net, &x, &y, Loss::Mse).unwrap();
    let numeric = numeric_gradient(net, &x, &y, Loss::Mse, 1e-5).unwrap();
    max_relative_error(&grads.flatten(), &numeric, 1e-6)
}

fn single_block_net(block: fincast::neural::BasisBlock) -> ResidualStackNet {
    ResidualStackNet::new(vec![Stack {
        name: "s".into(),
        blocks: vec![block.clone(), block],
    }])
    .unwrap()
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut v = Verdict::new(2, "gradient integrity");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut errors = Vec::new();

    let layer = |out: usize, inp: usize, act| DenseLayer::new(Array2::zeros((out, inp)), Array1::zeros(out), act).unwrap();
    let mut mlp = Mlp::new(vec![
        layer(7, 5, Activation::Relu),
        layer(6, 7, Activation::Relu),
        layer(3, 6, Activation::Identity),
    ])
    .unwrap();
    randomise(&mut mlp, &mut rng, 0.5);
    errors.push(("dense", gradient_error(&mut mlp, &mut rng, 4)));

    for (name, basis) in [
        ("polynomial", Basis::Polynomial { degree: 3 }),
        ("fourier", Basis::Fourier { harmonics: 2 }),
        ("generic", Basis::Generic),
    ] {
        let block = nbeats_block(basis, 10, 5, 2, 8, &mut rng).unwrap();
        let mut net = single_block_net(block);
        randomise(&mut net, &mut rng, 0.3);
        errors.push((name, gradient_error(&mut net, &mut rng, 3)));
    }

    let mut nhits = NHitsModel::new(NHitsConfig {
        pools: vec![3, 2, 1],
        forecast_coeffs: Some(vec![2, 3, 6]),
        hidden_width: 8,
        ..NHitsConfig::new(12, 6)
    })
    .unwrap();
    randomise(&mut nhits.net, &mut rng, 0.3);
    errors.push(("nhits", gradient_error(&mut nhits.net, &mut rng, 3)));

    for (name, err) in &errors {
        v.note(format!("{name} {err:.1e}"));
        assert!(*err < 1e-4, "{name}: relative error {err}");
    }
    v.within(Duration::from_secs(30));
}

#[test]
fn residual_stacks_decompose_exactly() {
    let mut v = Verdict::new(3, "structural identities");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..24).map(|i| (i as f64 * 0.4).sin() + 0.05 * i as f64).collect();

    let mut worst = 0.0f64;
    let mut track = |a: f64, b: f64| {
        worst = worst.max((a - b).abs());
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    };

    for mode in [NBeatsMode::Interpretable, NBeatsMode::Generic] {
        let mut model = NBeatsModel::new(NBeatsConfig {
            mode,
            hidden_width: 16,
            ..NBeatsConfig::new(24, 6)
        })
        .unwrap();
        randomise(&mut model.net, &mut rng, 0.2);
        let out = model.model_forward(&x).unwrap();
        for i in 0..6 {
            track(out.forecast[i], out.stack_partials.iter().map(|(_, p)| p[i]).sum());
            track(out.forecast[i], out.block_forecasts.iter().map(|p| p[i]).sum());
        }
        for i in 0..24 {
            track(x[i], out.block_backcasts.iter().map(|b| b[i]).sum::<f64>() + out.residual[i]);
        }
    }

    let mut nhits = NHitsModel::new(NHitsConfig {
        hidden_width: 16,
        ..NHitsConfig::new(24, 6)
    })
    .unwrap();
    randomise(&mut nhits.net, &mut rng, 0.2);
    let out = nhits.model_forward(&x).unwrap();
    for i in 0..6 {
        track(out.forecast[i], out.levels.iter().map(|l| l[i]).sum());
    }
    for i in 0..24 {
        track(x[i], out.backcasts.iter().map(|b| b[i]).sum::<f64>() + out.residual[i]);
    }

    let pooled = nhits_block(Pooling::IDENTITY, 24, 6, 24, 6, 2, 16, &mut rng).unwrap();
    let mut generic = nbeats_block(Basis::Generic, 24, 6, 2, 16, &mut rng).unwrap();
    generic.mlp = pooled.mlp.clone();
    let (b1, f1) = fincast::nhits::block_forward(&pooled, &x).unwrap();
    let (b2, f2) = fincast::nbeats::block_forward(&generic, &x).unwrap();
    for (a, b) in b1.iter().chain(&f1).zip(b2.iter().chain(&f2)) {
        track(*a, *b);
    }
    v.note(format!("max abs deviation {worst:.1e}"));
    v.pass();
}

#[test]
fn classical_models_recover_known_structure() {
    let mut v = Verdict::new(4, "classical recovery");
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut x = vec![0.0f64; 2000];
    for t in 1..2000 {
        x[t] = 0.7 * x[t - 1] + noise.sample(&mut rng);
    }
    let fit = fit_arima(&x, ArimaOrder::new(1, 0, 0)).unwrap();
    let phi = fit.params.ar[0];
    v.note(format!("phi {phi:.4}"));
    assert!((phi - 0.7).abs() <= 0.05, "phi = {phi}");

    let walk: Vec<f64> = (0..300).map(|t| 50.0 + (t as f64 * 0.37).sin() * 10.0 + t as f64 * 0.2).collect();
    for (d, sd, s) in [(1, 0, 0), (2, 0, 0), (1, 1, 12), (2, 1, 7)] {
        let (w, diff) = difference(&walk, d, sd, s).unwrap();
        let back = diff.invert(&w);
        assert_eq!(back.len(), walk.len());
        for (a, b) in back.iter().zip(&walk) {
            assert!((a - b).abs() <= 1e-12, "d={d} D={sd}: {a} vs {b}");
        }
    }

    let naive = FittedArima::new(ArimaOrder::new(0, 1, 0), ArimaParams::default(), &walk).unwrap();
    assert!(naive.forecast(15).iter().all(|&f| f == walk[299]));
    let fitted = fit_arima(&walk, ArimaOrder::new(0, 1, 0)).unwrap();
    assert!(fitted.forecast(15).iter().all(|&f| f == walk[299]));
    v.within(Duration::from_secs(60));
}

fn synthetic_config() -> BenchConfig {
    BenchConfig::from_toml_str(
        r#"
[data]
path = "unused.csv"

[split]
test_length = 24

[forecast]
horizon = 24
lookback = 72
models = ["nbeats", "nhits", "sarima"]
seed = 1

[nbeats]
hidden_width = 128
hidden_layers = 3
trend_blocks = 2
seasonality_blocks = 2

[nbeats.train]
max_epochs = 150
patience = 20

[nhits]
hidden_width = 128

[nhits.train]
max_epochs = 150
patience = 20

[sarima.caps]
period = 12
"#,
        ".",
    )
    .unwrap()
}

#[test]
fn synthetic_trend_and_season_are_forecast_accurately() {
    let mut v = Verdict::new(5, "synthetic end-to-end");
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let values: Vec<f64> = (0..600)
        .map(|t| {
            let clean = 100.0 + 0.2 * t as f64 + 10.0 * (2.0 * PI * t as f64 / 12.0).sin();
            clean * (1.0 + 0.01 * unit.sample(&mut rng))
        })
        .collect();
    let result = evaluate_series(&synthetic_config(), &values).unwrap();
    assert!(result.is_complete(), "{:?}", result.failures);
    for r in &result.reports {
        v.note(format!("{} {:.2}%", r.model, r.smape));
    }
    let smape = |m: &str| result.reports.iter().find(|r| r.model == m).unwrap().smape;
    assert!(smape("NBEATS") < 5.0);
    assert!(smape("NHITS") < 5.0);
    assert!(smape("SARIMA") < 10.0);
    v.within(Duration::from_secs(300));
}

fn sample_config() -> BenchConfig {
    BenchConfig::from_file(repo_root().join("configs/sample.toml")).unwrap()
}

#[test]
fn neural_models_beat_sarima_on_sample_data() {
    let mut v = Verdict::new(6, "sample ordering vs SARIMA");
    let mut config = sample_config();
    config.forecast.models = vec![ModelKind::Nbeats, ModelKind::Nhits, ModelKind::Sarima];
    let result = evaluate_models(&config).unwrap();
    assert!(result.is_complete(), "{:?}", result.failures);
    for r in &result.reports {
        v.note(format!("{} {:.2}%", r.model, r.smape));
    }
    let smape = |m: &str| result.reports.iter().find(|r| r.model == m).unwrap().smape;
    assert!(smape("NBEATS") < smape("SARIMA"));
    assert!(smape("NHITS") < smape("SARIMA"));
    v.pass();
}

#[test]
fn exploratory_statistics_satisfy_identities() {
    let mut v = Verdict::new(7, "EDA identities");
    let config = sample_config();
    let frame = ingest_csv(config.data_path(), &CsvSchema::default()).unwrap().frame;
    let close = &frame.close;
    let n = close.len();

    let d = decompose(close, 5).unwrap();
    let mut recon = 0.0f64;
    for i in 0..n {
        if let (Some(t), Some(r)) = (d.trend[i], d.residual[i]) {
            recon = recon.max((t + d.seasonal[i] + r - close[i]).abs());
        }
    }
    assert!(recon <= 1e-9);

    let b = bollinger(close, 20, 2.0).unwrap();
    let mut sym = 0.0f64;
    for i in 0..n {
        if let (Some(u), Some(m), Some(l)) = (b.upper[i], b.middle[i], b.lower[i]) {
            sym = sym.max(((u - m) - (m - l)).abs());
        }
    }
    assert!(sym <= 1e-9);

    let full = fourier_components(close, &[spectrum_len(n)]).unwrap();
    let fourier = full.reconstructions[0]
        .1
        .iter()
        .zip(close)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(fourier <= 1e-9);

    let a = acf(close, 30).unwrap();
    assert_eq!(a[0], 1.0);

    let cols: Vec<(String, Vec<f64>)> = ["open", "high", "low", "close", "volume"]
        .iter()
        .map(|&c| (c.to_string(), frame.column(c).unwrap().to_vec()))
        .collect();
    let m = correlation_matrix(&cols).unwrap();
    for i in 0..m.values.len() {
        assert_eq!(m.values[i][i], 1.0);
        for j in 0..m.values.len() {
            assert_eq!(m.values[i][j], m.values[j][i]);
        }
    }
    v.note(format!("decomposition {recon:.1e}, bands {sym:.1e}, fourier {fourier:.1e}"));
    v.within(Duration::from_secs(10));
}

#[test]
fn repeated_cli_runs_are_byte_identical() {
    let mut v = Verdict::new(8, "determinism");
    let dir = tempfile::tempdir().unwrap();
    let config = repo_root().join("configs/sample.toml");
    let run = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_bench"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    for f in [REPORT_TXT, REPORT_CSV, FORECASTS_CSV] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert!(x == y, "{f} differs between runs");
    }
    v.note("report.txt, report.csv, forecasts.csv identical");
    v.pass();
}
