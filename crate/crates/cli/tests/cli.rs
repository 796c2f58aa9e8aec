use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_fixture(dir: &Path, ets_mode: &str) {
    // One negative close so multiplicative Holt-Winters fails.
    let mut csv = String::from("Date,Open,High,Low,Close,Adj Close,Volume\n");
    for (i, date) in dates(120).iter().enumerate() {
        let t = i as f64;
        let c = if i == 30 { -1.0 } else { 20.0 + 0.05 * t + (t * std::f64::consts::PI / 3.0).sin() };
        csv.push_str(&format!("{date},{c},{},{},{c},{c},{}\n", c + 1.0, c - 1.0, 100 + i));
    }
    fs::write(dir.join("data.csv"), csv).unwrap();
    fs::write(
        dir.join("bench.toml"),
        format!(
            r#"
[data]
path = "data.csv"

[split]
test_length = 12

[forecast]
horizon = 6
lookback = 18
models = ["sarima", "ets", "nhits"]
output_dir = "out"

[nhits]
pools = [2, 1]
hidden_width = 8

[nhits.train]
max_epochs = 5

[sarima.caps]
max_p = 1
max_q = 1

[ets]
seasonal = "{ets_mode}"
period = 6

[eda]
fourier_counts = [3, 6]
"#
        ),
    )
    .unwrap();
}

fn dates(n: usize) -> Vec<String> {
    let days = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let mut out = Vec::new();
    let (mut m, mut d) = (0usize, 1usize);
    while out.len() < n {
        out.push(format!("2021-{:02}-{:02}", m + 1, d));
        d += 1;
        if d > days[m] {
            d = 1;
            m += 1;
        }
    }
    out
}

#[test]
fn full_success_exits_zero_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "additive");
    let out = bench(&["run", "--config", "bench.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("| SARIMA"));
    assert!(stdout.contains("| NHITS"));

    let report = bench(&["report", "out"], dir.path());
    assert_eq!(report.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(String::from_utf8(report.stdout).unwrap(), table);
}

#[test]
fn partial_failure_exits_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "multiplicative");
    let out = bench(&["run", "--config", "bench.toml", "--out", "elsewhere"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let manifest = fs::read_to_string(dir.path().join("elsewhere/failures.csv")).unwrap();
    assert!(manifest.contains("ETS,"));
    assert!(dir.path().join("elsewhere/report.csv").exists());
}

#[test]
fn config_and_data_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bench(&["run", "--config", "missing.toml"], dir.path()).status.code(), Some(1));

    fs::write(dir.path().join("bad.toml"), "[forecast]\nhorizon = 0\n[data]\npath = \"d.csv\"\n").unwrap();
    assert_eq!(bench(&["run", "--config", "bad.toml"], dir.path()).status.code(), Some(1));

    fs::write(dir.path().join("nodata.toml"), "[data]\npath = \"nope.csv\"\n").unwrap();
    assert_eq!(bench(&["run", "--config", "nodata.toml"], dir.path()).status.code(), Some(1));

    assert_eq!(bench(&["run", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(bench(&["report", "nowhere"], dir.path()).status.code(), Some(1));
}

#[test]
fn model_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "multiplicative");
    let out = bench(
        &["run", "--config", "bench.toml", "--model", "sarima", "--order", "0,1,0", "--seed", "9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let snapshot = fs::read_to_string(dir.path().join("out/config_snapshot.toml")).unwrap();
    assert!(snapshot.contains("models = [\"sarima\"]"));
    assert!(snapshot.contains("seed = 9"));
    assert!(snapshot.contains("auto = false"));
    let header = fs::read_to_string(dir.path().join("out/forecasts.csv")).unwrap();
    assert!(header.starts_with("index,actual,SARIMA\n"));

    let out = bench(
        &["run", "--config", "bench.toml", "--model", "nhits", "--pools", "3,1", "--out", "p"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let snapshot = fs::read_to_string(dir.path().join("p/config_snapshot.toml")).unwrap();
    assert!(snapshot.contains("pools = [3, 1]"));
}

#[test]
fn eda_writes_nine_figures() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), "additive");
    let out = bench(&["eda", "--config", "bench.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let eda = dir.path().join("out/eda");
    let csvs = fs::read_dir(&eda).unwrap().count();
    assert_eq!(csvs, 10);
    let manifest = fs::read_to_string(eda.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().filter(|l| l.contains(",ok,")).count(), 9);
}
