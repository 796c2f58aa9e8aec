//! Regenerates `data/sample_ohlcv.csv`, the synthetic daily price series used
//! by `configs/sample.toml`.
//!
//! ```text
//! cargo run -p fincast --example make_sample -- data/sample_ohlcv.csv
//! ```

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const DAYS: usize = 1000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/sample_ohlcv.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let shock = Normal::new(0.0f64, 0.6)?;
    let wick = Normal::new(0.0f64, 0.4)?;
    let flow = Normal::new(0.0f64, 0.25)?;

    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"])?;
    let mut date = NaiveDate::from_ymd_opt(2019, 1, 2).expect("valid date");
    let mut noise = 0.0f64;
    let mut prev_close = 100.0f64;
    for t in 0..DAYS {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().expect("in range");
        }
        let tf = t as f64;
        noise = 0.6 * noise + shock.sample(&mut rng);
        let close = 100.0
            + 0.03 * tf
            + 6.0 * (2.0 * PI * tf / 63.0).sin()
            + 1.5 * (2.0 * PI * tf / 5.0 + 0.3).sin()
            + noise;
        let open = prev_close + 0.3 * wick.sample(&mut rng);
        let high = open.max(close) + wick.sample(&mut rng).abs();
        let low = open.min(close) - wick.sample(&mut rng).abs();
        let volume = (1.0e6 * (flow.sample(&mut rng) + 0.1 * (close - prev_close).abs()).exp()).round();
        w.write_record([
            date.to_string(),
            format!("{open:.4}"),
            format!("{high:.4}"),
            format!("{low:.4}"),
            format!("{close:.4}"),
            format!("{close:.4}"),
            format!("{volume}"),
        ])?;
        prev_close = close;
        date = date.succ_opt().expect("in range");
    }
    w.flush()?;
    Ok(())
}
