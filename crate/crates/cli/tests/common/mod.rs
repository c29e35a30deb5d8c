#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use eqr_core::mc_lab::Law;
use eqr_core::rng::replication_rng;

/// Daily return series shaped like the C / DJI / DJUSFN panel: a heavy-tailed
/// market factor drives the indices, and the response has a location-scale
/// law whose scale rises after negative lagged returns.
pub fn write_returns_csv(path: &Path, n: usize, seed: u64) {
    let mut rng = replication_rng(seed, 0);
    let t4 = Law::StudentT { nu: 4.0 };
    let t3 = Law::StudentT { nu: 3.0 };
    let mut text = String::from("date,C,DJI,DJUSFN\n");
    let start = chrono::NaiveDate::from_ymd_opt(2009, 1, 2).unwrap();
    let mut prev = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..n {
        let f = 0.008 * t4.sample(&mut rng);
        let dji = 0.8 * f + 0.004 * t4.sample(&mut rng);
        let fin = 1.1 * f + 0.006 * t4.sample(&mut rng);
        let neg = |v: f64| (-v).max(0.0);
        let scale = 0.01 + 0.3 * neg(prev.0) + 0.2 * neg(prev.1) + 0.2 * neg(prev.2);
        let c = scale * t3.sample(&mut rng);
        let date = start + chrono::Days::new(t as u64);
        writeln!(text, "{date},{c:.8},{dji:.8},{fin:.8}").unwrap();
        prev = (c, dji, fin);
    }
    std::fs::write(path, text).unwrap();
}

pub fn write_config(path: &Path, input: &Path, output: &Path, extra: &str) {
    let text = format!(
        "input_path = {input:?}\nresponse_column = \"C\"\ncovariate_columns = [\"C\", \"DJI\", \"DJUSFN\"]\noutput_dir = {output:?}\n{extra}\n"
    );
    std::fs::write(path, text).unwrap();
}
