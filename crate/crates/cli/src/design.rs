use eqr_core::qr_core::Dataset;

use crate::config::ReportConfig;
use crate::error::{CliError, CliResult, StageExt};
use crate::ingest::RawTable;

/// `(max(x, 0), -min(x, 0))`; both parts are nonnegative and never `-0`.
pub fn sign_split(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x, 0.0)
    } else if x < 0.0 {
        (0.0, -x)
    } else {
        (0.0, 0.0)
    }
}

/// Design `X_t = (1, x1+, x1-, ..., xk+, xk-)` with covariates taken at `t - lag`.
/// With `lag = 1` the first row is dropped.
pub fn build_design(table: &RawTable, cfg: &ReportConfig) -> CliResult<Dataset> {
    let lag = cfg.lag as usize;
    let n = table.len();
    if n <= lag {
        return Err(CliError::Data(format!("{n} rows leave no observations after lag {lag}")));
    }
    let response = table
        .column(&cfg.response_column)
        .ok_or_else(|| CliError::Config(format!("column '{}' missing", cfg.response_column)))?;
    let covs = cfg
        .covariate_columns
        .iter()
        .map(|c| table.column(c).ok_or_else(|| CliError::Config(format!("column '{c}' missing"))))
        .collect::<CliResult<Vec<&[f64]>>>()?;
    let prefix = if lag == 1 { "lag_" } else { "" };
    let mut names = vec!["intercept".to_string()];
    for c in &cfg.covariate_columns {
        names.push(format!("{prefix}{c}_pos"));
        names.push(format!("{prefix}{c}_neg"));
    }
    let d = names.len();
    let mut x = Vec::with_capacity((n - lag) * d);
    for t in lag..n {
        x.push(1.0);
        for col in &covs {
            let (p, m) = sign_split(col[t - lag]);
            x.push(p);
            x.push(m);
        }
    }
    let y = response[lag..].to_vec();
    let dates = table.dates[lag..].iter().map(|d| d.format("%Y-%m-%d").to_string()).collect();
    Dataset::from_row_major(y, x, d, names)
        .and_then(|data| data.with_time_index(dates))
        .stage("design")
}
