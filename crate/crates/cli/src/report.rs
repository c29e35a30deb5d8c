//! CSV and JSON report files. Floating-point fields use 17 significant
//! digits so that values round-trip exactly.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::pipeline::{CoefficientRow, ExtrapolationTable, FittedSeries, HillRow, ReportBundle};

pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const HILL_FILE: &str = "hill_table.csv";
pub const EXTRAPOLATION_FILE: &str = "extrapolation_table.csv";
pub const FITTED_FILE: &str = "fitted_quantiles.csv";
pub const META_FILE: &str = "run_meta.json";

/// `{:.16e}`: 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn regime_label(r: eqr_core::ev_inference::Regime) -> &'static str {
    use eqr_core::ev_inference::Regime;
    match r {
        Regime::ExtremeValue => "EV",
        Regime::Normal => "normal",
        Regime::Both => "both",
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write report: {e}"))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

pub fn write_coefficients<W: Write>(out: W, rows: &[CoefficientRow]) -> CliResult<()> {
    let mut w = writer(out);
    w.write_record([
        "tau",
        "variable",
        "estimate",
        "corrected",
        "extremal_lower",
        "extremal_upper",
        "normal_lower",
        "normal_upper",
        "std_error",
        "regime",
    ])
    .map_err(io_err)?;
    for r in rows {
        w.write_record([
            fmt_num(r.tau),
            r.variable.clone(),
            fmt_num(r.estimate),
            fmt_num(r.corrected),
            fmt_num(r.extremal_lower),
            fmt_num(r.extremal_upper),
            fmt_num(r.normal_lower),
            fmt_num(r.normal_upper),
            fmt_num(r.std_error),
            regime_label(r.regime).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_hill<W: Write>(out: W, rows: &[HillRow]) -> CliResult<()> {
    let mut w = writer(out);
    w.write_record(["tau", "xi_raw", "xi_corrected", "lower", "upper", "asymptotic_se"])
        .map_err(io_err)?;
    for r in rows {
        w.write_record([r.tau, r.xi_raw, r.xi_corrected, r.lower, r.upper, r.asymptotic_se].map(fmt_num))
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Rows are variables; columns `variable, qr_estimate, extrap_{tau}...`.
pub fn write_extrapolation<W: Write>(out: W, t: &ExtrapolationTable) -> CliResult<()> {
    let mut w = writer(out);
    let mut header = vec!["variable".to_string(), "qr_estimate".to_string()];
    header.extend(t.taus.iter().map(|tau| format!("extrap_{tau}")));
    w.write_record(&header).map_err(io_err)?;
    for (j, name) in t.variables.iter().enumerate() {
        let mut rec = vec![name.clone(), t.qr_estimate.get(j).map_or(String::new(), |v| fmt_num(*v))];
        rec.extend(t.extrapolated.iter().map(|b| fmt_num(b[j])));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_fitted<W: Write>(out: W, f: &FittedSeries, t: &ExtrapolationTable) -> CliResult<()> {
    let mut w = writer(out);
    let mut header = vec!["date".to_string(), "response".to_string()];
    if let Some(q) = t.qr_tau.filter(|_| !f.qr.is_empty()) {
        header.push(format!("qr_{q}"));
    }
    header.extend(t.taus.iter().map(|tau| format!("extrap_{tau}")));
    w.write_record(&header).map_err(io_err)?;
    for i in 0..f.response.len() {
        let mut rec = vec![f.dates.get(i).cloned().unwrap_or_default(), fmt_num(f.response[i])];
        if !f.qr.is_empty() {
            rec.push(fmt_num(f.qr[i]));
        }
        rec.extend(f.extrapolated.iter().map(|s| fmt_num(s[i])));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes the five report files into `dir`, creating it if needed.
pub fn emit_report(bundle: &ReportBundle, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let create = |name: &str| std::fs::File::create(dir.join(name)).map(std::io::BufWriter::new).map_err(io_err);
    write_coefficients(create(COEFFICIENTS_FILE)?, &bundle.coefficients)?;
    write_hill(create(HILL_FILE)?, &bundle.hill)?;
    write_extrapolation(create(EXTRAPOLATION_FILE)?, &bundle.extrapolation)?;
    write_fitted(create(FITTED_FILE)?, &bundle.fitted, &bundle.extrapolation)?;
    let mut meta = serde_json::to_string_pretty(&bundle.meta).map_err(io_err)?;
    meta.push('\n');
    std::fs::write(dir.join(META_FILE), meta).map_err(io_err)
}
