//! CSV ingestion of time-ordered return or price series.

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::config::{InputKind, ReportConfig, ReturnConvention};
use crate::error::{CliError, CliResult};

/// Parsed series: one date per row and the numeric columns the
/// configuration refers to, in first-use order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok().map(|d| d.date()))
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
}

/// Columns used by the configuration: the response, then the covariates.
fn used_columns(cfg: &ReportConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in std::iter::once(&cfg.response_column).chain(&cfg.covariate_columns) {
        if !out.contains(c) {
            out.push(c.clone());
        }
    }
    out
}

/// Reads `path`. Rows are numbered from 1 after the header; empty or
/// non-numeric cells and duplicate or decreasing dates are rejected. Price
/// input is converted to returns, dropping the first row.
pub fn ingest_csv(path: &Path, cfg: &ReportConfig) -> CliResult<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("column '{name}' not found in {}", path.display())))
    };
    let date_ix = find(&cfg.date_column)?;
    let names = used_columns(cfg);
    let ixs = names.iter().map(|n| find(n)).collect::<CliResult<Vec<usize>>>()?;

    let mut dates = Vec::new();
    let mut columns = vec![Vec::new(); names.len()];
    let mut seen = HashSet::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: unparseable record: {e}")))?;
        let raw_date = record.get(date_ix).unwrap_or("");
        let date = parse_date(raw_date)
            .ok_or_else(|| CliError::Data(format!("row {row}, column '{}': invalid date '{raw_date}'", cfg.date_column)))?;
        if !seen.insert(date) {
            return Err(CliError::Data(format!("row {row}: duplicate date {date}")));
        }
        if dates.last().is_some_and(|&last| date < last) {
            return Err(CliError::Data(format!("row {row}: date {date} is earlier than the previous row")));
        }
        dates.push(date);
        for (j, (&ix, name)) in ixs.iter().zip(&names).enumerate() {
            let cell = record.get(ix).unwrap_or("");
            if cell.is_empty() {
                return Err(CliError::Data(format!("row {row}, column '{name}': empty cell")));
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::Data(format!("row {row}, column '{name}': '{cell}' is not a finite number")))?;
            columns[j].push(v);
        }
    }
    let table = RawTable { dates, names, columns };
    match cfg.input_kind {
        InputKind::Returns => Ok(table),
        InputKind::Prices => to_returns(table, cfg.return_convention),
    }
}

/// Period-over-period returns of every column; the first date is dropped.
pub fn to_returns(table: RawTable, convention: ReturnConvention) -> CliResult<RawTable> {
    let mut columns = Vec::with_capacity(table.columns.len());
    for (name, col) in table.names.iter().zip(&table.columns) {
        if let Some(r) = col.iter().position(|&p| p <= 0.0) {
            return Err(CliError::Data(format!("row {}, column '{name}': prices must be positive", r + 1)));
        }
        columns.push(
            col.windows(2)
                .map(|w| match convention {
                    ReturnConvention::Simple => w[1] / w[0] - 1.0,
                    ReturnConvention::Log => (w[1] / w[0]).ln(),
                })
                .collect(),
        );
    }
    Ok(RawTable {
        dates: table.dates.into_iter().skip(1).collect(),
        names: table.names,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn cfg() -> ReportConfig {
        ReportConfig {
            input_path: "unused".into(),
            response_column: "y".into(),
            covariate_columns: vec!["x".into()],
            ..Default::default()
        }
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_well_formed_rows() {
        let f = write("date,y,x,note\n2020-01-01,1.5,2,a\n2020-01-02,-1,3,b\n2020-01-03,0.25,-4,c\n");
        let t = ingest_csv(f.path(), &cfg()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.column("x").unwrap(), &[2.0, 3.0, -4.0]);
    }

    #[test]
    fn blank_cell_names_row_and_column() {
        let f = write("date,y,x\n2020-01-01,1,2\n2020-01-02,,3\n");
        let e = ingest_csv(f.path(), &cfg()).unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("'y'"), "{e}");
    }

    #[test]
    fn rejects_duplicates_missing_columns_and_bad_numbers() {
        let dup = write("date,y,x\n2020-01-01,1,2\n2020-01-01,1,3\n");
        assert!(ingest_csv(dup.path(), &cfg()).unwrap_err().to_string().contains("duplicate"));
        let missing = write("date,y\n2020-01-01,1\n");
        assert_eq!(ingest_csv(missing.path(), &cfg()).unwrap_err().exit_code(), 2);
        let bad = write("date,y,x\n2020-01-01,1,abc\n");
        assert_eq!(ingest_csv(bad.path(), &cfg()).unwrap_err().exit_code(), 3);
        let order = write("date,y,x\n2020-01-02,1,2\n2020-01-01,1,3\n");
        assert!(ingest_csv(order.path(), &cfg()).is_err());
    }

    #[test]
    fn price_conversion() {
        let f = write("date,y,x\n2020-01-01,100,10\n2020-01-02,110,5\n2020-01-03,99,5\n");
        let c = ReportConfig { input_kind: InputKind::Prices, ..cfg() };
        let t = ingest_csv(f.path(), &c).unwrap();
        assert_eq!(t.len(), 2);
        let y = t.column("y").unwrap();
        assert!((y[0] - 0.1).abs() < 1e-15 && (y[1] + 0.1).abs() < 1e-15);
        let l = ingest_csv(f.path(), &ReportConfig { return_convention: ReturnConvention::Log, ..c }).unwrap();
        assert!((l.column("x").unwrap()[0] - 0.5f64.ln()).abs() < 1e-15);
    }
}
