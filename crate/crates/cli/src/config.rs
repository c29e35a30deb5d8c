use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// How the input columns are to be read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Columns already hold returns.
    #[default]
    Returns,
    /// Columns hold prices; returns are computed first.
    Prices,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnConvention {
    /// `p_t / p_{t-1} - 1`.
    #[default]
    Simple,
    /// `ln(p_t / p_{t-1})`.
    Log,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMethod {
    #[default]
    DekkersDeHaan,
    HeEtAl,
}

/// Report configuration, read from TOML and overridden by flags or `EQR_*`
/// environment variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub input_path: PathBuf,
    pub date_column: String,
    pub response_column: String,
    pub covariate_columns: Vec<String>,
    /// 0 for a contemporaneous design, 1 for lagged covariates.
    pub lag: u8,
    pub input_kind: InputKind,
    pub return_convention: ReturnConvention,
    pub tau_grid: Vec<f64>,
    pub tail_taus: Vec<f64>,
    pub extrapolation_taus: Vec<f64>,
    /// Anchor index; chosen by the `30 d` rule when absent.
    pub extrapolation_anchor: Option<f64>,
    pub extrapolation_method: ExtrapolationMethod,
    pub level: f64,
    /// Number of subsamples and bootstrap draws.
    #[serde(rename = "S")]
    pub subsamples: usize,
    /// Subsample size; `floor(50 + sqrt(T))` when absent.
    #[serde(rename = "b")]
    pub subsample_size: Option<usize>,
    #[serde(rename = "p")]
    pub spacing_p: f64,
    /// Contiguous subsample blocks (time series) or random subsets.
    pub dependent: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            input_path: PathBuf::new(),
            date_column: "date".into(),
            response_column: String::new(),
            covariate_columns: Vec::new(),
            lag: 1,
            input_kind: InputKind::Returns,
            return_convention: ReturnConvention::Simple,
            tau_grid: vec![
                0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99,
            ],
            tail_taus: vec![0.01, 0.05, 0.1],
            extrapolation_taus: vec![0.005, 0.001, 0.0001],
            extrapolation_anchor: None,
            extrapolation_method: ExtrapolationMethod::DekkersDeHaan,
            level: 0.9,
            subsamples: 500,
            subsample_size: None,
            spacing_p: 5.0,
            dependent: true,
            seed: 1,
            output_dir: PathBuf::from("eqr_report"),
        }
    }
}

fn check_unit(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} value {v} is outside (0, 1)")))
    }
}

impl ReportConfig {
    pub fn from_toml_str(s: &str) -> CliResult<Self> {
        toml::from_str(s).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.input_path.as_os_str().is_empty() {
            return Err(CliError::Config("input_path is required".into()));
        }
        if self.response_column.is_empty() {
            return Err(CliError::Config("response_column is required".into()));
        }
        if self.lag > 1 {
            return Err(CliError::Config(format!("lag must be 0 or 1, got {}", self.lag)));
        }
        for (name, list) in [
            ("tau_grid", &self.tau_grid),
            ("tail_taus", &self.tail_taus),
            ("extrapolation_taus", &self.extrapolation_taus),
        ] {
            for &t in list.iter() {
                check_unit(name, t)?;
            }
        }
        if self.tau_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("tau_grid must be strictly increasing".into()));
        }
        if let Some(a) = self.extrapolation_anchor {
            check_unit("extrapolation_anchor", a)?;
            if self.extrapolation_taus.iter().any(|&t| t > a) {
                return Err(CliError::Config("extrapolation targets must not exceed the anchor".into()));
            }
        }
        check_unit("level", self.level)?;
        if self.subsamples < 2 {
            return Err(CliError::Config("S must be at least 2".into()));
        }
        if !(self.spacing_p > 0.0) {
            return Err(CliError::Config("spacing parameter p must be positive".into()));
        }
        if self.subsample_size == Some(0) {
            return Err(CliError::Config("subsample size b must be positive".into()));
        }
        Ok(())
    }
}
