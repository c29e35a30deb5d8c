use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use eqr_core::ev_inference::{
    bias_correct_and_ci, default_subsample_size, extremal_bootstrap_tail_index, regime_recommendation,
    subsampling_ci_qr_coefficients, DesignKind, Regime, Scaling, SubsampleConfig,
};
use eqr_core::extrapolation::{extrapolate_qr, ExtrapolationSpec, ExtrapolationVariant};
use eqr_core::qr_core::{fit_qr, fit_qr_process, powell_covariance, Dataset};
use eqr_core::rng::derive_seed;
use eqr_core::tail_index::{
    asymptotic_sd, fit_tail_model, hill_regression, select_tau_tilde, two_sided_critical_value, HillForm, TailEstimator,
    TailSide,
};

use crate::config::{ExtrapolationMethod, ReportConfig};
use crate::design::build_design;
use crate::error::{CliError, CliResult, StageExt};
use crate::ingest::ingest_csv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub tau: f64,
    pub variable: String,
    pub estimate: f64,
    /// Median-bias-corrected estimate from extremal subsampling.
    pub corrected: f64,
    pub extremal_lower: f64,
    pub extremal_upper: f64,
    pub normal_lower: f64,
    pub normal_upper: f64,
    /// Powell kernel standard error.
    pub std_error: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillRow {
    pub tau: f64,
    pub xi_raw: f64,
    pub xi_corrected: f64,
    pub lower: f64,
    pub upper: f64,
    pub asymptotic_se: f64,
}

/// Extrapolated coefficient vectors keyed by target index, next to the
/// direct QR estimate at the first target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationTable {
    pub variables: Vec<String>,
    pub tau_anchor: f64,
    pub xi_hat: f64,
    pub qr_tau: Option<f64>,
    pub qr_estimate: Vec<f64>,
    pub taus: Vec<f64>,
    /// `extrapolated[i][j]`: coefficient `j` at `taus[i]`.
    pub extrapolated: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSeries {
    pub dates: Vec<String>,
    pub response: Vec<f64>,
    pub qr: Vec<f64>,
    /// `extrapolated[i][t]`: fitted quantile at `taus[i]` for row `t`.
    pub extrapolated: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: ReportConfig,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    pub columns: Vec<String>,
    pub seed: u64,
    #[serde(rename = "S")]
    pub s: usize,
    pub b: usize,
    pub p: f64,
    pub versions: BTreeMap<String, String>,
    /// Failed replications per stage and index.
    pub skipped_draws: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub coefficients: Vec<CoefficientRow>,
    pub hill: Vec<HillRow>,
    pub extrapolation: ExtrapolationTable,
    pub fitted: FittedSeries,
    pub meta: RunMeta,
}

// Seed streams of the stochastic stages.
const STAGE_COEFFICIENTS: u64 = 1;
const STAGE_HILL: u64 = 2;

fn stage_seed(seed: u64, stage: u64, i: usize) -> u64 {
    derive_seed(derive_seed(seed, stage), i as u64)
}

fn tau_key(stage: &str, tau: f64) -> String {
    format!("{stage}@{tau}")
}

/// Ingests the data and builds the design.
pub fn load_dataset(cfg: &ReportConfig) -> CliResult<Dataset> {
    cfg.validate()?;
    let table = ingest_csv(&cfg.input_path, cfg)?;
    let data = build_design(&table, cfg)?;
    log::info!("design: T = {}, d = {}", data.n(), data.dim());
    Ok(data)
}

fn subsample_config(cfg: &ReportConfig, n: usize, seed: u64) -> CliResult<SubsampleConfig> {
    let b = cfg.subsample_size.unwrap_or_else(|| default_subsample_size(n));
    if b >= n {
        return Err(CliError::Config(format!("subsample size {b} must be below T = {n}")));
    }
    Ok(SubsampleConfig {
        b,
        s: cfg.subsamples,
        dependent: cfg.dependent,
        seed,
        p: cfg.spacing_p,
        ..SubsampleConfig::new(n, seed)
    })
}

/// QR estimates with extremal (bias-corrected) and normal intervals over `tau_grid`.
pub fn coefficient_rows(
    data: &Dataset,
    cfg: &ReportConfig,
    skipped: &mut BTreeMap<String, usize>,
) -> CliResult<Vec<CoefficientRow>> {
    let fits = fit_qr_process(data, &cfg.tau_grid).stage("fit")?;
    let z = two_sided_critical_value(cfg.level);
    let mut rows = Vec::new();
    for (i, fit) in fits.iter().enumerate() {
        let tau = fit.tau;
        let sub = subsample_config(cfg, data.n(), stage_seed(cfg.seed, STAGE_COEFFICIENTS, i))?;
        let ext = subsampling_ci_qr_coefficients(data, tau, &sub, cfg.level)
            .map_err(|e| e.at_tau(tau))
            .stage("extremal inference")?;
        skipped.insert(tau_key("coefficients", tau), ext[0].skipped);
        let cov = powell_covariance(data, fit).map_err(|e| e.at_tau(tau)).stage("normal inference")?;
        let regime = regime_recommendation(tau, data.n(), data.dim(), DesignKind::Continuous);
        for (j, name) in data.column_names().iter().enumerate() {
            let se = cov[(j, j)].max(0.0).sqrt();
            rows.push(CoefficientRow {
                tau,
                variable: name.clone(),
                estimate: fit.beta[j],
                corrected: ext[j].point,
                extremal_lower: ext[j].lower,
                extremal_upper: ext[j].upper,
                normal_lower: fit.beta[j] - z * se,
                normal_upper: fit.beta[j] + z * se,
                std_error: se,
                regime,
            });
        }
    }
    Ok(rows)
}

/// Regression Hill estimates with bootstrap bias correction and intervals.
pub fn hill_rows(data: &Dataset, cfg: &ReportConfig, skipped: &mut BTreeMap<String, usize>) -> CliResult<Vec<HillRow>> {
    let mut rows = Vec::new();
    for (i, &tau) in cfg.tail_taus.iter().enumerate() {
        let model = fit_tail_model(data, tau, TailEstimator::Hill, TailSide::Lower, HillForm::Moment)
            .map_err(|e| e.at_tau(tau))
            .stage("tail index")?;
        let draws = extremal_bootstrap_tail_index(
            data,
            tau,
            model.xi,
            &model.gamma,
            cfg.subsamples,
            stage_seed(cfg.seed, STAGE_HILL, i),
            HillForm::Moment,
        )
        .map_err(|e| e.at_tau(tau))
        .stage("tail-index bootstrap")?;
        skipped.insert(tau_key("hill", tau), draws.skipped);
        let rate = (tau * data.n() as f64).sqrt();
        let r = bias_correct_and_ci(model.xi, &draws, Scaling::Rate { value: rate }, cfg.level)
            .stage("tail-index bootstrap")?;
        rows.push(HillRow {
            tau,
            xi_raw: model.xi,
            xi_corrected: r.point,
            lower: r.lower,
            upper: r.upper,
            asymptotic_se: asymptotic_sd(model.xi, TailEstimator::Hill) / rate,
        });
    }
    Ok(rows)
}

/// Extrapolated coefficients and the fitted quantile series.
pub fn extrapolation_outputs(data: &Dataset, cfg: &ReportConfig) -> CliResult<(ExtrapolationTable, FittedSeries)> {
    let variant = match cfg.extrapolation_method {
        ExtrapolationMethod::DekkersDeHaan => ExtrapolationVariant::DekkersDeHaan,
        ExtrapolationMethod::HeEtAl => ExtrapolationVariant::HeEtAl,
    };
    let max_target = cfg.extrapolation_taus.iter().copied().fold(0.0, f64::max);
    let anchor = cfg
        .extrapolation_anchor
        .unwrap_or_else(|| select_tau_tilde(max_target, data.n(), data.dim()));
    let fit_anchor = fit_qr(data, anchor).stage("extrapolation")?;
    let fit_second = fit_qr(data, variant.second_tau(anchor)).stage("extrapolation")?;
    let xi_hat = hill_regression(data, &fit_anchor).stage("extrapolation")?;
    let mut extrapolated = Vec::new();
    for &tau in &cfg.extrapolation_taus {
        let spec = ExtrapolationSpec {
            tau_target: tau,
            tau_anchor: anchor,
            xi_hat,
            variant,
        };
        extrapolated.push(extrapolate_qr(&fit_anchor, &fit_second, &spec).map_err(|e| e.at_tau(tau)).stage("extrapolation")?);
    }
    let qr_tau = cfg.extrapolation_taus.first().copied();
    let qr_estimate = match qr_tau {
        Some(t) => fit_qr(data, t).map_err(|e| e.at_tau(t)).stage("extrapolation")?.beta,
        None => Vec::new(),
    };
    let fitted = FittedSeries {
        dates: data.time_index().map(|d| d.to_vec()).unwrap_or_default(),
        response: data.y().to_vec(),
        qr: if qr_estimate.is_empty() { Vec::new() } else { data.fitted(&qr_estimate) },
        extrapolated: extrapolated.iter().map(|b| data.fitted(b)).collect(),
    };
    let table = ExtrapolationTable {
        variables: data.column_names().to_vec(),
        tau_anchor: anchor,
        xi_hat,
        qr_tau,
        qr_estimate,
        taus: cfg.extrapolation_taus.clone(),
        extrapolated,
    };
    Ok((table, fitted))
}

pub fn run_pipeline(cfg: &ReportConfig) -> CliResult<ReportBundle> {
    let data = load_dataset(cfg)?;
    let mut skipped = BTreeMap::new();
    let coefficients = coefficient_rows(&data, cfg, &mut skipped)?;
    let hill = hill_rows(&data, cfg, &mut skipped)?;
    let (extrapolation, fitted) = extrapolation_outputs(&data, cfg)?;
    let mut versions = BTreeMap::new();
    versions.insert("eqr-core".to_string(), eqr_core::VERSION.to_string());
    versions.insert("eqr-cli".to_string(), env!("CARGO_PKG_VERSION").to_string());
    let meta = RunMeta {
        config: cfg.clone(),
        t: data.n(),
        d: data.dim(),
        columns: data.column_names().to_vec(),
        seed: cfg.seed,
        s: cfg.subsamples,
        b: cfg.subsample_size.unwrap_or_else(|| default_subsample_size(data.n())),
        p: cfg.spacing_p,
        versions,
        skipped_draws: skipped,
    };
    Ok(ReportBundle {
        coefficients,
        hill,
        extrapolation,
        fitted,
        meta,
    })
}
