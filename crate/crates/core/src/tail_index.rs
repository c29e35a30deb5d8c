//! Estimation of the EV index, the regression scale vector, the tail constant
//! `L` and the canonical scaling `A_T = 1/Q_U(1/T)` under the constant-`L`
//! restriction `1/Q_U(tau) = L tau^xi`.
//!
//! Everything here concerns the lower tail; pass reflected data (see
//! [`Dataset::reflect`]) for upper-tail questions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::qr_core::{fit_qr, sample_quantile, Dataset, QuantileFit};
use crate::series::{pow_minus_one, XI_SERIES_THRESHOLD};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailEstimator {
    Pickands,
    Hill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TailSide {
    #[default]
    Lower,
    Upper,
}

/// Form of the Hill estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HillForm {
    /// Mean log-ratio over exceedances, consistent for `xi > 0` with
    /// asymptotic variance `xi^2`.
    #[default]
    Moment,
    /// `-sum ln(Y/threshold) / (tau_tilde * count)`, kept for comparison
    /// only: it is negative on Pareto data and off by the factor `tau_tilde`.
    Literal,
}

/// Fitted tail model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub xi: f64,
    /// Scale vector normalized so that `xbar' gamma = 1`; `[1]` marginally.
    pub gamma: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "A_T")]
    pub a_t: f64,
    pub tau_tilde: f64,
    pub estimator: TailEstimator,
    pub side: TailSide,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexCI {
    pub xi_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub std_error: f64,
}

pub(crate) fn pickands_from_spacings(low: f64, high: f64) -> Result<f64> {
    // low = Q(2t) - Q(t), high = Q(4t) - Q(2t)
    if !(low > 0.0 && high > 0.0) {
        return Err(Error::DegenerateSpacing(format!(
            "Pickands spacings must be positive, got {low:e} and {high:e}"
        )));
    }
    Ok(-(high / low).ln() / LN2)
}

fn check_tau_tilde(tau_tilde: f64, n: usize, factor: f64) -> Result<()> {
    if !(tau_tilde > 0.0 && factor * tau_tilde < 1.0) {
        return Err(Error::domain(format!(
            "threshold index {tau_tilde} must satisfy 0 < {factor} tau_tilde < 1"
        )));
    }
    if factor * tau_tilde * (n as f64) < 1.0 {
        return Err(Error::domain(format!(
            "{factor} tau_tilde T = {:.3} < 1",
            factor * tau_tilde * n as f64
        )));
    }
    Ok(())
}

/// Pickands estimator from sample quantiles at `tau_tilde`, `2 tau_tilde`
/// and `4 tau_tilde`.
pub fn pickands_marginal(y: &[f64], tau_tilde: f64) -> Result<f64> {
    check_tau_tilde(tau_tilde, y.len(), 4.0)?;
    let q1 = sample_quantile(y, tau_tilde)?;
    let q2 = sample_quantile(y, 2.0 * tau_tilde)?;
    let q4 = sample_quantile(y, 4.0 * tau_tilde)?;
    pickands_from_spacings(q2 - q1, q4 - q2)
}

pub(crate) fn hill_from_ratios(logs: impl Iterator<Item = f64>, tau_tilde: f64, form: HillForm) -> Result<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for l in logs {
        sum += l;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Applicability("no observations below the Hill threshold".into()));
    }
    Ok(match form {
        HillForm::Moment => sum / count as f64,
        HillForm::Literal => -sum / (tau_tilde * count as f64),
    })
}

/// Hill estimator (moment form) at the sample `tau_tilde`-quantile.
pub fn hill_marginal(y: &[f64], tau_tilde: f64) -> Result<f64> {
    hill_marginal_with(y, tau_tilde, HillForm::Moment)
}

pub fn hill_marginal_with(y: &[f64], tau_tilde: f64, form: HillForm) -> Result<f64> {
    check_tau_tilde(tau_tilde, y.len(), 1.0)?;
    let q = sample_quantile(y, tau_tilde)?;
    if q >= 0.0 {
        return Err(Error::Applicability(format!(
            "Hill estimator needs a negative threshold, got {q}"
        )));
    }
    hill_from_ratios(y.iter().filter(|&&v| v < q).map(|&v| (v / q).ln()), tau_tilde, form)
}

fn xbar_spacing(a: &QuantileFit, b: &QuantileFit, xbar: &[f64]) -> f64 {
    a.beta
        .iter()
        .zip(&b.beta)
        .zip(xbar)
        .map(|((hi, lo), x)| x * (hi - lo))
        .sum()
}

/// Regression Pickands estimator from fits at `tau_tilde`, `2 tau_tilde`,
/// `4 tau_tilde` and the design mean.
pub fn pickands_regression(fits: [&QuantileFit; 3], xbar: &[f64]) -> Result<f64> {
    let [f1, f2, f4] = fits;
    pickands_from_spacings(xbar_spacing(f2, f1, xbar), xbar_spacing(f4, f2, xbar))
}

/// Regression Hill estimator over the observations below the fitted
/// `tau_tilde`-quantile plane.
pub fn hill_regression(data: &Dataset, fit: &QuantileFit) -> Result<f64> {
    hill_regression_with(data, fit, HillForm::Moment)
}

pub fn hill_regression_with(data: &Dataset, fit: &QuantileFit, form: HillForm) -> Result<f64> {
    let fitted = data.fitted(&fit.beta);
    let mut logs = Vec::new();
    for (t, (&y, &q)) in data.y().iter().zip(&fitted).enumerate() {
        if y < q {
            if q >= 0.0 {
                return Err(Error::Applicability(format!(
                    "fitted threshold {q} at row {t} is nonnegative"
                )));
            }
            logs.push((y / q).ln());
        }
    }
    hill_from_ratios(logs.into_iter(), fit.tau, form)
}

/// `gamma = (beta(2t) - beta(t)) / xbar'(beta(2t) - beta(t))`.
pub fn estimate_gamma(fit_low: &QuantileFit, fit_high: &QuantileFit, xbar: &[f64]) -> Result<Vec<f64>> {
    let s = xbar_spacing(fit_high, fit_low, xbar);
    if s == 0.0 || !s.is_finite() {
        return Err(Error::DegenerateSpacing(format!("xbar spacing is {s}")));
    }
    let mut gamma: Vec<f64> = fit_high.beta.iter().zip(&fit_low.beta).map(|(h, l)| (h - l) / s).collect();
    // Rescale the intercept so that xbar' gamma is 1 up to one rounding
    // (xbar_0 is always 1).
    let rest: f64 = gamma.iter().zip(xbar).skip(1).map(|(g, x)| g * x).sum();
    gamma[0] = 1.0 - rest;
    Ok(gamma)
}

/// Tail constant `L` in `1/Q_U(tau) = L tau^xi` from the spacing
/// `Q(2 tau_tilde) - Q(tau_tilde)`:
/// `L = (2^-xi - 1) tau_tilde^-xi / spacing`.
///
/// `L` carries the reciprocal units of `Y`, so `A_T = L T^-xi` turns
/// quantile errors into unit-free statistics.
pub fn estimate_l(spacing: f64, xi_hat: f64, tau_tilde: f64) -> Result<f64> {
    if spacing == 0.0 || !spacing.is_finite() {
        return Err(Error::DegenerateSpacing(format!("spacing is {spacing}")));
    }
    if !xi_hat.is_finite() || !(tau_tilde > 0.0 && tau_tilde < 1.0) {
        return Err(Error::domain("invalid EV index or threshold"));
    }
    if xi_hat == 0.0 {
        return Err(Error::Applicability(
            "the constant-L restriction degenerates at xi = 0; use self-normalized inference".into(),
        ));
    }
    Ok(pow_minus_one(2.0, xi_hat) * (-xi_hat * tau_tilde.ln()).exp() / spacing)
}

/// `A_T = L T^-xi`.
pub fn estimate_a_t(l_hat: f64, xi_hat: f64, n: usize) -> Result<f64> {
    if !l_hat.is_finite() || !xi_hat.is_finite() || n == 0 {
        return Err(Error::domain("non-finite scaling inputs"));
    }
    Ok(l_hat * (n as f64).powf(-xi_hat))
}

/// Asymptotic standard deviation of `sqrt(tau_tilde T)(xi_hat - xi)`.
pub fn asymptotic_sd(xi: f64, estimator: TailEstimator) -> f64 {
    match estimator {
        TailEstimator::Hill => xi.abs(),
        TailEstimator::Pickands => {
            let l4 = LN2.powi(4);
            let var = if xi.abs() < XI_SERIES_THRESHOLD {
                (3.0 + xi * LN2) / (4.0 * l4)
            } else {
                let num = xi * xi * ((2.0 * xi + 1.0) * LN2).exp() + xi * xi;
                let den = 2.0 * (xi * LN2).exp_m1() * LN2;
                num / (den * den)
            };
            var.sqrt()
        }
    }
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided standard normal critical value `z_{(1 + level)/2}`.
pub fn two_sided_critical_value(level: f64) -> f64 {
    normal_quantile(0.5 + level / 2.0)
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Symmetric normal interval for the EV index with plug-in variance.
pub fn xi_confidence_interval(
    xi_hat: f64,
    estimator: TailEstimator,
    tau_tilde: f64,
    n: usize,
    level: f64,
) -> Result<TailIndexCI> {
    check_level(level)?;
    let k = tau_tilde * n as f64;
    if k < 30.0 {
        log::warn!("tau_tilde*T = {k:.1} < 30: the normal approximation for xi is unreliable");
    }
    let std_error = asymptotic_sd(xi_hat, estimator) / k.sqrt();
    let z = normal_quantile(0.5 + level / 2.0);
    Ok(TailIndexCI {
        xi_hat,
        lower: xi_hat - z * std_error,
        upper: xi_hat + z * std_error,
        level,
        std_error,
    })
}

/// Threshold index nearest to `tau_target` with at least `30 d` expected
/// observations below it.
pub fn select_tau_tilde(tau_target: f64, n: usize, d: usize) -> f64 {
    let floor = 30.0 * d as f64 / n as f64;
    if n >= 30 * d {
        tau_target.max(floor)
    } else {
        log::warn!("T = {n} < 30 d = {}: no threshold satisfies the rule", 30 * d);
        floor.min(0.5)
    }
}

/// Estimates the tail model of `data` at threshold `tau_tilde`.
///
/// Intercept-only data give the marginal estimators. The spacing for `L`
/// and the scale vector use the fits at `tau_tilde` and `2 tau_tilde`.
pub fn fit_tail_model(
    data: &Dataset,
    tau_tilde: f64,
    estimator: TailEstimator,
    side: TailSide,
    hill_form: HillForm,
) -> Result<TailModel> {
    let reflected;
    let data = match side {
        TailSide::Lower => data,
        TailSide::Upper => {
            reflected = data.reflect();
            &reflected
        }
    };
    let n = data.n();
    let factor = if estimator == TailEstimator::Pickands { 4.0 } else { 2.0 };
    check_tau_tilde(tau_tilde, n, factor)?;
    let xbar = data.xbar();
    let f1 = fit_qr(data, tau_tilde)?;
    let f2 = fit_qr(data, 2.0 * tau_tilde)?;
    let xi = match estimator {
        TailEstimator::Pickands => {
            let f4 = fit_qr(data, 4.0 * tau_tilde)?;
            pickands_regression([&f1, &f2, &f4], &xbar)?
        }
        TailEstimator::Hill => hill_regression_with(data, &f1, hill_form)?,
    };
    let gamma = estimate_gamma(&f1, &f2, &xbar)?;
    let l = estimate_l(xbar_spacing(&f2, &f1, &xbar), xi, tau_tilde)?;
    let a_t = estimate_a_t(l, xi, n)?;
    Ok(TailModel {
        xi,
        gamma,
        l,
        a_t,
        tau_tilde,
        estimator,
        side,
        n,
    })
}
