//! Extremal bootstrap: parametric resampling from a generalized-EV variable
//! with the estimated EV index (and, for regressions, scale vector).

use rand::Rng;
use rand_distr::Exp1;

use super::sample::{Origin, RegressionDraws, StatisticKind, StatisticSample};
use super::scaling::{sn_scaling_from_fits, spacing_multiplier};
use super::{replicate, require_draws};
use crate::error::{Error, Result};
use crate::qr_core::{fit_qr, sample_quantile, Dataset};
use crate::rng::ReplicationRng;
use crate::series::gev_transform_log;
use crate::tail_index::{hill_regression_with, HillForm};

/// `(e^-xi - 1)/(-xi)`, with the `xi -> 0` limit `ln e`.
pub fn gev_transform(e: f64, xi: f64) -> f64 {
    gev_transform_log(e.ln(), xi)
}

/// Quantile function of `gev_transform(E, xi)` for standard exponential `E`.
pub fn gev_quantile(tau: f64, xi: f64) -> f64 {
    gev_transform(-(-tau).ln_1p(), xi)
}

fn check_common(tau: f64, n: usize, s: usize, xi: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain(format!("tau must lie in (0, 1), got {tau}")));
    }
    if n == 0 || !xi.is_finite() {
        return Err(Error::domain("bootstrap needs T >= 1 and a finite EV index"));
    }
    if s < 100 {
        log::warn!("S = {s} < 100 bootstrap replications");
    }
    Ok(())
}

fn exponential_sample(rng: &mut ReplicationRng, n: usize, xi: f64) -> Vec<f64> {
    (0..n).map(|_| gev_transform(rng.sample(Exp1), xi)).collect()
}

/// Draws of the SN statistic `A*(Q*(tau) - Q_{Y*}(tau))` over `s` samples of
/// size `n` from the generalized-EV variable. The factor `A*` is recomputed
/// in each bootstrap sample with `m = p/(tau n) + 1`.
pub fn extremal_bootstrap_marginal(xi_hat: f64, tau: f64, n: usize, s: usize, seed: u64, p: f64) -> Result<StatisticSample> {
    check_common(tau, n, s, xi_hat)?;
    let k = tau * n as f64;
    let m = spacing_multiplier(p, 0, k);
    if m * tau >= 1.0 {
        return Err(Error::domain("m tau >= 1; use a smaller spacing parameter"));
    }
    let truth = gev_quantile(tau, xi_hat);
    let (draws, skipped) = replicate(seed, s, |rng| {
        let y = exponential_sample(rng, n, xi_hat);
        let q = sample_quantile(&y, tau)?;
        let den = sample_quantile(&y, m * tau)? - q;
        if den <= 0.0 {
            return Err(Error::DegenerateSpacing("bootstrap spacing is zero".into()));
        }
        Ok(k.sqrt() / den * (q - truth))
    });
    require_draws(draws.len(), skipped)?;
    Ok(StatisticSample::new(draws, StatisticKind::SelfNormalized, Origin::Bootstrap, seed, skipped)?.with_multiplier(Some(m)))
}

/// Scales `X_t' gamma`, floored at `1e-6` times their median when the
/// estimated model puts nonpositive scale on some rows.
fn bootstrap_scales(data: &Dataset, gamma: &[f64]) -> Result<Vec<f64>> {
    if gamma.len() != data.dim() {
        return Err(Error::domain("scale vector length does not match the design"));
    }
    let mut scales = data.fitted(gamma);
    let bad = scales.iter().filter(|&&v| v <= 0.0).count();
    if bad > 0 {
        let mut sorted = scales.clone();
        sorted.sort_by(f64::total_cmp);
        let med = sorted[sorted.len() / 2];
        if med <= 0.0 {
            return Err(Error::Applicability("median of X'gamma is not positive".into()));
        }
        let floor = 1e-6 * med;
        log::warn!("{bad} rows with X'gamma <= 0 clipped to {floor:e}");
        scales.iter_mut().for_each(|v| *v = v.max(floor));
    }
    Ok(scales)
}

/// QR extremal bootstrap: `Y*_t = gev_transform(E_t, xi) X_t'gamma` with the
/// design held fixed, giving draws of `A*(beta*_hat(tau) - beta*(tau))`.
/// Replications whose solver or spacing fails are skipped and counted.
pub fn extremal_bootstrap_qr(
    data: &Dataset,
    tau: f64,
    xi_hat: f64,
    gamma_hat: &[f64],
    s: usize,
    seed: u64,
    p: f64,
) -> Result<RegressionDraws> {
    let n = data.n();
    check_common(tau, n, s, xi_hat)?;
    let k = tau * n as f64;
    let m = spacing_multiplier(p, data.dim(), k);
    if m * tau >= 1.0 {
        return Err(Error::domain("m tau >= 1; use a smaller spacing parameter"));
    }
    let scales = bootstrap_scales(data, gamma_hat)?;
    let q = gev_quantile(tau, xi_hat);
    let truth: Vec<f64> = gamma_hat.iter().map(|g| g * q).collect();
    let xbar = data.xbar();
    let (draws, skipped) = replicate(seed, s, |rng| {
        let e = exponential_sample(rng, n, xi_hat);
        let y: Vec<f64> = e.iter().zip(&scales).map(|(a, b)| a * b).collect();
        let star = data.with_response(y)?;
        let lo = fit_qr(&star, tau)?;
        let hi = fit_qr(&star, m * tau)?;
        let a = sn_scaling_from_fits(&lo, &hi, &xbar, k, m, p)?.value;
        Ok(lo.beta.iter().zip(&truth).map(|(b, t)| a * (b - t)).collect::<Vec<f64>>())
    });
    require_draws(draws.len(), skipped)?;
    Ok(RegressionDraws {
        draws,
        statistic: StatisticKind::SelfNormalized,
        origin: Origin::Bootstrap,
        seed,
        skipped,
        spacing_multiplier: Some(m),
    })
}

/// Extremal bootstrap for the regression Hill estimator: draws of
/// `sqrt(tau_tilde T)(xi* - xi_hat)` from the same generator as
/// [`extremal_bootstrap_qr`].
pub fn extremal_bootstrap_tail_index(
    data: &Dataset,
    tau_tilde: f64,
    xi_hat: f64,
    gamma_hat: &[f64],
    s: usize,
    seed: u64,
    form: HillForm,
) -> Result<StatisticSample> {
    let n = data.n();
    check_common(tau_tilde, n, s, xi_hat)?;
    let rate = (tau_tilde * n as f64).sqrt();
    let scales = bootstrap_scales(data, gamma_hat)?;
    let (draws, skipped) = replicate(seed, s, |rng| {
        let e = exponential_sample(rng, n, xi_hat);
        let y: Vec<f64> = e.iter().zip(&scales).map(|(a, b)| a * b).collect();
        let star = data.with_response(y)?;
        let fit = fit_qr(&star, tau_tilde)?;
        Ok(rate * (hill_regression_with(&star, &fit, form)? - xi_hat))
    });
    require_draws(draws.len(), skipped)?;
    StatisticSample::new(draws, StatisticKind::SelfNormalized, Origin::Bootstrap, seed, skipped)
}
