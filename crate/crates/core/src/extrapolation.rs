//! Extrapolation of intermediate quantiles to very extreme ones through the
//! Pareto-type tail relation `Q(tau m)/Q(tau) ~ m^-xi`.
//!
//! Two variants share the anchor `tau_tilde`: Dekkers-de Haan uses the
//! spacing to `2 tau_tilde`, He et al. the spacing to `tau_tilde / 2`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ev_inference::{
    bias_correct_and_ci, replicate, require_draws, shared_multiplier, sn_scaling_from_fits, subsample_tau,
    InferenceResult, Origin, Scaling, StatisticKind, StatisticSample, SubsampleConfig,
};
use crate::qr_core::{fit_qr, Dataset, QuantileFit};
use crate::rng::replication_rng;
use crate::series::power_ratio;
use crate::tail_index::{hill_regression, pickands_regression, TailEstimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtrapolationVariant {
    DekkersDeHaan,
    HeEtAl,
}

impl ExtrapolationVariant {
    /// Index of the second quantile used for the spacing.
    pub fn second_tau(self, tau_anchor: f64) -> f64 {
        match self {
            ExtrapolationVariant::DekkersDeHaan => 2.0 * tau_anchor,
            ExtrapolationVariant::HeEtAl => tau_anchor / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSpec {
    pub tau_target: f64,
    pub tau_anchor: f64,
    pub xi_hat: f64,
    pub variant: ExtrapolationVariant,
}

impl ExtrapolationSpec {
    fn check(&self) -> Result<()> {
        if !(self.tau_target > 0.0 && self.tau_target <= self.tau_anchor) {
            return Err(Error::domain(format!(
                "target index {} must lie in (0, anchor {}]",
                self.tau_target, self.tau_anchor
            )));
        }
        if self.variant.second_tau(self.tau_anchor) >= 1.0 || !self.xi_hat.is_finite() {
            return Err(Error::domain("anchor too large or EV index not finite"));
        }
        Ok(())
    }

    /// Multiplier applied to the spacing `Q(second) - Q(anchor)`.
    pub fn factor(&self) -> f64 {
        extrapolation_factor(self.tau_target / self.tau_anchor, self.xi_hat, self.variant)
    }
}

/// `((ratio)^-xi - 1) / (c^-xi - 1)` with `c = 2` (Dekkers-de Haan) or
/// `c = 1/2` (He et al.); tends to `ln(ratio)/ln(c)` as `xi -> 0`.
pub(crate) fn extrapolation_factor(ratio: f64, xi: f64, variant: ExtrapolationVariant) -> f64 {
    let c = match variant {
        ExtrapolationVariant::DekkersDeHaan => 2.0,
        ExtrapolationVariant::HeEtAl => 0.5,
    };
    power_ratio(ratio, c, xi)
}

/// Extrapolated quantile `Q(anchor) + factor (Q(second) - Q(anchor))`.
pub fn extrapolate_marginal(q_anchor: f64, q_second: f64, spec: &ExtrapolationSpec) -> Result<f64> {
    spec.check()?;
    Ok(q_anchor + spec.factor() * (q_second - q_anchor))
}

/// Coefficient-wise extrapolation of quantile-regression fits.
pub fn extrapolate_qr(fit_anchor: &QuantileFit, fit_second: &QuantileFit, spec: &ExtrapolationSpec) -> Result<Vec<f64>> {
    spec.check()?;
    if fit_anchor.beta.len() != fit_second.beta.len() {
        return Err(Error::domain("fits have different dimensions"));
    }
    let f = spec.factor();
    Ok(fit_anchor
        .beta
        .iter()
        .zip(&fit_second.beta)
        .map(|(a, s)| a + f * (s - a))
        .collect())
}

/// Extrapolated coefficients together with the EV-index estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationEstimate {
    pub tau_target: f64,
    pub tau_anchor: f64,
    pub xi_hat: f64,
    pub beta: Vec<f64>,
}

fn estimate_xi(data: &Dataset, anchor: &QuantileFit, estimator: TailEstimator) -> Result<f64> {
    match estimator {
        TailEstimator::Hill => hill_regression(data, anchor),
        TailEstimator::Pickands => {
            let f2 = fit_qr(data, 2.0 * anchor.tau)?;
            let f4 = fit_qr(data, 4.0 * anchor.tau)?;
            pickands_regression([anchor, &f2, &f4], &data.xbar())
        }
    }
}

struct AnchorFits {
    anchor: QuantileFit,
    second: QuantileFit,
    xi: f64,
}

fn anchor_fits(data: &Dataset, tau_anchor: f64, variant: ExtrapolationVariant, estimator: TailEstimator) -> Result<AnchorFits> {
    let anchor = fit_qr(data, tau_anchor)?;
    let second = fit_qr(data, variant.second_tau(tau_anchor))?;
    let xi = estimate_xi(data, &anchor, estimator)?;
    Ok(AnchorFits { anchor, second, xi })
}

fn extrapolate_with(fits: &AnchorFits, ratio: f64, variant: ExtrapolationVariant) -> Vec<f64> {
    let f = extrapolation_factor(ratio, fits.xi, variant);
    fits.anchor
        .beta
        .iter()
        .zip(&fits.second.beta)
        .map(|(a, s)| a + f * (s - a))
        .collect()
}

/// Fits, estimates the EV index at the anchor, and extrapolates.
pub fn extrapolation_estimate(
    data: &Dataset,
    tau_target: f64,
    tau_anchor: f64,
    variant: ExtrapolationVariant,
    estimator: TailEstimator,
) -> Result<ExtrapolationEstimate> {
    let fits = anchor_fits(data, tau_anchor, variant, estimator)?;
    let spec = ExtrapolationSpec {
        tau_target,
        tau_anchor,
        xi_hat: fits.xi,
        variant,
    };
    let beta = extrapolate_qr(&fits.anchor, &fits.second, &spec)?;
    Ok(ExtrapolationEstimate {
        tau_target,
        tau_anchor,
        xi_hat: fits.xi,
        beta,
    })
}

/// Draws of the limit of `(Q_tilde(tau) - Q(tau)) / (Q(anchor) - Q(2 anchor))`
/// for the Dekkers-de Haan estimator:
/// `((kt/k)^xi - 2^-xi)/(1 - 2^-xi) + (1 - (G/k)^xi)/(exp(xi E) - 1)` with
/// `G ~ Gamma(2 kt + 1)` and `E = sum_{j=kt+1}^{2kt} Z_j / j` independent.
/// The harmonic mixture uses `kt` rounded to the nearest integer.
pub fn extrapolation_limit_simulate(xi: f64, k: f64, k_tilde: f64, s: usize, seed: u64) -> Result<StatisticSample> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::Applicability("extrapolation limit is not defined at xi = 0".into()));
    }
    if !(k > 0.0 && k_tilde > k) {
        return Err(Error::domain(format!("need 0 < k < k_tilde, got k = {k}, k_tilde = {k_tilde}")));
    }
    let gamma = Gamma::new(2.0 * k_tilde + 1.0, 1.0).map_err(|e| Error::domain(e.to_string()))?;
    let kt = k_tilde.round().max(1.0) as usize;
    let head = (xi * (k_tilde / k).ln()).exp();
    let two = (-xi * std::f64::consts::LN_2).exp();
    let first = (head - two) / (1.0 - two);
    let draws: Vec<f64> = (0..s)
        .map(|i| {
            let mut rng = replication_rng(seed, i as u64);
            let g: f64 = gamma.sample(&mut rng);
            let e: f64 = (kt + 1..=2 * kt).map(|j| rng.sample::<f64, _>(Exp1) / j as f64).sum();
            first + (1.0 - (xi * (g / k).ln()).exp()) / (xi * e).exp_m1()
        })
        .collect();
    StatisticSample::new(draws, StatisticKind::SelfNormalized, Origin::Analytical, seed, 0)
}

/// Subsampling interval for `psi'beta(tau_target)` based on the extrapolation
/// estimator.
///
/// The statistic is `A (psi'beta_tilde(tau) - psi'beta(tau))` with
/// `A = sqrt(anchor T)/xbar'(beta(m anchor) - beta(anchor))`. In each
/// subsample the anchor moves to `anchor_b` (subsample index rule), the
/// target to `anchor_b tau/anchor`, the EV index is re-estimated at
/// `anchor_b`, and the subsample extrapolation is recentered at the
/// full-sample extrapolation to the same target.
pub fn extrapolation_ci_subsampling(
    data: &Dataset,
    spec: &ExtrapolationSpec,
    estimator: TailEstimator,
    cfg: &SubsampleConfig,
    psi: &[f64],
    level: f64,
) -> Result<InferenceResult> {
    spec.check()?;
    let n = data.n();
    let d = data.dim();
    cfg.check(n)?;
    let variant = spec.variant;
    let ratio = spec.tau_target / spec.tau_anchor;
    let anchor_b = subsample_tau(spec.tau_anchor, n, cfg.b);
    let k_b = anchor_b * cfg.b as f64;
    let m = shared_multiplier(spec.tau_anchor, n, cfg.b, cfg.p, d);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let full = AnchorFits {
        anchor: fit_qr(data, spec.tau_anchor)?,
        second: fit_qr(data, variant.second_tau(spec.tau_anchor))?,
        xi: spec.xi_hat,
    };
    let raw = dot(psi, &extrapolate_with(&full, ratio, variant));
    let hi = fit_qr(data, m * spec.tau_anchor)?;
    let xbar = data.xbar();
    let scaling = sn_scaling_from_fits(&full.anchor, &hi, &xbar, spec.tau_anchor * n as f64, m, cfg.p)?;
    let center = dot(psi, &extrapolate_with(&full, ratio * anchor_b / spec.tau_anchor, variant));

    let (draws, skipped) = replicate(cfg.seed, cfg.s, |rng| {
        let sub = data.subset(&cfg.indices(rng, n))?;
        let fits = anchor_fits(&sub, anchor_b, variant, estimator)?;
        let hi = fit_qr(&sub, m * anchor_b)?;
        let a = sn_scaling_from_fits(&fits.anchor, &hi, &sub.xbar(), k_b, m, cfg.p)?.value;
        Ok(a * (dot(psi, &extrapolate_with(&fits, ratio, variant)) - center))
    });
    require_draws(draws.len(), skipped)?;
    let sample = StatisticSample::new(draws, StatisticKind::SelfNormalized, Origin::Subsampling, cfg.seed, skipped)?;
    bias_correct_and_ci(raw, &sample, Scaling::SelfNormalized(scaling), level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_q(tau: f64, xi: f64) -> f64 {
        if xi > 0.0 {
            -tau.powf(-xi)
        } else {
            tau.powf(-xi)
        }
    }

    #[test]
    fn exact_pareto_example() {
        let spec = ExtrapolationSpec {
            tau_target: 0.01,
            tau_anchor: 0.1,
            xi_hat: 1.0,
            variant: ExtrapolationVariant::DekkersDeHaan,
        };
        assert!((extrapolate_marginal(-10.0, -5.0, &spec).unwrap() + 100.0).abs() < 1e-12);
        let same = ExtrapolationSpec { tau_target: 0.1, ..spec };
        assert_eq!(extrapolate_marginal(-10.0, -5.0, &same).unwrap(), -10.0);
        let bad = ExtrapolationSpec { tau_target: 0.2, ..spec };
        assert!(extrapolate_marginal(-10.0, -5.0, &bad).is_err());
    }

    #[test]
    fn exact_for_both_variants_and_affine_maps() {
        for xi in [-1.0, -0.5, 0.5, 1.0, 2.0] {
            for variant in [ExtrapolationVariant::DekkersDeHaan, ExtrapolationVariant::HeEtAl] {
                let spec = ExtrapolationSpec {
                    tau_target: 0.001,
                    tau_anchor: 0.05,
                    xi_hat: xi,
                    variant,
                };
                let (a, b) = (3.0, 0.25);
                let q = |t: f64| a + b * pareto_q(t, xi);
                let est = extrapolate_marginal(q(0.05), q(variant.second_tau(0.05)), &spec).unwrap();
                let truth = q(0.001);
                assert!((est - truth).abs() < 1e-10 * truth.abs().max(1.0), "{xi} {variant:?}: {est} vs {truth}");
            }
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        let mk = |xi| ExtrapolationSpec {
            tau_target: 0.002,
            tau_anchor: 0.05,
            xi_hat: xi,
            variant: ExtrapolationVariant::DekkersDeHaan,
        };
        let a = extrapolate_marginal(-3.0, -2.0, &mk(1e-7)).unwrap();
        let b = extrapolate_marginal(-3.0, -2.0, &mk(0.0)).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn limit_draw_moments() {
        let s = extrapolation_limit_simulate(0.5, 5.0, 5.0 + 1e-12, 10, 1);
        assert!(s.is_ok());
        assert!(extrapolation_limit_simulate(0.0, 1.0, 5.0, 10, 1).is_err());
        assert!(extrapolation_limit_simulate(0.5, 5.0, 4.0, 10, 1).is_err());
    }
}
