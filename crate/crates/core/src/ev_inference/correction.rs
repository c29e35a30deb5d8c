use serde::{Deserialize, Serialize};

use super::sample::{InferenceResult, MethodTag, Scaling, StatisticKind, StatisticSample};
use super::scaling::{sn_scaling_marginal_with_m, sn_scaling_regression_with_m};
use super::subsampling::{extremal_subsampling_marginal, extremal_subsampling_qr, shared_multiplier, SubsampleConfig};
use crate::error::{Error, Result};
use crate::qr_core::{powell_covariance, sample_quantile, Dataset, QuantileFit};
use crate::tail_index::{check_level, normal_quantile};

/// Median-bias correction and equal-tailed interval from the draws of a
/// normalized statistic `scaling (estimate - truth)`:
/// `point = raw - c(1/2)/scaling`, endpoints `raw - c(1 - a/2)/scaling` and
/// `raw - c(a/2)/scaling` (ordered, since the scaling may be negative).
pub fn bias_correct_and_ci(raw: f64, sample: &StatisticSample, scaling: Scaling, level: f64) -> Result<InferenceResult> {
    check_level(level)?;
    let a = scaling.value();
    if a == 0.0 || !a.is_finite() {
        return Err(Error::DegenerateSpacing(format!("scaling is {a}")));
    }
    let alpha = 1.0 - level;
    let e1 = raw - sample.quantile(1.0 - alpha / 2.0) / a;
    let e2 = raw - sample.quantile(alpha / 2.0) / a;
    Ok(InferenceResult {
        point: raw - sample.median() / a,
        lower: e1.min(e2),
        upper: e1.max(e2),
        level,
        raw,
        method: MethodTag {
            statistic: sample.statistic,
            origin: sample.origin,
        },
        scaling,
        draws: sample.len(),
        skipped: sample.skipped,
    })
}

/// Normal-approximation interval based on the Powell kernel covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalInterval {
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl NormalInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Normal interval for `psi'beta(tau)`.
pub fn normal_interval(data: &Dataset, fit: &QuantileFit, psi: &[f64], level: f64) -> Result<NormalInterval> {
    check_level(level)?;
    let cov = powell_covariance(data, fit)?;
    let d = psi.len();
    let mut var = 0.0;
    for i in 0..d {
        for j in 0..d {
            var += psi[i] * cov[(i, j)] * psi[j];
        }
    }
    let se = var.max(0.0).sqrt();
    let est = fit.predict(psi);
    let z = normal_quantile(0.5 + level / 2.0);
    Ok(NormalInterval {
        estimate: est,
        std_error: se,
        lower: est - z * se,
        upper: est + z * se,
        level,
    })
}

/// SN extremal-subsampling inference for the marginal `tau`-quantile.
/// Indices above 1/2 are handled on the reflected sample.
pub fn subsampling_ci_marginal(y: &[f64], tau: f64, cfg: &SubsampleConfig, level: f64) -> Result<InferenceResult> {
    if tau > 0.5 {
        let reflected: Vec<f64> = y.iter().map(|v| -v).collect();
        return Ok(subsampling_ci_marginal(&reflected, 1.0 - tau, cfg, level)?.negated());
    }
    let m = shared_multiplier(tau, y.len(), cfg.b, cfg.p, 0);
    let scaling = sn_scaling_marginal_with_m(y, tau, m, cfg.p)?;
    let raw = sample_quantile(y, tau)?;
    let sample = extremal_subsampling_marginal(y, tau, cfg, StatisticKind::SelfNormalized, None)?;
    bias_correct_and_ci(raw, &sample, Scaling::SelfNormalized(scaling), level)
}

/// SN extremal-subsampling inference for `psi'beta(tau)`.
pub fn subsampling_ci_qr(data: &Dataset, tau: f64, psi: &[f64], cfg: &SubsampleConfig, level: f64) -> Result<InferenceResult> {
    if tau > 0.5 {
        let reflected = data.reflect();
        return Ok(subsampling_ci_qr(&reflected, 1.0 - tau, psi, cfg, level)?.negated());
    }
    let m = shared_multiplier(tau, data.n(), cfg.b, cfg.p, data.dim());
    let (scaling, fit, _) = sn_scaling_regression_with_m(data, tau, m, cfg.p)?;
    let raw = fit.predict(psi);
    let sample = extremal_subsampling_qr(data, tau, cfg, StatisticKind::SelfNormalized, None)?.project(psi)?;
    bias_correct_and_ci(raw, &sample, Scaling::SelfNormalized(scaling), level)
}

/// SN extremal-subsampling inference for every coefficient of `beta(tau)`
/// from one set of subsample fits.
pub fn subsampling_ci_qr_coefficients(data: &Dataset, tau: f64, cfg: &SubsampleConfig, level: f64) -> Result<Vec<InferenceResult>> {
    if tau > 0.5 {
        let lower = subsampling_ci_qr_coefficients(&data.reflect(), 1.0 - tau, cfg, level)?;
        return Ok(lower.iter().map(InferenceResult::negated).collect());
    }
    let m = shared_multiplier(tau, data.n(), cfg.b, cfg.p, data.dim());
    let (scaling, fit, _) = sn_scaling_regression_with_m(data, tau, m, cfg.p)?;
    let draws = extremal_subsampling_qr(data, tau, cfg, StatisticKind::SelfNormalized, None)?;
    (0..data.dim())
        .map(|j| {
            let sample = draws.coordinate(j)?;
            bias_correct_and_ci(fit.beta[j], &sample, Scaling::SelfNormalized(scaling.clone()), level)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ev_inference::Origin;

    fn sample(v: Vec<f64>) -> StatisticSample {
        StatisticSample::new(v, StatisticKind::SelfNormalized, Origin::Bootstrap, 0, 0).unwrap()
    }

    #[test]
    fn symmetric_draws_leave_point_unchanged() {
        let s = sample((-50..=50).map(f64::from).collect());
        let r = bias_correct_and_ci(3.0, &s, Scaling::Rate { value: 2.0 }, 0.9).unwrap();
        assert_eq!(r.point, 3.0);
        assert!(r.lower < 3.0 && r.upper > 3.0);
    }

    #[test]
    fn known_sample_arithmetic() {
        let s = sample((1..=100).map(f64::from).collect());
        let r = bias_correct_and_ci(10.0, &s, Scaling::Rate { value: 1.0 }, 0.9).unwrap();
        assert_eq!(r.point, 10.0 - 50.0);
        assert_eq!((r.lower, r.upper), (10.0 - 95.0, 10.0 - 5.0));
        assert!(bias_correct_and_ci(1.0, &s, Scaling::Rate { value: 1.0 }, 1.0).is_err());
        let neg = bias_correct_and_ci(10.0, &s, Scaling::Canonical { a_t: -1.0 }, 0.9).unwrap();
        assert!(neg.lower <= neg.upper);
    }

    #[test]
    fn intervals_nest_in_level() {
        let s = sample((0..500).map(|i| ((i * 7) % 500) as f64 * 0.37 - 20.0 + (i % 3) as f64).collect());
        let mut prev = (f64::INFINITY, f64::NEG_INFINITY);
        for level in [0.5, 0.8, 0.9, 0.95, 0.99] {
            let r = bias_correct_and_ci(0.0, &s, Scaling::Rate { value: 1.3 }, level).unwrap();
            assert!(r.lower <= prev.0 && r.upper >= prev.1);
            assert!(r.lower <= r.point && r.point <= r.upper);
            prev = (r.lower, r.upper);
        }
    }
}
