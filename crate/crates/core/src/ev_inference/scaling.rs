use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qr_core::{fit_qr, sample_quantile, Dataset, QuantileFit};

pub const DEFAULT_SPACING_P: f64 = 5.0;

/// Self-normalizing factor `sqrt(k) / spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SNScaling {
    pub value: f64,
    pub m: f64,
    pub p: f64,
    pub k: f64,
    pub denominator: f64,
}

/// Spacing multiplier `m = (extra + p)/k + 1`, where `extra` is 0 for a
/// sample quantile and `d` for a regression with `d` regressors.
pub fn spacing_multiplier(p: f64, extra: usize, k: f64) -> f64 {
    (extra as f64 + p) / k + 1.0
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("spacing parameter must be at least 1, got {p}")))
    }
}

fn check_upper(m: f64, tau: f64) -> Result<()> {
    if m * tau >= 1.0 {
        return Err(Error::domain(format!(
            "m tau = {:.4} >= 1; use a smaller spacing parameter",
            m * tau
        )));
    }
    Ok(())
}

pub(crate) fn finish(k: f64, m: f64, p: f64, denominator: f64) -> Result<SNScaling> {
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::DegenerateSpacing(format!(
            "self-normalizing spacing is {denominator}"
        )));
    }
    Ok(SNScaling {
        value: k.sqrt() / denominator,
        m,
        p,
        k,
        denominator,
    })
}

/// `A = sqrt(tau T) / (Q(m tau) - Q(tau))` with `m = p/(tau T) + 1`.
pub fn sn_scaling_marginal(y: &[f64], tau: f64, p: f64) -> Result<SNScaling> {
    check_p(p)?;
    let k = tau * y.len() as f64;
    sn_scaling_marginal_with_m(y, tau, spacing_multiplier(p, 0, k), p)
}

/// As [`sn_scaling_marginal`] with an explicit multiplier.
pub fn sn_scaling_marginal_with_m(y: &[f64], tau: f64, m: f64, p: f64) -> Result<SNScaling> {
    let k = tau * y.len() as f64;
    if k < 1.0 {
        log::warn!("tau*T = {k:.3} < 1 in the self-normalizing factor");
    }
    check_upper(m, tau)?;
    let den = sample_quantile(y, m * tau)? - sample_quantile(y, tau)?;
    finish(k, m, p, den)
}

/// Regression factor `sqrt(tau T) / xbar'(beta(m tau) - beta(tau))` with
/// `m = (d + p)/(tau T) + 1`.
pub fn sn_scaling_regression(data: &Dataset, tau: f64, p: f64) -> Result<SNScaling> {
    check_p(p)?;
    let k = tau * data.n() as f64;
    sn_scaling_regression_with_m(data, tau, spacing_multiplier(p, data.dim(), k), p).map(|(s, _, _)| s)
}

/// As [`sn_scaling_regression`] with an explicit multiplier; also returns the
/// fits at `tau` and `m tau`.
pub fn sn_scaling_regression_with_m(
    data: &Dataset,
    tau: f64,
    m: f64,
    p: f64,
) -> Result<(SNScaling, QuantileFit, QuantileFit)> {
    let k = tau * data.n() as f64;
    if k * (m - 1.0) <= data.dim() as f64 {
        log::warn!("k (m - 1) = {:.2} <= d: spacing is not identified", k * (m - 1.0));
    }
    check_upper(m, tau)?;
    let lo = fit_qr(data, tau)?;
    let hi = fit_qr(data, m * tau)?;
    let s = sn_scaling_from_fits(&lo, &hi, &data.xbar(), k, m, p)?;
    Ok((s, lo, hi))
}

pub fn sn_scaling_from_fits(lo: &QuantileFit, hi: &QuantileFit, xbar: &[f64], k: f64, m: f64, p: f64) -> Result<SNScaling> {
    let den: f64 = hi
        .beta
        .iter()
        .zip(&lo.beta)
        .zip(xbar)
        .map(|((h, l), x)| x * (h - l))
        .sum();
    finish(k, m, p, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_example() {
        // T = 50, tau = 0.1: k = 5, m = 2, order statistics 5 and 10.
        let mut y: Vec<f64> = (0..50).map(|i| i as f64).collect();
        y[4] = -10.0;
        y[9] = -5.0;
        for v in &mut y[..4] {
            *v = -20.0;
        }
        for v in &mut y[5..9] {
            *v = -7.0;
        }
        let s = sn_scaling_marginal(&y, 0.1, 5.0).unwrap();
        assert_eq!(s.m, 2.0);
        assert!((s.value - 5f64.sqrt() / 5.0).abs() < 1e-15);
    }

    #[test]
    fn regression_multiplier_and_reduction() {
        assert_eq!(spacing_multiplier(5.0, 7, 12.0), 2.0);
        let y: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64 * 0.1 - 3.0).collect();
        let data = Dataset::intercept_only(y.clone()).unwrap();
        let r = sn_scaling_regression(&data, 0.05, 4.0).unwrap();
        let m = sn_scaling_marginal(&y, 0.05, 5.0).unwrap();
        assert_eq!(r.m, m.m);
        assert!((r.value - m.value).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let y = vec![1.0; 20];
        assert!(matches!(sn_scaling_marginal(&y, 0.25, 5.0), Err(Error::DegenerateSpacing(_))));
        // k = 1.8 puts m tau above 1.
        assert!(sn_scaling_marginal(&[1.0, 2.0, 3.0, 4.0], 0.45, 5.0).is_err());
        let y: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(sn_scaling_marginal(&y, 0.1, 0.5).is_err());
    }
}
