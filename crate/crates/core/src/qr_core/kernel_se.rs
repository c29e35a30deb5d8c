//! Powell kernel sandwich covariance for quantile-regression coefficients,
//! used for the normal-approximation comparison intervals.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::dataset::Dataset;
use super::fit::QuantileFit;
use super::quantile::{check_tau, quantile_type7};
use crate::error::{Error, Result};

fn std_normal() -> Normal {
    Normal::standard()
}

/// Hall-Sheather bandwidth on the probability scale (95% confidence
/// constant), halved until `tau +- h` stays inside (0, 1).
pub fn hall_sheather_bandwidth(tau: f64, n: usize) -> Result<f64> {
    check_tau(tau)?;
    let nd = std_normal();
    let x = nd.inverse_cdf(tau);
    let f = nd.pdf(x);
    let z = nd.inverse_cdf(0.975);
    let mut h = (n as f64).powf(-1.0 / 3.0) * z.powf(2.0 / 3.0) * (1.5 * f * f / (2.0 * x * x + 1.0)).powf(1.0 / 3.0);
    while tau - h <= 0.0 || tau + h >= 1.0 {
        h /= 2.0;
    }
    Ok(h)
}

/// Sandwich `tau (1 - tau) (X'FX)^-1 X'X (X'FX)^-1` with Gaussian-kernel
/// density weights `F` at the fitted residuals.
pub fn powell_covariance(data: &Dataset, fit: &QuantileFit) -> Result<DMatrix<f64>> {
    let tau = fit.tau;
    let (n, d) = (data.n(), data.dim());
    let fitted = data.fitted(&fit.beta);
    let u: Vec<f64> = data.y().iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut sorted = u.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = u.iter().sum::<f64>() / n as f64;
    let sd = (u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0)).sqrt();
    let iqr = quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25);
    let spread = sd.min(iqr / 1.34);

    let nd = std_normal();
    let hp = hall_sheather_bandwidth(tau, n)?;
    let h = (nd.inverse_cdf(tau + hp) - nd.inverse_cdf(tau - hp)) * spread;
    if !(h > 0.0) {
        return Err(Error::DegenerateSpacing(
            "kernel bandwidth is zero: residual spread vanishes".into(),
        ));
    }
    let mut xfx = DMatrix::zeros(d, d);
    let mut xx = DMatrix::zeros(d, d);
    for t in 0..n {
        let row = DVector::from_column_slice(data.row(t));
        let f = nd.pdf(u[t] / h) / h;
        let outer = &row * row.transpose();
        xfx += f * &outer;
        xx += outer;
    }
    let inv = xfx.try_inverse().ok_or(Error::RankDeficient { rank: 0, columns: d })?;
    Ok(tau * (1.0 - tau) * &inv * xx * &inv)
}

/// Square roots of the diagonal of [`powell_covariance`].
pub fn powell_standard_errors(data: &Dataset, fit: &QuantileFit) -> Result<Vec<f64>> {
    let cov = powell_covariance(data, fit)?;
    Ok((0..cov.nrows()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect())
}
