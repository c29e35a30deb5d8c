//! Extremal subsampling: subsample statistics at the adjusted index `tau_b`,
//! recentered at the full-sample estimate at `tau_b`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample::{Origin, RegressionDraws, StatisticKind, StatisticSample};
use super::scaling::{sn_scaling_from_fits, spacing_multiplier};
use super::{replicate, require_draws};
use crate::error::{Error, Result};
use crate::qr_core::{fit_qr, sample_quantile, Dataset};
use crate::rng::ReplicationRng;

/// Centering of subsample statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recentering {
    /// Full-sample estimate at the subsample index `tau_b` (consistent).
    #[default]
    Extremal,
    /// Full-sample estimate at the target `tau`. Inconsistent for extremal
    /// quantiles with `xi > 0`; provided as a negative control only.
    Conventional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleConfig {
    /// Subsample size `b < T`.
    pub b: usize,
    /// Number of subsamples.
    pub s: usize,
    /// Contiguous blocks when true, random subsets without replacement
    /// otherwise.
    pub dependent: bool,
    pub seed: u64,
    /// Spacing parameter of the SN factor.
    pub p: f64,
    pub recentering: Recentering,
}

impl SubsampleConfig {
    /// Defaults: `b = floor(50 + sqrt(T))` (capped below `T`), 500
    /// subsamples, independent draws, `p = 5`.
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            b: default_subsample_size(n),
            s: 500,
            dependent: false,
            seed,
            p: super::DEFAULT_SPACING_P,
            recentering: Recentering::Extremal,
        }
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if self.b >= n || self.b == 0 {
            return Err(Error::domain(format!("subsample size {} must lie in [1, T) with T = {n}", self.b)));
        }
        if self.s < 100 {
            log::warn!("S = {} < 100 subsamples", self.s);
        }
        Ok(())
    }

    pub(crate) fn indices(&self, rng: &mut ReplicationRng, n: usize) -> Vec<usize> {
        if self.dependent {
            let start = rng.random_range(0..=n - self.b);
            (start..start + self.b).collect()
        } else {
            let mut ix = index::sample(rng, n, self.b).into_vec();
            ix.sort_unstable();
            ix
        }
    }
}

/// `floor(50 + sqrt(T))`, kept strictly below `T`.
pub fn default_subsample_size(n: usize) -> usize {
    let b = (50.0 + (n as f64).sqrt()).floor() as usize;
    b.min(n.saturating_sub(1)).max(1)
}

/// Subsample index: `min(tau T / b, 0.2)` for `tau < 0.2`, else `tau`.
pub fn subsample_tau(tau: f64, n: usize, b: usize) -> f64 {
    if tau < 0.2 {
        (tau * n as f64 / b as f64).min(0.2)
    } else {
        tau
    }
}

/// Multiplier shared by the subsample factors and the full-sample factor.
///
/// With `k_b = tau_b b`, `m = (extra + p)/k_b + 1`. When `tau_b = tau T/b`
/// this is the full-sample multiplier; when `tau_b` is truncated it keeps
/// `m tau_b b - tau_b b = extra + p` order statistics between the two
/// subsample quantiles.
pub(crate) fn shared_multiplier(tau: f64, n: usize, b: usize, p: f64, extra: usize) -> f64 {
    let tau_b = subsample_tau(tau, n, b);
    spacing_multiplier(p, extra, tau_b * b as f64)
}

/// Marginal extremal subsampling. SN draws use
/// `sqrt(tau_b b)/(Q_b(m tau_b) - Q_b(tau_b))`; CN draws use the supplied
/// `A_b`. Subsamples with zero spacing are skipped and counted.
pub fn extremal_subsampling_marginal(
    y: &[f64],
    tau: f64,
    cfg: &SubsampleConfig,
    statistic: StatisticKind,
    a_b: Option<f64>,
) -> Result<StatisticSample> {
    let n = y.len();
    cfg.check(n)?;
    let tau_b = subsample_tau(tau, n, cfg.b);
    let m = shared_multiplier(tau, n, cfg.b, cfg.p, 0);
    if m * tau_b >= 1.0 {
        return Err(Error::domain("m tau_b >= 1; use a smaller spacing parameter"));
    }
    let a_b = match (statistic, a_b) {
        (StatisticKind::Canonical, None) => {
            return Err(Error::domain("CN subsampling requires an estimate of A_b"));
        }
        (_, v) => v,
    };
    let center = match cfg.recentering {
        Recentering::Extremal => sample_quantile(y, tau_b)?,
        Recentering::Conventional => sample_quantile(y, tau)?,
    };
    let k_b = tau_b * cfg.b as f64;
    let (draws, skipped) = replicate(cfg.seed, cfg.s, |rng| {
        let sub: Vec<f64> = cfg.indices(rng, n).into_iter().map(|t| y[t]).collect();
        let q = sample_quantile(&sub, tau_b)?;
        let scale = match statistic {
            StatisticKind::SelfNormalized => {
                let den = sample_quantile(&sub, m * tau_b)? - q;
                if den <= 0.0 {
                    return Err(Error::DegenerateSpacing("subsample spacing is zero".into()));
                }
                k_b.sqrt() / den
            }
            StatisticKind::Canonical => a_b.unwrap_or(f64::NAN),
        };
        Ok(scale * (q - center))
    });
    require_draws(draws.len(), skipped)?;
    let m = (statistic == StatisticKind::SelfNormalized).then_some(m);
    Ok(StatisticSample::new(draws, statistic, Origin::Subsampling, cfg.seed, skipped)?.with_multiplier(m))
}

/// Regression extremal subsampling with `m = (d + p)/(tau_b b) + 1`.
/// Subsamples whose design loses rank, or whose spacing is zero, are skipped.
pub fn extremal_subsampling_qr(
    data: &Dataset,
    tau: f64,
    cfg: &SubsampleConfig,
    statistic: StatisticKind,
    a_b: Option<f64>,
) -> Result<RegressionDraws> {
    let n = data.n();
    cfg.check(n)?;
    let d = data.dim();
    let tau_b = subsample_tau(tau, n, cfg.b);
    let m = shared_multiplier(tau, n, cfg.b, cfg.p, d);
    if m * tau_b >= 1.0 {
        return Err(Error::domain("m tau_b >= 1; use a smaller spacing parameter"));
    }
    if statistic == StatisticKind::Canonical && a_b.is_none() {
        return Err(Error::domain("CN subsampling requires an estimate of A_b"));
    }
    let center = match cfg.recentering {
        Recentering::Extremal => fit_qr(data, tau_b)?.beta,
        Recentering::Conventional => fit_qr(data, tau)?.beta,
    };
    let k_b = tau_b * cfg.b as f64;
    let (draws, skipped) = replicate(cfg.seed, cfg.s, |rng| {
        let sub = data.subset(&cfg.indices(rng, n))?;
        let lo = fit_qr(&sub, tau_b)?;
        let scale = match statistic {
            StatisticKind::SelfNormalized => {
                let hi = fit_qr(&sub, m * tau_b)?;
                sn_scaling_from_fits(&lo, &hi, &sub.xbar(), k_b, m, cfg.p)?.value
            }
            StatisticKind::Canonical => a_b.unwrap_or(f64::NAN),
        };
        Ok(lo.beta.iter().zip(&center).map(|(a, c)| scale * (a - c)).collect::<Vec<f64>>())
    });
    require_draws(draws.len(), skipped)?;
    Ok(RegressionDraws {
        draws,
        statistic,
        origin: Origin::Subsampling,
        seed: cfg.seed,
        skipped,
        spacing_multiplier: (statistic == StatisticKind::SelfNormalized).then_some(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replication_rng;

    #[test]
    fn tau_b_rule() {
        assert!((subsample_tau(0.005, 1000, 81) - 5.0 / 81.0).abs() < 1e-15);
        assert_eq!(subsample_tau(0.05, 1000, 81), 0.2);
        assert_eq!(subsample_tau(0.3, 1000, 81), 0.3);
        assert_eq!(default_subsample_size(1738), 91);
        assert_eq!(default_subsample_size(1000), 81);
        assert_eq!(default_subsample_size(20), 19);
    }

    #[test]
    fn dependent_draws_are_windows() {
        let cfg = SubsampleConfig {
            dependent: true,
            b: 10,
            ..SubsampleConfig::new(100, 4)
        };
        for s in 0..20 {
            let ix = cfg.indices(&mut replication_rng(4, s), 100);
            assert_eq!(ix.len(), 10);
            assert!(ix.windows(2).all(|w| w[1] == w[0] + 1));
        }
        let cfg = SubsampleConfig { b: 10, ..SubsampleConfig::new(100, 4) };
        let ix = cfg.indices(&mut replication_rng(4, 0), 100);
        assert!(ix.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn median_draws_center_near_zero() {
        let y: Vec<f64> = (0..401).map(|i| ((i * 263) % 401) as f64).collect();
        let cfg = SubsampleConfig {
            b: 400,
            s: 200,
            ..SubsampleConfig::new(401, 1)
        };
        let s = extremal_subsampling_marginal(&y, 0.5, &cfg, StatisticKind::SelfNormalized, None).unwrap();
        // One order-statistic step is 1 here and the SN factor is about 2.8.
        assert!(s.median().abs() <= 2.9, "{}", s.median());
        assert!(s.quantile(0.05) >= -3.0 && s.quantile(0.95) <= 3.0);
    }

    #[test]
    fn intercept_only_regression_matches_marginal() {
        let y: Vec<f64> = (0..500).map(|i| ((i * 7919) % 500) as f64 - ((i * 31) % 7) as f64 * 50.0).collect();
        let data = Dataset::intercept_only(y.clone()).unwrap();
        let mut cfg = SubsampleConfig { s: 150, ..SubsampleConfig::new(500, 8) };
        cfg.p = 4.0;
        let reg = extremal_subsampling_qr(&data, 0.01, &cfg, StatisticKind::SelfNormalized, None).unwrap();
        cfg.p = 5.0;
        let mar = extremal_subsampling_marginal(&y, 0.01, &cfg, StatisticKind::SelfNormalized, None).unwrap();
        let reg = reg.coordinate(0).unwrap();
        assert_eq!(reg.draws(), mar.draws());
    }

    #[test]
    fn errors() {
        let y = vec![0.0; 10];
        let cfg = SubsampleConfig { b: 10, ..SubsampleConfig::new(10, 0) };
        assert!(extremal_subsampling_marginal(&y, 0.1, &cfg, StatisticKind::SelfNormalized, None).is_err());
        let cfg = SubsampleConfig { b: 5, ..SubsampleConfig::new(10, 0) };
        assert!(extremal_subsampling_marginal(&y, 0.1, &cfg, StatisticKind::Canonical, None).is_err());
    }
}
