//! Inference for extremal quantiles and quantile-regression coefficients.
//!
//! Statistics come in two normalizations. The self-normalized (SN) statistic
//! scales the estimation error by the data-only factor
//! `sqrt(k) / (xbar'(beta(m tau) - beta(tau)))`; the canonically normalized
//! (CN) statistic scales by `A_T = 1/Q_U(1/T)`, which must be estimated under
//! the constant-`L` restriction. Their sampling laws are approximated by
//! extremal bootstrap, extremal subsampling, or by simulating the EV limit
//! program, and the resulting draws feed median-bias correction and
//! confidence intervals.

mod analytical;
mod bootstrap;
mod correction;
mod regime;
mod sample;
mod scaling;
mod subsampling;

pub use analytical::{ev_limit_simulate, gamma_arrivals, DesignSource, EVLimitConfig};
pub use bootstrap::{
    extremal_bootstrap_marginal, extremal_bootstrap_qr, extremal_bootstrap_tail_index, gev_quantile,
    gev_transform,
};
pub use correction::{
    bias_correct_and_ci, normal_interval, subsampling_ci_marginal, subsampling_ci_qr, subsampling_ci_qr_coefficients,
    NormalInterval,
};
pub use regime::{regime_recommendation, DesignKind, Regime};
pub use sample::{InferenceResult, MethodTag, Origin, RegressionDraws, Scaling, StatisticKind, StatisticSample};
pub use scaling::{
    sn_scaling_from_fits, sn_scaling_marginal, sn_scaling_marginal_with_m, sn_scaling_regression,
    sn_scaling_regression_with_m, spacing_multiplier, SNScaling, DEFAULT_SPACING_P,
};
pub(crate) use subsampling::shared_multiplier;
pub use subsampling::{
    default_subsample_size, extremal_subsampling_marginal, extremal_subsampling_qr, subsample_tau, Recentering,
    SubsampleConfig,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{replication_rng, ReplicationRng};

/// Runs `count` independent replications in parallel. Failed replications are
/// logged and counted, never retried. Output order follows the replication
/// index, so results do not depend on the thread count.
pub(crate) fn replicate<T, F>(seed: u64, count: usize, f: F) -> (Vec<T>, usize)
where
    T: Send,
    F: Fn(&mut ReplicationRng) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = replication_rng(seed, s as u64);
            f(&mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut skipped = 0;
    for (s, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                skipped += 1;
                log::debug!("replication {s} skipped: {e}");
            }
        }
    }
    if skipped > 0 {
        log::info!("{skipped} of {count} replications skipped");
    }
    (out, skipped)
}

pub(crate) fn require_draws(valid: usize, skipped: usize) -> Result<()> {
    if valid < 2 {
        Err(Error::InsufficientDraws { valid, skipped })
    } else {
        Ok(())
    }
}
