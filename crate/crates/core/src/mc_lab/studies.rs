use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::design::{generate_with_rng, SimDesign};
use crate::error::{Error, Result};
use crate::ev_inference::{
    ev_limit_simulate, normal_interval, replicate, require_draws, subsampling_ci_marginal, subsampling_ci_qr,
    extremal_subsampling_marginal, EVLimitConfig, Recentering, StatisticKind, SubsampleConfig, DEFAULT_SPACING_P,
};
use crate::qr_core::{fit_qr, sample_quantile_sorted, Dataset};
use crate::rng::derive_seed;
use crate::tail_index::{asymptotic_sd, hill_marginal, pickands_marginal, TailEstimator};

/// Probability levels at which QQ discrepancies are evaluated.
pub const DECILES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Decile quantiles of the Monte Carlo law of `Q_hat(tau)` and of its EV and
/// normal approximations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationRow {
    pub tau: f64,
    /// `tau T`.
    pub k: f64,
    pub exact: Vec<f64>,
    pub ev: Vec<f64>,
    pub normal: Vec<f64>,
    /// `max_p |ev_p - exact_p|` over the deciles.
    pub ev_discrepancy: f64,
    pub normal_discrepancy: f64,
}

fn deciles(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    DECILES.iter().map(|&p| sample_quantile_sorted(&v, p)).collect()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compares the Monte Carlo law of the sample `tau`-quantile with
/// `Q(tau) + Z(k)/A_T` (EV, `A_T = 1/Q_U(1/T)` measured from the lower
/// endpoint when it is finite) and with `N(Q(tau), tau(1 - tau)/(T f(Q(tau))^2))`.
///
/// Intercept-only designs only. Indices above 1/2 are supported for
/// symmetric laws by reflection.
pub fn approximation_quality_study(design: &SimDesign, taus: &[f64], n_mc: usize) -> Result<Vec<ApproximationRow>> {
    design.validate()?;
    if design.d != 1 {
        return Err(Error::domain("approximation study uses intercept-only designs"));
    }
    if n_mc < 1000 {
        log::warn!("n_mc = {n_mc} < 1000 replications");
    }
    if let Some(&t) = taus.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::domain(format!("quantile index {t} outside (0, 1)")));
    }
    if taus.iter().any(|&t| t > 0.5) && !design.law.is_symmetric() {
        return Err(Error::Applicability("upper-tail comparison needs a symmetric law".into()));
    }
    let n = design.t;
    // Study indices on the lower half; reflect afterwards.
    let lower: Vec<f64> = taus.iter().map(|&t| t.min(1.0 - t)).collect();
    let (qs, skipped) = replicate(design.seed, n_mc, |rng| {
        let data = generate_with_rng(design, rng)?;
        let mut y = data.y().to_vec();
        y.sort_by(f64::total_cmp);
        Ok(lower.iter().map(|&t| sample_quantile_sorted(&y, t)).collect::<Vec<f64>>())
    });
    require_draws(qs.len(), skipped)?;

    let scale = design.gamma[0];
    let law = design.law;
    let xi = law.xi();
    let endpoint = law.lower_endpoint();
    let q_one = law.quantile(1.0 / n as f64) - if endpoint.is_finite() { endpoint } else { 0.0 };
    let a_t = 1.0 / (scale * q_one);

    let mut rows = Vec::with_capacity(taus.len());
    for (j, (&tau, &tl)) in taus.iter().zip(&lower).enumerate() {
        // Seeded by the studied index so that reflected indices share draws.
        let exact = deciles(qs.iter().map(|q| q[j]).collect());
        let k = tl * n as f64;
        let truth = scale * law.quantile(tl);
        let cfg = EVLimitConfig::intercept_only(k, xi, n.max((10.0 * k).ceil() as usize), n_mc, derive_seed(design.seed, (tl * 1e9).round() as u64));
        let z = ev_limit_simulate(&cfg, StatisticKind::Canonical)?.coordinate(0)?;
        let ev = deciles(z.draws().iter().map(|z| truth + z / a_t).collect());
        let sd = scale * (tl * (1.0 - tl) / n as f64).sqrt() / law.density_at_quantile(tl);
        let normal: Vec<f64> = DECILES
            .iter()
            .map(|&p| truth + sd * crate::tail_index::normal_quantile(p))
            .collect();
        let (exact, ev, normal) = if tau > 0.5 {
            let flip = |v: Vec<f64>| v.into_iter().rev().map(|x| -x).collect::<Vec<f64>>();
            (flip(exact), flip(ev), flip(normal))
        } else {
            (exact, ev, normal)
        };
        rows.push(ApproximationRow {
            tau,
            k: tau.min(1.0 - tau) * n as f64,
            ev_discrepancy: sup_distance(&ev, &exact),
            normal_discrepancy: sup_distance(&normal, &exact),
            exact,
            ev,
            normal,
        });
    }
    Ok(rows)
}

/// Interval construction evaluated by [`coverage_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CoverageMethod {
    /// SN extremal subsampling with median-bias correction; `b = None` uses
    /// the default subsample size.
    ExtremalSubsampling { b: Option<usize>, s: usize, p: f64 },
    /// Normal approximation with Powell kernel standard errors.
    Normal,
}

impl CoverageMethod {
    pub fn subsampling(s: usize) -> Self {
        CoverageMethod::ExtremalSubsampling {
            b: None,
            s,
            p: DEFAULT_SPACING_P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub method: CoverageMethod,
    pub tau: f64,
    pub level: f64,
    pub truth: f64,
    pub coverage: f64,
    pub mean_width: f64,
    pub valid: usize,
    pub skipped: usize,
    /// Per-seed `raw - truth`.
    pub raw_errors: Vec<f64>,
    /// Per-seed `corrected - truth` (equal to the raw error for normal CIs).
    pub corrected_errors: Vec<f64>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

impl CoverageResult {
    pub fn median_raw_bias(&self) -> f64 {
        median(&self.raw_errors)
    }

    pub fn median_corrected_bias(&self) -> f64 {
        median(&self.corrected_errors)
    }
}

struct Replicate {
    covered: bool,
    width: f64,
    raw: f64,
    corrected: f64,
}

/// Coverage of intervals for `xbar'beta(tau)`, with `xbar` the population
/// covariate mean, over `n_mc` independent datasets.
pub fn coverage_study(design: &SimDesign, method: CoverageMethod, tau: f64, level: f64, n_mc: usize) -> Result<CoverageResult> {
    design.validate()?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain(format!("quantile index {tau} outside (0, 1)")));
    }
    let psi = design.population_xbar();
    let truth = design.true_quantile(tau, &psi);
    let marginal = design.d == 1;
    let (reps, skipped) = replicate(design.seed, n_mc, |rng| {
        let sub_seed = rng.next_u64();
        let data = generate_with_rng(design, rng)?;
        match method {
            CoverageMethod::ExtremalSubsampling { b, s, p } => {
                let mut cfg = SubsampleConfig::new(data.n(), sub_seed);
                cfg.s = s;
                cfg.p = p;
                if let Some(b) = b {
                    cfg.b = b;
                }
                let r = if marginal {
                    subsampling_ci_marginal(data.y(), tau, &cfg, level)?
                } else {
                    subsampling_ci_qr(&data, tau, &psi, &cfg, level)?
                };
                Ok(Replicate {
                    covered: r.contains(truth),
                    width: r.width(),
                    raw: r.raw - truth,
                    corrected: r.point - truth,
                })
            }
            CoverageMethod::Normal => {
                let fit = fit_qr(&data, tau)?;
                let r = normal_interval(&data, &fit, &psi, level)?;
                Ok(Replicate {
                    covered: r.contains(truth),
                    width: r.upper - r.lower,
                    raw: r.estimate - truth,
                    corrected: r.estimate - truth,
                })
            }
        }
    });
    require_draws(reps.len(), skipped)?;
    let valid = reps.len();
    Ok(CoverageResult {
        method,
        tau,
        level,
        truth,
        coverage: reps.iter().filter(|r| r.covered).count() as f64 / valid as f64,
        mean_width: reps.iter().map(|r| r.width).sum::<f64>() / valid as f64,
        valid,
        skipped,
        raw_errors: reps.iter().map(|r| r.raw).collect(),
        corrected_errors: reps.iter().map(|r| r.corrected).collect(),
    })
}

/// Variance of SN subsampling draws under both recenterings at `tau = k/T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeControlRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub b: usize,
    /// Median over datasets of the draw variance.
    pub conventional_variance: f64,
    pub extremal_variance: f64,
}

/// For each sample size, draws `n_data` marginal datasets from `design.law`
/// and compares subsampling draws recentered at `Q_hat(tau)` (conventional)
/// with draws recentered at `Q_hat(tau_b)` (extremal). Both use the same
/// subsamples.
pub fn negative_control_study(design: &SimDesign, k: f64, sizes: &[usize], n_data: usize, s: usize) -> Result<Vec<NegativeControlRow>> {
    design.law.validate()?;
    let mut rows = Vec::with_capacity(sizes.len());
    for (i, &t) in sizes.iter().enumerate() {
        let d = SimDesign::marginal(design.law, t, derive_seed(design.seed, i as u64));
        let tau = k / t as f64;
        let (vars, skipped) = replicate(d.seed, n_data, |rng| {
            let sub_seed = rng.next_u64();
            let data = generate_with_rng(&d, rng)?;
            let mut cfg = SubsampleConfig::new(t, sub_seed);
            cfg.s = s;
            let ext = extremal_subsampling_marginal(data.y(), tau, &cfg, StatisticKind::SelfNormalized, None)?;
            cfg.recentering = Recentering::Conventional;
            let conv = extremal_subsampling_marginal(data.y(), tau, &cfg, StatisticKind::SelfNormalized, None)?;
            Ok((conv.variance(), ext.variance()))
        });
        require_draws(vars.len(), skipped)?;
        rows.push(NegativeControlRow {
            t,
            b: SubsampleConfig::new(t, 0).b,
            conventional_variance: median(&vars.iter().map(|v| v.0).collect::<Vec<_>>()),
            extremal_variance: median(&vars.iter().map(|v| v.1).collect::<Vec<_>>()),
        });
    }
    Ok(rows)
}

/// Standardized tail-index errors `sqrt(tau_tilde T)(xi_hat - xi)/sigma(xi)`
/// over `n_mc` marginal datasets.
pub fn tail_index_study(design: &SimDesign, tau_tilde: f64, estimator: TailEstimator, n_mc: usize) -> Result<Vec<f64>> {
    design.validate()?;
    let xi = design.law.xi();
    let sigma = asymptotic_sd(xi, estimator);
    let root_k = (tau_tilde * design.t as f64).sqrt();
    let marginal = SimDesign::marginal(design.law, design.t, design.seed);
    let (z, skipped) = replicate(design.seed, n_mc, |rng| {
        let data: Dataset = generate_with_rng(&marginal, rng)?;
        let est = match estimator {
            TailEstimator::Hill => hill_marginal(data.y(), tau_tilde)?,
            TailEstimator::Pickands => pickands_marginal(data.y(), tau_tilde)?,
        };
        Ok(root_k * (est - xi) / sigma)
    });
    require_draws(z.len(), skipped)?;
    Ok(z)
}

