//! Simulation of the EV limit of the quantile-regression statistics.
//!
//! Each draw solves the convex piecewise-linear program
//!
//! ```text
//! argmin_z  -k xbar'z + sum_{t <= M} { X_t'z - chi (G_t^-xi - k^-xi) X_t'gamma }_+
//! ```
//!
//! with `G_t` the arrival times of a unit Poisson process, `X_t` resampled
//! design rows and `chi = -sign(xi)`. The statistic is `chi` times the
//! minimizer. Among multiple minimizers the one with the lowest `xbar'z` is
//! taken, which for an intercept-only design gives `G_ceil(k)^-xi - k^-xi`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::sample::{Origin, RegressionDraws, StatisticKind};
use super::scaling::spacing_multiplier;
use super::{replicate, require_draws};
use crate::error::{Error, Result};
use crate::qr_core::{simplex, Dataset};
use crate::rng::ReplicationRng;
use crate::series::{pow_minus_one, XI_SERIES_THRESHOLD};

/// Distribution of the simulated design rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DesignSource {
    /// `X = 1`.
    Intercept,
    /// Uniform resampling of observed rows (row-major, `d` columns).
    Empirical { rows: Vec<f64>, d: usize },
}

impl DesignSource {
    pub fn from_dataset(data: &Dataset) -> Self {
        if data.dim() == 1 {
            DesignSource::Intercept
        } else {
            DesignSource::Empirical {
                rows: data.x_row_major().to_vec(),
                d: data.dim(),
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DesignSource::Intercept => 1,
            DesignSource::Empirical { d, .. } => *d,
        }
    }

    fn draw(&self, rng: &mut ReplicationRng, count: usize) -> Vec<f64> {
        match self {
            DesignSource::Intercept => vec![1.0; count],
            DesignSource::Empirical { rows, d } => {
                let n = rows.len() / d;
                let mut out = Vec::with_capacity(count * d);
                for _ in 0..count {
                    let t = rng.random_range(0..n);
                    out.extend_from_slice(&rows[t * d..(t + 1) * d]);
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EVLimitConfig {
    /// Order `k = tau T` (any positive real).
    pub k: f64,
    /// Truncation length of the infinite sum.
    pub m_trunc: usize,
    pub xi: f64,
    pub gamma: Vec<f64>,
    /// Design mean entering the linear term and the SN denominator.
    pub xbar: Vec<f64>,
    pub design: DesignSource,
    /// Number of draws.
    pub s: usize,
    pub seed: u64,
    /// Spacing parameter for SN draws.
    pub p: f64,
}

impl EVLimitConfig {
    /// Configuration for `data` with defaults `M = max(T, ceil(10 k))`,
    /// `S = 200`, `p = 5`.
    pub fn for_dataset(data: &Dataset, k: f64, xi: f64, gamma: Vec<f64>, seed: u64) -> Self {
        Self {
            k,
            m_trunc: data.n().max((10.0 * k).ceil() as usize),
            xi,
            gamma,
            xbar: data.xbar(),
            design: DesignSource::from_dataset(data),
            s: 200,
            seed,
            p: super::DEFAULT_SPACING_P,
        }
    }

    /// Intercept-only configuration (`gamma = xbar = 1`).
    pub fn intercept_only(k: f64, xi: f64, m_trunc: usize, s: usize, seed: u64) -> Self {
        Self {
            k,
            m_trunc,
            xi,
            gamma: vec![1.0],
            xbar: vec![1.0],
            design: DesignSource::Intercept,
            s,
            seed,
            p: super::DEFAULT_SPACING_P,
        }
    }

    /// `+1` for `xi < 0`, `-1` for `xi > 0`; undefined at zero.
    pub fn chi(&self) -> Option<f64> {
        if self.xi < 0.0 {
            Some(1.0)
        } else if self.xi > 0.0 {
            Some(-1.0)
        } else {
            None
        }
    }

    fn check(&self) -> Result<()> {
        let d = self.design.dim();
        if self.gamma.len() != d || self.xbar.len() != d {
            return Err(Error::domain("gamma, xbar and design dimensions disagree"));
        }
        if !(self.k > 0.0) || !self.xi.is_finite() {
            return Err(Error::domain("EV limit needs k > 0 and a finite xi"));
        }
        if (self.m_trunc as f64) < 10.0 * self.k {
            return Err(Error::domain(format!(
                "truncation M = {} is below 10 k = {:.1}",
                self.m_trunc,
                10.0 * self.k
            )));
        }
        if self.m_trunc <= d {
            return Err(Error::domain("truncation must exceed the design dimension"));
        }
        Ok(())
    }
}

/// Arrival times `G_t = E_1 + ... + E_t`, `t = 1..=count`.
pub fn gamma_arrivals(rng: &mut ReplicationRng, count: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..count)
        .map(|_| {
            acc += rng.sample::<f64, _>(Exp1);
            acc
        })
        .collect()
}

struct LimitProgram<'a> {
    cfg: &'a EVLimitConfig,
    d: usize,
    small_xi: bool,
}

impl LimitProgram<'_> {
    /// Minimizer at order `kappa`. For small `|xi|` the offsets are replaced by
    /// `(ln G_t - ln kappa) X_t'gamma`, whose minimizer is the one at `xi`
    /// divided by `|xi|` to first order.
    fn minimize(&self, arrivals: &[f64], rows: &[f64], kappa: f64) -> Result<Vec<f64>> {
        let cfg = self.cfg;
        let d = self.d;
        let m = arrivals.len();
        let chi = cfg.chi().unwrap_or(1.0);
        let kpow = (-cfg.xi * kappa.ln()).exp();
        let offsets: Vec<f64> = (0..m)
            .map(|t| {
                let scale: f64 = rows[t * d..(t + 1) * d].iter().zip(&cfg.gamma).map(|(a, b)| a * b).sum();
                let h = if self.small_xi {
                    arrivals[t].ln() - kappa.ln()
                } else {
                    chi * ((-cfg.xi * arrivals[t].ln()).exp() - kpow)
                };
                h * scale
            })
            .collect();
        let linear: Vec<f64> = cfg.xbar.iter().map(|v| -kappa * v).collect();
        let program = simplex::Program {
            x: rows,
            y: &offsets,
            d,
            pos: 0.0,
            neg: 1.0,
            linear: Some(&linear),
            tiebreak: Some(&cfg.xbar),
        };
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            ((a + 1) as f64 - kappa)
                .abs()
                .total_cmp(&((b + 1) as f64 - kappa).abs())
                .then(a.cmp(&b))
        });
        let vertex = simplex::solve(&program, &order, 50 * (m + d) + 1000).map_err(|e| match e {
            Error::Unbounded(msg) => Error::Unbounded(format!("{msg}; increase the truncation M")),
            other => other,
        })?;
        Ok(vertex.beta)
    }
}

/// Draws of the EV limit of the CN statistic (`mode = Canonical`) or of the
/// SN statistic (`mode = SelfNormalized`,
/// `sqrt(k) Z(k) / (xbar'(Z(mk) - Z(k)) + (m^-xi - 1) k^-xi)`, with
/// `m = (d + p)/k + 1`). Both orders share the same arrivals and rows.
pub fn ev_limit_simulate(cfg: &EVLimitConfig, mode: StatisticKind) -> Result<RegressionDraws> {
    cfg.check()?;
    let d = cfg.design.dim();
    let small_xi = cfg.xi.abs() < XI_SERIES_THRESHOLD;
    let program = LimitProgram { cfg, d, small_xi };
    let k = cfg.k;
    let m = spacing_multiplier(cfg.p, d, k);
    if mode == StatisticKind::SelfNormalized && (cfg.m_trunc as f64) < 10.0 * m * k {
        log::warn!("truncation M = {} is below 10 m k = {:.1}", cfg.m_trunc, 10.0 * m * k);
    }
    let chi = cfg.chi().unwrap_or(1.0);
    let (draws, skipped) = replicate(cfg.seed, cfg.s, |rng| {
        let arrivals = gamma_arrivals(rng, cfg.m_trunc);
        let rows = cfg.design.draw(rng, cfg.m_trunc);
        let zk = program.minimize(&arrivals, &rows, k)?;
        match mode {
            StatisticKind::Canonical => {
                let factor = if small_xi { -cfg.xi } else { chi };
                Ok(zk.iter().map(|v| factor * v).collect::<Vec<f64>>())
            }
            StatisticKind::SelfNormalized => {
                let zmk = program.minimize(&arrivals, &rows, m * k)?;
                let spread: f64 = cfg.xbar.iter().zip(zmk.iter().zip(&zk)).map(|(x, (a, b))| x * (a - b)).sum();
                let (num_factor, den) = if small_xi {
                    (1.0, spread + m.ln())
                } else {
                    let kpow = (-cfg.xi * k.ln()).exp();
                    (chi, chi * spread + pow_minus_one(m, cfg.xi) * kpow)
                };
                if den == 0.0 || !den.is_finite() {
                    return Err(Error::DegenerateSpacing("limit spacing is zero".into()));
                }
                Ok(zk.iter().map(|v| k.sqrt() * num_factor * v / den).collect::<Vec<f64>>())
            }
        }
    });
    require_draws(draws.len(), skipped)?;
    Ok(RegressionDraws {
        draws,
        statistic: mode,
        origin: Origin::Analytical,
        seed: cfg.seed,
        skipped,
        spacing_multiplier: (mode == StatisticKind::SelfNormalized).then_some(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replication_rng;

    #[test]
    fn intercept_only_draws_are_gamma_transforms() {
        for &(k, xi) in &[(5.0, 1.0), (3.0, -0.5), (2.5, 0.5), (1.0, -1.0)] {
            let cfg = EVLimitConfig::intercept_only(k, xi, 200, 40, 17);
            let draws = ev_limit_simulate(&cfg, StatisticKind::Canonical).unwrap();
            for (s, z) in draws.draws.iter().enumerate() {
                let g = gamma_arrivals(&mut replication_rng(17, s as u64), 200);
                let kc = k.ceil() as usize;
                let expect = g[kc - 1].powf(-xi) - k.powf(-xi);
                assert!((z[0] - expect).abs() < 1e-12 * (1.0 + expect.abs()), "k {k} xi {xi}: {} vs {expect}", z[0]);
            }
        }
    }

    #[test]
    fn intercept_only_sn_matches_univariate_display() {
        let (k, xi) = (5.0, 1.0);
        let mut cfg = EVLimitConfig::intercept_only(k, xi, 300, 30, 3);
        cfg.p = 4.0;
        let draws = ev_limit_simulate(&cfg, StatisticKind::SelfNormalized).unwrap();
        let m = spacing_multiplier(4.0, 1, k);
        assert_eq!(m, 2.0);
        for (s, z) in draws.draws.iter().enumerate() {
            let g = gamma_arrivals(&mut replication_rng(3, s as u64), 300);
            let expect = k.sqrt() * (g[4].powf(-xi) - k.powf(-xi)) / (g[9].powf(-xi) - g[4].powf(-xi));
            assert!((z[0] - expect).abs() < 1e-10 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn near_zero_xi_is_continuous() {
        let mut a = EVLimitConfig::intercept_only(4.0, 0.0, 200, 20, 9);
        a.p = 3.0;
        let mut b = a.clone();
        b.xi = 2e-6;
        let za = ev_limit_simulate(&a, StatisticKind::SelfNormalized).unwrap();
        let zb = ev_limit_simulate(&b, StatisticKind::SelfNormalized).unwrap();
        for (x, y) in za.draws.iter().zip(&zb.draws) {
            assert!((x[0] - y[0]).abs() < 1e-4 * (1.0 + x[0].abs()));
        }
    }

    #[test]
    fn rejects_short_truncation() {
        let cfg = EVLimitConfig::intercept_only(5.0, 1.0, 40, 10, 0);
        assert!(ev_limit_simulate(&cfg, StatisticKind::Canonical).is_err());
    }

    #[test]
    fn regression_draws_solve_the_program() {
        // Two-column design; verify optimality against perturbations.
        let rows: Vec<f64> = (0..60).flat_map(|i| [1.0, (i % 10) as f64 / 10.0]).collect();
        let data = Dataset::from_row_major(
            (0..60).map(|i| i as f64).collect(),
            rows,
            2,
            vec!["intercept".into(), "x".into()],
        )
        .unwrap();
        let mut cfg = EVLimitConfig::for_dataset(&data, 6.0, 0.5, vec![0.8, 0.4], 21);
        cfg.s = 10;
        cfg.m_trunc = 300;
        let draws = ev_limit_simulate(&cfg, StatisticKind::Canonical).unwrap();
        assert_eq!(draws.draws.len(), 10);
        assert!(draws.draws.iter().all(|z| z.iter().all(|v| v.is_finite())));
    }
}
