use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{dot, Dataset};
use super::quantile::{check_tau, rho, sample_quantile};
use super::{interior, simplex, SIMPLEX_MAX_T};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    Simplex,
    /// Interior point followed by a simplex crossover to the optimal vertex.
    InteriorPoint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SolverChoice {
    /// Simplex up to [`SIMPLEX_MAX_T`] observations, interior point above.
    #[default]
    Auto,
    Simplex,
    InteriorPoint,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub solver: SolverChoice,
    /// Simplex pivot cap; defaults to `50 (T + d) + 1000`.
    pub max_iterations: Option<usize>,
}

/// A tau-quantile regression fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileFit {
    pub tau: f64,
    pub beta: Vec<f64>,
    /// Attained check-loss sum.
    pub objective: f64,
    pub n_zero_residuals: usize,
    /// Share of strictly negative residuals.
    pub negative_share: f64,
    pub iterations: usize,
    pub solver: SolverKind,
}

impl QuantileFit {
    /// `x' beta` for a covariate vector `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(x, &self.beta)
    }
}

/// Quantile regression of `y` on `X` at `tau`.
///
/// Returns the optimal vertex; among multiple optimal vertices the one with
/// the lowest fitted value at the design mean is reported, so intercept-only
/// fits coincide with [`sample_quantile`].
pub fn fit_qr(data: &Dataset, tau: f64) -> Result<QuantileFit> {
    fit_qr_with(data, tau, FitOptions::default())
}

pub fn fit_qr_with(data: &Dataset, tau: f64, options: FitOptions) -> Result<QuantileFit> {
    check_tau(tau)?;
    let (n, d) = (data.n(), data.dim());
    if tau * (n as f64) < 1.0 {
        log::warn!(
            "tau*T = {:.3} < 1: the estimate is pinned to the extreme observation; consider extrapolation",
            tau * n as f64
        );
    }
    let xbar = data.xbar();
    let program = simplex::Program {
        x: data.x_row_major(),
        y: data.y(),
        d,
        pos: tau,
        neg: 1.0 - tau,
        linear: None,
        tiebreak: Some(&xbar),
    };
    let max_iter = options.max_iterations.unwrap_or(50 * (n + d) + 1000);
    let use_ipm = match options.solver {
        SolverChoice::Auto => n > SIMPLEX_MAX_T,
        SolverChoice::Simplex => false,
        SolverChoice::InteriorPoint => true,
    };

    let (vertex, solver, extra) = if use_ipm && n > d {
        let ipm = interior::solve(data.x_row_major(), data.y(), d, tau)?;
        let order = order_by_abs(&data.fitted(&ipm.beta), data.y());
        (simplex::solve(&program, &order, max_iter)?, SolverKind::InteriorPoint, ipm.iterations)
    } else {
        let q = sample_quantile(data.y(), tau)?;
        let order = order_by_abs(&vec![q; n], data.y());
        (simplex::solve(&program, &order, max_iter)?, SolverKind::Simplex, 0)
    };
    Ok(summarize(&program, tau, vertex.beta, vertex.iterations + extra, solver))
}

fn order_by_abs(fitted: &[f64], y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| {
        (y[a] - fitted[a])
            .abs()
            .total_cmp(&(y[b] - fitted[b]).abs())
            .then(a.cmp(&b))
    });
    order
}

fn summarize(p: &simplex::Program, tau: f64, beta: Vec<f64>, iterations: usize, solver: SolverKind) -> QuantileFit {
    let n = p.y.len();
    let mut objective = 0.0;
    let mut zeros = 0;
    let mut negative = 0;
    for t in 0..n {
        let r = p.residual(t, &beta);
        objective += rho(r, tau);
        if r == 0.0 {
            zeros += 1;
        } else if r < 0.0 {
            negative += 1;
        }
    }
    QuantileFit {
        tau,
        beta,
        objective,
        n_zero_residuals: zeros,
        negative_share: negative as f64 / n as f64,
        iterations,
        solver,
    }
}

/// Fits at each tau of a strictly increasing grid. Fits run in parallel and
/// are identical to separate [`fit_qr`] calls.
pub fn fit_qr_process(data: &Dataset, taus: &[f64]) -> Result<Vec<QuantileFit>> {
    for w in taus.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::domain(format!(
                "quantile grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    taus.par_iter()
        .map(|&tau| fit_qr(data, tau).map_err(|e| e.at_tau(tau)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let d = Dataset::intercept_only(vec![1.0, 2.0, 9.0]).unwrap();
        let f = fit_qr(&d, 0.5).unwrap();
        assert_eq!(f.beta, vec![2.0]);
        assert_eq!(f.objective, 0.5 * 7.0 + 0.5 * 1.0);

        let d = Dataset::new(vec![1.0, 3.0], &[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        for tau in [0.1, 0.5, 0.9] {
            let f = fit_qr(&d, tau).unwrap();
            assert!((f.beta[0] - 1.0).abs() < 1e-14 && (f.beta[1] - 2.0).abs() < 1e-14);
            assert_eq!(f.objective, 0.0);
            assert_eq!(f.n_zero_residuals, 2);
        }
    }

    #[test]
    fn process_is_monotone_and_validated() {
        let d = Dataset::intercept_only(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let fits = fit_qr_process(&d, &[0.25, 0.5]).unwrap();
        assert!(fits[0].beta[0] <= fits[1].beta[0]);
        assert_eq!(fit_qr_process(&d, &[0.5]).unwrap()[0], fit_qr(&d, 0.5).unwrap());
        assert!(fit_qr_process(&d, &[0.5, 0.5]).is_err());
        let err = fit_qr_process(&d, &[0.5, 1.5]).unwrap_err();
        assert!(matches!(err, Error::AtTau { tau, .. } if tau == 1.5));
    }

    #[test]
    fn interior_point_agrees_with_simplex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 600;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random();
            let b: f64 = rng.random::<f64>() * 3.0 - 1.0;
            let u: f64 = rng.random::<f64>() - 0.5;
            y.push(1.0 + 2.0 * a - b + (1.0 + a) * u / (0.3 + u.abs()));
            rows.push(vec![1.0, a, b]);
        }
        let data = Dataset::new(y, &rows).unwrap();
        for tau in [0.03, 0.5, 0.9] {
            let s = fit_qr_with(&data, tau, FitOptions { solver: SolverChoice::Simplex, ..Default::default() }).unwrap();
            let i = fit_qr_with(&data, tau, FitOptions { solver: SolverChoice::InteriorPoint, ..Default::default() }).unwrap();
            assert_eq!(i.solver, SolverKind::InteriorPoint);
            assert!((s.objective - i.objective).abs() <= 1e-9 * s.objective, "{} vs {}", s.objective, i.objective);
            for (a, b) in s.beta.iter().zip(&i.beta) {
                assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", s.beta, i.beta);
            }
        }
    }
}
