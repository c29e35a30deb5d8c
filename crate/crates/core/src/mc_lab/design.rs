use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Open01, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ev_inference::{gev_quantile, gev_transform};
use crate::qr_core::Dataset;
use crate::rng::ReplicationRng;
use crate::series::XI_SERIES_THRESHOLD;
use crate::tail_index::TailSide;

/// Law of the disturbance `U`. Quantile functions are exact; the lower tail
/// index is `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// Standard Cauchy, `xi = 1`.
    Cauchy,
    /// Student t with `nu` degrees of freedom, `xi = 1/nu`.
    StudentT { nu: f64 },
    /// `Q(tau) = -tau^-xi` for `xi > 0`, `tau^-xi` for `xi < 0`.
    ExactPareto { xi: f64 },
    /// Uniform on `[0, 1]`, identical to `ExactPareto { xi: -1 }`.
    Uniform,
    /// `(E^-xi - 1)/(-xi)` with `E` standard exponential.
    GevBootstrap { xi: f64 },
}

impl Law {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Law::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(Error::domain(format!("degrees of freedom must be positive, got {nu}")))
            }
            Law::ExactPareto { xi } if xi == 0.0 || !xi.is_finite() => {
                Err(Error::domain("exact Pareto law needs a nonzero finite EV index"))
            }
            Law::GevBootstrap { xi } if !xi.is_finite() => Err(Error::domain("EV index must be finite")),
            _ => Ok(()),
        }
    }

    /// Lower-tail EV index.
    pub fn xi(&self) -> f64 {
        match *self {
            Law::Cauchy => 1.0,
            Law::StudentT { nu } => 1.0 / nu,
            Law::ExactPareto { xi } | Law::GevBootstrap { xi } => xi,
            Law::Uniform => -1.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Law::Cauchy | Law::StudentT { .. })
    }

    /// Lower end of the support (`-inf` for heavy lower tails).
    pub fn lower_endpoint(&self) -> f64 {
        match *self {
            Law::Cauchy | Law::StudentT { .. } => f64::NEG_INFINITY,
            Law::ExactPareto { xi } if xi > 0.0 => f64::NEG_INFINITY,
            Law::ExactPareto { .. } | Law::Uniform => 0.0,
            Law::GevBootstrap { xi } if xi >= 0.0 => f64::NEG_INFINITY,
            Law::GevBootstrap { xi } => 1.0 / xi,
        }
    }

    fn student(nu: f64) -> StudentsT {
        StudentsT::new(0.0, 1.0, nu).expect("validated degrees of freedom")
    }

    pub fn quantile(&self, tau: f64) -> f64 {
        match *self {
            Law::Cauchy => (PI * (tau - 0.5)).tan(),
            Law::StudentT { nu } => Self::student(nu).inverse_cdf(tau),
            Law::ExactPareto { xi } if xi > 0.0 => -tau.powf(-xi),
            Law::ExactPareto { xi } => tau.powf(-xi),
            Law::Uniform => tau,
            Law::GevBootstrap { xi } => gev_quantile(tau, xi),
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        match *self {
            Law::Cauchy => 0.5 + u.atan() / PI,
            Law::StudentT { nu } => Self::student(nu).cdf(u),
            Law::ExactPareto { xi } if xi > 0.0 => {
                if u >= -1.0 {
                    1.0
                } else {
                    (-u).powf(-1.0 / xi)
                }
            }
            Law::ExactPareto { xi } => u.clamp(0.0, 1.0).powf(-1.0 / xi),
            Law::Uniform => u.clamp(0.0, 1.0),
            Law::GevBootstrap { xi } => {
                let z = -xi * u;
                if z <= -1.0 {
                    return if xi > 0.0 { 1.0 } else { 0.0 };
                }
                // E = (1 - xi u)^(-1/xi), tending to exp(u) as xi -> 0.
                let log_e = if xi.abs() < XI_SERIES_THRESHOLD { u } else { -z.ln_1p() / xi };
                -(-log_e.exp()).exp_m1()
            }
        }
    }

    /// Density at the quantile, `1/Q'(tau)`.
    pub fn density_at_quantile(&self, tau: f64) -> f64 {
        match *self {
            Law::Cauchy => (PI * tau).sin().powi(2) / PI,
            Law::StudentT { nu } => {
                let t = Self::student(nu);
                t.pdf(t.inverse_cdf(tau))
            }
            Law::ExactPareto { xi } => tau.powf(xi + 1.0) / xi.abs(),
            Law::Uniform => 1.0,
            Law::GevBootstrap { xi } => {
                let e = -(-tau).ln_1p();
                (1.0 - tau) * e.powf(xi + 1.0)
            }
        }
    }

    pub fn sample(&self, rng: &mut ReplicationRng) -> f64 {
        match *self {
            Law::StudentT { nu } => StudentT::new(nu).expect("validated degrees of freedom").sample(rng),
            Law::GevBootstrap { xi } => gev_transform(rng.sample::<f64, _>(Exp1), xi),
            _ => self.quantile(rng.sample(Open01)),
        }
    }
}

/// Location-scale design `Y = X'gamma U` with `X = (1, V_2, ..., V_d)` and
/// `V_j` independent uniform on `(0, 1)`, so that
/// `Q_Y(tau | x) = x'gamma Q_U(tau)` whenever `x'gamma > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub law: Law,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    pub gamma: Vec<f64>,
    pub seed: u64,
}

impl SimDesign {
    /// Intercept-only design with `gamma = 1`.
    pub fn marginal(law: Law, t: usize, seed: u64) -> Self {
        Self {
            law,
            t,
            d: 1,
            gamma: vec![1.0],
            seed,
        }
    }

    pub fn with_covariates(law: Law, t: usize, gamma: Vec<f64>, seed: u64) -> Self {
        Self {
            law,
            t,
            d: gamma.len(),
            gamma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.t == 0 || self.d == 0 || self.gamma.len() != self.d {
            return Err(Error::domain("design needs T >= 1 and gamma of length d"));
        }
        // x'gamma > 0 on the whole covariate box.
        let worst = self.gamma[0] + self.gamma[1..].iter().map(|g| g.min(0.0)).sum::<f64>();
        if !(worst > 0.0) || self.gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::domain("x'gamma must be positive on the covariate support"));
        }
        Ok(())
    }

    /// Population mean of the covariates, `(1, 1/2, ..., 1/2)`.
    pub fn population_xbar(&self) -> Vec<f64> {
        let mut x = vec![0.5; self.d];
        x[0] = 1.0;
        x
    }

    /// `x'gamma Q_U(tau)`.
    pub fn true_quantile(&self, tau: f64, x: &[f64]) -> f64 {
        crate::qr_core::dataset_dot(x, &self.gamma) * self.law.quantile(tau)
    }

    /// True coefficient vector `gamma Q_U(tau)`.
    pub fn true_beta(&self, tau: f64) -> Vec<f64> {
        let q = self.law.quantile(tau);
        self.gamma.iter().map(|g| g * q).collect()
    }

    /// Side on which the Hill estimator applies, if any. Hill needs a heavy
    /// lower tail; bounded laws such as the uniform are flagged with `None`.
    pub fn hill_side(&self) -> Option<TailSide> {
        (self.law.xi() > 0.0).then_some(TailSide::Lower)
    }
}

/// Draws one dataset from `design` using its own seed.
pub fn generate(design: &SimDesign) -> Result<Dataset> {
    let mut rng = ReplicationRng::seed_from_u64(design.seed);
    generate_with_rng(design, &mut rng)
}

/// Draws one dataset from `design` using the supplied stream.
pub fn generate_with_rng(design: &SimDesign, rng: &mut ReplicationRng) -> Result<Dataset> {
    design.validate()?;
    if design.hill_side().is_none() {
        log::debug!("law {:?} has a bounded lower tail; Hill estimation is inapplicable", design.law);
    }
    let (n, d) = (design.t, design.d);
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = x.len();
        x.push(1.0);
        for _ in 1..d {
            x.push(rng.random::<f64>());
        }
        let scale = crate::qr_core::dataset_dot(&x[start..], &design.gamma);
        y.push(scale * design.law.sample(rng));
    }
    let mut names = vec!["const".to_string()];
    names.extend((1..d).map(|j| format!("x{j}")));
    Dataset::from_row_major(y, x, d, names)
}
