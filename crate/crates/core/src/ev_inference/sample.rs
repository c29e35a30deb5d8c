use serde::{Deserialize, Serialize};

use super::scaling::SNScaling;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "SN")]
    SelfNormalized,
    #[serde(rename = "CN")]
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Bootstrap,
    Subsampling,
    Analytical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodTag {
    pub statistic: StatisticKind,
    pub origin: Origin,
}

/// Empirical law of a scalar normalized statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSample {
    /// Sorted ascending.
    draws: Vec<f64>,
    pub statistic: StatisticKind,
    pub origin: Origin,
    pub seed: u64,
    /// Replications dropped as degenerate.
    pub skipped: usize,
    /// Spacing multiplier `m` used by SN draws.
    pub spacing_multiplier: Option<f64>,
}

impl StatisticSample {
    pub fn new(mut draws: Vec<f64>, statistic: StatisticKind, origin: Origin, seed: u64, skipped: usize) -> Result<Self> {
        if draws.len() < 2 {
            return Err(Error::InsufficientDraws {
                valid: draws.len(),
                skipped,
            });
        }
        if draws.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("statistic draws contain NaN"));
        }
        draws.sort_by(f64::total_cmp);
        Ok(Self {
            draws,
            statistic,
            origin,
            seed,
            skipped,
            spacing_multiplier: None,
        })
    }

    pub(crate) fn with_multiplier(mut self, m: Option<f64>) -> Self {
        self.spacing_multiplier = m;
        self
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Left-continuous empirical inverse: the `ceil(pS)`-th smallest draw.
    pub fn quantile(&self, p: f64) -> f64 {
        let s = self.draws.len();
        let i = ((p * s as f64 - 1e-9).ceil() as isize).clamp(1, s as isize) as usize;
        self.draws[i - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.draws.iter().sum::<f64>() / self.draws.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.draws.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.draws.len() - 1) as f64
    }
}

/// Vector-valued draws of a normalized coefficient statistic, one per
/// replication, in replication order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDraws {
    pub draws: Vec<Vec<f64>>,
    pub statistic: StatisticKind,
    pub origin: Origin,
    pub seed: u64,
    pub skipped: usize,
    pub spacing_multiplier: Option<f64>,
}

impl RegressionDraws {
    /// Law of `psi' Z`.
    pub fn project(&self, psi: &[f64]) -> Result<StatisticSample> {
        let draws = self
            .draws
            .iter()
            .map(|z| z.iter().zip(psi).map(|(a, b)| a * b).sum())
            .collect();
        Ok(StatisticSample::new(draws, self.statistic, self.origin, self.seed, self.skipped)?
            .with_multiplier(self.spacing_multiplier))
    }

    /// Law of coordinate `j`.
    pub fn coordinate(&self, j: usize) -> Result<StatisticSample> {
        let d = self.draws.first().map_or(0, Vec::len);
        let mut psi = vec![0.0; d];
        if j >= d {
            return Err(Error::domain(format!("coordinate {j} out of range for dimension {d}")));
        }
        psi[j] = 1.0;
        self.project(&psi)
    }
}

/// Normalization applied to the estimation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scaling {
    SelfNormalized(SNScaling),
    Canonical { a_t: f64 },
    /// Deterministic rate such as `sqrt(tau_tilde T)` for EV-index statistics.
    Rate { value: f64 },
}

impl Scaling {
    pub fn value(&self) -> f64 {
        match self {
            Scaling::SelfNormalized(s) => s.value,
            Scaling::Canonical { a_t } => *a_t,
            Scaling::Rate { value } => *value,
        }
    }
}

/// Median-bias-corrected estimate and confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub raw: f64,
    pub method: MethodTag,
    pub scaling: Scaling,
    pub draws: usize,
    pub skipped: usize,
}

impl InferenceResult {
    /// Maps the result through `v -> -v`, used to return from reflected
    /// (upper-tail) computations.
    pub fn negated(&self) -> Self {
        Self {
            point: -self.point,
            lower: -self.upper,
            upper: -self.lower,
            raw: -self.raw,
            ..self.clone()
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_convention() {
        let s = StatisticSample::new((1..=100).rev().map(f64::from).collect(), StatisticKind::SelfNormalized, Origin::Bootstrap, 0, 0).unwrap();
        assert_eq!(s.quantile(0.5), 50.0);
        assert_eq!(s.quantile(0.95), 95.0);
        assert_eq!(s.quantile(0.05), 5.0);
        assert_eq!(s.quantile(0.0), 1.0);
        assert_eq!(s.quantile(1.0), 100.0);
        assert!(StatisticSample::new(vec![1.0], StatisticKind::Canonical, Origin::Analytical, 0, 3).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let s = StatisticSample::new(vec![2.0, 1.0, 3.0], StatisticKind::SelfNormalized, Origin::Subsampling, 9, 1).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"SN\"") && text.contains("\"subsampling\""));
        let back: StatisticSample = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn quantile_is_monotone(v in prop::collection::vec(-1e3f64..1e3, 2..60), p in 0.0f64..1.0, q in 0.0f64..1.0) {
            let s = StatisticSample::new(v, StatisticKind::SelfNormalized, Origin::Bootstrap, 0, 0).unwrap();
            let (a, b) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(s.quantile(a) <= s.quantile(b));
        }
    }
}
