use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Continuous,
    /// Indicator regressor equal to one on the given share of the sample.
    SparseIndicator(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "EV")]
    ExtremeValue,
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "both")]
    Both,
}

/// Rule of thumb on the dimension-adjusted order `min(tau, 1 - tau) T / d`
/// (or `min(tau, 1 - tau) T share` for a sparse indicator): EV inference up
/// to 15, both methods up to 30, normal inference above.
pub fn regime_recommendation(tau: f64, n: usize, d: usize, kind: DesignKind) -> Regime {
    let k = tau.min(1.0 - tau) * n as f64;
    let order = match kind {
        DesignKind::Continuous => k / d.max(1) as f64,
        DesignKind::SparseIndicator(share) => k * share,
    };
    if order <= 15.0 {
        Regime::ExtremeValue
    } else if order <= 30.0 {
        Regime::Both
    } else {
        Regime::Normal
    }
}
