//! Monte Carlo designs and studies checking the approximation theory:
//! EV-versus-normal comparisons for sample quantiles, coverage of
//! confidence intervals, tail-index asymptotics, and the failure of
//! conventionally recentered subsampling.

mod design;
mod ks;
mod studies;

pub use design::{generate, generate_with_rng, Law, SimDesign};
pub use ks::{
    kolmogorov_pvalue, ks_critical_value, ks_one_sample, ks_one_sample_pvalue, ks_two_sample,
    ks_two_sample_critical_value,
};
pub use studies::{
    approximation_quality_study, coverage_study, negative_control_study, tail_index_study, ApproximationRow,
    CoverageMethod, CoverageResult, NegativeControlRow, DECILES,
};
