//! Sample quantiles and quantile regression by check-loss minimization.

mod dataset;
mod fit;
mod interior;
mod kernel_se;
mod quantile;
pub(crate) mod simplex;

pub use dataset::Dataset;
pub(crate) use dataset::dot as dataset_dot;
pub use fit::{fit_qr, fit_qr_process, fit_qr_with, FitOptions, QuantileFit, SolverChoice, SolverKind};
pub use kernel_se::{hall_sheather_bandwidth, powell_covariance, powell_standard_errors};
pub use quantile::{check_loss, order_index, quantile_type7, sample_quantile, sample_quantile_sorted};

/// Samples larger than this are solved by the interior-point method followed
/// by a simplex crossover to the optimal vertex.
pub const SIMPLEX_MAX_T: usize = 5000;
