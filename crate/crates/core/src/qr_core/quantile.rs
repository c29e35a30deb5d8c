use crate::error::{Error, Result};

/// Asymmetric absolute deviation `(tau - 1{u < 0}) u`.
pub fn check_loss(u: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if !u.is_finite() {
        return Err(Error::domain(format!("residual must be finite, got {u}")));
    }
    Ok(rho(u, tau))
}

#[inline]
pub(crate) fn rho(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile index must lie in (0, 1), got {tau}")))
    }
}

/// One-based order index used for the sample tau-quantile of `n` points.
///
/// This is `max(1, ceil(tau n))`, the smallest minimizer of the check-loss sum.
/// At integer `tau n` the minimizers form the segment between the `tau n`-th
/// and the next order statistic; the lower endpoint is reported, which is also
/// the vertex the regression solver selects.
pub fn order_index(tau: f64, n: usize) -> usize {
    // The offset absorbs representation error in products like 0.05 * 100.
    let s = (tau * n as f64 - 1e-9).ceil();
    (s.max(1.0) as usize).min(n.max(1))
}

/// Sample tau-quantile as an order statistic (no interpolation).
pub fn sample_quantile(y: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if y.is_empty() {
        return Err(Error::domain("sample quantile of an empty vector"));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite observation {bad}")));
    }
    let s = order_index(tau, y.len());
    if tau * (y.len() as f64) < 1.0 {
        log::warn!(
            "tau*T = {:.3} < 1: returning the sample minimum; consider extrapolation",
            tau * y.len() as f64
        );
    }
    let mut v = y.to_vec();
    let (_, nth, _) = v.select_nth_unstable_by(s - 1, f64::total_cmp);
    Ok(*nth)
}

/// Same convention as [`sample_quantile`] on data already sorted ascending.
pub fn sample_quantile_sorted(sorted: &[f64], tau: f64) -> f64 {
    sorted[order_index(tau, sorted.len()) - 1]
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn check_loss_examples() {
        assert_eq!(check_loss(2.0, 0.5).unwrap(), 1.0);
        assert!((check_loss(-1.0, 0.1).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(check_loss(0.0, 0.37).unwrap(), 0.0);
        assert!(check_loss(f64::NAN, 0.5).is_err());
        assert!(check_loss(1.0, 1.0).is_err());
        assert!(check_loss(1.0, 0.0).is_err());
    }

    #[test]
    fn sample_quantile_examples() {
        assert_eq!(sample_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(sample_quantile(&[3.0, 1.0, 2.0], 1.0 / 3.0).unwrap(), 1.0);
        assert_eq!(sample_quantile(&[1.0, 2.0, 9.0], 0.5).unwrap(), 2.0);
        assert_eq!(sample_quantile(&[5.0, 4.0], 0.01).unwrap(), 4.0);
        assert!(sample_quantile(&[], 0.5).is_err());
        assert!(sample_quantile(&[1.0, f64::INFINITY], 0.5).is_err());
    }

    fn loss_sum(y: &[f64], tau: f64, b: f64) -> f64 {
        y.iter().map(|&v| rho(v - b, tau)).sum()
    }

    #[test]
    fn seven_point_sample_is_smallest_brute_force_minimizer() {
        let y = [0.83, -1.27, 2.41, 0.05, -0.66, 1.19, -2.02];
        let tau = 0.3;
        let mut sorted = y.to_vec();
        sorted.sort_by(f64::total_cmp);
        let losses: Vec<f64> = sorted.iter().map(|&b| loss_sum(&y, tau, b)).collect();
        let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmin = sorted[losses.iter().position(|&l| l <= best + 1e-12).unwrap()];
        assert_eq!(sample_quantile(&y, tau).unwrap(), argmin);
    }

    #[test]
    fn type7_matches_linear_interpolation() {
        let s = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(quantile_type7(&s, 0.0), 1.0);
        assert_eq!(quantile_type7(&s, 1.0), 8.0);
        assert!((quantile_type7(&s, 0.5) - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn check_loss_is_convex(u in -1e3f64..1e3, v in -1e3f64..1e3, l in 0.0f64..1.0, tau in 0.01f64..0.99) {
            let lhs = rho(l * u + (1.0 - l) * v, tau);
            let rhs = l * rho(u, tau) + (1.0 - l) * rho(v, tau);
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn check_loss_nonnegative_zero_iff_zero(u in -1e6f64..1e6, tau in 0.001f64..0.999) {
            let r = check_loss(u, tau).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, u == 0.0);
        }

        #[test]
        fn sample_quantile_minimizes_check_loss(y in prop::collection::vec(-100f64..100.0, 1..40), tau in 0.01f64..0.99) {
            let q = sample_quantile(&y, tau).unwrap();
            let lq = loss_sum(&y, tau, q);
            for &c in &y {
                prop_assert!(lq <= loss_sum(&y, tau, c) + 1e-9 * (1.0 + lq));
            }
        }
    }
}
