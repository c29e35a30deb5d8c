//! Small-argument safe versions of the power expressions that appear in the
//! tail formulas. All of them are continuous at `xi = 0`.

/// Threshold below which first-order series replace the exact expressions.
pub(crate) const XI_SERIES_THRESHOLD: f64 = 1e-6;

/// `m^(-xi) - 1`, evaluated through `expm1` and a series near zero.
pub(crate) fn pow_minus_one(m: f64, xi: f64) -> f64 {
    let lm = m.ln();
    if xi.abs() < XI_SERIES_THRESHOLD {
        let x = -xi * lm;
        x * (1.0 + 0.5 * x)
    } else {
        (-xi * lm).exp_m1()
    }
}

/// `(a^(-xi) - 1) / (b^(-xi) - 1)`; tends to `ln a / ln b` as `xi -> 0`.
pub(crate) fn power_ratio(a: f64, b: f64, xi: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    if xi.abs() < XI_SERIES_THRESHOLD {
        // expm1(x)/expm1(y) = (x/y)(1 + (x - y)/2 + O(xi^2))
        (la / lb) * (1.0 - 0.5 * xi * (la - lb))
    } else {
        (-xi * la).exp_m1() / (-xi * lb).exp_m1()
    }
}

/// `(e^(-xi) - 1) / (-xi)` written in terms of `ln e`; tends to `ln e`.
pub(crate) fn gev_transform_log(log_e: f64, xi: f64) -> f64 {
    if xi.abs() < XI_SERIES_THRESHOLD {
        log_e * (1.0 - 0.5 * xi * log_e)
    } else {
        -(-xi * log_e).exp_m1() / xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_branches_are_continuous() {
        let above = XI_SERIES_THRESHOLD * (1.0 + 1e-9);
        let below = XI_SERIES_THRESHOLD * (1.0 - 1e-9);
        for &(a, b) in &[(0.1, 2.0), (0.01, 0.5), (3.0, 2.0)] {
            let exact = power_ratio(a, b, above);
            let series = power_ratio(a, b, below);
            assert!((exact - series).abs() < 1e-10 * exact.abs(), "{exact} vs {series}");
        }
        assert!((pow_minus_one(2.0, above) - pow_minus_one(2.0, below)).abs() < 1e-14);
        assert!((gev_transform_log(1.3, above) - gev_transform_log(1.3, below)).abs() < 1e-12);
        assert_eq!(power_ratio(0.1, 2.0, 0.0), 0.1f64.ln() / 2f64.ln());
    }

    #[test]
    fn exact_branches() {
        assert!((pow_minus_one(2.0, 1.0) + 0.5).abs() < 1e-15);
        assert!((power_ratio(0.1, 2.0, 1.0) - (10.0 - 1.0) / (0.5 - 1.0)).abs() < 1e-12);
        // (e^{-1} - 1)/(-1) with e = 2: (0.5 - 1)/(-1) = 0.5
        assert!((gev_transform_log(2f64.ln(), 1.0) - 0.5).abs() < 1e-15);
    }
}
