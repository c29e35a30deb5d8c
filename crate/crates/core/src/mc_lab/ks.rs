//! Kolmogorov-Smirnov statistics with the asymptotic Kolmogorov law.

/// `sup |F_n - F|` for the sample against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// `sup |F_n - G_m|` between two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Survival function of the Kolmogorov law, `2 sum (-1)^(j-1) exp(-2 j^2 x^2)`.
pub fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of the one-sample statistic with the small-sample correction
/// `(sqrt(n) + 0.12 + 0.11/sqrt(n)) D`.
pub fn ks_one_sample_pvalue(d: f64, n: usize) -> f64 {
    let r = (n as f64).sqrt();
    kolmogorov_pvalue((r + 0.12 + 0.11 / r) * d)
}

fn kolmogorov_critical(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic one-sample critical value `c(alpha)/sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    kolmogorov_critical(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample critical value `c(alpha) sqrt((n + m)/(n m))`.
pub fn ks_two_sample_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_critical(alpha) * ((n + m) / (n * m)).sqrt()
}
