//! Small shared numerics: stable log-sum-exp and least-squares line fits.

/// log(Σ e^{x_i}) with the usual max shift; −∞ for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Least-squares line `y ≈ slope·x + intercept`.
///
/// Returns `(slope, intercept, rms_residual)`; requires at least two
/// distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    assert!(sxx > 0.0, "abscissae are all identical");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        ss += r * r;
    }
    (slope, intercept, (ss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_direct_sum() {
        let xs: [f64; 3] = [0.1, -2.0, 3.5];
        let direct: f64 = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - direct).abs() < 1e-14);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        // huge shifts stay finite
        let big = [1000.0, 1000.0 + (2.0f64).ln()];
        assert!((logsumexp(&big) - (1000.0 + (3.0f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, b, r) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14);
        assert!((b - 1.0).abs() < 1e-14);
        assert!(r < 1e-14);
    }
}
