//! Small statistics helpers: L2 norms with jackknife standard errors,
//! moment-based shape statistics, and log-log slope fits.

/// Sample mean and (n-1)-normalized variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// sqrt(mean of squares) with a leave-one-out jackknife standard error.
pub fn l2_with_jackknife_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let nf = n as f64;
    let total: f64 = xs.iter().map(|x| x * x).sum();
    let l2 = (total / nf).sqrt();
    if n < 3 {
        return (l2, f64::NAN);
    }
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| ((total - x * x) / (nf - 1.0)).max(0.0).sqrt())
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / nf;
    let ss: f64 = loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).sum();
    (l2, ((nf - 1.0) / nf * ss).sqrt())
}

/// Central-moment skewness and excess kurtosis with their normal-theory
/// standard errors.
pub struct ShapeStats {
    pub mean: f64,
    pub var: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub se_skewness: f64,
    pub se_kurtosis: f64,
}

pub fn shape_stats(xs: &[f64]) -> ShapeStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let se_skew = (6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0))).sqrt();
    let se_kurt = 2.0 * se_skew * ((n * n - 1.0) / ((n - 3.0) * (n + 5.0))).sqrt();
    ShapeStats {
        mean,
        var: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        se_skewness: se_skew,
        se_kurtosis: se_kurt,
    }
}

/// Least-squares line fit with a slope standard error and a 2-sigma
/// confidence half-width.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub half_width: f64,
}

pub fn slope_fit(xs: &[f64], ys: &[f64]) -> SlopeFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        let r = y - (intercept + slope * x);
        ssr += r * r;
    }
    let dof = (n - 2.0).max(1.0);
    let slope_se = (ssr / dof / sxx).sqrt();
    SlopeFit {
        slope,
        intercept,
        slope_se,
        half_width: 2.0 * slope_se,
    }
}

/// Checks that `values` (ordered from largest h to smallest) decrease
/// monotonically, allowing `slack` standard errors of headroom per step.
pub fn monotone_decreasing_with_slack(values: &[f64], ses: &[f64], slack: f64) -> bool {
    values
        .windows(2)
        .zip(ses.iter().skip(1))
        .all(|(w, &se)| w[1] <= w[0] + slack * se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn l2_of_constants() {
        let xs = vec![2.0; 50];
        let (l2, se) = l2_with_jackknife_se(&xs);
        assert_relative_eq!(l2, 2.0, max_relative = 1e-14);
        assert!(se.abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.4 * x).collect();
        let fit = slope_fit(&xs, &ys);
        assert_relative_eq!(fit.slope, -0.4, max_relative = 1e-12);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn shape_of_symmetric_sample() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64) - 499.5) / 288.0).collect();
        let s = shape_stats(&xs);
        assert!(s.skewness.abs() < 1e-12);
        // uniform distribution: excess kurtosis -1.2
        assert_relative_eq!(s.excess_kurtosis, -1.2, max_relative = 0.01);
    }

    #[test]
    fn monotonicity_with_slack() {
        let values = [5.0, 4.0, 4.05, 3.0];
        let ses = [0.1, 0.1, 0.1, 0.1];
        assert!(monotone_decreasing_with_slack(&values, &ses, 1.0));
        assert!(!monotone_decreasing_with_slack(&values, &ses, 0.1));
    }
}
