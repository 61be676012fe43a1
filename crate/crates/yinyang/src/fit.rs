//! Least-squares line fits for the power-law slope tests.

/// Result of a straight-line fit y = slope*x + intercept.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub slope_stderr: f64,
    /// Half-width of the 95% confidence interval on the slope
    /// (normal approximation, 1.96 sigma).
    pub slope_ci95: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2, "need at least two points to fit a line");
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        sse += r * r;
    }
    let stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        slope_stderr: stderr,
        slope_ci95: 1.96 * stderr,
    }
}

/// Slope of log|y| vs log x; pairs with y below `floor` are dropped so that
/// residuals at roundoff level do not pollute the regression.
pub fn log_log_slope(xs: &[f64], ys: &[f64], floor: f64) -> LineFit {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let a = y.abs();
        if x > 0.0 && a > floor {
            lx.push(x.ln());
            ly.push(a.ln());
        }
    }
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [0.5, 2.5, 4.5, 6.5];
        let f = fit_line(&xs, &ys);
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, -1.5, epsilon = 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn power_law_slope() {
        let xs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-2.5)).collect();
        let f = log_log_slope(&xs, &ys, 0.0);
        assert_abs_diff_eq!(f.slope, -2.5, epsilon = 1e-10);
    }
}
