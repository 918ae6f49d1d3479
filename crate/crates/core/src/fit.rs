//! Least-squares line fits used for rates and convergence orders.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Fit of `log y` against `log x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Fit of `log y` against `x`; the decay rate is `-slope`.
pub fn exponential_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(xs, &ly)
}
