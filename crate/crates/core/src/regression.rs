//! Least-squares fits used for coefficient extraction and exponent estimation.

use crate::error::{Error, Result};
use serde::Serialize;

/// `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InconclusiveFit(format!("{n} points are too few for a line")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InconclusiveFit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit { slope, intercept, r_squared, slope_stderr, n })
}

/// Fits `ln|y| ≈ ln C + η ln|x|`; `slope` is `η` and `intercept` is `ln C`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::InconclusiveFit("log-log fit needs nonzero finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    linear_fit(&lx, &ly)
}

/// Solution of a two-column linear least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoParamFit {
    pub coefficients: [f64; 2],
    /// Root of the residual sum of squares.
    pub residual: f64,
    pub stderr: [f64; 2],
    /// 2-norm condition number of the design matrix.
    pub condition: f64,
}

/// Largest condition number accepted by [`least_squares_2`].
pub const MAX_CONDITION: f64 = 1e12;

/// Minimizes `Σ (y_i − c0 a_i0 − c1 a_i1)²` through a QR factorization.
pub fn least_squares_2(rows: &[[f64; 2]], y: &[f64]) -> Result<TwoParamFit> {
    let n = rows.len();
    if n != y.len() || n < 2 {
        return Err(Error::InconclusiveFit(format!("{n} samples are too few for two coefficients")));
    }
    let col = |j: usize| rows.iter().map(move |r| r[j]);
    let r11 = col(0).map(|v| v * v).sum::<f64>().sqrt();
    if r11 == 0.0 {
        return Err(Error::IllConditioned { condition: f64::INFINITY });
    }
    let q1: Vec<f64> = col(0).map(|v| v / r11).collect();
    let mut r12: f64 = q1.iter().zip(col(1)).map(|(a, b)| a * b).sum();
    let mut v: Vec<f64> = col(1).zip(&q1).map(|(b, q)| b - r12 * q).collect();
    // One reorthogonalization pass.
    let corr: f64 = q1.iter().zip(&v).map(|(a, b)| a * b).sum();
    r12 += corr;
    v.iter_mut().zip(&q1).for_each(|(b, q)| *b -= corr * q);
    let r22 = v.iter().map(|x| x * x).sum::<f64>().sqrt();

    // Singular values of R = [[r11, r12], [0, r22]].
    let fro2 = r11 * r11 + r12 * r12 + r22 * r22;
    let det = (r11 * r22).abs();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s_max = (0.5 * (fro2 + disc)).sqrt();
    let s_min = if det == 0.0 { 0.0 } else { det / s_max };
    let condition = if s_min == 0.0 { f64::INFINITY } else { s_max / s_min };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }

    let q2: Vec<f64> = v.iter().map(|x| x / r22).collect();
    let b1: f64 = q1.iter().zip(y).map(|(a, b)| a * b).sum();
    let b2: f64 = q2.iter().zip(y).map(|(a, b)| a * b).sum();
    let c1 = b2 / r22;
    let c0 = (b1 - r12 * c1) / r11;

    let sse: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| (yi - c0 * r[0] - c1 * r[1]).powi(2))
        .sum();
    // (RᵀR)⁻¹ = R⁻¹R⁻ᵀ with R⁻¹ = [[1/r11, −r12/(r11 r22)], [0, 1/r22]].
    let sigma2 = if n > 2 { sse / (n - 2) as f64 } else { 0.0 };
    let i11 = 1.0 / (r11 * r11) + (r12 / (r11 * r22)).powi(2);
    let i22 = 1.0 / (r22 * r22);
    Ok(TwoParamFit {
        coefficients: [c0, c1],
        residual: sse.sqrt(),
        stderr: [(sigma2 * i11).sqrt(), (sigma2 * i22).sqrt()],
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-15);
        assert!((fit.intercept - 3.0).abs() < 1e-14);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn power_law_exponent() {
        let x: Vec<f64> = (0..8).map(|i| 1e-6 * 10f64.powf(i as f64 * 3.0 / 7.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v.powf(1.0 / 6.0)).collect();
        let fit = log_log_fit(&x, &y).unwrap();
        assert!((fit.slope - 1.0 / 6.0).abs() < 1e-12);
        assert!((fit.intercept.exp() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn quadratic_and_quartic() {
        let r: Vec<f64> = (0..8).map(|i| 0.05 + 0.025 * i as f64).collect();
        let rows: Vec<[f64; 2]> = r.iter().map(|v| [v * v, v.powi(4)]).collect();
        let y: Vec<f64> = r.iter().map(|v| 0.02 * v * v - 0.0375 * v.powi(4)).collect();
        let fit = least_squares_2(&rows, &y).unwrap();
        assert!((fit.coefficients[0] - 0.02).abs() < 1e-14);
        assert!((fit.coefficients[1] + 0.0375).abs() < 1e-12);
        assert!(fit.residual < 1e-15);
    }

    #[test]
    fn zero_samples_give_zero_fit() {
        let rows: Vec<[f64; 2]> = [0.02, 0.04, 0.06, 0.1].iter().map(|v: &f64| [v * v, v.powi(4)]).collect();
        let fit = least_squares_2(&rows, &[0.0; 4]).unwrap();
        assert_eq!(fit.coefficients, [0.0, 0.0]);
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let rows = [[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let r = least_squares_2(&rows, &[1.0, 2.0, 3.0]);
        assert!(matches!(r, Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn noisy_fit_reports_standard_errors() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let rows: Vec<[f64; 2]> = x.iter().map(|v| [1.0, *v]).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 1.0 + 2.0 * v + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let fit = least_squares_2(&rows, &y).unwrap();
        let line = linear_fit(&x, &y).unwrap();
        assert!((fit.coefficients[1] - line.slope).abs() < 1e-12);
        assert!((fit.stderr[1] - line.slope_stderr).abs() < 1e-12);
        assert!(fit.stderr[1] > 0.0);
    }
}
