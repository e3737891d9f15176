//! Multiple linear regression by ordinary least squares.
//!
//! Predictors are centred and scaled to unit norm before the normal
//! equations are formed; coefficients are reported on the original scale.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::error::{Error, Result};

/// Pivots below this (on the unit-diagonal Gram matrix) mean rank deficiency.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    /// Intercept first, then one per predictor.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub r_squared: f64,
    pub f_statistic: Option<f64>,
    pub f_p_value: Option<f64>,
    pub residual_df: usize,
    pub observations: usize,
}

impl RegressionResult {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coefficients[0] + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Inverts a symmetric positive semi-definite matrix by Gauss-Jordan with
/// partial pivoting.
fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let p = a.len();
    let mut inv: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularDesign(format!(
                "predictor {} is a linear combination of the others",
                col + 1
            )));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for j in 0..p {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for j in 0..p {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Fits `y = b0 + X b`. `x` holds one row per observation.
pub fn ols_regression(y: &[f64], x: &[Vec<f64>]) -> Result<RegressionResult> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::argument(format!("{} responses but {} predictor rows", n, x.len())));
    }
    let k = x.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::argument("at least one predictor is required"));
    }
    if x.iter().any(|r| r.len() != k) {
        return Err(Error::argument("predictor rows differ in length"));
    }
    if n < k + 1 {
        return Err(Error::argument(format!("{n} observations for {} coefficients", k + 1)));
    }
    if y.iter().chain(x.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::argument("non-finite value in regression data"));
    }

    let nf = n as f64;
    let x_mean: Vec<f64> = (0..k).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let scale: Vec<f64> = (0..k)
        .map(|j| x.iter().map(|r| (r[j] - x_mean[j]).powi(2)).sum::<f64>().sqrt())
        .collect();
    for (j, &s) in scale.iter().enumerate() {
        let tol = 1e-12 * x_mean[j].abs().max(1.0) * nf.sqrt();
        if s <= tol {
            return Err(Error::SingularDesign(format!("predictor {} is constant", j + 1)));
        }
    }
    let z = |i: usize, j: usize| (x[i][j] - x_mean[j]) / scale[j];

    let mut gram = vec![vec![0.0; k]; k];
    let mut zty = vec![0.0; k];
    for i in 0..n {
        let dy = y[i] - y_mean;
        for a in 0..k {
            let za = z(i, a);
            zty[a] += za * dy;
            for b in a..k {
                gram[a][b] += za * z(i, b);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }
    let inv = invert(gram)?;
    let gamma: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * zty[b]).sum()).collect();
    let slopes: Vec<f64> = (0..k).map(|j| gamma[j] / scale[j]).collect();
    let intercept = y_mean - slopes.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();

    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..n {
        let fit = y_mean + (0..k).map(|j| gamma[j] * z(i, j)).sum::<f64>();
        sse += (y[i] - fit).powi(2);
        sst += (y[i] - y_mean).powi(2);
    }
    let r_squared = if sst == 0.0 { 1.0 } else { (1.0 - sse / sst).clamp(0.0, 1.0) };

    let df_res = n - k - 1;
    let mut coefficients = vec![intercept];
    coefficients.extend(&slopes);
    let (std_errors, p_values, f_statistic, f_p_value) = if df_res == 0 {
        (vec![None; k + 1], vec![None; k + 1], None, None)
    } else {
        let sigma2 = sse / df_res as f64;
        let cov = |a: usize, b: usize| sigma2 * inv[a][b] / (scale[a] * scale[b]);
        let mut var0 = sigma2 / nf;
        for a in 0..k {
            for b in 0..k {
                var0 += x_mean[a] * x_mean[b] * cov(a, b);
            }
        }
        let mut se = vec![var0.max(0.0).sqrt()];
        se.extend((0..k).map(|j| cov(j, j).max(0.0).sqrt()));
        let t = StudentsT::new(0.0, 1.0, df_res as f64)
            .map_err(|e| Error::argument(format!("t distribution: {e}")))?;
        let p: Vec<Option<f64>> = coefficients
            .iter()
            .zip(&se)
            .map(|(&b, &s)| {
                Some(if s == 0.0 {
                    if b == 0.0 { 1.0 } else { 0.0 }
                } else {
                    (2.0 * t.sf((b / s).abs())).clamp(0.0, 1.0)
                })
            })
            .collect();
        let ssr = (sst - sse).max(0.0);
        let (f, fp) = if sse == 0.0 {
            if ssr == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) }
        } else {
            let f = (ssr / k as f64) / sigma2;
            let dist = FisherSnedecor::new(k as f64, df_res as f64)
                .map_err(|e| Error::argument(format!("F distribution: {e}")))?;
            (f, dist.sf(f).clamp(0.0, 1.0))
        };
        (se.into_iter().map(Some).collect(), p, Some(f), Some(fp))
    };

    Ok(RegressionResult {
        coefficients,
        std_errors,
        p_values,
        r_squared,
        f_statistic,
        f_p_value,
        residual_df: df_res,
        observations: n,
    })
}
