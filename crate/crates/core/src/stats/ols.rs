use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::student_t_sf;
use crate::error::{Error, Result};

/// Relative pivot size below which a QR column counts as dependent.
const RANK_TOL: f64 = 1e-10;
/// Auxiliary R² at or above this is reported as infinite VIF.
const PERFECT_FIT: f64 = 1.0 - 1e-12;

/// Least-squares fit with an intercept. Index 0 of every per-coefficient
/// vector is the intercept; index j + 1 is predictor column j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    pub df_resid: usize,
    pub sigma2: f64,
    pub residuals: Vec<f64>,
}

/// Fits `y ~ 1 + columns` by Householder QR.
///
/// Standard errors come from s²(XᵀX)⁻¹ with s² = SSE / (n − p − 1).
pub fn ols_fit(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit> {
    let n = y.len();
    let p = columns.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::WidthMismatch {
            expected: n,
            got: c.len(),
        });
    }
    if n <= p + 1 {
        return Err(Error::insufficient(format!(
            "OLS with {p} predictors needs n > {}, got {n}",
            p + 1
        )));
    }
    let k = p + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    if let Some(j) = first_dependent(&x, &r) {
        let column = if j == 0 {
            "intercept".to_string()
        } else {
            format!("predictor {}", j - 1)
        };
        return Err(Error::SingularDesign { column });
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign {
            column: "design".into(),
        })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::SingularDesign {
            column: "design".into(),
        })?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::insufficient("dependent variable is constant"));
    }
    let df_resid = n - k;
    let sigma2 = sse / df_resid as f64;
    let r2 = 1.0 - sse / sst;
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df_resid as f64;

    let mut std_errors = Vec::with_capacity(k);
    let mut t_values = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for j in 0..k {
        let se = (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt();
        let b = beta[j];
        let t = if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(student_t_sf(t, df_resid as u32)?);
    }

    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        t_values,
        p_values,
        r2,
        adj_r2,
        n,
        df_resid,
        sigma2,
        residuals,
    })
}

fn first_dependent(x: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<usize> {
    (0..x.ncols()).find(|&j| {
        let norm = x.column(j).norm();
        norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm
    })
}

/// Drops columns that are linear combinations of the intercept and earlier columns.
fn independent_columns<'a>(columns: Vec<&'a [f64]>) -> Vec<&'a [f64]> {
    let mut cols = columns;
    loop {
        if cols.is_empty() {
            return cols;
        }
        let n = cols[0].len();
        let x = DMatrix::from_fn(n, cols.len() + 1, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
        let r = x.clone().qr().r();
        match first_dependent(&x, &r) {
            Some(j) if j > 0 => {
                cols.remove(j - 1);
            }
            _ => return cols,
        }
    }
}

/// Variance inflation factor of each column against all others
/// (auxiliary regressions include an intercept). Perfect collinearity
/// yields `f64::INFINITY`.
pub fn vif(columns: &[&[f64]]) -> Result<Vec<f64>> {
    let p = columns.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let n = columns[0].len();
    if n <= p {
        return Err(Error::insufficient(format!("VIF over {p} columns needs n > {p}, got {n}")));
    }
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let others: Vec<&[f64]> = columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, c)| *c)
            .collect();
        let target = columns[j];
        let mean = target.iter().sum::<f64>() / n as f64;
        if target.iter().all(|v| *v == mean) {
            out.push(f64::INFINITY);
            continue;
        }
        let others = independent_columns(others);
        if others.is_empty() {
            out.push(1.0);
            continue;
        }
        match ols_fit(&others, target) {
            Ok(fit) if fit.r2 < PERFECT_FIT => out.push(1.0 / (1.0 - fit.r2)),
            Ok(_) | Err(Error::SingularDesign { .. }) => out.push(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
