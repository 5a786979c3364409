use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A design centered and scaled to unit second moment, with the response
/// centered. Constant columns become all-zero and keep a scale of zero.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
}

impl Standardized {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let cols: Vec<usize> = (0..x.ncols()).collect();
        Self::from_columns(x, y, &cols)
    }

    /// Standardizes only the listed columns, in the given order.
    pub fn from_columns(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> Result<Self> {
        let n = x.nrows();
        if n == 0 || y.len() != n {
            return Err(Error::InvalidData(format!(
                "design has {n} rows but response has {}",
                y.len()
            )));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidData("response contains non-finite values".into()));
        }
        let nf = n as f64;
        let mut out = DMatrix::zeros(n, cols.len());
        let mut x_mean = Vec::with_capacity(cols.len());
        let mut x_scale = Vec::with_capacity(cols.len());
        for (k, &j) in cols.iter().enumerate() {
            if j >= x.ncols() {
                return Err(Error::InvalidArgument(format!("column {j} out of range")));
            }
            let col = x.column(j);
            if !col.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidData(format!("column {j} contains non-finite values")));
            }
            let mean = col.sum() / nf;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
            let scale = var.sqrt();
            // Anything this flat relative to its level is numerically constant.
            let scale = if scale <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) { 0.0 } else { scale };
            if scale > 0.0 {
                for (dst, src) in out.column_mut(k).iter_mut().zip(col.iter()) {
                    *dst = (src - mean) / scale;
                }
            }
            x_mean.push(mean);
            x_scale.push(scale);
        }
        let y_mean = y.sum() / nf;
        let yc = y.map(|v| v - y_mean);
        Ok(Standardized {
            x: out,
            y: yc,
            x_mean,
            x_scale,
            y_mean,
        })
    }

    /// Converts standardized coefficients back to the original column scale,
    /// returning `(intercept, slopes)`.
    pub fn to_original(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = beta
            .iter()
            .zip(&self.x_scale)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        let intercept = self.y_mean
            - slopes
                .iter()
                .zip(&self.x_mean)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        (intercept, slopes)
    }
}
