use crate::error::{PdmpError, Result};
use crate::model::validate::irreducible;

/// Stationary law `nu` of a constant generator: `nu Q = 0`, `sum nu = 1`.
///
/// Two states use `(q21, q12) / (q12 + q21)`; larger chains use
/// Grassmann-Taksar-Heyman elimination, which only touches off-diagonal
/// rates and so never cancels.
pub fn stationary_switch(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n0 = q.len();
    if n0 == 0 || q.iter().any(|r| r.len() != n0) {
        return Err(PdmpError::InvalidModel("rate matrix must be square and non-empty".into()));
    }
    for (k, row) in q.iter().enumerate() {
        let scale = row.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if row.iter().sum::<f64>().abs() > 1e-12 * scale {
            return Err(PdmpError::InvalidModel(format!("row {} of the rate matrix does not sum to zero", k + 1)));
        }
        if row.iter().enumerate().any(|(l, &v)| l != k && !(v >= 0.0)) {
            return Err(PdmpError::InvalidModel(format!("row {} has a negative off-diagonal rate", k + 1)));
        }
    }
    if n0 == 1 {
        return Ok(vec![1.0]);
    }
    if !irreducible(q) {
        return Err(PdmpError::Reducible);
    }
    if n0 == 2 {
        let s = q[0][1] + q[1][0];
        return Ok(vec![q[1][0] / s, q[0][1] / s]);
    }
    let mut p: Vec<Vec<f64>> = q.to_vec();
    for m in (1..n0).rev() {
        let s: f64 = (0..m).map(|j| p[m][j]).sum();
        for i in 0..m {
            let pim = p[i][m];
            for j in 0..m {
                if i != j {
                    p[i][j] += pim * p[m][j] / s;
                }
            }
        }
    }
    let mut nu = vec![0.0; n0];
    nu[0] = 1.0;
    for j in 1..n0 {
        let s: f64 = (0..j).map(|k| p[j][k]).sum();
        nu[j] = (0..j).map(|i| nu[i] * p[i][j]).sum::<f64>() / s;
    }
    let total: f64 = nu.iter().sum();
    Ok(nu.into_iter().map(|v| v / total).collect())
}

/// `nu Q` residual, max norm.
pub fn stationary_residual(q: &[Vec<f64>], nu: &[f64]) -> f64 {
    (0..q.len()).map(|l| (0..q.len()).map(|k| nu[k] * q[k][l]).sum::<f64>().abs()).fold(0.0, f64::max)
}
