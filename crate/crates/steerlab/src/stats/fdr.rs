//! Benjamini-Hochberg step-up FDR adjustment.

use crate::error::{Error, Result};

/// Convert p-values to q-values within one family:
/// `q_(i) = min_{j >= i} (m * p_(j) / j)`, capped at 1, mapped back to the
/// input order. Order-preserving in p.
pub fn bh_fdr(p_values: &[f64]) -> Result<Vec<f64>> {
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidP(p));
        }
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).expect("no NaN"));

    let mut q = vec![0.0; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = (m as f64) * p_values[idx] / (rank as f64 + 1.0);
        running_min = running_min.min(candidate).min(1.0);
        q[idx] = running_min;
    }
    Ok(q)
}
