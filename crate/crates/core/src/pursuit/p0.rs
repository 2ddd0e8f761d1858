use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{CscError, Result};

/// Column limit for [`p0_bruteforce`].
pub const P0_COLUMN_GUARD: usize = 20;

const FIT_TOL: f64 = 1e-9;

/// Sparsest exact representation `min ‖Γ‖0 s.t. DΓ = X`, by exhaustive search.
///
/// Supports are tried by ascending cardinality in lexicographic order; the first
/// full-rank support whose least-squares fit leaves a residual below `1e-9`
/// wins. Rank-deficient supports are skipped: any signal they span is spanned by
/// an independent subset that was tried earlier.
pub fn p0_bruteforce(dense: &DMatrix<f64>, signal: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = dense.shape();
    if cols > P0_COLUMN_GUARD {
        return Err(CscError::Capacity(format!(
            "P0 enumeration limited to {P0_COLUMN_GUARD} columns, got {cols}"
        )));
    }
    if signal.len() != rows {
        return Err(CscError::Dimension(format!(
            "signal of length {} for a matrix with {rows} rows",
            signal.len()
        )));
    }
    let x = DVector::from_column_slice(signal);
    if x.norm() <= FIT_TOL {
        return Ok(vec![0.0; cols]);
    }
    for k in 1..=rows.min(cols) {
        for support in (0..cols).combinations(k) {
            let sub = dense.select_columns(&support);
            let svd = sub.clone().svd(true, true);
            if svd.singular_values.min() < 1e-10 * svd.singular_values.max() {
                continue;
            }
            let Ok(coef) = svd.solve(&x, 0.0) else { continue };
            if (&sub * &coef - &x).norm() < FIT_TOL {
                let mut out = vec![0.0; cols];
                for (&j, &c) in support.iter().zip(coef.iter()) {
                    out[j] = c;
                }
                return Ok(out);
            }
        }
    }
    Err(CscError::NoSolution)
}
