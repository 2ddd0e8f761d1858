use crate::conv_dict::{l2, ConvDictionary};
use crate::error::{CscError, Result};

use super::lstsq::SINGULAR_TOL;
use super::PursuitResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpParams {
    /// Maximum number of selected atoms; at most `mN`.
    pub max_iters: usize,
    /// Stop once `‖residual‖2 ≤ res_tol`.
    pub res_tol: f64,
}

/// Orthogonal matching pursuit on the global dictionary.
///
/// Each step picks the unselected atom with the largest `|⟨d_j, r⟩|` (ties go
/// to the lowest column index), extends a Gram-Schmidt QR factorization of the
/// selected atoms (two orthogonalization passes), and projects the residual
/// onto the orthogonal complement of the new basis vector.
pub fn omp(dict: &ConvDictionary, signal: &[f64], params: OmpParams) -> Result<PursuitResult> {
    let len = dict.signal_len();
    if signal.len() != len {
        return Err(CscError::Dimension(format!(
            "signal of length {} does not match N={len}",
            signal.len()
        )));
    }
    if params.max_iters > dict.num_atoms() {
        return Err(CscError::Invalid(format!(
            "max_iters {} exceeds the {} atoms",
            params.max_iters,
            dict.num_atoms()
        )));
    }

    let mut residual = signal.to_vec();
    let mut selected: Vec<usize> = Vec::new();
    let mut chosen = vec![false; dict.num_atoms()];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    // Columns of the upper-triangular factor: r_cols[k][i] = R[i, k].
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![l2(&residual)];

    while selected.len() < params.max_iters && *history.last().unwrap() > params.res_tol {
        let corr = dict.adjoint_slice(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if chosen[j] {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((atom, score)) = best else { break };
        if score == 0.0 {
            break;
        }

        let column = dict.column(atom);
        let mut w = column.clone();
        let mut coeffs = vec![0.0; basis.len()];
        for _ in 0..2 {
            for (k, q) in basis.iter().enumerate() {
                let p = dot(q, &w);
                coeffs[k] += p;
                axpy(-p, q, &mut w);
            }
        }
        let diag = l2(&w);
        if diag < SINGULAR_TOL {
            return Err(CscError::SingularSupport { atom });
        }
        w.iter_mut().for_each(|v| *v /= diag);
        let proj = dot(&w, &residual);
        axpy(-proj, &w, &mut residual);

        coeffs.push(diag);
        r_cols.push(coeffs);
        basis.push(w);
        selected.push(atom);
        chosen[atom] = true;
        history.push(l2(&residual));
    }

    // Back substitution R c = Qᵀ X.
    let k = selected.len();
    let qtx: Vec<f64> = basis.iter().map(|q| dot(q, signal)).collect();
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = qtx[i];
        for (j, c) in coef.iter().enumerate().skip(i + 1) {
            acc -= r_cols[j][i] * c;
        }
        coef[i] = acc / r_cols[i][i];
    }

    let mut code = vec![0.0; dict.num_atoms()];
    for (&j, &c) in selected.iter().zip(&coef) {
        code[j] = c;
    }
    let mut support = selected;
    support.sort_unstable();
    let iterations = support.len();
    let mut result = PursuitResult::finish(dict, signal, code, support, iterations, false, history);
    result.converged = result.residual_norm <= params.res_tol;
    Ok(result)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
