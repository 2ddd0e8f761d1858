use crate::conv_dict::ConvDictionary;

/// Relative floor on `|R_jj|` below which a support is treated as singular.
pub(crate) const SINGULAR_TOL: f64 = 1e-10;

/// Least-squares coefficients of `signal` on the columns `support` of `D`.
///
/// Returns `None` when the support submatrix is numerically rank-deficient.
pub fn least_squares_on_support(
    dict: &ConvDictionary,
    support: &[usize],
    signal: &[f64],
) -> Option<Vec<f64>> {
    if support.is_empty() {
        return Some(Vec::new());
    }
    if support.len() > dict.signal_len() {
        return None;
    }
    let sub = dict.submatrix(support);
    let qr = sub.qr();
    let r = qr.r();
    let diag = r.diagonal().abs();
    // Atoms have unit norm, so |R_jj| is the distance of column j from the span of the earlier ones.
    if diag.min() < SINGULAR_TOL * diag.max().max(1.0) {
        return None;
    }
    let rhs = qr.q().transpose() * nalgebra::DVector::from_column_slice(signal);
    let sol = r.solve_upper_triangular(&rhs)?;
    Some(sol.iter().copied().collect())
}
