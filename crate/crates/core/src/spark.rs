//! Brute-force Spark and Stripe-Spark, Gershgorin eigenvalue brackets, and
//! uniqueness certification.
//!
//! Both spark searches are exponential and are guarded by column-count limits.
//! The `_unguarded` variants skip the guard.

use itertools::Itertools;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::conv_dict::{ConvDictionary, SparseCode, DENSE_ELEMENT_CAP};
use crate::error::{CscError, Result};
use crate::measures::{l0_inf, l0_inf_of_support, mutual_coherence};

/// Column limit for [`spark_bruteforce`].
pub const SPARK_COLUMN_GUARD: usize = 64;
/// `mN` limit for [`stripe_spark_bruteforce`].
pub const STRIPE_SPARK_COLUMN_GUARD: usize = 32;
/// Relative singular-value threshold for rank deficiency.
pub const RANK_TOL: f64 = 1e-9;

const BATCH: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SparkKind {
    Spark,
    StripeSpark,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparkCertificate {
    pub kind: SparkKind,
    /// The spark value, or `None` when nothing was found up to `searched_up_to`.
    pub value: Option<usize>,
    pub searched_up_to: usize,
    /// Sorted column indices of a rank-deficient support achieving `value`.
    pub witness: Vec<usize>,
    /// Unit-norm null vector of the witness submatrix, aligned with `witness`.
    pub null_vector: Vec<f64>,
}

impl SparkCertificate {
    fn not_found(kind: SparkKind, searched_up_to: usize) -> Self {
        Self { kind, value: None, searched_up_to, witness: Vec::new(), null_vector: Vec::new() }
    }
}

/// `true` when the columns of `mat` are numerically linearly dependent.
pub fn rank_deficient(mat: &DMatrix<f64>) -> bool {
    let (rows, cols) = mat.shape();
    if cols == 0 {
        return false;
    }
    if cols > rows {
        return true;
    }
    let sv = mat.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    max == 0.0 || min < RANK_TOL * max
}

/// Eigenvector of `MᵀM` for its smallest eigenvalue, normalized.
fn null_vector(mat: &DMatrix<f64>) -> Vec<f64> {
    let gram = mat.transpose() * mat;
    let eig = SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    let norm = v.norm();
    v.iter().map(|x| x / norm).collect()
}

fn columns_of(mat: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    mat.select_columns(cols)
}

/// Smallest number of linearly dependent columns of `dense`, searched up to `max_card`.
pub fn spark_bruteforce(dense: &DMatrix<f64>, max_card: usize) -> Result<SparkCertificate> {
    if dense.ncols() > SPARK_COLUMN_GUARD {
        return Err(CscError::Capacity(format!(
            "spark enumeration limited to {SPARK_COLUMN_GUARD} columns, got {}",
            dense.ncols()
        )));
    }
    spark_bruteforce_unguarded(dense, max_card)
}

pub fn spark_bruteforce_unguarded(
    dense: &DMatrix<f64>,
    max_card: usize,
) -> Result<SparkCertificate> {
    let p = dense.ncols();
    if max_card > p {
        return Err(CscError::Invalid(format!(
            "max cardinality {max_card} exceeds the {p} available columns"
        )));
    }
    for k in 1..=max_card {
        let combos = (0..p).combinations(k);
        let mut combos = combos.peekable();
        while combos.peek().is_some() {
            let batch: Vec<Vec<usize>> = combos.by_ref().take(BATCH).collect();
            let hit = batch
                .par_iter()
                .find_first(|cols| rank_deficient(&columns_of(dense, cols)));
            if let Some(cols) = hit {
                let sub = columns_of(dense, cols);
                return Ok(SparkCertificate {
                    kind: SparkKind::Spark,
                    value: Some(k),
                    searched_up_to: k,
                    witness: cols.clone(),
                    null_vector: null_vector(&sub),
                });
            }
        }
    }
    Ok(SparkCertificate::not_found(SparkKind::Spark, max_card))
}

/// Lexicographic order of the sorted index lists encoded by two bitmasks.
fn lex_cmp(a: u64, b: u64) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    let diff = a ^ b;
    if diff == 0 {
        return Equal;
    }
    let d = diff.trailing_zeros();
    // The list containing d continues with d; the other either ends or continues above d.
    let (has, other) = if a >> d & 1 == 1 { (a, b) } else { (b, a) };
    let other_continues = d < 63 && other >> (d + 1) != 0;
    let has_first = other_continues;
    match (has == a, has_first) {
        (true, true) | (false, false) => Less,
        _ => Greater,
    }
}

fn mask_columns(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

/// Smallest `ℓ0,∞` of a non-zero null vector of `D`, searched up to `max_loi`.
///
/// Supports are scanned grouped by their `ℓ0,∞`, ascending; the witness is the
/// lexicographically first rank-deficient support of the winning group. Only
/// supports with at most `N + 1` columns are tested, since every dependent set
/// contains a circuit of at most `rank + 1 ≤ N + 1` columns with no larger `ℓ0,∞`.
pub fn stripe_spark_bruteforce(dict: &ConvDictionary, max_loi: usize) -> Result<SparkCertificate> {
    if dict.num_atoms() > STRIPE_SPARK_COLUMN_GUARD {
        return Err(CscError::Capacity(format!(
            "stripe-spark enumeration limited to mN ≤ {STRIPE_SPARK_COLUMN_GUARD}, got {}",
            dict.num_atoms()
        )));
    }
    stripe_spark_bruteforce_unguarded(dict, max_loi)
}

pub fn stripe_spark_bruteforce_unguarded(
    dict: &ConvDictionary,
    max_loi: usize,
) -> Result<SparkCertificate> {
    let p = dict.num_atoms();
    if p > 63 {
        return Err(CscError::Capacity("bitmask enumeration supports at most 63 columns".into()));
    }
    let dense = dict.materialize_dense()?;
    let (len, m, n) = (dict.signal_len(), dict.m(), dict.n());
    let max_size = len + 1;
    let total: u64 = 1 << p;

    for k in 1..=max_loi {
        let best = (1..total)
            .into_par_iter()
            .filter(|&mask| mask.count_ones() as usize <= max_size)
            .filter(|&mask| l0_inf_of_support(&mask_columns(mask), len, m, n) == k)
            .filter(|&mask| rank_deficient(&columns_of(&dense, &mask_columns(mask))))
            .reduce_with(|a, b| if lex_cmp(a, b).is_le() { a } else { b });
        if let Some(mask) = best {
            let cols = mask_columns(mask);
            let sub = columns_of(&dense, &cols);
            return Ok(SparkCertificate {
                kind: SparkKind::StripeSpark,
                value: Some(k),
                searched_up_to: k,
                witness: cols,
                null_vector: null_vector(&sub),
            });
        }
    }
    Ok(SparkCertificate::not_found(SparkKind::StripeSpark, max_loi))
}

/// Lower bound `1 + 1/μ` on the Stripe-Spark; infinite for `μ = 0`.
pub fn stripe_spark_lower_bound(mu: f64) -> f64 {
    if mu == 0.0 {
        f64::INFINITY
    } else {
        1.0 + 1.0 / mu
    }
}

/// `(1 − (k−1)μ, 1 + (k−1)μ)`: bracket for Gram eigenvalues of a support with `ℓ0,∞ = k`.
pub fn gershgorin_bracket(k: usize, mu: f64) -> (f64, f64) {
    assert!(k >= 1, "support must be non-empty");
    let r = (k - 1) as f64 * mu;
    (1.0 - r, 1.0 + r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GershgorinReport {
    pub k: usize,
    pub mu: f64,
    pub low: f64,
    pub high: f64,
    pub eigenvalues: Vec<f64>,
    pub within: bool,
}

/// Eigenvalues of `D_Tᵀ D_T` checked against the bracket with `k = ℓ0,∞(T)`, ±1e-9.
pub fn verify_gershgorin(dict: &ConvDictionary, support: &[usize]) -> Result<GershgorinReport> {
    verify_gershgorin_with_mu(dict, support, mutual_coherence(dict))
}

pub fn verify_gershgorin_with_mu(
    dict: &ConvDictionary,
    support: &[usize],
    mu: f64,
) -> Result<GershgorinReport> {
    if support.is_empty() {
        return Err(CscError::Invalid("support must be non-empty".into()));
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= dict.num_atoms()) {
        return Err(CscError::Index { index: bad, len: dict.num_atoms() });
    }
    if dict.signal_len().saturating_mul(support.len()) > DENSE_ELEMENT_CAP {
        return Err(CscError::Capacity("support submatrix too large".into()));
    }
    let sub = dict.submatrix(support);
    let gram = sub.transpose() * &sub;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let k = l0_inf_of_support(support, dict.signal_len(), dict.m(), dict.n());
    let (low, high) = gershgorin_bracket(k, mu);
    let within = eigenvalues.iter().all(|&l| l >= low - 1e-9 && l <= high + 1e-9);
    Ok(GershgorinReport { k, mu, low, high, eigenvalues, within })
}

/// `½(1 + 1/μ)`.
pub fn uniqueness_bound(mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(CscError::Invalid(format!("coherence {mu} outside [0, 1]")));
    }
    if mu == 0.0 {
        return Err(CscError::Degenerate("μ = 0 gives an unbounded uniqueness region".into()));
    }
    Ok(0.5 * (1.0 + 1.0 / mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The code is provably the sparsest `ℓ0,∞` representation of its signal.
    Certified,
    /// The sufficient condition does not hold; nothing is claimed.
    Inconclusive,
}

/// Certifies `Γ` as the unique `ℓ0,∞`-sparsest solution when `‖Γ‖0,∞ < ½(1 + 1/μ(D))`.
pub fn certify_unique(code: &SparseCode, dict: &ConvDictionary) -> Result<Verdict> {
    let mu = mutual_coherence(dict);
    let loi = l0_inf(code, dict.n());
    match uniqueness_bound(mu) {
        Ok(bound) if (loi as f64) < bound => Ok(Verdict::Certified),
        Ok(_) => Ok(Verdict::Inconclusive),
        Err(CscError::Degenerate(_)) => Ok(Verdict::Certified),
        Err(e) => Err(e),
    }
}
