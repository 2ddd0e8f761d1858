//! Independent reference implementations used by the integration tests.
//!
//! Everything here works from first principles on small dense matrices and
//! shares no code with the library beyond the public data types.

#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use convsparse::{LocalDictionary, SparseCode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_local<R: Rng>(n: usize, m: usize, rng: &mut R) -> LocalDictionary {
    let data: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    LocalDictionary::normalized(n, m, data).unwrap()
}

/// Global dictionary built entry by entry: column `i·m + f` holds atom `f`
/// starting at row `i`, wrapped around modulo `N`.
pub fn dense(local: &LocalDictionary, len: usize) -> DMatrix<f64> {
    let (n, m) = (local.n(), local.m());
    let mut d = DMatrix::zeros(len, len * m);
    for i in 0..len {
        for f in 0..m {
            for r in 0..n {
                d[((i + r) % len, i * m + f)] += local.get(r, f);
            }
        }
    }
    d
}

/// Rows touched by column `j` (structurally, whatever the atom values).
fn column_rows(j: usize, n: usize, m: usize, len: usize) -> Vec<usize> {
    let chunk = j / m;
    (0..n).map(|r| (chunk + r) % len).collect()
}

/// Columns whose atoms overlap the length-`n` patch starting at row `i`.
pub fn stripe_columns(i: usize, n: usize, m: usize, len: usize) -> Vec<usize> {
    let patch: Vec<usize> = (0..n).map(|r| (i + r) % len).collect();
    (0..len * m)
        .filter(|&j| column_rows(j, n, m, len).iter().any(|r| patch.contains(r)))
        .collect()
}

/// `max_i` of the number of non-zeros among the columns overlapping patch `i`.
pub fn l0_inf_oracle(values: &[f64], n: usize, m: usize, len: usize) -> usize {
    (0..len)
        .map(|i| stripe_columns(i, n, m, len).iter().filter(|&&j| values[j] != 0.0).count())
        .max()
        .unwrap_or(0)
}

pub fn l0_inf_of_support_oracle(support: &[usize], n: usize, m: usize, len: usize) -> usize {
    let mut values = vec![0.0; len * m];
    for &j in support {
        values[j] = 1.0;
    }
    l0_inf_oracle(&values, n, m, len)
}

/// Largest off-diagonal entry of `|DᵀD|` (unit-norm columns assumed).
pub fn mu_oracle(d: &DMatrix<f64>) -> f64 {
    let g = d.transpose() * d;
    let mut best: f64 = 0.0;
    for a in 0..g.nrows() {
        for b in 0..g.ncols() {
            if a != b {
                best = best.max(g[(a, b)].abs());
            }
        }
    }
    best
}

/// `μ_s` from the Gram matrix of an un-wrapped global dictionary (`N ≥ 2n−1`):
/// the largest `|⟨d_a, d_b⟩|` over distinct columns whose chunks differ by `s`.
pub fn mu_s_oracle(local: &LocalDictionary, s: isize) -> f64 {
    let (n, m) = (local.n(), local.m());
    let len = 4 * n;
    let d = dense(local, len);
    let g = d.transpose() * &d;
    let base = 2 * n;
    let other = (base as isize + s) as usize;
    let mut best: f64 = 0.0;
    for f in 0..m {
        for h in 0..m {
            let (a, b) = (base * m + f, other * m + h);
            if a != b {
                best = best.max(g[(a, b)].abs());
            }
        }
    }
    best
}

/// Signed chunk offset of column `j` relative to stripe `i`, smallest magnitude first, positive on ties.
pub fn shift_in_stripe(j: usize, i: usize, n: usize, m: usize, len: usize) -> isize {
    let chunk = j / m;
    let mut best: Option<isize> = None;
    for s in -(n as isize - 1)..=(n as isize - 1) {
        if (i as isize + s).rem_euclid(len as isize) as usize == chunk {
            best = match best {
                None => Some(s),
                Some(b) if s.abs() < b.abs() || (s.abs() == b.abs() && s > b) => Some(s),
                keep => keep,
            };
        }
    }
    best.expect("column lies in the stripe")
}

/// Stripe coherence `ζ_i = Σ_{j in stripe i, Γ_j ≠ 0} μ_{s(j)}`, with `mu(s)` supplied.
pub fn stripe_coherence_oracle(
    values: &[f64],
    n: usize,
    m: usize,
    len: usize,
    mu: impl Fn(isize) -> f64,
) -> Vec<f64> {
    (0..len)
        .map(|i| {
            // Stripe membership counts chunk positions of the window, so wrapped duplicates collapse.
            let mut cols: Vec<usize> = stripe_columns(i, n, m, len);
            cols.retain(|&j| values[j] != 0.0);
            cols.iter().map(|&j| mu(shift_in_stripe(j, i, n, m, len))).sum()
        })
        .collect()
}

pub fn columns(d: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(d.nrows(), cols.len(), |r, c| d[(r, cols[c])])
}

/// Rank by singular values relative to the largest one.
pub fn rank(mat: &DMatrix<f64>, tol: f64) -> usize {
    if mat.ncols() == 0 {
        return 0;
    }
    let sv = mat.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Smallest number of linearly dependent columns, searching cardinalities up to `max_card`.
pub fn spark_oracle(d: &DMatrix<f64>, max_card: usize) -> Option<usize> {
    (1..=max_card.min(d.ncols())).find(|&k| {
        (0..d.ncols()).combinations(k).any(|c| rank(&columns(d, &c), 1e-9) < k)
    })
}

/// Smallest `ℓ0,∞` over supports whose columns are linearly dependent.
///
/// Only minimal dependent sets (circuits) need to be considered, and a circuit
/// has at most `rank + 1 ≤ N + 1` columns.
pub fn stripe_spark_oracle(local: &LocalDictionary, len: usize) -> Option<usize> {
    let d = dense(local, len);
    let (n, m) = (local.n(), local.m());
    let mut best: Option<usize> = None;
    for k in 1..=(len + 1).min(d.ncols()) {
        for c in (0..d.ncols()).combinations(k) {
            if rank(&columns(&d, &c), 1e-9) < k {
                let loi = l0_inf_of_support_oracle(&c, n, m, len);
                best = Some(best.map_or(loi, |b| b.min(loi)));
            }
        }
    }
    best
}

/// Least-squares fit on `cols`; `None` if the columns are dependent or the fit is inexact.
pub fn exact_fit(d: &DMatrix<f64>, cols: &[usize], x: &[f64], tol: f64) -> Option<Vec<f64>> {
    let sub = columns(d, cols);
    if rank(&sub, 1e-10) < cols.len() {
        return None;
    }
    let rhs = DVector::from_column_slice(x);
    let coef = sub.clone().svd(true, true).solve(&rhs, 0.0).ok()?;
    let resid = (&sub * &coef - &rhs).norm();
    (resid <= tol * rhs.norm().max(1.0)).then(|| coef.iter().copied().collect())
}

/// Sparsest exact representation: supports by increasing size, lexicographic within a size.
pub fn p0_oracle(d: &DMatrix<f64>, x: &[f64]) -> Option<Vec<f64>> {
    let p = d.ncols();
    if x.iter().all(|v| *v == 0.0) {
        return Some(vec![0.0; p]);
    }
    for k in 1..=p.min(d.nrows()) {
        for c in (0..p).combinations(k) {
            if let Some(coef) = exact_fit(d, &c, x, 1e-9) {
                let mut out = vec![0.0; p];
                for (j, v) in c.iter().zip(coef) {
                    out[*j] = v;
                }
                return Some(out);
            }
        }
    }
    None
}

/// `min ‖x‖1 s.t. Dx = X` by enumerating basic solutions.
///
/// An optimal vertex of the feasible polyhedron has linearly independent
/// support columns, so scanning every independent column set with an exact
/// fit covers all vertices.
pub fn lp_l1_oracle(d: &DMatrix<f64>, x: &[f64]) -> f64 {
    let p = d.ncols();
    let r = rank(d, 1e-10);
    let mut best = if x.iter().all(|v| *v == 0.0) { 0.0 } else { f64::INFINITY };
    for k in 1..=r {
        for c in (0..p).combinations(k) {
            if let Some(coef) = exact_fit(d, &c, x, 1e-10) {
                best = best.min(coef.iter().map(|v| v.abs()).sum());
            }
        }
    }
    best
}

pub fn random_code<R: Rng>(len: usize, m: usize, card: usize, rng: &mut R) -> SparseCode {
    let total = len * m;
    let support = rand::seq::index::sample(rng, total, card);
    let mut values = vec![0.0; total];
    for j in support {
        values[j] = rng.sample::<f64, _>(StandardNormal) + 0.0;
        if values[j] == 0.0 {
            values[j] = 1.0;
        }
    }
    SparseCode::from_values(len, m, values).unwrap()
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
    }
}
