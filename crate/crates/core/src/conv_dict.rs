//! Global convolutional dictionaries built from a local dictionary.
//!
//! The global dictionary `D` has `N` rows and `m·N` columns. Column `(i, f)`
//! is local atom `f` circularly shifted so that it starts at sample `i`.
//! Columns are stored position-major: the `m` atoms anchored at position `i`
//! are contiguous, so global column index is `i·m + f` and the local chunk
//! `α_i` of a code is the slice `[i·m, (i+1)·m)`.

use nalgebra::DMatrix;

use crate::error::{CscError, Result};

/// Largest dense materialization allowed by default, in matrix elements.
pub const DENSE_ELEMENT_CAP: usize = 10_000_000;

const UNIT_NORM_TOL: f64 = 1e-12;

/// An `n × m` matrix of unit-norm local atoms, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDictionary {
    n: usize,
    m: usize,
    atoms: Vec<f64>,
}

impl LocalDictionary {
    /// Wraps column-major data whose columns already have unit ℓ2 norm.
    pub fn new(n: usize, m: usize, atoms: Vec<f64>) -> Result<Self> {
        Self::check_shape(n, m, &atoms)?;
        for f in 0..m {
            let norm = l2(&atoms[f * n..(f + 1) * n]);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(CscError::Invalid(format!(
                    "atom {f} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { n, m, atoms })
    }

    /// Normalizes every column of the column-major data to unit ℓ2 norm.
    pub fn normalized(n: usize, m: usize, mut atoms: Vec<f64>) -> Result<Self> {
        Self::check_shape(n, m, &atoms)?;
        for f in 0..m {
            let col = &mut atoms[f * n..(f + 1) * n];
            let norm = l2(col);
            if norm == 0.0 {
                return Err(CscError::Invalid(format!("atom {f} is identically zero")));
            }
            col.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { n, m, atoms })
    }

    fn check_shape(n: usize, m: usize, atoms: &[f64]) -> Result<()> {
        if n == 0 || m == 0 {
            return Err(CscError::dim(format!("local dictionary must be non-empty, got {n}x{m}")));
        }
        if atoms.len() != n * m {
            return Err(CscError::dim(format!(
                "expected {} entries for a {n}x{m} dictionary, got {}",
                n * m,
                atoms.len()
            )));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(CscError::Invalid("dictionary entries must be finite".into()));
        }
        Ok(())
    }

    /// Atom length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of filters.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atom(&self, f: usize) -> &[f64] {
        &self.atoms[f * self.n..(f + 1) * self.n]
    }

    pub fn get(&self, r: usize, f: usize) -> f64 {
        self.atoms[f * self.n + r]
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.atoms
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.m, &self.atoms)
    }

    /// `D_L · α` for a local code of length `m`.
    pub fn synthesize_local(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (f, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                for (o, &d) in out.iter_mut().zip(self.atom(f)) {
                    *o += a * d;
                }
            }
        }
        out
    }
}

/// A global code of length `m·N` in position-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    len: usize,
    m: usize,
    values: Vec<f64>,
}

impl SparseCode {
    pub fn zeros(len: usize, m: usize) -> Self {
        Self { len, m, values: vec![0.0; len * m] }
    }

    pub fn from_values(len: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != len * m {
            return Err(CscError::dim(format!(
                "code of length {} does not match N={len}, m={m}",
                values.len()
            )));
        }
        Ok(Self { len, m, values })
    }

    /// Builds a code from `(chunk, filter, value)` triples. Repeated entries add up.
    pub fn from_entries(len: usize, m: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut code = Self::zeros(len, m);
        for &(chunk, filter, value) in entries {
            if chunk >= len {
                return Err(CscError::Index { index: chunk, len });
            }
            if filter >= m {
                return Err(CscError::Index { index: filter, len: m });
            }
            code.values[chunk * m + filter] += value;
        }
        Ok(code)
    }

    /// Builds a code from filter-major data: all of `z_0`, then all of `z_1`, ...
    pub fn from_filter_major(len: usize, m: usize, data: &[f64]) -> Result<Self> {
        if data.len() != len * m {
            return Err(CscError::dim("filter-major data has the wrong length"));
        }
        let mut values = vec![0.0; len * m];
        for f in 0..m {
            for i in 0..len {
                values[i * m + f] = data[f * len + i];
            }
        }
        Ok(Self { len, m, values })
    }

    /// Global signal length `N`.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Local chunk `α_i`.
    pub fn local(&self, i: usize) -> Result<&[f64]> {
        if i >= self.len {
            return Err(CscError::Index { index: i, len: self.len });
        }
        Ok(&self.values[i * self.m..(i + 1) * self.m])
    }

    /// Stripe `γ_i`: chunks `α_{i-n+1} .. α_{i+n-1}` with circular chunk indexing.
    pub fn stripe(&self, n: usize, i: usize) -> Result<Vec<f64>> {
        if i >= self.len {
            return Err(CscError::Index { index: i, len: self.len });
        }
        if n == 0 {
            return Err(CscError::dim("window length must be positive"));
        }
        let mut out = Vec::with_capacity((2 * n - 1) * self.m);
        for s in -(n as isize - 1)..=(n as isize - 1) {
            let j = wrap(i as isize + s, self.len);
            out.extend_from_slice(&self.values[j * self.m..(j + 1) * self.m]);
        }
        Ok(out)
    }

    /// Filter map `z_f = (α_0[f], …, α_{N-1}[f])`.
    pub fn filter_map(&self, f: usize) -> Vec<f64> {
        (0..self.len).map(|i| self.values[i * self.m + f]).collect()
    }

    /// Column permutation to filter-major order (`z_0`, then `z_1`, ...).
    pub fn to_filter_major(&self) -> Vec<f64> {
        (0..self.m).flat_map(|f| self.filter_map(f)).collect()
    }

    /// Global indices of exact non-zeros.
    pub fn support(&self) -> Vec<usize> {
        self.support_above(0.0)
    }

    /// Global indices with `|value| > threshold`.
    pub fn support_above(&self, threshold: f64) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(j, _)| j)
            .collect()
    }

    /// Number of non-zeros in each chunk.
    pub fn chunk_counts(&self) -> Vec<usize> {
        self.values
            .chunks(self.m)
            .map(|c| c.iter().filter(|v| **v != 0.0).count())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// The `n × (2n−1)m` stripe dictionary `Ω = [Ω_{-n+1}, …, Ω_{n-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripeDictionary {
    n: usize,
    m: usize,
    omega: DMatrix<f64>,
}

impl StripeDictionary {
    pub fn new(local: &LocalDictionary) -> Self {
        let (n, m) = (local.n(), local.m());
        let mut omega = DMatrix::zeros(n, (2 * n - 1) * m);
        for s in -(n as isize - 1)..=(n as isize - 1) {
            let block = (s + n as isize - 1) as usize;
            for f in 0..m {
                for r in 0..n {
                    let src = r as isize - s;
                    if (0..n as isize).contains(&src) {
                        omega[(r, block * m + f)] = local.get(src as usize, f);
                    }
                }
            }
        }
        Self { n, m, omega }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// Block `Ω_s` for `s ∈ [−n+1, n−1]`.
    pub fn block(&self, s: isize) -> DMatrix<f64> {
        assert!(s.unsigned_abs() < self.n, "shift {s} outside the stripe");
        let b = (s + self.n as isize - 1) as usize;
        self.omega.columns(b * self.m, self.m).into_owned()
    }

    /// `Ω · γ` for a stripe vector.
    pub fn apply(&self, stripe: &[f64]) -> Result<Vec<f64>> {
        if stripe.len() != self.omega.ncols() {
            return Err(CscError::dim(format!(
                "stripe of length {} does not match Ω with {} columns",
                stripe.len(),
                self.omega.ncols()
            )));
        }
        let out = &self.omega * nalgebra::DVector::from_column_slice(stripe);
        Ok(out.as_slice().to_vec())
    }
}

/// Builds `Ω` for a local dictionary.
pub fn stripe_dictionary(local: &LocalDictionary) -> StripeDictionary {
    StripeDictionary::new(local)
}

/// Implicit `N × mN` operator: the union of `m` banded circulant matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvDictionary {
    local: LocalDictionary,
    len: usize,
}

impl ConvDictionary {
    pub fn new(local: LocalDictionary, len: usize) -> Result<Self> {
        if len < local.n() {
            return Err(CscError::dim(format!(
                "signal length {len} is shorter than the atom length {}",
                local.n()
            )));
        }
        Ok(Self { local, len })
    }

    pub fn local(&self) -> &LocalDictionary {
        &self.local
    }

    /// Global signal length `N`.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn n(&self) -> usize {
        self.local.n()
    }

    pub fn m(&self) -> usize {
        self.local.m()
    }

    /// Number of global atoms, `m·N`.
    pub fn num_atoms(&self) -> usize {
        self.len * self.local.m()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.len, self.num_atoms())
    }

    /// Global column index of atom `filter` anchored at `chunk`.
    pub fn column_index(&self, chunk: usize, filter: usize) -> usize {
        chunk * self.m() + filter
    }

    /// Inverse of [`column_index`](Self::column_index).
    pub fn chunk_filter(&self, column: usize) -> (usize, usize) {
        (column / self.m(), column % self.m())
    }

    pub fn zero_code(&self) -> SparseCode {
        SparseCode::zeros(self.len, self.m())
    }

    fn check_code(&self, code: &SparseCode) -> Result<()> {
        if code.signal_len() != self.len || code.m() != self.m() {
            return Err(CscError::dim(format!(
                "code shape (N={}, m={}) does not match dictionary (N={}, m={})",
                code.signal_len(),
                code.m(),
                self.len,
                self.m()
            )));
        }
        Ok(())
    }

    fn check_signal(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(CscError::dim(format!(
                "signal of length {} does not match N={}",
                x.len(),
                self.len
            )));
        }
        Ok(())
    }

    /// `X = D Γ`, computed as a sum of circular convolutions `d_f ∗ z_f`.
    pub fn apply(&self, code: &SparseCode) -> Result<Vec<f64>> {
        self.check_code(code)?;
        Ok(self.apply_slice(code.values()))
    }

    /// `D v` for a raw position-major vector of length `mN`. Panics on length mismatch.
    pub fn apply_slice(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.num_atoms());
        let (m, len) = (self.m(), self.len);
        let mut x = vec![0.0; len];
        for (j, &c) in values.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (i, f) = (j / m, j % m);
            for (r, &d) in self.local.atom(f).iter().enumerate() {
                let row = i + r;
                let row = if row >= len { row - len } else { row };
                x[row] += c * d;
            }
        }
        x
    }

    /// `Dᵀ X`: per-filter circular cross-correlation with the signal.
    pub fn adjoint_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_signal(x)?;
        Ok(self.adjoint_slice(x))
    }

    pub(crate) fn adjoint_slice(&self, x: &[f64]) -> Vec<f64> {
        let (m, len) = (self.m(), self.len);
        let mut out = vec![0.0; self.num_atoms()];
        for i in 0..len {
            for f in 0..m {
                let mut acc = 0.0;
                for (r, &d) in self.local.atom(f).iter().enumerate() {
                    let row = i + r;
                    let row = if row >= len { row - len } else { row };
                    acc += d * x[row];
                }
                out[i * m + f] = acc;
            }
        }
        out
    }

    /// Stripe `γ_i` of a code.
    pub fn extract_stripe(&self, code: &SparseCode, i: usize) -> Result<Vec<f64>> {
        self.check_code(code)?;
        code.stripe(self.n(), i)
    }

    /// Local chunk `α_i` of a code.
    pub fn extract_local<'a>(&self, code: &'a SparseCode, i: usize) -> Result<&'a [f64]> {
        self.check_code(code)?;
        code.local(i)
    }

    /// Patch `x_i = R_i D Γ`, computed through the stripe dictionary as `Ω γ_i`.
    pub fn patch(&self, code: &SparseCode, i: usize) -> Result<Vec<f64>> {
        self.check_code(code)?;
        let stripe = code.stripe(self.n(), i)?;
        StripeDictionary::new(&self.local).apply(&stripe)
    }

    /// `X = Σ_i R_iᵀ D_L α_i`: place each local synthesis at its position.
    pub fn patch_average_synthesize(&self, code: &SparseCode) -> Result<Vec<f64>> {
        self.check_code(code)?;
        let len = self.len;
        let mut x = vec![0.0; len];
        for i in 0..len {
            let alpha = code.local(i)?;
            if alpha.iter().all(|v| *v == 0.0) {
                continue;
            }
            let piece = self.local.synthesize_local(alpha);
            for (r, v) in piece.into_iter().enumerate() {
                x[(i + r) % len] += v;
            }
        }
        Ok(x)
    }

    /// Dense column `(chunk, filter)` as a length-`N` vector.
    pub fn column(&self, column: usize) -> Vec<f64> {
        let (i, f) = self.chunk_filter(column);
        let mut col = vec![0.0; self.len];
        for (r, &d) in self.local.atom(f).iter().enumerate() {
            col[(i + r) % self.len] += d;
        }
        col
    }

    /// Inner product of two global columns without materializing `D`.
    pub fn column_inner(&self, a: usize, b: usize) -> f64 {
        let ca = self.column(a);
        let cb = self.column(b);
        ca.iter().zip(&cb).map(|(x, y)| x * y).sum()
    }

    /// Columns of `D` restricted to `columns`, as an `N × |columns|` matrix.
    pub fn submatrix(&self, columns: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.len, columns.len());
        for (k, &c) in columns.iter().enumerate() {
            let (i, f) = self.chunk_filter(c);
            for (r, &d) in self.local.atom(f).iter().enumerate() {
                out[((i + r) % self.len, k)] += d;
            }
        }
        out
    }

    /// Dense `N × mN` matrix, refused above [`DENSE_ELEMENT_CAP`] elements.
    pub fn materialize_dense(&self) -> Result<DMatrix<f64>> {
        self.materialize_dense_with_cap(DENSE_ELEMENT_CAP)
    }

    pub fn materialize_dense_with_cap(&self, cap: usize) -> Result<DMatrix<f64>> {
        let elements = self.len.saturating_mul(self.num_atoms());
        if elements > cap {
            return Err(CscError::Capacity(format!(
                "dense dictionary needs {elements} elements, cap is {cap}"
            )));
        }
        let all: Vec<usize> = (0..self.num_atoms()).collect();
        Ok(self.submatrix(&all))
    }
}

/// Builds the global dictionary of length-`N` signals from a local dictionary.
pub fn build_global(local: LocalDictionary, len: usize) -> Result<ConvDictionary> {
    ConvDictionary::new(local, len)
}

pub(crate) fn wrap(i: isize, len: usize) -> usize {
    i.rem_euclid(len as isize) as usize
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
