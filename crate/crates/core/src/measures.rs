//! Sparsity and coherence measures for convolutional codes and dictionaries.
//!
//! Stripe-based measures (`ℓ0,∞`, stripe coherence) count every chunk inside
//! the circular window of stripe `i` once. When `N ≥ 2n−1` this is exactly
//! the `2n−1` chunks of the stripe; for shorter signals the window covers
//! every chunk and each one is attributed to its smallest circular offset.

use serde::{Deserialize, Serialize};

use crate::conv_dict::{wrap, ConvDictionary, LocalDictionary, SparseCode};
use crate::error::{CscError, Result};

/// Exact `‖Γ‖0`.
pub fn l0(code: &SparseCode) -> usize {
    code.values().iter().filter(|v| **v != 0.0).count()
}

/// `‖γ_i‖0` for every stripe.
pub fn stripe_l0(code: &SparseCode, n: usize) -> Vec<usize> {
    stripe_counts(&code.chunk_counts(), n)
}

/// `‖Γ‖0,∞`: non-zeros in the densest stripe.
pub fn l0_inf(code: &SparseCode, n: usize) -> usize {
    stripe_l0(code, n).into_iter().max().unwrap_or(0)
}

/// `ℓ0,∞` of a set of global column indices on a dictionary with `m` filters.
pub fn l0_inf_of_support(support: &[usize], len: usize, m: usize, n: usize) -> usize {
    let mut counts = vec![0usize; len];
    for &j in support {
        counts[j / m] += 1;
    }
    stripe_counts(&counts, n).into_iter().max().unwrap_or(0)
}

/// Default magnitude at or below which entries of a solver output count as zero.
pub const ESTIMATE_THRESHOLD: f64 = 1e-6;

/// `‖Γ‖0` of an estimated code, counting entries with `|v| > threshold`.
pub fn l0_estimated(code: &SparseCode, threshold: f64) -> usize {
    code.support_above(threshold).len()
}

/// `‖Γ‖0,∞` of an estimated code, counting entries with `|v| > threshold`.
pub fn l0_inf_estimated(code: &SparseCode, n: usize, threshold: f64) -> usize {
    l0_inf_of_support(&code.support_above(threshold), code.signal_len(), code.m(), n)
}

fn stripe_counts(chunk_counts: &[usize], n: usize) -> Vec<usize> {
    let len = chunk_counts.len();
    if len == 0 {
        return Vec::new();
    }
    let width = 2 * n - 1;
    if width >= len {
        let total = chunk_counts.iter().sum();
        return vec![total; len];
    }
    // Sliding window sum over chunks i-n+1 ..= i+n-1.
    let mut out = Vec::with_capacity(len);
    let mut acc: usize = (-(n as isize - 1)..=(n as isize - 1))
        .map(|s| chunk_counts[wrap(s, len)])
        .sum();
    out.push(acc);
    for i in 1..len {
        acc += chunk_counts[wrap(i as isize + n as isize - 1, len)];
        acc -= chunk_counts[wrap(i as isize - n as isize, len)];
        out.push(acc);
    }
    out
}

/// Welch-type lower bound `sqrt((m−1)/(m(2n−1)−1))` on `μ(D)`.
pub fn welch_lower_bound(n: usize, m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let m = m as f64;
    let w = (2 * n - 1) as f64;
    ((m - 1.0) / (m * w - 1.0)).sqrt()
}

/// Shifted mutual coherences `μ_s` for `s ∈ [−n+1, n−1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceProfile {
    pub n: usize,
    /// `mu_s[s + n − 1] = μ_s`.
    pub mu_s: Vec<f64>,
    pub mu_global: f64,
    pub mu0: f64,
}

impl CoherenceProfile {
    pub fn mu(&self, s: isize) -> f64 {
        if s.unsigned_abs() >= self.n {
            return 0.0;
        }
        self.mu_s[(s + self.n as isize - 1) as usize]
    }

    pub fn shifts(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let n = self.n as isize;
        self.mu_s.iter().enumerate().map(move |(k, &mu)| (k as isize - n + 1, mu))
    }

    /// CSV with header `s,mu_s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,mu_s\n");
        for (s, mu) in self.shifts() {
            out.push_str(&format!("{s},{mu}\n"));
        }
        out
    }
}

/// `μ_s = max |⟨d⁰_f, d^s_g⟩|` over columns of `Ω_0` and `Ω_s`, excluding `f = g` at `s = 0`.
pub fn shifted_coherence_profile(local: &LocalDictionary) -> Result<CoherenceProfile> {
    let (n, m) = (local.n(), local.m());
    if n == 1 && m == 1 {
        return Err(CscError::Degenerate(
            "a single one-sample atom has no distinct pair; μ0 is 0 by convention".into(),
        ));
    }
    let mut mu_s = vec![0.0; 2 * n - 1];
    for s in -(n as isize - 1)..=(n as isize - 1) {
        let mut best: f64 = 0.0;
        for f in 0..m {
            for g in 0..m {
                if s == 0 && f == g {
                    continue;
                }
                best = best.max(shifted_inner(local, f, g, s).abs());
            }
        }
        mu_s[(s + n as isize - 1) as usize] = best;
    }
    let mu0 = mu_s[n - 1];
    let mu_global = mu_s.iter().copied().fold(0.0, f64::max);
    Ok(CoherenceProfile { n, mu_s, mu_global, mu0 })
}

/// `⟨Ω_0[:, f], Ω_s[:, g]⟩ = Σ_r D_L[r, f] · D_L[r − s, g]`.
pub fn shifted_inner(local: &LocalDictionary, f: usize, g: usize, s: isize) -> f64 {
    let n = local.n() as isize;
    let (a, b) = (local.atom(f), local.atom(g));
    let lo = s.max(0);
    let hi = n.min(n + s);
    (lo..hi).map(|r| a[r as usize] * b[(r - s) as usize]).sum()
}

/// Global mutual coherence of `D`, including wrap-around overlaps when `N < 2n−1`.
pub fn mutual_coherence(dict: &ConvDictionary) -> f64 {
    let (n, m, len) = (dict.n(), dict.m(), dict.signal_len());
    let local = dict.local();
    // Circular offsets t at which two atoms can overlap.
    let offsets: Vec<usize> = if len >= 2 * n - 1 {
        (0..n).chain(len - (n - 1)..len).collect()
    } else {
        (0..len).collect()
    };
    let mut best: f64 = 0.0;
    for f in 0..m {
        for g in 0..m {
            for &t in &offsets {
                if t == 0 && f == g {
                    continue;
                }
                best = best.max(circular_inner(local.atom(f), local.atom(g), t, len).abs());
            }
        }
    }
    best
}

/// Inner product of atom `a` at position 0 with atom `b` at position `t`, length-`len` circle.
fn circular_inner(a: &[f64], b: &[f64], t: usize, len: usize) -> f64 {
    let mut acc = 0.0;
    for (r, &bv) in b.iter().enumerate() {
        let row = (t + r) % len;
        if row < a.len() {
            acc += a[row] * bv;
        }
    }
    acc
}

/// Stripe coherences `ζ_i = Σ_s n_{i,s} μ_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeCoherenceVector {
    pub zeta: Vec<f64>,
}

impl StripeCoherenceVector {
    pub fn max(&self) -> f64 {
        self.zeta.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }
}

fn check_profile(code: &SparseCode, profile: &CoherenceProfile) -> Result<()> {
    if code.signal_len() < profile.n {
        return Err(CscError::dim(format!(
            "code with N={} is shorter than the profile window n={}",
            code.signal_len(),
            profile.n
        )));
    }
    Ok(())
}

/// Shift offsets visited so that each chunk is attributed to its smallest |s|.
fn shift_order(n: usize) -> impl Iterator<Item = isize> {
    std::iter::once(0).chain((1..n as isize).flat_map(|s| [s, -s]))
}

/// Per-shift non-zero counts `n_{i,s}` of stripe `i`, indexed by `s + n − 1`.
pub fn stripe_shift_counts(code: &SparseCode, n: usize, i: usize) -> Result<Vec<usize>> {
    let counts = code.chunk_counts();
    if i >= counts.len() {
        return Err(CscError::Index { index: i, len: counts.len() });
    }
    Ok(shift_counts(&counts, n, i))
}

fn shift_counts(counts: &[usize], n: usize, i: usize) -> Vec<usize> {
    let len = counts.len();
    let wraps = 2 * n - 1 > len;
    let mut out = vec![0usize; 2 * n - 1];
    let mut seen = Vec::new();
    for s in shift_order(n) {
        let j = wrap(i as isize + s, len);
        if wraps {
            if seen.contains(&j) {
                continue;
            }
            seen.push(j);
        }
        out[(s + n as isize - 1) as usize] = counts[j];
    }
    out
}

/// Stripe coherence by direct per-stripe summation.
pub fn stripe_coherence_direct(
    code: &SparseCode,
    profile: &CoherenceProfile,
) -> Result<StripeCoherenceVector> {
    check_profile(code, profile)?;
    let counts = code.chunk_counts();
    let zeta = (0..counts.len())
        .map(|i| {
            shift_counts(&counts, profile.n, i)
                .iter()
                .zip(&profile.mu_s)
                .map(|(&c, &mu)| c as f64 * mu)
                .sum()
        })
        .collect();
    Ok(StripeCoherenceVector { zeta })
}

/// Stripe coherence as the circular convolution of per-chunk counts with `μ_s`.
pub fn stripe_coherence_conv(
    code: &SparseCode,
    profile: &CoherenceProfile,
) -> Result<StripeCoherenceVector> {
    check_profile(code, profile)?;
    let counts = code.chunk_counts();
    let len = counts.len();
    let kernel = folded_kernel(profile, len);
    let mut zeta = vec![0.0; len];
    for (j, &v) in counts.iter().enumerate() {
        if v == 0 {
            continue;
        }
        for (t, &k) in kernel.iter().enumerate() {
            if k != 0.0 {
                zeta[(j + t) % len] += v as f64 * k;
            }
        }
    }
    Ok(StripeCoherenceVector { zeta })
}

/// `μ` indexed by circular offset `t ∈ [0, N)`, using the smallest |s| with `s ≡ t`.
fn folded_kernel(profile: &CoherenceProfile, len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let s = if t <= len - t { t as isize } else { t as isize - len as isize };
            profile.mu(s)
        })
        .collect()
}

/// Stripe coherence vector. Both routes are evaluated in debug builds and must agree.
pub fn stripe_coherence(
    code: &SparseCode,
    profile: &CoherenceProfile,
) -> Result<StripeCoherenceVector> {
    let conv = stripe_coherence_conv(code, profile)?;
    #[cfg(debug_assertions)]
    {
        let direct = stripe_coherence_direct(code, profile)?;
        for (a, b) in conv.zeta.iter().zip(&direct.zeta) {
            debug_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
    Ok(conv)
}

/// Weighted average shifted coherence of one stripe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageCoherence {
    /// `μ̄_i = ζ_i / n_i`.
    pub mu_bar: f64,
    /// `n_i`, the stripe's non-zero count.
    pub count: usize,
    /// `½(1/μ̄_i + μ0/μ̄_i)`; infinite when `μ̄_i = 0`.
    pub sparsity_bound: f64,
}

pub fn average_shifted_coherence(
    code: &SparseCode,
    profile: &CoherenceProfile,
    i: usize,
) -> Result<AverageCoherence> {
    check_profile(code, profile)?;
    let counts = stripe_shift_counts(code, profile.n, i)?;
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(CscError::EmptyStripe(i));
    }
    let zeta: f64 = counts.iter().zip(&profile.mu_s).map(|(&c, &mu)| c as f64 * mu).sum();
    let mu_bar = zeta / total as f64;
    let sparsity_bound = if mu_bar == 0.0 {
        f64::INFINITY
    } else {
        0.5 * (1.0 + profile.mu0) / mu_bar
    };
    Ok(AverageCoherence { mu_bar, count: total, sparsity_bound })
}

/// Summary printed by the `measure` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub l0: usize,
    pub l0_inf: usize,
    pub mu: f64,
    pub mu0: f64,
    pub welch: f64,
    pub max_stripe_coherence: f64,
}

pub fn measure_report(dict: &ConvDictionary, code: &SparseCode) -> Result<MeasureReport> {
    let profile = profile_or_zero(dict.local());
    let zeta = stripe_coherence(code, &profile)?;
    Ok(MeasureReport {
        l0: l0(code),
        l0_inf: l0_inf(code, dict.n()),
        mu: mutual_coherence(dict),
        mu0: profile.mu0,
        welch: welch_lower_bound(dict.n(), dict.m()),
        max_stripe_coherence: zeta.max(),
    })
}

/// Profile with the degenerate single-sample, single-atom case mapped to all zeros.
pub fn profile_or_zero(local: &LocalDictionary) -> CoherenceProfile {
    shifted_coherence_profile(local).unwrap_or(CoherenceProfile {
        n: local.n(),
        mu_s: vec![0.0; 2 * local.n() - 1],
        mu_global: 0.0,
        mu0: 0.0,
    })
}
