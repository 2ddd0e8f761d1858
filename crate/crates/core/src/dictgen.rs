//! Local dictionary generators and random test signals.
//!
//! All randomness comes from ChaCha8, a counter-based generator. A run is
//! identified by a `u64` seed; independent trials use the same seed on
//! different ChaCha streams, so trial `t` of an experiment draws from
//! `stream(seed, t)` no matter which thread runs it.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::conv_dict::{ConvDictionary, LocalDictionary, SparseCode};
use crate::error::{CscError, Result};
use crate::measures::{shifted_inner, welch_lower_bound};

/// Generator for stream `stream` of experiment `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian `n × m` dictionary with unit-norm columns.
pub fn random_local(n: usize, m: usize, seed: u64) -> Result<LocalDictionary> {
    random_local_with(n, m, &mut stream(seed, 0))
}

pub fn random_local_with<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<LocalDictionary> {
    if n == 0 || m == 0 {
        return Err(CscError::Dimension(format!("empty dictionary {n}x{m}")));
    }
    let data: Vec<f64> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    LocalDictionary::normalized(n, m, data)
}

/// Output of [`low_coherence_local`].
#[derive(Debug, Clone)]
pub struct LowCoherenceDesign {
    pub dict: LocalDictionary,
    /// `μ(D)` of the returned dictionary for any `N ≥ 2n−1`.
    pub mu: f64,
    /// Best-so-far `μ(D)` after each sweep (non-increasing).
    pub best_history: Vec<f64>,
}

/// Largest `|⟨d_f, S_s d_g⟩|` over all shifted pairs except an atom with itself.
pub fn shifted_max_coherence(local: &LocalDictionary) -> f64 {
    let (n, m) = (local.n() as isize, local.m());
    let mut best: f64 = 0.0;
    for f in 0..m {
        for g in 0..m {
            for s in -(n - 1)..n {
                if s == 0 && f == g {
                    continue;
                }
                best = best.max(shifted_inner(local, f, g, s).abs());
            }
        }
    }
    best
}

/// Reduces the aperiodic auto- and cross-correlations of a random local dictionary.
///
/// Each sweep computes every shifted inner product `c = ⟨d_f, S_s d_g⟩`, shrinks
/// the ones above the current target level `t` to `±t`, takes a gradient step
/// on `½ Σ (c − shrink(c))²` and renormalizes the atoms. The target decays
/// geometrically (factor 0.99 per sweep) from the initial coherence toward the
/// Welch-type bound. The best iterate seen is returned.
pub fn low_coherence_local(
    n: usize,
    m: usize,
    seed: u64,
    iters: usize,
) -> Result<LowCoherenceDesign> {
    if iters == 0 {
        return Err(CscError::Invalid("at least one sweep is required".into()));
    }
    let mut current = random_local(n, m, seed)?;
    let mut best_mu = shifted_max_coherence(&current);
    let mut best = current.clone();
    let mut best_history = Vec::with_capacity(iters);
    let floor = welch_lower_bound(n, m);
    let start = best_mu;
    let ni = n as isize;
    let step = 0.5;

    for sweep in 0..iters {
        let target = floor + (start - floor) * 0.99f64.powi(sweep as i32);
        let atoms = current.as_column_major().to_vec();
        let mut grad = vec![0.0; n * m];
        for f in 0..m {
            for g in 0..m {
                for s in -(ni - 1)..ni {
                    if s == 0 && f == g {
                        continue;
                    }
                    let c = shifted_inner(&current, f, g, s);
                    let excess = c - c.clamp(-target, target);
                    if excess == 0.0 {
                        continue;
                    }
                    // c = Σ_r a_f[r] a_g[r − s]
                    let lo = s.max(0);
                    let hi = ni.min(ni + s);
                    for r in lo..hi {
                        let (rf, rg) = (r as usize, (r - s) as usize);
                        grad[f * n + rf] += excess * atoms[g * n + rg];
                        grad[g * n + rg] += excess * atoms[f * n + rf];
                    }
                }
            }
        }
        let next: Vec<f64> = atoms.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        current = match LocalDictionary::normalized(n, m, next) {
            Ok(d) => d,
            Err(_) => break,
        };
        let mu = shifted_max_coherence(&current);
        if mu < best_mu {
            best_mu = mu;
            best = current.clone();
        }
        best_history.push(best_mu);
    }
    Ok(LowCoherenceDesign { dict: best, mu: best_mu, best_history })
}

/// Random code with `cardinality` non-zeros and its signal `X = DΓ`.
///
/// The support is uniform without replacement over all `mN` positions and the
/// coefficients are i.i.d. standard normal.
pub fn gen_signal(
    dict: &ConvDictionary,
    cardinality: usize,
    seed: u64,
) -> Result<(SparseCode, Vec<f64>)> {
    gen_signal_with(dict, cardinality, &mut stream(seed, 0))
}

pub fn gen_signal_with<R: Rng + ?Sized>(
    dict: &ConvDictionary,
    cardinality: usize,
    rng: &mut R,
) -> Result<(SparseCode, Vec<f64>)> {
    let code = random_code_with(dict.signal_len(), dict.m(), cardinality, rng)?;
    let signal = dict.apply(&code)?;
    Ok((code, signal))
}

/// Random code of the given shape, support uniform, Gaussian coefficients.
pub fn random_code_with<R: Rng + ?Sized>(
    len: usize,
    m: usize,
    cardinality: usize,
    rng: &mut R,
) -> Result<SparseCode> {
    let total = len * m;
    if cardinality == 0 || cardinality > total {
        return Err(CscError::Dimension(format!(
            "cardinality {cardinality} outside [1, {total}]"
        )));
    }
    let mut support = sample(rng, total, cardinality).into_vec();
    support.sort_unstable();
    let mut values = vec![0.0; total];
    for j in support {
        let mut v: f64 = rng.sample(StandardNormal);
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        values[j] = v;
    }
    SparseCode::from_values(len, m, values)
}
