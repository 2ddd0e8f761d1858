//! Phase-transition and coherence-scatter experiments.
//!
//! Trials are independent: trial `t` draws its code from ChaCha stream
//! `t + 1` of the experiment seed (stream 0 builds the dictionary), runs the
//! configured solvers and reports a verdict. Outcomes are collected in trial
//! order and folded sequentially, so tables are byte-identical for any
//! thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv_dict::{l2, ConvDictionary, LocalDictionary, SparseCode};
use crate::dictgen::{self, gen_signal_with, low_coherence_local, random_local};
use crate::error::{CscError, Result};
use crate::measures::{l0_inf, mutual_coherence, profile_or_zero, stripe_coherence};
use crate::pursuit::{
    basis_pursuit, exact_recovery, omp, AdmmParams, BpParams, OmpParams, ProjectorKind,
    EXACT_RECOVERY_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Omp,
    Bp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionarySource {
    File { path: PathBuf },
    Random,
    LowCoherence { iters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub support_threshold: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        let admm = AdmmParams::default();
        Self {
            rho: admm.rho,
            max_iters: admm.max_iters,
            eps_abs: admm.eps_abs,
            eps_rel: admm.eps_rel,
            support_threshold: BpParams::default().support_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    /// Global signal length `N`.
    pub signal_len: usize,
    pub card_lo: usize,
    pub card_hi: usize,
    #[serde(default = "one")]
    pub card_step: usize,
    pub trials_per_cardinality: usize,
    /// Further `(range, trials)` blocks appended after the main range.
    #[serde(default)]
    pub extra_blocks: Vec<SweepBlock>,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    /// OMP stops once `‖r‖ ≤ omp_res_tol · ‖X‖`.
    pub omp_res_tol: f64,
    pub bp: BpConfig,
    pub dictionary: DictionarySource,
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub card_lo: usize,
    pub card_hi: usize,
    pub card_step: usize,
    pub trials: usize,
}

impl SweepBlock {
    fn cardinalities(&self) -> impl Iterator<Item = usize> {
        (self.card_lo..=self.card_hi).step_by(self.card_step.max(1))
    }
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Noiseless sweep on a designed `n = 64, m = 2, N = 640` dictionary over cardinalities 1..=300.
    pub fn reference() -> Self {
        Self {
            n: 64,
            m: 2,
            signal_len: 640,
            card_lo: 1,
            card_hi: 300,
            card_step: 1,
            trials_per_cardinality: 100,
            extra_blocks: Vec::new(),
            seed: 0,
            solvers: vec![SolverKind::Omp, SolverKind::Bp],
            omp_res_tol: 1e-9,
            bp: BpConfig::default(),
            dictionary: DictionarySource::LowCoherence { iters: 2000 },
            timeout_secs: 60.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.signal_len * self.m;
        let bad = |msg: String| Err(CscError::Invalid(msg));
        if self.n == 0 || self.m == 0 || self.signal_len < self.n {
            return bad(format!("invalid shape n={}, m={}, N={}", self.n, self.m, self.signal_len));
        }
        for b in self.blocks() {
            if b.card_lo < 1 || b.card_hi > total || b.card_lo > b.card_hi {
                return bad(format!(
                    "cardinality range {}..={} must lie in 1..={total}",
                    b.card_lo, b.card_hi
                ));
            }
            if b.card_step == 0 {
                return bad("cardinality step must be positive".into());
            }
            if b.trials == 0 {
                return bad("at least one trial per cardinality is required".into());
            }
        }
        if !(self.timeout_secs > 0.0) {
            return bad("timeout must be positive".into());
        }
        Ok(())
    }

    fn blocks(&self) -> impl Iterator<Item = SweepBlock> + '_ {
        let main = SweepBlock {
            card_lo: self.card_lo,
            card_hi: self.card_hi,
            card_step: self.card_step,
            trials: self.trials_per_cardinality,
        };
        std::iter::once(main).chain(self.extra_blocks.iter().copied())
    }

    /// `(cardinality, trials)` for every sweep point, main range first.
    pub fn schedule(&self) -> Vec<(usize, usize)> {
        self.blocks()
            .flat_map(|b| b.cardinalities().map(move |c| (c, b.trials)))
            .collect()
    }

    pub fn total_trials(&self) -> usize {
        self.schedule().iter().map(|p| p.1).sum()
    }

    fn bp_params(&self, deadline: Option<Instant>) -> BpParams {
        BpParams {
            admm: AdmmParams {
                rho: self.bp.rho,
                max_iters: self.bp.max_iters,
                eps_abs: self.bp.eps_abs,
                eps_rel: self.bp.eps_rel,
                ..AdmmParams::default()
            },
            support_threshold: self.bp.support_threshold,
            projector: ProjectorKind::Auto,
            deadline,
        }
    }

    /// Local dictionary described by `dictionary`, drawn from stream 0 of the seed.
    pub fn build_dictionary(&self) -> Result<ConvDictionary> {
        let local = match &self.dictionary {
            DictionarySource::File { path } => {
                let local = crate::io::read_dictionary(path)?;
                if local.n() != self.n || local.m() != self.m {
                    return Err(CscError::Invalid(format!(
                        "dictionary file is {}x{}, config expects {}x{}",
                        local.n(),
                        local.m(),
                        self.n,
                        self.m
                    )));
                }
                local
            }
            DictionarySource::Random => random_local(self.n, self.m, self.seed)?,
            DictionarySource::LowCoherence { iters } => {
                low_coherence_local(self.n, self.m, self.seed, *iters)?.dict
            }
        };
        ConvDictionary::new(local, self.signal_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub cardinality: usize,
    pub l0_inf: usize,
    pub omp_success: Option<bool>,
    pub bp_success: Option<bool>,
    pub error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub l0_inf: usize,
    /// Trials without solver errors in this bin.
    pub count: usize,
    pub omp_successes: usize,
    pub bp_successes: usize,
    pub omp_success_rate: Option<f64>,
    pub bp_success_rate: Option<f64>,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub mu: f64,
    /// `½(1 + 1/μ)`.
    pub bound: f64,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionTable {
    pub metadata: TableMetadata,
    pub rows: Vec<PhaseRow>,
}

impl PhaseTransitionTable {
    pub fn row(&self, l0_inf: usize) -> Option<&PhaseRow> {
        self.rows.iter().find(|r| r.l0_inf == l0_inf)
    }

    pub fn total_count(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn total_errors(&self) -> usize {
        self.rows.iter().map(|r| r.errors).sum()
    }

    /// Aggregates trial outcomes by measured `ℓ0,∞`.
    pub fn from_outcomes(metadata: TableMetadata, outcomes: &[TrialOutcome]) -> Self {
        let omp_on = metadata.config.solvers.contains(&SolverKind::Omp);
        let bp_on = metadata.config.solvers.contains(&SolverKind::Bp);
        let mut bins: BTreeMap<usize, PhaseRow> = BTreeMap::new();
        for o in outcomes {
            let row = bins.entry(o.l0_inf).or_insert_with(|| PhaseRow {
                l0_inf: o.l0_inf,
                count: 0,
                omp_successes: 0,
                bp_successes: 0,
                omp_success_rate: None,
                bp_success_rate: None,
                errors: 0,
            });
            if o.error {
                row.errors += 1;
                continue;
            }
            row.count += 1;
            row.omp_successes += usize::from(o.omp_success == Some(true));
            row.bp_successes += usize::from(o.bp_success == Some(true));
        }
        let rows = bins
            .into_values()
            .map(|mut r| {
                let rate = |s: usize| (r.count > 0).then(|| s as f64 / r.count as f64);
                r.omp_success_rate = if omp_on { rate(r.omp_successes) } else { None };
                r.bp_success_rate = if bp_on { rate(r.bp_successes) } else { None };
                r
            })
            .collect();
        Self { metadata, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("l0_inf,count,omp_success_rate,bp_success_rate,errors\n");
        let fmt = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.l0_inf,
                r.count,
                fmt(r.omp_success_rate),
                fmt(r.bp_success_rate),
                r.errors
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Writes the table as CSV or JSON.
pub fn emit(table: &PhaseTransitionTable, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json()?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CscError::Invalid(format!("thread pool: {e}")))
}

/// Builds the configured dictionary and runs the sweep on `threads` workers (0 = all cores).
pub fn run_phase_transition(cfg: &ExperimentConfig, threads: usize) -> Result<PhaseTransitionTable> {
    cfg.validate()?;
    let dict = cfg.build_dictionary()?;
    run_phase_transition_on(cfg, &dict, threads)
}

/// Runs the sweep on a given dictionary.
pub fn run_phase_transition_on(
    cfg: &ExperimentConfig,
    dict: &ConvDictionary,
    threads: usize,
) -> Result<PhaseTransitionTable> {
    cfg.validate()?;
    check_dict(cfg, dict)?;
    let mu = mutual_coherence(dict);
    let bound = if mu > 0.0 { 0.5 * (1.0 + 1.0 / mu) } else { f64::INFINITY };
    let jobs = trial_jobs(cfg);
    let outcomes: Vec<TrialOutcome> = pool(threads)?.install(|| {
        jobs.par_iter().map(|&(t, card)| run_trial(cfg, dict, t, card)).collect()
    });
    let metadata = TableMetadata {
        mu,
        bound,
        config: cfg.clone(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(PhaseTransitionTable::from_outcomes(metadata, &outcomes))
}

/// Raw per-trial outcomes in trial order, without aggregation.
pub fn run_trials(
    cfg: &ExperimentConfig,
    dict: &ConvDictionary,
    threads: usize,
) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    check_dict(cfg, dict)?;
    let jobs = trial_jobs(cfg);
    Ok(pool(threads)?.install(|| {
        jobs.par_iter().map(|&(t, card)| run_trial(cfg, dict, t, card)).collect()
    }))
}

fn check_dict(cfg: &ExperimentConfig, dict: &ConvDictionary) -> Result<()> {
    if dict.n() != cfg.n || dict.m() != cfg.m || dict.signal_len() != cfg.signal_len {
        return Err(CscError::Invalid("dictionary does not match the configuration".into()));
    }
    Ok(())
}

fn trial_jobs(cfg: &ExperimentConfig) -> Vec<(u64, usize)> {
    cfg.schedule()
        .into_iter()
        .flat_map(|(card, trials)| std::iter::repeat_n(card, trials))
        .enumerate()
        .map(|(t, card)| (t as u64, card))
        .collect()
}

/// One generated code, measured and pursued by every configured solver.
pub fn run_trial(
    cfg: &ExperimentConfig,
    dict: &ConvDictionary,
    trial: u64,
    cardinality: usize,
) -> TrialOutcome {
    let mut rng = dictgen::stream(cfg.seed, trial + 1);
    let (code, signal) = match gen_signal_with(dict, cardinality, &mut rng) {
        Ok(v) => v,
        Err(_) => {
            return TrialOutcome {
                cardinality,
                l0_inf: 0,
                omp_success: None,
                bp_success: None,
                error: true,
            }
        }
    };
    let loi = l0_inf(&code, dict.n());
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.timeout_secs);
    let mut error = false;

    let omp_success = cfg.solvers.contains(&SolverKind::Omp).then(|| {
        match run_omp(dict, &signal, cfg.omp_res_tol) {
            Ok(r) => exact_recovery(&code, &r, EXACT_RECOVERY_TOL),
            Err(CscError::SingularSupport { .. }) => false,
            Err(_) => {
                error = true;
                false
            }
        }
    });
    let bp_success = cfg.solvers.contains(&SolverKind::Bp).then(|| {
        match run_bp(dict, &signal, &code, cfg, deadline) {
            Ok(ok) => ok,
            Err(_) => {
                error = true;
                false
            }
        }
    });
    TrialOutcome { cardinality, l0_inf: loi, omp_success, bp_success, error }
}

/// OMP with `max_iters = min(N, mN)` and a residual tolerance relative to `‖X‖`.
pub fn run_omp(
    dict: &ConvDictionary,
    signal: &[f64],
    res_tol_rel: f64,
) -> Result<crate::pursuit::PursuitResult> {
    let params = OmpParams {
        max_iters: dict.signal_len().min(dict.num_atoms()),
        res_tol: res_tol_rel * l2(signal),
    };
    omp(dict, signal, params)
}

/// BP, rerun with doubled iteration caps (up to three times) while it fails to converge.
fn run_bp(
    dict: &ConvDictionary,
    signal: &[f64],
    truth: &SparseCode,
    cfg: &ExperimentConfig,
    deadline: Instant,
) -> Result<bool> {
    let mut params = cfg.bp_params(Some(deadline));
    for attempt in 0..=3 {
        match basis_pursuit(dict, signal, &params) {
            Ok(r) => return Ok(exact_recovery(truth, &r, EXACT_RECOVERY_TOL)),
            Err(CscError::NonConvergence(r)) if attempt == 3 => {
                return Ok(exact_recovery(truth, &r, EXACT_RECOVERY_TOL));
            }
            Err(CscError::NonConvergence(_)) => params.admm.max_iters *= 2,
            Err(e) => return Err(e),
        }
    }
    unreachable!("the last attempt always returns")
}

/// Pairs of `(‖Γ‖0,∞, max_i ζ_i)` for random codes, plus their Pearson correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceScatter {
    pub mu: f64,
    pub mu0: f64,
    pub pairs: Vec<(usize, f64)>,
    pub pearson: f64,
}

impl CoherenceScatter {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l0_inf,max_stripe_coherence\n");
        for (l, z) in &self.pairs {
            out.push_str(&format!("{l},{z}\n"));
        }
        out
    }
}

pub fn run_coherence_scatter(cfg: &ExperimentConfig, threads: usize) -> Result<CoherenceScatter> {
    cfg.validate()?;
    let dict = cfg.build_dictionary()?;
    run_coherence_scatter_on(cfg, dict.local(), threads)
}

/// Scatter on a given local dictionary; the solvers in `cfg` are ignored.
pub fn run_coherence_scatter_on(
    cfg: &ExperimentConfig,
    local: &LocalDictionary,
    threads: usize,
) -> Result<CoherenceScatter> {
    cfg.validate()?;
    let dict = ConvDictionary::new(local.clone(), cfg.signal_len)?;
    let profile = profile_or_zero(local);
    let jobs = trial_jobs(cfg);
    let pairs = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|&(t, card)| {
                let mut rng = dictgen::stream(cfg.seed, t + 1);
                let code = dictgen::random_code_with(cfg.signal_len, cfg.m, card, &mut rng)?;
                let zeta = stripe_coherence(&code, &profile)?;
                Ok((l0_inf(&code, dict.n()), zeta.max()))
            })
            .collect::<Result<Vec<(usize, f64)>>>()
    })?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(CoherenceScatter {
        mu: mutual_coherence(&dict),
        mu0: profile.mu0,
        pearson: pearson(&xs, &ys),
        pairs,
    })
}

/// Sample Pearson correlation; `NaN` when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
