//! Global pursuit: OMP, ADMM basis pursuit, recovery-guarantee predicates
//! and an exhaustive `P0` oracle for tiny problems.

mod bp;
mod guarantees;
mod lstsq;
mod omp;
mod p0;

use serde::{Deserialize, Serialize};

use crate::conv_dict::{l2, ConvDictionary, SparseCode};

pub use bp::{
    admm_l1, basis_pursuit, AdmmOutput, AdmmParams, BpParams, Projector, ProjectorKind,
    FOURIER_PROJECTOR_MIN_LEN,
};
pub use guarantees::{
    guarantee_dominance_check, guarantee_l0inf, guarantee_report, guarantee_stripe,
    DominanceReport, GuaranteeCheck, GuaranteeReport,
};
pub use lstsq::least_squares_on_support;
pub use omp::{omp, OmpParams};
pub use p0::{p0_bruteforce, P0_COLUMN_GUARD};

/// Coefficient tolerance of the exact-recovery verdict.
pub const EXACT_RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitResult {
    /// Recovered code values, position-major.
    pub code: Vec<f64>,
    /// Sorted global column indices of the recovered support.
    pub support: Vec<usize>,
    pub iterations: usize,
    /// `‖X − D·code‖2`, recomputed from the returned code.
    pub residual_norm: f64,
    pub converged: bool,
    /// OMP: residual norm before each selection and after the last one. Empty for BP.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
}

impl PursuitResult {
    pub(crate) fn finish(
        dict: &ConvDictionary,
        signal: &[f64],
        code: Vec<f64>,
        support: Vec<usize>,
        iterations: usize,
        converged: bool,
        residual_history: Vec<f64>,
    ) -> Self {
        let synth = dict.apply_slice(&code);
        let residual: Vec<f64> = signal.iter().zip(&synth).map(|(a, b)| a - b).collect();
        Self {
            code,
            support,
            iterations,
            residual_norm: l2(&residual),
            converged,
            residual_history,
        }
    }

    pub fn to_sparse_code(&self, dict: &ConvDictionary) -> SparseCode {
        SparseCode::from_values(dict.signal_len(), dict.m(), self.code.clone())
            .expect("solver output matches the dictionary shape")
    }
}

/// Support sets equal and every coefficient within `tol` of the truth.
pub fn exact_recovery(truth: &SparseCode, result: &PursuitResult, tol: f64) -> bool {
    if truth.support() != result.support || truth.values().len() != result.code.len() {
        return false;
    }
    truth
        .values()
        .iter()
        .zip(&result.code)
        .all(|(a, b)| (a - b).abs() <= tol)
}
