use serde::Serialize;

use crate::conv_dict::SparseCode;
use crate::error::{CscError, Result};
use crate::measures::{l0_inf, stripe_coherence, CoherenceProfile};

/// Outcome of one sufficient recovery condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeCheck {
    /// Measured quantity: `‖Γ‖0,∞` or `max_i ζ_i`.
    pub value: f64,
    pub bound: f64,
    /// `value < bound`.
    pub holds: bool,
}

/// `‖Γ‖0,∞ < ½(1 + 1/μ)`: sufficient for both OMP and BP.
pub fn guarantee_l0inf(code: &SparseCode, n: usize, mu: f64) -> Result<GuaranteeCheck> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(CscError::Invalid(format!("coherence {mu} outside [0, 1]")));
    }
    if mu == 0.0 {
        return Err(CscError::Degenerate(
            "μ = 0: every code satisfies the ℓ0,∞ condition".into(),
        ));
    }
    let value = l0_inf(code, n) as f64;
    let bound = 0.5 * (1.0 + 1.0 / mu);
    Ok(GuaranteeCheck { value, bound, holds: value < bound })
}

/// `max_i ζ_i < ½(1 + μ0)`: the stripe-coherence condition for OMP and BP.
pub fn guarantee_stripe(code: &SparseCode, profile: &CoherenceProfile) -> Result<GuaranteeCheck> {
    let value = stripe_coherence(code, profile)?.max();
    let bound = 0.5 * (1.0 + profile.mu0);
    Ok(GuaranteeCheck { value, bound, holds: value < bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeReport {
    pub l0_inf: usize,
    pub l0inf_bound: f64,
    pub stripe_max: f64,
    pub stripe_bound: f64,
    pub l0inf_ok: bool,
    pub stripe_ok: bool,
}

/// Both conditions, with `μ(D)` taken as `profile.mu_global` (valid for `N ≥ 2n−1`).
pub fn guarantee_report(code: &SparseCode, profile: &CoherenceProfile) -> Result<GuaranteeReport> {
    let stripe = guarantee_stripe(code, profile)?;
    let loi = l0_inf(code, profile.n);
    let (l0inf_bound, l0inf_ok) = match guarantee_l0inf(code, profile.n, profile.mu_global) {
        Ok(g) => (g.bound, g.holds),
        Err(CscError::Degenerate(_)) => (f64::INFINITY, true),
        Err(e) => return Err(e),
    };
    Ok(GuaranteeReport {
        l0_inf: loi,
        l0inf_bound,
        stripe_max: stripe.value,
        stripe_bound: stripe.bound,
        l0inf_ok,
        stripe_ok: stripe.holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceReport {
    /// `μ(D) = μ0` within `1e-12`, so the implication is expected to hold.
    pub applicable: bool,
    pub l0inf_ok: bool,
    pub stripe_ok: bool,
    /// Applicable, `ℓ0,∞` condition met, stripe condition failed.
    pub counterexample: bool,
}

/// When `μ(D) = μ0`, the `ℓ0,∞` condition implies the stripe-coherence condition.
pub fn guarantee_dominance_check(
    code: &SparseCode,
    profile: &CoherenceProfile,
) -> Result<DominanceReport> {
    let report = guarantee_report(code, profile)?;
    let applicable = (profile.mu_global - profile.mu0).abs() <= 1e-12;
    Ok(DominanceReport {
        applicable,
        l0inf_ok: report.l0inf_ok,
        stripe_ok: report.stripe_ok,
        counterexample: applicable && report.l0inf_ok && !report.stripe_ok,
    })
}
