//! Basis pursuit `min ‖Γ‖1 s.t. DΓ = X` by ADMM.
//!
//! Splitting `Γ = z` with `Γ` constrained to the affine set `{DΓ = X}`:
//!
//! ```text
//! x ← Π(z − u)            projection onto DΓ = X
//! z ← S_{1/ρ}(x + u)      soft threshold
//! u ← u + x − z
//! ```
//!
//! with over-relaxation (`x` replaced by `αx + (1−α)z` in the last two steps)
//! and optional residual balancing of `ρ`.
//!
//! `Π(v) = v − Dᵀ(DDᵀ)⁺(Dv − X)`. `DDᵀ = Σ_f C_f C_fᵀ` is circulant, so for
//! long signals it is inverted in the frequency domain; short signals use a
//! dense eigendecomposition.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::conv_dict::{l2, ConvDictionary};
use crate::error::{CscError, Result};

use super::lstsq::least_squares_on_support;
use super::PursuitResult;

/// Signals at least this long use the frequency-domain projector under [`ProjectorKind::Auto`].
pub const FOURIER_PROJECTOR_MIN_LEN: usize = 128;

/// Eigenvalues of `DDᵀ` below this fraction of the largest are treated as zero.
const PINV_TOL: f64 = 1e-12;

const RHO_UPDATE_PERIOD: usize = 10;
const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e6;
/// ρ is frozen after this many iterations so the tail runs plain fixed-ρ ADMM.
const RHO_ADAPT_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    pub rho: f64,
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Over-relaxation factor `α ∈ (0, 2)`; 1 is plain ADMM.
    pub relaxation: f64,
    /// Residual balancing: ρ is scaled by 2 whenever one residual exceeds the other tenfold.
    pub adaptive_rho: bool,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 20_000,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            relaxation: 1.6,
            adaptive_rho: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectorKind {
    #[default]
    Auto,
    Dense,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpParams {
    pub admm: AdmmParams,
    /// Entries with `|value| > support_threshold` form the debiasing support.
    pub support_threshold: f64,
    pub projector: ProjectorKind,
    /// Abort with [`CscError::Timeout`] once this instant passes.
    pub deadline: Option<Instant>,
}

impl Default for BpParams {
    fn default() -> Self {
        Self {
            admm: AdmmParams::default(),
            support_threshold: 1e-5,
            projector: ProjectorKind::Auto,
            deadline: None,
        }
    }
}

/// Projection onto `{v : Dv = X}` for a fixed dictionary.
pub enum Projector {
    Dense {
        dense: DMatrix<f64>,
        /// `(DDᵀ)⁺`.
        pinv: DMatrix<f64>,
    },
    Fourier(FourierProjector),
}

pub struct FourierProjector {
    len: usize,
    m: usize,
    /// FFT of each zero-padded atom.
    atoms_hat: Vec<Vec<Complex64>>,
    /// `1/λ_k` of `DDᵀ`, zero where `λ_k` is negligible.
    inv_eig: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Projector {
    pub fn new(dict: &ConvDictionary, kind: ProjectorKind) -> Result<Self> {
        let kind = match kind {
            ProjectorKind::Auto if dict.signal_len() >= FOURIER_PROJECTOR_MIN_LEN => {
                ProjectorKind::Fourier
            }
            ProjectorKind::Auto => ProjectorKind::Dense,
            k => k,
        };
        match kind {
            ProjectorKind::Fourier => Ok(Projector::Fourier(FourierProjector::new(dict))),
            _ => {
                let dense = dict.materialize_dense()?;
                let ddt = &dense * dense.transpose();
                let eig = SymmetricEigen::new(ddt);
                let top = eig.eigenvalues.amax();
                let inv = eig.eigenvalues.map(|l| if l > PINV_TOL * top { 1.0 / l } else { 0.0 });
                let q = &eig.eigenvectors;
                let pinv = q * DMatrix::from_diagonal(&inv) * q.transpose();
                Ok(Projector::Dense { dense, pinv })
            }
        }
    }

    /// `Π(v) = v − Dᵀ(DDᵀ)⁺(Dv − X)`.
    pub fn project(&self, v: &[f64], signal: &[f64]) -> Vec<f64> {
        match self {
            Projector::Dense { dense, pinv } => {
                let vv = DVector::from_column_slice(v);
                let r = dense * &vv - DVector::from_column_slice(signal);
                let corr = dense.transpose() * (pinv * r);
                (vv - corr).iter().copied().collect()
            }
            Projector::Fourier(f) => f.project(v, signal),
        }
    }
}

impl FourierProjector {
    fn new(dict: &ConvDictionary) -> Self {
        let (len, m) = (dict.signal_len(), dict.m());
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let atoms_hat: Vec<Vec<Complex64>> = (0..m)
            .map(|f| {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for (b, &a) in buf.iter_mut().zip(dict.local().atom(f)) {
                    b.re = a;
                }
                forward.process(&mut buf);
                buf
            })
            .collect();
        let eig: Vec<f64> = (0..len)
            .map(|k| atoms_hat.iter().map(|a| a[k].norm_sqr()).sum())
            .collect();
        let top = eig.iter().copied().fold(0.0, f64::max);
        let inv_eig = eig.iter().map(|&l| if l > PINV_TOL * top { 1.0 / l } else { 0.0 }).collect();
        Self { len, m, atoms_hat, inv_eig, forward, inverse }
    }

    fn project(&self, v: &[f64], signal: &[f64]) -> Vec<f64> {
        let (len, m) = (self.len, self.m);
        let zero = Complex64::new(0.0, 0.0);

        // FFT(Dv − X) = Σ_f Â_f · FFT(z_f) − FFT(X)
        let mut resid: Vec<Complex64> = signal.iter().map(|&s| Complex64::new(-s, 0.0)).collect();
        self.forward.process(&mut resid);
        let mut buf = vec![zero; len];
        for f in 0..m {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(v[i * m + f], 0.0);
            }
            self.forward.process(&mut buf);
            for ((r, b), a) in resid.iter_mut().zip(&buf).zip(&self.atoms_hat[f]) {
                *r += a * b;
            }
        }
        for (r, &inv) in resid.iter_mut().zip(&self.inv_eig) {
            *r *= inv;
        }

        // Dᵀ y per filter: circular cross-correlation, conj(Â_f) in frequency.
        let scale = 1.0 / len as f64;
        let mut out = v.to_vec();
        for f in 0..m {
            for ((b, r), a) in buf.iter_mut().zip(&resid).zip(&self.atoms_hat[f]) {
                *b = a.conj() * r;
            }
            self.inverse.process(&mut buf);
            for (i, b) in buf.iter().enumerate() {
                out[i * m + f] -= b.re * scale;
            }
        }
        out
    }
}

/// Raw ADMM iterates at termination.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutput {
    /// Projected iterate, satisfies `Dx = X` to rounding.
    pub x: Vec<f64>,
    /// Sparse iterate from the shrinkage step.
    pub z: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// ADMM for `min ‖Γ‖1 s.t. DΓ = X` without debiasing.
pub fn admm_l1(
    dict: &ConvDictionary,
    signal: &[f64],
    projector: &Projector,
    params: &AdmmParams,
    deadline: Option<Instant>,
) -> Result<AdmmOutput> {
    let p = dict.num_atoms();
    let sqrt_p = (p as f64).sqrt();
    let alpha = params.relaxation;
    let mut rho = params.rho;
    let mut z = vec![0.0; p];
    let mut u = vec![0.0; p];
    let mut x = vec![0.0; p];
    let mut v = vec![0.0; p];
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);

    for it in 1..=params.max_iters {
        for ((vi, zi), ui) in v.iter_mut().zip(&z).zip(&u) {
            *vi = zi - ui;
        }
        x = projector.project(&v, signal);

        let kappa = 1.0 / rho;
        let mut dz = 0.0;
        let mut r2 = 0.0;
        for ((xi, zi), ui) in x.iter().zip(z.iter_mut()).zip(u.iter_mut()) {
            let xh = alpha * xi + (1.0 - alpha) * *zi;
            let z_new = soft_threshold(xh + *ui, kappa);
            dz += (z_new - *zi) * (z_new - *zi);
            *zi = z_new;
            *ui += xh - z_new;
            r2 += (xi - z_new) * (xi - z_new);
        }
        r_norm = r2.sqrt();
        s_norm = rho * dz.sqrt();
        let eps_pri = sqrt_p * params.eps_abs + params.eps_rel * l2(&x).max(l2(&z));
        let eps_dual = sqrt_p * params.eps_abs + params.eps_rel * rho * l2(&u);
        if r_norm <= eps_pri && s_norm <= eps_dual {
            return Ok(AdmmOutput {
                x,
                z,
                iterations: it,
                converged: true,
                primal_residual: r_norm,
                dual_residual: s_norm,
            });
        }
        if params.adaptive_rho && it <= RHO_ADAPT_ITERS && it % RHO_UPDATE_PERIOD == 0 {
            let scale = if r_norm > 10.0 * s_norm && rho < RHO_MAX {
                2.0
            } else if s_norm > 10.0 * r_norm && rho > RHO_MIN {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                u.iter_mut().for_each(|ui| *ui /= scale);
            }
        }
        if it % 64 == 0 {
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    return Err(CscError::Timeout);
                }
            }
        }
    }
    Ok(AdmmOutput {
        x,
        z,
        iterations: params.max_iters,
        converged: false,
        primal_residual: r_norm,
        dual_residual: s_norm,
    })
}

/// Basis pursuit with least-squares debiasing on the detected support.
///
/// The support is `{j : |z_j| > support_threshold}`. If the refit on that
/// support does not reproduce the signal (relative residual above `1e-9`), the
/// threshold is lowered by decades down to `1e-12` so that genuine but tiny
/// coefficients are not dropped; if no threshold works the raw ADMM iterate is
/// returned. Non-convergence is reported as [`CscError::NonConvergence`]
/// carrying the result refit at `support_threshold` only.
pub fn basis_pursuit(
    dict: &ConvDictionary,
    signal: &[f64],
    params: &BpParams,
) -> Result<PursuitResult> {
    if signal.len() != dict.signal_len() {
        return Err(CscError::Dimension(format!(
            "signal of length {} does not match N={}",
            signal.len(),
            dict.signal_len()
        )));
    }
    let projector = Projector::new(dict, params.projector)?;
    let out = admm_l1(dict, signal, &projector, &params.admm, params.deadline)?;
    let (code, support) = debias(dict, signal, &out.z, params.support_threshold, out.converged);
    let result = PursuitResult::finish(
        dict,
        signal,
        code,
        support,
        out.iterations,
        out.converged,
        Vec::new(),
    );
    if out.converged {
        Ok(result)
    } else {
        Err(CscError::NonConvergence(Box::new(result)))
    }
}

fn debias(
    dict: &ConvDictionary,
    signal: &[f64],
    raw: &[f64],
    threshold: f64,
    retry: bool,
) -> (Vec<f64>, Vec<usize>) {
    let tol = 1e-9 * l2(signal).max(1.0);
    let floor = if retry { 1e-12 } else { threshold };
    let mut threshold = threshold;
    let mut last: Option<usize> = None;
    while threshold >= floor {
        let support: Vec<usize> =
            (0..raw.len()).filter(|&j| raw[j].abs() > threshold).collect();
        if support.len() > dict.signal_len() {
            break;
        }
        if last != Some(support.len()) {
            last = Some(support.len());
            if let Some(coef) = least_squares_on_support(dict, &support, signal) {
                let mut code = vec![0.0; raw.len()];
                for (&j, &c) in support.iter().zip(&coef) {
                    code[j] = c;
                }
                let synth = dict.apply_slice(&code);
                let resid: f64 =
                    synth.iter().zip(signal).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if resid <= tol {
                    return (code, support);
                }
            }
        }
        threshold /= 10.0;
    }
    let support = (0..raw.len()).filter(|&j| raw[j] != 0.0).collect();
    (raw.to_vec(), support)
}
