//! Lyapunov machinery for the PD closed loop and the runtime monitor.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::controller::GainMatrices;
use crate::so3::{symmetric_eig_extrema, Mat12, MatNM, So3Error, Vec12};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("closed-loop matrix is not Hurwitz (channel {channel})")]
    NotHurwitz { channel: usize },
    #[error("singular Lyapunov system")]
    SingularSystem,
    #[error("Q must be symmetric positive definite")]
    BadQ,
    #[error("dimension mismatch: A is {0}x{0}, Q is {1}x{2}")]
    Shape(usize, usize, usize),
    #[error(transparent)]
    Eigen(#[from] So3Error),
}

/// `A_m = [0 I; −K_P −K_D]`. Each diagonal channel has characteristic
/// polynomial `s² + k_d s + k_p`, which is Hurwitz iff both gains are positive.
pub fn build_am(g: &GainMatrices) -> Result<Mat12, StabilityError> {
    for ch in 0..6 {
        if !(g.kp[ch] > 0.0 && g.kd[ch] > 0.0) {
            return Err(StabilityError::NotHurwitz { channel: ch });
        }
    }
    let mut am = Mat12::zeros();
    for ch in 0..6 {
        am[(ch, 6 + ch)] = 1.0;
        am[(6 + ch, ch)] = -g.kp[ch];
        am[(6 + ch, 6 + ch)] = -g.kd[ch];
    }
    Ok(am)
}

/// Solves `Aᵀ P + P A = −Q` through `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P) = −vec(Q)`.
pub fn solve_lyapunov(a: &MatNM, q: &MatNM) -> Result<MatNM, StabilityError> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(StabilityError::Shape(n, q.nrows(), q.ncols()));
    }
    let at = a.transpose();
    let id = DMatrix::<f64>::identity(n, n);
    let k = id.kronecker(&at) + at.kronecker(&id);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = k.lu().solve(&rhs).ok_or(StabilityError::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::SingularSystem);
    }
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

pub fn lyapunov_residual(a: &MatNM, p: &MatNM, q: &MatNM) -> f64 {
    (a.transpose() * p + p * a + q).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovData {
    pub am: Mat12,
    pub q: Mat12,
    pub p: Mat12,
    /// `λ_min(Q) / λ_max(P)`.
    pub lambda: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub residual: f64,
}

impl LyapunovData {
    pub fn new(g: &GainMatrices, q: &Mat12) -> Result<Self, StabilityError> {
        let am = build_am(g)?;
        let qd = MatNM::from_column_slice(12, 12, q.as_slice());
        let (q_min, _) = symmetric_eig_extrema(&qd)?;
        if !(q_min > 0.0) {
            return Err(StabilityError::BadQ);
        }
        let ad = MatNM::from_column_slice(12, 12, am.as_slice());
        let pd = solve_lyapunov(&ad, &qd)?;
        let residual = lyapunov_residual(&ad, &pd, &qd);
        let (p_min, p_max) = symmetric_eig_extrema(&pd)?;
        if !(p_min > 0.0) {
            return Err(StabilityError::SingularSystem);
        }
        let p = Mat12::from_column_slice(pd.as_slice());
        Ok(Self { am, q: *q, p, lambda: q_min / p_max, p_min, p_max, residual })
    }

    pub fn with_identity_q(g: &GainMatrices) -> Result<Self, StabilityError> {
        Self::new(g, &Mat12::identity())
    }

    pub fn v(&self, eta: &Vec12) -> f64 {
        eta.dot(&(self.p * eta))
    }

    /// Exact derivative of V along the linear closed loop `η̇ = A_m η`.
    pub fn v_dot_linear(&self, eta: &Vec12) -> f64 {
        2.0 * eta.dot(&(self.p * (self.am * eta)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonitorSample {
    pub t: f64,
    pub v: f64,
    pub v_dot: f64,
    /// `V̇ + λ V`.
    pub bound_check: f64,
    pub v_tilde: f64,
    pub delta_u: f64,
}

/// Backward-difference monitor of the Lyapunov function along a run.
#[derive(Debug, Clone, Default)]
pub struct Monitor {
    prev_v: Option<f64>,
}

impl Monitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tick(&mut self, lyap: &LyapunovData, t: f64, eta: &Vec12, eta_tilde: &Vec12, delta_u: f64, dt: f64) -> MonitorSample {
        let v = lyap.v(eta);
        let v_dot = match self.prev_v {
            Some(prev) => (v - prev) / dt,
            None => 0.0,
        };
        self.prev_v = Some(v);
        MonitorSample { t, v, v_dot, bound_check: v_dot + lyap.lambda * v, v_tilde: lyap.v(eta_tilde), delta_u }
    }
}

/// Estimate-error terms added to `η̃ᵀPη̃` when the true parameters are known.
pub fn v_tilde_with_estimates(lyap: &LyapunovData, eta_tilde: &Vec12, alpha_err: &[f64; 6], beta_err: &[f64; 6], gamma: &[f64; 6]) -> f64 {
    let mut v = lyap.v(eta_tilde);
    for i in 0..6 {
        v += (alpha_err[i] * alpha_err[i] + beta_err[i] * beta_err[i]) / gamma[i];
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub max_v_tilde: f64,
    pub max_eta_tilde: f64,
    /// `sqrt(max Ṽ / λ_min(P))`.
    pub implied_bound: f64,
    /// Every logged `‖η̃‖` satisfies `‖η̃‖² λ_min(P) ≤ Ṽ` at its own sample.
    pub consistent: bool,
}

/// `samples` holds `(‖η̃‖, η̃ᵀPη̃)` per tick.
pub fn ultimate_bound_report(samples: &[(f64, f64)], lyap: &LyapunovData) -> BoundReport {
    let max_v_tilde = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let max_eta_tilde = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let consistent = samples.iter().all(|&(n, v)| lyap.p_min * n * n <= v * (1.0 + 1e-9) + 1e-300);
    let implied_bound = (max_v_tilde / lyap.p_min).sqrt();
    BoundReport { max_v_tilde, max_eta_tilde, implied_bound, consistent: consistent && max_eta_tilde <= implied_bound * (1.0 + 1e-9) + 1e-300 }
}
