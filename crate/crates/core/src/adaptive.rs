//! L1 adaptive augmentation of the balance controller.
//!
//! A state predictor runs the nominal closed loop plus the current estimate
//! `θ̂ = α̂‖η‖ + β̂` of the lumped uncertainty. The prediction error drives
//! projection-based adaptation of `α̂` and `β̂`, and the compensation input
//! `u₂ = −C(s) θ̂` passes the estimate through a second-order low-pass filter
//! before it reaches the force loop.

use thiserror::Error;

use crate::controller::{desired_dynamics, pd_law, BalanceController, ControlError, DesiredTrajectory, ForceAllocator, TickOutput};
use crate::plant::PlantState;
use crate::qp::{build_constraints, ForceSolution};
use crate::so3::{Mat12, Vec12, Vec6};
use crate::stability::LyapunovData;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdaptError {
    #[error("invalid adaptation config: {0}")]
    BadConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Diagonal of Γ.
    pub gamma: Vec6,
    pub zeta: f64,
    pub omega_n: f64,
    pub theta_bound: Vec6,
    pub eps_p: f64,
    pub enabled: bool,
    /// Drive the predictor with the input the reference QP can actually realize.
    pub predictor_uses_qp: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            gamma: Vec6::new(1.0, 1.0, 5.0, 2.0, 5.0, 1.0) * 1e3,
            zeta: 0.7,
            omega_n: 400.0,
            theta_bound: Vec6::new(10.0, 10.0, 20.0, 20.0, 20.0, 10.0),
            eps_p: 0.1,
            enabled: true,
            predictor_uses_qp: true,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self, dt: f64) -> Result<(), AdaptError> {
        if self.gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(AdaptError::BadConfig("gamma must be non-negative"));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(AdaptError::BadConfig("zeta must be in (0, 1]"));
        }
        if !(self.omega_n > 0.0) || !self.omega_n.is_finite() {
            return Err(AdaptError::BadConfig("omega_n must be positive"));
        }
        if !(dt * self.omega_n < 1.0) {
            return Err(AdaptError::BadConfig("omega_n * dt must be below 1"));
        }
        if self.theta_bound.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(AdaptError::BadConfig("bounds must be positive"));
        }
        if !(self.eps_p > 0.0 && self.eps_p <= 1.0) {
            return Err(AdaptError::BadConfig("eps_p must be in (0, 1]"));
        }
        Ok(())
    }

    /// Hard ceiling on each estimate, `bound·√(1 + ε)`.
    pub fn containment(&self, i: usize) -> f64 {
        self.theta_bound[i] * (1.0 + self.eps_p).sqrt()
    }
}

/// Per-channel second-order filter `ω²/(s² + 2ζωs + ω²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LowPass {
    pub x1: Vec6,
    pub x2: Vec6,
    /// Input sample from the previous tick.
    pub u_prev: Vec6,
}

/// One RK2 midpoint step over the interval ending at the current sample; the
/// input is interpolated linearly between the previous and current samples.
pub fn lowpass_step(f: &LowPass, input: &Vec6, zeta: f64, omega_n: f64, dt: f64) -> (LowPass, Vec6) {
    let w2 = omega_n * omega_n;
    let c = 2.0 * zeta * omega_n;
    let deriv = |x1: &Vec6, x2: &Vec6, u: &Vec6| -> (Vec6, Vec6) { (*x2, (u - x1) * w2 - x2 * c) };
    let u_mid = (f.u_prev + input) * 0.5;
    let (k1a, k1b) = deriv(&f.x1, &f.x2, &f.u_prev);
    let (k2a, k2b) = deriv(&(f.x1 + k1a * (0.5 * dt)), &(f.x2 + k1b * (0.5 * dt)), &u_mid);
    let next = LowPass { x1: f.x1 + k2a * dt, x2: f.x2 + k2b * dt, u_prev: *input };
    (next, next.x1)
}

/// `u₂ = −C(s) θ̂`, given the filter output.
pub fn u2_from_theta(filtered: &Vec6) -> Vec6 {
    -filtered
}

/// `θ̂ = α̂‖η‖ + β̂`.
pub fn theta_hat(alpha: &Vec6, beta: &Vec6, eta_norm: f64) -> Vec6 {
    alpha * eta_norm + beta
}

/// `y_α = −HᵀPη̃‖η‖`, `y_β = −HᵀPη̃` with `H = [0; I₆]`.
pub fn projection_functions(eta_tilde: &Vec12, eta_norm: f64, p: &Mat12) -> (Vec6, Vec6) {
    let ht_p = (p * eta_tilde).fixed_rows::<6>(6).into_owned();
    (-ht_p * eta_norm, -ht_p)
}

/// Smooth scalar projection. Inside `|θ| ≤ b/√(1+ε)` the update passes through;
/// beyond it, outward updates are scaled down and vanish at `|θ| = b`.
pub fn proj_operator(theta: f64, y: f64, bound: f64, eps_p: f64) -> f64 {
    let b2 = bound * bound;
    let f = ((1.0 + eps_p) * theta * theta - b2) / (eps_p * b2);
    let df = 2.0 * (1.0 + eps_p) * theta / (eps_p * b2);
    if f > 0.0 && df * y > 0.0 {
        y * (1.0 - f)
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveState {
    pub eta_hat: Vec12,
    pub alpha_hat: Vec6,
    pub beta_hat: Vec6,
    pub filter: LowPass,
    pub u2: Vec6,
    pub theta_hat: Vec6,
}

impl AdaptiveState {
    pub fn new(eta0: &Vec12) -> Self {
        Self { eta_hat: *eta0, alpha_hat: Vec6::zeros(), beta_hat: Vec6::zeros(), filter: LowPass::default(), u2: Vec6::zeros(), theta_hat: Vec6::zeros() }
    }
}

/// Forward-Euler step of `α̂̇ = Γ Proj(α̂, y_α)`, `β̂̇ = Γ Proj(β̂, y_β)`. The
/// result is clamped to the containment set so a large discrete step cannot
/// leave it.
pub fn adaptation_step(a: &AdaptiveState, y_alpha: &Vec6, y_beta: &Vec6, cfg: &AdaptConfig, dt: f64) -> AdaptiveState {
    let mut next = *a;
    for i in 0..6 {
        let lim = cfg.containment(i);
        let step = |theta: f64, y: f64| -> f64 {
            if cfg.gamma[i] == 0.0 || y == 0.0 {
                return theta;
            }
            (theta + dt * cfg.gamma[i] * proj_operator(theta, y, cfg.theta_bound[i], cfg.eps_p)).clamp(-lim, lim)
        };
        next.alpha_hat[i] = step(a.alpha_hat[i], y_alpha[i]);
        next.beta_hat[i] = step(a.beta_hat[i], y_beta[i]);
    }
    next
}

/// Predictor dynamics `η̂̇ = D η̂ + H û`, one forward-Euler step.
pub fn predictor_update(eta_hat: &Vec12, u: &Vec6, dt: f64) -> Vec12 {
    let mut next = *eta_hat;
    for i in 0..6 {
        next[i] += dt * eta_hat[6 + i];
        next[6 + i] += dt * u[i];
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1TickOutput {
    pub force: TickOutput,
    pub eta_tilde: Vec12,
    pub theta_hat: Vec6,
    pub u2: Vec6,
    pub alpha_hat: Vec6,
    pub beta_hat: Vec6,
    pub reference: ForceSolution,
}

/// Balance controller with the predictor and, in adaptive mode, the
/// compensation loop. In baseline mode the predictor still runs so the
/// prediction error can be logged, but estimates, filter and `u₂` stay zero.
#[derive(Debug, Clone)]
pub struct L1Controller {
    pub base: BalanceController,
    pub cfg: AdaptConfig,
    pub lyap: LyapunovData,
    pub mode: Mode,
    pub state: Option<AdaptiveState>,
    reference: ForceAllocator,
}

impl L1Controller {
    pub fn new(base: BalanceController, cfg: AdaptConfig, lyap: LyapunovData, mode: Mode) -> Self {
        Self { base, cfg, lyap, mode, state: None, reference: ForceAllocator::new() }
    }

    fn adapting(&self) -> bool {
        self.mode == Mode::Adaptive && self.cfg.enabled
    }

    pub fn tick(&mut self, s: &PlantState, d: &DesiredTrajectory, contacts: &[bool; 4], dt: f64) -> Result<L1TickOutput, ControlError> {
        let eta = crate::controller::compute_error(s, d)?.fb;
        let mut st = self.state.unwrap_or_else(|| AdaptiveState::new(&eta));
        let eta_norm = eta.norm();
        let eta_tilde = st.eta_hat - eta;

        let (theta, u2) = if self.adapting() {
            let theta = theta_hat(&st.alpha_hat, &st.beta_hat, eta_norm);
            let (filter, out) = lowpass_step(&st.filter, &theta, self.cfg.zeta, self.cfg.omega_n, dt);
            st.filter = filter;
            (theta, u2_from_theta(&out))
        } else {
            (Vec6::zeros(), Vec6::zeros())
        };
        st.theta_hat = theta;
        st.u2 = u2;

        let force = self.base.tick(s, d, contacts, &u2)?;

        let nominal = &self.base.cfg.nominal;
        let u_hat = pd_law(&st.eta_hat, &self.base.cfg.gains) + u2 + theta;
        let b_hat = desired_dynamics(&u_hat, nominal);
        let cons = build_constraints(contacts, &self.base.cfg.friction);
        let reference = self.reference.allocate(&force.a, &b_hat, &self.base.cfg.weights, &cons)?;
        let u_drive = if self.cfg.predictor_uses_qp { nominal.acceleration_from_wrench(&(force.a * reference.f)) } else { u_hat };
        st.eta_hat = predictor_update(&st.eta_hat, &u_drive, dt);

        if self.adapting() {
            let (ya, yb) = projection_functions(&eta_tilde, eta_norm, &self.lyap.p);
            st = adaptation_step(&st, &ya, &yb, &self.cfg, dt);
        }
        self.state = Some(st);
        Ok(L1TickOutput { force, eta_tilde, theta_hat: theta, u2, alpha_hat: st.alpha_hat, beta_hat: st.beta_hat, reference })
    }
}
