//! Force-based balance controller built on the nominal model.
//!
//! The error state carries two views of the same quantity. `eta` is the literal
//! error `[p − p_d; log(R_d Rᵀ); v − v_d; ω − ω_d]`, whose rotation part is a
//! world-frame rotation vector pointing from actual to desired. The feedback
//! coordinates `fb` replace that part with the body-frame rotation from desired
//! to actual, `−R_dᵀ log(R_d Rᵀ)`, so every channel of `fb` is "actual minus
//! desired" and the PD law `−K_P e − K_D ė` is negative feedback on all six
//! channels. The angular rows of the wrench are expressed in the body frame to
//! match `Ī ω̇_b`.

use nalgebra::SMatrix;
use thiserror::Error;

use crate::plant::{gravity, InertialParams, PlantState};
use crate::qp::{achieved_wrench, build_constraints, build_wrench_matrix, BalanceQp, ConstraintSet, ForceSolution, FrictionParams, QpError, QpWeights, WrenchMatrix};
use crate::so3::{orientation_error, rot_exp, Mat3, Mat6, Rot3, So3Error, Vec12, Vec3, Vec6};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Orientation(#[from] So3Error),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("invalid gains: {0}")]
    BadGains(&'static str),
    #[error("invalid nominal model: {0}")]
    BadModel(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainMatrices {
    /// Diagonal of K_P.
    pub kp: Vec6,
    /// Diagonal of K_D.
    pub kd: Vec6,
}

impl Default for GainMatrices {
    fn default() -> Self {
        Self { kp: Vec6::new(30.0, 30.0, 50.0, 80.0, 80.0, 80.0), kd: Vec6::new(10.0, 10.0, 10.0, 50.0, 50.0, 50.0) }
    }
}

impl GainMatrices {
    pub fn validate(&self) -> Result<(), ControlError> {
        let ok = |v: &Vec6| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !ok(&self.kp) || !ok(&self.kd) {
            return Err(ControlError::BadGains("gains must be positive and finite"));
        }
        Ok(())
    }

    pub fn kp_matrix(&self) -> Mat6 {
        Mat6::from_diagonal(&self.kp)
    }

    pub fn kd_matrix(&self) -> Mat6 {
        Mat6::from_diagonal(&self.kd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalModel {
    pub mass: f64,
    pub inertia: Mat3,
}

impl NominalModel {
    pub fn new(mass: f64, inertia: Mat3) -> Result<Self, ControlError> {
        InertialParams::new(mass, inertia).map_err(|_| ControlError::BadModel("mass must be positive and inertia SPD"))?;
        Ok(Self { mass, inertia })
    }

    pub fn m_bar(&self) -> Mat6 {
        let mut m = Mat6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Mat3::identity() * self.mass));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.inertia);
        m
    }

    pub fn g_bar(&self) -> Vec6 {
        let g = gravity() * self.mass;
        Vec6::new(g.x, g.y, g.z, 0.0, 0.0, 0.0)
    }

    /// `M̄⁻¹ (w − Ḡ)`.
    pub fn acceleration_from_wrench(&self, w: &Vec6) -> Vec6 {
        let d = w - self.g_bar();
        let lin = d.fixed_rows::<3>(0) / self.mass;
        let ang = self.inertia.cholesky().expect("validated SPD").solve(&d.fixed_rows::<3>(3).into_owned());
        Vec6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredTrajectory {
    pub p_c_d: Vec3,
    pub v_c_d: Vec3,
    pub r_d: Rot3,
    pub omega_b_d: Vec3,
}

impl DesiredTrajectory {
    pub fn hold(p: Vec3, yaw: f64) -> Self {
        Self { p_c_d: p, v_c_d: Vec3::zeros(), r_d: Rot3::from_yaw(yaw), omega_b_d: Vec3::zeros() }
    }
}

/// Advances the desired trajectory by one control period. Position integrates the
/// commanded velocity (given in the heading frame), yaw integrates the yaw rate,
/// and height tracks the command directly.
pub fn trajectory_from_commands(prev: &DesiredTrajectory, v_cmd: &Vec3, yaw_rate: f64, height: f64, dt: f64) -> DesiredTrajectory {
    let r_d = prev.r_d.compose(&rot_exp(&Vec3::new(0.0, 0.0, yaw_rate * dt)));
    let v_world = prev.r_d.apply(&Vec3::new(v_cmd.x, v_cmd.y, 0.0));
    let mut p = prev.p_c_d + v_world * dt;
    p.z = height;
    DesiredTrajectory { p_c_d: p, v_c_d: v_world, r_d, omega_b_d: Vec3::new(0.0, 0.0, yaw_rate) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorState {
    /// `[p − p_d; log(R_d Rᵀ); v − v_d; ω_b − ω_b,d]`.
    pub eta: Vec12,
    /// Feedback coordinates; see module docs.
    pub fb: Vec12,
}

impl ErrorState {
    pub fn e_rot(&self) -> Vec3 {
        self.eta.fixed_rows::<3>(3).into_owned()
    }
}

pub fn compute_error(s: &PlantState, d: &DesiredTrajectory) -> Result<ErrorState, ControlError> {
    let e_pos = s.p_c - d.p_c_d;
    let e_rot = orientation_error(&d.r_d, &s.rot)?;
    let e_vel = s.v_c - d.v_c_d;
    let e_omega = s.omega_b - d.omega_b_d;
    let e_rot_fb = -d.r_d.apply_inverse(&e_rot);
    let stack = |r: &Vec3| -> Vec12 {
        let mut v = Vec12::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&e_pos);
        v.fixed_rows_mut::<3>(3).copy_from(r);
        v.fixed_rows_mut::<3>(6).copy_from(&e_vel);
        v.fixed_rows_mut::<3>(9).copy_from(&e_omega);
        v
    };
    Ok(ErrorState { eta: stack(&e_rot), fb: stack(&e_rot_fb) })
}

/// `u = −K_P e − K_D ė`.
pub fn pd_law(eta: &Vec12, g: &GainMatrices) -> Vec6 {
    let e = eta.fixed_rows::<6>(0);
    let ed = eta.fixed_rows::<6>(6);
    -(e.component_mul(&g.kp) + ed.component_mul(&g.kd))
}

/// `b_d = M̄ u + Ḡ`.
pub fn desired_dynamics(u: &Vec6, nm: &NominalModel) -> Vec6 {
    nm.m_bar() * u + nm.g_bar()
}

/// Rotates the moment rows of `A` into the body frame.
pub fn body_frame_wrench(a: &WrenchMatrix, rot: &Rot3) -> WrenchMatrix {
    let mut t = SMatrix::<f64, 6, 6>::identity();
    t.fixed_view_mut::<3, 3>(3, 3).copy_from(&rot.matrix().transpose());
    t * a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub gains: GainMatrices,
    pub nominal: NominalModel,
    pub weights: QpWeights,
    pub friction: FrictionParams,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        self.gains.validate()?;
        NominalModel::new(self.nominal.mass, self.nominal.inertia)?;
        self.weights.validate()?;
        self.friction.validate()?;
        Ok(())
    }
}

/// Everything the force loop computed on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub solution: ForceSolution,
    pub error: ErrorState,
    pub u1: Vec6,
    pub b_d: Vec6,
    pub achieved: Vec6,
    /// `M̄⁻¹ (A F* − Ḡ)`.
    pub u_star: Vec6,
    /// `u_star` minus the requested total input.
    pub delta: Vec6,
    /// Body-frame wrench map used for this tick.
    pub a: WrenchMatrix,
}

/// Wraps the QP with the previous solution used by the smoothing term.
#[derive(Debug, Clone)]
pub struct ForceAllocator {
    qp: BalanceQp,
    pub f_prev: Vec12,
}

impl Default for ForceAllocator {
    fn default() -> Self {
        Self::new()
    }
}

impl ForceAllocator {
    pub fn new() -> Self {
        Self { qp: BalanceQp::new(), f_prev: Vec12::zeros() }
    }

    pub fn allocate(&mut self, a: &WrenchMatrix, b_d: &Vec6, w: &QpWeights, cons: &ConstraintSet) -> Result<ForceSolution, QpError> {
        let sol = self.qp.solve(a, b_d, w, &self.f_prev, cons)?;
        self.f_prev = sol.f;
        Ok(sol)
    }
}

/// Body-frame wrench map and constraint set for the current stance geometry.
pub fn stance_problem(s: &PlantState, contacts: &[bool; 4], fp: &FrictionParams) -> (WrenchMatrix, ConstraintSet) {
    let a = body_frame_wrench(&build_wrench_matrix(&s.feet, &s.p_c), &s.rot);
    (a, build_constraints(contacts, fp))
}

#[derive(Debug, Clone)]
pub struct BalanceController {
    pub cfg: ControllerConfig,
    pub allocator: ForceAllocator,
}

impl BalanceController {
    pub fn new(cfg: ControllerConfig) -> Result<Self, ControlError> {
        cfg.validate()?;
        Ok(Self { cfg, allocator: ForceAllocator::new() })
    }

    /// One force-loop tick with an extra input `u_extra` added to the PD term.
    pub fn tick(&mut self, s: &PlantState, d: &DesiredTrajectory, contacts: &[bool; 4], u_extra: &Vec6) -> Result<TickOutput, ControlError> {
        let error = compute_error(s, d)?;
        let u1 = pd_law(&error.fb, &self.cfg.gains);
        let u = u1 + u_extra;
        let b_d = desired_dynamics(&u, &self.cfg.nominal);
        let (a, cons) = stance_problem(s, contacts, &self.cfg.friction);
        let solution = self.allocator.allocate(&a, &b_d, &self.cfg.weights, &cons)?;
        let achieved = achieved_wrench(&a, &solution.f);
        let u_star = self.cfg.nominal.acceleration_from_wrench(&achieved);
        Ok(TickOutput { solution, error, u1, b_d, achieved, u_star, delta: u_star - u, a })
    }

    pub fn baseline_tick(&mut self, s: &PlantState, d: &DesiredTrajectory, contacts: &[bool; 4]) -> Result<TickOutput, ControlError> {
        self.tick(s, d, contacts, &Vec6::zeros())
    }
}
