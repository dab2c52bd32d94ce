//! Ground-truth centroidal rigid body.
//!
//! The plant integrates the body driven by stance-foot forces, gravity,
//! attached point loads and a disturbance wrench. It is intentionally richer
//! than the controller model: it keeps the gyroscopic term and it sees the
//! loads (mass, inertia and centre-of-mass shift) that the controller never
//! receives.
//!
//! The state tracks a fixed reference point on the base (the unloaded base
//! centre of mass). When a load shifts the composite centre of mass, the
//! dynamics are solved about the composite point and mapped back to the
//! reference point with rigid-body kinematics.

use nalgebra::SVector;
use thiserror::Error;

use crate::so3::{rot_exp, skew, Mat3, Rot3, Vec12, Vec3};

pub const GRAVITY: f64 = 9.81;

/// Gravity vector `g` as it appears in `m (p̈ + g)`; points up.
pub fn gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, GRAVITY)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("non-finite input to plant derivatives")]
    NonFiniteInput,
    #[error("plant state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid plant step size {0}")]
    BadStep(f64),
    #[error("invalid inertial parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialParams {
    pub mass: f64,
    /// Inertia about the centre of mass, body frame.
    pub inertia: Mat3,
}

impl InertialParams {
    pub fn new(mass: f64, inertia: Mat3) -> Result<Self, PlantError> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(PlantError::BadParams("mass must be positive"));
        }
        if (inertia - inertia.transpose()).amax() > 1e-12 {
            return Err(PlantError::BadParams("inertia must be symmetric"));
        }
        if inertia.cholesky().is_none() {
            return Err(PlantError::BadParams("inertia must be positive definite"));
        }
        Ok(Self { mass, inertia })
    }

    pub fn diagonal(mass: f64, ixx: f64, iyy: f64, izz: f64) -> Result<Self, PlantError> {
        Self::new(mass, Mat3::from_diagonal(&Vec3::new(ixx, iyy, izz)))
    }
}

/// Point mass rigidly attached to the base over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadAttachment {
    pub mass: f64,
    /// Body-frame offset from the base centre of mass.
    pub offset: Vec3,
    pub active_from: f64,
    pub active_to: f64,
}

impl LoadAttachment {
    pub fn is_active(&self, t: f64) -> bool {
        self.mass > 0.0 && t >= self.active_from && t < self.active_to
    }
}

/// Inertia of a point mass about a point displaced by `d` from it.
fn point_inertia(mass: f64, d: &Vec3) -> Mat3 {
    (Mat3::identity() * d.norm_squared() - d * d.transpose()) * mass
}

/// Combines `base` (centre of mass at `base_com`, body frame) with `load` if it is
/// active at `t`. Returns the composite parameters and the shift of the centre
/// of mass relative to `base_com`.
pub fn composite_inertia(base: &InertialParams, base_com: &Vec3, load: &LoadAttachment, t: f64) -> (InertialParams, Vec3) {
    if !load.is_active(t) {
        return (*base, Vec3::zeros());
    }
    let total = base.mass + load.mass;
    let shift = (load.offset - base_com) * (load.mass / total);
    let new_com = base_com + shift;
    let inertia = base.inertia + point_inertia(base.mass, &(base_com - new_com)) + point_inertia(load.mass, &(load.offset - new_com));
    (InertialParams { mass: total, inertia }, shift)
}

/// True inertial description of the loaded body at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueBody {
    pub params: InertialParams,
    /// Composite centre of mass relative to the base reference point, body frame.
    pub com_shift: Vec3,
}

impl TrueBody {
    pub fn unloaded(params: InertialParams) -> Self {
        Self { params, com_shift: Vec3::zeros() }
    }

    /// Folds every load active at `t` into the base body.
    pub fn at_time(base: &InertialParams, loads: &[LoadAttachment], t: f64) -> Self {
        let mut params = *base;
        let mut com = Vec3::zeros();
        for load in loads {
            let (p, shift) = composite_inertia(&params, &com, load, t);
            params = p;
            com += shift;
        }
        Self { params, com_shift: com }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisturbanceShape {
    Constant,
    /// `amplitude * sin(2π f (t - t_start) + phase)` on every component.
    Sine { freq_hz: f64, phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSegment {
    pub t_start: f64,
    pub t_end: f64,
    /// World frame, applied at the composite centre of mass.
    pub force: Vec3,
    /// Body frame.
    pub torque: Vec3,
    pub shape: DisturbanceShape,
}

/// External wrench on the body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceSchedule {
    pub segments: Vec<DisturbanceSegment>,
}

impl DisturbanceSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn wrench_at(&self, t: f64) -> Wrench {
        let mut w = Wrench::default();
        for seg in &self.segments {
            if t < seg.t_start || t >= seg.t_end {
                continue;
            }
            let scale = match seg.shape {
                DisturbanceShape::Constant => 1.0,
                DisturbanceShape::Sine { freq_hz, phase } => {
                    (2.0 * std::f64::consts::PI * freq_hz * (t - seg.t_start) + phase).sin()
                }
            };
            w.force += seg.force * scale;
            w.torque += seg.torque * scale;
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    /// Base reference point, world frame.
    pub p_c: Vec3,
    pub v_c: Vec3,
    pub rot: Rot3,
    /// Body-frame angular velocity.
    pub omega_b: Vec3,
    pub feet: [Vec3; 4],
    pub contact: [bool; 4],
    pub t: f64,
}

impl PlantState {
    /// Body at rest at `p_c`, level, with all four feet planted at `feet`.
    pub fn standing(p_c: Vec3, feet: [Vec3; 4]) -> Self {
        Self {
            p_c,
            v_c: Vec3::zeros(),
            rot: Rot3::identity(),
            omega_b: Vec3::zeros(),
            feet,
            contact: [true; 4],
            t: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.p_c.iter().chain(self.v_c.iter()).chain(self.omega_b.iter()).chain(self.rot.matrix().iter()).all(|x| x.is_finite())
    }
}

pub fn foot_force(forces: &Vec12, leg: usize) -> Vec3 {
    forces.fixed_rows::<3>(3 * leg).into_owned()
}

/// Linear acceleration of the base reference point and body angular acceleration.
pub fn plant_derivatives(s: &PlantState, forces: &Vec12, body: &TrueBody, dist: &Wrench) -> Result<(Vec3, Vec3), PlantError> {
    derivatives(s, forces, body, dist, true)
}

pub(crate) fn derivatives(s: &PlantState, forces: &Vec12, body: &TrueBody, dist: &Wrench, gyroscopic: bool) -> Result<(Vec3, Vec3), PlantError> {
    let finite = forces.iter().chain(dist.force.iter()).chain(dist.torque.iter()).all(|x| x.is_finite());
    if !finite || !s.is_finite() {
        return Err(PlantError::NonFiniteInput);
    }
    let r = s.rot.matrix();
    let shift_w = r * body.com_shift;
    let com = s.p_c + shift_w;

    let mut f_total = dist.force;
    let mut moment_w = Vec3::zeros();
    for leg in 0..4 {
        if !s.contact[leg] {
            continue;
        }
        let f = foot_force(forces, leg);
        f_total += f;
        moment_w += (s.feet[leg] - com).cross(&f);
    }

    let inertia = &body.params.inertia;
    let w = &s.omega_b;
    let mut rhs = r.transpose() * moment_w + dist.torque;
    if gyroscopic {
        rhs -= w.cross(&(inertia * w));
    }
    let omega_dot = inertia.cholesky().ok_or(PlantError::BadParams("inertia must be positive definite"))?.solve(&rhs);

    let com_acc = f_total / body.params.mass - gravity();
    // Reference point sits at -shift from the composite centre of mass.
    let s_b = &body.com_shift;
    let rel_acc = r * (omega_dot.cross(s_b) + w.cross(&w.cross(s_b)));
    Ok((com_acc - rel_acc, omega_dot))
}

/// One semi-implicit Euler step. Stance feet stay where they are.
pub fn plant_step(s: &PlantState, forces: &Vec12, body: &TrueBody, dist: &Wrench, dt: f64) -> Result<PlantState, PlantError> {
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(PlantError::BadStep(dt));
    }
    let (acc, omega_dot) = plant_derivatives(s, forces, body, dist)?;
    let mut next = *s;
    next.v_c = s.v_c + acc * dt;
    next.omega_b = s.omega_b + omega_dot * dt;
    next.p_c = s.p_c + next.v_c * dt;
    next.rot = s.rot.compose(&rot_exp(&(next.omega_b * dt)));
    if next.rot.orthonormality_error() > 1e-9 {
        next.rot = next.rot.reorthonormalized();
    }
    next.t = s.t + dt;
    if !next.is_finite() {
        return Err(PlantError::NonFiniteState { t: next.t });
    }
    Ok(next)
}

/// Stacks per-foot forces into the 12-vector layout used everywhere.
pub fn stack_forces(per_foot: &[Vec3; 4]) -> Vec12 {
    SVector::from_iterator(per_foot.iter().flat_map(|f| f.iter().copied()))
}

/// World-frame moment of the stance forces about `point`, ignoring swing feet.
pub fn moment_about(s: &PlantState, forces: &Vec12, point: &Vec3) -> Vec3 {
    (0..4).filter(|&l| s.contact[l]).map(|l| (s.feet[l] - point).cross(&foot_force(forces, l))).sum()
}

/// Cross-product matrix re-export for callers assembling wrench maps.
pub fn lever(foot: &Vec3, p_c: &Vec3) -> Mat3 {
    skew(&(foot - p_c))
}
