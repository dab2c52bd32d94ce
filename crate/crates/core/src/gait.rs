//! Contact scheduling for standing and a one-leg-at-a-time crawl.

use std::f64::consts::PI;

use thiserror::Error;

use crate::so3::Vec3;

pub const LEG_NAMES: [&str; 4] = ["FR", "FL", "RR", "RL"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaitError {
    #[error("cycle period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("swing fraction {0} must be in (0, 0.25] so only one leg swings at a time")]
    BadSwingFraction(f64),
    #[error("leg order must be a permutation of 0..4, got {0:?}")]
    BadLegOrder([usize; 4]),
    #[error("swing height must be finite and non-negative, got {0}")]
    BadSwingHeight(f64),
    #[error("unknown leg name '{0}'")]
    UnknownLeg(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaitKind {
    Stand,
    QuasiStaticWalk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitConfig {
    pub kind: GaitKind,
    pub cycle_period: f64,
    pub swing_fraction: f64,
    /// Leg indices in swing order. Index convention: 0 FR, 1 FL, 2 RR, 3 RL.
    pub leg_order: [usize; 4],
    pub swing_height: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            kind: GaitKind::Stand,
            cycle_period: 2.0,
            swing_fraction: 0.2,
            // Crawl sequence: each swing is followed by the diagonally opposite leg.
            leg_order: [0, 3, 1, 2],
            swing_height: 0.06,
        }
    }
}

impl GaitConfig {
    pub fn walk() -> Self {
        Self { kind: GaitKind::QuasiStaticWalk, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        if !(self.cycle_period > 0.0) || !self.cycle_period.is_finite() {
            return Err(GaitError::BadPeriod(self.cycle_period));
        }
        if !(self.swing_fraction > 0.0 && 4.0 * self.swing_fraction <= 1.0) {
            return Err(GaitError::BadSwingFraction(self.swing_fraction));
        }
        let mut seen = [false; 4];
        for &l in &self.leg_order {
            if l >= 4 || seen[l] {
                return Err(GaitError::BadLegOrder(self.leg_order));
            }
            seen[l] = true;
        }
        if !(self.swing_height >= 0.0) || !self.swing_height.is_finite() {
            return Err(GaitError::BadSwingHeight(self.swing_height));
        }
        Ok(())
    }

    pub fn swing_duration(&self) -> f64 {
        self.swing_fraction * self.cycle_period
    }

    pub fn stance_duration(&self) -> f64 {
        self.cycle_period - self.swing_duration()
    }
}

pub fn parse_leg(name: &str) -> Result<usize, GaitError> {
    LEG_NAMES.iter().position(|n| n.eq_ignore_ascii_case(name)).ok_or_else(|| GaitError::UnknownLeg(name.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSchedule {
    pub s_phi: [bool; 4],
    /// Progress through the current swing, 0 for stance legs.
    pub swing_phase: [f64; 4],
}

impl ContactSchedule {
    pub fn stance_count(&self) -> usize {
        self.s_phi.iter().filter(|&&c| c).count()
    }
}

/// Leg `leg_order[j]` swings during cycle phase `[j/4, j/4 + swing_fraction)`.
pub fn schedule_at(cfg: &GaitConfig, t: f64) -> ContactSchedule {
    let mut out = ContactSchedule { s_phi: [true; 4], swing_phase: [0.0; 4] };
    if cfg.kind == GaitKind::Stand {
        return out;
    }
    let phase = (t / cfg.cycle_period).rem_euclid(1.0);
    for (slot, &leg) in cfg.leg_order.iter().enumerate() {
        let start = slot as f64 / 4.0;
        let local = (phase - start) / cfg.swing_fraction;
        if (0.0..1.0).contains(&local) {
            out.s_phi[leg] = false;
            out.swing_phase[leg] = local;
        }
    }
    out
}

/// Raibert-style placement: ground projection of the hip, shifted half a stance ahead.
pub fn touchdown_target(hip_world: &Vec3, v_cmd: &Vec3, stance_duration: f64) -> Vec3 {
    touchdown_target_on(hip_world, v_cmd, stance_duration, &|_, _| 0.0)
}

pub fn touchdown_target_on(hip_world: &Vec3, v_cmd: &Vec3, stance_duration: f64, terrain: &dyn Fn(f64, f64) -> f64) -> Vec3 {
    let x = hip_world.x + 0.5 * stance_duration * v_cmd.x;
    let y = hip_world.y + 0.5 * stance_duration * v_cmd.y;
    Vec3::new(x, y, terrain(x, y))
}

pub fn swing_foot_position(start: &Vec3, target: &Vec3, phase: f64, height: f64) -> Vec3 {
    if phase <= 0.0 {
        return *start;
    }
    if phase >= 1.0 {
        return *target;
    }
    let mut p = start + (target - start) * phase;
    p.z += height * (PI * phase).sin();
    p
}
