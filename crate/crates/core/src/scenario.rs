//! Scenario configuration and its text format.
//!
//! One `section.key = value` per line, `#` starts a comment. Lists use indexed
//! sections such as `load.0.mass`. Vectors are comma or space separated and may
//! be wrapped in brackets. Omitted keys keep their defaults; unknown keys are
//! rejected.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::adaptive::{AdaptConfig, Mode};
use crate::controller::{ControllerConfig, GainMatrices, NominalModel};
use crate::gait::{parse_leg, GaitConfig, GaitKind};
use crate::plant::{DisturbanceSchedule, DisturbanceSegment, DisturbanceShape, InertialParams, LoadAttachment};
use crate::qp::{FrictionParams, QpWeights};
use crate::so3::{Mat3, Mat12, Vec12, Vec3, Vec6};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("invalid scenario: {0}")]
    Invariant(String),
}

/// Command active from `t_start` until the next segment starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandSegment {
    pub t_start: f64,
    /// Heading-frame planar velocity; `z` is ignored.
    pub velocity: Vec3,
    pub yaw_rate: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub dt_sim: f64,
    pub dt_ctrl: f64,
    /// Reserved for noise injection; nothing consumes it yet.
    pub seed: u64,
    pub gait: GaitConfig,
    /// Body-frame hip offsets, FR FL RR RL.
    pub hips: [Vec3; 4],
    /// Fraction of the way the desired COM moves toward the upcoming support
    /// triangle centroid while walking. 0 disables sway.
    pub sway_gain: f64,
    /// Natural frequency of the critically damped sway filter, rad/s.
    pub sway_omega: f64,
    pub commands: Vec<CommandSegment>,
    pub loads: Vec<LoadAttachment>,
    pub disturbances: DisturbanceSchedule,
    pub mode: Mode,
    pub controller: ControllerConfig,
    pub adapt: AdaptConfig,
    /// Diagonal of Q in the Lyapunov equation.
    pub lyapunov_q: Vec12,
    /// True unloaded body.
    pub plant: InertialParams,
    pub initial_height: f64,
    /// Start of the window used for steady-state metrics.
    pub steady_from: Option<f64>,
}

pub const DEFAULT_HEIGHT: f64 = 0.3;

/// Whole-body rotational inertia about the COM for a 12 kg quadruped of A1
/// footprint, legs included. Trunk-only values leave the attitude loop too soft
/// for three-leg stance.
pub fn default_inertia() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(0.07, 0.26, 0.24))
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let nominal = NominalModel { mass: 12.0, inertia: default_inertia() };
        Self {
            name: "unnamed".into(),
            duration: 10.0,
            dt_sim: 2.5e-4,
            dt_ctrl: 1e-3,
            seed: 0,
            gait: GaitConfig::default(),
            hips: [
                Vec3::new(0.183, -0.132, 0.0),
                Vec3::new(0.183, 0.132, 0.0),
                Vec3::new(-0.183, -0.132, 0.0),
                Vec3::new(-0.183, 0.132, 0.0),
            ],
            sway_gain: 0.3,
            sway_omega: 10.0,
            commands: vec![CommandSegment { t_start: 0.0, velocity: Vec3::zeros(), yaw_rate: 0.0, height: DEFAULT_HEIGHT }],
            loads: Vec::new(),
            disturbances: DisturbanceSchedule::none(),
            mode: Mode::Baseline,
            controller: ControllerConfig { gains: GainMatrices::default(), nominal, weights: QpWeights::default(), friction: FrictionParams::default() },
            adapt: AdaptConfig::default(),
            lyapunov_q: Vec12::repeat(1.0),
            plant: InertialParams { mass: 12.0, inertia: default_inertia() },
            initial_height: DEFAULT_HEIGHT,
            steady_from: None,
        }
    }
}

impl ScenarioConfig {
    /// Number of control ticks.
    pub fn ticks(&self) -> usize {
        (self.duration / self.dt_ctrl).round() as usize
    }

    /// Plant substeps per control tick.
    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_sim).round() as usize
    }

    pub fn q_matrix(&self) -> Mat12 {
        Mat12::from_diagonal(&self.lyapunov_q)
    }

    pub fn command_at(&self, t: f64) -> CommandSegment {
        let mut cur = self.commands[0];
        for c in &self.commands {
            if c.t_start <= t {
                cur = *c;
            }
        }
        cur
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invariant(m));
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return inv("duration must be positive".into());
        }
        if !(self.dt_sim > 0.0 && self.dt_ctrl > 0.0) {
            return inv("time steps must be positive".into());
        }
        let ratio = self.dt_ctrl / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return inv(format!("dt_ctrl {} is not an integer multiple of dt_sim {}", self.dt_ctrl, self.dt_sim));
        }
        if self.dt_sim > 0.01 {
            return inv("dt_sim must be at most 0.01".into());
        }
        self.gait.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        self.controller.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        self.adapt.validate(self.dt_ctrl).map_err(|e| ConfigError::Invariant(e.to_string()))?;
        InertialParams::new(self.plant.mass, self.plant.inertia).map_err(|e| ConfigError::Invariant(e.to_string()))?;
        if !(self.sway_gain >= 0.0 && self.sway_omega > 0.0) {
            return inv("sway gain must be >= 0 and sway frequency > 0".into());
        }
        if self.commands.is_empty() || self.commands[0].t_start > 0.0 {
            return inv("the first command must start at t = 0".into());
        }
        if self.commands.windows(2).any(|w| w[1].t_start < w[0].t_start) {
            return inv("command start times must be ordered".into());
        }
        if self.commands.iter().any(|c| !(c.height > 0.0)) {
            return inv("commanded height must be positive".into());
        }
        for (i, l) in self.loads.iter().enumerate() {
            if !(l.mass >= 0.0) || !(l.active_from <= l.active_to) {
                return inv(format!("load {i} needs mass >= 0 and ordered times"));
            }
        }
        for (i, d) in self.disturbances.segments.iter().enumerate() {
            if !(d.t_start <= d.t_end) {
                return inv(format!("disturbance {i} has unordered times"));
            }
        }
        if self.lyapunov_q.iter().any(|&q| !(q > 0.0)) {
            return inv("Lyapunov Q diagonal must be positive".into());
        }
        if !(self.initial_height > 0.0) {
            return inv("initial height must be positive".into());
        }
        Ok(())
    }
}

#[derive(Default)]
struct LoadDraft {
    mass: Option<f64>,
    offset: Option<Vec3>,
    active_from: Option<f64>,
    active_to: Option<f64>,
}

#[derive(Default)]
struct CommandDraft {
    t_start: Option<f64>,
    v_x: Option<f64>,
    v_y: Option<f64>,
    yaw_rate: Option<f64>,
    height: Option<f64>,
}

#[derive(Default)]
struct DisturbanceDraft {
    t_start: Option<f64>,
    t_end: Option<f64>,
    force: Option<Vec3>,
    torque: Option<Vec3>,
    shape: Option<String>,
    freq_hz: Option<f64>,
    phase: Option<f64>,
}

struct Value<'a> {
    line: usize,
    key: &'a str,
    raw: &'a str,
}

impl Value<'_> {
    fn err(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { line: self.line, key: self.key.to_string(), msg: msg.into() }
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        let v: f64 = self.raw.parse().map_err(|_| self.err(format!("'{}' is not a number", self.raw)))?;
        if !v.is_finite() {
            return Err(self.err("must be finite"));
        }
        Ok(v)
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.raw.parse().map_err(|_| self.err(format!("'{}' is not a non-negative integer", self.raw)))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.raw {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.err(format!("'{}' is not a boolean", self.raw))),
        }
    }

    fn list(&self) -> Vec<&str> {
        self.raw.trim_start_matches('[').trim_end_matches(']').split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
    }

    fn floats<const N: usize>(&self) -> Result<[f64; N], ConfigError> {
        let items = self.list();
        if items.len() != N {
            return Err(self.err(format!("expected {N} values, got {}", items.len())));
        }
        let mut out = [0.0f64; N];
        for (o, s) in out.iter_mut().zip(items) {
            *o = s.parse().map_err(|_| self.err(format!("'{s}' is not a number")))?;
            if !o.is_finite() {
                return Err(self.err("values must be finite"));
            }
        }
        Ok(out)
    }

    fn vec3(&self) -> Result<Vec3, ConfigError> {
        Ok(Vec3::from(self.floats::<3>()?))
    }

    fn vec6(&self) -> Result<Vec6, ConfigError> {
        Ok(Vec6::from(self.floats::<6>()?))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut loads: BTreeMap<usize, LoadDraft> = BTreeMap::new();
    let mut commands: BTreeMap<usize, CommandDraft> = BTreeMap::new();
    let mut dists: BTreeMap<usize, DisturbanceDraft> = BTreeMap::new();
    let mut nominal_mass = None;
    let mut nominal_inertia = None;

    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, raw)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, msg: format!("expected 'key = value', got '{content}'") });
        };
        let key = key.trim();
        let v = Value { line, key, raw: raw.trim() };
        if v.raw.is_empty() {
            return Err(v.err("missing value"));
        }
        let unknown = || ConfigError::UnknownKey { line, key: key.to_string() };
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["scenario", "name"] => cfg.name = v.raw.to_string(),
            ["scenario", "duration"] => cfg.duration = v.f64()?,
            ["scenario", "dt_sim"] => cfg.dt_sim = v.f64()?,
            ["scenario", "dt_ctrl"] => cfg.dt_ctrl = v.f64()?,
            ["scenario", "seed"] => cfg.seed = v.u64()?,
            ["gait", "kind"] => {
                cfg.gait.kind = match v.raw {
                    "stand" => GaitKind::Stand,
                    "quasi_static_walk" => GaitKind::QuasiStaticWalk,
                    other => return Err(v.err(format!("unknown gait kind '{other}' (expected stand or quasi_static_walk)"))),
                }
            }
            ["gait", "cycle_period"] => cfg.gait.cycle_period = v.f64()?,
            ["gait", "swing_fraction"] => cfg.gait.swing_fraction = v.f64()?,
            ["gait", "swing_height"] => cfg.gait.swing_height = v.f64()?,
            ["gait", "leg_order"] => {
                let names = v.list();
                if names.len() != 4 {
                    return Err(v.err("expected four legs"));
                }
                for (slot, name) in names.iter().enumerate() {
                    cfg.gait.leg_order[slot] = parse_leg(name).map_err(|e| v.err(e.to_string()))?;
                }
            }
            ["gait", "hip_x"] => {
                let x = v.f64()?;
                for (h, s) in cfg.hips.iter_mut().zip([1.0, 1.0, -1.0, -1.0]) {
                    h.x = s * x;
                }
            }
            ["gait", "hip_y"] => {
                let y = v.f64()?;
                for (h, s) in cfg.hips.iter_mut().zip([-1.0, 1.0, -1.0, 1.0]) {
                    h.y = s * y;
                }
            }
            ["gait", "sway_gain"] => cfg.sway_gain = v.f64()?,
            ["gait", "sway_omega"] => cfg.sway_omega = v.f64()?,
            ["command", idx, field] => {
                let d = commands.entry(index(idx, line)?).or_default();
                match *field {
                    "t_start" => d.t_start = Some(v.f64()?),
                    "v_x" => d.v_x = Some(v.f64()?),
                    "v_y" => d.v_y = Some(v.f64()?),
                    "yaw_rate" => d.yaw_rate = Some(v.f64()?),
                    "height" => d.height = Some(v.f64()?),
                    _ => return Err(unknown()),
                }
            }
            ["load", idx, field] => {
                let d = loads.entry(index(idx, line)?).or_default();
                match *field {
                    "mass" => d.mass = Some(v.f64()?),
                    "offset" => d.offset = Some(v.vec3()?),
                    "active_from" => d.active_from = Some(v.f64()?),
                    "active_to" => d.active_to = Some(v.f64()?),
                    _ => return Err(unknown()),
                }
            }
            ["disturbance", idx, field] => {
                let d = dists.entry(index(idx, line)?).or_default();
                match *field {
                    "t_start" => d.t_start = Some(v.f64()?),
                    "t_end" => d.t_end = Some(v.f64()?),
                    "force" => d.force = Some(v.vec3()?),
                    "torque" => d.torque = Some(v.vec3()?),
                    "shape" => match v.raw {
                        "constant" | "sine" => d.shape = Some(v.raw.to_string()),
                        other => return Err(v.err(format!("unknown shape '{other}' (expected constant or sine)"))),
                    },
                    "freq_hz" => d.freq_hz = Some(v.f64()?),
                    "phase" => d.phase = Some(v.f64()?),
                    _ => return Err(unknown()),
                }
            }
            ["controller", "mode"] => {
                cfg.mode = match v.raw {
                    "baseline" => Mode::Baseline,
                    "adaptive" => Mode::Adaptive,
                    other => return Err(v.err(format!("unknown mode '{other}' (expected baseline or adaptive)"))),
                }
            }
            ["controller", "kp"] => cfg.controller.gains.kp = v.vec6()?,
            ["controller", "kd"] => cfg.controller.gains.kd = v.vec6()?,
            ["controller", "nominal_mass"] => nominal_mass = Some(v.f64()?),
            ["controller", "nominal_inertia"] => nominal_inertia = Some(Mat3::from_diagonal(&v.vec3()?)),
            ["plant", "mass"] => cfg.plant.mass = v.f64()?,
            ["plant", "inertia"] => cfg.plant.inertia = Mat3::from_diagonal(&v.vec3()?),
            ["plant", "initial_height"] => cfg.initial_height = v.f64()?,
            ["qp", "s"] => cfg.controller.weights.s = v.vec6()?,
            ["qp", "gamma1"] => cfg.controller.weights.gamma1 = v.f64()?,
            ["qp", "gamma2"] => cfg.controller.weights.gamma2 = v.f64()?,
            ["qp", "mu"] => cfg.controller.friction.mu = v.f64()?,
            ["qp", "fz_min"] => cfg.controller.friction.fz_min = v.f64()?,
            ["qp", "fz_max"] => cfg.controller.friction.fz_max = v.f64()?,
            ["adapt", "gamma"] => cfg.adapt.gamma = v.vec6()?,
            ["adapt", "zeta"] => cfg.adapt.zeta = v.f64()?,
            ["adapt", "omega_n"] => cfg.adapt.omega_n = v.f64()?,
            ["adapt", "bounds"] => cfg.adapt.theta_bound = v.vec6()?,
            ["adapt", "eps_p"] => cfg.adapt.eps_p = v.f64()?,
            ["adapt", "enabled"] => cfg.adapt.enabled = v.bool()?,
            ["adapt", "predictor_uses_qp"] => cfg.adapt.predictor_uses_qp = v.bool()?,
            ["stability", "q"] => cfg.lyapunov_q = Vec12::from(v.floats::<12>()?),
            ["summary", "steady_from"] => cfg.steady_from = Some(v.f64()?),
            _ => return Err(unknown()),
        }
    }

    // The nominal model follows the true unloaded body unless overridden.
    cfg.controller.nominal = NominalModel { mass: nominal_mass.unwrap_or(cfg.plant.mass), inertia: nominal_inertia.unwrap_or(cfg.plant.inertia) };

    if !commands.is_empty() {
        let default_height = cfg.commands[0].height;
        let mut out: Vec<CommandSegment> = Vec::new();
        for (k, d) in commands {
            let prev_height = out.last().map_or(default_height, |c| c.height);
            out.push(CommandSegment {
                t_start: d.t_start.unwrap_or(if k == 0 { 0.0 } else { f64::NAN }),
                velocity: Vec3::new(d.v_x.unwrap_or(0.0), d.v_y.unwrap_or(0.0), 0.0),
                yaw_rate: d.yaw_rate.unwrap_or(0.0),
                height: d.height.unwrap_or(prev_height),
            });
        }
        if out.iter().any(|c| c.t_start.is_nan()) {
            return Err(ConfigError::Invariant("every command after the first needs t_start".into()));
        }
        if out[0].t_start > 0.0 {
            out.insert(0, cfg.commands[0]);
        }
        cfg.commands = out;
    }
    cfg.loads = loads
        .into_values()
        .map(|d| LoadAttachment {
            mass: d.mass.unwrap_or(0.0),
            offset: d.offset.unwrap_or(Vec3::new(0.0, 0.0, 0.05)),
            active_from: d.active_from.unwrap_or(0.0),
            active_to: d.active_to.unwrap_or(f64::INFINITY),
        })
        .collect();
    cfg.disturbances.segments = dists
        .into_values()
        .map(|d| DisturbanceSegment {
            t_start: d.t_start.unwrap_or(0.0),
            t_end: d.t_end.unwrap_or(f64::INFINITY),
            force: d.force.unwrap_or_else(Vec3::zeros),
            torque: d.torque.unwrap_or_else(Vec3::zeros),
            shape: match d.shape.as_deref() {
                Some("sine") => DisturbanceShape::Sine { freq_hz: d.freq_hz.unwrap_or(1.0), phase: d.phase.unwrap_or(0.0) },
                _ => DisturbanceShape::Constant,
            },
        })
        .collect();
    cfg.validate()?;
    Ok(cfg)
}

fn index(s: &str, line: usize) -> Result<usize, ConfigError> {
    s.parse().map_err(|_| ConfigError::Parse { line, msg: format!("'{s}' is not a list index") })
}
