//! Fixed-rate simulation loop, logging and run summaries.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::adaptive::{L1Controller, L1TickOutput, Mode};
use crate::controller::{trajectory_from_commands, BalanceController, ControlError, DesiredTrajectory};
use crate::gait::{schedule_at, swing_foot_position, touchdown_target, GaitConfig, GaitKind};
use crate::plant::{plant_step, PlantError, PlantState, TrueBody};
use crate::scenario::{ConfigError, ScenarioConfig};
use crate::so3::{Vec12, Vec3, Vec6};
use crate::stability::{LyapunovData, Monitor, MonitorSample, StabilityError};

/// Roll or pitch beyond this counts as a fall.
pub const FALL_ANGLE: f64 = 0.6;
/// Base height below this counts as a fall.
pub const FALL_HEIGHT: f64 = 0.1;
pub const DIVERGENCE_RADIUS: f64 = 100.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("simulation diverged at t = {t:.4} s ({reason}); last valid record {last_valid:?}")]
    Diverged {
        t: f64,
        reason: String,
        last_valid: Option<usize>,
        records: Vec<LogRecord>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One row per control tick. See [`COLUMNS`] for the flattened order.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub p_c: Vec3,
    pub rpy: Vec3,
    pub v_c: Vec3,
    pub omega_b: Vec3,
    pub p_d: Vec3,
    pub rpy_d: Vec3,
    pub eta: Vec12,
    pub u1: Vec6,
    pub u2: Vec6,
    pub theta_hat: Vec6,
    pub alpha_hat: Vec6,
    pub beta_hat: Vec6,
    pub forces: Vec12,
    pub contact: [bool; 4],
    pub monitor: MonitorSample,
    pub qp_iterations: usize,
    pub ref_qp_iterations: usize,
    /// Not logged: needed by the summary.
    pub eta_tilde: Vec12,
    pub kkt: f64,
    pub pitch_error: f64,
}

pub const COLUMNS: [&str; 84] = [
    "t",
    "p_x", "p_y", "p_z", "roll", "pitch", "yaw", "v_x", "v_y", "v_z", "w_x", "w_y", "w_z",
    "pd_x", "pd_y", "pd_z", "roll_d", "pitch_d", "yaw_d",
    "eta_0", "eta_1", "eta_2", "eta_3", "eta_4", "eta_5", "eta_6", "eta_7", "eta_8", "eta_9", "eta_10", "eta_11",
    "u1_0", "u1_1", "u1_2", "u1_3", "u1_4", "u1_5",
    "u2_0", "u2_1", "u2_2", "u2_3", "u2_4", "u2_5",
    "theta_0", "theta_1", "theta_2", "theta_3", "theta_4", "theta_5",
    "alpha_0", "alpha_1", "alpha_2", "alpha_3", "alpha_4", "alpha_5",
    "beta_0", "beta_1", "beta_2", "beta_3", "beta_4", "beta_5",
    "F_FR_x", "F_FR_y", "F_FR_z", "F_FL_x", "F_FL_y", "F_FL_z", "F_RR_x", "F_RR_y", "F_RR_z", "F_RL_x", "F_RL_y", "F_RL_z",
    "c_FR", "c_FL", "c_RR", "c_RL",
    "V", "V_dot", "bound_check", "V_tilde", "delta_u",
    "qp_iter", "ref_qp_iter",
];

impl LogRecord {
    pub fn row(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(COLUMNS.len());
        r.push(self.t);
        for v in [&self.p_c, &self.rpy, &self.v_c, &self.omega_b, &self.p_d, &self.rpy_d] {
            r.extend(v.iter());
        }
        r.extend(self.eta.iter());
        for v in [&self.u1, &self.u2, &self.theta_hat, &self.alpha_hat, &self.beta_hat] {
            r.extend(v.iter());
        }
        r.extend(self.forces.iter());
        r.extend(self.contact.iter().map(|&c| if c { 1.0 } else { 0.0 }));
        let m = &self.monitor;
        r.extend([m.v, m.v_dot, m.bound_check, m.v_tilde, m.delta_u]);
        r.extend([self.qp_iterations as f64, self.ref_qp_iterations as f64]);
        r
    }
}

/// `printf("%.9g")`, with negative zero printed as `0`.
pub fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_string(records: &[LogRecord]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for rec in records {
        let row = rec.row();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_g9(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(records: &[LogRecord], path: &Path) -> Result<(), SimError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(csv_string(records).as_bytes())?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub ticks: usize,
    pub max_z_error: f64,
    pub rms_z_error: f64,
    pub max_pitch_error: f64,
    pub rms_pitch_error: f64,
    pub max_roll: f64,
    pub steady_from: f64,
    pub steady_max_z_error: f64,
    pub steady_mean_z_error: f64,
    pub fell: bool,
    pub diverged: bool,
    pub max_eta_tilde: f64,
    pub max_v_tilde: f64,
    /// Largest `|estimate| / (bound·sqrt(1+eps))` over α̂ and β̂.
    pub containment_ratio: f64,
    pub max_kkt: f64,
    pub max_qp_iterations: usize,
    /// Peak `‖η̃‖` over the first and second halves of the final 5 s.
    pub eta_tilde_tail_early: f64,
    pub eta_tilde_tail_late: f64,
}

impl Summary {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let fields: [(&str, String); 18] = [
            ("ticks", self.ticks.to_string()),
            ("max_z_error", format_g9(self.max_z_error)),
            ("rms_z_error", format_g9(self.rms_z_error)),
            ("max_pitch_error", format_g9(self.max_pitch_error)),
            ("rms_pitch_error", format_g9(self.rms_pitch_error)),
            ("max_roll", format_g9(self.max_roll)),
            ("steady_from", format_g9(self.steady_from)),
            ("steady_max_z_error", format_g9(self.steady_max_z_error)),
            ("steady_mean_z_error", format_g9(self.steady_mean_z_error)),
            ("fell", self.fell.to_string()),
            ("diverged", self.diverged.to_string()),
            ("max_eta_tilde", format_g9(self.max_eta_tilde)),
            ("max_v_tilde", format_g9(self.max_v_tilde)),
            ("containment_ratio", format_g9(self.containment_ratio)),
            ("max_kkt", format_g9(self.max_kkt)),
            ("max_qp_iterations", self.max_qp_iterations.to_string()),
            ("eta_tilde_tail_early", format_g9(self.eta_tilde_tail_early)),
            ("eta_tilde_tail_late", format_g9(self.eta_tilde_tail_late)),
        ];
        for (k, v) in fields {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

pub fn summarize(cfg: &ScenarioConfig, records: &[LogRecord]) -> Summary {
    let steady_from = cfg.steady_from.unwrap_or(0.5 * cfg.duration);
    let mut s = Summary { ticks: records.len(), steady_from, ..Summary::default() };
    let (mut sz, mut sp) = (0.0, 0.0);
    let (mut steady_sum, mut steady_n) = (0.0, 0usize);
    let tail_start = cfg.duration - 5.0;
    let tail_mid = cfg.duration - 2.5;
    for r in records {
        let ez = (r.p_c.z - r.p_d.z).abs();
        let ep = r.pitch_error.abs();
        s.max_z_error = s.max_z_error.max(ez);
        s.max_pitch_error = s.max_pitch_error.max(ep);
        s.max_roll = s.max_roll.max(r.rpy.x.abs());
        sz += ez * ez;
        sp += ep * ep;
        if r.t >= steady_from {
            s.steady_max_z_error = s.steady_max_z_error.max(ez);
            steady_sum += ez;
            steady_n += 1;
        }
        if r.rpy.x.abs() > FALL_ANGLE || r.rpy.y.abs() > FALL_ANGLE || r.p_c.z < FALL_HEIGHT {
            s.fell = true;
        }
        let et = r.eta_tilde.norm();
        s.max_eta_tilde = s.max_eta_tilde.max(et);
        if r.t >= tail_start && r.t < tail_mid {
            s.eta_tilde_tail_early = s.eta_tilde_tail_early.max(et);
        } else if r.t >= tail_mid {
            s.eta_tilde_tail_late = s.eta_tilde_tail_late.max(et);
        }
        s.max_v_tilde = s.max_v_tilde.max(r.monitor.v_tilde);
        for i in 0..6 {
            let c = cfg.adapt.containment(i);
            s.containment_ratio = s.containment_ratio.max(r.alpha_hat[i].abs() / c).max(r.beta_hat[i].abs() / c);
        }
        s.max_kkt = s.max_kkt.max(r.kkt);
        s.max_qp_iterations = s.max_qp_iterations.max(r.qp_iterations);
    }
    if !records.is_empty() {
        let n = records.len() as f64;
        s.rms_z_error = (sz / n).sqrt();
        s.rms_pitch_error = (sp / n).sqrt();
    }
    if steady_n > 0 {
        s.steady_mean_z_error = steady_sum / steady_n as f64;
    }
    s
}

/// Foot bookkeeping for the crawl.
#[derive(Debug, Clone, Copy)]
struct SwingLeg {
    start: Vec3,
    target: Vec3,
}

/// Critically damped second-order filter on the planar COM offset.
#[derive(Debug, Clone, Copy, Default)]
struct Sway {
    offset: Vec3,
    rate: Vec3,
}

impl Sway {
    fn step(&mut self, target: &Vec3, omega: f64, dt: f64) {
        let acc = (target - self.offset) * (omega * omega) - self.rate * (2.0 * omega);
        self.rate += acc * dt;
        self.offset += self.rate * dt;
    }
}

/// Leg that is swinging now, or the next one to lift off.
fn upcoming_swing_leg(cfg: &GaitConfig, t: f64) -> usize {
    let slots = (t / cfg.cycle_period).rem_euclid(1.0) * 4.0;
    let j = (slots.floor() as usize).min(3);
    let in_swing = (slots - j as f64) < 4.0 * cfg.swing_fraction;
    cfg.leg_order[if in_swing { j } else { (j + 1) % 4 }]
}

fn hip_world(d: &DesiredTrajectory, hip: &Vec3) -> Vec3 {
    let h = d.p_c_d + d.r_d.apply(hip);
    Vec3::new(h.x, h.y, 0.0)
}

pub fn build_controller(cfg: &ScenarioConfig, mode: Mode) -> Result<L1Controller, SimError> {
    let base = BalanceController::new(cfg.controller)?;
    let lyap = LyapunovData::new(&cfg.controller.gains, &cfg.q_matrix())?;
    Ok(L1Controller::new(base, cfg.adapt, lyap, mode))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Vec<LogRecord>, Summary), SimError> {
    cfg.validate()?;
    let mut ctrl = build_controller(cfg, cfg.mode)?;
    let mut monitor = Monitor::new();
    let dt = cfg.dt_ctrl;
    let substeps = cfg.substeps();

    let cmd0 = cfg.command_at(0.0);
    let mut desired = DesiredTrajectory::hold(Vec3::new(0.0, 0.0, cmd0.height), 0.0);
    let feet = cfg.hips.map(|h| Vec3::new(h.x, h.y, 0.0));
    let mut state = PlantState::standing(Vec3::new(0.0, 0.0, cfg.initial_height), feet);
    let mut swings: [Option<SwingLeg>; 4] = [None; 4];
    let mut path = desired;
    let mut sway = Sway::default();
    let walking = cfg.gait.kind == GaitKind::QuasiStaticWalk;
    let mut records = Vec::with_capacity(cfg.ticks());

    for k in 0..cfg.ticks() {
        let t = k as f64 * dt;
        let cmd = cfg.command_at(t);
        if k > 0 {
            path = trajectory_from_commands(&path, &cmd.velocity, cmd.yaw_rate, cmd.height, dt);
        }
        if walking && cfg.sway_gain > 0.0 {
            let lift = upcoming_swing_leg(&cfg.gait, t);
            let centroid = (0..4).filter(|&l| l != lift).map(|l| state.feet[l]).sum::<Vec3>() / 3.0;
            let mut target = (centroid - path.p_c_d) * cfg.sway_gain;
            target.z = 0.0;
            sway.step(&target, cfg.sway_omega, dt);
        }
        desired = path;
        desired.p_c_d += sway.offset;
        desired.v_c_d += sway.rate;

        let sched = schedule_at(&cfg.gait, t);
        if walking {
            let v_world = desired.r_d.apply(&cmd.velocity);
            for leg in 0..4 {
                if !sched.s_phi[leg] {
                    let sw = *swings[leg].get_or_insert_with(|| {
                        // Aim at where the hip will be at touchdown.
                        let hip = hip_world(&path, &cfg.hips[leg]) + v_world * cfg.gait.swing_duration();
                        SwingLeg { start: state.feet[leg], target: touchdown_target(&hip, &v_world, cfg.gait.stance_duration()) }
                    });
                    state.feet[leg] = swing_foot_position(&sw.start, &sw.target, sched.swing_phase[leg], cfg.gait.swing_height);
                } else if let Some(sw) = swings[leg].take() {
                    state.feet[leg] = sw.target;
                }
            }
        }
        state.contact = sched.s_phi;
        state.t = t;

        let diverged = |reason: String, records: Vec<LogRecord>| {
            let last_valid = records.len().checked_sub(1);
            SimError::Diverged { t, reason, last_valid, records }
        };
        let out = match ctrl.tick(&state, &desired, &sched.s_phi, dt) {
            Ok(o) => o,
            Err(e) => return Err(diverged(format!("controller: {e}"), records)),
        };
        let eta = out.force.error.fb;
        let sample = monitor.tick(&ctrl.lyap, t, &eta, &out.eta_tilde, out.force.delta.norm(), dt);
        let rec = make_record(t, &state, &desired, &out, sample);
        if rec.row().iter().any(|v| !v.is_finite()) {
            return Err(diverged("non-finite log value".into(), records));
        }
        records.push(rec);

        let forces = out.force.solution.f;
        for j in 0..substeps {
            let ts = t + j as f64 * cfg.dt_sim;
            let body = TrueBody::at_time(&cfg.plant, &cfg.loads, ts);
            let dist = cfg.disturbances.wrench_at(ts);
            state = match plant_step(&state, &forces, &body, &dist, cfg.dt_sim) {
                Ok(s) => s,
                Err(e @ (PlantError::NonFiniteState { .. } | PlantError::NonFiniteInput)) => return Err(diverged(e.to_string(), records)),
                Err(e) => return Err(diverged(format!("plant: {e}"), records)),
            };
        }
        if state.p_c.norm() > DIVERGENCE_RADIUS {
            return Err(diverged(format!("|p_c| = {:.3e} m", state.p_c.norm()), records));
        }
    }
    let summary = summarize(cfg, &records);
    Ok((records, summary))
}

fn make_record(t: f64, s: &PlantState, d: &DesiredTrajectory, out: &L1TickOutput, monitor: MonitorSample) -> LogRecord {
    let rel = d.r_d.transpose().compose(&s.rot);
    LogRecord {
        t,
        p_c: s.p_c,
        rpy: s.rot.to_rpy(),
        v_c: s.v_c,
        omega_b: s.omega_b,
        p_d: d.p_c_d,
        rpy_d: d.r_d.to_rpy(),
        eta: out.force.error.fb,
        u1: out.force.u1,
        u2: out.u2,
        theta_hat: out.theta_hat,
        alpha_hat: out.alpha_hat,
        beta_hat: out.beta_hat,
        forces: out.force.solution.f,
        contact: s.contact,
        monitor,
        qp_iterations: out.force.solution.iterations,
        ref_qp_iterations: out.reference.iterations,
        eta_tilde: out.eta_tilde,
        kkt: out.force.solution.kkt.max().max(out.reference.kkt.max()),
        pitch_error: rel.to_rpy().y,
    }
}

/// Outcome of one mode in a comparison. A diverged run keeps its partial log.
#[derive(Debug, Clone)]
pub struct ModeRun {
    pub mode: Mode,
    pub records: Vec<LogRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub baseline: ModeRun,
    pub adaptive: ModeRun,
}

impl Comparison {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (prefix, run) in [("baseline", &self.baseline), ("adaptive", &self.adaptive)] {
            for line in run.summary.to_kv().lines() {
                let _ = writeln!(s, "{prefix}.{line}");
            }
        }
        s
    }
}

fn run_mode(cfg: &ScenarioConfig, mode: Mode) -> Result<ModeRun, SimError> {
    let cfg = ScenarioConfig { mode, ..cfg.clone() };
    match run_scenario(&cfg) {
        Ok((records, summary)) => Ok(ModeRun { mode, records, summary }),
        Err(SimError::Diverged { records, .. }) if mode == Mode::Baseline => {
            let mut summary = summarize(&cfg, &records);
            summary.fell = true;
            summary.diverged = true;
            Ok(ModeRun { mode, records, summary })
        }
        Err(e) => Err(e),
    }
}

/// Runs the scenario in both modes on separate threads.
pub fn compare_modes(cfg: &ScenarioConfig) -> Result<Comparison, SimError> {
    let (baseline, adaptive) = std::thread::scope(|scope| {
        let b = scope.spawn(|| run_mode(cfg, Mode::Baseline));
        let a = run_mode(cfg, Mode::Adaptive);
        (b.join().expect("baseline thread panicked"), a)
    });
    Ok(Comparison { baseline: baseline?, adaptive: adaptive? })
}
