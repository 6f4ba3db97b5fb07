//! Closed-loop tracking simulation and the approach manoeuvre onto a path.

use serde::{Deserialize, Serialize};

use crate::control::{pwm_duty, reference_signal, Cascade, ControllerConfig, Direction, ReferenceSignal};
use crate::geometry::Point;
use crate::robot::{robot_step, ControlVector, DynState, Pose, RobotParams, RobotState};
use crate::spline::{SampledPath, SplineConfig};
use crate::workspace::Workspace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Physics step and controller tick in s.
    pub dt: f64,
    /// Time simulated after the reference has stopped, in s.
    pub settle_time: f64,
    /// Starting pose; `None` starts on the path start facing along the path.
    pub initial_pose: Option<Pose>,
    /// Distance at which the approach manoeuvre joins the path, in m.
    pub join_tolerance: f64,
    pub max_approach_time: f64,
    /// Speed of the approach manoeuvre in m/s.
    pub approach_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.0005,
            settle_time: 10.0,
            initial_pose: None,
            join_tolerance: 0.02,
            max_approach_time: 20.0,
            approach_speed: 0.2,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("sim.dt must be > 0".into()));
        }
        for (name, v) in [
            ("settle_time", self.settle_time),
            ("join_tolerance", self.join_tolerance),
            ("max_approach_time", self.max_approach_time),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("sim.{name} must be >= 0")));
            }
        }
        if !(self.approach_speed.is_finite() && self.approach_speed > 0.0) {
            return Err(Error::InvalidConfig("sim.approach_speed must be > 0".into()));
        }
        if let Some(p) = self.initial_pose {
            if ![p.x, p.y, p.theta].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig("sim.initial_pose must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Path time 30 s, reference sampled every 1.5 s and every obstacle shrunk or
/// grown to radius 0.05 m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentalPreset {
    pub path_time: f64,
    pub control_dt: f64,
    pub obstacle_radius: f64,
}

impl Default for ExperimentalPreset {
    fn default() -> Self {
        Self { path_time: 30.0, control_dt: 1.5, obstacle_radius: 0.05 }
    }
}

impl ExperimentalPreset {
    pub fn spline(&self, base: &SplineConfig) -> SplineConfig {
        SplineConfig { path_time: self.path_time, ..*base }
    }

    pub fn controller(&self, base: &ControllerConfig) -> ControllerConfig {
        ControllerConfig { control_dt: self.control_dt, ..*base }
    }

    pub fn workspace(&self, ws: &Workspace) -> Workspace {
        let mut out = ws.clone();
        out.obstacles.iter_mut().for_each(|o| o.radius = self.obstacle_radius);
        out
    }
}

/// Pursuit prefix from `robot` onto the path.
///
/// Every step of the original sample spacing the aim point moves one sample
/// further along the path and the robot moves along its line of sight at up to
/// `approach_speed`. The prefix ends at the first step within `join_tolerance`
/// of the aim point; the rest of the path from the aim point on follows it. The
/// result keeps the original sample spacing.
pub fn approach_trajectory(robot: Pose, path: &SampledPath, cfg: &SimConfig) -> Result<SampledPath> {
    Ok(approach_with_aims(robot, path, cfg)?.0)
}

fn approach_with_aims(robot: Pose, path: &SampledPath, cfg: &SimConfig) -> Result<(SampledPath, Vec<usize>)> {
    if ![robot.x, robot.y, robot.theta].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("robot pose"));
    }
    let n = path.len();
    let h = path.duration() / (n - 1) as f64;
    let mut pos = robot.position();
    if pos.distance(path.start()) <= cfg.join_tolerance {
        return Ok((path.clone(), Vec::new()));
    }
    let step = cfg.approach_speed * h;
    let max_steps = (cfg.max_approach_time / h).ceil() as usize;
    let mut prefix = vec![pos];
    let mut aims = Vec::new();
    for k in 1..=max_steps {
        let aim_index = k.min(n - 1);
        let aim = path.points[aim_index];
        aims.push(aim_index);
        let gap = aim - pos;
        let d = gap.norm();
        pos = if d <= step { aim } else { pos + gap * (step / d) };
        if pos.distance(aim) <= cfg.join_tolerance {
            let mut points = prefix;
            points.extend_from_slice(&path.points[aim_index..]);
            let duration = (points.len() - 1) as f64 * h;
            return Ok((SampledPath::from_points(points, duration), aims));
        }
        prefix.push(pos);
    }
    Err(Error::ApproachTimeout(cfg.max_approach_time))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutySample {
    pub left: u8,
    pub left_direction: Direction,
    pub right: u8,
    pub right_direction: Direction,
}

/// Physics-rate traces. Sample `k` is the state at `time[k]`; the voltages at
/// `k` are held over `[time[k], time[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub time: Vec<f64>,
    pub reference: Vec<ReferenceSample>,
    pub actual: Vec<Pose>,
    pub dynamics: Vec<DynState>,
    pub voltages: Vec<(f64, f64)>,
    pub duty: Vec<DutySample>,
    /// Distance from the reference position at each sample, in m.
    pub tracking_error: Vec<f64>,
    /// Distance from the path end at the last sample, in m.
    pub final_position_error: f64,
    pub collided: bool,
    pub distance_traveled: f64,
    /// The path actually tracked, including any approach prefix.
    pub tracked_path: SampledPath,
    /// Physics step used, in s.
    pub dt: f64,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn max_tracking_error(&self) -> f64 {
        self.tracking_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Speed and heading held over each reference interval: `steps` chords of the
/// path, `steps = round(T / control_dt)`.
pub fn held_references(path: &SampledPath, control_dt: f64) -> (f64, Vec<ReferenceSignal>) {
    let duration = path.duration();
    let steps = ((duration / control_dt).round() as usize).max(1);
    let h = duration / steps as f64;
    let knots: Vec<Point> = (0..=steps).map(|j| path.position_at(j as f64 * h)).collect();
    let seed = knots
        .windows(2)
        .map(|w| w[1] - w[0])
        .find(|d| d.norm() > 0.0)
        .map_or(0.0, |d| d.y.atan2(d.x));
    let mut previous = seed;
    let refs = knots
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) * (1.0 / h);
            let s = reference_signal(d.x, d.y, previous);
            previous = s.theta_ref;
            // The robot always drives forward along the chord.
            ReferenceSignal { v_ref: s.v_ref.abs(), theta_ref: s.theta_ref }
        })
        .collect();
    (h, refs)
}

pub fn closed_loop_sim(
    ws: &Workspace,
    planned: &SampledPath,
    controller: &ControllerConfig,
    params: &RobotParams,
    cfg: &SimConfig,
) -> Result<SimResult> {
    controller.validate()?;
    params.validate()?;
    cfg.validate()?;
    let path = match cfg.initial_pose {
        Some(pose) => approach_trajectory(pose, planned, cfg)?,
        None => planned.clone(),
    };
    let (hold, refs) = held_references(&path, controller.control_dt);
    let first_heading = refs.first().map_or(0.0, |r| r.theta_ref);
    let pose = cfg.initial_pose.unwrap_or(Pose::new(path.start().x, path.start().y, first_heading));

    let duration = path.duration() + cfg.settle_time;
    let steps = (duration / cfg.dt).round() as usize;
    let mut out = SimResult {
        time: Vec::with_capacity(steps + 1),
        reference: Vec::with_capacity(steps + 1),
        actual: Vec::with_capacity(steps + 1),
        dynamics: Vec::with_capacity(steps + 1),
        voltages: Vec::with_capacity(steps + 1),
        duty: Vec::with_capacity(steps + 1),
        tracking_error: Vec::with_capacity(steps + 1),
        final_position_error: 0.0,
        collided: false,
        distance_traveled: 0.0,
        tracked_path: path.clone(),
        dt: cfg.dt,
    };
    let mut state = RobotState { dynamics: DynState::default(), pose };
    let mut cascade = Cascade::default();
    let mut last_ref = ReferenceSignal { v_ref: 0.0, theta_ref: pose.theta };
    let load = params.wheel_load_force;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let j = (t / hold + 1e-9).floor() as usize;
        let r = match refs.get(j) {
            Some(r) => *r,
            None => ReferenceSignal { v_ref: 0.0, theta_ref: last_ref.theta_ref },
        };
        last_ref = r;
        let u = cascade.update(&r, state.pose.theta, state.dynamics.omega_left, state.dynamics.omega_right, controller, params, cfg.dt);
        let (ul, ur) = if k < steps { (u.voltage_left, u.voltage_right) } else { (0.0, 0.0) };
        let p = state.pose.position();
        let target = path.position_at(t);
        let (dl, dirl) = pwm_duty(ul, params.voltage_max);
        let (dr, dirr) = pwm_duty(ur, params.voltage_max);
        out.time.push(t);
        out.reference.push(ReferenceSample { x: target.x, y: target.y, theta: r.theta_ref, v_ref: r.v_ref });
        out.actual.push(state.pose);
        out.dynamics.push(state.dynamics);
        out.voltages.push((ul, ur));
        out.duty.push(DutySample { left: dl, left_direction: dirl, right: dr, right_direction: dirr });
        out.tracking_error.push(p.distance(target));
        out.collided |= ws.collides(p);
        if k == steps {
            break;
        }
        let input = ControlVector { force_left: load, force_right: load, voltage_left: ul, voltage_right: ur };
        state = robot_step(&state, &input, params, cfg.dt);
        if !(state.dynamics.is_finite() && state.pose.x.is_finite() && state.pose.y.is_finite() && state.pose.theta.is_finite()) {
            return Err(Error::NonFinite("robot state"));
        }
        out.distance_traveled += state.pose.position().distance(p);
    }
    out.final_position_error = state.pose.position().distance(path.end());
    Ok(out)
}
