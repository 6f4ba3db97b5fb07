//! Robot parameters, wheel/body kinematics and the wheel-level dynamic plant.
//!
//! Sign conventions: `omega = (v_R - v_L) / D` (positive is counter-clockwise),
//! and the yaw acceleration is `(D / 2J) (F_R - F_L)`. Wheel speeds are mapped
//! back with `v_R = v + omega D / 2`, `v_L = v - omega D / 2` so that the two
//! conversions are exact inverses.

use serde::{Deserialize, Serialize};

use crate::integrate::rk4_step;
use crate::{Error, Result};

/// Physical constants of the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// Mass `m` in kg.
    pub mass: f64,
    /// Rotational inertia `J` in kg m^2.
    pub inertia: f64,
    /// Viscous coefficient `F` multiplying wheel speed in the wheel dynamics.
    pub friction: f64,
    /// Wheel radius `r` in m.
    pub wheel_radius: f64,
    /// Distance between the wheels `D` in m.
    pub wheel_base: f64,
    /// Drive voltage limit in V.
    pub voltage_max: f64,
    /// Constant tangent force applied to each wheel, in N.
    pub wheel_load_force: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 0.9,
            inertia: 0.001,
            friction: 0.01,
            wheel_radius: 0.021,
            wheel_base: 0.145,
            voltage_max: 12.0,
            wheel_load_force: 0.01,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("inertia", self.inertia),
            ("friction", self.friction),
            ("wheel_radius", self.wheel_radius),
            ("wheel_base", self.wheel_base),
            ("voltage_max", self.voltage_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!("robot.{name} must be > 0, got {value}")));
            }
        }
        if !(self.wheel_load_force.is_finite() && self.wheel_load_force >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "robot.wheel_load_force must be >= 0, got {}",
                self.wheel_load_force
            )));
        }
        Ok(())
    }

    /// Steady-state wheel speed for a constant voltage and load force.
    pub fn steady_wheel_speed(&self, voltage: f64, load_force: f64) -> f64 {
        (voltage - self.wheel_radius * load_force) / self.friction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in rad, continuous (never wrapped).
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> crate::Point {
        crate::Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelVelocities {
    pub v_left: f64,
    pub v_right: f64,
    pub omega_left: f64,
    pub omega_right: f64,
}

/// Plant state `[v, omega, omega_L, omega_R]`; also used for its time derivative
/// `[a, epsilon, epsilon_L, epsilon_R]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynState {
    pub v: f64,
    pub omega: f64,
    pub omega_left: f64,
    pub omega_right: f64,
}

impl DynState {
    pub fn to_array(self) -> [f64; 4] {
        [self.v, self.omega, self.omega_left, self.omega_right]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { v: a[0], omega: a[1], omega_left: a[2], omega_right: a[3] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Control vector `[F_L, F_R, U_L, U_R]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlVector {
    pub force_left: f64,
    pub force_right: f64,
    pub voltage_left: f64,
    pub voltage_right: f64,
}

impl ControlVector {
    pub fn is_finite(&self) -> bool {
        [self.force_left, self.force_right, self.voltage_left, self.voltage_right]
            .iter()
            .all(|x| x.is_finite())
    }
}

pub fn wheels_to_body(omega_left: f64, omega_right: f64, params: &RobotParams) -> BodyVelocity {
    let v_right = params.wheel_radius * omega_right;
    let v_left = params.wheel_radius * omega_left;
    BodyVelocity { v: 0.5 * (v_right + v_left), omega: (v_right - v_left) / params.wheel_base }
}

pub fn body_to_wheels(v: f64, omega: f64, params: &RobotParams) -> WheelVelocities {
    let half = 0.5 * omega * params.wheel_base;
    let v_left = v - half;
    let v_right = v + half;
    WheelVelocities {
        v_left,
        v_right,
        omega_left: v_left / params.wheel_radius,
        omega_right: v_right / params.wheel_radius,
    }
}

const POSE_SUBSTEP: f64 = 0.01;

fn unicycle(vel: BodyVelocity) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    move |_t, s| [vel.v * s[2].cos(), vel.v * s[2].sin(), vel.omega]
}

/// Integrates the unicycle kinematics over `dt` with constant body velocity,
/// using RK4 substeps no longer than 10 ms.
pub fn pose_step(pose: Pose, vel: BodyVelocity, dt: f64) -> Pose {
    if vel.omega == 0.0 {
        // Heading is constant: the RK4 stages are all identical, so take the exact step.
        let (s, c) = pose.theta.sin_cos();
        return Pose::new(pose.x + vel.v * dt * c, pose.y + vel.v * dt * s, pose.theta);
    }
    let steps = (dt / POSE_SUBSTEP).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let f = unicycle(vel);
    let mut s = [pose.x, pose.y, pose.theta];
    for k in 0..steps {
        s = rk4_step(&f, k as f64 * h, &s, h);
    }
    Pose::new(s[0], s[1], s[2])
}

/// Lateral (normal) force per wheel while cornering: `S = (m / 2) v omega`.
pub fn lateral_force(v: f64, omega: f64, params: &RobotParams) -> f64 {
    0.5 * params.mass * v * omega
}

pub fn wheel_traction(tangent_force: f64, lateral: f64) -> f64 {
    tangent_force.hypot(lateral)
}

pub fn state_derivative(x: &DynState, u: &ControlVector, p: &RobotParams) -> DynState {
    let yaw_gain = p.wheel_base / (2.0 * p.inertia);
    DynState {
        v: (u.force_left + u.force_right) / p.mass,
        omega: yaw_gain * (u.force_right - u.force_left),
        omega_left: (u.voltage_left - p.friction * x.omega_left - p.wheel_radius * u.force_left)
            / p.inertia,
        omega_right: (u.voltage_right
            - p.friction * x.omega_right
            - p.wheel_radius * u.force_right)
            / p.inertia,
    }
}

/// One RK4 step of the plant with the control held constant over `dt`.
pub fn dynamics_step(x: &DynState, u: &ControlVector, p: &RobotParams, dt: f64) -> DynState {
    let f = |_t: f64, s: &[f64; 4]| state_derivative(&DynState::from_array(*s), u, p).to_array();
    DynState::from_array(rk4_step(&f, 0.0, &x.to_array(), dt))
}

/// Plant state extended with the pose. The pose is driven by the wheel speeds
/// through the inverse kinematics, not by the `v`/`omega` rows of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub dynamics: DynState,
    pub pose: Pose,
}

/// One RK4 step of the joint wheel-dynamics and pose system with zero-order-hold input.
pub fn robot_step(s: &RobotState, u: &ControlVector, p: &RobotParams, dt: f64) -> RobotState {
    let f = |_t: f64, y: &[f64; 7]| {
        let x = DynState::from_array([y[0], y[1], y[2], y[3]]);
        let d = state_derivative(&x, u, p);
        let body = wheels_to_body(y[2], y[3], p);
        [
            d.v,
            d.omega,
            d.omega_left,
            d.omega_right,
            body.v * y[6].cos(),
            body.v * y[6].sin(),
            body.omega,
        ]
    };
    let d = s.dynamics;
    let y0 = [d.v, d.omega, d.omega_left, d.omega_right, s.pose.x, s.pose.y, s.pose.theta];
    let y = rk4_step(&f, 0.0, &y0, dt);
    RobotState {
        dynamics: DynState::from_array([y[0], y[1], y[2], y[3]]),
        pose: Pose::new(y[4], y[5], y[6]),
    }
}

/// Integrates the plant from `x0` for `duration` seconds with step `dt`.
///
/// `control` is sampled once at the start of every step and held over it. The
/// returned trace holds `(t, state)` at every step boundary, starting with `t = 0`.
pub fn integrate_dynamics<U>(
    x0: DynState,
    mut control: U,
    params: &RobotParams,
    dt: f64,
    duration: f64,
) -> Result<Vec<(f64, DynState)>>
where
    U: FnMut(f64) -> ControlVector,
{
    if !(dt > 0.0 && duration >= dt) {
        return Err(Error::InvalidConfig(format!(
            "integration needs dt > 0 and duration >= dt (dt={dt}, duration={duration})"
        )));
    }
    let steps = (duration / dt).round() as usize;
    let mut trace = Vec::with_capacity(steps + 1);
    let mut x = x0;
    trace.push((0.0, x));
    for k in 0..steps {
        let t = k as f64 * dt;
        let u = control(t);
        if !u.is_finite() {
            return Err(Error::NonFinite("control input"));
        }
        x = dynamics_step(&x, &u, params, dt);
        trace.push(((k + 1) as f64 * dt, x));
    }
    Ok(trace)
}
