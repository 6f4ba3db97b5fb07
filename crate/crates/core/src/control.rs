//! Cascaded PID tracking controller.
//!
//! The outer loop turns speed and heading errors into a body command
//! `(v_in, omega_in)`; the inner loop drives each wheel towards the speed implied
//! by that command and outputs motor voltages. All four PIDs update every
//! controller tick, while the reference itself changes only once per
//! `control_dt` (sample and hold).

use serde::{Deserialize, Serialize};

use crate::geometry::{unwrap_near, wrap_angle};
use crate::robot::{body_to_wheels, RobotParams};
use crate::spline::SampledPath;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite() && *g >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("controller.{name} gains must be finite and >= 0")))
        }
    }
}

/// Symmetric output clamp `[-max, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limit(pub f64);

impl Limit {
    pub const NONE: Limit = Limit(f64::INFINITY);

    fn clamp(self, u: f64) -> f64 {
        u.clamp(-self.0, self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub previous_error: f64,
    /// Filtered derivative of the error.
    pub derivative: f64,
    pub saturated: bool,
    primed: bool,
}

impl PidState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// One PID update.
///
/// Trapezoidal integral, derivative-on-error through a first-order filter with
/// time constant `filter_time` (0 gives the raw backward difference), output
/// clamped to `limit`. While the output is saturated the integral is frozen
/// whenever integrating would push it further into saturation.
pub fn pid_step(gains: &PidGains, state: &mut PidState, error: f64, dt: f64, filter_time: f64, limit: Limit) -> f64 {
    if !state.primed {
        state.previous_error = error;
        state.primed = true;
    }
    let de = error - state.previous_error;
    state.derivative = (filter_time * state.derivative + gains.kd * de) / (filter_time + dt);
    let integral = state.integral + 0.5 * (error + state.previous_error) * dt;
    let raw = gains.kp * error + gains.ki * integral + state.derivative;
    let out = limit.clamp(raw);
    state.saturated = out != raw;
    if !state.saturated || (raw > out) != (error > 0.0) {
        state.integral = integral;
    }
    state.previous_error = error;
    if state.saturated {
        limit.clamp(gains.kp * error + gains.ki * state.integral + state.derivative)
    } else {
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// PID1, on the speed error.
    pub velocity: PidGains,
    /// PID2, on the heading error.
    pub heading: PidGains,
    /// PID3, on the left wheel speed error.
    pub left_wheel: PidGains,
    /// PID4, on the right wheel speed error.
    pub right_wheel: PidGains,
    /// Reference sample-and-hold interval in s.
    pub control_dt: f64,
    /// Derivative filter time constant of each PID, as a multiple of `kd / kp`
    /// (the derivative time of that PID).
    pub derivative_filter_coefficient: f64,
    /// Limit on `|v_in|` in m/s.
    pub velocity_limit: f64,
    /// Limit on `|omega_in|` in rad/s.
    pub omega_limit: f64,
    /// Limit on the wheel speed references in rad/s.
    pub wheel_speed_limit: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            velocity: PidGains::new(5.0, 5.0, 2.0),
            heading: PidGains::new(5.0, 5.0, 2.0),
            left_wheel: PidGains::new(0.5, 5.0, 2.0),
            right_wheel: PidGains::new(0.01, 1.0, 0.1),
            control_dt: 2.5,
            derivative_filter_coefficient: 4.0,
            velocity_limit: 0.5,
            omega_limit: 3.0,
            wheel_speed_limit: 40.0,
        }
    }
}

impl ControllerConfig {
    /// Faster reference sampling.
    pub fn fast_sampling() -> Self {
        Self { control_dt: 1.5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.velocity.validate("velocity")?;
        self.heading.validate("heading")?;
        self.left_wheel.validate("left_wheel")?;
        self.right_wheel.validate("right_wheel")?;
        if !(self.control_dt.is_finite() && self.control_dt > 0.0) {
            return Err(Error::InvalidConfig("controller.control_dt must be > 0".into()));
        }
        if !(self.derivative_filter_coefficient.is_finite() && self.derivative_filter_coefficient >= 0.0) {
            return Err(Error::InvalidConfig("controller.derivative_filter_coefficient must be >= 0".into()));
        }
        for (name, v) in [
            ("velocity_limit", self.velocity_limit),
            ("omega_limit", self.omega_limit),
            ("wheel_speed_limit", self.wheel_speed_limit),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("controller.{name} must be > 0")));
            }
        }
        Ok(())
    }

    fn filter_time(&self, g: &PidGains) -> f64 {
        if g.kp > 0.0 {
            self.derivative_filter_coefficient * g.kd / g.kp
        } else {
            self.derivative_filter_coefficient * g.kd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceSignal {
    pub v_ref: f64,
    /// Unwrapped heading reference in rad.
    pub theta_ref: f64,
}

/// Speed and heading for a path derivative `(xd, yd)`.
///
/// `v_ref` is signed, positive iff `xd >= 0`; `theta_ref = atan(yd / xd) + k pi`
/// with `k` chosen for the quadrant, brought within `pi` of `previous`. A zero
/// derivative holds the previous heading.
pub fn reference_signal(xd: f64, yd: f64, previous: f64) -> ReferenceSignal {
    let speed = xd.hypot(yd);
    if speed == 0.0 {
        return ReferenceSignal { v_ref: 0.0, theta_ref: previous };
    }
    let v_ref = if xd >= 0.0 { speed } else { -speed };
    let theta = if xd == 0.0 {
        yd.signum() * std::f64::consts::FRAC_PI_2
    } else {
        let k = if xd < 0.0 { 1.0 } else { 0.0 };
        (yd / xd).atan() + k * std::f64::consts::PI
    };
    ReferenceSignal { v_ref, theta_ref: unwrap_near(theta, previous) }
}

/// Reference signals at every sample of the path, unwrapped along the path.
pub fn reference_signals(path: &SampledPath) -> Vec<ReferenceSignal> {
    let mut previous = 0.0;
    let mut first = true;
    path.first_derivatives
        .iter()
        .map(|d| {
            let s = if first && d.norm() > 0.0 {
                let s = reference_signal(d.x, d.y, 0.0);
                ReferenceSignal { theta_ref: wrap_angle(s.theta_ref), ..s }
            } else {
                reference_signal(d.x, d.y, previous)
            };
            first &= d.norm() == 0.0;
            previous = s.theta_ref;
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OuterOutput {
    pub v_in: f64,
    pub omega_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlOutput {
    pub v_in: f64,
    pub omega_in: f64,
    pub omega_left_in: f64,
    pub omega_right_in: f64,
    pub voltage_left: f64,
    pub voltage_right: f64,
}

/// State of the four PIDs plus the last heading command.
#[derive(Debug, Clone, Default)]
pub struct Cascade {
    pub velocity: PidState,
    pub heading: PidState,
    pub left_wheel: PidState,
    pub right_wheel: PidState,
    theta_in: Option<f64>,
}

impl Cascade {
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// `e_v = v_ref - v`, `e_theta = theta_ref - theta` taken as the smallest
    /// angle; `v_in = PID1(e_v)`, `theta_in = PID2(e_theta)` and
    /// `omega_in = d theta_in / dt` by backward difference (0 on the first call).
    pub fn outer_loop(&mut self, r: &ReferenceSignal, v: f64, theta: f64, cfg: &ControllerConfig, dt: f64) -> OuterOutput {
        let e_v = r.v_ref - v;
        let e_theta = wrap_angle(r.theta_ref - theta);
        let v_in = pid_step(&cfg.velocity, &mut self.velocity, e_v, dt, cfg.filter_time(&cfg.velocity), Limit(cfg.velocity_limit));
        let theta_in = pid_step(&cfg.heading, &mut self.heading, e_theta, dt, cfg.filter_time(&cfg.heading), Limit::NONE);
        // Backward difference against the heading command delivered so far, so a
        // step clipped by the rate limit is carried into the following ticks.
        let omega_in = match self.theta_in {
            Some(delivered) => {
                let w = Limit(cfg.omega_limit).clamp((theta_in - delivered) / dt);
                self.theta_in = Some(delivered + w * dt);
                w
            }
            None => {
                self.theta_in = Some(theta_in);
                0.0
            }
        };
        OuterOutput { v_in, omega_in }
    }

    /// Wheel voltages from wheel speed errors, saturated to `voltage_max`.
    #[allow(clippy::too_many_arguments)]
    pub fn inner_loop(
        &mut self,
        omega_left_in: f64,
        omega_right_in: f64,
        omega_left: f64,
        omega_right: f64,
        cfg: &ControllerConfig,
        params: &RobotParams,
        dt: f64,
    ) -> (f64, f64) {
        let limit = Limit(params.voltage_max);
        let left = pid_step(&cfg.left_wheel, &mut self.left_wheel, omega_left_in - omega_left, dt, cfg.filter_time(&cfg.left_wheel), limit);
        let right = pid_step(&cfg.right_wheel, &mut self.right_wheel, omega_right_in - omega_right, dt, cfg.filter_time(&cfg.right_wheel), limit);
        (left, right)
    }

    /// Full cascade for one controller tick.
    #[allow(clippy::too_many_arguments)]
    pub fn update(
        &mut self,
        r: &ReferenceSignal,
        theta: f64,
        omega_left: f64,
        omega_right: f64,
        cfg: &ControllerConfig,
        params: &RobotParams,
        dt: f64,
    ) -> ControlOutput {
        let v = 0.5 * params.wheel_radius * (omega_left + omega_right);
        let outer = self.outer_loop(r, v, theta, cfg, dt);
        let (wl, wr) = wheel_references(outer.v_in, outer.omega_in, params);
        let lim = Limit(cfg.wheel_speed_limit);
        let (wl, wr) = (lim.clamp(wl), lim.clamp(wr));
        let (ul, ur) = self.inner_loop(wl, wr, omega_left, omega_right, cfg, params, dt);
        ControlOutput { v_in: outer.v_in, omega_in: outer.omega_in, omega_left_in: wl, omega_right_in: wr, voltage_left: ul, voltage_right: ur }
    }
}

/// Wheel angular speed references `(omega_L, omega_R)` for a body command.
pub fn wheel_references(v_in: f64, omega_in: f64, params: &RobotParams) -> (f64, f64) {
    let w = body_to_wheels(v_in, omega_in, params);
    (w.omega_left, w.omega_right)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// 8-bit PWM duty for a voltage: `round(255 min(|U|, U_max) / U_max)`, halves rounded up.
pub fn pwm_duty(u: f64, u_max: f64) -> (u8, Direction) {
    let frac = u.abs().min(u_max) / u_max;
    let duty = (255.0 * frac + 0.5).floor().min(255.0) as u8;
    let dir = if u < 0.0 { Direction::Reverse } else { Direction::Forward };
    (duty, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::wheels_to_body;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    const DT: f64 = 0.001;

    #[test]
    fn reference_examples() {
        let r = reference_signal(1.0, 1.0, 0.0);
        assert!((r.v_ref - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.theta_ref - FRAC_PI_4).abs() < 1e-12);
        let r = reference_signal(-1.0, 0.0, 0.0);
        assert_eq!(r.v_ref, -1.0);
        assert!((r.theta_ref.abs() - PI).abs() < 1e-12);
        let r = reference_signal(0.0, 0.0, 0.7);
        assert_eq!(r, ReferenceSignal { v_ref: 0.0, theta_ref: 0.7 });
        assert!((reference_signal(0.0, 2.0, 0.0).theta_ref - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn reference_heading_is_unwrapped_along_a_circle() {
        let pts = (0..400).map(|k| {
            let a = k as f64 / 399.0 * 4.0 * PI;
            crate::Point::new(a.cos(), a.sin())
        }).collect();
        let refs = reference_signals(&SampledPath::from_points(pts, 40.0));
        for w in refs.windows(2) {
            assert!((w[1].theta_ref - w[0].theta_ref).abs() < 0.1);
        }
        let total = refs.last().unwrap().theta_ref - refs[0].theta_ref;
        assert!((total - 4.0 * PI).abs() < 0.2, "{total}");
    }

    #[test]
    fn pid_examples() {
        let mut s = PidState::default();
        for _ in 0..100 {
            assert_eq!(pid_step(&PidGains::new(5.0, 5.0, 2.0), &mut s, 0.0, DT, 0.1, Limit::NONE), 0.0);
        }
        let mut s = PidState::default();
        assert_eq!(pid_step(&PidGains::new(5.0, 0.0, 0.0), &mut s, 2.0, DT, 0.0, Limit::NONE), 10.0);

        // Integral of a constant error grows linearly: ki e t.
        let g = PidGains::new(0.0, 3.0, 0.0);
        let mut s = PidState::default();
        let mut out = 0.0;
        for _ in 0..1000 {
            out = pid_step(&g, &mut s, 0.5, DT, 0.0, Limit::NONE);
        }
        assert!((out - 3.0 * 0.5 * 1.0).abs() < 1e-9);
    }

    #[test]
    fn pid_saturates_and_freezes_the_integral() {
        let g = PidGains::new(1.0, 10.0, 0.0);
        let mut s = PidState::default();
        for _ in 0..1000 {
            let u = pid_step(&g, &mut s, 100.0, DT, 0.0, Limit(12.0));
            assert_eq!(u, 12.0);
            assert!(s.saturated);
        }
        assert_eq!(s.integral, 0.0);
        // Reversing the error leaves saturation straight away.
        let u = pid_step(&g, &mut s, -1.0, DT, 0.0, Limit(12.0));
        assert!(u < 0.0 && !s.saturated);
    }

    #[test]
    fn filtered_derivative_of_a_ramp() {
        // e = t: the raw derivative term is kd; the filtered one approaches it.
        let g = PidGains::new(0.0, 0.0, 2.0);
        let mut s = PidState::default();
        let mut out = 0.0;
        for k in 0..5000 {
            out = pid_step(&g, &mut s, k as f64 * DT, DT, 0.2, Limit::NONE);
        }
        assert!((out - 2.0).abs() < 1e-6);
        s.reset();
        assert_eq!(s, PidState::default());
    }

    #[test]
    fn outer_loop_examples() {
        let cfg = ControllerConfig::default();
        let mut c = Cascade::default();
        let zero = ReferenceSignal::default();
        assert_eq!(c.outer_loop(&zero, 0.0, 0.0, &cfg, DT), OuterOutput::default());
        assert_eq!(c.outer_loop(&zero, 0.0, 0.0, &cfg, DT), OuterOutput::default());

        // Across the seam: reference just below pi, heading just above -pi.
        let mut c = Cascade::default();
        let r = ReferenceSignal { v_ref: 0.0, theta_ref: PI - 0.05 };
        c.outer_loop(&r, 0.0, -PI + 0.05, &cfg, DT);
        assert!((c.heading.previous_error + 0.1).abs() < 1e-12);
    }

    #[test]
    fn heading_step_is_delivered_despite_the_rate_limit() {
        let cfg = ControllerConfig { heading: PidGains::new(5.0, 0.0, 0.0), omega_limit: 1.0, ..Default::default() };
        let mut c = Cascade::default();
        let r = ReferenceSignal { v_ref: 0.0, theta_ref: 0.0 };
        c.outer_loop(&r, 0.0, 0.0, &cfg, DT);
        // Error 0.1 makes theta_in jump by 0.5 rad; at 1 rad/s that takes 0.5 s.
        let r = ReferenceSignal { v_ref: 0.0, theta_ref: 0.1 };
        let mut turned = 0.0;
        for _ in 0..1000 {
            let o = c.outer_loop(&r, 0.0, 0.0, &cfg, DT);
            assert!(o.omega_in.abs() <= 1.0 + 1e-12);
            turned += o.omega_in * DT;
        }
        assert!((turned - 0.5).abs() < 1e-9, "{turned}");
    }

    #[test]
    fn wheel_reference_examples() {
        let p = RobotParams::default();
        let (l, r) = wheel_references(0.21, 0.0, &p);
        assert!((l - 10.0).abs() < 1e-12 && (r - 10.0).abs() < 1e-12);
        let (l, r) = wheel_references(0.0, 1.0, &p);
        assert!(l < 0.0 && r > 0.0 && (l + r).abs() < 1e-12);
    }

    #[test]
    fn inner_loop_examples() {
        let cfg = ControllerConfig::default();
        let p = RobotParams::default();
        let mut c = Cascade::default();
        assert_eq!(c.inner_loop(0.0, 0.0, 0.0, 0.0, &cfg, &p, DT), (0.0, 0.0));
        let (l, r) = c.inner_loop(1e6, -1e6, 0.0, 0.0, &cfg, &p, DT);
        assert_eq!((l, r), (p.voltage_max, -p.voltage_max));
        let same = ControllerConfig { right_wheel: cfg.left_wheel, ..cfg };
        let mut c = Cascade::default();
        for _ in 0..10 {
            let (l, r) = c.inner_loop(3.0, 3.0, 1.0, 1.0, &same, &p, DT);
            assert_eq!(l, r);
        }
    }

    #[test]
    fn pwm_examples() {
        assert_eq!(pwm_duty(0.0, 12.0), (0, Direction::Forward));
        assert_eq!(pwm_duty(12.0, 12.0), (255, Direction::Forward));
        assert_eq!(pwm_duty(6.0, 12.0), (128, Direction::Forward));
        assert_eq!(pwm_duty(-6.0, 12.0), (128, Direction::Reverse));
        assert_eq!(pwm_duty(-40.0, 12.0), (255, Direction::Reverse));
    }

    #[test]
    fn cascade_at_rest_stays_at_rest() {
        let cfg = ControllerConfig::default();
        let p = RobotParams::default();
        let mut c = Cascade::default();
        let r = ReferenceSignal::default();
        for _ in 0..5000 {
            assert_eq!(c.update(&r, 0.0, 0.0, 0.0, &cfg, &p, DT), ControlOutput::default());
        }
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        assert!(ControllerConfig { control_dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { velocity: PidGains::new(-1.0, 0.0, 0.0), ..Default::default() }.validate().is_err());
        assert_eq!(ControllerConfig::fast_sampling().control_dt, 1.5);
    }

    proptest! {
        #[test]
        fn pwm_quantisation_error(u in -12.0f64..12.0) {
            let (duty, dir) = pwm_duty(u, 12.0);
            let back = duty as f64 / 255.0 * 12.0 * if dir == Direction::Reverse { -1.0 } else { 1.0 };
            prop_assert!((back - u).abs() <= 12.0 / 255.0 / 2.0 + 1e-12);
        }

        #[test]
        fn pid_scales_linearly(errors in proptest::collection::vec(-1.0f64..1.0, 1..50), kp in 0.0f64..5.0, ki in 0.0f64..5.0, kd in 0.0f64..2.0) {
            let g1 = PidGains::new(kp, ki, kd);
            let g2 = PidGains::new(2.0 * kp, 2.0 * ki, 2.0 * kd);
            let (mut s1, mut s2) = (PidState::default(), PidState::default());
            for e in errors {
                let a = pid_step(&g1, &mut s1, e, DT, 0.05, Limit::NONE);
                let b = pid_step(&g2, &mut s2, e, DT, 0.05, Limit::NONE);
                prop_assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn heading_error_is_at_most_pi(theta_ref in -20.0f64..20.0, theta in -20.0f64..20.0) {
            let mut c = Cascade::default();
            c.outer_loop(&ReferenceSignal { v_ref: 0.0, theta_ref }, 0.0, theta, &ControllerConfig::default(), DT);
            prop_assert!(c.heading.previous_error.abs() <= PI);
        }

        #[test]
        fn wheel_references_invert(v in -1.0f64..1.0, w in -5.0f64..5.0) {
            let p = RobotParams::default();
            let (l, r) = wheel_references(v, w, &p);
            let b = wheels_to_body(l, r, &p);
            prop_assert!((b.v - v).abs() < 1e-12 && (b.omega - w).abs() < 1e-12);
        }
    }
}
