//! Constraint penalties and the constrained path cost.
//!
//! The cost of a path of length `l` is `l (1 + beta (O + lambda_v))`, or
//! `l (1 + beta (O + lambda_v + lambda_a))` with the acceleration constraint on,
//! where every violation term is a mean over the path samples.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::spline::SampledPath;
use crate::workspace::{distance_to_obstacle, Obstacle, Workspace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    /// Penalty coefficient.
    pub beta: f64,
    /// Speed limit in m/s.
    pub v_max: f64,
    /// Acceleration limit in m/s^2.
    pub a_max: f64,
    pub use_acceleration_constraint: bool,
    /// Extra clearance added to every obstacle radius while planning, in m.
    pub obstacle_inflation: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { beta: 150.0, v_max: 0.2, a_max: 0.02, use_acceleration_constraint: false, obstacle_inflation: 0.0 }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidConfig("cost.beta must be >= 0".into()));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) || !(self.a_max.is_finite() && self.a_max > 0.0) {
            return Err(Error::InvalidConfig("cost.v_max and cost.a_max must be > 0".into()));
        }
        if !(self.obstacle_inflation.is_finite() && self.obstacle_inflation >= 0.0) {
            return Err(Error::InvalidConfig("cost.obstacle_inflation must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub length: f64,
    /// Summed per-obstacle mean collision penalty.
    pub collision: f64,
    /// Mean speed-limit violation.
    pub velocity: f64,
    /// Mean acceleration-limit violation; only part of `total` when the
    /// acceleration constraint is enabled.
    pub acceleration: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn is_collision_free(&self) -> bool {
        self.collision == 0.0
    }
}

/// `max(1 - d / r_obs, 0)`: 1 at the centre, 0 on and outside the boundary.
pub fn collision_penalty(d: f64, r_obs: f64) -> f64 {
    (1.0 - d / r_obs).max(0.0)
}

fn obstacle_violation(points: &[Point], obs: &Obstacle) -> f64 {
    let sum: f64 = points
        .iter()
        .map(|p| collision_penalty(distance_to_obstacle(p.x, p.y, obs), obs.radius))
        .sum();
    sum / points.len() as f64
}

fn collision_violation(points: &[Point], obstacles: &[Obstacle], inflation: f64) -> f64 {
    obstacles
        .iter()
        .map(|o| obstacle_violation(points, &Obstacle { radius: o.radius + inflation, ..*o }))
        .sum()
}

/// Sum over obstacles of the mean collision penalty over all samples.
pub fn path_collision_violation(path: &SampledPath, ws: &Workspace) -> f64 {
    collision_violation(&path.points, &ws.obstacles, 0.0)
}

/// `|v_i| = sqrt(x'^2 + y'^2)` at every sample.
pub fn speed_profile(path: &SampledPath) -> Vec<f64> {
    path.first_derivatives.iter().map(|d| d.norm()).collect()
}

pub fn acceleration_profile(path: &SampledPath) -> Vec<f64> {
    path.second_derivatives.iter().map(|d| d.norm()).collect()
}

/// `max(1 - limit / magnitude, 0)`, taking the limit 0 for a zero magnitude.
fn limit_violation(magnitude: f64, limit: f64) -> f64 {
    if magnitude == 0.0 {
        0.0
    } else {
        (1.0 - limit / magnitude).max(0.0)
    }
}

fn mean_limit_violation(vectors: &[Point], limit: f64) -> f64 {
    vectors.iter().map(|d| limit_violation(d.norm(), limit)).sum::<f64>() / vectors.len() as f64
}

pub fn velocity_violation(path: &SampledPath, v_max: f64) -> f64 {
    mean_limit_violation(&path.first_derivatives, v_max)
}

pub fn acceleration_violation(path: &SampledPath, a_max: f64) -> f64 {
    mean_limit_violation(&path.second_derivatives, a_max)
}

pub fn path_cost(path: &SampledPath, ws: &Workspace, cfg: &CostConfig) -> CostBreakdown {
    let length = path.length;
    let collision = collision_violation(&path.points, &ws.obstacles, cfg.obstacle_inflation);
    let velocity = velocity_violation(path, cfg.v_max);
    let acceleration = acceleration_violation(path, cfg.a_max);
    let mut penalty = collision + velocity;
    if cfg.use_acceleration_constraint {
        penalty += acceleration;
    }
    CostBreakdown { length, collision, velocity, acceleration, total: length * (1.0 + cfg.beta * penalty) }
}
