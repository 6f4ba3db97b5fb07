//! Particle swarm search over the interior control-point coordinates.
//!
//! A particle's position is the flattened vector `[x1, y1, ..., xn, yn]` of the
//! interior control points. Every particle owns its own random stream, so the
//! swarm evolves identically whether costs are evaluated serially or in parallel.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{path_collision_violation, path_cost, CostBreakdown, CostConfig};
use crate::geometry::Point;
use crate::rng::{self, StreamRng};
use crate::spline::{control_bounds, ControlPolygon, SampledPath, SearchBounds, SplineBasis, SplineConfig};
use crate::workspace::Workspace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub iter_max: usize,
    pub pop_max: usize,
    pub inertia_w: f64,
    pub c1: f64,
    pub c2: f64,
    /// Number of interior control points `n`.
    pub n_control_points: usize,
    pub seed: u64,
    pub convergence_rel_tol: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            iter_max: 300,
            pop_max: 100,
            inertia_w: 0.9,
            c1: 2.0,
            c2: 2.0,
            n_control_points: 5,
            seed: 0,
            convergence_rel_tol: 1e-3,
        }
    }
}

impl PsoConfig {
    /// Larger swarm with lower inertia.
    pub fn adjusted() -> Self {
        Self { pop_max: 150, inertia_w: 0.7, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iter_max < 1 {
            return Err(Error::InvalidConfig("pso.iter_max must be >= 1".into()));
        }
        if self.pop_max < 2 {
            return Err(Error::InvalidConfig("pso.pop_max must be >= 2".into()));
        }
        if !(self.inertia_w > 0.0 && self.inertia_w <= 1.0) {
            return Err(Error::InvalidConfig("pso.inertia_w must be in (0, 1]".into()));
        }
        if !(self.c1.is_finite() && self.c1 >= 0.0 && self.c2.is_finite() && self.c2 >= 0.0) {
            return Err(Error::InvalidConfig("pso.c1 and pso.c2 must be >= 0".into()));
        }
        if self.n_control_points < 1 {
            return Err(Error::InvalidConfig("pso.n_control_points must be >= 1".into()));
        }
        if !(self.convergence_rel_tol.is_finite() && self.convergence_rel_tol >= 0.0) {
            return Err(Error::InvalidConfig("pso.convergence_rel_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Cost at the current position.
    pub cost: f64,
    pub pbest_position: Vec<f64>,
    pub pbest_cost: f64,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub gbest_position: Vec<f64>,
    pub gbest_cost: f64,
    rngs: Vec<StreamRng>,
}

impl Swarm {
    pub fn mean_cost(&self) -> f64 {
        self.particles.iter().map(|p| p.cost).sum::<f64>() / self.particles.len() as f64
    }

    fn update_gbest(&mut self) {
        // Lowest index wins ties.
        let mut best = 0;
        for (i, p) in self.particles.iter().enumerate().skip(1) {
            if p.pbest_cost < self.particles[best].pbest_cost {
                best = i;
            }
        }
        if self.particles[best].pbest_cost < self.gbest_cost || self.gbest_position.is_empty() {
            self.gbest_cost = self.particles[best].pbest_cost;
            self.gbest_position.clone_from(&self.particles[best].pbest_position);
        }
    }
}

/// Builds `pop_max` particles. Particle `i` draws from stream `(cfg.seed, PARTICLE, i)`:
/// positions uniform in the search boxes, velocities uniform in `±(U - L)`.
pub fn init_swarm<F>(bounds: &SearchBounds, cfg: &PsoConfig, cost: F) -> Swarm
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.dimension();
    let mut rngs: Vec<StreamRng> = (0..cfg.pop_max).map(|i| rng::stream(cfg.seed, rng::PARTICLE, i as u64)).collect();
    let particles = rngs
        .par_iter_mut()
        .map(|rng| {
            let mut position = Vec::with_capacity(dim);
            let mut velocity = Vec::with_capacity(dim);
            for d in 0..dim {
                let (lo, hi) = bounds.range(d);
                position.push(lo + rng.random::<f64>() * (hi - lo));
            }
            for d in 0..dim {
                let (lo, hi) = bounds.range(d);
                velocity.push((2.0 * rng.random::<f64>() - 1.0) * (hi - lo));
            }
            let c = cost(&position);
            Particle { pbest_position: position.clone(), position, velocity, cost: c, pbest_cost: c }
        })
        .collect();
    let mut swarm = Swarm { particles, gbest_position: Vec::new(), gbest_cost: f64::INFINITY, rngs };
    swarm.update_gbest();
    swarm
}

/// One synchronous swarm update: move every particle against the current global
/// best, re-evaluate, then refresh personal and global bests.
#[allow(clippy::needless_range_loop)]
pub fn pso_step<F>(swarm: &mut Swarm, bounds: &SearchBounds, cfg: &PsoConfig, cost: F)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let gbest = &swarm.gbest_position;
    swarm.particles.par_iter_mut().zip(swarm.rngs.par_iter_mut()).for_each(|(p, rng)| {
        for d in 0..p.position.len() {
            let g1: f64 = rng.random();
            let g2: f64 = rng.random();
            let x = p.position[d];
            let v = cfg.inertia_w * p.velocity[d] + cfg.c1 * g1 * (p.pbest_position[d] - x) + cfg.c2 * g2 * (gbest[d] - x);
            let (lo, hi) = bounds.range(d);
            let moved = x + v;
            if moved < lo {
                p.position[d] = lo;
                p.velocity[d] = 0.0;
            } else if moved > hi {
                p.position[d] = hi;
                p.velocity[d] = 0.0;
            } else {
                p.position[d] = moved;
                p.velocity[d] = v;
            }
        }
        p.cost = cost(&p.position);
        if p.cost <= p.pbest_cost {
            p.pbest_cost = p.cost;
            p.pbest_position.clone_from(&p.position);
        }
    });
    swarm.update_gbest();
}

/// Smallest `k` with `history[k] <= (1 + rel_tol) * history[last]`.
pub fn convergence_iteration(history: &[f64], rel_tol: f64) -> usize {
    let Some(&last) = history.last() else { return 0 };
    let threshold = (1.0 + rel_tol) * last;
    history.iter().position(|&c| c <= threshold).unwrap_or(history.len() - 1)
}

/// Maps a coordinate vector to its sampled path and cost.
#[derive(Debug, Clone)]
pub struct PathObjective<'a> {
    ws: &'a Workspace,
    spline: SplineConfig,
    cost: CostConfig,
    basis: SplineBasis,
}

impl<'a> PathObjective<'a> {
    pub fn new(ws: &'a Workspace, spline: &SplineConfig, cost: &CostConfig, n_control_points: usize) -> Self {
        let basis = SplineBasis::new(n_control_points + 2, spline.degree, spline.samples);
        Self { ws, spline: *spline, cost: *cost, basis }
    }

    pub fn path(&self, coords: &[f64]) -> SampledPath {
        let mut control = Vec::with_capacity(coords.len() / 2 + 2);
        control.push(self.ws.start);
        control.extend(coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])));
        control.push(self.ws.target);
        let mut pts = Vec::with_capacity(self.basis.samples());
        self.basis.points(&control, &mut pts);
        SampledPath::from_points(pts, self.spline.path_time)
    }

    pub fn evaluate(&self, coords: &[f64]) -> CostBreakdown {
        path_cost(&self.path(coords), self.ws, &self.cost)
    }

    pub fn cost(&self, coords: &[f64]) -> f64 {
        self.evaluate(coords).total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub best_polygon: ControlPolygon,
    pub best_path: SampledPath,
    pub best_cost: CostBreakdown,
    pub best_cost_history: Vec<f64>,
    pub mean_cost_history: Vec<f64>,
    /// Wall-clock seconds spent planning.
    pub wall_time: f64,
    pub converged_at_iteration: usize,
    /// The best path clears every obstacle of the workspace.
    pub success: bool,
}

/// Search corridor half-width used when the spline config leaves it unset.
pub fn default_lateral_margin(ws: &Workspace) -> f64 {
    ws.bounds.width().max(ws.bounds.height()) / 4.0
}

pub fn plan(ws: &Workspace, spline_cfg: &SplineConfig, cost_cfg: &CostConfig, pso_cfg: &PsoConfig) -> Result<PlanResult> {
    ws.validate()?;
    pso_cfg.validate()?;
    spline_cfg.validate(pso_cfg.n_control_points)?;
    cost_cfg.validate()?;
    let started = Instant::now();
    let margin = spline_cfg.lateral_margin.unwrap_or_else(|| default_lateral_margin(ws));
    let bounds = control_bounds(ws, pso_cfg.n_control_points, margin)?;
    let objective = PathObjective::new(ws, spline_cfg, cost_cfg, pso_cfg.n_control_points);
    let cost = |x: &[f64]| objective.cost(x);

    let mut swarm = init_swarm(&bounds, pso_cfg, cost);
    let mut best_cost_history = Vec::with_capacity(pso_cfg.iter_max);
    let mut mean_cost_history = Vec::with_capacity(pso_cfg.iter_max);
    for _ in 0..pso_cfg.iter_max {
        pso_step(&mut swarm, &bounds, pso_cfg, cost);
        best_cost_history.push(swarm.gbest_cost);
        mean_cost_history.push(swarm.mean_cost());
    }

    let best_path = objective.path(&swarm.gbest_position);
    let best_cost = path_cost(&best_path, ws, cost_cfg);
    let success = path_collision_violation(&best_path, ws) == 0.0;
    Ok(PlanResult {
        best_polygon: ControlPolygon::from_coordinates(ws.start, &swarm.gbest_position, ws.target),
        best_path,
        best_cost,
        converged_at_iteration: convergence_iteration(&best_cost_history, pso_cfg.convergence_rel_tol),
        best_cost_history,
        mean_cost_history,
        wall_time: started.elapsed().as_secs_f64(),
        success,
    })
}
