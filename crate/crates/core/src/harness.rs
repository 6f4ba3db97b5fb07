//! Monte Carlo planning campaigns and penalty-coefficient sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostConfig;
use crate::pso::{plan, PsoConfig};
use crate::spline::SplineConfig;
use crate::workspace::{random_workspace, RandomWorkspaceConfig, Workspace};
use crate::{Error, Result};

/// Where each run's workspace comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkspaceSource {
    /// The same layout every run; only the swarm seed changes.
    Fixed(Workspace),
    /// A fresh random layout per run, seeded with the run seed.
    Random(RandomWorkspaceConfig),
}

impl WorkspaceSource {
    pub fn workspace_for(&self, seed: u64) -> Result<Workspace> {
        match self {
            WorkspaceSource::Fixed(ws) => Ok(ws.clone()),
            WorkspaceSource::Random(cfg) => random_workspace(&RandomWorkspaceConfig { seed, ..*cfg }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub runs: usize,
    pub workspace: WorkspaceSource,
    pub spline: SplineConfig,
    pub cost: CostConfig,
    pub pso: PsoConfig,
    pub base_seed: u64,
}

/// Seed of run `i`.
pub fn run_seed(base_seed: u64, i: usize) -> u64 {
    base_seed ^ i as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub length: f64,
    pub total_cost: f64,
    pub collision: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub straight_line_distance: f64,
    pub converged_at_iteration: usize,
    pub cpu_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Length statistics over successful runs only; `None` when there are none.
    pub avg_length: Option<f64>,
    pub shortest_length: Option<f64>,
    /// Sample standard deviation (n - 1), 0 for a single success.
    pub length_sd: Option<f64>,
    pub avg_cpu_time: f64,
    pub avg_convergence_iteration: f64,
    /// Mean CPU time scaled by the mean convergence iteration over `iter_max`.
    pub avg_convergence_time: f64,
    pub records: Vec<RunRecord>,
}

impl McReport {
    pub fn from_records(mut records: Vec<RunRecord>, iter_max: usize) -> Self {
        records.sort_by_key(|r| r.run);
        let runs = records.len();
        let lengths: Vec<f64> = records.iter().filter(|r| r.success).map(|r| r.length).collect();
        let successes = lengths.len();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let (avg_length, shortest_length, length_sd) = if lengths.is_empty() {
            (None, None, None)
        } else {
            let m = mean(&lengths);
            let sd = if successes > 1 {
                (lengths.iter().map(|l| (l - m).powi(2)).sum::<f64>() / (successes - 1) as f64).sqrt()
            } else {
                0.0
            };
            (Some(m), Some(lengths.iter().copied().fold(f64::INFINITY, f64::min)), Some(sd))
        };
        let cpu: Vec<f64> = records.iter().map(|r| r.cpu_time).collect();
        let iters: Vec<f64> = records.iter().map(|r| r.converged_at_iteration as f64).collect();
        let (avg_cpu_time, avg_convergence_iteration) = if runs == 0 { (0.0, 0.0) } else { (mean(&cpu), mean(&iters)) };
        Self {
            runs,
            successes,
            success_rate: if runs == 0 { 0.0 } else { successes as f64 / runs as f64 },
            avg_length,
            shortest_length,
            length_sd,
            avg_cpu_time,
            avg_convergence_iteration,
            avg_convergence_time: avg_cpu_time * avg_convergence_iteration / iter_max as f64,
            records,
        }
    }

    /// Copy with every wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.avg_cpu_time = 0.0;
        r.avg_convergence_time = 0.0;
        for rec in &mut r.records {
            rec.cpu_time = 0.0;
        }
        r
    }
}

pub fn monte_carlo(cfg: &McConfig) -> Result<McReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidConfig("montecarlo.runs must be >= 1".into()));
    }
    let records = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let seed = run_seed(cfg.base_seed, i);
            let ws = cfg.workspace.workspace_for(seed)?;
            let pso = PsoConfig { seed, ..cfg.pso };
            let res = plan(&ws, &cfg.spline, &cfg.cost, &pso)?;
            Ok(RunRecord {
                run: i,
                seed,
                success: res.success,
                length: res.best_cost.length,
                total_cost: res.best_cost.total,
                collision: res.best_cost.collision,
                velocity: res.best_cost.velocity,
                acceleration: res.best_cost.acceleration,
                straight_line_distance: ws.straight_line_distance(),
                converged_at_iteration: res.converged_at_iteration,
                cpu_time: res.wall_time,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McReport::from_records(records, cfg.pso.iter_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    pub report: McReport,
}

/// One campaign per coefficient, all with the same run seeds.
pub fn beta_sweep(cfg: &McConfig, betas: &[f64]) -> Result<Vec<BetaRow>> {
    if betas.is_empty() {
        return Err(Error::InvalidConfig("beta sweep needs at least one value".into()));
    }
    betas
        .iter()
        .map(|&beta| {
            let c = McConfig { cost: CostConfig { beta, ..cfg.cost }, ..cfg.clone() };
            Ok(BetaRow { beta, report: monte_carlo(&c)? })
        })
        .collect()
}
