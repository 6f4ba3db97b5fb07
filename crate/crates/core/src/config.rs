//! Experiment configuration files.
//!
//! One TOML document with optional sections; anything omitted takes its default.
//!
//! ```toml
//! [workspace]
//! layout = "B"            # or file = "field.toml", or inline start/target/bounds/obstacles
//!
//! [pso]
//! pop_max = 150
//! inertia_w = 0.7
//!
//! [montecarlo]
//! runs = 40
//! base_seed = 1
//! ```
//!
//! A `[random]` section replaces `[workspace]` with a freshly generated layout per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControllerConfig;
use crate::cost::CostConfig;
use crate::harness::{McConfig, WorkspaceSource};
use crate::pso::PsoConfig;
use crate::robot::RobotParams;
use crate::sim::SimConfig;
use crate::spline::SplineConfig;
use crate::workspace::{load_workspace_file, Bounds, Layout, Obstacle, RandomWorkspaceConfig, Workspace};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSection {
    /// Workspace file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Layout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<Obstacle>,
}

impl WorkspaceSection {
    fn is_inline(&self) -> bool {
        self.start.is_some() || self.target.is_some() || self.bounds.is_some() || !self.obstacles.is_empty()
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<Workspace> {
        match (&self.file, self.layout, self.is_inline()) {
            (Some(f), None, false) => load_workspace_file(&base_dir.join(f)),
            (None, Some(l), false) => Ok(l.workspace()),
            (None, None, true) => {
                let (Some(start), Some(target)) = (self.start, self.target) else {
                    return Err(Error::InvalidConfig("inline workspace needs start and target".into()));
                };
                let mut ws = Workspace::new(self.bounds.unwrap_or_default(), start, target, self.obstacles.clone())?;
                ws.name = self.name.clone();
                Ok(ws)
            }
            _ => Err(Error::InvalidConfig("[workspace] needs exactly one of file, layout or an inline layout".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub runs: usize,
    pub base_seed: u64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { runs: 40, base_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub betas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { betas: vec![50.0, 100.0, 150.0] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workspace: Option<WorkspaceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomWorkspaceConfig>,
    pub spline: SplineConfig,
    pub cost: CostConfig,
    pub pso: PsoConfig,
    pub controller: ControllerConfig,
    pub robot: RobotParams,
    pub sim: SimConfig,
    pub montecarlo: MonteCarloSection,
    pub sweep: SweepSection,
}

impl ExperimentConfig {
    pub fn from_toml(document: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file and turns a `[workspace] file` into a path relative to the caller.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(f) = cfg.workspace.as_mut().and_then(|w| w.file.as_mut()) {
            *f = base.join(&*f);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.workspace.is_some() && self.random.is_some() {
            return Err(Error::InvalidConfig("[workspace] and [random] are mutually exclusive".into()));
        }
        if let Some(r) = &self.random {
            r.validate()?;
        }
        self.spline.validate(self.pso.n_control_points)?;
        self.cost.validate()?;
        self.pso.validate()?;
        self.controller.validate()?;
        self.robot.validate()?;
        self.sim.validate()?;
        if self.montecarlo.runs == 0 {
            return Err(Error::InvalidConfig("montecarlo.runs must be >= 1".into()));
        }
        if self.sweep.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidConfig("sweep.betas must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// The single workspace for `plan` and `track`; a `[random]` section yields the layout for `seed`.
    pub fn resolve_workspace(&self, seed: u64) -> Result<Workspace> {
        self.workspace_source()?.workspace_for(seed)
    }

    pub fn workspace_source(&self) -> Result<WorkspaceSource> {
        match (&self.workspace, &self.random) {
            (Some(w), None) => Ok(WorkspaceSource::Fixed(w.resolve(Path::new("."))?)),
            (None, Some(r)) => Ok(WorkspaceSource::Random(*r)),
            (None, None) => Err(Error::InvalidConfig("config needs a [workspace] or [random] section".into())),
            (Some(_), Some(_)) => Err(Error::InvalidConfig("[workspace] and [random] are mutually exclusive".into())),
        }
    }

    pub fn mc_config(&self) -> Result<McConfig> {
        Ok(McConfig {
            runs: self.montecarlo.runs,
            workspace: self.workspace_source()?,
            spline: self.spline,
            cost: self.cost,
            pso: self.pso,
            base_seed: self.montecarlo.base_seed,
        })
    }
}
