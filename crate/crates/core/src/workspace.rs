//! The rectangular operating field with circular obstacles.
//!
//! Workspace files are TOML:
//!
//! ```toml
//! schema_version = 1
//! name = "corridor"
//! start = [0.4, 0.4]
//! target = [3.6, 3.6]
//!
//! [bounds]
//! x = [0.0, 4.0]
//! y = [0.0, 4.0]
//!
//! [[obstacles]]
//! center = [2.0, 2.0]
//! radius = 0.4
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
const MAX_SAMPLING_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
}

impl Obstacle {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self { center: Point::new(x, y), radius }
    }

    /// True if `p` lies strictly inside the disc.
    pub fn contains(&self, p: Point) -> bool {
        distance_to_obstacle(p.x, p.y, self) < self.radius
    }
}

/// Euclidean distance from `(x, y)` to the obstacle centre.
pub fn distance_to_obstacle(x: f64, y: f64, obs: &Obstacle) -> f64 {
    (x - obs.center.x).hypot(y - obs.center.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for Bounds {
    fn default() -> Self {
        Self { x: [0.0, 4.0], y: [0.0, 4.0] }
    }
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x[0] && p.x <= self.x[1] && p.y >= self.y[0] && p.y <= self.y[1]
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub bounds: Bounds,
    pub start: Point,
    pub target: Point,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    start: Point,
    target: Point,
    bounds: Bounds,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
}

impl Workspace {
    pub fn new(bounds: Bounds, start: Point, target: Point, obstacles: Vec<Obstacle>) -> Result<Self> {
        let ws = Self { name: None, bounds, start, target, obstacles };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let finite = b.x.iter().chain(&b.y).all(|v| v.is_finite());
        if !finite || b.x[0] >= b.x[1] || b.y[0] >= b.y[1] {
            return Err(Error::InvalidWorkspace(format!(
                "bounds must satisfy x_min < x_max and y_min < y_max, got x={:?} y={:?}",
                b.x, b.y
            )));
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            if !obs.center.is_finite() || !(obs.radius.is_finite() && obs.radius > 0.0) {
                return Err(Error::InvalidWorkspace(format!(
                    "obstacle {} needs a finite centre and radius > 0",
                    i + 1
                )));
            }
        }
        for (label, p) in [("start", self.start), ("target", self.target)] {
            if !p.is_finite() || !b.contains(p) {
                return Err(Error::InvalidWorkspace(format!(
                    "{label} ({}, {}) lies outside the bounds",
                    p.x, p.y
                )));
            }
            if let Some(i) = self.obstacles.iter().position(|o| distance_to_obstacle(p.x, p.y, o) <= o.radius) {
                return Err(Error::InvalidWorkspace(format!("{label} inside obstacle {}", i + 1)));
            }
        }
        Ok(())
    }

    /// Copy with every obstacle radius grown by `margin`. Start and target are not re-validated.
    pub fn inflated(&self, margin: f64) -> Workspace {
        let mut ws = self.clone();
        for o in &mut ws.obstacles {
            o.radius += margin;
        }
        ws
    }

    pub fn straight_line_distance(&self) -> f64 {
        self.start.distance(self.target)
    }

    pub fn collides(&self, p: Point) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    pub fn to_toml(&self) -> String {
        let file = WorkspaceFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            description: None,
            start: self.start,
            target: self.target,
            bounds: self.bounds,
            obstacles: self.obstacles.clone(),
        };
        toml::to_string(&file).expect("workspace serializes")
    }
}

pub fn load_workspace(document: &str) -> Result<Workspace> {
    let file: WorkspaceFile = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported workspace schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let ws = Workspace {
        name: file.name,
        bounds: file.bounds,
        start: file.start,
        target: file.target,
        obstacles: file.obstacles,
    };
    ws.validate()?;
    Ok(ws)
}

pub fn load_workspace_file(path: &std::path::Path) -> Result<Workspace> {
    load_workspace(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Region {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

/// Parameters for random workspaces. Ranges are inclusive and sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomWorkspaceConfig {
    pub bounds: Bounds,
    pub obstacle_count: [usize; 2],
    pub radius: [f64; 2],
    pub center_x: [f64; 2],
    pub center_y: [f64; 2],
    pub start_region: Region,
    pub target_region: Region,
    pub seed: u64,
}

impl Default for Region {
    fn default() -> Self {
        Self { x: [0.0, 4.0], y: [0.0, 4.0] }
    }
}

impl Default for RandomWorkspaceConfig {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            obstacle_count: [5, 10],
            radius: [0.1, 0.5],
            center_x: [0.5, 3.5],
            center_y: [0.5, 3.5],
            start_region: Region { x: [0.0, 0.5], y: [0.0, 0.5] },
            target_region: Region { x: [3.5, 4.0], y: [3.5, 4.0] },
            seed: 0,
        }
    }
}

impl RandomWorkspaceConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("radius", self.radius),
            ("center_x", self.center_x),
            ("center_y", self.center_y),
            ("start_region.x", self.start_region.x),
            ("start_region.y", self.start_region.y),
            ("target_region.x", self.target_region.x),
            ("target_region.y", self.target_region.y),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!("random.{name} must be a non-empty range, got [{lo}, {hi}]")));
            }
        }
        if self.radius[0] <= 0.0 {
            return Err(Error::InvalidConfig("random.radius must be > 0".into()));
        }
        let [lo, hi] = self.obstacle_count;
        if lo < 1 || lo > hi {
            return Err(Error::InvalidConfig(format!("random.obstacle_count must satisfy 1 <= min <= max, got [{lo}, {hi}]")));
        }
        Ok(())
    }
}

fn uniform(rng: &mut StreamRng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + rng.random::<f64>() * (hi - lo)
    }
}

fn sample_free(rng: &mut StreamRng, region: &Region, obstacles: &[Obstacle]) -> Result<Point> {
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let p = Point::new(uniform(rng, region.x), uniform(rng, region.y));
        if obstacles.iter().all(|o| distance_to_obstacle(p.x, p.y, o) > o.radius) {
            return Ok(p);
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLING_ATTEMPTS))
}

/// Samples a workspace. Obstacles may overlap; start and target are redrawn
/// until they lie outside every obstacle.
pub fn random_workspace(cfg: &RandomWorkspaceConfig) -> Result<Workspace> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::WORKSPACE, 0);
    let [lo, hi] = cfg.obstacle_count;
    let count = rng.random_range(lo..=hi);
    let obstacles: Vec<Obstacle> = (0..count)
        .map(|_| {
            let x = uniform(&mut rng, cfg.center_x);
            let y = uniform(&mut rng, cfg.center_y);
            Obstacle::new(x, y, uniform(&mut rng, cfg.radius))
        })
        .collect();
    let start = sample_free(&mut rng, &cfg.start_region, &obstacles)?;
    let target = sample_free(&mut rng, &cfg.target_region, &obstacles)?;
    let mut ws = Workspace::new(cfg.bounds, start, target, obstacles)?;
    ws.name = Some(format!("random-{}", cfg.seed));
    Ok(ws)
}

/// The three bundled hand-made layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    A,
    B,
    C,
}

impl Layout {
    pub const ALL: [Layout; 3] = [Layout::A, Layout::B, Layout::C];

    pub fn source(self) -> &'static str {
        match self {
            Layout::A => include_str!("../workspaces/layout_a.toml"),
            Layout::B => include_str!("../workspaces/layout_b.toml"),
            Layout::C => include_str!("../workspaces/layout_c.toml"),
        }
    }

    pub fn workspace(self) -> Workspace {
        load_workspace(self.source()).expect("bundled layouts are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EMPTY: &str = r#"
schema_version = 1
start = [0.2, 0.2]
target = [3.8, 3.8]
[bounds]
x = [0.0, 4.0]
y = [0.0, 4.0]
"#;

    #[test]
    fn loads_empty_workspace() {
        let ws = load_workspace(EMPTY).unwrap();
        assert!(ws.obstacles.is_empty());
        assert_eq!(ws.start, Point::new(0.2, 0.2));
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let doc = format!("{EMPTY}\n[[obstacles]]\ncenter = [3.0, 3.0]\nradius = 0.2\n[[obstacles]]\ncenter = [0.3, 0.3]\nradius = 0.5\n");
        let err = load_workspace(&doc).unwrap_err().to_string();
        assert!(err.contains("start inside obstacle 2"), "{err}");
    }

    #[test]
    fn malformed_documents_fail_to_parse() {
        assert!(matches!(load_workspace("start = ["), Err(Error::Parse(_))));
        let wrong_version = EMPTY.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(load_workspace(&wrong_version), Err(Error::Parse(_))));
        let bad_bounds = EMPTY.replace("x = [0.0, 4.0]", "x = [4.0, 0.0]");
        assert!(matches!(load_workspace(&bad_bounds), Err(Error::InvalidWorkspace(_))));
    }

    #[test]
    fn bundled_layouts_load() {
        for layout in Layout::ALL {
            let ws = layout.workspace();
            assert!(!ws.obstacles.is_empty());
        }
    }

    #[test]
    fn random_workspace_is_deterministic() {
        let cfg = RandomWorkspaceConfig { seed: 99, ..Default::default() };
        assert_eq!(random_workspace(&cfg).unwrap(), random_workspace(&cfg).unwrap());
    }

    #[test]
    fn random_workspaces_respect_ranges() {
        for seed in 0..1000 {
            let cfg = RandomWorkspaceConfig { seed, ..Default::default() };
            let ws = random_workspace(&cfg).unwrap();
            assert!((5..=10).contains(&ws.obstacles.len()));
            for o in &ws.obstacles {
                assert!((0.1..=0.5).contains(&o.radius));
                assert!((0.5..=3.5).contains(&o.center.x));
                assert!((0.5..=3.5).contains(&o.center.y));
            }
            ws.validate().unwrap();
        }
    }

    #[test]
    fn degenerate_radius_range() {
        let cfg = RandomWorkspaceConfig { radius: [0.1, 0.1], seed: 5, ..Default::default() };
        let ws = random_workspace(&cfg).unwrap();
        assert!(ws.obstacles.iter().all(|o| o.radius == 0.1));
    }

    #[test]
    fn impossible_start_region_gives_up() {
        let cfg = RandomWorkspaceConfig {
            obstacle_count: [1, 1],
            radius: [1.0, 1.0],
            center_x: [2.0, 2.0],
            center_y: [2.0, 2.0],
            start_region: Region { x: [2.0, 2.1], y: [2.0, 2.1] },
            ..Default::default()
        };
        assert!(matches!(random_workspace(&cfg), Err(Error::SamplingExhausted(10_000))));
    }

    #[test]
    fn distance_examples() {
        let o = Obstacle::new(3.0, 4.0, 0.7);
        assert_eq!(distance_to_obstacle(3.0, 4.0, &o), 0.0);
        assert_eq!(distance_to_obstacle(0.0, 0.0, &o), 5.0);
        assert!((distance_to_obstacle(3.0 + 0.7, 4.0, &o) - 0.7).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn toml_round_trip(seed in any::<u64>()) {
            let ws = random_workspace(&RandomWorkspaceConfig { seed, ..Default::default() }).unwrap();
            prop_assert_eq!(load_workspace(&ws.to_toml()).unwrap(), ws);
        }

        #[test]
        fn distance_is_symmetric_and_metric(
            a in proptest::array::uniform2(-5.0f64..5.0),
            b in proptest::array::uniform2(-5.0f64..5.0),
            c in proptest::array::uniform2(-5.0f64..5.0),
        ) {
            let d = |p: [f64; 2], q: [f64; 2]| distance_to_obstacle(p[0], p[1], &Obstacle::new(q[0], q[1], 1.0));
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        }
    }
}
