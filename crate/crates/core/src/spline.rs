//! Clamped uniform B-spline paths.
//!
//! A path is the B-spline of degree `K` whose control points are the start, the
//! `n` interior points and the target. The knot vector is clamped (the first and
//! last `K + 1` knots coincide) and uniform in between, so the curve interpolates
//! start and target. The curve parameter `t in [0, 1]` maps linearly to time
//! `[0, T]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::workspace::Workspace;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPolygon {
    pub start: Point,
    pub interior: Vec<Point>,
    pub target: Point,
}

impl ControlPolygon {
    pub fn new(start: Point, interior: Vec<Point>, target: Point) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::InvalidConfig("a control polygon needs at least one interior point".into()));
        }
        let poly = Self { start, interior, target };
        if !poly.points().all(Point::is_finite) {
            return Err(Error::NonFinite("control polygon"));
        }
        Ok(poly)
    }

    /// All control points: start, interior points, target.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        std::iter::once(self.start).chain(self.interior.iter().copied()).chain(std::iter::once(self.target))
    }

    pub fn control_count(&self) -> usize {
        self.interior.len() + 2
    }

    /// Interior coordinates flattened as `[x1, y1, x2, y2, ...]`.
    pub fn to_coordinates(&self) -> Vec<f64> {
        self.interior.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn from_coordinates(start: Point, coords: &[f64], target: Point) -> Self {
        let interior = coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        Self { start, interior, target }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplineConfig {
    /// Spline degree (smoothness). Capped at `control points - 1` when evaluated.
    pub degree: usize,
    /// Number of samples `N` along the path.
    pub samples: usize,
    /// Duration `T` of the path in seconds.
    pub path_time: f64,
    /// Half-width of the control-point search corridor around the start-target
    /// segment. `None` uses a quarter of the larger workspace extent.
    pub lateral_margin: Option<f64>,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self { degree: 3, samples: 200, path_time: 50.0, lateral_margin: None }
    }
}

impl SplineConfig {
    pub fn validate(&self, interior_points: usize) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::InvalidConfig("spline.degree must be >= 1".into()));
        }
        if interior_points < 1 {
            return Err(Error::InvalidConfig("at least one interior control point is required".into()));
        }
        if self.samples < 2 * (interior_points + 2) {
            return Err(Error::InvalidConfig(format!(
                "spline.samples must be >= {} for {interior_points} interior points",
                2 * (interior_points + 2)
            )));
        }
        if !(self.path_time.is_finite() && self.path_time > 0.0) {
            return Err(Error::InvalidConfig("spline.path_time must be > 0".into()));
        }
        if let Some(m) = self.lateral_margin {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidConfig("spline.lateral_margin must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Degree actually used for `control_count` control points.
pub fn effective_degree(degree: usize, control_count: usize) -> usize {
    degree.min(control_count - 1).max(1)
}

/// Clamped uniform knot vector with `control_count + degree + 1` entries.
pub fn knot_vector(control_count: usize, degree: usize) -> Vec<f64> {
    let spans = control_count - degree;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..spans).map(|i| i as f64 / spans as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    knots
}

/// Values of all `control_count` basis functions of the given degree at `t`,
/// by the Cox-de Boor recursion.
pub fn basis_functions(knots: &[f64], degree: usize, control_count: usize, t: f64) -> Vec<f64> {
    let m = knots.len() - 1;
    // Degree-0 indicators on half-open spans; t = 1 belongs to the last non-empty span.
    let mut n: Vec<f64> = (0..m)
        .map(|i| {
            let inside = knots[i] <= t && t < knots[i + 1];
            let at_end = t >= knots[m] && knots[i] < knots[i + 1] && knots[i + 1] >= knots[m];
            if inside || at_end { 1.0 } else { 0.0 }
        })
        .collect();
    for p in 1..=degree {
        for i in 0..(m - p) {
            let left_den = knots[i + p] - knots[i];
            let right_den = knots[i + p + 1] - knots[i + 1];
            let left = if left_den > 0.0 { (t - knots[i]) / left_den * n[i] } else { 0.0 };
            let right = if right_den > 0.0 { (knots[i + p + 1] - t) / right_den * n[i + 1] } else { 0.0 };
            n[i] = left + right;
        }
    }
    n.truncate(control_count);
    n
}

pub fn evaluate_spline(polygon: &ControlPolygon, cfg: &SplineConfig, t: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfRange(t));
    }
    let count = polygon.control_count();
    let degree = effective_degree(cfg.degree, count);
    let knots = knot_vector(count, degree);
    let basis = basis_functions(&knots, degree, count, t);
    Ok(polygon.points().zip(basis).fold(Point::ZERO, |acc, (p, b)| acc + p * b))
}

/// Basis values tabulated at the `N` uniform sample parameters, so that
/// sampling a polygon is a dense matrix-vector product.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    control_count: usize,
    samples: usize,
    weights: Vec<f64>,
}

impl SplineBasis {
    pub fn new(control_count: usize, degree: usize, samples: usize) -> Self {
        let degree = effective_degree(degree, control_count);
        let knots = knot_vector(control_count, degree);
        let mut weights = Vec::with_capacity(samples * control_count);
        for k in 0..samples {
            let t = if k + 1 == samples { 1.0 } else { k as f64 / (samples - 1) as f64 };
            weights.extend(basis_functions(&knots, degree, control_count, t));
        }
        Self { control_count, samples, weights }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Curve points for the given control points (start, interior..., target).
    pub fn points(&self, control: &[Point], out: &mut Vec<Point>) {
        assert_eq!(control.len(), self.control_count, "control point count mismatch");
        out.clear();
        out.extend(self.weights.chunks_exact(self.control_count).map(|row| {
            row.iter().zip(control).fold(Point::ZERO, |acc, (w, p)| acc + *p * *w)
        }));
    }
}

/// A path discretised at `N` uniformly spaced times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// `(x', y')` in m/s.
    pub first_derivatives: Vec<Point>,
    /// `(x'', y'')` in m/s^2.
    pub second_derivatives: Vec<Point>,
    pub length: f64,
}

impl SampledPath {
    /// Builds a path from points spaced uniformly over `[0, duration]`.
    ///
    /// Derivatives use second-order central differences in the interior and
    /// second-order one-sided differences at the ends.
    pub fn from_points(points: Vec<Point>, duration: f64) -> Self {
        let n = points.len();
        assert!(n >= 2, "a sampled path needs at least two points");
        let h = duration / (n - 1) as f64;
        let times = (0..n).map(|k| if k + 1 == n { duration } else { k as f64 * h }).collect();
        let p = &points;
        let first = (0..n)
            .map(|i| {
                if n == 2 {
                    (p[1] - p[0]) * (1.0 / h)
                } else if i == 0 {
                    (p[0] * -3.0 + p[1] * 4.0 - p[2]) * (0.5 / h)
                } else if i == n - 1 {
                    (p[n - 1] * 3.0 - p[n - 2] * 4.0 + p[n - 3]) * (0.5 / h)
                } else {
                    (p[i + 1] - p[i - 1]) * (0.5 / h)
                }
            })
            .collect();
        let h2 = 1.0 / (h * h);
        let second = (0..n)
            .map(|i| {
                if n == 2 {
                    Point::ZERO
                } else if n == 3 {
                    (p[0] - p[1] * 2.0 + p[2]) * h2
                } else if i == 0 {
                    (p[0] * 2.0 - p[1] * 5.0 + p[2] * 4.0 - p[3]) * h2
                } else if i == n - 1 {
                    (p[n - 1] * 2.0 - p[n - 2] * 5.0 + p[n - 3] * 4.0 - p[n - 4]) * h2
                } else {
                    (p[i + 1] - p[i] * 2.0 + p[i - 1]) * h2
                }
            })
            .collect();
        let length = polyline_length(p);
        Self { times, points, first_derivatives: first, second_derivatives: second, length }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().expect("non-empty path")
    }

    /// Position at time `t` by linear interpolation between samples, clamped to the ends.
    pub fn position_at(&self, t: f64) -> Point {
        let n = self.len();
        let duration = self.duration();
        if t <= 0.0 || duration <= 0.0 {
            return self.points[0];
        }
        if t >= duration {
            return self.points[n - 1];
        }
        let s = t / duration * (n - 1) as f64;
        let i = (s.floor() as usize).min(n - 2);
        self.points[i].lerp(self.points[i + 1], s - i as f64)
    }

    /// Same geometry sampled at `count` uniform times over a new duration.
    pub fn resampled(&self, count: usize, duration: f64) -> SampledPath {
        let old = self.duration();
        let pts = (0..count)
            .map(|k| self.position_at(old * k as f64 / (count - 1) as f64))
            .collect();
        SampledPath::from_points(pts, duration)
    }
}

pub fn sample_path(polygon: &ControlPolygon, cfg: &SplineConfig) -> Result<SampledPath> {
    cfg.validate(polygon.interior.len())?;
    let basis = SplineBasis::new(polygon.control_count(), cfg.degree, cfg.samples);
    let control: Vec<Point> = polygon.points().collect();
    let mut pts = Vec::new();
    basis.points(&control, &mut pts);
    Ok(SampledPath::from_points(pts, cfg.path_time))
}

fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Polyline length of the sampled path.
pub fn path_length(path: &SampledPath) -> f64 {
    polyline_length(&path.points)
}

/// Axis-aligned search box for every interior control point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub start: Point,
    pub target: Point,
    pub lower: Vec<Point>,
    pub upper: Vec<Point>,
}

impl SearchBounds {
    pub fn count(&self) -> usize {
        self.lower.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.count()
    }

    /// Lower and upper bound of flattened coordinate `d`.
    pub fn range(&self, d: usize) -> (f64, f64) {
        let (lo, hi) = (self.lower[d / 2], self.upper[d / 2]);
        if d.is_multiple_of(2) { (lo.x, hi.x) } else { (lo.y, hi.y) }
    }

    pub fn contains(&self, polygon: &ControlPolygon) -> bool {
        polygon.interior.len() == self.count()
            && polygon.interior.iter().enumerate().all(|(i, p)| {
                p.x >= self.lower[i].x && p.x <= self.upper[i].x && p.y >= self.lower[i].y && p.y <= self.upper[i].y
            })
    }
}

/// Search boxes anchored on `n + 2` equally spaced nominal points along the
/// start-target segment. Box `i` covers nominal points `i - 1` to `i`, widened by
/// `lateral_margin` on both sides of the segment and clipped to the workspace.
pub fn control_bounds(ws: &Workspace, n: usize, lateral_margin: f64) -> Result<SearchBounds> {
    if n < 1 {
        return Err(Error::InvalidConfig("at least one control point is required".into()));
    }
    let dir = ws.target - ws.start;
    let len = dir.norm();
    if len == 0.0 {
        return Err(Error::InvalidWorkspace("start and target coincide".into()));
    }
    let normal = Point::new(-dir.y / len, dir.x / len) * lateral_margin;
    let nominal = |j: usize| ws.start + dir * (j as f64 / (n + 1) as f64);
    let b = ws.bounds;
    let (mut lower, mut upper) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 1..=n {
        let (a, c) = (nominal(i - 1), nominal(i));
        let corners = [a + normal, a - normal, c + normal, c - normal];
        let fold = |f: fn(f64, f64) -> f64, get: fn(&Point) -> f64, init: f64| {
            corners.iter().map(get).fold(init, f)
        };
        let lo = Point::new(
            fold(f64::min, |p| p.x, f64::INFINITY).max(b.x[0]),
            fold(f64::min, |p| p.y, f64::INFINITY).max(b.y[0]),
        );
        let hi = Point::new(
            fold(f64::max, |p| p.x, f64::NEG_INFINITY).min(b.x[1]),
            fold(f64::max, |p| p.y, f64::NEG_INFINITY).min(b.y[1]),
        );
        lower.push(lo);
        upper.push(hi);
    }
    Ok(SearchBounds { start: ws.start, target: ws.target, lower, upper })
}

/// Draws every interior point uniformly in its box: `L + u (U - L)`, `u ~ U[0, 1)`.
pub fn random_control_polygon<R: Rng + ?Sized>(bounds: &SearchBounds, rng: &mut R) -> ControlPolygon {
    let interior = bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(lo, hi)| {
            let x = lo.x + rng.random::<f64>() * (hi.x - lo.x);
            let y = lo.y + rng.random::<f64>() * (hi.y - lo.y);
            Point::new(x, y)
        })
        .collect();
    ControlPolygon { start: bounds.start, interior, target: bounds.target }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::Bounds;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn poly(start: [f64; 2], interior: &[[f64; 2]], target: [f64; 2]) -> ControlPolygon {
        ControlPolygon::new(start.into(), interior.iter().map(|&p| p.into()).collect(), target.into()).unwrap()
    }

    /// Control points at the Greville abscissae of a segment give a linear-in-t curve.
    fn greville_line(a: Point, b: Point, interior: usize, degree: usize) -> ControlPolygon {
        let count = interior + 2;
        let knots = knot_vector(count, degree);
        let pts: Vec<Point> = (0..count)
            .map(|i| {
                let g = knots[i + 1..=i + degree].iter().sum::<f64>() / degree as f64;
                a.lerp(b, g)
            })
            .collect();
        ControlPolygon::new(pts[0], pts[1..count - 1].to_vec(), pts[count - 1]).unwrap()
    }

    /// Analytic derivative dC/dt of the B-spline, from the derivative control points.
    fn analytic_derivative(polygon: &ControlPolygon, degree: usize, t: f64) -> Point {
        let pts: Vec<Point> = polygon.points().collect();
        let count = pts.len();
        let knots = knot_vector(count, degree);
        let lower = basis_functions(&knots[1..knots.len() - 1], degree - 1, count - 1, t);
        (0..count - 1).fold(Point::ZERO, |acc, i| {
            let q = (pts[i + 1] - pts[i]) * (degree as f64 / (knots[i + degree + 1] - knots[i + 1]));
            acc + q * lower[i]
        })
    }

    #[test]
    fn basis_is_partition_of_unity() {
        let knots = knot_vector(7, 3);
        assert_eq!(knots.len(), 11);
        for k in 0..=100 {
            let b = basis_functions(&knots, 3, 7, k as f64 / 100.0);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(b.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn endpoints_are_interpolated() {
        let p = poly([0.1, 0.2], &[[1.0, 3.0], [2.0, -1.0], [3.5, 2.0]], [3.9, 3.7]);
        let cfg = SplineConfig::default();
        assert_eq!(evaluate_spline(&p, &cfg, 0.0).unwrap(), p.start);
        let end = evaluate_spline(&p, &cfg, 1.0).unwrap();
        assert!(end.distance(p.target) < 1e-12);
    }

    #[test]
    fn parameter_outside_unit_interval_is_rejected() {
        let p = poly([0.0, 0.0], &[[1.0, 1.0]], [2.0, 0.0]);
        assert!(matches!(evaluate_spline(&p, &SplineConfig::default(), 1.01), Err(Error::ParameterOutOfRange(_))));
        assert!(evaluate_spline(&p, &SplineConfig::default(), -0.1).is_err());
    }

    #[test]
    fn collinear_control_points_stay_on_the_line() {
        let p = poly([0.0, 1.0], &[[3.0, 7.0], [1.0, 3.0], [0.5, 2.0]], [2.0, 5.0]);
        let cfg = SplineConfig::default();
        for k in 0..=50 {
            let q = evaluate_spline(&p, &cfg, k as f64 / 50.0).unwrap();
            assert!((q.y - (2.0 * q.x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_one_is_piecewise_linear() {
        // Knots [0, 0, 0.5, 1, 1]: t = 0.25 is halfway between P0 and P1.
        let p = poly([0.0, 0.0], &[[2.0, 2.0]], [4.0, 0.0]);
        let cfg = SplineConfig { degree: 1, ..Default::default() };
        let q = evaluate_spline(&p, &cfg, 0.25).unwrap();
        assert!(q.distance(Point::new(1.0, 1.0)) < 1e-15);
        let q = evaluate_spline(&p, &cfg, 0.75).unwrap();
        assert!(q.distance(Point::new(3.0, 1.0)) < 1e-15);
    }

    #[test]
    fn straight_segment_has_constant_speed() {
        let cfg = SplineConfig { degree: 1, samples: 200, path_time: 50.0, lateral_margin: None };
        let p = poly([0.0, 0.0], &[[1.5, 2.0]], [3.0, 4.0]);
        let path = sample_path(&p, &cfg).unwrap();
        assert!((path.length - 5.0).abs() < 1e-6);
        for d in &path.first_derivatives {
            assert!((d.norm() - 0.1).abs() < 1e-6);
        }
        let p = greville_line(Point::new(0.0, 0.0), Point::new(3.0, 4.0), 5, 3);
        let path = sample_path(&p, &SplineConfig::default()).unwrap();
        assert!((path.length - 5.0).abs() < 1e-6);
        for (d, a) in path.first_derivatives.iter().zip(&path.second_derivatives) {
            assert!((d.norm() - 0.1).abs() < 1e-6);
            assert!(a.norm() < 1e-9);
        }
    }

    #[test]
    fn circle_length_within_one_percent() {
        // Closed loop of 17 control points (first = last) around a circle.
        let r = 1.0;
        // A uniform cubic B-spline of a regular 16-gon of radius R has midpoint
        // radius close to R (2 + cos(2 pi / 16)) / 3; scale the polygon accordingly.
        let rc = 3.0 * r / (2.0 + (std::f64::consts::TAU / 16.0).cos());
        let pts: Vec<Point> = (0..=16)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 16.0;
                Point::new(rc * a.cos(), rc * a.sin())
            })
            .collect();
        let p = ControlPolygon::new(pts[0], pts[1..16].to_vec(), pts[16]).unwrap();
        let cfg = SplineConfig { degree: 3, samples: 1000, path_time: 10.0, lateral_margin: None };
        let path = sample_path(&p, &cfg).unwrap();
        // Oracle: trapezoidal integration of the analytic speed on a fine grid.
        let m = 200_000;
        let mut exact = 0.0;
        for k in 0..m {
            let (t0, t1) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
            exact += 0.5 * (analytic_derivative(&p, 3, t0).norm() + analytic_derivative(&p, 3, t1).norm()) * (t1 - t0);
        }
        assert!((path.length - exact).abs() / exact < 0.01);
        // And the curve is a close approximation of the circle itself.
        let circumference = std::f64::consts::TAU * r;
        assert!((path.length - circumference).abs() / circumference < 0.01);
    }

    #[test]
    fn doubling_samples_converges_length() {
        let p = poly([0.2, 0.2], &[[1.0, 2.5], [2.0, 0.5], [3.0, 3.0]], [3.8, 3.8]);
        let coarse = sample_path(&p, &SplineConfig { samples: 1000, ..Default::default() }).unwrap();
        let fine = sample_path(&p, &SplineConfig { samples: 2000, ..Default::default() }).unwrap();
        assert!((coarse.length - fine.length).abs() < 1e-4);
    }

    #[test]
    fn finite_differences_are_second_order() {
        let p = poly([0.2, 0.2], &[[1.0, 2.5], [2.0, 0.5], [3.0, 3.0], [3.3, 1.0]], [3.8, 3.8]);
        let duration = 50.0;
        let max_err = |n: usize| {
            let path = sample_path(&p, &SplineConfig { samples: n, degree: 3, path_time: duration, lateral_margin: None }).unwrap();
            path.times
                .iter()
                .zip(&path.first_derivatives)
                .map(|(t, d)| (*d - analytic_derivative(&p, 3, t / duration) * (1.0 / duration)).norm())
                .fold(0.0, f64::max)
        };
        let ratio = max_err(400) / max_err(800);
        assert!((3.0..5.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn path_length_examples() {
        let path = SampledPath::from_points(vec![Point::new(0.0, 0.0), Point::new(3.0, 4.0)], 1.0);
        assert_eq!(path_length(&path), 5.0);
        let path = SampledPath::from_points(vec![Point::new(1.0, 1.0); 3], 1.0);
        assert_eq!(path_length(&path), 0.0);
        let a = SampledPath::from_points(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)], 1.0);
        let b = SampledPath::from_points(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.0)], 1.0);
        assert_ne!(path_length(&a), path_length(&b));
    }

    fn empty_ws(start: Point, target: Point) -> Workspace {
        Workspace::new(Bounds::default(), start, target, vec![]).unwrap()
    }

    #[test]
    fn control_bounds_single_box() {
        let ws = empty_ws(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let b = control_bounds(&ws, 1, 0.0).unwrap();
        assert_eq!(b.lower, vec![Point::new(0.0, 0.0)]);
        assert_eq!(b.upper, vec![Point::new(2.0, 0.0)]);
    }

    #[test]
    fn control_bounds_clip_to_workspace() {
        let ws = empty_ws(Point::new(0.3, 0.5), Point::new(3.6, 3.1));
        let b = control_bounds(&ws, 5, 4.0).unwrap();
        for (lo, hi) in b.lower.iter().zip(&b.upper) {
            assert!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 4.0 && hi.y <= 4.0);
        }
        assert_eq!(b.lower[0], Point::new(0.0, 0.0));
        assert_eq!(b.upper[4], Point::new(4.0, 4.0));
        let ws = empty_ws(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
        let b = control_bounds(&ws, 5, 4.0).unwrap();
        for (lo, hi) in b.lower.iter().zip(&b.upper) {
            assert_eq!((lo.y, hi.y), (0.0, 4.0));
        }
        let same = Workspace { target: ws.start, ..ws };
        assert!(control_bounds(&same, 5, 1.0).is_err());
    }

    #[test]
    fn random_polygon_edges() {
        let ws = empty_ws(Point::new(0.5, 0.5), Point::new(3.5, 2.0));
        let mut b = control_bounds(&ws, 3, 0.3).unwrap();
        b.upper[1] = b.lower[1];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = random_control_polygon(&b, &mut rng);
            assert!(b.contains(&p));
            assert_eq!(p.interior[1], b.lower[1]);
        }
        // u = 0 and u -> 1 reach the box corners.
        let mut zero = ConstRng(0);
        assert_eq!(random_control_polygon(&b, &mut zero).interior, b.lower);
        let mut one = ConstRng(u64::MAX);
        let hi = random_control_polygon(&b, &mut one);
        for (p, u) in hi.interior.iter().zip(&b.upper) {
            assert!(p.distance(*u) < 1e-9);
        }
    }

    struct ConstRng(u64);

    impl rand::RngCore for ConstRng {
        fn next_u32(&mut self) -> u32 {
            self.0 as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(self.0 as u8);
        }
    }

    fn hull(points: &[Point]) -> Vec<Point> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
        let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
        let mut h: Vec<Point> = Vec::new();
        for pass in 0..2 {
            let start = h.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
            for &p in iter {
                while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
                    h.pop();
                }
                h.push(p);
            }
            h.pop();
        }
        h
    }

    fn inside_hull(h: &[Point], p: Point, slack: f64) -> bool {
        if h.len() < 3 {
            // Degenerate hull: distance to the segment.
            let (a, b) = (h[0], *h.last().unwrap());
            let d = b - a;
            let s = if d.norm() == 0.0 { 0.0 } else { ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0) };
            return p.distance(a + d * s) <= slack;
        }
        (0..h.len()).all(|i| {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            let e = b - a;
            (e.x * (p.y - a.y) - e.y * (p.x - a.x)) / e.norm() >= -slack
        })
    }

    fn arb_polygon() -> impl Strategy<Value = ControlPolygon> {
        (
            proptest::array::uniform2(-4.0f64..4.0),
            proptest::collection::vec(proptest::array::uniform2(-4.0f64..4.0), 1..7),
            proptest::array::uniform2(-4.0f64..4.0),
        )
            .prop_map(|(s, i, t)| ControlPolygon::new(s.into(), i.into_iter().map(Point::from).collect(), t.into()).unwrap())
    }

    proptest! {
        #[test]
        fn endpoint_interpolation(p in arb_polygon(), degree in 1usize..5) {
            let cfg = SplineConfig { degree, ..Default::default() };
            prop_assert!(evaluate_spline(&p, &cfg, 0.0).unwrap().distance(p.start) < 1e-12);
            prop_assert!(evaluate_spline(&p, &cfg, 1.0).unwrap().distance(p.target) < 1e-12);
        }

        #[test]
        fn samples_lie_in_convex_hull(p in arb_polygon()) {
            let path = sample_path(&p, &SplineConfig::default()).unwrap();
            let h = hull(&p.points().collect::<Vec<_>>());
            for q in &path.points {
                prop_assert!(inside_hull(&h, *q, 1e-9));
            }
        }

        #[test]
        fn length_at_least_chord(p in arb_polygon()) {
            let path = sample_path(&p, &SplineConfig::default()).unwrap();
            prop_assert!(path.length >= p.start.distance(p.target) - 1e-9);
            prop_assert_eq!(path.length, path_length(&path));
        }

        #[test]
        fn translation_equivariance(p in arb_polygon(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let shift = Point::new(a, b);
            let moved = ControlPolygon::new(p.start + shift, p.interior.iter().map(|&q| q + shift).collect(), p.target + shift).unwrap();
            let cfg = SplineConfig::default();
            let p1 = sample_path(&p, &cfg).unwrap();
            let p2 = sample_path(&moved, &cfg).unwrap();
            for (q1, q2) in p1.points.iter().zip(&p2.points) {
                prop_assert!((*q1 + shift).distance(*q2) < 1e-12);
            }
            prop_assert!((p1.length - p2.length).abs() < 1e-12);
        }

        #[test]
        fn bounds_progress_along_segment(
            s in proptest::array::uniform2(0.0f64..4.0),
            t in proptest::array::uniform2(0.0f64..4.0),
            n in 1usize..8,
            margin in 0.0f64..5.0,
        ) {
            prop_assume!(Point::from(s).distance(Point::from(t)) > 1e-3);
            let ws = empty_ws(s.into(), t.into());
            let b = control_bounds(&ws, n, margin).unwrap();
            let u = (ws.target - ws.start) * (1.0 / ws.straight_line_distance());
            let low = |i: usize| (u.x * b.lower[i].x).min(u.x * b.upper[i].x) + (u.y * b.lower[i].y).min(u.y * b.upper[i].y);
            for i in 0..n {
                prop_assert!(b.lower[i].x <= b.upper[i].x && b.lower[i].y <= b.upper[i].y);
                if i > 0 {
                    prop_assert!(low(i) >= low(i - 1) - 1e-12);
                }
            }
        }
    }
}
