//! Points, curves and paths in the `(x, y)` plane.
//!
//! Every attainable pair lies in the region bounded by the Saint-Venant and
//! Faber-Krahn lines, the Polya line `y = x` and the Kohler-Jobin parabola
//! `y = c_B x^2` through the vertex `V = (lambda_1(B), 1/T(B))`. This module
//! samples standard shape families, builds the three kinds of continuous
//! paths (homothety, continuous Steiner symmetrization, normalized Minkowski
//! combination), estimates the lower and upper envelopes, and certifies
//! interior points by winding numbers of closed paths.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{evaluate_shape_with, FemConfig, FemError, ShapeMetrics};
use crate::geometry::{css_to_ball_path, minkowski_path, ConvexPolygon, GeometryError};
use crate::special::{c_ball, lambda1_ball, torsion_ball};

/// Relative equality tolerance of the region clauses.
pub const REGION_TOL: f64 = 1e-9;
/// Largest admissible distance between a winding sum and an integer.
pub const WINDING_RESIDUAL: f64 = 0.1;
/// Query points closer than this to a path have no winding number.
pub const ON_PATH_DISTANCE: f64 = 1e-9;
/// Boundary samples of polygonized ellipses.
pub const ELLIPSE_SAMPLES: usize = 256;
/// Random polygons thinner than this (at unit area) are resampled.
pub const MIN_RANDOM_INRADIUS: f64 = 0.05;
/// Upper end of the aspect-ratio grid of rectangles and ellipses.
pub const MAX_ASPECT: f64 = 8.0;
pub const CSV_HEADER: [&str; 11] =
    ["family", "param1", "param2", "seed", "area", "lambda1", "torsion", "x", "y", "lambda1_err", "torsion_err"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagramError {
    #[error("{what} = {value} is below its admissible minimum {min}")]
    OutOfRange { what: &'static str, value: f64, min: f64 },
    #[error("no points to estimate envelopes from")]
    EmptyInput,
    #[error("query point lies on the path (distance {distance:e})")]
    PointOnPath { distance: f64 },
    #[error("winding sum {turns} is not close to an integer")]
    WindingResidual { turns: f64 },
    #[error("invalid family specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, DiagramError>;

/// An evaluated shape in diagram coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramPoint {
    pub x: f64,
    pub y: f64,
    pub family: String,
    pub param1: f64,
    pub param2: f64,
    pub seed: u64,
    pub area: f64,
    pub lambda1: f64,
    pub torsion: f64,
    /// Relative error estimates of `lambda1` and `torsion`.
    pub lambda1_err: f64,
    pub torsion_err: f64,
    /// Unextrapolated coordinates on the finest mesh.
    pub raw_x: f64,
    pub raw_y: f64,
    /// Index of the source polygon within its batch.
    pub id: usize,
}

impl DiagramPoint {
    pub fn from_metrics(m: &ShapeMetrics, family: &str, param1: f64, param2: f64, seed: u64, id: usize) -> Self {
        Self {
            x: m.x,
            y: m.y,
            family: family.to_string(),
            param1,
            param2,
            seed,
            area: m.area,
            lambda1: m.lambda1,
            torsion: m.torsion,
            lambda1_err: m.lambda1_err,
            torsion_err: m.torsion_err,
            raw_x: m.raw_x(),
            raw_y: m.raw_y(),
            id,
        }
    }

    /// Absolute error estimate of `x`.
    pub fn x_err(&self) -> f64 {
        self.lambda1_err * self.x
    }

    /// Absolute error estimate of `y`.
    pub fn y_err(&self) -> f64 {
        self.torsion_err * self.y
    }

    pub fn csv_record(&self) -> [String; 11] {
        [
            self.family.clone(),
            fmt_num(self.param1),
            fmt_num(self.param2),
            self.seed.to_string(),
            fmt_num(self.area),
            fmt_num(self.lambda1),
            fmt_num(self.torsion),
            fmt_num(self.x),
            fmt_num(self.y),
            fmt_num(self.lambda1_err),
            fmt_num(self.torsion_err),
        ]
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Writes points under [`CSV_HEADER`].
pub fn write_csv<W: Write>(points: &[DiagramPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record(p.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Homothety,
    Css,
    Minkowski,
    Loop,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Homothety => "homothety",
            Self::Css => "css",
            Self::Minkowski => "minkowski",
            Self::Loop => "loop",
        }
    }
}

/// An ordered sequence of diagram points. Loops are implicitly closed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPath {
    pub kind: PathKind,
    pub points: Vec<DiagramPoint>,
    /// Indices of points that break the path's expected property: an
    /// increase beyond solver error for CSS paths, a dip under the inradius
    /// floor for Minkowski paths.
    pub violations: Vec<usize>,
    /// Lower bound on `x` along a Minkowski path.
    pub floor: Option<f64>,
}

impl PlanarPath {
    fn new(kind: PathKind, points: Vec<DiagramPoint>) -> Self {
        Self { kind, points, violations: Vec::new(), floor: None }
    }

    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let n = self.points.len();
        let mut points = self.points.clone();
        points.reverse();
        let mut violations: Vec<usize> = self.violations.iter().map(|&i| n - 1 - i).collect();
        violations.sort_unstable();
        Self { kind: self.kind, points, violations, floor: self.floor }
    }
}

// Region R and its boundary curves.

/// `y = c_B x^2`, the image of the disks of volume at most one.
pub fn kohler_jobin_curve(x: f64) -> Result<f64> {
    let min = lambda1_ball();
    if x < min * (1.0 - REGION_TOL) {
        return Err(DiagramError::OutOfRange { what: "x", value: x, min });
    }
    Ok(c_ball() * x * x)
}

/// Which of the four defining inequalities of the region hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionClauses {
    /// `y >= 1/T(B)`.
    pub saint_venant: bool,
    /// `x >= lambda_1(B)`.
    pub faber_krahn: bool,
    /// `y >= x`.
    pub polya: bool,
    /// `y <= c_B x^2`.
    pub kohler_jobin: bool,
}

impl RegionClauses {
    pub fn all(&self) -> bool {
        self.saint_venant && self.faber_krahn && self.polya && self.kohler_jobin
    }
}

fn at_least(a: f64, b: f64) -> bool {
    a >= b - REGION_TOL * b.abs().max(1.0)
}

pub fn region_clauses(x: f64, y: f64) -> RegionClauses {
    RegionClauses {
        saint_venant: at_least(y, 1.0 / torsion_ball()),
        faber_krahn: at_least(x, lambda1_ball()),
        polya: at_least(y, x),
        kohler_jobin: at_least(c_ball() * x * x, y),
    }
}

/// Membership in the region bounded by the classical inequalities.
pub fn region_r_contains(x: f64, y: f64) -> bool {
    x.is_finite() && y.is_finite() && region_clauses(x, y).all()
}

/// `|Omega| >= max(lambda_1(B)/x, (1/(T(B) y))^{1/2})`, valid for any shape
/// with coordinates `(x, y)` in the weak diagram.
pub fn volume_lower_bound(x: f64, y: f64) -> Result<f64> {
    let (xb, yb) = (lambda1_ball(), 1.0 / torsion_ball());
    if x < xb * (1.0 - REGION_TOL) {
        return Err(DiagramError::OutOfRange { what: "x", value: x, min: xb });
    }
    if y < yb * (1.0 - REGION_TOL) {
        return Err(DiagramError::OutOfRange { what: "y", value: y, min: yb });
    }
    Ok((xb / x).max((yb / y).sqrt()))
}

/// Samples `y = (Y/X^2) x^2` through the point `(X, Y)` of `m`, the image of
/// the homothetic copies of the shape with volume at most one.
pub fn homothety_curve(m: &ShapeMetrics, x_range: (f64, f64), n: usize) -> Result<PlanarPath> {
    let (lo, hi) = x_range;
    if lo < m.x * (1.0 - REGION_TOL) {
        return Err(DiagramError::OutOfRange { what: "x", value: lo, min: m.x });
    }
    if hi < lo {
        return Err(DiagramError::OutOfRange { what: "upper end of x range", value: hi, min: lo });
    }
    let coef = m.y / (m.x * m.x);
    let n = n.max(1);
    let points = (0..n)
        .map(|k| {
            let x = if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            let y = coef * x * x;
            // The copy t Omega with t^2 = X/x has these coordinates.
            let area = m.x / x;
            DiagramPoint {
                x,
                y,
                family: "homothety".into(),
                param1: area,
                param2: 0.0,
                seed: 0,
                area,
                lambda1: x / area,
                torsion: area * area / y,
                lambda1_err: m.lambda1_err,
                torsion_err: m.torsion_err,
                raw_x: x,
                raw_y: y,
                id: k,
            }
        })
        .collect();
    Ok(PlanarPath::new(PathKind::Homothety, points))
}

// Shape families.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Inscribed 256-gons of ellipses, by aspect ratio.
    Ellipse,
    /// Rectangles by aspect ratio.
    Rectangle,
    /// Isosceles triangles by apex angle.
    Isosceles,
    /// Regular polygons by number of sides.
    Regular,
    /// Convex hulls of `k` uniform points in a square; `None` draws `k` in
    /// `3..=10` per shape.
    Random { k: Option<usize> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ellipse => "ellipse",
            Self::Rectangle => "rectangle",
            Self::Isosceles => "isosceles",
            Self::Regular => "regular",
            Self::Random { .. } => "random",
        }
    }
}

impl FromStr for Family {
    type Err = DiagramError;

    /// Accepts `ellipse`, `rectangle`, `isosceles`, `regular`, `random` and
    /// `random:K`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ellipse" | "ellipses" => Ok(Self::Ellipse),
            "rectangle" | "rectangles" => Ok(Self::Rectangle),
            "isosceles" | "triangle" | "triangles" => Ok(Self::Isosceles),
            "regular" => Ok(Self::Regular),
            "random" => Ok(Self::Random { k: None }),
            _ => match s.strip_prefix("random:") {
                Some(k) => {
                    let k: usize = k.parse().map_err(|_| DiagramError::InvalidSpec(format!("bad point count in {s:?}")))?;
                    if k < 3 {
                        return Err(DiagramError::InvalidSpec(format!("random polygons need k >= 3, got {k}")));
                    }
                    Ok(Self::Random { k: Some(k) })
                }
                None => Err(DiagramError::InvalidSpec(format!("unknown family {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
    pub count: usize,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family, count: usize, seed: u64) -> Self {
        Self { family, count, seed }
    }

    /// Number of shapes of the default figure for `family`.
    pub fn default_count(family: Family) -> usize {
        match family {
            Family::Ellipse | Family::Rectangle => 29,
            Family::Isosceles => 17,
            Family::Regular => 14,
            Family::Random { .. } => 24,
        }
    }
}

/// The families of the standard figure.
pub fn default_families(seed: u64) -> Vec<FamilySpec> {
    [Family::Ellipse, Family::Rectangle, Family::Isosceles, Family::Regular, Family::Random { k: None }]
        .into_iter()
        .map(|f| FamilySpec::new(f, FamilySpec::default_count(f), seed))
        .collect()
}

/// A generated member of a family with its two parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyShape {
    pub polygon: ConvexPolygon,
    pub param1: f64,
    pub param2: f64,
}

fn grid(lo: f64, hi: f64, count: usize, single: f64) -> Vec<f64> {
    if count == 1 {
        return vec![single];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

/// Unit-area members of a family, in parameter order.
///
/// Aspect ratios run over `[1, 8]` and apex angles over `[10, 170]` degrees
/// in `count` equal steps; regular polygons take `n = 3, 4, ...` up to 16.
pub fn family_polygons(spec: &FamilySpec) -> Result<Vec<FamilyShape>> {
    if spec.count == 0 {
        return Err(DiagramError::InvalidSpec("count must be positive".into()));
    }
    let unit = |p: ConvexPolygon, param1: f64, param2: f64| FamilyShape {
        polygon: p.normalize_to_unit_area().centered(),
        param1,
        param2,
    };
    let mut out = Vec::with_capacity(spec.count);
    match spec.family {
        Family::Ellipse => {
            for a in grid(1.0, MAX_ASPECT, spec.count, 1.0) {
                out.push(unit(ConvexPolygon::ellipse(a.sqrt(), 1.0 / a.sqrt(), ELLIPSE_SAMPLES)?, a, 0.0));
            }
        }
        Family::Rectangle => {
            for a in grid(1.0, MAX_ASPECT, spec.count, 1.0) {
                out.push(unit(ConvexPolygon::rectangle(a.sqrt(), 1.0 / a.sqrt())?, a, 0.0));
            }
        }
        Family::Isosceles => {
            for deg in grid(10.0, 170.0, spec.count, 60.0) {
                out.push(unit(ConvexPolygon::isosceles(deg.to_radians())?, deg, 0.0));
            }
        }
        Family::Regular => {
            if spec.count > 14 {
                return Err(DiagramError::InvalidSpec(format!(
                    "regular polygons are limited to n = 3..16, asked for {} shapes",
                    spec.count
                )));
            }
            for n in 3..3 + spec.count {
                out.push(unit(ConvexPolygon::regular(n, 1.0)?, n as f64, 0.0));
            }
        }
        Family::Random { k } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let max_attempts = 1000 * spec.count;
            let mut attempts = 0;
            while out.len() < spec.count {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(DiagramError::InvalidSpec(format!(
                        "only {} of {} random polygons passed the inradius filter",
                        out.len(),
                        spec.count
                    )));
                }
                let k = k.unwrap_or_else(|| rng.gen_range(3..=10));
                let Ok(p) = ConvexPolygon::random(&mut rng, k) else { continue };
                let p = p.normalize_to_unit_area().centered();
                if p.inradius() < MIN_RANDOM_INRADIUS {
                    continue;
                }
                let index = out.len() as f64;
                out.push(FamilyShape { polygon: p, param1: k as f64, param2: index });
            }
        }
    }
    Ok(out)
}

/// Evaluates every member of a family. Shapes are generated sequentially
/// from the seed and solved in parallel, so the output does not depend on
/// the number of workers.
pub fn sample_family(spec: &FamilySpec, config: &FemConfig) -> Result<Vec<DiagramPoint>> {
    let shapes = family_polygons(spec)?;
    let name = spec.family.name();
    shapes
        .par_iter()
        .enumerate()
        .map(|(id, s)| {
            let m = evaluate_shape_with(&s.polygon, config)?;
            Ok(DiagramPoint::from_metrics(&m, name, s.param1, s.param2, spec.seed, id))
        })
        .collect()
}

// Envelopes.

/// Per-bin extremes of `y`, at the bin centers of populated bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub centers: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&c| c <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

impl Envelopes {
    /// Piecewise-linear lower envelope, constant beyond the end bins.
    pub fn lower_at(&self, x: f64) -> f64 {
        interpolate(&self.centers, &self.lower, x)
    }

    pub fn upper_at(&self, x: f64) -> f64 {
        interpolate(&self.centers, &self.upper, x)
    }

    /// Bins where the lower envelope drops by more than `noise` relative to
    /// the previous bin. The lower envelope of the diagram is increasing, so
    /// these flag undersampling or solver noise.
    pub fn lower_decreases(&self, noise: f64) -> Vec<usize> {
        (1..self.lower.len()).filter(|&i| self.lower[i] < self.lower[i - 1] * (1.0 - noise)).collect()
    }

    /// Upper minus lower per bin.
    pub fn gaps(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }
}

/// Bins the points into `n_bins` equal `x` intervals over their range and
/// records the smallest and largest `y` in every populated bin.
pub fn estimate_envelopes(points: &[DiagramPoint], n_bins: usize) -> Result<Envelopes> {
    if points.is_empty() {
        return Err(DiagramError::EmptyInput);
    }
    let n_bins = n_bins.max(1);
    let xmin = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let xmax = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let width = (xmax - xmin) / n_bins as f64;
    let mut lower = vec![f64::INFINITY; n_bins];
    let mut upper = vec![f64::NEG_INFINITY; n_bins];
    let mut counts = vec![0usize; n_bins];
    for p in points {
        let b = if width > 0.0 { (((p.x - xmin) / width) as usize).min(n_bins - 1) } else { 0 };
        lower[b] = lower[b].min(p.y);
        upper[b] = upper[b].max(p.y);
        counts[b] += 1;
    }
    let mut env = Envelopes { centers: Vec::new(), lower: Vec::new(), upper: Vec::new(), counts: Vec::new() };
    for b in 0..n_bins {
        if counts[b] == 0 {
            continue;
        }
        env.centers.push(if width > 0.0 { xmin + (b as f64 + 0.5) * width } else { xmin });
        env.lower.push(lower[b]);
        env.upper.push(upper[b]);
        env.counts.push(counts[b]);
    }
    Ok(env)
}

// Continuous paths.

fn evaluate_path(
    polygons: &[ConvexPolygon],
    family: &str,
    params: &[f64],
    config: &FemConfig,
) -> Result<Vec<DiagramPoint>> {
    polygons
        .par_iter()
        .zip(params)
        .enumerate()
        .map(|(id, (p, &t))| {
            let m = evaluate_shape_with(p, config)?;
            Ok(DiagramPoint::from_metrics(&m, family, t, 0.0, 0, id))
        })
        .collect()
}

/// Evaluates `P` followed by `n_steps` elements of its continuous Steiner
/// symmetrization towards the disk. The input is normalized to unit area.
/// Steps where `x` or `y` grows by more than the combined error estimates of
/// the two points are recorded as violations.
pub fn css_path(p: &ConvexPolygon, n_steps: usize, config: &FemConfig) -> Result<PlanarPath> {
    let mut polygons = vec![p.normalize_to_unit_area().centered()];
    polygons.extend(css_to_ball_path(p, n_steps));
    let params: Vec<f64> = (0..polygons.len()).map(|k| k as f64).collect();
    let points = evaluate_path(&polygons, "css", &params, config)?;
    let violations = (1..points.len())
        .filter(|&i| {
            let (a, b) = (&points[i - 1], &points[i]);
            b.x > a.x + a.x_err() + b.x_err() || b.y > a.y + a.y_err() + b.y_err()
        })
        .collect();
    Ok(PlanarPath { violations, ..PlanarPath::new(PathKind::Css, points) })
}

/// Evaluates the unit-area normalization of `t P1 + (1-t) P0` at
/// `t = k/n`, `k = 0..=n`. Along the path the inradius never exceeds
/// `max(rho(P0), rho(P1))`, so `x >= pi^2 / (4 max(rho)^2)`; points under
/// that floor beyond their error estimate are recorded as violations.
pub fn minkowski_diagram_path(
    p0: &ConvexPolygon,
    p1: &ConvexPolygon,
    n: usize,
    config: &FemConfig,
) -> Result<PlanarPath> {
    let n = n.max(1);
    let params: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let polygons: Vec<ConvexPolygon> = params.iter().map(|&t| minkowski_path(p0, p1, t, None)).collect();
    let rho = polygons[0].inradius().max(polygons[n].inradius());
    let floor = PI * PI / (4.0 * rho * rho);
    let points = evaluate_path(&polygons, "minkowski", &params, config)?;
    let violations = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.x + p.x_err() < floor)
        .map(|(i, _)| i)
        .collect();
    Ok(PlanarPath { violations, floor: Some(floor), ..PlanarPath::new(PathKind::Minkowski, points) })
}

/// Closed path through the vertex: the symmetrization path of `P1` run
/// backwards from near the disk, the Minkowski path from `P1` to `P2`, and
/// the symmetrization path of `P2`. Each leg has `n + 1` points.
pub fn build_loop(p1: &ConvexPolygon, p2: &ConvexPolygon, n: usize, config: &FemConfig) -> Result<PlanarPath> {
    let out = css_path(p1, n, config)?.reversed();
    let middle = minkowski_diagram_path(p1, p2, n, config)?;
    let back = css_path(p2, n, config)?;
    let mut points = out.points;
    points.extend(middle.points);
    points.extend(back.points);
    Ok(PlanarPath::new(PathKind::Loop, points))
}

// Winding numbers.

fn segment_distance(q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((q.0 - a.0 - t * dx).powi(2) + (q.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Winding number of the closed polyline through `points` around `q`.
pub fn winding_number_of(points: &[(f64, f64)], q: (f64, f64)) -> Result<i64> {
    let n = points.len();
    if n < 2 {
        return Ok(0);
    }
    let mut total = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        let distance = segment_distance(q, a, b);
        if distance <= ON_PATH_DISTANCE {
            return Err(DiagramError::PointOnPath { distance });
        }
        let (u, v) = ((a.0 - q.0, a.1 - q.1), (b.0 - q.0, b.1 - q.1));
        total += (u.0 * v.1 - u.1 * v.0).atan2(u.0 * v.0 + u.1 * v.1);
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() >= WINDING_RESIDUAL {
        return Err(DiagramError::WindingResidual { turns });
    }
    Ok(rounded as i64)
}

/// Winding number of a path, closed by joining its last point to its first.
pub fn winding_number(path: &PlanarPath, q: (f64, f64)) -> Result<i64> {
    winding_number_of(&path.coords(), q)
}

/// A rectangular lattice of query points: the centers of an `nx x ny` grid
/// of cells covering `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Bounding box of the path with `n x n` cells.
    pub fn around(path: &PlanarPath, n: usize) -> Self {
        let c = path.coords();
        let fold = |f: fn(&(f64, f64)) -> f64, init: f64, pick: fn(f64, f64) -> f64| c.iter().map(f).fold(init, pick);
        Self {
            x_min: fold(|p| p.0, f64::INFINITY, f64::min),
            x_max: fold(|p| p.0, f64::NEG_INFINITY, f64::max),
            y_min: fold(|p| p.1, f64::INFINITY, f64::min),
            y_max: fold(|p| p.1, f64::NEG_INFINITY, f64::max),
            nx: n,
            ny: n,
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let dx = (self.x_max - self.x_min) / self.nx as f64;
        let dy = (self.y_max - self.y_min) / self.ny as f64;
        (0..self.ny)
            .flat_map(|j| {
                (0..self.nx).map(move |i| (self.x_min + (i as f64 + 0.5) * dx, self.y_min + (j as f64 + 0.5) * dy))
            })
            .collect()
    }
}

/// A grid point enclosed by a loop of attainable points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedPoint {
    pub x: f64,
    pub y: f64,
    pub winding: i64,
}

/// Grid points with nonzero winding number. Every point of the loop is
/// attained by a convex shape and the loop contracts to the vertex through
/// attainable points, so these points belong to the diagram. Points on the
/// loop or with an unreliable winding sum are skipped.
pub fn certify_interior(path: &PlanarPath, grid: &Grid) -> Vec<CertifiedPoint> {
    let coords = path.coords();
    grid.points()
        .par_iter()
        .filter_map(|&q| match winding_number_of(&coords, q) {
            Ok(w) if w != 0 => Some(CertifiedPoint { x: q.0, y: q.1, winding: w }),
            _ => None,
        })
        .collect()
}

// Figure output.

/// Axis ranges and pixel size of the rendered diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub width: f64,
    pub height: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { x_range: (15.0, 60.0), y_range: (20.0, 120.0), width: 720.0, height: 560.0 }
    }
}

const MARGIN: f64 = 50.0;

struct Frame {
    o: SvgOptions,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.o.x_range;
        MARGIN + (x - a) / (b - a) * (self.o.width - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.o.y_range;
        self.o.height - MARGIN - (y - a) / (b - a) * (self.o.height - 2.0 * MARGIN)
    }

    fn polyline(&self, pts: &[(f64, f64)], style: &str) -> String {
        let mut s = String::from("<polyline fill=\"none\" ");
        s.push_str(style);
        s.push_str(" points=\"");
        for (i, &(x, y)) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.px(x), self.py(y));
        }
        s.push_str("\"/>\n");
        s
    }
}

fn family_style(family: &str) -> (&'static str, &'static str) {
    // (color, dash pattern of the connecting line)
    match family {
        "ellipse" => ("#1f77b4", "2,3"),
        "rectangle" => ("#d62728", "8,4"),
        "isosceles" => ("#2ca02c", "8,3,2,3"),
        "regular" => ("#9467bd", ""),
        _ => ("#444444", ""),
    }
}

/// Marker glyph centered at pixel `(cx, cy)`.
fn marker(family: &str, cx: f64, cy: f64) -> String {
    let (color, _) = family_style(family);
    match family {
        "ellipse" => format!("<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2\" fill=\"{color}\"/>\n"),
        "rectangle" => {
            format!("<rect x=\"{:.2}\" y=\"{:.2}\" width=\"4\" height=\"4\" fill=\"{color}\"/>\n", cx - 2.0, cy - 2.0)
        }
        "isosceles" => format!(
            "<polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{color}\"/>\n",
            cx,
            cy - 3.0,
            cx - 3.0,
            cy + 2.0,
            cx + 3.0,
            cy + 2.0
        ),
        "regular" => format!(
            "<text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"{color}\">*</text>\n",
            cy + 4.0
        ),
        _ => format!(
            "<path d=\"M{:.2},{:.2} l4,4 m0,-4 l-4,4\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
            cx - 2.0,
            cy - 2.0
        ),
    }
}

/// SVG of the region boundary, the points with per-family markers (curve
/// families joined in parameter order) and optional paths as polylines.
pub fn render_svg(points: &[DiagramPoint], paths: &[PlanarPath], opts: &SvgOptions) -> String {
    let f = Frame { o: *opts };
    let (x0, x1) = opts.x_range;
    let (y0, y1) = opts.y_range;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<defs><clipPath id=\"plot\"><rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\"/></clipPath></defs>", opts.width - 2.0 * MARGIN, opts.height - 2.0 * MARGIN);

    // Axes with ticks.
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        opts.width - 2.0 * MARGIN,
        opts.height - 2.0 * MARGIN
    );
    for t in ticks(x0, x1) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{t}</text>",
            f.px(t),
            opts.height - MARGIN + 16.0
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{t}</text>",
            MARGIN - 6.0,
            f.py(t) + 4.0
        );
    }
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\">x = lambda1 |Omega|</text>", opts.width / 2.0 - 40.0, opts.height - 12.0);
    let _ = writeln!(s, "<text x=\"12\" y=\"{:.2}\" font-size=\"13\" transform=\"rotate(-90 12 {:.2})\">y = |Omega|^2 / T</text>", opts.height / 2.0 + 40.0, opts.height / 2.0 + 40.0);

    // Region boundary.
    let (xv, yv) = (lambda1_ball(), 1.0 / torsion_ball());
    let _ = writeln!(s, "<g clip-path=\"url(#plot)\" stroke=\"black\" stroke-width=\"1.2\">");
    s.push_str(&f.polyline(&[(x0, x0), (x1, x1)], "id=\"polya\""));
    let kj: Vec<(f64, f64)> = (0..=200).map(|k| xv + (x1 - xv) * k as f64 / 200.0).map(|x| (x, c_ball() * x * x)).collect();
    s.push_str(&f.polyline(&kj, "id=\"kohler-jobin\""));
    s.push_str(&f.polyline(&[(xv, y0), (xv, y1)], "id=\"faber-krahn\" stroke-dasharray=\"1,3\""));
    s.push_str(&f.polyline(&[(x0, yv), (x1, yv)], "id=\"saint-venant\" stroke-dasharray=\"1,3\""));
    s.push_str("</g>\n");

    // Families.
    let _ = writeln!(s, "<g clip-path=\"url(#plot)\">");
    let mut families: Vec<&str> = Vec::new();
    for p in points {
        if !families.contains(&p.family.as_str()) {
            families.push(&p.family);
        }
    }
    for fam in &families {
        let (color, dash) = family_style(fam);
        if !dash.is_empty() {
            let mut members: Vec<&DiagramPoint> = points.iter().filter(|p| p.family == *fam).collect();
            members.sort_by(|a, b| a.param1.total_cmp(&b.param1));
            let pts: Vec<(f64, f64)> = members.iter().map(|p| (p.x, p.y)).collect();
            s.push_str(&f.polyline(&pts, &format!("stroke=\"{color}\" stroke-dasharray=\"{dash}\"")));
        }
        for p in points.iter().filter(|p| p.family == *fam) {
            s.push_str(&marker(fam, f.px(p.x), f.py(p.y)));
        }
    }
    for path in paths {
        let mut pts = path.coords();
        if path.kind == PathKind::Loop {
            if let Some(&first) = pts.first() {
                pts.push(first);
            }
        }
        s.push_str(&f.polyline(&pts, &format!("class=\"path-{}\" stroke=\"#ff7f0e\" stroke-width=\"1.5\"", path.kind.name())));
    }
    s.push_str("</g>\n");

    // Legend.
    for (i, fam) in families.iter().enumerate() {
        let (lx, ly) = (opts.width - MARGIN - 110.0, MARGIN + 18.0 + 16.0 * i as f64);
        s.push_str(&marker(fam, lx, ly));
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{fam}</text>", lx + 8.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::j01;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(levels: usize) -> FemConfig {
        FemConfig::with_levels(levels)
    }

    #[test]
    fn kohler_jobin_through_vertex() {
        let (xv, yv) = (lambda1_ball(), 1.0 / torsion_ball());
        assert_relative_eq!(kohler_jobin_curve(xv).unwrap(), yv, max_relative = 1e-12);
        assert_relative_eq!(kohler_jobin_curve(2.0 * xv).unwrap(), 4.0 * yv, max_relative = 1e-12);
        assert!(matches!(kohler_jobin_curve(17.0), Err(DiagramError::OutOfRange { .. })));
        let j = j01();
        assert_relative_eq!(c_ball(), 1.0 / (torsion_ball() * (PI * j * j).powi(2)), max_relative = 1e-12);
    }

    #[test]
    fn region_examples() {
        let (xv, yv) = (lambda1_ball(), 1.0 / torsion_ball());
        assert!(region_r_contains(xv, yv));
        let c = region_clauses(18.17, 30.0);
        let c_expected = 8.0 / (PI * j01().powi(4));
        assert_eq!(c.kohler_jobin, 30.0 <= c_expected * 18.17 * 18.17);
        assert!(c.saint_venant && c.faber_krahn && c.polya);
        assert_eq!(region_r_contains(18.17, 30.0), c.all());
        assert!(!region_r_contains(17.0, 26.0));
        assert!(!region_clauses(17.0, 26.0).faber_krahn);
        assert!(!region_r_contains(30.0, 29.0));
        assert!(!region_r_contains(f64::NAN, 30.0));
    }

    #[test]
    fn volume_bound_examples() {
        let (xv, yv) = (lambda1_ball(), 1.0 / torsion_ball());
        assert_relative_eq!(volume_lower_bound(xv, yv).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(volume_lower_bound(2.0 * xv, yv).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(volume_lower_bound(2.0 * xv, 4.0 * yv).unwrap(), 0.5, max_relative = 1e-12);
        assert!(volume_lower_bound(17.0, 30.0).is_err());
        assert!(volume_lower_bound(20.0, 25.0).is_err());
    }

    fn disk_metrics() -> ShapeMetrics {
        let (x, y) = (lambda1_ball(), 1.0 / torsion_ball());
        ShapeMetrics {
            area: 1.0,
            lambda1: x,
            torsion: 1.0 / y,
            x,
            y,
            lambda1_err: 0.0,
            torsion_err: 0.0,
            raw_lambda1: x,
            raw_torsion: 1.0 / y,
            lambda1_order: 2.0,
            torsion_order: 2.0,
        }
    }

    #[test]
    fn homothety_of_disk_is_kohler_jobin() {
        let m = disk_metrics();
        let path = homothety_curve(&m, (m.x, 60.0), 50).unwrap();
        assert_eq!(path.len(), 50);
        assert_relative_eq!(path.points[0].y, m.y, max_relative = 1e-12);
        for p in &path.points {
            assert_relative_eq!(p.y, kohler_jobin_curve(p.x).unwrap(), max_relative = 1e-12);
            assert!(p.area <= 1.0 + 1e-12);
        }
        assert!(homothety_curve(&m, (m.x - 1.0, 60.0), 5).is_err());
    }

    #[test]
    fn homothety_curves_are_ordered() {
        let lo = ShapeMetrics { x: 30.0, y: 40.0, ..disk_metrics() };
        let hi = ShapeMetrics { y: 45.0, ..lo };
        let a = homothety_curve(&lo, (30.0, 80.0), 20).unwrap();
        let b = homothety_curve(&hi, (30.0, 80.0), 20).unwrap();
        assert_relative_eq!(a.points[0].y, 40.0);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(p.y < q.y);
        }
    }

    #[test]
    fn homothety_of_square_below_kohler_jobin() {
        let m = evaluate_shape_with(&ConvexPolygon::rectangle(1.0, 1.0).unwrap(), &cfg(2)).unwrap();
        for p in homothety_curve(&m, (m.x, 100.0), 30).unwrap().points {
            assert!(p.y <= kohler_jobin_curve(p.x).unwrap());
        }
    }

    #[test]
    fn family_grids() {
        let rects = family_polygons(&FamilySpec::new(Family::Rectangle, 29, 0)).unwrap();
        assert_eq!(rects.len(), 29);
        assert_relative_eq!(rects[1].param1, 1.25, max_relative = 1e-12);
        assert_relative_eq!(rects[28].param1, 8.0, max_relative = 1e-12);
        let tri = family_polygons(&FamilySpec::new(Family::Isosceles, 17, 0)).unwrap();
        assert_relative_eq!(tri[0].param1, 10.0);
        assert_relative_eq!(tri[16].param1, 170.0);
        let reg = family_polygons(&FamilySpec::new(Family::Regular, 14, 0)).unwrap();
        assert_eq!(reg.last().unwrap().polygon.len(), 16);
        assert!(family_polygons(&FamilySpec::new(Family::Regular, 15, 0)).is_err());
        assert!(family_polygons(&FamilySpec::new(Family::Ellipse, 0, 0)).is_err());
        for s in rects.iter().chain(&tri).chain(&reg) {
            assert_relative_eq!(s.polygon.area(), 1.0, max_relative = 1e-12);
        }
        let ell = family_polygons(&FamilySpec::new(Family::Ellipse, 3, 0)).unwrap();
        assert_eq!(ell[0].polygon.len(), ELLIPSE_SAMPLES);
    }

    #[test]
    fn random_family_is_seeded() {
        let spec = FamilySpec::new(Family::Random { k: Some(5) }, 12, 42);
        let a = family_polygons(&spec).unwrap();
        let b = family_polygons(&spec).unwrap();
        assert_eq!(a, b);
        let c = family_polygons(&FamilySpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
        for s in &a {
            assert!(s.polygon.inradius() >= MIN_RANDOM_INRADIUS);
            assert!(s.polygon.len() <= 5);
        }
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("regular".parse::<Family>().unwrap(), Family::Regular);
        assert_eq!("random:5".parse::<Family>().unwrap(), Family::Random { k: Some(5) });
        assert_eq!("random".parse::<Family>().unwrap(), Family::Random { k: None });
        assert!("random:2".parse::<Family>().is_err());
        assert!("circle".parse::<Family>().is_err());
    }

    #[test]
    fn regular_polygons_march_to_vertex() {
        let pts = sample_family(&FamilySpec::new(Family::Regular, 10, 0), &cfg(2)).unwrap();
        assert_eq!(pts.len(), 10);
        for w in pts.windows(2) {
            assert!(w[1].x < w[0].x, "n = {}: {} !< {}", w[1].param1, w[1].x, w[0].x);
            assert!(w[1].y < w[0].y);
        }
        let last = pts.last().unwrap();
        assert!(last.x / lambda1_ball() - 1.0 < 0.02);
        assert!(pts.iter().all(|p| region_r_contains(p.x, p.y)));
    }

    #[test]
    fn rectangles_match_separable_formula() {
        let pts = sample_family(&FamilySpec::new(Family::Rectangle, 5, 0), &cfg(3)).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].x > w[0].x);
        }
        for p in &pts {
            let a = p.param1;
            let exact = PI * PI * (a + 1.0 / a);
            assert!((p.x / exact - 1.0).abs() < 5e-3, "aspect {a}: {} vs {exact}", p.x);
        }
    }

    #[test]
    fn random_pentagons_inside_region() {
        let spec = FamilySpec::new(Family::Random { k: Some(5) }, 8, 42);
        let pts = sample_family(&spec, &cfg(2)).unwrap();
        for p in &pts {
            assert!(region_r_contains(p.x, p.y), "({}, {})", p.x, p.y);
            assert!(p.raw_x >= lambda1_ball());
            assert!(p.raw_y >= 1.0 / torsion_ball());
            assert!(volume_lower_bound(p.x, p.y).unwrap() <= 1.0);
        }
    }

    #[test]
    fn csv_round_trip() {
        let spec = FamilySpec::new(Family::Regular, 2, 7);
        let pts = sample_family(&spec, &cfg(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
        let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        for (row, p) in rows.iter().zip(&pts) {
            assert_eq!(&row[0], "regular");
            assert_relative_eq!(row[7].parse::<f64>().unwrap(), p.x, max_relative = 1e-11);
            assert_relative_eq!(row[8].parse::<f64>().unwrap(), p.y, max_relative = 1e-11);
            assert_eq!(row[3].parse::<u64>().unwrap(), 7);
        }
    }

    fn point(x: f64, y: f64) -> DiagramPoint {
        DiagramPoint::from_metrics(&ShapeMetrics { x, y, ..disk_metrics() }, "test", 0.0, 0.0, 0, 0)
    }

    #[test]
    fn envelope_of_single_point() {
        let env = estimate_envelopes(&[point(20.0, 30.0)], 10).unwrap();
        assert_eq!(env.centers, vec![20.0]);
        assert_eq!(env.lower, vec![30.0]);
        assert_eq!(env.upper, vec![30.0]);
        assert_eq!(env.lower_at(25.0), 30.0);
        assert!(matches!(estimate_envelopes(&[], 3), Err(DiagramError::EmptyInput)));
    }

    #[test]
    fn envelopes_skip_empty_bins() {
        let pts = [point(20.0, 30.0), point(20.5, 31.0), point(29.9, 40.0), point(30.0, 42.0)];
        let env = estimate_envelopes(&pts, 10).unwrap();
        assert_eq!(env.centers.len(), 2);
        assert_eq!(env.counts, vec![2, 2]);
        assert_eq!((env.lower[0], env.upper[0]), (30.0, 31.0));
        assert_eq!((env.lower[1], env.upper[1]), (40.0, 42.0));
        assert_relative_eq!(env.lower_at(env.centers[0]), 30.0);
        assert!(env.lower_decreases(0.0).is_empty());
        assert_eq!(env.gaps(), vec![1.0, 2.0]);
    }

    #[test]
    fn envelopes_of_sampled_families_respect_bounds() {
        let mut pts = sample_family(&FamilySpec::new(Family::Regular, 8, 0), &cfg(2)).unwrap();
        pts.extend(sample_family(&FamilySpec::new(Family::Rectangle, 6, 0), &cfg(2)).unwrap());
        pts.extend(sample_family(&FamilySpec::new(Family::Random { k: None }, 8, 3), &cfg(2)).unwrap());
        let env = estimate_envelopes(&pts, 8).unwrap();
        for i in 0..env.centers.len() {
            assert!(env.lower[i] >= 1.0 / torsion_ball());
            assert!(env.lower[i] <= env.upper[i]);
        }
        for p in &pts {
            assert!(p.y <= c_ball() * p.x * p.x);
            assert!(p.y >= p.x);
        }
    }

    fn disk_polygon() -> ConvexPolygon {
        ConvexPolygon::regular(256, 1.0).unwrap().normalize_to_unit_area()
    }

    #[test]
    fn css_of_disk_stays_at_vertex() {
        let path = css_path(&disk_polygon(), 8, &cfg(2)).unwrap();
        assert_eq!(path.len(), 9);
        assert!(path.violations.is_empty());
        let (xv, yv) = (lambda1_ball(), 1.0 / torsion_ball());
        for p in &path.points {
            assert!((p.x / xv - 1.0).abs() < 2e-3);
            assert!((p.y / yv - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn css_of_rectangle_descends_to_vertex() {
        let r = ConvexPolygon::rectangle(3.0, 1.0 / 3.0).unwrap();
        let path = css_path(&r, 48, &cfg(2)).unwrap();
        assert!(path.violations.is_empty(), "{:?}", path.violations);
        let last = path.points.last().unwrap();
        assert!(last.x / lambda1_ball() - 1.0 < 0.02);
        assert!(last.y * torsion_ball() - 1.0 < 0.02);
        assert!(path.points[0].x > 80.0);
    }

    #[test]
    fn minkowski_path_endpoints_and_floor() {
        let sq = ConvexPolygon::rectangle(1.0, 1.0).unwrap();
        let rect = ConvexPolygon::rectangle(2.0, 0.5).unwrap();
        let c = cfg(2);
        let path = minkowski_diagram_path(&sq, &rect, 8, &c).unwrap();
        assert_eq!(path.len(), 9);
        let a = evaluate_shape_with(&sq, &c).unwrap();
        let b = evaluate_shape_with(&rect, &c).unwrap();
        let (first, last) = (&path.points[0], &path.points[8]);
        assert!((first.x - a.x).abs() <= 1e-9 * a.x && (first.y - a.y).abs() <= 1e-9 * a.y);
        assert!((last.x - b.x).abs() <= 1e-9 * b.x && (last.y - b.y).abs() <= 1e-9 * b.y);
        assert_relative_eq!(path.floor.unwrap(), PI * PI, max_relative = 1e-9);
        assert!(path.violations.is_empty());
        assert!(path.points.iter().all(|p| p.x >= PI * PI));
    }

    #[test]
    fn minkowski_path_between_equal_shapes_is_constant() {
        let sq = ConvexPolygon::rectangle(1.0, 1.0).unwrap();
        let path = minkowski_diagram_path(&sq, &sq, 4, &cfg(1)).unwrap();
        for p in &path.points {
            assert!((p.x / path.points[0].x - 1.0).abs() < 1e-6);
            assert!((p.y / path.points[0].y - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn square_rectangle_loop_certifies_interior() {
        let sq = ConvexPolygon::rectangle(1.0, 1.0).unwrap();
        let rect = ConvexPolygon::rectangle(2.0, 0.5).unwrap();
        let n = 16;
        let lp = build_loop(&sq, &rect, n, &cfg(1)).unwrap();
        assert_eq!(lp.kind, PathKind::Loop);
        assert!(lp.len() >= 2 * n + 2);
        for p in &lp.points {
            assert!(region_r_contains(p.x, p.y), "({}, {})", p.x, p.y);
        }
        let grid = Grid::around(&lp, 40);
        let certified = certify_interior(&lp, &grid);
        assert!(!certified.is_empty());
        for c in &certified {
            assert!(region_r_contains(c.x, c.y));
        }
        let back = certify_interior(&lp.reversed(), &grid);
        assert_eq!(back.len(), certified.len());
        for (a, b) in certified.iter().zip(&back) {
            assert_eq!((a.x, a.y), (b.x, b.y));
            assert_eq!(a.winding, -b.winding);
        }
    }

    #[test]
    fn degenerate_loop_certifies_little() {
        let sq = ConvexPolygon::rectangle(1.0, 1.0).unwrap();
        let lp = build_loop(&sq, &sq, 6, &cfg(1)).unwrap();
        let grid = Grid::around(&lp, 30);
        assert!(certify_interior(&lp, &grid).len() <= 30);
    }

    fn circle(n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect()
    }

    fn figure_eight() -> Vec<(f64, f64)> {
        (0..200)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 200.0;
                (t.sin(), t.sin() * t.cos())
            })
            .collect()
    }

    /// Signed crossings of the ray `{(x, q.y) : x > q.x}`.
    fn crossing_winding(pts: &[(f64, f64)], q: (f64, f64)) -> i64 {
        let n = pts.len();
        let mut w = 0;
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let side = (b.0 - a.0) * (q.1 - a.1) - (q.0 - a.0) * (b.1 - a.1);
            if a.1 <= q.1 && b.1 > q.1 && side > 0.0 {
                w += 1;
            } else if a.1 > q.1 && b.1 <= q.1 && side < 0.0 {
                w -= 1;
            }
        }
        w
    }

    #[test]
    fn winding_examples() {
        let c = circle(64);
        assert_eq!(winding_number_of(&c, (0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_number_of(&c, (5.0, 3.0)).unwrap(), 0);
        let rev: Vec<_> = c.iter().rev().copied().collect();
        assert_eq!(winding_number_of(&rev, (0.1, 0.2)).unwrap(), -1);
        assert!(matches!(winding_number_of(&c, c[3]), Err(DiagramError::PointOnPath { .. })));
        let eight = figure_eight();
        for q in [(0.5, 0.05), (-0.5, 0.05), (0.5, -0.05), (-0.5, -0.05)] {
            let w = winding_number_of(&eight, q).unwrap();
            assert_eq!(w.abs(), 1);
            assert_eq!(w, crossing_winding(&eight, q));
        }
        let a = winding_number_of(&eight, (0.5, 0.05)).unwrap();
        let b = winding_number_of(&eight, (-0.5, 0.05)).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn svg_has_region_curves_and_markers() {
        let pts = [point(20.0, 30.0), DiagramPoint { family: "regular".into(), ..point(19.0, 27.0) }];
        let svg = render_svg(&pts, &[], &SvgOptions::default());
        assert!(svg.starts_with("<svg"));
        for id in ["polya", "kohler-jobin", "faber-krahn", "saint-venant"] {
            assert!(svg.contains(&format!("id=\"{id}\"")));
        }
        assert!(svg.contains(">*</text>"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    proptest! {
        #[test]
        fn winding_matches_crossing_oracle(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..12),
            qx in -1.0f64..1.0,
            qy in -1.0f64..1.0,
        ) {
            let q = (qx, qy);
            let near = (0..pts.len()).any(|i| segment_distance(q, pts[i], pts[(i + 1) % pts.len()]) < 1e-6);
            prop_assume!(!near);
            prop_assume!(pts.iter().all(|p| (p.1 - qy).abs() > 1e-9));
            prop_assert_eq!(winding_number_of(&pts, q).unwrap(), crossing_winding(&pts, q));
        }

        #[test]
        fn volume_bound_at_most_one_inside_region(x in 18.2f64..60.0, t in 0.0f64..1.0) {
            let lo = x.max(1.0 / torsion_ball());
            let y = lo + t * (c_ball() * x * x - lo);
            let v = volume_lower_bound(x, y).unwrap();
            prop_assert!(v <= 1.0 + 1e-12 && v > 0.0);
        }
    }
}
