//! Convex polygon kernel: construction and validation, measurements,
//! Minkowski sums, continuous Steiner symmetrization and support functions.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Relative threshold under which consecutive vertices are merged.
const DUPLICATE_TOL: f64 = 1e-12;
/// Collinear cleanup threshold, relative to the squared bounding-box scale.
const COLLINEAR_TOL: f64 = 1e-12;

/// Default number of chord samples used by [`css_step`].
pub const CSS_SAMPLES: usize = 512;
/// Directions cycled by [`css_to_ball_path`].
pub const CSS_DIRECTIONS: usize = 8;
/// Steps taken along each direction by [`css_to_ball_path`].
pub const CSS_STEPS_PER_DIRECTION: usize = 4;
/// Each cycle of directions is rotated by this fraction of `pi / 8`; a fixed
/// set of directions only converges to a body with the matching dihedral
/// symmetry.
const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_8;
/// Vertex budget for the polygons produced by [`css_to_ball_path`].
pub const CSS_MAX_VERTICES: usize = 256;

/// Planar constant in `K rho diam <= |P|`.
pub const INRADIUS_DIAMETER_CONSTANT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("projection onto the symmetrization axis has zero width")]
    DegenerateShadow,
    #[error("support function is not convex: min(h + h'') = {min_curvature}")]
    NotConvexSupport { min_curvature: f64 },
    #[error("polygon parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counterclockwise convex polygon with strictly convex corners.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Validates a counterclockwise vertex list. Coincident consecutive
    /// vertices and collinear runs are merged before the convexity check.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::InvalidPolygon("non-finite coordinate".into()));
        }
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let scale = bbox_scale(&vertices);
        if scale <= 0.0 {
            return Err(GeometryError::InvalidPolygon("all vertices coincide".into()));
        }
        let verts = dedup_cyclic(vertices, DUPLICATE_TOL * scale);
        let verts = drop_collinear(verts, COLLINEAR_TOL * scale * scale)?;
        // Strictly positive turns can still wind more than once.
        let n = verts.len();
        let turning: f64 = (0..n)
            .map(|i| {
                let a = verts[(i + 1) % n] - verts[i];
                let b = verts[(i + 2) % n] - verts[(i + 1) % n];
                cross(a, b).atan2(a.dot(&b))
            })
            .sum();
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(GeometryError::InvalidPolygon(format!(
                "boundary winds {:.3} turns",
                turning / (2.0 * PI)
            )));
        }
        let poly = Self { vertices: verts };
        if poly.signed_area() <= 0.0 {
            return Err(GeometryError::InvalidPolygon("non-positive area".into()));
        }
        Ok(poly)
    }

    /// Convex hull of an arbitrary point cloud.
    pub fn from_hull(points: &[Vec2]) -> Result<Self> {
        Self::new(convex_hull(points))
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> f64 {
        let o = self.vertices[0];
        0.5 * self.edges().map(|(a, b)| cross(a - o, b - o)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area()
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::zeros();
        let mut a2 = 0.0;
        let origin = self.vertices[0];
        for (a, b) in self.edges() {
            let (a, b) = (a - origin, b - origin);
            let w = cross(a, b);
            a2 += w;
            c += (a + b) * w;
        }
        origin + c / (3.0 * a2)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Side of the bounding box, the length scale used by tolerances.
    pub fn scale(&self) -> f64 {
        bbox_scale(&self.vertices)
    }

    pub fn translate(&self, by: Vec2) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v + by).collect() }
    }

    /// Uniform scaling about the origin. `factor` must be positive.
    pub fn scale_by(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self { vertices: self.vertices.iter().map(|v| v * factor).collect() }
    }

    /// Rotation about the origin.
    pub fn rotate(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            vertices: self.vertices.iter().map(|v| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)).collect(),
        }
    }

    /// Translate so that the centroid is at the origin. Idempotent: a
    /// polygon already centered to rounding is returned unchanged.
    pub fn centered(&self) -> Self {
        let c = self.centroid();
        if c.norm() <= 1e-13 * self.scale() {
            return self.clone();
        }
        self.translate(-c)
    }

    /// Similar copy with area one, scaled about the centroid. Idempotent: a
    /// polygon whose area is one to rounding is returned unchanged.
    pub fn normalize_to_unit_area(&self) -> Self {
        let k = 1.0 / self.area().sqrt();
        if (k - 1.0).abs() <= 8.0 * f64::EPSILON {
            return self.clone();
        }
        let c = self.centroid();
        Self { vertices: self.vertices.iter().map(|v| c + (v - c) * k).collect() }
    }

    /// Largest inscribed disk as `(center, radius)`.
    ///
    /// Solves `max r` subject to `n_i . c + r <= d_i` over all edge half-planes
    /// by bisection on `r`, with feasibility decided by clipping the polygon
    /// against the inward-shifted half-planes.
    pub fn inscribed_disk(&self) -> (Vec2, f64) {
        let planes: Vec<(Vec2, f64)> = self
            .edges()
            .map(|(a, b)| {
                let e = b - a;
                let n = Vec2::new(e.y, -e.x) / e.norm();
                (n, n.dot(&a))
            })
            .collect();
        let feasible = |r: f64| -> Option<Vec<Vec2>> {
            let mut region = self.vertices.clone();
            for &(n, d) in &planes {
                region = clip_halfplane(&region, n, d - r);
                if region.is_empty() {
                    return None;
                }
            }
            Some(region)
        };
        let mut lo = 0.0;
        let mut hi = (self.area() / PI).sqrt() * (1.0 + 1e-9);
        let mut best = self.vertices.clone();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            match feasible(mid) {
                Some(region) => {
                    lo = mid;
                    best = region;
                }
                None => hi = mid,
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let center = best.iter().sum::<Vec2>() / best.len() as f64;
        (center, lo)
    }

    pub fn inradius(&self) -> f64 {
        self.inscribed_disk().1
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max((v[i] - v[j]).norm_squared());
            }
        }
        best.sqrt()
    }

    /// Hausdorff distance to the disk of equal area centered at the centroid.
    pub fn hausdorff_to_disk(&self) -> f64 {
        let c = self.centroid();
        let r = (self.area() / PI).sqrt();
        let far = self.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
        let near = self
            .edges()
            .map(|(a, b)| {
                let e = b - a;
                cross(e, c - a) / e.norm()
            })
            .fold(f64::INFINITY, f64::min);
        (far - r).max(r - near).max(0.0)
    }

    /// `true` if `p` lies inside or on the boundary, up to `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.edges().all(|(a, b)| {
            let e = b - a;
            cross(e, p - a) / e.norm() >= -tol
        })
    }

    /// Distance from `p` to the nearest edge segment.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Removes the corners cutting off the least area until at most
    /// `max_vertices` remain, then rescales about the centroid so the area is
    /// unchanged.
    pub fn simplify_to(&self, max_vertices: usize) -> Self {
        let max_vertices = max_vertices.max(3);
        if self.len() <= max_vertices {
            return self.clone();
        }
        let area = self.area();
        let mut v = self.vertices.clone();
        while v.len() > max_vertices {
            let n = v.len();
            let (idx, _) = (0..n)
                .map(|i| {
                    let a = v[(i + n - 1) % n];
                    let b = v[i];
                    let c = v[(i + 1) % n];
                    (i, cross(b - a, c - b))
                })
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            v.remove(idx);
        }
        let reduced = Self { vertices: v };
        let c = reduced.centroid();
        let k = (area / reduced.area()).sqrt();
        Self { vertices: reduced.vertices.iter().map(|p| c + (p - c) * k).collect() }
    }

    /// Plain-text form: one `x y` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v.x, v.y);
        }
        s
    }

    /// Parses the plain-text form. Blank lines and lines starting with `#`
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut coord = || -> Result<f64> {
                let tok = it.next().ok_or(GeometryError::Parse {
                    line: i + 1,
                    message: "expected two numbers".into(),
                })?;
                tok.parse::<f64>().map_err(|e| GeometryError::Parse { line: i + 1, message: e.to_string() })
            };
            let x = coord()?;
            let y = coord()?;
            if it.next().is_some() {
                return Err(GeometryError::Parse { line: i + 1, message: "trailing tokens".into() });
            }
            pts.push(Vec2::new(x, y));
        }
        Self::new(pts)
    }

    // Constructors for the standard families.

    pub fn regular(n: usize, circumradius: f64) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    Vec2::new(circumradius * t.cos(), circumradius * t.sin())
                })
                .collect(),
        )
    }

    /// Axis-aligned `width x height` rectangle centered at the origin.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        let (w, h) = (0.5 * width, 0.5 * height);
        Self::new(vec![Vec2::new(-w, -h), Vec2::new(w, -h), Vec2::new(w, h), Vec2::new(-w, h)])
    }

    /// Inscribed `n`-gon of the ellipse with semi-axes `a`, `b`.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    Vec2::new(a * t.cos(), b * t.sin())
                })
                .collect(),
        )
    }

    /// Isosceles triangle with unit legs and the given apex angle (radians).
    pub fn isosceles(apex_angle: f64) -> Result<Self> {
        let half = 0.5 * apex_angle;
        Self::new(vec![
            Vec2::new(-half.sin(), 0.0),
            Vec2::new(half.sin(), 0.0),
            Vec2::new(0.0, half.cos()),
        ])
    }

    /// Convex hull of `k` uniform points in the unit square.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<Self> {
        let pts: Vec<Vec2> = (0..k.max(3)).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
        Self::from_hull(&pts)
    }
}

fn bbox_scale(v: &[Vec2]) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in v {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    (xmax - xmin).max(ymax - ymin)
}

fn dedup_cyclic(v: Vec<Vec2>, tol: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(v.len());
    for p in v {
        if out.last().is_none_or(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

/// Removes vertices where the boundary goes straight on; fails on reflex turns.
fn drop_collinear(verts: Vec<Vec2>, tol: f64) -> Result<Vec<Vec2>> {
    let turn = |a: Vec2, b: Vec2, c: Vec2| cross(b - a, c - b);
    let mut stack: Vec<Vec2> = Vec::with_capacity(verts.len());
    for &p in &verts {
        while stack.len() >= 2 && turn(stack[stack.len() - 2], stack[stack.len() - 1], p).abs() <= tol {
            stack.pop();
        }
        stack.push(p);
    }
    // Close the loop: the seam vertices may also be straight.
    loop {
        let n = stack.len();
        if n < 3 {
            return Err(GeometryError::InvalidPolygon("degenerate after cleanup".into()));
        }
        if turn(stack[n - 2], stack[n - 1], stack[0]).abs() <= tol {
            stack.pop();
        } else if turn(stack[n - 1], stack[0], stack[1]).abs() <= tol {
            stack.remove(0);
        } else {
            break;
        }
    }
    let n = stack.len();
    for i in 0..n {
        if turn(stack[i], stack[(i + 1) % n], stack[(i + 2) % n]) < -tol {
            return Err(GeometryError::InvalidPolygon(format!(
                "vertex {} is a reflex or clockwise turn",
                (i + 1) % n
            )));
        }
    }
    Ok(stack)
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

/// Keeps the part of a convex polygon with `n . x <= d`.
fn clip_halfplane(poly: &[Vec2], n: Vec2, d: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let len = poly.len();
    for i in 0..len {
        let a = poly[i];
        let b = poly[(i + 1) % len];
        let fa = n.dot(&a) - d;
        let fb = n.dot(&b) - d;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            out.push(a + (b - a) * (fa / (fa - fb)));
        }
    }
    out
}

/// Andrew's monotone chain; returns the hull counterclockwise without
/// collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(b - a, p - b) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// `P (+) Q` by merging the edge sequences in angular order.
pub fn minkowski_sum(p: &ConvexPolygon, q: &ConvexPolygon) -> ConvexPolygon {
    fn rotate_to_bottom(v: &[Vec2]) -> Vec<Vec2> {
        let start = (0..v.len())
            .min_by(|&i, &j| v[i].y.total_cmp(&v[j].y).then(v[i].x.total_cmp(&v[j].x)))
            .unwrap();
        v[start..].iter().chain(v[..start].iter()).copied().collect()
    }
    let a = rotate_to_bottom(p.vertices());
    let b = rotate_to_bottom(q.vertices());
    let (n, m) = (a.len(), b.len());
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(a[i % n] + b[j % m]);
        let ea = a[(i + 1) % n] - a[i % n];
        let eb = b[(j + 1) % m] - b[j % m];
        let c = if i >= n {
            -1.0
        } else if j >= m {
            1.0
        } else {
            cross(ea, eb)
        };
        if c >= 0.0 && i < n {
            i += 1;
        }
        if c <= 0.0 && j < m {
            j += 1;
        }
    }
    ConvexPolygon::new(out).expect("Minkowski sum of convex polygons is convex")
}

/// Unit-area normalisation of `t P1 (+) (1-t) P0`, both operands first
/// centered at their centroids. `rotation` optionally rotates `P1` about its
/// centroid before summation.
pub fn minkowski_path(
    p0: &ConvexPolygon,
    p1: &ConvexPolygon,
    t: f64,
    rotation: Option<f64>,
) -> ConvexPolygon {
    let t = t.clamp(0.0, 1.0);
    if t == 0.0 {
        return p0.normalize_to_unit_area().centered();
    }
    let a = p0.centered();
    let mut b = p1.centered();
    if let Some(angle) = rotation {
        b = b.rotate(angle);
    }
    if t == 1.0 {
        return b.normalize_to_unit_area().centered();
    }
    minkowski_sum(&b.scale_by(t), &a.scale_by(1.0 - t)).normalize_to_unit_area().centered()
}

/// One step of continuous Steiner symmetrization.
///
/// In coordinates where `direction` is vertical, every chord keeps its
/// length `l(x)` and its midpoint ordinate `m(x)` becomes `(1-s) m(x)`. The
/// chords are sampled on a uniform grid of the shadow interval together
/// with every vertex abscissa, so the new boundary is exact and area is
/// preserved up to rounding.
pub fn css_step(p: &ConvexPolygon, direction: Vec2, s: f64) -> Result<ConvexPolygon> {
    css_step_with(p, direction, s, CSS_SAMPLES)
}

pub fn css_step_with(p: &ConvexPolygon, direction: Vec2, s: f64, samples: usize) -> Result<ConvexPolygon> {
    let d = direction.normalize();
    let e = Vec2::new(d.y, -d.x);
    let uv: Vec<(f64, f64)> = p.vertices().iter().map(|v| (v.dot(&e), v.dot(&d))).collect();
    let umin = uv.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
    let umax = uv.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
    let width = umax - umin;
    if width <= 1e-9 * p.scale() {
        return Err(GeometryError::DegenerateShadow);
    }
    let s = s.clamp(0.0, 1.0);
    let mut us: Vec<f64> = (0..samples.max(2))
        .map(|k| umin + width * k as f64 / (samples.max(2) - 1) as f64)
        .chain(uv.iter().map(|q| q.0))
        .collect();
    us.sort_by(f64::total_cmp);
    us.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * width);

    let n = uv.len();
    let tol = 1e-12 * width;
    let mut pts = Vec::with_capacity(2 * us.len());
    for &u in &us {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let (ua, va) = uv[i];
            let (ub, vb) = uv[(i + 1) % n];
            if (u - ua).abs() <= tol {
                lo = lo.min(va);
                hi = hi.max(va);
            }
            let (l, r) = if ua < ub { (ua, ub) } else { (ub, ua) };
            if u > l && u < r {
                let v = va + (vb - va) * (u - ua) / (ub - ua);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            continue;
        }
        let mid = 0.5 * (lo + hi) * (1.0 - s);
        let half = 0.5 * (hi - lo);
        pts.push(e * u + d * (mid - half));
        pts.push(e * u + d * (mid + half));
    }
    ConvexPolygon::from_hull(&pts)
}

/// Discrete path from `p` toward the disk by continuous Steiner
/// symmetrization. The 8 directions `(k + phi_c) pi / 8` are cycled, with the
/// offset `phi_c` advancing by the golden fraction every cycle; along each one
/// the parameter ramps `1/4, 1/2, 3/4, 1` starting from the shape reached
/// at the end of the previous sweep. Every element is unit area and
/// centered at its centroid.
pub fn css_to_ball_path(p: &ConvexPolygon, n_steps: usize) -> Vec<ConvexPolygon> {
    css_to_ball_path_with(p, n_steps, CSS_MAX_VERTICES)
}

/// [`css_to_ball_path`] with an explicit vertex budget.
pub fn css_to_ball_path_with(p: &ConvexPolygon, n_steps: usize, max_vertices: usize) -> Vec<ConvexPolygon> {
    let mut out = Vec::with_capacity(n_steps);
    let mut base = p.normalize_to_unit_area().centered();
    let mut step = 0;
    let mut sweep = 0;
    while step < n_steps {
        let cycle = (sweep / CSS_DIRECTIONS) as f64;
        let offset = (cycle * GOLDEN_FRACTION).fract();
        let angle = PI * ((sweep % CSS_DIRECTIONS) as f64 + offset) / CSS_DIRECTIONS as f64;
        let dir = Vec2::new(angle.cos(), angle.sin());
        for k in 1..=CSS_STEPS_PER_DIRECTION {
            if step == n_steps {
                break;
            }
            let s = k as f64 / CSS_STEPS_PER_DIRECTION as f64;
            let next = match css_step(&base, dir, s) {
                Ok(q) => q.simplify_to(max_vertices).normalize_to_unit_area().centered(),
                Err(_) => base.clone(),
            };
            out.push(next);
            step += 1;
        }
        if let Some(last) = out.last() {
            base = last.clone();
        }
        sweep += 1;
    }
    out
}

/// Support function `h(theta) = R + sum_m a_m cos(m theta) + b_m sin(m theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFunction {
    pub radius_offset: f64,
    /// `a_m` for `m = 1..=M`.
    pub cos_coeffs: Vec<f64>,
    /// `b_m` for `m = 1..=M`.
    pub sin_coeffs: Vec<f64>,
}

impl SupportFunction {
    pub fn new(radius_offset: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Self {
        let m = cos_coeffs.len().max(sin_coeffs.len());
        let mut a = cos_coeffs;
        let mut b = sin_coeffs;
        a.resize(m, 0.0);
        b.resize(m, 0.0);
        Self { radius_offset, cos_coeffs: a, sin_coeffs: b }
    }

    pub fn constant(radius: f64) -> Self {
        Self::new(radius, Vec::new(), Vec::new())
    }

    pub fn order(&self) -> usize {
        self.cos_coeffs.len()
    }

    /// `(h, h', h'')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let mut h = self.radius_offset;
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        for (i, (&a, &b)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let m = (i + 1) as f64;
            let (s, c) = (m * theta).sin_cos();
            h += a * c + b * s;
            h1 += m * (b * c - a * s);
            h2 -= m * m * (a * c + b * s);
        }
        (h, h1, h2)
    }

    fn grid_len(&self, at_least: usize) -> usize {
        (8 * self.order().max(1)).max(at_least).max(64)
    }

    /// `(min h, min (h + h''))` over a uniform grid of at least `8M` samples.
    pub fn convexity_margin(&self, samples: usize) -> (f64, f64) {
        let n = self.grid_len(samples);
        (0..n).fold((f64::INFINITY, f64::INFINITY), |(mh, mc), k| {
            let (h, _, h2) = self.eval(2.0 * PI * k as f64 / n as f64);
            (mh.min(h), mc.min(h + h2))
        })
    }

    pub fn is_convex(&self) -> bool {
        let (h, c) = self.convexity_margin(0);
        h > 0.0 && c >= 0.0
    }

    /// Area `(1/2) int (h^2 - h'^2)` of the body, exact for the truncated
    /// series.
    pub fn area(&self) -> f64 {
        let r = self.radius_offset;
        let tail: f64 = self
            .cos_coeffs
            .iter()
            .zip(&self.sin_coeffs)
            .enumerate()
            .map(|(i, (a, b))| {
                let m = (i + 1) as f64;
                (1.0 - m * m) * (a * a + b * b)
            })
            .sum();
        PI * r * r + 0.5 * PI * tail
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            radius_offset: self.radius_offset * k,
            cos_coeffs: self.cos_coeffs.iter().map(|a| a * k).collect(),
            sin_coeffs: self.sin_coeffs.iter().map(|b| b * k).collect(),
        }
    }

    /// Boundary points `h n + h' tau` at `n_samples` uniform angles.
    pub fn boundary_points(&self, n_samples: usize) -> Vec<Vec2> {
        (0..n_samples)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n_samples as f64;
                let (h, h1, _) = self.eval(t);
                let (s, c) = t.sin_cos();
                Vec2::new(h * c - h1 * s, h * s + h1 * c)
            })
            .collect()
    }
}

/// Polygon through the support points at `n_samples` uniform angles.
pub fn polygon_from_support(h: &SupportFunction, n_samples: usize) -> Result<ConvexPolygon> {
    let (min_h, min_curv) = h.convexity_margin(n_samples);
    if min_curv < 0.0 || min_h <= 0.0 {
        return Err(GeometryError::NotConvexSupport { min_curvature: min_curv });
    }
    ConvexPolygon::new(h.boundary_points(n_samples))
}
