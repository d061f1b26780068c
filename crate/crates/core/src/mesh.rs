//! Triangulations of convex polygons and uniform midpoint refinement.

use std::collections::HashMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use thiserror::Error;

use crate::geometry::{cross, ConvexPolygon, Vec2};

/// Minimum angle requested from the Delaunay refinement in [`quality_mesh`].
const QUALITY_ANGLE_DEG: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh audit failed: {0}")]
    Audit(String),
    #[error("mesh generation failed: {0}")]
    Generation(String),
}

/// Triangle mesh with counterclockwise triangles and per-node boundary flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

impl TriMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross(self.nodes[b] - self.nodes[a], self.nodes[c] - self.nodes[a])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(i, j)| (self.nodes[i] - self.nodes[j]).norm())
            .fold(0.0, f64::max)
    }

    /// Undirected edges with the number of triangles that use each, in first-seen order.
    fn edge_table(&self) -> (Vec<(usize, usize)>, HashMap<(usize, usize), (usize, u8)>) {
        let mut order = Vec::new();
        let mut table: HashMap<(usize, usize), (usize, u8)> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (i, j) in [(a, b), (b, c), (c, a)] {
                let key = (i.min(j), i.max(j));
                let next = order.len();
                let entry = table.entry(key).or_insert_with(|| {
                    order.push(key);
                    (next, 0)
                });
                entry.1 += 1;
            }
        }
        (order, table)
    }

    /// Endpoints of the edge whose midpoint becomes node `nodes.len() + k`
    /// under [`refine`].
    pub fn midpoint_parents(&self) -> Vec<(usize, usize)> {
        self.edge_table().0
    }

    pub fn edge_count(&self) -> usize {
        self.edge_table().0.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Checks the mesh invariants against the polygon it discretizes.
    pub fn audit(&self, polygon: &ConvexPolygon) -> Result<(), MeshError> {
        let scale = polygon.scale();
        if self.boundary.len() != self.nodes.len() {
            return Err(MeshError::Audit("boundary flags do not match node count".into()));
        }
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::Audit(format!("triangle {t} has non-positive area")));
            }
        }
        let area = self.area();
        if (area - polygon.area()).abs() > 1e-10 * polygon.area() {
            return Err(MeshError::Audit(format!("area {area} != polygon area {}", polygon.area())));
        }
        for (i, (&p, &flag)) in self.nodes.iter().zip(&self.boundary).enumerate() {
            let on_boundary = polygon.boundary_distance(p) < 1e-9 * scale;
            if on_boundary != flag {
                return Err(MeshError::Audit(format!("node {i} boundary flag {flag} is wrong")));
            }
        }
        let mut sorted: Vec<(usize, Vec2)> = self.nodes.iter().copied().enumerate().collect();
        sorted.sort_by(|a, b| a.1.x.total_cmp(&b.1.x));
        for (k, &(i, p)) in sorted.iter().enumerate() {
            for &(j, q) in sorted[k + 1..].iter().take_while(|(_, q)| q.x - p.x <= 1e-12 * scale) {
                if (p - q).norm() <= 1e-12 * scale {
                    return Err(MeshError::Audit(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }
}

/// Fan from the centroid, then uniform refinement until every edge is at
/// most `target_h`.
pub fn triangulate(polygon: &ConvexPolygon, target_h: f64) -> TriMesh {
    assert!(target_h > 0.0, "target_h must be positive");
    let v = polygon.vertices();
    let n = v.len();
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(polygon.centroid());
    nodes.extend_from_slice(v);
    let triangles = (0..n).map(|i| [0, 1 + i, 1 + (i + 1) % n]).collect();
    let mut boundary = vec![true; n + 1];
    boundary[0] = false;
    let mut mesh = TriMesh { nodes, triangles, boundary };
    while mesh.max_edge() > target_h {
        mesh = refine(&mesh);
    }
    mesh
}

/// Splits every triangle into four through its edge midpoints. Midpoints
/// of edges used by a single triangle are boundary nodes.
pub fn refine(mesh: &TriMesh) -> TriMesh {
    let (order, table) = mesh.edge_table();
    let base = mesh.nodes.len();
    let mut nodes = mesh.nodes.clone();
    let mut boundary = mesh.boundary.clone();
    nodes.reserve(order.len());
    boundary.reserve(order.len());
    for &(i, j) in &order {
        nodes.push((mesh.nodes[i] + mesh.nodes[j]) * 0.5);
        boundary.push(table[&(i, j)].1 == 1);
    }
    let mid = |i: usize, j: usize| base + table[&(i.min(j), i.max(j))].0;
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    TriMesh { nodes, triangles, boundary }
}

/// Constrained Delaunay mesh of the polygon refined to a minimum angle of
/// 25 degrees and triangle areas near those of equilateral triangles of side
/// `target_h`.
pub fn quality_mesh(polygon: &ConvexPolygon, target_h: f64) -> Result<TriMesh, MeshError> {
    assert!(target_h > 0.0, "target_h must be positive");
    // Boundary edges are pre-split to length `target_h`; the refiner then
    // only has to fill the interior.
    let v = polygon.vertices();
    let mut points: Vec<Point2<f64>> = Vec::new();
    for (i, &a) in v.iter().enumerate() {
        let b = v[(i + 1) % v.len()];
        let pieces = ((b - a).norm() / target_h).ceil().max(1.0) as usize;
        for k in 0..pieces {
            let p = a + (b - a) * (k as f64 / pieces as f64);
            points.push(Point2::new(p.x, p.y));
        }
    }
    let n = points.len();
    let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(points, edges)
        .map_err(|e| MeshError::Generation(format!("{e:?}")))?;
    let max_area = 0.25 * 3f64.sqrt() * target_h * target_h;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .with_angle_limit(AngleLimit::from_deg(QUALITY_ANGLE_DEG))
        .with_max_allowed_area(max_area)
        .with_min_required_area(1e-4 * max_area)
        .with_max_additional_vertices(2_000_000);
    let result = cdt.refine(params);

    let nodes: Vec<Vec2> = cdt.vertices().map(|h| Vec2::new(h.position().x, h.position().y)).collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        if result.excluded_faces.contains(&face.fix()) {
            continue;
        }
        let [a, b, c] = face.vertices().map(|h| h.fix().index());
        let t = [a, b, c];
        let signed = cross(nodes[b] - nodes[a], nodes[c] - nodes[a]);
        if signed > 0.0 {
            triangles.push(t);
        } else if signed < 0.0 {
            triangles.push([a, c, b]);
        }
    }
    let scale = polygon.scale();
    let boundary = nodes.iter().map(|&p| polygon.boundary_distance(p) < 1e-9 * scale).collect();
    Ok(TriMesh { nodes, triangles, boundary })
}
