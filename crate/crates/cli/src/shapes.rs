//! Shape selection flags shared by `point` and `path`.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use santalo::special::{ellipse_reference, lambda1_ball, rectangle_reference, torsion_ball};
use santalo::ConvexPolygon;

use crate::CliError;

/// Boundary samples of the disk and ellipse polygons.
pub const CURVED_SAMPLES: usize = 256;

#[derive(Args, Debug, Clone, Default)]
pub struct ShapeArgs {
    /// Polygon file: one `x y` vertex per line, counterclockwise.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Unit square.
    #[arg(long)]
    pub square: bool,
    /// `W x 1/W` rectangle.
    #[arg(long, value_name = "W")]
    pub rect: Option<f64>,
    /// Inscribed 256-gon of the disk.
    #[arg(long)]
    pub disk: bool,
    /// Regular polygon with N sides.
    #[arg(long, value_name = "N")]
    pub regular_ngon: Option<usize>,
    /// Inscribed 256-gon of the ellipse with semi-axes A and 1/A.
    #[arg(long, value_name = "A")]
    pub ellipse: Option<f64>,
    /// Isosceles triangle with the given apex angle in degrees.
    #[arg(long, value_name = "DEG")]
    pub triangle: Option<f64>,
}

/// A selected shape with a label and, when known in closed form, the
/// diagram coordinates of the exact domain.
#[derive(Debug, Clone)]
pub struct Shape {
    pub label: String,
    pub polygon: ConvexPolygon,
    pub exact_x: Option<f64>,
    pub exact_y: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn geometry(e: santalo::geometry::GeometryError) -> CliError {
    CliError::Usage(e.to_string())
}

impl ShapeArgs {
    /// Every selected shape, in the order file, square, rect, disk,
    /// regular-ngon, ellipse, triangle.
    pub fn shapes(&self) -> Result<Vec<Shape>, CliError> {
        let mut out = Vec::new();
        if let Some(path) = &self.file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let polygon = ConvexPolygon::parse(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            out.push(Shape { label: path.display().to_string(), polygon, exact_x: None, exact_y: None });
        }
        if self.square {
            out.push(rectangle(1.0)?);
        }
        if let Some(w) = self.rect {
            out.push(rectangle(positive("rect", w)?)?);
        }
        if self.disk {
            let polygon = ConvexPolygon::regular(CURVED_SAMPLES, 1.0).map_err(geometry)?;
            out.push(Shape {
                label: "disk".into(),
                polygon,
                exact_x: Some(lambda1_ball()),
                exact_y: Some(1.0 / torsion_ball()),
            });
        }
        if let Some(n) = self.regular_ngon {
            if n < 3 {
                return Err(CliError::Usage(format!("--regular-ngon needs at least 3 sides, got {n}")));
            }
            let polygon = ConvexPolygon::regular(n, 1.0).map_err(geometry)?;
            out.push(Shape { label: format!("regular-{n}"), polygon, exact_x: None, exact_y: None });
        }
        if let Some(a) = self.ellipse {
            let a = positive("ellipse", a)?;
            let polygon = ConvexPolygon::ellipse(a, 1.0 / a, CURVED_SAMPLES).map_err(geometry)?;
            let area = PI;
            out.push(Shape {
                label: format!("ellipse-{a}"),
                polygon,
                exact_x: None,
                exact_y: Some(area * area / ellipse_reference(a, 1.0 / a)),
            });
        }
        if let Some(deg) = self.triangle {
            if !(deg > 0.0 && deg < 180.0) {
                return Err(CliError::Usage(format!("--triangle apex must lie in (0, 180), got {deg}")));
            }
            let polygon = ConvexPolygon::isosceles(deg.to_radians()).map_err(geometry)?;
            out.push(Shape { label: format!("isosceles-{deg}"), polygon, exact_x: None, exact_y: None });
        }
        Ok(out)
    }

    /// Exactly one selected shape.
    pub fn single(&self) -> Result<Shape, CliError> {
        let mut s = self.shapes()?;
        match s.len() {
            1 => Ok(s.remove(0)),
            0 => Err(CliError::Usage("no shape given (use --square, --rect W, --file PATH, ...)".into())),
            n => Err(CliError::Usage(format!("expected one shape, got {n}"))),
        }
    }

    /// Exactly two selected shapes.
    pub fn pair(&self) -> Result<(Shape, Shape), CliError> {
        let mut s = self.shapes()?;
        if s.len() != 2 {
            return Err(CliError::Usage(format!("expected two shapes, got {}", s.len())));
        }
        let b = s.pop().unwrap();
        let a = s.pop().unwrap();
        Ok((a, b))
    }
}

fn rectangle(w: f64) -> Result<Shape, CliError> {
    let polygon = ConvexPolygon::rectangle(w, 1.0 / w).map_err(geometry)?;
    let (lambda1, torsion) = rectangle_reference(w, 1.0 / w);
    let label = if w == 1.0 { "square".to_string() } else { format!("rect-{w}") };
    Ok(Shape { label, polygon, exact_x: Some(lambda1), exact_y: Some(1.0 / torsion) })
}
