//! Command implementations. All files are written from this thread after
//! the parallel solves have finished.

use std::fs;
use std::path::{Path, PathBuf};

use santalo::diagram::{
    build_loop, certify_interior, css_path, default_families, estimate_envelopes, homothety_curve,
    minkowski_diagram_path, region_clauses, region_r_contains, render_svg, sample_family, write_csv,
    DiagramPoint, Family, FamilySpec, Grid, PlanarPath, SvgOptions, ELLIPSE_SAMPLES,
};
use santalo::fem::{evaluate_shape_with, FemConfig, ShapeMetrics};
use santalo::optimize::{
    corner_stats, f_gamma, f_gamma_error, minimize_f_gamma_with, probe_envelope_with, write_trace, OptimizeError, Optimum,
    SearchConfig, Sense,
};
use santalo::shapederiv::{default_epsilons, slope_constants, verify_second_derivative_fd, FdReport, FourierPerturbation};
use santalo::special::{c_ball, j01, lambda1_ball, perforated_disk_slope, rm_limit, rm_value, torsion_ball};
use santalo::ConvexPolygon;

use rayon::prelude::*;

use crate::{Cli, CliError, Command, PathArg, SenseArg};

/// Largest admissible relative error of the finite-difference check.
const FD_TOL: f64 = 0.05;
/// Relative tolerance of the Polya and Kohler-Jobin audits.
const AUDIT_TOL: f64 = 0.01;
/// Rounding slack of the exact raw-mesh bounds.
const ROUNDING: f64 = 1e-12;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let fem = FemConfig::with_levels(cli.levels as usize);
    match &cli.command {
        Command::Point { shape } => point(&shape.single()?, &fem),
        Command::Diagram { families, count, bins } => diagram(cli, families, *count, *bins, &fem),
        Command::Slopes { max_m } => slopes(cli, *max_m, &fem),
        Command::Verify { n, disk, polya_c2, tamper_lambda } => {
            verify(cli, *n, *disk, *polya_c2, tamper_lambda.unwrap_or(1.0), &fem)
        }
        Command::Path { kind, shape, steps, grid, x_max } => path(cli, *kind, shape, *steps, *grid, *x_max, &fem),
        Command::Envelope { gamma, x_target, sense, budget, restarts, bins } => {
            envelope(cli, *gamma, *x_target, *sense, *budget, *restarts, *bins, &fem)
        }
    }
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", cli.out.display())))?;
    Ok(&cli.out)
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn points_csv(points: &[DiagramPoint]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(points, &mut buf)?;
    Ok(buf)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b) / b
}

// point

fn point(shape: &crate::shapes::Shape, fem: &FemConfig) -> Result<()> {
    let m = evaluate_shape_with(&shape.polygon, fem)?;
    println!("shape      {}", shape.label);
    println!("area       {:.10}", m.area);
    println!("lambda1    {:.10}  (rel err {:.1e})", m.lambda1, m.lambda1_err);
    println!("torsion    {:.10e}  (rel err {:.1e})", m.torsion, m.torsion_err);
    print!("x          {:.8}", m.x);
    match shape.exact_x {
        Some(e) => println!("  exact {e:.8}  rel diff {:+.2e}", relative(m.x, e)),
        None => println!(),
    }
    print!("y          {:.8}", m.y);
    match shape.exact_y {
        Some(e) => println!("  exact {e:.8}  rel diff {:+.2e}", relative(m.y, e)),
        None => println!(),
    }
    println!("raw x, y   {:.8} {:.8}", m.raw_x(), m.raw_y());
    println!("vertex     {:.8} {:.8}", lambda1_ball(), 1.0 / torsion_ball());
    let p = DiagramPoint::from_metrics(&m, &shape.label, 0.0, 0.0, 0, 0);
    print!("{}", String::from_utf8_lossy(&points_csv(&[p])?));
    Ok(())
}

// diagram

fn family_specs(names: &[String], count: Option<usize>, seed: u64) -> Result<Vec<FamilySpec>> {
    let names: Vec<&str> = names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::Usage("empty family list".into()));
    }
    names
        .iter()
        .map(|n| {
            let family: Family = n.parse()?;
            let count = count.unwrap_or_else(|| FamilySpec::default_count(family));
            Ok(FamilySpec::new(family, count, seed))
        })
        .collect()
}

fn diagram(cli: &Cli, families: &[String], count: Option<usize>, bins: usize, fem: &FemConfig) -> Result<()> {
    let specs = if families.is_empty() { default_families(cli.seed) } else { family_specs(families, count, cli.seed)? };
    let dir = out_dir(cli)?;
    let mut points = Vec::new();
    for spec in &specs {
        let mut pts = sample_family(spec, fem)?;
        println!("{:<10} {:>4} shapes", spec.family.name(), pts.len());
        points.append(&mut pts);
    }
    for (id, p) in points.iter_mut().enumerate() {
        p.id = id;
    }

    write_file(dir, "diagram.csv", &points_csv(&points)?)?;
    write_file(dir, "diagram.svg", render_svg(&points, &[], &SvgOptions::default()).as_bytes())?;
    let meta = format!(
        "# diagram.csv metadata\n\
         seed = {}\n\
         levels = {}\n\
         x = lambda1 * area, y = area^2 / torsion; lambda1_err and torsion_err are relative Richardson estimates.\n\
         Ellipses are inscribed {ELLIPSE_SAMPLES}-gons: their lambda1 is slightly above and their torsion slightly below the ellipse's.\n",
        cli.seed, cli.levels
    );
    write_file(dir, "diagram_meta.txt", meta.as_bytes())?;

    // Vertex accumulation of the regular polygons.
    let regular: Vec<&DiagramPoint> = points.iter().filter(|p| p.family == "regular").collect();
    if let (Some(first), Some(last)) = (regular.first(), regular.last()) {
        println!(
            "regular polygons: n = {} at x/x_V - 1 = {:.2e}, n = {} at {:.2e}",
            first.param1,
            relative(first.x, lambda1_ball()),
            last.param1,
            relative(last.x, lambda1_ball())
        );
    }

    let env = estimate_envelopes(&points, bins)?;
    println!("{:>10} {:>10} {:>10} {:>6}", "x", "lower", "upper", "count");
    for i in 0..env.centers.len() {
        println!("{:>10.3} {:>10.3} {:>10.3} {:>6}", env.centers[i], env.lower[i], env.upper[i], env.counts[i]);
    }
    let drops = env.lower_decreases(1e-3);
    if !drops.is_empty() {
        println!("note: lower envelope decreases at bins {drops:?} (sampling, not a violation)");
    }

    let outside: Vec<&DiagramPoint> = points.iter().filter(|p| !region_r_contains(p.x, p.y)).collect();
    println!("region audit: {} of {} points inside", points.len() - outside.len(), points.len());
    if let Some(p) = outside.first() {
        return Err(CliError::Invariant(format!(
            "{} point(s) outside the region, first: {} {} at ({}, {}) {:?}",
            outside.len(),
            p.family,
            p.param1,
            p.x,
            p.y,
            region_clauses(p.x, p.y)
        )));
    }
    Ok(())
}

// slopes

fn slopes(cli: &Cli, max_m: u32, fem: &FemConfig) -> Result<()> {
    let j = j01();
    let s = slope_constants();
    let perf = perforated_disk_slope();
    println!("j01                 {j:.10}");
    println!("gamma+ = 16/j^2     {:.6}", s.gamma_plus);
    println!("gamma- bound = r_2  {:.6}", s.gamma_minus_upper);
    println!("c_B = 8/(pi j^4)    {:.8}  (two significant figures: {:.3})", c_ball(), c_ball());
    println!("perforated slope    {:.6}", perf.value);
    println!("r_m limit 16/j^2    {:.6}", rm_limit());
    println!("{:>4} {:>12}", "m", "r_m");
    for m in 2..=max_m.max(2) {
        println!("{m:>4} {:>12.8}", rm_value(m)?);
    }

    let reports: Vec<FdReport> = [2usize, 3]
        .par_iter()
        .map(|&m| {
            let p = FourierPerturbation::cos_mode(m, 1.0)?;
            verify_second_derivative_fd(&p, &default_epsilons(&p), fem)
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut csv = format!("{}\n", FdReport::CSV_HEADER);
    for r in &reports {
        print!("{}", r.text_table());
        csv.push_str(&r.csv_rows());
    }
    write_file(out_dir(cli)?, "slopes_fd.csv", csv.as_bytes())?;
    let failing: Vec<String> = reports.iter().filter(|r| !r.passes(FD_TOL)).map(|r| r.mode.clone()).collect();
    if !failing.is_empty() {
        return Err(CliError::Verification(format!("finite differences off by more than 5% for {failing:?}")));
    }
    println!("finite-difference check within 5%");
    Ok(())
}

// verify

fn tampered(m: ShapeMetrics, factor: f64) -> ShapeMetrics {
    ShapeMetrics {
        lambda1: m.lambda1 * factor,
        x: m.x * factor,
        raw_lambda1: m.raw_lambda1 * factor,
        ..m
    }
}

fn verify(cli: &Cli, n: usize, disk: bool, polya_c2: Option<f64>, tamper: f64, fem: &FemConfig) -> Result<()> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if let Some(c2) = polya_c2 {
        if !(c2 > 0.0) {
            return Err(CliError::Usage(format!("--polya-c2 must be positive, got {c2}")));
        }
    }
    let polygons: Vec<(ConvexPolygon, f64, f64)> = if disk {
        vec![(ConvexPolygon::regular(ELLIPSE_SAMPLES, 1.0).expect("regular polygon").normalize_to_unit_area(), 0.0, 0.0)]
    } else {
        santalo::diagram::family_polygons(&FamilySpec::new(Family::Random { k: None }, n, cli.seed))?
            .into_iter()
            .map(|s| (s.polygon, s.param1, s.param2))
            .collect()
    };
    let family = if disk { "disk" } else { "random" };
    let points: Vec<DiagramPoint> = polygons
        .par_iter()
        .enumerate()
        .map(|(id, (p, a, b))| {
            let m = tampered(evaluate_shape_with(p, fem)?, tamper);
            Ok(DiagramPoint::from_metrics(&m, family, *a, *b, cli.seed, id))
        })
        .collect::<Result<_>>()?;
    write_file(out_dir(cli)?, "verify.csv", &points_csv(&points)?)?;

    let (xb, yb, c) = (lambda1_ball(), 1.0 / torsion_ball(), c_ball());
    let mut breaches = Vec::new();
    let mut worst = [f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY];
    let mut reverse = 0;
    for p in &points {
        let ratios = [p.raw_x / xb, p.raw_y / yb, p.y / p.x, c * p.x * p.x / p.y];
        for (w, r) in worst.iter_mut().zip(ratios) {
            *w = w.min(r);
        }
        if ratios[0] < 1.0 - ROUNDING {
            breaches.push(format!("shape {}: raw lambda_1 bound, x = {}", p.id, p.raw_x));
        }
        if ratios[1] < 1.0 - ROUNDING {
            breaches.push(format!("shape {}: raw torsion bound, y = {}", p.id, p.raw_y));
        }
        if ratios[2] < 1.0 - AUDIT_TOL {
            breaches.push(format!("shape {}: Polya y >= x, y/x = {}", p.id, ratios[2]));
        }
        if ratios[3] < 1.0 - AUDIT_TOL {
            breaches.push(format!("shape {}: Kohler-Jobin, c x^2 / y = {}", p.id, ratios[3]));
        }
        if let Some(c2) = polya_c2 {
            if p.y > p.x / c2 {
                reverse += 1;
            }
        }
    }
    println!("{} shapes", points.len());
    println!("min raw x / lambda1(B)   {:.6}  (exact bound, must be >= 1)", worst[0]);
    println!("min raw y / (1/T(B))     {:.6}  (exact bound, must be >= 1)", worst[1]);
    println!("min y / x                {:.6}  (Polya, tolerance {AUDIT_TOL})", worst[2]);
    println!("min c_B x^2 / y          {:.6}  (Kohler-Jobin, tolerance {AUDIT_TOL})", worst[3]);
    if let Some(c2) = polya_c2 {
        println!("reverse Polya y <= x/{c2}: {reverse} shape(s) above (diagnostic only)");
    }
    if !breaches.is_empty() {
        for b in &breaches {
            eprintln!("{b}");
        }
        return Err(CliError::Invariant(format!("{} violation(s)", breaches.len())));
    }
    println!("no violations");
    Ok(())
}

// path

fn svg_for(path: &PlanarPath) -> String {
    let mut o = SvgOptions::default();
    for p in &path.points {
        o.x_range.1 = o.x_range.1.max(p.x * 1.05);
        o.y_range.1 = o.y_range.1.max(p.y * 1.05);
    }
    render_svg(&[], std::slice::from_ref(path), &o)
}

fn path(
    cli: &Cli,
    kind: PathArg,
    shapes: &crate::shapes::ShapeArgs,
    steps: usize,
    grid: usize,
    x_max: f64,
    fem: &FemConfig,
) -> Result<()> {
    if steps == 0 {
        return Err(CliError::Usage("--steps must be positive".into()));
    }
    let dir = out_dir(cli)?;
    let path = match kind {
        PathArg::Homothety => {
            let s = shapes.single()?;
            let m = evaluate_shape_with(&s.polygon, fem)?;
            homothety_curve(&m, (m.x, x_max), steps.max(2))?
        }
        PathArg::Css => css_path(&shapes.single()?.polygon, steps, fem)?,
        PathArg::Minkowski => {
            let (a, b) = shapes.pair()?;
            minkowski_diagram_path(&a.polygon, &b.polygon, steps, fem)?
        }
        PathArg::Loop => {
            let (a, b) = shapes.pair()?;
            build_loop(&a.polygon, &b.polygon, steps, fem)?
        }
    };
    write_file(dir, "path.csv", &points_csv(&path.points)?)?;
    write_file(dir, "path.svg", svg_for(&path).as_bytes())?;
    println!("{} path with {} points", path.kind.name(), path.len());
    for p in &path.points {
        println!("{:>12.6} {:>12.6}", p.x, p.y);
    }
    let last = path.points.last().expect("non-empty path");
    match kind {
        PathArg::Css => {
            println!(
                "final point: x/x_V - 1 = {:.2e}, y/y_V - 1 = {:.2e}",
                relative(last.x, lambda1_ball()),
                relative(last.y, 1.0 / torsion_ball())
            );
            println!("monotonicity violations: {}", path.violations.len());
        }
        PathArg::Minkowski => {
            println!("inradius floor {:.6}, violations: {}", path.floor.unwrap_or(f64::NAN), path.violations.len());
        }
        PathArg::Loop => {
            let certified = certify_interior(&path, &Grid::around(&path, grid.max(1)));
            let mut csv = String::from("x,y,winding\n");
            for c in &certified {
                csv.push_str(&format!("{:.12e},{:.12e},{}\n", c.x, c.y, c.winding));
            }
            write_file(dir, "certified.csv", csv.as_bytes())?;
            println!("certified interior points: {}", certified.len());
            let outside = certified.iter().filter(|c| !region_r_contains(c.x, c.y)).count();
            if outside > 0 {
                return Err(CliError::Invariant(format!("{outside} certified point(s) outside the region")));
            }
        }
        PathArg::Homothety => {}
    }
    Ok(())
}

// envelope

fn report_optimum(dir: &Path, o: &Optimum) -> Result<()> {
    let mut buf = Vec::new();
    write_trace(&o.trace, &mut buf)?;
    write_file(dir, "trace.csv", &buf)?;
    write_file(dir, "shape.txt", o.polygon.to_text().as_bytes())?;
    let c = corner_stats(&o.support);
    println!("x {:.6}  y {:.6}  (rel err {:.1e}, {:.1e})", o.metrics.x, o.metrics.y, o.metrics.lambda1_err, o.metrics.torsion_err);
    println!("evaluations {}  converged {}", o.evaluations, o.converged);
    println!(
        "min radius of curvature {:.4e}, corner fraction {:.3}",
        c.min_curvature_radius, c.corner_fraction
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn envelope(
    cli: &Cli,
    gamma: Option<f64>,
    x_target: Option<f64>,
    sense: SenseArg,
    budget: usize,
    restarts: usize,
    bins: usize,
    fem: &FemConfig,
) -> Result<()> {
    let dir = out_dir(cli)?;
    let levels = cli.levels as usize;
    let search = SearchConfig { budget, restarts, seed: cli.seed, search_levels: levels.min(2), final_levels: levels };
    if let Some(g) = gamma {
        let o = match minimize_f_gamma_with(g, &search) {
            Ok(o) => o,
            Err(e @ OptimizeError::BudgetExhausted { .. }) => {
                println!("budget exhausted before the step converged; reporting the best shape");
                e.into_best().expect("carries the best shape")
            }
            Err(e) => return Err(e.into()),
        };
        let disk = evaluate_shape_with(&ConvexPolygon::regular(ELLIPSE_SAMPLES, 1.0).expect("regular polygon"), fem)?;
        let fb = f_gamma(&disk, g);
        let tol = f_gamma_error(&o.metrics, g) + f_gamma_error(&disk, g);
        println!("F_gamma best {:.6}  disk {:.6}  difference {:+.4e}  (error budget {:.1e})", o.score, fb, o.score - fb, tol);
        return report_optimum(dir, &o);
    }
    if let Some(x) = x_target {
        let sense = match sense {
            SenseArg::Min => Sense::Min,
            SenseArg::Max => Sense::Max,
        };
        let o = probe_envelope_with(x, sense, &SearchConfig { restarts: 1, ..search })?;
        return report_optimum(dir, &o);
    }

    let mut points = Vec::new();
    for spec in default_families(cli.seed) {
        points.extend(sample_family(&spec, fem)?);
    }
    let env = estimate_envelopes(&points, bins)?;
    let mut csv = String::from("x,lower,upper,count\n");
    println!("{:>10} {:>10} {:>10} {:>8} {:>6}", "x", "lower", "upper", "c_B x^2", "count");
    for i in 0..env.centers.len() {
        csv.push_str(&format!("{:.12e},{:.12e},{:.12e},{}\n", env.centers[i], env.lower[i], env.upper[i], env.counts[i]));
        println!(
            "{:>10.3} {:>10.3} {:>10.3} {:>8.2} {:>6}",
            env.centers[i],
            env.lower[i],
            env.upper[i],
            c_ball() * env.centers[i] * env.centers[i],
            env.counts[i]
        );
    }
    write_file(dir, "envelopes.csv", csv.as_bytes())?;
    Ok(())
}
