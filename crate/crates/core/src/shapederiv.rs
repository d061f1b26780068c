//! Second-order shape calculus at the unit-area disk.
//!
//! A perturbation is given by the Fourier coefficients of `alpha` in the
//! support function `h_eps = R + eps alpha + (eps^2 / 2) beta`, with
//! `R = 1/sqrt(pi)`. Volume preservation forces `a_0 = 0` and fixes the mean
//! of `beta`; all other modes of `beta` are set to zero. The second
//! derivatives of `lambda_1` and `T` along such a path are diagonal in the
//! Fourier modes, which makes the second variation of
//! `F_gamma = 1/T - gamma lambda_1` an explicit weighted sum.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::fem::{evaluate_shape_with, FemConfig, FemError};
use crate::geometry::{polygon_from_support, ConvexPolygon, GeometryError, SupportFunction};
use crate::special::{self, SpecialError};

/// Boundary samples of [`perturbed_disk`].
pub const PERTURBED_DISK_SAMPLES: usize = 512;

/// Default truncation order of a perturbation.
pub const DEFAULT_ORDER: usize = 16;

/// Endpoint tolerance of [`classify_gamma`].
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeDerivError {
    #[error("|epsilon| = {epsilon} is not below max_epsilon = {max}")]
    EpsilonTooLarge { epsilon: f64, max: f64 },
    #[error("invalid epsilon list: {0}")]
    InvalidEpsilons(String),
    #[error("perturbation order {0} exceeds the Bessel order limit")]
    OrderTooLarge(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

pub type Result<T> = std::result::Result<T, ShapeDerivError>;

/// Coefficients `a_m, b_m` (m = 1..M) of `alpha`; index 0 holds m = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierPerturbation {
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
    /// `(pi/R) sum (m^2 - 1)(a_m^2 + b_m^2)`.
    pub c0: f64,
    /// Support functions `R + eps alpha + ...` are convex for `|eps|` below this.
    pub max_epsilon: f64,
}

impl FourierPerturbation {
    pub fn new(cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Result<Self> {
        let order = cos_coeffs.len().max(sin_coeffs.len());
        if order > special::MAX_ORDER as usize {
            return Err(ShapeDerivError::OrderTooLarge(order));
        }
        let mut a = cos_coeffs;
        let mut b = sin_coeffs;
        a.resize(order, 0.0);
        b.resize(order, 0.0);
        let mut p = Self { cos_coeffs: a, sin_coeffs: b, c0: 0.0, max_epsilon: f64::INFINITY };
        p.c0 = volume_constraint_c0(&p);
        p.max_epsilon = p.convexity_limit();
        Ok(p)
    }

    /// `coefficient * cos(m theta)`.
    pub fn cos_mode(m: usize, coefficient: f64) -> Result<Self> {
        let mut a = vec![0.0; m];
        a[m - 1] = coefficient;
        Self::new(a, Vec::new())
    }

    /// `coefficient * sin(m theta)`.
    pub fn sin_mode(m: usize, coefficient: f64) -> Result<Self> {
        let mut b = vec![0.0; m];
        b[m - 1] = coefficient;
        Self::new(Vec::new(), b)
    }

    pub fn order(&self) -> usize {
        self.cos_coeffs.len()
    }

    /// `(m, a_m^2 + b_m^2)` for every mode.
    fn energies(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate().map(|(i, (a, b))| (i + 1, a * a + b * b))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.cos_coeffs.iter().map(|a| a * t).collect(), self.sin_coeffs.iter().map(|b| b * t).collect())
            .expect("scaling keeps the order")
    }

    /// `R / max |alpha + alpha''|` on a grid of `64 M` angles.
    fn convexity_limit(&self) -> f64 {
        let alpha = SupportFunction::new(0.0, self.cos_coeffs.clone(), self.sin_coeffs.clone());
        let n = 64 * self.order().max(1);
        let worst = (0..n)
            .map(|k| {
                let (h, _, h2) = alpha.eval(2.0 * PI * k as f64 / n as f64);
                (h + h2).abs()
            })
            .fold(0.0, f64::max);
        // Pure translations (m = 1) have alpha + alpha'' = 0 up to rounding.
        if worst <= 1e-12 * self.energies().map(|(_, e)| e.sqrt()).fold(0.0, f64::max) {
            f64::INFINITY
        } else {
            special::unit_disk_radius() / worst
        }
    }

    /// The constant second-order term `beta`. The constant `c0`
    /// is the integral of `beta` over a period.
    pub fn beta(&self) -> f64 {
        self.c0 / (2.0 * PI)
    }

    /// Support function `R + eps alpha + (eps^2/2) beta`.
    pub fn support(&self, epsilon: f64) -> SupportFunction {
        SupportFunction::new(
            special::unit_disk_radius() + 0.5 * epsilon * epsilon * self.beta(),
            self.cos_coeffs.iter().map(|a| epsilon * a).collect(),
            self.sin_coeffs.iter().map(|b| epsilon * b).collect(),
        )
    }

    /// Short name such as `a2`, `a2+b3` or `0.5*a3`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (i, (&a, &b)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            for (name, c) in [("a", a), ("b", b)] {
                if c == 1.0 {
                    parts.push(format!("{name}{}", i + 1));
                } else if c != 0.0 {
                    parts.push(format!("{c}*{name}{}", i + 1));
                }
            }
        }
        if parts.is_empty() {
            "zero".into()
        } else {
            parts.join("+")
        }
    }
}

/// `c0 = (pi/R) sum_m (m^2 - 1)(a_m^2 + b_m^2)`, `R = 1/sqrt(pi)`.
pub fn volume_constraint_c0(p: &FourierPerturbation) -> f64 {
    let r = special::unit_disk_radius();
    PI / r * p.energies().map(|(m, e)| ((m * m) as f64 - 1.0) * e).sum::<f64>()
}

/// `lambda_1'' = 2 pi^2 j^2 sum_{m>=2} (1 + j J_m'(j)/J_m(j)) (a_m^2 + b_m^2)`.
pub fn lambda1_second_derivative(p: &FourierPerturbation) -> Result<f64> {
    let j = special::j01();
    let mut sum = 0.0;
    for (m, e) in p.energies().filter(|&(m, e)| m >= 2 && e != 0.0) {
        sum += special::mode_factor(m as u32)? * e;
    }
    Ok(2.0 * PI * PI * j * j * sum)
}

/// `T'' = -(1/2) sum_{m>=2} (m - 1)(a_m^2 + b_m^2)`.
pub fn torsion_second_derivative(p: &FourierPerturbation) -> f64 {
    -0.5 * p.energies().map(|(m, e)| (m as f64 - 1.0) * e).sum::<f64>()
}

/// Second variation of `F_gamma = 1/T - gamma lambda_1` at the disk, in the
/// mode-wise form `2 pi^2 j^2 sum (1 + j J_m'/J_m)(r_m - gamma)(a_m^2 + b_m^2)`.
///
/// This is `-T''/T(B)^2 - gamma lambda_1''` written out; the factor `j^2` in
/// front comes from that recombination.
pub fn f_gamma_second_derivative(gamma: f64, p: &FourierPerturbation) -> Result<f64> {
    let j = special::j01();
    let mut sum = 0.0;
    for (m, e) in p.energies().filter(|&(m, e)| m >= 2 && e != 0.0) {
        let m = m as u32;
        sum += special::mode_factor(m)? * (special::rm_value(m)? - gamma) * e;
    }
    Ok(2.0 * PI * PI * j * j * sum)
}

/// `-T''/T(B)^2 - gamma lambda_1''` from the two constituent derivatives.
pub fn f_gamma_second_derivative_from_parts(gamma: f64, p: &FourierPerturbation) -> Result<f64> {
    let tb = special::torsion_ball();
    Ok(-torsion_second_derivative(p) / (tb * tb) - gamma * lambda1_second_derivative(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaClass {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Boundary,
}

/// A single-mode perturbation with the sign it gives `F_gamma''`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub perturbation: FourierPerturbation,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: GammaClass,
    /// For indefinite `gamma`: the `m = 2` mode, where `F_gamma''` is negative.
    pub negative: Option<Witness>,
    /// For indefinite `gamma`: the first mode `m` with `r_m > gamma`, if one
    /// exists within the supported Bessel orders.
    pub positive: Option<Witness>,
}

/// Sign of the quadratic form `F_gamma''` at the disk.
pub fn classify_gamma(gamma: f64) -> Result<Classification> {
    let lower = special::rm_value(2)?;
    let upper = special::rm_limit();
    let none = |class| Classification { class, negative: None, positive: None };
    if (gamma - lower).abs() <= BOUNDARY_TOL || (gamma - upper).abs() <= BOUNDARY_TOL {
        return Ok(none(GammaClass::Boundary));
    }
    if gamma < lower {
        return Ok(none(GammaClass::PositiveDefinite));
    }
    if gamma > upper {
        return Ok(none(GammaClass::NegativeDefinite));
    }
    let witness = |m: usize| -> Result<Witness> {
        let perturbation = FourierPerturbation::cos_mode(m, 1.0)?;
        let value = f_gamma_second_derivative(gamma, &perturbation)?;
        Ok(Witness { perturbation, value })
    };
    let negative = Some(witness(2)?);
    let mut positive = None;
    for m in 3..=special::MAX_ORDER {
        if special::rm_value(m)? > gamma {
            positive = Some(witness(m as usize)?);
            break;
        }
    }
    Ok(Classification { class: GammaClass::Indefinite, negative, positive })
}

/// Extremal slopes of the lower boundary at the vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeConstants {
    /// `16 / j^2`, the slope of the Kohler-Jobin curve at the vertex.
    pub gamma_plus: f64,
    /// `32 / (j^2 (j^2 - 2)) = r_2`, an upper bound for the other slope.
    pub gamma_minus_upper: f64,
}

pub fn slope_constants() -> SlopeConstants {
    let j2 = special::j01().powi(2);
    let gamma_plus = 16.0 / j2;
    let kj_slope = 2.0 / (special::torsion_ball() * special::lambda1_ball());
    assert!((gamma_plus - kj_slope).abs() <= 1e-12 * gamma_plus, "slope identity failed");
    SlopeConstants { gamma_plus, gamma_minus_upper: 32.0 / (j2 * (j2 - 2.0)) }
}

/// The body with support `R + eps alpha + (eps^2/2) beta`, polygonized at
/// 512 angles.
pub fn perturbed_disk(p: &FourierPerturbation, epsilon: f64) -> Result<ConvexPolygon> {
    if epsilon.abs() >= p.max_epsilon {
        return Err(ShapeDerivError::EpsilonTooLarge { epsilon: epsilon.abs(), max: p.max_epsilon });
    }
    Ok(polygon_from_support(&p.support(epsilon), PERTURBED_DISK_SAMPLES)?)
}

/// Central second differences at one `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdRow {
    pub epsilon: f64,
    pub fd_lambda: f64,
    pub fd_torsion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub mode: String,
    pub rows: Vec<FdRow>,
    pub analytic_lambda: f64,
    pub analytic_torsion: f64,
    /// Richardson extrapolation in `epsilon` of the second differences.
    pub best_lambda: f64,
    pub best_torsion: f64,
    /// Bounds on the part of `best_*` explained by the finite-element error
    /// estimates of the individual evaluations.
    pub noise_lambda: f64,
    pub noise_torsion: f64,
}

/// `|fd - analytic| / |analytic|`, or `|fd|` when the analytic value is zero.
pub fn relative_error(fd: f64, analytic: f64) -> f64 {
    if analytic == 0.0 {
        fd.abs()
    } else {
        (fd - analytic).abs() / analytic.abs()
    }
}

impl FdReport {
    pub fn rel_err_lambda(&self) -> f64 {
        relative_error(self.best_lambda, self.analytic_lambda)
    }

    pub fn rel_err_torsion(&self) -> f64 {
        relative_error(self.best_torsion, self.analytic_torsion)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_err_lambda() <= tol && self.rel_err_torsion() <= tol
    }

    pub const CSV_HEADER: &'static str =
        "mode,epsilon,fd_lambda,analytic_lambda,rel_err_lambda,fd_T,analytic_T,rel_err_T";

    fn lines(&self) -> Vec<(String, f64, f64)> {
        let mut out: Vec<(String, f64, f64)> =
            self.rows.iter().map(|r| (format!("{:.6e}", r.epsilon), r.fd_lambda, r.fd_torsion)).collect();
        out.push(("extrapolated".into(), self.best_lambda, self.best_torsion));
        out
    }

    /// CSV rows (no header), one per epsilon plus the extrapolated estimate.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (eps, l, t) in self.lines() {
            let _ = writeln!(
                s,
                "{},{},{:.10e},{:.10e},{:.3e},{:.10e},{:.10e},{:.3e}",
                self.mode,
                eps,
                l,
                self.analytic_lambda,
                relative_error(l, self.analytic_lambda),
                t,
                self.analytic_torsion,
                relative_error(t, self.analytic_torsion)
            );
        }
        s
    }

    pub fn text_table(&self) -> String {
        let mut s = format!(
            "{:<8} {:>13} {:>13} {:>13} {:>9} {:>13} {:>13} {:>9}\n",
            "mode", "epsilon", "fd_lambda", "analytic", "rel_err", "fd_T", "analytic", "rel_err"
        );
        for (eps, l, t) in self.lines() {
            let _ = writeln!(
                s,
                "{:<8} {:>13} {:>13.6} {:>13.6} {:>9.2e} {:>13.6} {:>13.6} {:>9.2e}",
                self.mode,
                eps,
                l,
                self.analytic_lambda,
                relative_error(l, self.analytic_lambda),
                t,
                self.analytic_torsion,
                relative_error(t, self.analytic_torsion)
            );
        }
        s
    }
}

/// Default epsilons: half and a quarter of the convexity limit, capped at
/// `R/4` for modes whose limit is large or infinite.
pub fn default_epsilons(p: &FourierPerturbation) -> Vec<f64> {
    let e = (0.5 * p.max_epsilon).min(0.25 * special::unit_disk_radius());
    vec![e, 0.5 * e]
}

/// Compares finite differences of finite-element values along the
/// perturbation with the analytic second derivatives.
///
/// For each `eps` the unit-area-normalized `lambda_1` and `T` of
/// `perturbed_disk(p, +-eps)` give `(F(eps) + F(-eps) - 2 F(0)) / eps^2`; the
/// differences are then extrapolated in `eps^2`. Normalizing to unit area
/// removes the polygonization deficit, which would otherwise leak into the
/// differences; the smooth bodies have area `pi R^2 + O(eps^4)`.
pub fn verify_second_derivative_fd(
    p: &FourierPerturbation,
    epsilons: &[f64],
    config: &FemConfig,
) -> Result<FdReport> {
    if epsilons.len() < 2 {
        return Err(ShapeDerivError::InvalidEpsilons("need at least two".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|&e| e <= 0.0) {
        return Err(ShapeDerivError::InvalidEpsilons("must be positive and strictly decreasing".into()));
    }
    let mut shapes = vec![perturbed_disk(p, 0.0)?];
    for &e in epsilons {
        shapes.push(perturbed_disk(p, e)?);
        shapes.push(perturbed_disk(p, -e)?);
    }
    let values = shapes
        .par_iter()
        .map(|s| evaluate_shape_with(s, config))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let noise: Vec<(f64, f64)> = values.iter().map(|m| (m.lambda1_err * m.x, m.torsion_err / m.y)).collect();
    let values: Vec<(f64, f64)> = values.iter().map(|m| (m.x, 1.0 / m.y)).collect();
    let (l0, t0) = values[0];
    let rows: Vec<FdRow> = epsilons
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let (lp, tp) = values[1 + 2 * k];
            let (lm, tm) = values[2 + 2 * k];
            FdRow { epsilon: e, fd_lambda: (lp + lm - 2.0 * l0) / (e * e), fd_torsion: (tp + tm - 2.0 * t0) / (e * e) }
        })
        .collect();
    let n = rows.len();
    let ratio = (rows[n - 2].epsilon / rows[n - 1].epsilon).powi(2);
    let extrapolate = |f: fn(&FdRow) -> f64| {
        let (a, b) = (&rows[n - 2], &rows[n - 1]);
        f(b) + (f(b) - f(a)) / (ratio - 1.0)
    };
    // Error of one second difference from the per-shape error estimates,
    // propagated through the extrapolation weights.
    let row_noise = |k: usize, pick: fn(&(f64, f64)) -> f64| {
        let e = epsilons[k];
        (pick(&noise[1 + 2 * k]) + pick(&noise[2 + 2 * k]) + 2.0 * pick(&noise[0])) / (e * e)
    };
    let combined = |pick: fn(&(f64, f64)) -> f64| {
        (ratio * row_noise(n - 1, pick) + row_noise(n - 2, pick)) / (ratio - 1.0)
    };
    Ok(FdReport {
        mode: p.label(),
        analytic_lambda: lambda1_second_derivative(p)?,
        analytic_torsion: torsion_second_derivative(p),
        best_lambda: extrapolate(|r| r.fd_lambda),
        best_torsion: extrapolate(|r| r.fd_torsion),
        noise_lambda: combined(|v| v.0),
        noise_torsion: combined(|v| v.1),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn a(m: usize) -> FourierPerturbation {
        FourierPerturbation::cos_mode(m, 1.0).unwrap()
    }

    #[test]
    fn c0_examples() {
        let r = special::unit_disk_radius();
        assert_eq!(volume_constraint_c0(&a(1)), 0.0);
        assert_abs_diff_eq!(a(2).c0, 3.0 * PI / r, epsilon = 1e-12);
        assert_abs_diff_eq!(a(2).c0, 3.0 * PI * PI.sqrt(), epsilon = 1e-12);
        let p = FourierPerturbation::new(vec![0.0, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p.c0, PI / r * 11.0, epsilon = 1e-12);
    }

    #[test]
    fn second_order_area_cancels() {
        // Smooth area of the support function: the eps^2 term vanishes and
        // the remainder is pi beta^2 eps^4 / 4.
        let p = FourierPerturbation::new(vec![0.0, 0.7], vec![0.0, 0.0, -0.4]).unwrap();
        let r = special::unit_disk_radius();
        for eps in [0.01, 0.02, 0.04] {
            let defect = p.support(eps).area() - PI * r * r;
            assert_abs_diff_eq!(defect, PI * p.beta().powi(2) * eps.powi(4) / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda1_second_derivative(&a(1)).unwrap(), 0.0);
        let j = special::j01();
        let expected = 2.0 * PI * PI * j * j * special::mode_factor(2).unwrap();
        assert_abs_diff_eq!(lambda1_second_derivative(&a(2)).unwrap(), expected, epsilon = 1e-12);
        assert!(expected > 0.0);
        let p = FourierPerturbation::new(vec![0.3, -0.2, 0.5], vec![0.1, 0.4]).unwrap();
        let base = lambda1_second_derivative(&p).unwrap();
        assert_abs_diff_eq!(lambda1_second_derivative(&p.scaled(3.0)).unwrap(), 9.0 * base, epsilon = 1e-9);
    }

    #[test]
    fn torsion_examples() {
        assert_eq!(torsion_second_derivative(&a(2)), -0.5);
        assert_eq!(torsion_second_derivative(&a(1)), 0.0);
        let p = FourierPerturbation::new(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(torsion_second_derivative(&p), -2.0);
    }

    #[test]
    fn torsion_second_derivative_matches_ellipses() {
        // h = sqrt(a^2 cos^2 + b^2 sin^2) with a = R e^s, b = R e^-s is an
        // area-preserving ellipse path; to second order in s its support is
        // R + s R cos(2 theta) + O(s^2) radial terms, and
        // T = pi a^3 b^3 / (4(a^2 + b^2)) = pi R^4 / (8 cosh(2s)).
        let r = special::unit_disk_radius();
        let t = |s: f64| special::ellipse_reference(r * s.exp(), r * (-s).exp());
        let h = 1e-3;
        let d2 = (t(h) + t(-h) - 2.0 * t(0.0)) / (h * h);
        // With eps = s R the a_2 coefficient is 1.
        let via_formula = torsion_second_derivative(&a(2)) * r * r;
        assert!((d2 / via_formula - 1.0).abs() < 1e-5, "{d2} vs {via_formula}");
    }

    #[test]
    fn f_gamma_examples() {
        let tb = special::torsion_ball();
        assert_abs_diff_eq!(f_gamma_second_derivative(0.0, &a(2)).unwrap(), 0.5 / (tb * tb), epsilon = 1e-9);
        assert_abs_diff_eq!(0.5 / (tb * tb), 32.0 * PI * PI, epsilon = 1e-9);
        let r2 = special::rm_value(2).unwrap();
        assert!(f_gamma_second_derivative(r2, &a(2)).unwrap().abs() < 1e-10);
        for m in 2..=20 {
            assert!(f_gamma_second_derivative(3.0, &a(m)).unwrap() < 0.0);
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify_gamma(1.0).unwrap().class, GammaClass::PositiveDefinite);
        assert_eq!(classify_gamma(3.0).unwrap().class, GammaClass::NegativeDefinite);
        let c = classify_gamma(2.0).unwrap();
        assert_eq!(c.class, GammaClass::Indefinite);
        let neg = c.negative.unwrap();
        let pos = c.positive.unwrap();
        assert!(neg.value < 0.0 && pos.value > 0.0);
        assert_eq!(neg.perturbation, a(2));
        assert_abs_diff_eq!(f_gamma_second_derivative(2.0, &pos.perturbation).unwrap(), pos.value);
        assert_eq!(classify_gamma(special::rm_value(2).unwrap()).unwrap().class, GammaClass::Boundary);
        assert_eq!(classify_gamma(special::rm_limit()).unwrap().class, GammaClass::Boundary);
    }

    #[test]
    fn slopes() {
        let s = slope_constants();
        assert_abs_diff_eq!(s.gamma_plus, 2.7666, epsilon = 1e-3);
        assert_abs_diff_eq!(s.gamma_plus, 2.0 * 8.0 * PI / special::lambda1_ball(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.gamma_minus_upper, 1.4626, epsilon = 1e-4);
        assert_abs_diff_eq!(s.gamma_minus_upper, special::rm_value(2).unwrap(), epsilon = 1e-12);
        assert!(s.gamma_minus_upper < s.gamma_plus);
    }

    #[test]
    fn perturbed_disk_cases() {
        let r = special::unit_disk_radius();
        let p0 = perturbed_disk(&a(2), 0.0).unwrap();
        let reg = ConvexPolygon::regular(512, r).unwrap();
        assert_eq!(p0.len(), 512);
        assert!(p0.vertices().iter().zip(reg.vertices()).all(|(u, v)| (u - v).norm() < 1e-15));
        assert_abs_diff_eq!(a(2).max_epsilon, r / 3.0, epsilon = 1e-12);
        assert!(matches!(perturbed_disk(&a(2), 0.2), Err(ShapeDerivError::EpsilonTooLarge { .. })));
        assert!(perturbed_disk(&a(2), 0.15).is_ok());
        assert_eq!(a(1).max_epsilon, f64::INFINITY);
    }

    #[test]
    fn perturbed_disk_area_matches_unperturbed_polygon() {
        // The 512-gon itself is short of pi R^2 by about 2.5e-5. Relative to
        // it, the change is the smooth fourth-order defect pi beta^2 eps^4 / 4
        // plus a polygonization term of order eps^2 / n^2.
        let r = special::unit_disk_radius();
        let p = a(2);
        let base = perturbed_disk(&p, 0.0).unwrap().area();
        assert!((PI * r * r - base - 2.51e-5).abs() < 1e-7);
        for eps in [0.04 * r, 0.02 * r, 0.01 * r, 0.005 * r] {
            let d = perturbed_disk(&p, eps).unwrap().area() - base;
            let smooth = PI * p.beta().powi(2) * eps.powi(4) / 4.0;
            assert!((d - smooth).abs() < 1e-3 * eps * eps, "eps {eps}: {d} vs {smooth}");
        }
    }

    #[test]
    fn labels() {
        assert_eq!(a(2).label(), "a2");
        let p = FourierPerturbation::new(vec![0.0, 1.0], vec![0.0, 0.0, 0.5]).unwrap();
        assert_eq!(p.label(), "a2+0.5*b3");
    }

    #[test]
    fn fd_rejects_bad_epsilons() {
        let cfg = FemConfig::with_levels(2);
        assert!(verify_second_derivative_fd(&a(2), &[0.05], &cfg).is_err());
        assert!(verify_second_derivative_fd(&a(2), &[0.02, 0.05], &cfg).is_err());
        assert!(verify_second_derivative_fd(&a(2), &[0.5, 0.1], &cfg).is_err());
    }

    #[test]
    fn fd_translation_mode_vanishes() {
        let p = a(1);
        let report = verify_second_derivative_fd(&p, &[0.1, 0.05], &FemConfig::with_levels(2)).unwrap();
        assert_eq!(report.analytic_lambda, 0.0);
        assert!(report.best_lambda.abs() <= report.noise_lambda, "{report:?}");
        assert!(report.best_torsion.abs() <= report.noise_torsion, "{report:?}");
        // Meshes of translated polygons differ only through rounding, so the
        // differences sit far below the m = 2 derivatives.
        assert!(report.best_lambda.abs() < 1e-3 * lambda1_second_derivative(&a(2)).unwrap(), "{report:?}");
        assert!(report.best_torsion.abs() < 1e-3 * torsion_second_derivative(&a(2)).abs(), "{report:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn f_gamma_forms_agree(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 16),
            gi in 0usize..6,
        ) {
            let gammas = [0.0, 1.0, special::rm_value(2).unwrap(), 2.0, special::rm_limit(), 3.0];
            let p = FourierPerturbation::new(coeffs[..8].to_vec(), coeffs[8..].to_vec()).unwrap();
            let g = gammas[gi];
            let a = f_gamma_second_derivative(g, &p).unwrap();
            let b = f_gamma_second_derivative_from_parts(g, &p).unwrap();
            let scale = a.abs().max(b.abs()).max(1e-300);
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }

        #[test]
        fn second_derivative_signs(coeffs in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let p = FourierPerturbation::new(coeffs[..8].to_vec(), coeffs[8..].to_vec()).unwrap();
            prop_assert!(lambda1_second_derivative(&p).unwrap() >= 0.0);
            prop_assert!(torsion_second_derivative(&p) <= 0.0);
        }
    }
}
