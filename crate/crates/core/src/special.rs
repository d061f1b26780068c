//! Bessel functions of the first kind, the first zero of `J_0`, closed-form
//! reference values for disks, rectangles and ellipses, and the mode ratios
//! `r_m` that control the second variation of `1/T - gamma * lambda_1` at the
//! disk.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest Bessel order accepted by [`bessel_j`].
pub const MAX_ORDER: u32 = 60;

/// Arguments up to this value are summed with the ascending series; larger
/// ones go through Miller's backward recurrence.
const SERIES_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, SpecialError>;

/// `J_m(x)` for integer `0 <= m <= 60` and `x >= 0`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64> {
    if m > MAX_ORDER {
        return Err(SpecialError::OutOfRange(format!("order {m} > {MAX_ORDER}")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(SpecialError::OutOfRange(format!("x = {x} must be finite and >= 0")));
    }
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    if x <= SERIES_CUTOFF {
        Ok(series(m, x))
    } else {
        Ok(miller(m, x))
    }
}

fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / f64::from(k);
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + f64::from(m)));
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() || term.abs() < 1e-300 || k > 400.0 {
            break;
        }
    }
    sum
}

/// Backward recurrence normalised with `J_0 + 2 sum_k J_{2k} = 1`.
fn miller(m: u32, x: f64) -> f64 {
    let top = (m as f64).max(x);
    let mut start = (top + 30.0 + (40.0 * top).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds the unnormalised J_{k-1}.
        if k - 1 == m as usize {
            wanted = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    norm += cur;
    wanted / norm
}

/// `J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2`, with `J_0' = -J_1`.
pub fn bessel_j_prime(m: u32, x: f64) -> Result<f64> {
    if m == 0 {
        return Ok(-bessel_j(1, x)?);
    }
    if m + 1 > MAX_ORDER + 1 {
        return Err(SpecialError::OutOfRange(format!("order {m} > {MAX_ORDER}")));
    }
    // J_{61} is only needed as a helper for the derivative of J_60.
    let upper = if m == MAX_ORDER {
        if !x.is_finite() || x < 0.0 {
            return Err(SpecialError::OutOfRange(format!("x = {x}")));
        }
        if x <= SERIES_CUTOFF { series(m + 1, x) } else { miller(m + 1, x) }
    } else {
        bessel_j(m + 1, x)?
    };
    Ok(0.5 * (bessel_j(m - 1, x)? - upper))
}

/// First positive zero of `J_0`, by bisection on `[2, 3]`.
pub fn first_zero_j0() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    let mut f_lo = series(0, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = series(0, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Cached `j_{0,1}`.
pub fn j01() -> f64 {
    static J01: OnceLock<f64> = OnceLock::new();
    *J01.get_or_init(first_zero_j0)
}

/// `lambda_1` of the unit-area disk, `pi j_{0,1}^2`.
pub fn lambda1_ball() -> f64 {
    PI * j01() * j01()
}

/// `T` of the unit-area disk, `1 / (8 pi)`.
pub fn torsion_ball() -> f64 {
    1.0 / (8.0 * PI)
}

/// The diagram vertex `(lambda_1(B), 1/T(B))`.
pub fn vertex() -> (f64, f64) {
    (lambda1_ball(), 1.0 / torsion_ball())
}

/// Coefficient of the Kohler-Jobin parabola `y = c x^2`, equal to
/// `1 / (T(B) lambda_1(B)^2) = 8 / (pi j^4)`.
pub fn c_ball() -> f64 {
    let j = j01();
    8.0 / (PI * j.powi(4))
}

/// Radius of the unit-area disk.
pub fn unit_disk_radius() -> f64 {
    1.0 / PI.sqrt()
}

/// Closed-form data of the disk of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskReference {
    pub radius: f64,
    pub lambda1: f64,
    pub torsion: f64,
    /// `w(0) = R^2/4` for the torsion function `w = (R^2 - |x|^2)/4`.
    pub torsion_center: f64,
    /// Value at the center of the L2-normalised first eigenfunction,
    /// `1 / (sqrt(pi) R |J_1(j)|)`. This reduces to `1/|J_0'(j)|` only for the
    /// unit-area disk.
    pub eigenfunction_center: f64,
}

impl DiskReference {
    pub fn new(radius: f64) -> Self {
        let j = j01();
        let j1 = series(1, j).abs();
        Self {
            radius,
            lambda1: j * j / (radius * radius),
            torsion: PI * radius.powi(4) / 8.0,
            torsion_center: radius * radius / 4.0,
            eigenfunction_center: 1.0 / (PI.sqrt() * radius * j1),
        }
    }

    pub fn unit_area() -> Self {
        Self::new(unit_disk_radius())
    }

    /// Torsion function `(R^2 - r^2)/4`.
    pub fn torsion_function(&self, r: f64) -> f64 {
        0.25 * (self.radius * self.radius - r * r)
    }

    /// L2-normalised first eigenfunction `c J_0(j r / R)`.
    pub fn eigenfunction(&self, r: f64) -> f64 {
        let arg = (j01() * r / self.radius).max(0.0);
        self.eigenfunction_center * bessel_j(0, arg).unwrap_or(0.0)
    }
}

/// First Dirichlet eigenvalue and torsional rigidity of an `a x b` rectangle.
///
/// The torsion uses the single series
/// `T = a b^3/12 [1 - 192 b/(pi^5 a) sum_{n odd} tanh(n pi a / 2b)/n^5]`
/// with `b <= a`, summed until terms drop below `1e-14` relative.
pub fn rectangle_reference(a: f64, b: f64) -> (f64, f64) {
    let lambda1 = PI * PI * (1.0 / (a * a) + 1.0 / (b * b));
    let (long, short) = if a >= b { (a, b) } else { (b, a) };
    let mut sum = 0.0;
    let mut n = 1.0_f64;
    loop {
        let term = (n * PI * long / (2.0 * short)).tanh() / n.powi(5);
        sum += term;
        if term < 1e-14 * sum {
            break;
        }
        n += 2.0;
    }
    let torsion =
        long * short.powi(3) / 12.0 * (1.0 - 192.0 * short / (PI.powi(5) * long) * sum);
    (lambda1, torsion)
}

/// Torsional rigidity of the ellipse with semi-axes `a`, `b`:
/// `pi a^3 b^3 / (4 (a^2 + b^2))`.
pub fn ellipse_reference(a: f64, b: f64) -> f64 {
    PI * a.powi(3) * b.powi(3) / (4.0 * (a * a + b * b))
}

/// `1 + j J_m'(j) / J_m(j)` at `j = j_{0,1}`.
pub fn mode_factor(m: u32) -> Result<f64> {
    let j = j01();
    Ok(1.0 + j * bessel_j_prime(m, j)? / bessel_j(m, j)?)
}

/// `r_m = 16 (m-1) / (j^2 (1 + j J_m'(j)/J_m(j)))` for `m >= 2`.
pub fn rm_value(m: u32) -> Result<f64> {
    if m < 2 {
        return Err(SpecialError::OutOfRange(format!("r_m needs m >= 2, got {m}")));
    }
    let j = j01();
    Ok(16.0 * f64::from(m - 1) / (j * j * mode_factor(m)?))
}

/// `lim r_m = 16 / j^2`.
pub fn rm_limit() -> f64 {
    16.0 / (j01() * j01())
}

/// Lower and upper bounds for `y J_m'(y) / J_m(y)`, valid for
/// `0 <= y < m + 1/2`.
pub fn krasikov_bounds(m: u32, y: f64) -> Result<(f64, f64)> {
    let mf = f64::from(m);
    if !(0.0..mf + 0.5).contains(&y) {
        return Err(SpecialError::OutOfRange(format!(
            "y = {y} outside [0, m + 1/2) for m = {m}"
        )));
    }
    let y2 = y * y;
    let lower = mf - 2.0 * y2 / (2.0 * mf + 1.0);
    let mu = (2.0 * mf + 1.0) * (2.0 * mf + 3.0);
    let upper = (4.0 * y2 - 12.0 * mf - 6.0 + ((mu - 4.0 * y2).powi(3) + mu * mu).sqrt())
        / (2.0 * ((2.0 * mf + 1.0) * (2.0 * mf + 5.0) - 4.0 * y2));
    Ok((lower, upper))
}

/// Slope at the vertex of the perforated-disk trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerforatedSlope {
    /// `4 J_1(j)^2`.
    pub value: f64,
    /// `w(0)^2 / (T(B)^2 phi(0)^2)` from the unit-area disk data.
    pub assembled: f64,
}

pub fn perforated_disk_slope() -> PerforatedSlope {
    let j1 = series(1, j01());
    let disk = DiskReference::unit_area();
    let assembled = disk.torsion_center.powi(2)
        / (disk.torsion.powi(2) * disk.eigenfunction_center.powi(2));
    let value = 4.0 * j1 * j1;
    debug_assert!((value - assembled).abs() <= 1e-10 * value);
    PerforatedSlope { value, assembled }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j0_vanishes_at_first_zero() {
        assert!(bessel_j(0, 2.404826).unwrap().abs() < 1e-6);
        let j = first_zero_j0();
        assert!(j > 2.40482 && j < 2.40483);
        assert!(bessel_j(0, j).unwrap().abs() < 1e-11);
        assert!((PI * j * j - 18.17).abs() < 0.01);
    }

    #[test]
    fn derivative_identities_at_zero() {
        let j = j01();
        let j1 = bessel_j(1, j).unwrap();
        assert_abs_diff_eq!(bessel_j_prime(0, j).unwrap(), -j1, epsilon = 1e-15);
        assert_abs_diff_eq!(-j1, -0.519147, epsilon = 1e-6);
        assert_abs_diff_eq!(j * bessel_j_prime(1, j).unwrap(), -j1, epsilon = 1e-12);
    }

    #[test]
    fn known_values() {
        // Abramowitz & Stegun table values.
        assert_abs_diff_eq!(bessel_j(0, 1.0).unwrap(), 0.765_197_686_557_966_6, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(1, 1.0).unwrap(), 0.440_050_585_744_933_5, epsilon = 1e-14);
        assert_abs_diff_eq!(bessel_j(0, 20.0).unwrap(), 0.167_024_664_340_583, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(2, 15.0).unwrap(), 0.041_571_677_975_250_5, epsilon = 1e-12);
        assert_abs_diff_eq!(bessel_j(10, 30.0).unwrap(), -0.129_876_893_998_588_7, epsilon = 1e-12);
    }

    #[test]
    fn series_and_miller_agree_at_cutoff() {
        for m in [0, 1, 2, 5, 10, 20] {
            let a = series(m, SERIES_CUTOFF);
            let b = miller(m, SERIES_CUTOFF);
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn recurrence_holds() {
        for m in 1..=30u32 {
            let mut x = 0.5;
            while x <= 20.0 {
                let lhs = bessel_j(m - 1, x).unwrap() + bessel_j(m + 1, x).unwrap();
                let rhs = 2.0 * f64::from(m) / x * bessel_j(m, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "m={m} x={x}");
                x += 0.25;
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(bessel_j(61, 1.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_j(0, f64::NAN).is_err());
    }

    #[test]
    fn disk_reference_unit_area() {
        let d = DiskReference::unit_area();
        assert_abs_diff_eq!(d.lambda1, lambda1_ball(), epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 / d.torsion, 8.0 * PI, epsilon = 1e-10);
        assert_abs_diff_eq!(d.lambda1 * d.radius * d.radius, j01() * j01(), epsilon = 1e-12);
        let j1 = bessel_j(1, j01()).unwrap().abs();
        assert_abs_diff_eq!(d.eigenfunction_center, 1.0 / j1, epsilon = 1e-12);
    }

    #[test]
    fn disk_eigenfunction_is_normalised() {
        // Radial midpoint quadrature of int phi^2 over a radius-2 disk.
        let d = DiskReference::new(2.0);
        let n = 20_000;
        let dr = d.radius / n as f64;
        let norm: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                d.eigenfunction(r).powi(2) * 2.0 * PI * r * dr
            })
            .sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-6);
    }

    /// Double sine series for the rectangle torsion, independent of the tanh form.
    fn rectangle_torsion_double_series(a: f64, b: f64) -> f64 {
        let mut t = 0.0;
        for m in (1..2000).step_by(2) {
            for n in (1..2000).step_by(2) {
                let (mf, nf) = (m as f64, n as f64);
                t += 64.0 * a * b
                    / (PI.powi(6) * mf * mf * nf * nf * (mf * mf / (a * a) + nf * nf / (b * b)));
            }
        }
        t
    }

    #[test]
    fn rectangle_reference_values() {
        let (l, t) = rectangle_reference(1.0, 1.0);
        assert_abs_diff_eq!(l, 2.0 * PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(t, 0.035144, epsilon = 1e-6);
        assert_abs_diff_eq!(t, rectangle_torsion_double_series(1.0, 1.0), epsilon = 1e-8);
        let (_, t2) = rectangle_reference(2.0, 0.5);
        assert_abs_diff_eq!(t2, rectangle_torsion_double_series(2.0, 0.5), epsilon = 1e-8);
        let (_, ts) = rectangle_reference(1.5 * 2.0, 1.5 * 0.5);
        assert_abs_diff_eq!(ts, 1.5f64.powi(4) * t2, epsilon = 1e-12);
        let (_, swapped) = rectangle_reference(0.5, 2.0);
        assert_abs_diff_eq!(swapped, t2, epsilon = 1e-15);
    }

    #[test]
    fn ellipse_reference_values() {
        assert_abs_diff_eq!(ellipse_reference(1.0, 1.0), PI / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ellipse_reference(2.0, 0.5), PI / 17.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ellipse_reference(3.0 * 2.0, 3.0 * 0.5),
            81.0 * PI / 17.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn r2_closed_form() {
        let j = j01();
        let closed = 32.0 / (j * j * (j * j - 2.0));
        assert_abs_diff_eq!(rm_value(2).unwrap(), closed, epsilon = 1e-12);
        assert_abs_diff_eq!(closed, 1.4626, epsilon = 1e-4);
        assert!(rm_value(1).is_err());
    }

    #[test]
    fn rm_sequence_is_increasing_and_bounded() {
        let limit = rm_limit();
        let mut prev = 0.0;
        for m in 2..=50 {
            let r = rm_value(m).unwrap();
            assert!(mode_factor(m).unwrap() > 0.0);
            assert!(r > prev && r < limit, "m={m} r={r}");
            prev = r;
        }
    }

    #[test]
    fn krasikov_sandwich() {
        let j = j01();
        for m in [3u32, 10] {
            let (lo, hi) = krasikov_bounds(m, j).unwrap();
            let ratio = j * bessel_j_prime(m, j).unwrap() / bessel_j(m, j).unwrap();
            assert!(lo <= ratio && ratio <= hi, "m={m}: {lo} {ratio} {hi}");
        }
        let (lo, hi) = krasikov_bounds(4, 0.0).unwrap();
        assert_eq!(lo, 4.0);
        assert!(hi >= 4.0 - 1e-12 && lo >= 0.0);
        assert!(krasikov_bounds(2, 2.5).is_err());
    }

    #[test]
    fn perforated_slope() {
        let s = perforated_disk_slope();
        assert_abs_diff_eq!(s.value, 1.078, epsilon = 1e-3);
        assert_abs_diff_eq!(s.value, s.assembled, epsilon = 1e-10);
        assert!(s.value < rm_value(2).unwrap());
        let jp = bessel_j_prime(0, j01()).unwrap();
        assert_abs_diff_eq!(s.value, 4.0 * jp * jp / bessel_j(0, 0.0).unwrap().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn c_ball_value() {
        let (x, y) = vertex();
        assert_abs_diff_eq!(c_ball(), y / (x * x), epsilon = 1e-15);
        assert_abs_diff_eq!(c_ball(), 0.0761, epsilon = 1e-4);
    }
}
