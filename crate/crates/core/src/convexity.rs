//! Convexity of the log-domain least-squares terms.
//!
//! After the substitution `t_i = log w_i` the least-squares objective becomes
//! `sum_{i<j} f_{a_ij}(t_i - t_j)` with
//! `f_a(t) = (e^t - a)^2 + (e^-t - 1/a)^2`. Each `f_a` is convex on the whole
//! line exactly when `1/a0 <= a <= a0`, where `a0 = inf_w psi(w)` and
//! `phi`, `psi` are the two roots in `a` of the numerator of `f_a''`.
//! A matrix whose entries all lie in that band has a strictly convex
//! objective on the hyperplane `sum t = 0` and hence a unique minimizer.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcm::PCMatrix;

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// `f_a(t) = (e^t - a)^2 + (e^-t - 1/a)^2`.
pub fn f_a(t: f64, a: f64) -> Result<f64> {
    check_positive("a", a)?;
    Ok(f_a_unchecked(t, a))
}

#[inline]
pub(crate) fn f_a_unchecked(t: f64, a: f64) -> f64 {
    let p = t.exp() - a;
    let q = (-t).exp() - 1.0 / a;
    p * p + q * q
}

#[inline]
pub(crate) fn f_a_prime_unchecked(t: f64, a: f64) -> f64 {
    let e = t.exp();
    let ei = 1.0 / e;
    2.0 * (e - a) * e - 2.0 * (ei - 1.0 / a) * ei
}

#[inline]
pub(crate) fn f_a_second_unchecked(x: f64, a: f64) -> f64 {
    let e = x.exp();
    let ei = (-x).exp();
    -2.0 * (a * a * e - 2.0 * a * (ei * ei + e * e) + ei) / a
}

/// Closed-form `f_a''(x) = -2 (a^2 e^x - 2a (e^-2x + e^2x) + e^-x) / a`.
pub fn f_a_second(x: f64, a: f64) -> Result<f64> {
    check_positive("a", a)?;
    Ok(f_a_second_unchecked(x, a))
}

/// Upper root curve `psi(w) = (1 + w^4 + sqrt(1 + w^4 + w^8)) / w^3`.
pub fn psi(w: f64) -> Result<f64> {
    check_positive("w", w)?;
    Ok(psi_unchecked(w))
}

fn psi_unchecked(w: f64) -> f64 {
    let w4 = w.powi(4);
    (1.0 + w4 + (1.0 + w4 + w4 * w4).sqrt()) / w.powi(3)
}

/// Lower root curve `phi(w) = (1 + w^4 - sqrt(1 + w^4 + w^8)) / w^3`.
///
/// Evaluated through the root product `phi * psi = w^-2`, which avoids the
/// cancellation in the numerator for large `w`.
pub fn phi(w: f64) -> Result<f64> {
    check_positive("w", w)?;
    Ok(1.0 / (w * w * psi_unchecked(w)))
}

/// `w^4 psi'(w) = (-3 - w^4 + w^8) / sqrt(1 + w^4 + w^8) + w^4 - 3`.
pub fn psi_prime_expr(w: f64) -> Result<f64> {
    check_positive("w", w)?;
    let w4 = w.powi(4);
    let w8 = w4 * w4;
    Ok((-3.0 - w4 + w8) / (1.0 + w4 + w8).sqrt() + w4 - 3.0)
}

/// Convexity threshold `a0 = sqrt((11 + 5 sqrt 5) / 2)`.
pub fn compute_a0() -> f64 {
    ((11.0 + 5.0 * 5f64.sqrt()) / 2.0).sqrt()
}

/// Alternative closed form `a0 = ((123 + 55 sqrt 5) / 2)^(1/4)`.
pub fn compute_a0_quartic() -> f64 {
    ((123.0 + 55.0 * 5f64.sqrt()) / 2.0).powf(0.25)
}

/// Minimizer of `psi`: `w0 = sqrt((1 + sqrt 5) / 2)`.
pub fn compute_w0() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).sqrt()
}

/// Published upper bound on the true uniqueness threshold. Informational
/// only; certification never uses it.
pub const A1_APPROX: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityConstants {
    pub a0: f64,
    pub a1: f64,
    pub w0: f64,
}

impl ConvexityConstants {
    /// Constants evaluated once from their closed forms.
    ///
    /// # Panics
    /// If the two closed forms of `a0` disagree or `psi(w0) != a0`; either
    /// would mean the floating-point environment is broken.
    pub fn get() -> &'static ConvexityConstants {
        static CONSTANTS: OnceLock<ConvexityConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| {
            let a0 = compute_a0();
            let w0 = compute_w0();
            assert!((a0 - compute_a0_quartic()).abs() <= 1e-12 * a0);
            assert!((psi_unchecked(w0) - a0).abs() <= 1e-9);
            ConvexityConstants {
                a0,
                a1: A1_APPROX,
                w0,
            }
        })
    }

    /// `true` when `a` lies in the closed band `[1/a0, a0]`.
    pub fn admits(&self, a: f64) -> bool {
        (1.0 / self.a0..=self.a0).contains(&a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// Every term is convex, so the minimizer is unique.
    UniqueGuaranteed,
    /// Some entry lies outside the band; multiple minima are possible but
    /// not certain.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub a_ij: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub a0: f64,
    pub max_entry: f64,
    pub admissible: bool,
    /// Upper-triangle entries outside `[1/a0, a0]`.
    pub violations: Vec<Violation>,
    pub verdict: Verdict,
}

/// Checks every entry against `[1/a0, a0]` (endpoints included).
pub fn certify(a: &PCMatrix) -> ConvexityReport {
    let c = ConvexityConstants::get();
    let violations: Vec<Violation> = a
        .upper_entries()
        .filter(|&(_, _, v)| !c.admits(v))
        .map(|(i, j, a_ij)| Violation { i, j, a_ij })
        .collect();
    let admissible = violations.is_empty();
    ConvexityReport {
        a0: c.a0,
        max_entry: a.max_entry(),
        admissible,
        violations,
        verdict: if admissible {
            Verdict::UniqueGuaranteed
        } else {
            Verdict::Unknown
        },
    }
}

/// Rows `(w, phi(w), psi(w))` on a log-spaced grid over `[w_min, w_max]`
/// (abscissae rounded to 12 significant digits).
pub fn root_curves(w_min: f64, w_max: f64, points: usize) -> Result<Vec<(f64, f64, f64)>> {
    check_positive("w_min", w_min)?;
    check_positive("w_max", w_max)?;
    if points < 2 || w_max <= w_min {
        return Err(Error::InvalidConfig(
            "root curve grid needs w_min < w_max and at least 2 points".into(),
        ));
    }
    let (lo, hi) = (w_min.ln(), w_max.ln());
    Ok((0..points)
        .map(|k| {
            let w = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
            // round to 12 significant digits so the abscissae print cleanly
            let w: f64 = format!("{w:.11e}").parse().expect("formatted float parses");
            (w, 1.0 / (w * w * psi_unchecked(w)), psi_unchecked(w))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_grid() -> impl Iterator<Item = f64> {
        (0..4001).map(|k| -10.0 + 20.0 * k as f64 / 4000.0)
    }

    #[test]
    fn f_a_values() {
        assert_eq!(f_a(0.0, 1.0).unwrap(), 0.0);
        assert!(f_a(3f64.ln(), 3.0).unwrap() < 1e-28);
        assert!((f_a(0.0, 3.0).unwrap() - 40.0 / 9.0).abs() < 1e-14);
        assert!(matches!(
            f_a(0.0, 0.0),
            Err(Error::NonPositiveParameter { .. })
        ));
        assert!(f_a_second(0.0, -1.0).is_err());
    }

    #[test]
    fn second_derivative_at_origin() {
        assert!((f_a_second(0.0, 1.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn convex_below_threshold_and_not_above() {
        assert!(x_grid().all(|x| f_a_second(x, 3.0).unwrap() >= 0.0));
        assert!(x_grid().any(|x| f_a_second(x, 3.4).unwrap() < 0.0));
        assert!(x_grid().any(|x| f_a_second(x, 1.0 / 3.4).unwrap() < 0.0));
    }

    #[test]
    fn root_curves_at_one() {
        let s3 = 3f64.sqrt();
        assert!((psi(1.0).unwrap() - (2.0 + s3)).abs() < 1e-14);
        assert!((phi(1.0).unwrap() - (2.0 - s3)).abs() < 1e-14);
        assert!(phi(0.0).is_err());
        assert!(psi(-1.0).is_err());
    }

    #[test]
    fn phi_matches_literal_form_where_stable() {
        for w in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let w4: f64 = w * w * w * w;
            let literal = (1.0 + w4 - (1.0 + w4 + w4 * w4).sqrt()) / (w * w * w);
            assert!((phi(w).unwrap() - literal).abs() <= 1e-10 * literal);
        }
    }

    #[test]
    fn constants() {
        let c = ConvexityConstants::get();
        assert!(c.a0 > 3.330190 && c.a0 < 3.330192);
        assert!(c.w0 > 1.272019 && c.w0 < 1.272021);
        assert!((psi(c.w0).unwrap() - c.a0).abs() < 1e-9);
        assert!(psi_prime_expr(c.w0).unwrap().abs() < 1e-9);
        assert!(psi(c.w0 - 0.1).unwrap() > c.a0);
        assert!(psi(c.w0 + 0.1).unwrap() > c.a0);
        let q = (123.0 + 55.0 * 5f64.sqrt()) / 2.0;
        assert!((c.a0.powi(4) - q).abs() <= 1e-9 * q);
    }

    #[test]
    fn certify_examples() {
        let m = |u: [f64; 3]| PCMatrix::new(3, u.to_vec(), None).unwrap();

        let r = certify(&m([2.0, 3.0, 2.0]));
        assert_eq!(r.verdict, Verdict::UniqueGuaranteed);
        assert!(r.admissible && r.violations.is_empty());

        let r = certify(&m([3.0, 5.0, 3.0]));
        assert_eq!(r.verdict, Verdict::Unknown);
        assert_eq!(
            r.violations,
            vec![Violation {
                i: 0,
                j: 2,
                a_ij: 5.0
            }]
        );

        let r = certify(&m([1.0, 1.0, 1.0]));
        assert_eq!(r.verdict, Verdict::UniqueGuaranteed);
    }

    #[test]
    fn certify_endpoints_inclusive() {
        let a0 = compute_a0();
        let m = PCMatrix::new(3, vec![a0, 1.0 / a0, 1.0], None).unwrap();
        assert_eq!(certify(&m).verdict, Verdict::UniqueGuaranteed);
        let m = PCMatrix::new(3, vec![a0 * (1.0 + 1e-12), 1.0, 1.0], None).unwrap();
        assert_eq!(certify(&m).verdict, Verdict::Unknown);
    }

    #[test]
    fn curve_table() {
        let rows = root_curves(0.01, 100.0, 5).unwrap();
        assert_eq!(rows.len(), 5);
        let (w, p, s) = rows[2];
        assert!((w - 1.0).abs() < 1e-12);
        assert!((p - 0.2679491924311227).abs() < 1e-12);
        assert!((s - 3.732050807568877).abs() < 1e-12);
        assert!(root_curves(1.0, 0.5, 5).is_err());
    }
}
