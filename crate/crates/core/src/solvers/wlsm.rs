use nalgebra::{DMatrix, DVector};

use super::{Method, SolveResult};
use crate::error::{Error, Result};
use crate::pcm::{PCMatrix, WeightVector};

/// Matrix `Q` with `w^T Q w = sum_ij (a_ij w_j - w_i)^2`.
pub fn wlsm_quadratic_form(a: &PCMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let a_ij = a.get(i, j);
            q[(j, j)] += a_ij * a_ij;
            q[(i, i)] += 1.0;
            q[(i, j)] -= a_ij;
            q[(j, i)] -= a_ij;
        }
    }
    q
}

/// `sum_ij (a_ij w_j - w_i)^2` for the given (unnormalized) weights.
pub fn wlsm_objective(a: &PCMatrix, w: &[f64]) -> Result<f64> {
    let n = a.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r = a.get(i, j) * w[j] - w[i];
            total += r * r;
        }
    }
    Ok(total)
}

/// Solves `[2Q -1; 1^T 0] [w; lambda] = [0; 1]`.
fn kkt_solve(a: &PCMatrix) -> Result<(Vec<f64>, f64)> {
    let n = a.n();
    let q = wlsm_quadratic_form(a);
    let mut k = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = 2.0 * q[(i, j)];
        }
        k[(i, n)] = -1.0;
        k[(n, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = k.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let w: Vec<f64> = sol.iter().take(n).copied().collect();
    Ok((w, sol[n]))
}

/// Stationarity residual `||2Qw - lambda 1||_inf` and `|sum w - 1|` of a
/// candidate KKT point.
pub fn wlsm_kkt_residual(a: &PCMatrix, w: &[f64], lambda: f64) -> Result<(f64, f64)> {
    let n = a.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let q = wlsm_quadratic_form(a);
    let wv = DVector::from_column_slice(w);
    let stationarity = (2.0 * q * wv)
        .iter()
        .map(|v| (v - lambda).abs())
        .fold(0.0, f64::max);
    let feasibility = (w.iter().sum::<f64>() - 1.0).abs();
    Ok((stationarity, feasibility))
}

/// Weighted least squares weights: the unique minimizer of
/// `sum_ij (a_ij w_j - w_i)^2` on `sum w = 1`, obtained from one linear solve.
///
/// The multiplier `lambda` is reported in `eigenvalue`'s place as
/// `method_objective` is the criterion value; the raw multiplier is
/// recoverable with [`wlsm_kkt_residual`].
pub fn solve_wlsm(a: &PCMatrix) -> Result<SolveResult> {
    let (w, _lambda) = kkt_solve(a)?;
    if w.iter().any(|&v| v <= 0.0) {
        return Err(Error::NonPositiveSolution { weights: w });
    }
    let objective = wlsm_objective(a, &w)?;
    let weights = WeightVector::sum_one(w)?;
    Ok(SolveResult::closed_form(
        a,
        Method::Wlsm,
        weights,
        Some(objective),
        None,
        0,
    ))
}

/// Raw KKT solution `(w, lambda)` without positivity filtering.
pub fn wlsm_kkt_point(a: &PCMatrix) -> Result<(Vec<f64>, f64)> {
    kkt_solve(a)
}
