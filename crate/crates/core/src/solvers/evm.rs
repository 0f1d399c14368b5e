use super::{Method, SolveResult};
use crate::error::{Error, Result};
use crate::pcm::{PCMatrix, WeightVector};

pub const DEFAULT_EVM_TOL: f64 = 1e-12;
pub const DEFAULT_EVM_MAX_ITERS: usize = 10_000;

fn mat_vec(a: &PCMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.n();
    (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j) * x[j]).sum())
        .collect()
}

/// Principal eigenvector by power iteration from the uniform vector.
pub fn solve_evm(a: &PCMatrix, tol: f64) -> Result<SolveResult> {
    solve_evm_with(a, tol, DEFAULT_EVM_MAX_ITERS)
}

/// Power iteration stopping once successive sum-one iterates differ by at
/// most `tol` in sup-norm. The eigenvalue is `sum(A x)` for the final
/// sum-one iterate `x`.
pub fn solve_evm_with(a: &PCMatrix, tol: f64, max_iters: usize) -> Result<SolveResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "tol",
            value: tol,
        });
    }
    let n = a.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let y = mat_vec(a, &x);
        let s: f64 = y.iter().sum();
        let next: Vec<f64> = y.iter().map(|v| v / s).collect();
        change = next
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        x = next;
        if change <= tol {
            break;
        }
    }
    if change > tol {
        return Err(Error::NotConverged {
            iterations,
            residual: change,
        });
    }
    let lambda: f64 = mat_vec(a, &x).iter().sum();
    let weights = WeightVector::sum_one(x)?;
    Ok(SolveResult::closed_form(
        a,
        Method::Evm,
        weights,
        None,
        Some(lambda),
        iterations,
    ))
}

/// `||A w - lambda w||_inf` for sum-one `w`.
pub fn eigen_residual(a: &PCMatrix, w: &WeightVector, lambda: f64) -> f64 {
    let w = w.values();
    mat_vec(a, w)
        .iter()
        .zip(w)
        .map(|(aw, wi)| (aw - lambda * wi).abs())
        .fold(0.0, f64::max)
}
