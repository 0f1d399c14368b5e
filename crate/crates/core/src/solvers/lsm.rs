use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DEFAULT_UNCERTIFIED_STARTS;
use super::{center, LocalMinimum, LogPoint, Method, SolveOptions, SolveResult};
use crate::convexity::{self, f_a_prime_unchecked, f_a_second_unchecked, f_a_unchecked, Verdict};
use crate::error::{Error, Result};
use crate::pcm::{Normalization, PCMatrix};

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

fn check_dim(a: &PCMatrix, t: &[f64]) -> Result<()> {
    if t.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: t.len(),
        });
    }
    Ok(())
}

fn objective_raw(a: &PCMatrix, t: &[f64]) -> f64 {
    a.upper_entries()
        .map(|(i, j, a_ij)| f_a_unchecked(t[i] - t[j], a_ij))
        .sum()
}

/// `Phi(t + step d) - Phi(t)` evaluated term by term through `expm1`, so the
/// difference keeps full relative precision even when it is far below the
/// rounding level of `Phi` itself.
fn objective_delta(a: &PCMatrix, t: &[f64], d: &[f64], step: f64) -> f64 {
    a.upper_entries()
        .map(|(i, j, a_ij)| {
            let x = t[i] - t[j];
            let dx = step * (d[i] - d[j]);
            let u = x.exp();
            let du = u * dx.exp_m1();
            let v = (-x).exp();
            let dv = v * (-dx).exp_m1();
            du * (2.0 * u + du - 2.0 * a_ij) + dv * (2.0 * v + dv - 2.0 / a_ij)
        })
        .sum()
}

fn gradient_raw(a: &PCMatrix, t: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; a.n()];
    for (i, j, a_ij) in a.upper_entries() {
        let d = f_a_prime_unchecked(t[i] - t[j], a_ij);
        g[i] += d;
        g[j] -= d;
    }
    center(&mut g);
    g
}

fn hessian_raw(a: &PCMatrix, t: &[f64]) -> DMatrix<f64> {
    let n = a.n();
    let mut h = DMatrix::zeros(n, n);
    for (i, j, a_ij) in a.upper_entries() {
        let c = f_a_second_unchecked(t[i] - t[j], a_ij);
        h[(i, i)] += c;
        h[(j, j)] += c;
        h[(i, j)] -= c;
        h[(j, i)] -= c;
    }
    h
}

/// Log-domain objective `sum_{i<j} f_{a_ij}(t_i - t_j)`.
pub fn phi_objective(a: &PCMatrix, p: &LogPoint) -> Result<f64> {
    check_dim(a, p.as_slice())?;
    Ok(objective_raw(a, p.as_slice()))
}

/// Gradient of [`phi_objective`] projected onto the hyperplane.
pub fn phi_gradient(a: &PCMatrix, p: &LogPoint) -> Result<Vec<f64>> {
    check_dim(a, p.as_slice())?;
    Ok(gradient_raw(a, p.as_slice()))
}

/// Hessian of [`phi_objective`]. Rows sum to zero, so the all-ones vector
/// is always in its kernel.
pub fn phi_hessian(a: &PCMatrix, p: &LogPoint) -> Result<DMatrix<f64>> {
    check_dim(a, p.as_slice())?;
    Ok(hessian_raw(a, p.as_slice()))
}

/// `H + 11^T/n` is positive definite exactly when `H` restricted to the
/// hyperplane is, since the hyperplane is an invariant subspace of `H`.
fn lifted_cholesky(h: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = h.nrows();
    let lifted = h.add_scalar(1.0 / n as f64);
    lifted.cholesky()
}

/// `true` when the Hessian restricted to the hyperplane is positive definite.
pub fn is_local_minimum(a: &PCMatrix, p: &LogPoint) -> Result<bool> {
    Ok(lifted_cholesky(&phi_hessian(a, p)?).is_some())
}

/// Outcome of one damped-Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearch {
    pub t: LogPoint,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start followed by the running value after every
    /// accepted step (start value plus the accumulated exact decreases).
    pub history: Vec<f64>,
    /// Steps that fell back to the projected gradient direction.
    pub gradient_steps: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Damped Newton with Armijo backtracking from `start`; falls back to the
/// projected gradient direction when the restricted Hessian is not
/// positive definite.
pub fn local_search(a: &PCMatrix, start: &LogPoint, opts: &SolveOptions) -> Result<LocalSearch> {
    check_dim(a, start.as_slice())?;
    let mut t = start.as_slice().to_vec();
    center(&mut t);
    let mut f = objective_raw(a, &t);
    let mut history = vec![f];
    let mut gradient_steps = 0;
    let mut iterations = 0;
    let mut g = gradient_raw(a, &t);
    let mut gnorm = sup_norm(&g);
    let mut converged = gnorm <= opts.grad_tol;

    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let h = hessian_raw(a, &t);
        let newton = lifted_cholesky(&h).and_then(|chol| {
            let d = chol.solve(&DVector::from_vec(g.iter().map(|x| -x).collect()));
            let d: Vec<f64> = d.iter().copied().collect();
            (dot(&g, &d) < 0.0).then_some(d)
        });
        let mut candidates = Vec::with_capacity(2);
        if let Some(d) = newton {
            candidates.push((d, false));
        }
        candidates.push((g.iter().map(|x| -x).collect::<Vec<_>>(), true));

        let mut accepted = None;
        for (mut d, is_gradient) in candidates {
            center(&mut d);
            let slope = dot(&g, &d);
            if slope >= 0.0 {
                continue;
            }
            let mut step = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let delta = objective_delta(a, &t, &d, step);
                if delta <= ARMIJO_C1 * step * slope {
                    let trial: Vec<f64> = t.iter().zip(&d).map(|(x, dx)| x + step * dx).collect();
                    accepted = Some((trial, f + delta, is_gradient));
                    break;
                }
                step *= BACKTRACK;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((mut trial, f_trial, is_gradient)) = accepted else {
            // no descent possible at machine precision
            break;
        };
        center(&mut trial);
        gradient_steps += usize::from(is_gradient);
        t = trial;
        f = f_trial;
        history.push(f_trial);
        g = gradient_raw(a, &t);
        gnorm = sup_norm(&g);
        converged = gnorm <= opts.grad_tol;
    }
    Ok(LocalSearch {
        objective: objective_raw(a, &t),
        t: LogPoint::centered(t),
        grad_norm: gnorm,
        iterations,
        converged,
        history,
        gradient_steps,
    })
}

/// Random starts: each coordinate uniform on `[-log M, log M]` with `M` the
/// largest entry, then mean-centred. Start `k` draws from ChaCha stream `k`
/// of `seed`, so the set does not depend on evaluation order.
pub fn start_points(a: &PCMatrix, starts: usize, seed: u64) -> Vec<LogPoint> {
    let half = a.max_entry().ln();
    (0..starts)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let t: Vec<f64> = (0..a.n())
                .map(|_| {
                    if half > 0.0 {
                        rng.random_range(-half..=half)
                    } else {
                        0.0
                    }
                })
                .collect();
            LogPoint::centered(t)
        })
        .collect()
}

/// Bookkeeping of a multi-start run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub starts: usize,
    pub converged: usize,
    pub not_converged: usize,
    /// Converged to a stationary point whose restricted Hessian is not
    /// positive definite.
    pub saddles_rejected: usize,
    pub clusters: usize,
}

struct MultiStart {
    minima: Vec<LocalMinimum>,
    census: Census,
    runs: Vec<LocalSearch>,
}

fn resolve_starts(a: &PCMatrix, opts: &SolveOptions) -> usize {
    opts.starts
        .unwrap_or_else(|| match convexity::certify(a).verdict {
            Verdict::UniqueGuaranteed => 1,
            Verdict::Unknown => DEFAULT_UNCERTIFIED_STARTS,
        })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn multi_start(a: &PCMatrix, opts: &SolveOptions, starts: usize) -> Result<MultiStart> {
    opts.validate()?;
    let points = start_points(a, starts, opts.start_seed);
    let runs: Vec<LocalSearch> = points
        .par_iter()
        .map(|p| local_search(a, p, opts))
        .collect::<Result<_>>()?;

    let mut census = Census {
        starts,
        converged: 0,
        not_converged: 0,
        saddles_rejected: 0,
        clusters: 0,
    };
    let mut accepted: Vec<&LocalSearch> = Vec::new();
    for run in &runs {
        if !run.converged {
            census.not_converged += 1;
        } else if !is_local_minimum(a, &run.t)? {
            census.saddles_rejected += 1;
        } else {
            census.converged += 1;
            accepted.push(run);
        }
    }
    // order-independent merge: sort before clustering
    accepted.sort_by(|x, y| {
        x.objective
            .total_cmp(&y.objective)
            .then_with(|| lex_cmp(x.t.as_slice(), y.t.as_slice()))
    });
    let mut minima: Vec<LocalMinimum> = Vec::new();
    for run in accepted {
        match minima
            .iter_mut()
            .find(|m| m.t.sup_distance(&run.t) <= opts.distinct_tol)
        {
            Some(m) => m.hits += 1,
            None => minima.push(LocalMinimum {
                t: run.t.clone(),
                objective: run.objective,
                hits: 1,
            }),
        }
    }
    census.clusters = minima.len();
    Ok(MultiStart {
        minima,
        census,
        runs,
    })
}

/// Distinct local minimizers over `opts.starts` (or the automatic count),
/// best objective first. Non-converged starts and saddle points are left
/// out and only counted in the returned [`Census`].
pub fn census_local_minima(
    a: &PCMatrix,
    opts: &SolveOptions,
) -> Result<(Vec<LocalMinimum>, Census)> {
    let ms = multi_start(a, opts, resolve_starts(a, opts))?;
    Ok((ms.minima, ms.census))
}

/// Least-squares weights by multi-start damped Newton on the log-domain
/// objective. The best minimizer is reported; `unique` tells whether every
/// converged start landed in the same cluster.
pub fn solve_lsm(a: &PCMatrix, opts: &SolveOptions) -> Result<SolveResult> {
    let starts = resolve_starts(a, opts);
    let ms = multi_start(a, opts, starts)?;

    let (t, iterations, converged) = match ms.minima.first() {
        Some(best) => {
            let run = ms
                .runs
                .iter()
                .filter(|r| r.converged && r.t.sup_distance(&best.t) <= opts.distinct_tol)
                .min_by(|x, y| x.objective.total_cmp(&y.objective))
                .expect("cluster representative comes from a run");
            (best.t.clone(), run.iterations, true)
        }
        None => {
            let run = ms
                .runs
                .iter()
                .min_by(|x, y| x.grad_norm.total_cmp(&y.grad_norm))
                .expect("at least one start");
            (run.t.clone(), run.iterations, false)
        }
    };
    let weights_product = t.weights();
    let weights = weights_product.renormalized(Normalization::SumOne);
    let lsm_objective = super::objective_lsm(a, &weights)?;
    Ok(SolveResult {
        method: Method::Lsm,
        weights,
        weights_product,
        objective: lsm_objective,
        method_objective: Some(lsm_objective),
        eigenvalue: None,
        iterations,
        converged,
        unique: ms.minima.len() == 1,
        minima_found: ms.minima,
        census: Some(ms.census),
    })
}
