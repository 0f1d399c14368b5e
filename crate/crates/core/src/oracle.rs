//! Brute-force reference computations used to check the solvers.
//!
//! Nothing here shares code with the optimizers beyond the objective
//! definition itself: the grid search evaluates the log-domain objective
//! exhaustively, derivatives are checked by central differences, and the
//! closed-form methods are compared against plain iterative minimizers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcm::PCMatrix;
use crate::solvers::{phi_objective, wlsm_objective, wlsm_quadratic_form, LogPoint};

/// Largest matrix order the grid oracle accepts.
pub const MAX_GRID_N: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// The grid spans `+-half_width` around its centre on every free coordinate.
    pub half_width: f64,
    /// Odd, so the centre itself is a grid point.
    pub points_per_axis: usize,
    /// Each round shrinks `half_width` by 10x around the incumbent.
    pub refine_rounds: usize,
    /// Grid-local minima closer than this (or two grid steps) are merged.
    pub distinct_tol: f64,
}

impl GridSpec {
    /// Default grid for `a`: half width `log(max entry) + 1`, 601 points, 2 refinements.
    pub fn for_matrix(a: &PCMatrix) -> Self {
        Self {
            half_width: a.max_entry().ln() + 1.0,
            points_per_axis: 601,
            refine_rounds: 2,
            distinct_tol: 1e-4,
        }
    }

    pub fn with_points(mut self, points_per_axis: usize) -> Self {
        self.points_per_axis = points_per_axis;
        self
    }

    pub fn with_refine_rounds(mut self, rounds: usize) -> Self {
        self.refine_rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid half width must be positive, got {}",
                self.half_width
            )));
        }
        if self.points_per_axis < 3 || self.points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "points per axis must be odd and at least 3, got {}",
                self.points_per_axis
            )));
        }
        Ok(())
    }

    fn step(&self, half_width: f64) -> f64 {
        2.0 * half_width / (self.points_per_axis - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: LogPoint,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub t: LogPoint,
    pub objective: f64,
    /// Incumbent objective after the initial grid and after each refinement.
    pub round_objectives: Vec<f64>,
}

/// Full hyperplane point from the free coordinates `t_1..t_{n-1}`.
fn lift(free: &[f64]) -> Vec<f64> {
    let mut t = free.to_vec();
    t.push(-free.iter().sum::<f64>());
    t
}

fn grid_coords(
    idx: usize,
    m: usize,
    dims: usize,
    centre: &[f64],
    half: f64,
    step: f64,
) -> Vec<f64> {
    let mut rest = idx;
    let mut x = vec![0.0; dims];
    for d in (0..dims).rev() {
        let k = rest % m;
        rest /= m;
        x[d] = centre[d] - half + step * k as f64;
    }
    x
}

fn check_size(a: &PCMatrix, max: usize) -> Result<()> {
    if a.n() > max {
        return Err(Error::UnsupportedSize { n: a.n(), max });
    }
    Ok(())
}

fn objective_at(a: &PCMatrix, free: &[f64]) -> f64 {
    phi_objective(a, &LogPoint::centered(lift(free))).expect("dimension fixed by construction")
}

/// Exhaustive grid search for the global minimum of the log-domain
/// least-squares objective over the hyperplane (`n <= 4`).
pub fn grid_min_lsm(a: &PCMatrix, spec: &GridSpec) -> Result<GridMinimum> {
    spec.validate()?;
    check_size(a, MAX_GRID_N)?;
    let dims = a.n() - 1;
    let m = spec.points_per_axis;
    let total = m.pow(dims as u32);
    let mut centre = vec![0.0; dims];
    let mut half = spec.half_width;
    let mut best = (f64::INFINITY, centre.clone());
    let mut rounds = Vec::with_capacity(spec.refine_rounds + 1);

    for _ in 0..=spec.refine_rounds {
        let step = spec.step(half);
        // ties go to the smallest index, i.e. the lexicographically first point
        let (obj, idx) = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x = grid_coords(idx, m, dims, &centre, half, step);
                (objective_at(a, &x), idx)
            })
            .reduce(
                || (f64::INFINITY, usize::MAX),
                |p, q| match p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)) {
                    std::cmp::Ordering::Greater => q,
                    _ => p,
                },
            );
        let x = grid_coords(idx, m, dims, &centre, half, step);
        if obj <= best.0 {
            best = (obj, x);
        }
        rounds.push(best.0);
        centre = best.1.clone();
        half *= 0.1;
    }
    Ok(GridMinimum {
        t: LogPoint::centered(lift(&best.1)),
        objective: best.0,
        round_objectives: rounds,
    })
}

/// Interior grid points of a 3x3 problem that are strictly below all eight
/// neighbours, merged into clusters and sorted by objective.
pub fn grid_local_minima(a: &PCMatrix, spec: &GridSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    if a.n() != 3 {
        return Err(Error::UnsupportedSize { n: a.n(), max: 3 });
    }
    let m = spec.points_per_axis;
    let half = spec.half_width;
    let step = spec.step(half);
    let coord = |k: usize| -half + step * k as f64;
    let values: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|idx| objective_at(a, &[coord(idx / m), coord(idx % m)]))
        .collect();
    let at = |r: usize, c: usize| values[r * m + c];

    let mut found: Vec<GridPoint> = Vec::new();
    for r in 1..m - 1 {
        for c in 1..m - 1 {
            let v = at(r, c);
            let is_min = (-1isize..=1).all(|dr| {
                (-1isize..=1).all(|dc| {
                    (dr == 0 && dc == 0)
                        || v < at((r as isize + dr) as usize, (c as isize + dc) as usize)
                })
            });
            if is_min {
                found.push(GridPoint {
                    t: LogPoint::centered(lift(&[coord(r), coord(c)])),
                    objective: v,
                });
            }
        }
    }
    found.sort_by(|p, q| p.objective.total_cmp(&q.objective));
    let merge = spec.distinct_tol.max(2.0 * step);
    let mut merged: Vec<GridPoint> = Vec::new();
    for p in found {
        if merged.iter().all(|q| q.t.sup_distance(&p.t) > merge) {
            merged.push(p);
        }
    }
    Ok(merged)
}

/// Central difference of order 1 or 2.
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, x: f64, step: f64, order: u8) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "step",
            value: step,
        });
    }
    match order {
        1 => Ok((f(x + step) - f(x - step)) / (2.0 * step)),
        2 => Ok((f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step)),
        _ => Err(Error::InvalidConfig(format!(
            "finite difference order must be 1 or 2, got {order}"
        ))),
    }
}

/// Central-difference gradient of a multivariate function.
pub fn finite_diff_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Result<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            finite_diff(
                |s| {
                    let mut y = x.to_vec();
                    y[i] = s;
                    f(&y)
                },
                x[i],
                step,
                1,
            )
        })
        .collect()
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Minimizes the logarithmic least-squares criterion by fixed-step gradient
/// descent on the hyperplane. Returns centred log-weights.
pub fn minimize_llsm_numeric(a: &PCMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let mut t = vec![0.0; n];
    // curvature on the hyperplane is 2n, so this step contracts by 1/2
    let rate = 0.25 / n as f64;
    for _ in 0..max_iters {
        let mut g = vec![0.0; n];
        for (i, j, a_ij) in a.upper_entries() {
            let r = a_ij.ln() - t[i] + t[j];
            g[i] -= 2.0 * r;
            g[j] += 2.0 * r;
        }
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        t.iter_mut().zip(&g).for_each(|(x, gi)| *x -= rate * gi);
        if gmax <= tol {
            let mean = t.iter().sum::<f64>() / n as f64;
            return Ok(t.into_iter().map(|x| x - mean).collect());
        }
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual: f64::NAN,
    })
}

/// Minimizes `w^T Q w` on `sum w = 1` by steepest descent with exact line
/// search along the projected gradient.
pub fn minimize_wlsm_numeric(a: &PCMatrix, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let q = wlsm_quadratic_form(a);
    let mut w = vec![1.0 / n as f64; n];
    for _ in 0..max_iters {
        let qw: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)] * w[j]).sum())
            .collect();
        let mut g: Vec<f64> = qw.iter().map(|v| 2.0 * v).collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        g.iter_mut().for_each(|v| *v -= mean);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= tol {
            return Ok(w);
        }
        let qg: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)] * g[j]).sum())
            .collect();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let gqg: f64 = g.iter().zip(&qg).map(|(x, y)| x * y).sum();
        if gqg <= 0.0 {
            return Err(Error::SingularSystem);
        }
        let alpha = gg / (2.0 * gqg);
        w.iter_mut().zip(&g).for_each(|(x, gi)| *x -= alpha * gi);
    }
    Err(Error::NotConverged {
        iterations: max_iters,
        residual: f64::NAN,
    })
}

/// Counts random feasible perturbations `w + d` (`sum d = 0`, positivity
/// kept) whose weighted least-squares objective beats `w` by more than
/// rounding. Zero means no counterexample to optimality was found.
pub fn wlsm_perturbation_violations(
    a: &PCMatrix,
    w: &[f64],
    trials: usize,
    seed: u64,
) -> Result<usize> {
    let base = wlsm_objective(a, w)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let mut violations = 0;
    for k in 0..trials {
        // magnitudes from 1e-1 down to 1e-7 of the smallest weight
        let scale = wmin * 10f64.powi(-1 - (k % 7) as i32);
        let mut d: Vec<f64> = (0..w.len())
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        d.iter_mut().for_each(|x| *x -= mean);
        let trial: Vec<f64> = w.iter().zip(&d).map(|(x, dx)| x + dx).collect();
        if trial.iter().any(|&v| v <= 0.0) {
            continue;
        }
        if wlsm_objective(a, &trial)? < base - 1e-14 * base.max(1.0) {
            violations += 1;
        }
    }
    Ok(violations)
}
