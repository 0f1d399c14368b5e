//! Priority-vector derivation.
//!
//! Four methods are available: least squares ([`solve_lsm`]) minimized in
//! log coordinates on the hyperplane `sum t = 0`, weighted least squares
//! ([`solve_wlsm`]) through its KKT system, logarithmic least squares
//! ([`solve_llsm`]) via row geometric means, and the principal eigenvector
//! ([`solve_evm`]) by power iteration.

mod evm;
mod llsm;
mod lsm;
mod wlsm;

pub use evm::{eigen_residual, solve_evm, solve_evm_with, DEFAULT_EVM_MAX_ITERS, DEFAULT_EVM_TOL};
pub use llsm::{llsm_objective, solve_llsm};
pub use lsm::{
    census_local_minima, is_local_minimum, local_search, phi_gradient, phi_hessian, phi_objective,
    solve_lsm, start_points, Census, LocalSearch,
};
pub use wlsm::{
    solve_wlsm, wlsm_kkt_point, wlsm_kkt_residual, wlsm_objective, wlsm_quadratic_form,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcm::{PCMatrix, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Lsm,
    Wlsm,
    Llsm,
    Evm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lsm, Method::Wlsm, Method::Llsm, Method::Evm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lsm => "LSM",
            Method::Wlsm => "WLSM",
            Method::Llsm => "LLSM",
            Method::Evm => "EVM",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs for the least-squares local search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when the sup-norm of the projected gradient drops to this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Number of random starts. `None` picks 1 for certified matrices and
    /// [`DEFAULT_UNCERTIFIED_STARTS`] otherwise.
    pub starts: Option<usize>,
    pub start_seed: u64,
    /// Sup-norm distance in log space beyond which two minimizers are distinct.
    pub distinct_tol: f64,
}

pub const DEFAULT_UNCERTIFIED_STARTS: usize = 20;

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 500,
            starts: None,
            start_seed: 0,
            distinct_tol: 1e-4,
        }
    }
}

impl SolveOptions {
    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = Some(starts);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.start_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("grad_tol", self.grad_tol)?;
        positive("distinct_tol", self.distinct_tol)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.starts == Some(0) {
            return Err(Error::InvalidConfig("starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Point of the hyperplane `sum t = 0` in log-weight coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogPoint(Vec<f64>);

impl LogPoint {
    /// Accepts `t` only if it already lies on the hyperplane.
    pub fn new(t: Vec<f64>) -> Result<Self> {
        let sum: f64 = t.iter().sum();
        let scale = t.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if t.iter().any(|x| !x.is_finite()) || sum.abs() > 1e-12 * scale {
            return Err(Error::InvalidConfig(format!(
                "log point is not on the hyperplane (sum = {sum:e})"
            )));
        }
        Ok(Self(t))
    }

    /// Projects `t` onto the hyperplane by subtracting its mean.
    pub fn centered(mut t: Vec<f64>) -> Self {
        center(&mut t);
        Self(t)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> WeightVector {
        WeightVector::from_logs(&self.0).expect("finite logs give positive weights")
    }

    pub fn sup_distance(&self, other: &LogPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn center(t: &mut [f64]) {
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    t.iter_mut().for_each(|x| *x -= mean);
}

/// A minimizer found by the multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub t: LogPoint,
    pub objective: f64,
    /// Number of starts that converged into this cluster.
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    /// Sum-one weights.
    pub weights: WeightVector,
    /// The same ratios under product-one normalization.
    pub weights_product: WeightVector,
    /// Least-squares distance `sum_ij (a_ij - w_i/w_j)^2` at the solution.
    pub objective: f64,
    /// The method's own criterion (absent for the eigenvector method).
    pub method_objective: Option<f64>,
    pub eigenvalue: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub minima_found: Vec<LocalMinimum>,
    pub unique: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub census: Option<Census>,
}

impl SolveResult {
    fn closed_form(
        a: &PCMatrix,
        method: Method,
        weights: WeightVector,
        method_objective: Option<f64>,
        eigenvalue: Option<f64>,
        iterations: usize,
    ) -> Self {
        let objective = objective_lsm(a, &weights).expect("dimensions checked by caller");
        Self {
            method,
            weights_product: weights.renormalized(crate::pcm::Normalization::ProductOne),
            weights: weights.renormalized(crate::pcm::Normalization::SumOne),
            objective,
            method_objective,
            eigenvalue,
            iterations,
            converged: true,
            minima_found: Vec::new(),
            unique: true,
            census: None,
        }
    }
}

/// Least-squares distance `sum_i sum_j (a_ij - w_i/w_j)^2`, diagonal included.
pub fn objective_lsm(a: &PCMatrix, w: &WeightVector) -> Result<f64> {
    let n = a.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let w = w.values();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r = a.get(i, j) - w[i] / w[j];
            total += r * r;
        }
    }
    Ok(total)
}

/// Runs one method with default options.
pub fn solve(a: &PCMatrix, method: Method, opts: &SolveOptions) -> Result<SolveResult> {
    match method {
        Method::Lsm => solve_lsm(a, opts),
        Method::Wlsm => solve_wlsm(a),
        Method::Llsm => Ok(solve_llsm(a)),
        Method::Evm => solve_evm(a, DEFAULT_EVM_TOL),
    }
}
