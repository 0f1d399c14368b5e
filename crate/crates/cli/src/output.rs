//! Machine-readable (`--json`) output documents and text helpers.

use pcx_core::oracle::GridMinimum;
use pcx_core::solvers::LogPoint;
use pcx_core::{Method, PCMatrix, SolveResult, WeightVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub method: Method,
    pub error: String,
}

/// `solve --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub n: usize,
    pub labels: Option<Vec<String>>,
    pub results: Vec<SolveResult>,
    pub failures: Vec<MethodFailure>,
}

/// `verify --json`. Log-weights are centred; indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub n: usize,
    pub solver_objective: f64,
    pub grid_objective: f64,
    pub solver_t: LogPoint,
    pub grid: GridMinimum,
    pub max_log_distance: f64,
    pub objective_gap: f64,
    pub tolerance: f64,
    pub agree: bool,
}

pub fn names(a: &PCMatrix) -> Vec<String> {
    a.labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| (1..=a.n()).map(|k| k.to_string()).collect())
}

pub fn weights_line(names: &[String], w: &WeightVector) -> String {
    names
        .iter()
        .zip(w.values())
        .map(|(name, v)| format!("{name}: {v:.6}"))
        .collect::<Vec<_>>()
        .join("  ")
}

/// Compact number: integers as integers, otherwise up to 10 significant digits.
pub fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.10}");
        s.trim_end_matches('0').to_string()
    }
}
