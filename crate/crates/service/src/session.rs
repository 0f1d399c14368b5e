//! Elicitation sessions and the report recomputed after every judgment.

use std::collections::BTreeMap;

use pcx_core::convexity::certify;
use pcx_core::pcm::{triad_inconsistency, triads, ACCEPTABLE_INCONSISTENCY};
use pcx_core::scales::{scale_by_name, Scale};
use pcx_core::solvers::solve;
use pcx_core::{
    ConvexityReport, InconsistencyReport, Method, PCMatrix, SolveOptions, SolveResult, TriadReport,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const MIN_ALTERNATIVES: usize = 2;
/// Keeps triad enumeration (at most 1140 triads) interactive.
pub const MAX_ALTERNATIVES: usize = 20;

/// A judged pair, stored with `i < j` and `value = a_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub alternatives: Vec<String>,
    pub scale: Scale,
    /// Sorted by `(i, j)`, at most one entry per pair.
    pub judgments: Vec<Judgment>,
    /// Milliseconds since the Unix epoch.
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
}

impl Session {
    pub fn new(
        id: String,
        alternatives: Vec<String>,
        scale_name: &str,
        now_ms: u64,
    ) -> Result<Self> {
        let n = alternatives.len();
        if !(MIN_ALTERNATIVES..=MAX_ALTERNATIVES).contains(&n) {
            return Err(ServiceError::BadRequest(format!(
                "number of alternatives must be between {MIN_ALTERNATIVES} and {MAX_ALTERNATIVES}, got {n}"
            )));
        }
        if alternatives.iter().any(|a| a.trim().is_empty()) {
            return Err(ServiceError::BadRequest(
                "alternative names must be non-empty".into(),
            ));
        }
        for (k, a) in alternatives.iter().enumerate() {
            if alternatives[..k].contains(a) {
                return Err(ServiceError::BadRequest(format!(
                    "duplicate alternative `{a}`"
                )));
            }
        }
        let scale =
            scale_by_name(scale_name).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        Ok(Self {
            id,
            alternatives,
            scale,
            judgments: Vec::new(),
            created_at_ms: now_ms,
            updated_at_ms: now_ms,
        })
    }

    pub fn n(&self) -> usize {
        self.alternatives.len()
    }

    fn pair_count(&self) -> usize {
        self.n() * (self.n() - 1) / 2
    }

    pub fn is_complete(&self) -> bool {
        self.judgments.len() == self.pair_count()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (lo, hi, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        let k = self
            .judgments
            .binary_search_by(|x| (x.i, x.j).cmp(&(lo, hi)))
            .ok()?;
        let v = self.judgments[k].value;
        Some(if flip { 1.0 / v } else { v })
    }

    /// Pairs `[i, j]` (`i < j`) still awaiting a judgment.
    pub fn pending(&self) -> Vec<[usize; 2]> {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| [i, j]))
            .filter(|&[i, j]| self.get(i, j).is_none())
            .collect()
    }

    /// Records "alternative `i` is `value` times as important as `j`",
    /// overwriting any earlier judgment of the pair.
    pub fn set_judgment(&mut self, i: usize, j: usize, value: f64, now_ms: u64) -> Result<()> {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return Err(ServiceError::BadRequest(format!(
                "pair ({i}, {j}) is not a pair of distinct alternatives in 0..{n}"
            )));
        }
        let off_scale = || ServiceError::OffScale {
            value,
            scale: self.scale.name().to_string(),
            admissible: format_values(&self.scale.admissible_values()),
        };
        let canonical = self.scale.canonical(value).ok_or_else(off_scale)?;
        let (lo, hi, upper) = if i < j {
            (i, j, canonical)
        } else {
            let inv = 1.0 / canonical;
            (j, i, self.scale.canonical(inv).unwrap_or(inv))
        };
        match self
            .judgments
            .binary_search_by(|x| (x.i, x.j).cmp(&(lo, hi)))
        {
            Ok(k) => self.judgments[k].value = upper,
            Err(k) => self.judgments.insert(
                k,
                Judgment {
                    i: lo,
                    j: hi,
                    value: upper,
                },
            ),
        }
        self.updated_at_ms = now_ms;
        Ok(())
    }

    /// The assembled matrix once every pair is judged.
    pub fn matrix(&self) -> Option<PCMatrix> {
        if !self.is_complete() {
            return None;
        }
        let upper = self.judgments.iter().map(|x| x.value).collect();
        PCMatrix::new(self.n(), upper, Some(self.alternatives.clone())).ok()
    }

    /// Inconsistent triads whose three pairs are all judged, worst first.
    pub fn suggestions(&self) -> Vec<TriadReport> {
        let mut out = Vec::new();
        for (i, k, j) in triads(self.n()) {
            let (Some(a_ik), Some(a_kj), Some(a_ij)) =
                (self.get(i, k), self.get(k, j), self.get(i, j))
            else {
                continue;
            };
            let value = triad_inconsistency(a_ik, a_ij, a_kj).expect("scale values are positive");
            if value > 0.0 {
                out.push(TriadReport {
                    i,
                    k,
                    j,
                    a_ik,
                    a_kj,
                    a_ij,
                    value,
                });
            }
        }
        // stable: equal values keep lexicographic triad order
        out.sort_by(|x, y| y.value.total_cmp(&x.value));
        out
    }

    pub fn report(&self) -> SessionReport {
        let matrix = self.matrix();
        let inconsistency = matrix
            .as_ref()
            .map(|a| a.inconsistency_with(ACCEPTABLE_INCONSISTENCY, false));
        let certification = matrix.as_ref().map(certify);
        let weights = matrix.as_ref().map(|a| {
            let opts = SolveOptions::default();
            Method::ALL
                .into_iter()
                .map(|m| {
                    let outcome = match solve(a, m, &opts) {
                        Ok(r) => MethodOutcome::Solved(Box::new(r)),
                        Err(e) => MethodOutcome::Failed {
                            error: e.to_string(),
                        },
                    };
                    (m, outcome)
                })
                .collect()
        });
        SessionReport {
            session_id: self.id.clone(),
            alternatives: self.alternatives.clone(),
            scale: self.scale.clone(),
            judgments: self.judgments.clone(),
            pending: self.pending(),
            complete: matrix.is_some(),
            inconsistency,
            certification,
            weights,
            suggestions: self.suggestions(),
        }
    }
}

fn format_values(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 {
                format!("{v}")
            } else {
                let inv = 1.0 / v;
                if inv.fract() == 0.0 {
                    format!("1/{inv}")
                } else {
                    format!("{v}")
                }
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Result of one weighting method on a complete session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodOutcome {
    Solved(Box<SolveResult>),
    Failed { error: String },
}

impl MethodOutcome {
    pub fn result(&self) -> Option<&SolveResult> {
        match self {
            Self::Solved(r) => Some(r),
            Self::Failed { .. } => None,
        }
    }
}

/// Everything a client needs to render the session. Contains no timestamps,
/// so equal judgments always give byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub alternatives: Vec<String>,
    pub scale: Scale,
    pub judgments: Vec<Judgment>,
    pub pending: Vec<[usize; 2]>,
    pub complete: bool,
    /// Present iff `complete`.
    pub inconsistency: Option<InconsistencyReport>,
    /// Present iff `complete`.
    pub certification: Option<ConvexityReport>,
    /// Present iff `complete`; keyed by method.
    pub weights: Option<BTreeMap<Method, MethodOutcome>>,
    pub suggestions: Vec<TriadReport>,
}
