//! Judgment scales, cross-scale mapping, Monte-Carlo scale experiments and
//! the search for least-squares problems with several local minima.

mod counterexample;
mod monte_carlo;

pub use counterexample::{search_counterexample, Counterexample};
pub use monte_carlo::{
    run_monte_carlo, MonteCarloAggregate, MonteCarloConfig, MonteCarloReport, TrialRecord,
    CSV_COLUMNS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of admissible judgment values `>= 1`; reciprocals are implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    name: String,
    values: Vec<f64>,
}

const MEMBERSHIP_TOL: f64 = 1e-9;

impl Scale {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.first() != Some(&1.0) {
            return Err(Error::InvalidConfig(format!(
                "scale `{name}` must start at 1"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "scale `{name}` values must be finite, distinct and ascending"
            )));
        }
        Ok(Self { name, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn top(&self) -> f64 {
        *self.values.last().expect("scale is never empty")
    }

    /// Scale values and their reciprocals, ascending, without duplicating 1.
    pub fn admissible_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.values[1..].iter().rev().map(|v| 1.0 / v).collect();
        out.extend_from_slice(&self.values);
        out
    }

    /// Matches `v` against the scale and its reciprocals (relative 1e-9).
    /// Returns the canonical admissible value.
    pub fn canonical(&self, v: f64) -> Option<f64> {
        self.admissible_values()
            .into_iter()
            .find(|&c| (v - c).abs() <= MEMBERSHIP_TOL * c)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.canonical(v).is_some()
    }

    /// Nearest admissible value in log distance; ties go to the smaller value.
    pub fn snap(&self, v: f64) -> f64 {
        let lv = v.ln();
        let mut best = (f64::INFINITY, f64::INFINITY);
        for c in self.admissible_values() {
            let d = (lv - c.ln()).abs();
            // ascending iteration + strict comparison keeps the smaller value on ties
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }
}

/// The built-in scales: `1-3`, `1-3-half`, `1-5` and `1-9`.
pub fn builtin_scales() -> Vec<Scale> {
    let int = |top: u32| (1..=top).map(f64::from).collect::<Vec<_>>();
    vec![
        Scale::new("1-3", int(3)).expect("valid"),
        Scale::new("1-3-half", vec![1.0, 1.5, 2.0, 2.5, 3.0]).expect("valid"),
        Scale::new("1-5", int(5)).expect("valid"),
        Scale::new("1-9", int(9)).expect("valid"),
    ]
}

/// Looks up a built-in scale; accepts an optional `scale-` prefix.
pub fn scale_by_name(name: &str) -> Result<Scale> {
    let key = name.strip_prefix("scale-").unwrap_or(name);
    builtin_scales()
        .into_iter()
        .find(|s| s.name == key)
        .ok_or_else(|| Error::UnknownScale {
            name: name.to_string(),
            available: builtin_scales()
                .iter()
                .map(|s| s.name.clone())
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Affine map of `[1, from.top]` onto `[1, to.top]`, extended to reciprocals
/// by `m(1/v) = 1/m(v)`.
///
/// Demonstration-grade: there is no canonical correspondence between two
/// judgment scales, this is merely the simplest monotone one. For 1-5 to
/// 1-3 it gives 1, 1.5, 2, 2.5, 3.
pub fn map_scale(v: f64, from: &Scale, to: &Scale) -> Result<f64> {
    let out_of_scale = || Error::OutOfScale {
        value: v,
        scale: from.name.clone(),
    };
    if !(v.is_finite() && v > 0.0) {
        return Err(out_of_scale());
    }
    let (x, inverted) = if v >= 1.0 {
        (v, false)
    } else {
        (1.0 / v, true)
    };
    if x > from.top() * (1.0 + MEMBERSHIP_TOL) {
        return Err(out_of_scale());
    }
    let x = x.min(from.top());
    let mapped = if from.top() == 1.0 {
        1.0
    } else {
        1.0 + (x - 1.0) * (to.top() - 1.0) / (from.top() - 1.0)
    };
    Ok(if inverted { 1.0 / mapped } else { mapped })
}
