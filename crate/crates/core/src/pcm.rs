//! Reciprocal pairwise comparison matrices and the distance-based
//! inconsistency indicator.
//!
//! A [`PCMatrix`] stores only its strict upper triangle. The diagonal is
//! implicitly 1 and every lower entry is computed as the reciprocal of its
//! mirror, so reciprocity can never be violated by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance used by [`PCMatrix::is_consistent`].
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-10;

/// Acceptability threshold for the triad indicator ("off by one grade").
pub const ACCEPTABLE_INCONSISTENCY: f64 = 1.0 / 3.0;

/// Position of `a_ij` (`i < j`) in the row-major upper triangle.
#[inline]
pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Number of strictly upper-triangular entries of an `n x n` matrix.
#[inline]
pub fn upper_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn check_entry(index: usize, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveEntry { index, value })
    }
}

/// Positive reciprocal judgment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PCMatrixRepr", into = "PCMatrixRepr")]
pub struct PCMatrix {
    n: usize,
    upper: Vec<f64>,
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct PCMatrixRepr {
    n: usize,
    upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<PCMatrixRepr> for PCMatrix {
    type Error = Error;

    fn try_from(r: PCMatrixRepr) -> Result<Self> {
        PCMatrix::new(r.n, r.upper, r.labels)
    }
}

impl From<PCMatrix> for PCMatrixRepr {
    fn from(m: PCMatrix) -> Self {
        PCMatrixRepr {
            n: m.n,
            upper: m.upper,
            labels: m.labels,
        }
    }
}

impl PCMatrix {
    /// Builds a matrix from its row-major upper triangle `a_12, a_13, ..., a_(n-1)n`.
    pub fn new(n: usize, upper: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooSmall { n });
        }
        if upper.len() != upper_len(n) {
            return Err(Error::DimensionMismatch {
                expected: upper_len(n),
                found: upper.len(),
            });
        }
        for (idx, &v) in upper.iter().enumerate() {
            check_entry(idx, v)?;
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.len(),
                });
            }
        }
        Ok(Self { n, upper, labels })
    }

    /// Consistent matrix `a_ij = w_i / w_j` generated by a weight vector.
    pub fn from_weights(w: &WeightVector) -> Self {
        let w = w.values();
        let n = w.len();
        let mut upper = Vec::with_capacity(upper_len(n));
        for i in 0..n {
            for j in (i + 1)..n {
                upper.push(w[i] / w[j]);
            }
        }
        Self {
            n,
            upper,
            labels: None,
        }
    }

    /// All-ones matrix of order `n`.
    pub fn ones(n: usize) -> Result<Self> {
        Self::new(n, vec![1.0; upper_len(n)], None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Entry `a_ij` of the full matrix.
    ///
    /// # Panics
    /// If `i` or `j` is out of range.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "index out of range");
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => self.upper[upper_index(self.n, i, j)],
            std::cmp::Ordering::Greater => 1.0 / self.upper[upper_index(self.n, j, i)],
        }
    }

    /// Dense row-major copy of the full matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Iterates `(i, j, a_ij)` over the strict upper triangle.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.upper.iter().copied())
            .map(|((i, j), a)| (i, j, a))
    }

    /// Largest entry of the full matrix, counting reciprocals.
    pub fn max_entry(&self) -> f64 {
        self.upper
            .iter()
            .map(|&a| a.max(1.0 / a))
            .fold(1.0, f64::max)
    }

    /// Relabels alternatives: alternative `perm[k]` of `self` becomes
    /// alternative `k` of the result.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidConfig(format!(
                    "{perm:?} is not a permutation of 0..{}",
                    self.n
                )));
            }
            seen[p] = true;
        }
        let mut upper = Vec::with_capacity(self.upper.len());
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                upper.push(self.get(perm[i], perm[j]));
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| perm.iter().map(|&p| l[p].clone()).collect());
        Ok(Self {
            n: self.n,
            upper,
            labels,
        })
    }

    /// Transitivity check `a_ik * a_kj == a_ij` over every triad, compared
    /// relative to the larger side.
    pub fn is_consistent(&self, tol: f64) -> bool {
        triads(self.n).all(|(i, k, j)| {
            let direct = self.get(i, j);
            let path = self.get(i, k) * self.get(k, j);
            (path - direct).abs() <= tol * direct.max(path)
        })
    }

    /// Distance-based inconsistency with the default 1/3 acceptability threshold.
    pub fn inconsistency(&self) -> InconsistencyReport {
        self.inconsistency_with(ACCEPTABLE_INCONSISTENCY, false)
    }

    /// Maximum triad inconsistency, optionally keeping every triad sorted by value.
    pub fn inconsistency_with(&self, threshold: f64, keep_all: bool) -> InconsistencyReport {
        let mut worst: Option<TriadReport> = None;
        let mut all = Vec::new();
        for (i, k, j) in triads(self.n) {
            let t = TriadReport::new(i, k, j, self.get(i, k), self.get(k, j), self.get(i, j));
            // strict comparison keeps the lexicographically first argmax
            if worst.as_ref().is_none_or(|w| t.value > w.value) {
                worst = Some(t.clone());
            }
            if keep_all {
                all.push(t);
            }
        }
        let global_value = worst.as_ref().map_or(0.0, |w| w.value);
        let all_triads = keep_all.then(|| {
            // stable sort preserves lexicographic order among equal values
            all.sort_by(|a, b| b.value.total_cmp(&a.value));
            all
        });
        InconsistencyReport {
            global_value,
            worst,
            all_triads,
            threshold,
            acceptable: global_value <= threshold,
        }
    }
}

/// All triads `(i, k, j)` with `i < k < j`, in lexicographic order.
pub fn triads(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).flat_map(move |k| ((k + 1)..n).map(move |j| (i, k, j))))
}

fn triad_value(a_ik: f64, a_kj: f64, a_ij: f64) -> f64 {
    // min(|1 - x|, |1 - 1/x|) equals 1 - min(x, 1/x) for x > 0
    let x = a_ij / (a_ik * a_kj);
    1.0 - x.min(1.0 / x)
}

/// Inconsistency of a single triad `{a_ik, a_kj, a_ij}`:
/// `min(|1 - a_ij/(a_ik a_kj)|, |1 - a_ik a_kj / a_ij|)`.
///
/// Arguments follow the upper-triangle order of a 3x3 matrix
/// (`a_12, a_13, a_23`).
pub fn triad_inconsistency(a_ik: f64, a_ij: f64, a_kj: f64) -> Result<f64> {
    check_entry(0, a_ik)?;
    check_entry(1, a_ij)?;
    check_entry(2, a_kj)?;
    Ok(triad_value(a_ik, a_kj, a_ij))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriadReport {
    pub i: usize,
    pub k: usize,
    pub j: usize,
    pub a_ik: f64,
    pub a_kj: f64,
    pub a_ij: f64,
    pub value: f64,
}

impl TriadReport {
    fn new(i: usize, k: usize, j: usize, a_ik: f64, a_kj: f64, a_ij: f64) -> Self {
        Self {
            i,
            k,
            j,
            a_ik,
            a_kj,
            a_ij,
            value: triad_value(a_ik, a_kj, a_ij),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub global_value: f64,
    /// `None` only for 2x2 matrices, which have no triads.
    pub worst: Option<TriadReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_triads: Option<Vec<TriadReport>>,
    pub threshold: f64,
    pub acceptable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    SumOne,
    ProductOne,
}

/// Positive priority vector with a fixed normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    normalization: Normalization,
}

impl WeightVector {
    /// Validates positivity and rescales `raw` to the requested normalization.
    pub fn new(raw: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((idx, &v)) = raw
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidWeights(format!(
                "component {idx} is not finite and positive ({v})"
            )));
        }
        let w = match normalization {
            Normalization::SumOne => {
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            }
            Normalization::ProductOne => {
                let mean_log = raw.iter().map(|v| v.ln()).sum::<f64>() / raw.len() as f64;
                raw.iter().map(|v| (v.ln() - mean_log).exp()).collect()
            }
        };
        Ok(Self { w, normalization })
    }

    pub fn sum_one(raw: Vec<f64>) -> Result<Self> {
        Self::new(raw, Normalization::SumOne)
    }

    pub fn product_one(raw: Vec<f64>) -> Result<Self> {
        Self::new(raw, Normalization::ProductOne)
    }

    /// Weights `exp(t_i)` under product-one normalization.
    pub fn from_logs(t: &[f64]) -> Result<Self> {
        Self::product_one(t.iter().map(|x| x.exp()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn renormalized(&self, normalization: Normalization) -> Self {
        Self::new(self.w.clone(), normalization).expect("valid weights stay valid")
    }

    /// Log-weights centred on the hyperplane `sum t = 0`.
    pub fn logs(&self) -> Vec<f64> {
        let logs: Vec<f64> = self.w.iter().map(|v| v.ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        logs.into_iter().map(|t| t - mean).collect()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            w: perm.iter().map(|&p| self.w[p]).collect(),
            normalization: self.normalization,
        }
    }

    /// Largest absolute componentwise difference after bringing both vectors
    /// to sum-one normalization.
    pub fn max_abs_diff(&self, other: &WeightVector) -> f64 {
        let a = self.renormalized(Normalization::SumOne);
        let b = other.renormalized(Normalization::SumOne);
        a.w.iter()
            .zip(&b.w)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Parses a positive judgment written as a decimal (`"2.5"`) or a fraction
/// (`"1/3"`). Returns `None` for anything else, including zero and negatives.
pub fn parse_ratio(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    (v.is_finite() && v > 0.0).then_some(v)
}
