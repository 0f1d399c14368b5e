use super::{Method, SolveResult};
use crate::error::{Error, Result};
use crate::pcm::{PCMatrix, WeightVector};

/// `sum_{i<j} (log a_ij - t_i + t_j)^2` at log-weights `t`.
pub fn llsm_objective(a: &PCMatrix, t: &[f64]) -> Result<f64> {
    if t.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: t.len(),
        });
    }
    Ok(a.upper_entries()
        .map(|(i, j, a_ij)| {
            let r = a_ij.ln() - t[i] + t[j];
            r * r
        })
        .sum())
}

/// Logarithmic least squares: row geometric means, product-one normalized.
pub fn solve_llsm(a: &PCMatrix) -> SolveResult {
    let n = a.n();
    let t: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j).ln()).sum::<f64>() / n as f64)
        .collect();
    let weights = WeightVector::from_logs(&t).expect("finite logs");
    let objective = llsm_objective(a, &weights.logs()).expect("same dimension");
    SolveResult::closed_form(a, Method::Llsm, weights, Some(objective), None, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_means() {
        let a = PCMatrix::new(3, vec![3.0, 5.0, 3.0], None).unwrap();
        let r = solve_llsm(&a);
        let w = r.weights_product.values();
        let c = 15f64.cbrt();
        assert!((w[0] - c).abs() < 1e-12);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert!((w[2] - 1.0 / c).abs() < 1e-12);
        assert!((w[0] - 2.46621).abs() < 1e-5 && (w[2] - 0.405480).abs() < 1e-6);
        assert!((w.iter().product::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_ones() {
        let r = solve_llsm(&PCMatrix::ones(5).unwrap());
        assert!(r
            .weights_product
            .values()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(r.method_objective.unwrap() < 1e-30);
    }
}
