use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexity::{certify, Verdict};
use crate::error::{Error, Result};
use crate::oracle::{grid_local_minima, GridPoint, GridSpec};
use crate::pcm::PCMatrix;
use crate::solvers::{census_local_minima, LocalMinimum, SolveOptions};

/// Newton starts per candidate.
const CANDIDATE_STARTS: usize = 20;

/// A 3x3 matrix whose least-squares problem has at least two local minima,
/// confirmed both by multi-start Newton and by the grid oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub matrix: PCMatrix,
    pub newton_minima: Vec<LocalMinimum>,
    pub grid_minima: Vec<GridPoint>,
    /// Candidates drawn before this one was found (1-based count).
    pub candidates_tried: usize,
}

fn candidate(lambda_min: f64, seed: u64, k: usize) -> PCMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let top = rng.random_range(lambda_min..=2.0 * lambda_min);
    let span = top.ln();
    let pos = rng.random_range(0..3usize);
    let flip = rng.random_bool(0.5);
    let upper: Vec<f64> = (0..3)
        .map(|idx| {
            if idx == pos {
                if flip {
                    1.0 / top
                } else {
                    top
                }
            } else {
                rng.random_range(-span..=span).exp()
            }
        })
        .collect();
    PCMatrix::new(3, upper, None).expect("positive entries")
}

/// Random search over 3x3 matrices whose largest entry lies in
/// `[lambda_min, 2 lambda_min]`. Returns the first matrix with two or more
/// local minima, or `None` once `budget` candidates have been tried.
/// Candidates certified unique are skipped without solving.
pub fn search_counterexample(
    lambda_min: f64,
    budget: usize,
    seed: u64,
) -> Result<Option<Counterexample>> {
    if !(lambda_min.is_finite() && lambda_min >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda_min must be at least 1, got {lambda_min}"
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be at least 1".into()));
    }
    for k in 0..budget {
        let a = candidate(lambda_min, seed, k);
        if certify(&a).verdict == Verdict::UniqueGuaranteed {
            continue;
        }
        let opts = SolveOptions::default()
            .with_starts(CANDIDATE_STARTS)
            .with_seed(seed.wrapping_add(k as u64));
        let (newton_minima, _) = census_local_minima(&a, &opts)?;
        if newton_minima.len() < 2 {
            continue;
        }
        let grid_minima = grid_local_minima(&a, &GridSpec::for_matrix(&a))?;
        if grid_minima.len() >= 2 {
            return Ok(Some(Counterexample {
                matrix: a,
                newton_minima,
                grid_minima,
                candidates_tried: k + 1,
            }));
        }
    }
    Ok(None)
}
