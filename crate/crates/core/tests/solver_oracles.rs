//! Solvers checked against brute-force and independent numerical minimizers.

use pcx_core::convexity::{certify, compute_a0, Verdict};
use pcx_core::oracle::{
    finite_diff_gradient, grid_local_minima, grid_min_lsm, minimize_llsm_numeric,
    minimize_wlsm_numeric, wlsm_perturbation_violations, GridSpec,
};
use pcx_core::solvers::{
    census_local_minima, eigen_residual, objective_lsm, phi_gradient, phi_objective, solve,
    solve_evm, solve_llsm, solve_lsm, solve_wlsm, wlsm_kkt_point, wlsm_kkt_residual, LogPoint,
    DEFAULT_EVM_TOL,
};
use pcx_core::{Method, PCMatrix, SolveOptions, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, max: f64) -> PCMatrix {
    let l = max.ln();
    let upper = (0..n * (n - 1) / 2)
        .map(|_| rng.random_range(-l..=l).exp())
        .collect();
    PCMatrix::new(n, upper, None).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> LogPoint {
    LogPoint::centered((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
}

#[test]
fn phi_matches_ratio_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..100 {
        let n = 3 + k % 6;
        let a = random_matrix(&mut rng, n, 9.0);
        let p = random_point(&mut rng, n);
        let x = phi_objective(&a, &p).unwrap();
        let y = objective_lsm(&a, &p.weights()).unwrap();
        assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300), "{x} vs {y}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..100 {
        let n = 3 + k % 6;
        let a = random_matrix(&mut rng, n, 9.0);
        let p = random_point(&mut rng, n);
        let g = phi_gradient(&a, &p).unwrap();
        // differentiate along the hyperplane: f(t) evaluated on the centred point
        let fd = finite_diff_gradient(
            |t| phi_objective(&a, &LogPoint::centered(t.to_vec())).unwrap(),
            p.as_slice(),
            1e-5,
        )
        .unwrap();
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (x, y) in g.iter().zip(&fd) {
            assert!((x - y).abs() <= 1e-6 * scale, "{g:?} vs {fd:?}");
        }
    }
}

#[test]
fn lsm_agrees_with_grid_on_random_3x3() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let a = random_matrix(&mut rng, 3, 5.0);
        let lsm = solve_lsm(&a, &SolveOptions::default().with_starts(20)).unwrap();
        let grid = grid_min_lsm(&a, &GridSpec::for_matrix(&a)).unwrap();
        let lsm_t = LogPoint::centered(lsm.weights.logs());
        assert!(lsm_t.sup_distance(&grid.t) <= 1e-3, "{a:?}");
        assert!(lsm.objective <= grid.objective * (1.0 + 1e-9));
    }
}

#[test]
fn llsm_matches_numeric_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let a = random_matrix(&mut rng, 3, 5.0);
        let closed = solve_llsm(&a).weights.logs();
        let numeric = minimize_llsm_numeric(&a, 1e-12, 100_000).unwrap();
        for (x, y) in closed.iter().zip(&numeric) {
            assert!((x - y).abs() <= 1e-8);
        }
    }
}

#[test]
fn wlsm_is_a_kkt_point_and_a_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for k in 0..50 {
        let a = random_matrix(&mut rng, 3, 5.0);
        let (w, lambda) = wlsm_kkt_point(&a).unwrap();
        let (stat, feas) = wlsm_kkt_residual(&a, &w, lambda).unwrap();
        assert!(stat <= 1e-9 && feas <= 1e-9);
        let numeric = minimize_wlsm_numeric(&a, 1e-13, 100_000).unwrap();
        for (x, y) in w.iter().zip(&numeric) {
            assert!((x - y).abs() <= 1e-8);
        }
        assert_eq!(wlsm_perturbation_violations(&a, &w, 200, k).unwrap(), 0);
    }
}

#[test]
fn wlsm_worked_matrix_survives_perturbation() {
    let a = PCMatrix::new(3, vec![3.0, 5.0, 3.0], None).unwrap();
    let r = solve_wlsm(&a).unwrap();
    let numeric = minimize_wlsm_numeric(&a, 1e-13, 100_000).unwrap();
    for (x, y) in r.weights.values().iter().zip(&numeric) {
        assert!((x - y).abs() <= 1e-8);
    }
    assert_eq!(
        wlsm_perturbation_violations(&a, r.weights.values(), 1000, 0).unwrap(),
        0
    );
}

#[test]
fn evm_residual_and_eigenvalue_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for k in 0..50 {
        let n = 3 + k % 6;
        let a = random_matrix(&mut rng, n, 5.0);
        let r = solve_evm(&a, DEFAULT_EVM_TOL).unwrap();
        let lambda = r.eigenvalue.unwrap();
        assert!(eigen_residual(&a, &r.weights, lambda) <= 1e-9);
        assert!(lambda >= n as f64 - 1e-9);
    }
}

#[test]
fn consistent_input_is_recovered_by_every_method() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 2..=8 {
        for _ in 0..5 {
            let raw: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-1.5f64..1.5).exp())
                .collect();
            let w = WeightVector::sum_one(raw).unwrap();
            let a = PCMatrix::from_weights(&w);
            for m in Method::ALL {
                let r = solve(&a, m, &SolveOptions::default()).unwrap();
                assert!(r.weights.max_abs_diff(&w) <= 1e-8, "{m} n={n}");
                assert!(r.objective <= 1e-16, "{m} n={n}: {}", r.objective);
            }
        }
    }
}

#[test]
fn methods_are_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let perm = [3, 0, 4, 1, 2];
    for _ in 0..10 {
        let a = random_matrix(&mut rng, 5, compute_a0());
        let b = a.permuted(&perm).unwrap();
        for m in Method::ALL {
            let ra = solve(&a, m, &SolveOptions::default()).unwrap();
            let rb = solve(&b, m, &SolveOptions::default()).unwrap();
            let expected = ra.weights.permuted(&perm);
            assert!(rb.weights.max_abs_diff(&expected) <= 1e-9, "{m}");
        }
    }
}

#[test]
fn admissible_matrices_have_a_single_minimum() {
    let a0 = compute_a0();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, 4, a0);
        assert_eq!(certify(&a).verdict, Verdict::UniqueGuaranteed);
        let opts = SolveOptions::default().with_starts(20).with_seed(seed);
        let (minima, census) = census_local_minima(&a, &opts).unwrap();
        assert_eq!(minima.len(), 1, "seed {seed}: {census:?}");
        assert_eq!(census.converged, 20);
    }
}

#[test]
fn grid_census_on_known_matrices() {
    let mild = PCMatrix::new(3, vec![2.0, 3.0, 2.0], None).unwrap();
    assert_eq!(
        grid_local_minima(&mild, &GridSpec::for_matrix(&mild))
            .unwrap()
            .len(),
        1
    );

    let (u, v) = (8.0, 8.0);
    let cyclic = PCMatrix::new(3, vec![u, 1.0 / v, u], None).unwrap();
    let grid = grid_local_minima(&cyclic, &GridSpec::for_matrix(&cyclic)).unwrap();
    let (newton, _) =
        census_local_minima(&cyclic, &SolveOptions::default().with_starts(40)).unwrap();
    assert!(grid.len() >= 2, "{grid:?}");
    assert_eq!(grid.len(), newton.len());
}
