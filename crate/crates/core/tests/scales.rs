use pcx_core::oracle::{grid_local_minima, GridSpec};
use pcx_core::scales::{run_monte_carlo, scale_by_name, search_counterexample, MonteCarloConfig};

fn run_with_threads(cfg: &MonteCarloConfig, threads: usize) -> (String, String) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let r = run_monte_carlo(cfg).unwrap();
        (r.to_csv().unwrap(), r.aggregate_json().unwrap())
    })
}

#[test]
fn monte_carlo_is_deterministic_across_thread_counts() {
    let cfg = MonteCarloConfig::new(scale_by_name("1-5").unwrap(), 5, 200, 42);
    let single = run_with_threads(&cfg, 1);
    let multi = run_with_threads(&cfg, 4);
    let again = run_with_threads(&cfg, 4);
    assert_eq!(single, multi);
    assert_eq!(multi, again);
}

#[test]
fn small_scale_stays_inside_the_certified_band() {
    let cfg = MonteCarloConfig::new(scale_by_name("1-3").unwrap(), 4, 1000, 7);
    let r = run_monte_carlo(&cfg).unwrap();
    assert_eq!(r.aggregate.fraction_certified, 1.0);
    assert_eq!(r.aggregate.fraction_unique, 1.0);
    assert!(r.records.iter().all(|t| t.lsm_converged));
}

#[test]
fn wider_scale_is_more_inconsistent() {
    let mean = |name: &str| {
        let cfg = MonteCarloConfig::new(scale_by_name(name).unwrap(), 4, 1000, 7);
        run_monte_carlo(&cfg).unwrap().aggregate.mean_inconsistency
    };
    assert!(mean("1-9") > mean("1-3"));
}

#[test]
fn counterexample_has_two_minima_by_both_methods() {
    let found = search_counterexample(4.0, 10_000, 0)
        .unwrap()
        .expect("found");
    assert_eq!(found.matrix.n(), 3);
    assert!(found.newton_minima.len() >= 2);
    assert!(found.grid_minima.len() >= 2);
    let regrid = grid_local_minima(&found.matrix, &GridSpec::for_matrix(&found.matrix)).unwrap();
    assert_eq!(regrid.len(), found.grid_minima.len());
    assert!(found.matrix.max_entry() >= 4.0);
}
