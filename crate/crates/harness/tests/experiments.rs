use lstd_harness::verify::{parse_suite, run_suite, verdict};
use lstd_harness::{benchmarks, run_experiment, EstimatorEntry, ExperimentConfig, OutputFormat, ProblemSource};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    (xs[(n - 1) / 2] + xs[n / 2]) / 2.0
}

#[test]
fn convergence_sweep_medians_do_not_increase() {
    let doc = benchmarks::two_state();
    let sizes = vec![100, 1_000, 10_000, 100_000];
    let ids = ["lstd_sample", "brm_sample", "lds", "td_iterate"];
    let config = ExperimentConfig {
        problem: ProblemSource::Inline(doc.clone()),
        estimators: ids.iter().map(|id| EstimatorEntry::Plain(id.parse().unwrap())).collect(),
        sample_sizes: sizes.clone(),
        repetitions: 10,
        seed: 42,
        output: OutputFormat::Csv,
        timing: false,
    };
    let outcome = run_experiment(&config, &doc.to_problem().unwrap()).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    assert_eq!(outcome.rows.len(), ids.len() * sizes.len() * 10);
    for id in ids {
        let medians: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                median(
                    outcome.rows.iter().filter(|r| r.estimator_id == id && r.n == n).map(|r| r.weight_error).collect(),
                )
            })
            .collect();
        assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{id}: {medians:?}");
        assert!(medians[3] <= 0.05, "{id}: {medians:?}");
    }
}

#[test]
fn default_suite_passes() {
    let reports = run_suite(&parse_suite("all").unwrap(), 0, 200).unwrap();
    for r in &reports {
        assert_eq!(r.instances_run, 200);
        assert!(r.ok(), "{r:?}");
    }
    assert!(verdict(&reports).is_ok());
    let probe = reports.iter().find(|r| r.check_id == "oblique_conjecture").unwrap();
    assert!(!probe.asserted);
}
