use lstd_core::estimators::{brm_design, brm_sample, lstd_design, lstd_sample};
use lstd_core::linalg::{spectral_radius, Matrix, Vector};
use lstd_core::mrp::{sample_trajectory, stationary_weights, FeatureMap, Mrp, RewardNoise};
use lstd_core::projections::weighted_projection;
use lstd_core::verification::{generate_problem, GeneratorSpec};

fn noisy_two_state() -> Mrp {
    let p = Matrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
    let noise = RewardNoise::Gaussian { std: vec![0.1, 0.1] };
    Mrp::with_noise(p, Vector::from_vec(vec![1.0, 0.0]), 0.9, noise).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    (xs[4] + xs[5]) / 2.0
}

#[test]
fn sample_estimators_are_consistent() {
    let mrp = noisy_two_state();
    let fmap = FeatureMap::tabular(2);
    let xi = stationary_weights(&mrp, None).unwrap();
    let w_lstd = lstd_design(&mrp, &fmap, &xi).unwrap().w;
    let w_brm = brm_design(&mrp, &fmap, &xi).unwrap().w;
    let truth = Vector::from_vec(vec![5.5, 4.5]);
    assert!((&w_lstd - &truth).amax() < 1e-12);

    let mut lstd_errs = Vec::new();
    let mut brm_errs = Vec::new();
    for seed in 0..10 {
        let traj = sample_trajectory(&mrp, &fmap, 100_000, seed, true).unwrap();
        lstd_errs.push((lstd_sample(&traj, 0.9).unwrap().w - &w_lstd).amax());
        brm_errs.push((brm_sample(&traj, 0.9).unwrap().w - &w_brm).amax());
    }
    let (l, b) = (median(lstd_errs), median(brm_errs));
    assert!(l <= 0.05, "lstd median error {l}");
    assert!(b <= 0.05, "brm median error {b}");
}

#[test]
fn projected_operator_contracts_on_rank_two_features() {
    let spec = GeneratorSpec { states: 5, features: 2, transient: 0, discount: None, tabular: false };
    let mut worst: f64 = 0.0;
    for seed in 0..500 {
        let inst = generate_problem(&spec, seed).unwrap();
        let proj = weighted_projection(inst.phi(), &inst.xi).unwrap();
        let rho = spectral_radius(&(&proj.projector * inst.mrp.transition() * inst.mrp.discount()));
        worst = worst.max(rho);
    }
    assert!(worst < 1.0, "spectral radius {worst}");
}
