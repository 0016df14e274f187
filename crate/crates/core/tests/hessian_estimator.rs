//! Stochastic Hessian diagonal against the exact one.

use sdlab::data::{make_blobs, LabeledBatch};
use sdlab::hessian::{diag_hutchinson, hessian_diag_estimate, hessian_diag_exact, BatchLoss, Objective};
use sdlab::nn::{init_model, train, ArchSpec, ModelState, TrainConfig};
use sdlab::pruning::SparsityMask;

fn trained() -> (ModelState, LabeledBatch) {
    let data = make_blobs(3, 60, 2, 1.0, 7).unwrap();
    let arch = ArchSpec::mlp(&[2, 8, 8, 3]);
    let init = init_model(&arch, 2).unwrap();
    let m = train(&init, &data, &TrainConfig::default(), &SparsityMask::dense(&arch)).unwrap().model;
    (m, data.sample_batch(64, 0))
}

/// Mean over seeds of the squared estimation error, summed over coordinates.
fn mean_sq_error(m: &ModelState, b: &LabeledBatch, exact: &[f64], probes: usize, seeds: u64) -> f64 {
    let mut total = 0.0;
    for seed in 0..seeds {
        let est = hessian_diag_estimate(m, b, probes, seed).unwrap();
        total += est.iter().zip(exact).map(|(e, x)| (e - x).powi(2)).sum::<f64>();
    }
    total / seeds as f64
}

#[test]
fn doubling_probes_halves_the_variance() {
    let (m, b) = trained();
    let exact = hessian_diag_exact(&m, &b, 1e-4).unwrap();
    let small = mean_sq_error(&m, &b, &exact, 20, 40);
    let large = mean_sq_error(&m, &b, &exact, 40, 40);
    let ratio = small / large;
    assert!((1.6..2.5).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn relu_diagonal_is_nonnegative() {
    // with the gates held fixed each logit is linear in any single weight, so
    // every diagonal entry is a Gauss-Newton term
    let (m, b) = trained();
    let exact = hessian_diag_exact(&m, &b, 1e-4).unwrap();
    assert!(exact.iter().all(|&d| d > -1e-6), "min {}", exact.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn frozen_objective_touches_the_free_one_at_the_model() {
    let (m, b) = trained();
    let free = BatchLoss::new(&m, &b);
    let frozen = BatchLoss::frozen(&m, &b).unwrap();
    assert_eq!(free.value(&m.params).unwrap(), frozen.value(&m.params).unwrap());
    let (gf, gz) = (free.gradient(&m.params).unwrap(), frozen.gradient(&m.params).unwrap());
    let gap = gf.iter().zip(&gz).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(gap < 1e-12, "gradient gap {gap}");
    // the frozen estimate is a plain Hutchinson run on the frozen objective
    let direct = diag_hutchinson(&frozen, &m.params, 50, 3).unwrap();
    assert_eq!(direct, hessian_diag_estimate(&m, &b, 50, 3).unwrap());
}
