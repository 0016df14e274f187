//! Interpolation curves, barriers and loss-plane geometry.

use proptest::prelude::*;
use sdlab::data::{make_blobs, split, Dataset};
use sdlab::landscape::{grid_eval, plane_from_models, project};
use sdlab::nn::{init_model, train, ArchSpec, ModelState, TrainConfig};
use sdlab::pruning::SparsityMask;
use sdlab::stability::{barrier_height, curve_between, CurveMeta, InterpolationCurve};
use std::sync::OnceLock;

struct Fixture {
    train: Dataset,
    val: Dataset,
    models: Vec<ModelState>,
}

/// Four models trained from one init under different orderings.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let (train_set, val) = split(&make_blobs(3, 80, 2, 1.0, 7).unwrap(), 0.2, 1).unwrap();
        let arch = ArchSpec::mlp(&[2, 12, 12, 3]);
        let init = init_model(&arch, 11).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        };
        let models = (1..=4)
            .map(|s| train(&init, &train_set, &cfg.with_ordering_seed(s), &SparsityMask::dense(&arch)).unwrap().model)
            .collect();
        Fixture {
            train: train_set,
            val,
            models,
        }
    })
}

fn meta() -> CurveMeta {
    CurveMeta {
        sparsity: 0.0,
        seed_a: 1,
        seed_b: 2,
        dataset: "blobs".into(),
    }
}

#[test]
fn swapping_endpoints_reverses_the_curve_exactly() {
    let f = fixture();
    let ab = curve_between(&f.models[0], &f.models[1], &f.train, &f.val, 21, meta()).unwrap();
    let ba = curve_between(&f.models[1], &f.models[0], &f.train, &f.val, 21, meta()).unwrap();
    let mut reversed = ba.train_loss.clone();
    reversed.reverse();
    assert_eq!(ab.train_loss, reversed);
    let mut acc = ba.val_accuracy.clone();
    acc.reverse();
    assert_eq!(ab.val_accuracy, acc);
}

#[test]
fn self_interpolation_is_flat() {
    let f = fixture();
    for m in &f.models {
        let c = curve_between(m, m, &f.train, &f.val, 11, meta()).unwrap();
        let b = barrier_height(&c);
        // (1 - a) w + a w is w only up to rounding
        assert!(b.halfway.abs() < 1e-12 && b.max.abs() < 1e-12, "{b:?}");
    }
}

#[test]
fn random_fourth_model_leaves_the_plane() {
    let f = fixture();
    let plane = plane_from_models(&f.models[0], &f.models[1], &f.models[2]).unwrap();
    let (_, _, residual) = project(&f.models[3], &plane).unwrap();
    assert!(residual > 0.0);
    for m in &f.models[..3] {
        assert!(project(m, &plane).unwrap().2 < 1e-8);
    }
}

#[test]
fn doubling_resolution_keeps_shared_cells() {
    let f = fixture();
    let plane = plane_from_models(&f.models[0], &f.models[1], &f.models[2]).unwrap();
    let (xr, yr) = plane.default_ranges(0.25);
    let coarse = grid_eval(&plane, xr, yr, (6, 5), &f.train, None).unwrap();
    let fine = grid_eval(&plane, xr, yr, (11, 9), &f.train, None).unwrap();
    for j in 0..5 {
        for i in 0..6 {
            assert_eq!(coarse.x(i).to_bits(), fine.x(2 * i).to_bits());
            assert_eq!(coarse.y(j).to_bits(), fine.y(2 * j).to_bits());
            assert_eq!(coarse.at(i, j).to_bits(), fine.at(2 * i, 2 * j).to_bits());
        }
    }
    assert_eq!(fine.evaluations, 99);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn barrier_matches_its_definition(
        losses in prop::collection::vec(-2.0f64..5.0, 3..30),
    ) {
        let n = losses.len();
        let alphas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let c = InterpolationCurve::new(alphas.clone(), losses.clone(), vec![0.5; n], meta()).unwrap();
        let b = barrier_height(&c);
        let (l0, l1) = (losses[0], losses[n - 1]);
        let max = alphas
            .iter()
            .zip(&losses)
            .map(|(a, l)| l - ((1.0 - a) * l0 + a * l1))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((b.max - max).abs() < 1e-12);
        if n % 2 == 1 {
            prop_assert!(!b.halfway_interpolated);
            prop_assert!((b.halfway - (losses[n / 2] - 0.5 * (l0 + l1))).abs() < 1e-12);
            prop_assert!(b.max >= b.halfway - 1e-9);
        } else {
            prop_assert!(b.halfway_interpolated);
            let mid = 0.5 * (losses[n / 2 - 1] + losses[n / 2]);
            prop_assert!((b.halfway - (mid - 0.5 * (l0 + l1))).abs() < 1e-9);
        }
    }
}
