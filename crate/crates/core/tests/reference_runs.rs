//! Small end-to-end training runs with known outcomes.

use sdlab::data::{make_blobs, make_rings, split, Dataset};
use sdlab::distill::{distill, DistillConfig};
use sdlab::nn::{evaluate, init_model, train, ArchSpec, TrainConfig};
use sdlab::pruning::{apply_and_retrain, distilled_prune, imp, PruneSchedule, PruneScope, SparsityMask};
use sdlab::stability::{barrier_height, instability_analysis, DEFAULT_TOLERANCE};

fn train_accuracy(data: &Dataset, sizes: &[usize], epochs: usize, seed: u64) -> f64 {
    let arch = ArchSpec::mlp(sizes);
    let init = init_model(&arch, seed).unwrap();
    let cfg = TrainConfig {
        epochs,
        ordering_seed: seed,
        ..TrainConfig::default()
    };
    let m = train(&init, data, &cfg, &SparsityMask::dense(&arch)).unwrap().model;
    evaluate(&m, data).unwrap().accuracy
}

#[test]
fn separated_blobs_are_learned() {
    let data = make_blobs(3, 100, 2, 0.5, 7).unwrap();
    for seed in 0..5 {
        let acc = train_accuracy(&data, &[2, 16, 16, 3], 30, seed);
        assert!(acc >= 0.95, "seed {seed}: {acc}");
    }
}

#[test]
fn untrained_loss_is_near_chance() {
    for classes in [2, 3, 5] {
        let data = make_blobs(classes, 50, 2, 1.0, 3).unwrap();
        let arch = ArchSpec::mlp(&[2, 16, 16, classes]);
        let e = evaluate(&init_model(&arch, 0).unwrap(), &data).unwrap();
        let chance = (classes as f64).ln();
        assert!((e.loss - chance).abs() < 0.2, "{classes} classes: {} vs {chance}", e.loss);
    }
}

#[test]
fn linear_model_separates_tight_blobs() {
    let data = make_blobs(3, 100, 2, 0.01, 7).unwrap();
    assert!(train_accuracy(&data, &[2, 3], 30, 0) >= 0.99);
}

#[test]
fn rings_need_hidden_layers_and_get_them() {
    let data = make_rings(2, 200, 0.05, 3).unwrap();
    let acc = train_accuracy(&data, &[2, 32, 32, 2], 50, 0);
    assert!(acc >= 0.9, "{acc}");
}

#[test]
fn moderate_imp_sparsity_keeps_accuracy() {
    let (tr, val) = split(&make_blobs(3, 200, 2, 1.0, 7).unwrap(), 0.2, 1).unwrap();
    let schedule = PruneSchedule {
        rounds: 4,
        rate: 0.2,
        scope: PruneScope::Global,
    };
    let cfg = TrainConfig::default();
    for seed in 0..5 {
        let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
        let init = init_model(&arch, seed).unwrap();
        let dense = apply_and_retrain(&init, &SparsityMask::dense(&arch), &tr, &cfg).unwrap();
        let dense_acc = evaluate(&dense.model, &val).unwrap().accuracy;
        let last = imp(&init, &tr, &val, &schedule, &cfg).unwrap().pop().unwrap();
        assert!((last.sparsity - 0.5904).abs() < 0.01);
        let gap = dense_acc - last.trained_eval.accuracy;
        assert!(gap.abs() <= 0.05, "seed {seed}: dense {dense_acc} sparse {}", last.trained_eval.accuracy);
    }
}

#[test]
fn distilled_and_real_masks_differ_and_matching_improves() {
    let (tr, val) = split(&make_blobs(3, 200, 2, 1.0, 7).unwrap(), 0.2, 1).unwrap();
    let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
    let cfg = DistillConfig {
        outer_steps: 50,
        ..DistillConfig::default()
    };
    let syn = distill(&tr, &arch, 10, &cfg).unwrap();
    assert!(syn.final_matching_loss < syn.initial_matching_loss);

    let init = init_model(&arch, 0).unwrap();
    let schedule = PruneSchedule {
        rounds: 1,
        rate: 0.2,
        scope: PruneScope::Global,
    };
    let train_cfg = TrainConfig::default();
    let real = imp(&init, &tr, &val, &schedule, &train_cfg).unwrap();
    let synthetic = distilled_prune(&init, &syn, &tr, &val, &schedule, &train_cfg).unwrap();
    assert_eq!(real[0].sparsity, synthetic[0].sparsity);
    assert_ne!(real[0].mask, synthetic[0].mask);
}

#[test]
fn dense_networks_from_init_are_unstable() {
    let (tr, val) = split(&make_rings(3, 200, 0.1, 3).unwrap(), 0.2, 1).unwrap();
    // a convolution has nothing to slide over on 2-D points, so a three
    // hidden layer MLP stands in for the ConvNet
    let arch = ArchSpec::mlp(&[2, 32, 32, 32, 3]);
    let cfg = TrainConfig {
        learning_rate: 0.1,
        batch_size: 10,
        ..TrainConfig::default()
    };
    let mask = SparsityMask::dense(&arch);
    for pair in 0..5u64 {
        let init = init_model(&arch, 100 + pair).unwrap();
        let run = instability_analysis(&init, &mask, &tr, &val, 2 * pair + 1, 2 * pair + 2, &cfg, 21).unwrap();
        let b = barrier_height(&run.curve);
        assert!(b.max > DEFAULT_TOLERANCE, "pair {pair}: {b:?}");
    }
}
