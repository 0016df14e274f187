//! Linear mode connectivity of a dense network and its IMP subnetwork: train
//! each under two data orderings and print the loss along the line between.
//!
//! `cargo run --release --example instability`

use sdlab::data::{make_rings, split};
use sdlab::nn::{init_model, ArchSpec, TrainConfig};
use sdlab::pruning::{imp, PruneSchedule, PruneScope, SparsityMask};
use sdlab::stability::{instability_analysis, stability_verdict, DEFAULT_TOLERANCE};

fn main() -> sdlab::Result<()> {
    let (tr, val) = split(&make_rings(3, 200, 0.1, 3)?, 0.2, 1)?;
    let arch = ArchSpec::mlp(&[2, 32, 32, 32, 3]);
    let init = init_model(&arch, 100)?;
    let cfg = TrainConfig {
        learning_rate: 0.1,
        batch_size: 10,
        ..TrainConfig::default()
    };
    let schedule = PruneSchedule {
        rounds: 4,
        rate: 0.2,
        scope: PruneScope::Global,
    };
    let sparse = imp(&init, &tr, &val, &schedule, &cfg)?.pop().expect("four rounds").mask;

    for (label, mask) in [("dense", SparsityMask::dense(&arch)), ("imp", sparse)] {
        let run = instability_analysis(&init, &mask, &tr, &val, 1, 2, &cfg, 11)?;
        let report = stability_verdict(&run.curve, DEFAULT_TOLERANCE)?;
        println!(
            "{label} (sparsity {:.2}): halfway {:+.4}, max {:.4}, {}",
            report.sparsity,
            report.barrier_halfway,
            report.barrier_max,
            if report.stable { "stable" } else { "unstable" }
        );
        for ((a, l), acc) in run.curve.alphas.iter().zip(&run.curve.train_loss).zip(&run.curve.val_accuracy) {
            println!("  alpha {a:.1}: train loss {l:.4}  val acc {acc:.3}");
        }
    }
    Ok(())
}
