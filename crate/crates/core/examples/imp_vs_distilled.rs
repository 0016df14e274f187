//! Finds masks round by round with IMP on real data and with distilled
//! pruning, then prints accuracy and the training points each spent.
//!
//! `cargo run --release --example imp_vs_distilled`

use sdlab::data::{make_blobs, split};
use sdlab::distill::{distill, DistillConfig};
use sdlab::nn::{init_model, ArchSpec, TrainConfig};
use sdlab::pruning::{distilled_prune, imp, PruneSchedule, PruneScope};

fn main() -> sdlab::Result<()> {
    let (tr, val) = split(&make_blobs(3, 200, 2, 1.0, 7)?, 0.2, 1)?;
    let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
    let init = init_model(&arch, 0)?;
    let cfg = TrainConfig::default();
    let schedule = PruneSchedule {
        rounds: 9,
        rate: 0.2,
        scope: PruneScope::Global,
    };
    let syn = distill(&tr, &arch, 10, &DistillConfig::default())?;
    let real = imp(&init, &tr, &val, &schedule, &cfg)?;
    let dist = distilled_prune(&init, &syn, &tr, &val, &schedule, &cfg)?;

    println!("round sparsity  imp_acc  dist_acc  imp_points  dist_points  overlap");
    for (a, b) in real.iter().zip(&dist) {
        let kept = |i: usize, m: &sdlab::pruning::SparsityMask| m.bits[i] && m.prunable[i];
        let both = (0..a.mask.len()).filter(|&i| kept(i, &a.mask) && kept(i, &b.mask)).count();
        println!(
            "{:>5} {:>8.3} {:>8.3} {:>9.3} {:>11} {:>12} {:>8.3}",
            a.round_index,
            a.sparsity,
            a.trained_eval.accuracy,
            b.trained_eval.accuracy,
            a.cumulative_dataset_size,
            b.cumulative_dataset_size,
            both as f64 / a.mask.surviving_weights() as f64
        );
    }
    Ok(())
}
