//! Hessian-diagonal statistics of dense and IMP-pruned models, exact and
//! stochastic.
//!
//! `cargo run --release --example hessian_sharpness`

use sdlab::data::{make_blobs, split};
use sdlab::hessian::{diag_stats, hessian_diag_estimate, hessian_diag_exact, HessianMethod, DEFAULT_EXACT_STEP};
use sdlab::nn::{init_model, ArchSpec, TrainConfig};
use sdlab::pruning::{apply_and_retrain, imp, PruneSchedule, PruneScope, SparsityMask};

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
    let sparse = imp(&init, &tr, &val, &schedule, &cfg)?.pop().expect("nine rounds").mask;
    let batch = tr.sample_batch(128, 0);
    let probes = 200;

    println!("model        method      min        max        mean       std        avg|d|");
    for (label, mask) in [("dense", SparsityMask::dense(&arch)), ("imp", sparse)] {
        let model = apply_and_retrain(&init, &mask, &tr, &cfg)?.model;
        let exact = hessian_diag_exact(&model, &batch, DEFAULT_EXACT_STEP)?;
        let est = hessian_diag_estimate(&model, &batch, probes, 0)?;
        for (diag, method, used) in [(exact, HessianMethod::ExactFd, 0), (est, HessianMethod::Stochastic, probes)] {
            let s = diag_stats(&diag, &mask, method, used)?;
            println!(
                "{label:<12} {:<10} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
                method.as_str(),
                s.min,
                s.max,
                s.mean,
                s.std,
                s.avg_magnitude
            );
        }
    }
    Ok(())
}
