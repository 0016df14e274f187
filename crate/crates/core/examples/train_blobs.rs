//! Trains a small MLP on Gaussian blobs and prints the per-epoch history.
//!
//! `cargo run --release --example train_blobs`

use sdlab::data::{make_blobs, split};
use sdlab::nn::{evaluate, init_model, train, ArchSpec, TrainConfig};
use sdlab::pruning::SparsityMask;

fn main() -> sdlab::Result<()> {
    let (tr, val) = split(&make_blobs(3, 200, 2, 1.0, 7)?, 0.2, 1)?;
    let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
    let init = init_model(&arch, 0)?;
    println!("{} ({} params), {} train / {} val rows", arch.describe(), arch.param_count(), tr.len(), val.len());

    let run = train(&init, &tr, &TrainConfig::default(), &SparsityMask::dense(&arch))?;
    for (epoch, e) in run.history.iter().enumerate().step_by(5) {
        println!("epoch {epoch:>2}: loss {:.4} acc {:.3}", e.loss, e.accuracy);
    }
    let v = evaluate(&run.model, &val)?;
    println!("validation: loss {:.4} accuracy {:.3}", v.loss, v.accuracy);
    Ok(())
}
