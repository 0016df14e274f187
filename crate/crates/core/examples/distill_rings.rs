//! Distills concentric rings into ten points per class and compares training
//! on them with training on real data and on a random subset of equal size.
//!
//! `cargo run --release --example distill_rings`

use sdlab::data::{make_rings, split};
use sdlab::distill::{distill, eval_synthetic, eval_training_set, DistillConfig, SyntheticDataset};
use sdlab::nn::{ArchSpec, TrainConfig};

fn main() -> sdlab::Result<()> {
    let (tr, val) = split(&make_rings(2, 200, 0.1, 3)?, 0.2, 1)?;
    let arch = ArchSpec::mlp(&[2, 32, 32, 2]);
    let ipc = 10;
    let syn = distill(&tr, &arch, ipc, &DistillConfig::default())?;
    println!(
        "matching loss {:.4} -> {:.4} over {} steps",
        syn.initial_matching_loss,
        syn.final_matching_loss,
        syn.matching_loss_history.len()
    );
    for class in 0..syn.class_count {
        let rows: Vec<String> = (0..ipc)
            .map(|i| {
                let r = (class * ipc + i) * syn.dim;
                format!("({:+.2}, {:+.2})", syn.features[r], syn.features[r + 1])
            })
            .collect();
        println!("class {class}: {}", rows.join(" "));
    }

    let cfg = TrainConfig {
        epochs: 50,
        batch_size: 10,
        ..TrainConfig::default()
    };
    let seeds = [1, 2, 3, 4, 5];
    let real = eval_training_set(&tr, &arch, &val, &cfg, &seeds)?;
    let distilled = eval_synthetic(&syn, &arch, &val, &cfg, &seeds)?;
    let random = eval_synthetic(&SyntheticDataset::random_subset(&tr, ipc, 0)?, &arch, &val, &cfg, &seeds)?;
    println!("val accuracy, mean (std) over {} seeds:", seeds.len());
    println!("  real ({} rows)      {:.3} ({:.3})", tr.len(), real.mean, real.std);
    println!("  distilled ({} rows) {:.3} ({:.3})", syn.len(), distilled.mean, distilled.std);
    println!("  random ({} rows)    {:.3} ({:.3})", syn.len(), random.mean, random.std);
    Ok(())
}
