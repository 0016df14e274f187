//! Saves a model and its mask, loads them back bitwise, then shows the typed
//! errors for a truncated file and a stale config hash.
//!
//! `cargo run --release --example checkpoint_roundtrip`

use sdlab::harness::checkpoint::{load_checkpoint, load_checkpoint_verified, save_checkpoint, CheckpointRecord};
use sdlab::nn::{init_model, ArchSpec};
use sdlab::pruning::{magnitude_prune, PruneScope, SparsityMask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sdlab-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
    let model = init_model(&arch, 0)?;
    let mask = magnitude_prune(&model, &SparsityMask::dense(&arch), 0.5, PruneScope::PerLayer)?;

    let model_path = save_checkpoint(&CheckpointRecord::from_model(&model, "demo")?, &dir.join("model.ckpt"))?;
    let mask_path = save_checkpoint(&CheckpointRecord::from_mask(&mask, &arch, "demo")?, &dir.join("mask.ckpt"))?;

    let back = load_checkpoint(&model_path)?.to_model()?;
    let bitwise = back.params.iter().zip(&model.params).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("model: {} params, bitwise equal: {bitwise}", back.params.len());
    let (mask_back, _) = load_checkpoint(&mask_path)?.to_mask()?;
    println!("mask: {} of {} weights kept, equal: {}", mask_back.surviving_weights(), mask.prunable_count(), mask_back == mask);

    let bytes = std::fs::read(&model_path)?;
    let cut = dir.join("truncated.ckpt");
    std::fs::write(&cut, &bytes[..bytes.len() - 5])?;
    println!("truncated file: {}", load_checkpoint(&cut).unwrap_err());
    println!("stale hash: {}", load_checkpoint_verified(&model_path, "other").unwrap_err());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
