//! Reads an IDX image/label pair (the MNIST file format) and trains a small
//! ConvNet on it.
//!
//! `cargo run --release --example mnist_idx [images labels]`
//!
//! Without arguments a synthetic IDX pair of striped 12x12 digits is written
//! to a temp directory first, so the example runs offline.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdlab::data::{load_idx, split, write_idx};
use sdlab::nn::{evaluate, init_model, train, ArchSpec, TrainConfig};
use sdlab::pruning::SparsityMask;

/// Four classes of noisy stripes: horizontal, vertical and the two diagonals.
fn synthetic_pair() -> sdlab::Result<(PathBuf, PathBuf)> {
    let dir = std::env::temp_dir().join("sdlab-idx-example");
    std::fs::create_dir_all(&dir)?;
    let side = 12usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut pixels, mut labels) = (Vec::new(), Vec::new());
    for n in 0..400 {
        let class = n % 4;
        for r in 0..side {
            for c in 0..side {
                let on = match class {
                    0 => r % 4 < 2,
                    1 => c % 4 < 2,
                    2 => (r + c) % 4 < 2,
                    _ => (r + side - c) % 4 < 2,
                };
                let base: f64 = if on { 200.0 } else { 30.0 };
                pixels.push((base + rng.random_range(-30.0..30.0)).clamp(0.0, 255.0) as u8);
            }
        }
        labels.push(class as u8);
    }
    let (images, labels_path) = (dir.join("images-idx3-ubyte"), dir.join("labels-idx1-ubyte"));
    write_idx(&images, &labels_path, side as u32, side as u32, &pixels, &labels)?;
    Ok((images, labels_path))
}

fn main() -> sdlab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (images, labels) = match args.as_slice() {
        [i, l] => (PathBuf::from(i), PathBuf::from(l)),
        _ => synthetic_pair()?,
    };
    let data = load_idx(&images, &labels, Some(50), 0)?;
    let classes = data.class_counts().len();
    let side = (data.dim as f64).sqrt() as usize;
    let (tr, val) = split(&data, 0.2, 1)?;
    println!("{} rows of {side}x{side}, {classes} classes", data.len());

    let arch = ArchSpec::convnet((1, side, side), &[4, 8], 3, classes);
    let init = init_model(&arch, 0)?;
    let cfg = TrainConfig {
        epochs: 10,
        batch_size: 16,
        learning_rate: 0.02,
        ..TrainConfig::default()
    };
    let trained = train(&init, &tr, &cfg, &SparsityMask::dense(&arch))?;
    let e = evaluate(&trained.model, &val)?;
    println!("{}: val loss {:.4}, accuracy {:.3}", arch.describe(), e.loss, e.accuracy);
    Ok(())
}
