//! Runs the quick profile end to end and lists the artifacts it wrote.
//!
//! `cargo run --release --example quick_pipeline [output_dir]`

use sdlab::harness::config::{ExperimentConfig, Profile};
use sdlab::harness::pipeline::run_pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::profile(Profile::Quick);
    if let Some(dir) = std::env::args().nth(1) {
        cfg.output_dir = dir.into();
    }
    let index = run_pipeline(&cfg)?;
    for a in &index.artifacts {
        println!("{:<32} {:>8} bytes  {}", a.path, a.bytes, &a.sha256[..12]);
    }
    println!("{} artifacts under {}", index.artifacts.len(), cfg.output_dir.display());
    Ok(())
}
