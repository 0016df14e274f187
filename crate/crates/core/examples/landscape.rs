//! Loss on the plane through three trained models, printed as a coarse
//! character map with the models marked `A`, `B` and `C`.
//!
//! `cargo run --release --example landscape`

use sdlab::data::{make_blobs, split};
use sdlab::landscape::{grid_eval, plane_from_models, project};
use sdlab::nn::{init_model, ArchSpec, TrainConfig};
use sdlab::pruning::{apply_and_retrain, SparsityMask};

const SHADES: &[u8] = b" .:-=+*#%@";

fn main() -> sdlab::Result<()> {
    let (tr, _) = split(&make_blobs(3, 200, 2, 1.0, 7)?, 0.2, 1)?;
    let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
    let init = init_model(&arch, 0)?;
    let mask = SparsityMask::dense(&arch);
    let models: Vec<_> = [1, 2, 3]
        .into_iter()
        .map(|s| apply_and_retrain(&init, &mask, &tr, &TrainConfig::default().with_ordering_seed(s)).map(|t| t.model))
        .collect::<sdlab::Result<_>>()?;
    let plane = plane_from_models(&models[0], &models[1], &models[2])?;
    let (xr, yr) = plane.default_ranges(0.25);
    let (nx, ny) = (48, 20);
    let grid = grid_eval(&plane, xr, yr, (nx, ny), &tr, None)?;
    let (lo, hi) = grid.min_max().expect("finite grid");

    let refs: Vec<(usize, usize)> = models
        .iter()
        .map(|m| {
            let (x, y, _) = project(m, &plane).expect("same architecture");
            let i = ((x - xr.0) / (xr.1 - xr.0) * (nx - 1) as f64).round() as usize;
            let j = ((y - yr.0) / (yr.1 - yr.0) * (ny - 1) as f64).round() as usize;
            (i, j)
        })
        .collect();
    println!("train loss from {lo:.4} (' ') to {hi:.4} ('@'), log scale");
    for j in (0..ny).rev() {
        let row: String = (0..nx)
            .map(|i| match refs.iter().position(|&r| r == (i, j)) {
                Some(k) => (b'A' + k as u8) as char,
                None => {
                    let t = ((grid.at(i, j) / lo).ln() / (hi / lo).ln()).clamp(0.0, 1.0);
                    SHADES[(t * (SHADES.len() - 1) as f64).round() as usize] as char
                }
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
