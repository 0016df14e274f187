use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Radius of the circle the blob centers sit on.
const BLOB_RADIUS: f64 = 2.0;

fn check_sizes(classes: usize, per_class: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {classes}")));
    }
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    Ok(())
}

/// Isotropic Gaussian clusters.
///
/// Class `c` is centered at angle `2*pi*c/classes` on a circle of radius 2 in
/// the first two coordinates (remaining coordinates 0; for `dim == 1` the
/// centers are `2c`). Rows are grouped by class.
pub fn make_blobs(classes: usize, per_class: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    check_sizes(classes, per_class)?;
    if dim == 0 {
        return Err(Error::InvalidConfig("dim must be >= 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidConfig(format!("spread must be > 0, got {spread}")));
    }
    let mut rng = rng::stream(seed, streams::BLOBS);
    let mut features = Vec::with_capacity(classes * per_class * dim);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let mut center = vec![0.0; dim];
        if dim == 1 {
            center[0] = BLOB_RADIUS * c as f64;
        } else {
            let angle = TAU * c as f64 / classes as f64;
            center[0] = BLOB_RADIUS * angle.cos();
            center[1] = BLOB_RADIUS * angle.sin();
        }
        for _ in 0..per_class {
            for &m in &center {
                let z: f64 = rng.sample(StandardNormal);
                features.push(m + spread * z);
            }
            labels.push(c);
        }
    }
    Dataset::new(format!("blobs{classes}x{per_class}"), features, dim, labels, classes)
}

/// Concentric rings in 2D.
///
/// Class `c` lies on radius `(c + 1) / classes` with a uniform angle; `noise`
/// is the standard deviation of Gaussian jitter added to the radius.
pub fn make_rings(classes: usize, per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_sizes(classes, per_class)?;
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise must be >= 0, got {noise}")));
    }
    let mut rng = rng::stream(seed, streams::RINGS);
    let mut features = Vec::with_capacity(classes * per_class * 2);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let base = (c + 1) as f64 / classes as f64;
        for _ in 0..per_class {
            let angle = rng.random::<f64>() * TAU;
            let z: f64 = rng.sample(StandardNormal);
            let r = base + noise * z;
            features.push(r * angle.cos());
            features.push(r * angle.sin());
            labels.push(c);
        }
    }
    Dataset::new(format!("rings{classes}x{per_class}"), features, 2, labels, classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_shape_and_balance() {
        let d = make_blobs(3, 100, 2, 0.5, 7).unwrap();
        assert_eq!(d.len(), 300);
        assert_eq!(d.dim, 2);
        assert_eq!(d.class_counts(), vec![100, 100, 100]);
    }

    #[test]
    fn blobs_deterministic() {
        assert_eq!(make_blobs(3, 20, 4, 0.5, 7).unwrap(), make_blobs(3, 20, 4, 0.5, 7).unwrap());
        assert_ne!(make_blobs(3, 20, 4, 0.5, 7).unwrap(), make_blobs(3, 20, 4, 0.5, 8).unwrap());
    }

    #[test]
    fn rings_shape() {
        let d = make_rings(2, 200, 0.05, 3).unwrap();
        assert_eq!(d.len(), 400);
        assert_eq!(d.class_counts(), vec![200, 200]);
    }

    #[test]
    fn noiseless_rings_are_radially_ordered() {
        let d = make_rings(3, 50, 0.0, 3).unwrap();
        let radius = |i: usize| d.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..2 {
            let max_inner = (0..d.len()).filter(|&i| d.labels[i] == c).map(radius).fold(f64::MIN, f64::max);
            let min_outer = (0..d.len()).filter(|&i| d.labels[i] == c + 1).map(radius).fold(f64::MAX, f64::min);
            assert!(max_inner < min_outer);
        }
    }

    #[test]
    fn invalid_sizes() {
        assert!(make_blobs(1, 10, 2, 0.5, 0).is_err());
        assert!(make_blobs(2, 0, 2, 0.5, 0).is_err());
        assert!(make_blobs(2, 10, 2, 0.0, 0).is_err());
        assert!(make_rings(2, 10, -1.0, 0).is_err());
    }
}
