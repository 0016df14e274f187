//! Labeled datasets, seeded splits and batching.
//!
//! Features are stored row-major in one flat buffer; row `i` occupies
//! `features[i * dim..(i + 1) * dim]`.

mod idx;
mod toy;

pub use idx::{load_idx, write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use toy::{make_blobs, make_rings};

use crate::rng::{self, streams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

/// A batch of rows gathered from a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBatch {
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
}

impl LabeledBatch {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::DimensionMismatch("batch must hold at least one row".into()));
        }
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "batch of {} labels needs {} features of dim {dim}, got {}",
                labels.len(),
                labels.len() * dim,
                features.len()
            )));
        }
        Ok(Self { features, dim, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidConfig("dataset must contain at least one row".into()));
        }
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} rows of dim {dim} need {} features, got {}",
                labels.len(),
                labels.len() * dim,
                features.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidConfig(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("dataset features must be finite".into()));
        }
        Ok(Self {
            name: name.into(),
            features,
            dim,
            labels,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn gather(&self, indices: &[usize]) -> LabeledBatch {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        LabeledBatch {
            features,
            dim: self.dim,
            labels,
        }
    }

    /// The whole dataset as one batch.
    pub fn as_batch(&self) -> LabeledBatch {
        LabeledBatch {
            features: self.features.clone(),
            dim: self.dim,
            labels: self.labels.clone(),
        }
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let batch = self.gather(indices);
        Dataset::new(name, batch.features, self.dim, batch.labels, self.class_count)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices of each class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Deterministic batch of up to `size` rows drawn without replacement.
    pub fn sample_batch(&self, size: usize, seed: u64) -> LabeledBatch {
        let mut perm = rng::permutation(self.len(), &mut rng::stream(seed, streams::BATCH));
        perm.truncate(size.min(self.len()));
        self.gather(&perm)
    }
}

/// Stratified train/validation split.
///
/// Within each class the rows are shuffled with the seeded generator and the
/// first `round(count * val_fraction)` go to validation. Both outputs keep the
/// original row order.
pub fn split(data: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "val_fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let mut rng = rng::stream(seed, streams::SPLIT);
    let mut is_val = vec![false; data.len()];
    for members in data.class_indices() {
        let perm = rng::permutation(members.len(), &mut rng);
        let n_val = (members.len() as f64 * val_fraction).round() as usize;
        for &p in &perm[..n_val] {
            is_val[members[p]] = true;
        }
    }
    let (val_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| is_val[i]);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "split of {} rows at fraction {val_fraction} leaves an empty side",
            data.len()
        )));
    }
    Ok((
        data.subset(&train_idx, format!("{}-train", data.name))?,
        data.subset(&val_idx, format!("{}-val", data.name))?,
    ))
}
