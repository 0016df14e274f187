//! Dataset distillation by per-class gradient matching.
//!
//! Each outer step draws fresh model initializations and advances each one a
//! random number of full-batch gradient steps (up to `net_steps`) on the
//! current synthetic set, so matching covers the states a network passes
//! through while training on it. For every class `c`
//! the parameter gradient of the mean loss on a real batch of class `c` is
//! compared with the gradient on the synthetic rows of class `c` through a
//! layerwise cosine distance, summed over layers and classes. The synthetic
//! features then take one gradient step on that matching loss.
//!
//! The derivative of the matching loss with respect to the synthetic
//! features needs a mixed second derivative. With `v = dD/dg_syn` it is
//! `d/dx (v . grad_w L(w, x))`, evaluated as the central difference
//! `(grad_x L(w + eps v, x) - grad_x L(w - eps v, x)) / (2 eps)` with
//! `eps = 0.01 / |v|`, which needs only first-order backward passes.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledBatch};
use crate::nn::{evaluate, init_model, loss_and_grad, loss_grad_input, train, ArchSpec, LayerSlot, ModelState, TrainConfig};
use crate::pruning::SparsityMask;
use crate::rng::{self, streams};
use crate::{digest, Error, Result};
use rand::RngCore;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Random real rows of each class.
    #[default]
    RealSample,
    /// Every synthetic row starts at its class mean.
    ClassMean,
    /// Standard normal features.
    Noise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub outer_steps: usize,
    /// Fresh initializations averaged per outer step.
    pub inner_model_samples: usize,
    /// Upper bound on the synthetic-data gradient steps a sampled model takes
    /// before matching (0 matches at initialization only).
    #[serde(default = "default_net_steps")]
    pub net_steps: usize,
    #[serde(default = "default_net_lr")]
    pub net_lr: f64,
    /// Real rows per class per matching evaluation.
    pub match_batch: usize,
    pub syn_lr: f64,
    #[serde(default)]
    pub init_mode: InitMode,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            outer_steps: 200,
            inner_model_samples: 4,
            net_steps: default_net_steps(),
            net_lr: default_net_lr(),
            match_batch: 32,
            syn_lr: 0.1,
            init_mode: InitMode::RealSample,
            seed: 0,
        }
    }
}

fn default_net_steps() -> usize {
    20
}

fn default_net_lr() -> f64 {
    0.05
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.net_lr > 0.0 && self.net_lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("net_lr must be > 0, got {}", self.net_lr)));
        }
        if self.inner_model_samples == 0 || self.match_batch == 0 {
            return Err(Error::InvalidConfig(
                "inner_model_samples and match_batch must be >= 1".into(),
            ));
        }
        if !(self.syn_lr > 0.0 && self.syn_lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("syn_lr must be > 0, got {}", self.syn_lr)));
        }
        Ok(())
    }
}

/// Learned features with fixed labels, `ipc` rows per class in class-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub ipc: usize,
    pub source_name: String,
    pub distill_config_hash: String,
    /// Matching loss of each outer step (fresh random inits, so noisy).
    pub matching_loss_history: Vec<f64>,
    /// Matching loss on a fixed panel of inits and real batches, before and
    /// after optimization.
    pub initial_matching_loss: f64,
    pub final_matching_loss: f64,
}

impl SyntheticDataset {
    /// Rebuilds a synthetic set from stored features (labels are implied by
    /// the class-major layout).
    pub fn from_features(
        features: Vec<f64>,
        dim: usize,
        class_count: usize,
        ipc: usize,
        source_name: impl Into<String>,
        distill_config_hash: impl Into<String>,
    ) -> Result<Self> {
        if features.len() != class_count * ipc * dim {
            return Err(Error::DimensionMismatch(format!(
                "{class_count} classes x {ipc} ipc x dim {dim} needs {} features, got {}",
                class_count * ipc * dim,
                features.len()
            )));
        }
        Ok(Self {
            features,
            dim,
            labels: class_major_labels(class_count, ipc),
            class_count,
            ipc,
            source_name: source_name.into(),
            distill_config_hash: distill_config_hash.into(),
            matching_loss_history: Vec::new(),
            initial_matching_loss: f64::NAN,
            final_matching_loss: f64::NAN,
        })
    }

    /// `ipc` random real rows per class: the baseline a distilled set must beat.
    pub fn random_subset(real: &Dataset, ipc: usize, seed: u64) -> Result<Self> {
        let idx = sample_per_class(real, ipc, &mut rng::stream(seed, streams::SUBSET))?;
        let batch = real.gather(&idx);
        let mut out = Self::from_features(batch.features, real.dim, real.class_count, ipc, &real.name, "random-subset")?;
        out.source_name = real.name.clone();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(
            format!("{}-syn-ipc{}", self.source_name, self.ipc),
            self.features.clone(),
            self.dim,
            self.labels.clone(),
            self.class_count,
        )
    }

    fn as_batch(&self) -> LabeledBatch {
        LabeledBatch {
            features: self.features.clone(),
            dim: self.dim,
            labels: self.labels.clone(),
        }
    }

    fn class_batch(&self, c: usize) -> LabeledBatch {
        let rows = c * self.ipc..(c + 1) * self.ipc;
        LabeledBatch {
            features: self.features[rows.start * self.dim..rows.end * self.dim].to_vec(),
            dim: self.dim,
            labels: vec![c; self.ipc],
        }
    }
}

fn class_major_labels(class_count: usize, ipc: usize) -> Vec<usize> {
    (0..class_count).flat_map(|c| std::iter::repeat_n(c, ipc)).collect()
}

/// `ipc` row indices per class, class-major, drawn without replacement.
fn sample_per_class(real: &Dataset, ipc: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(ipc * real.class_count);
    for (c, members) in real.class_indices().into_iter().enumerate() {
        if members.len() < ipc {
            return Err(Error::InvalidConfig(format!(
                "class {c} has {} rows, fewer than ipc {ipc}",
                members.len()
            )));
        }
        let perm = rng::permutation(members.len(), rng);
        out.extend(perm[..ipc].iter().map(|&p| members[p]));
    }
    Ok(out)
}

/// Layerwise cosine distance `sum_l (1 - cos(a_l, b_l))` and its gradient
/// with respect to `a`. Layers where either side is all-zero contribute 0.
fn cosine_distance(a: &[f64], b: &[f64], layers: &[LayerSlot]) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut grad = vec![0.0; a.len()];
    for layer in layers {
        let r = layer.range();
        let (aa, bb) = (&a[r.clone()], &b[r.clone()]);
        let na = aa.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = bb.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na < 1e-30 || nb < 1e-30 {
            continue;
        }
        let cos = aa.iter().zip(bb).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
        total += 1.0 - cos;
        for (g, (&x, &y)) in grad[r].iter_mut().zip(aa.iter().zip(bb)) {
            *g = -(y / nb - cos * x / na) / na;
        }
    }
    (total, grad)
}

struct Matcher<'a> {
    arch: &'a ArchSpec,
    layers: Vec<LayerSlot>,
    class_rows: Vec<Vec<usize>>,
    real: &'a Dataset,
    match_batch: usize,
}

impl Matcher<'_> {
    fn real_batch(&self, c: usize, rng: &mut rand_chacha::ChaCha8Rng) -> LabeledBatch {
        let members = &self.class_rows[c];
        let mut perm = rng::permutation(members.len(), rng);
        perm.truncate(self.match_batch.min(members.len()));
        let idx: Vec<usize> = perm.into_iter().map(|p| members[p]).collect();
        self.real.gather(&idx)
    }

    /// Matching loss for one model, optionally accumulating the feature
    /// gradient into `grad_x`.
    fn evaluate(
        &self,
        model: &ModelState,
        syn: &SyntheticDataset,
        rng: &mut rand_chacha::ChaCha8Rng,
        mut grad_x: Option<&mut [f64]>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for c in 0..syn.class_count {
            let real_batch = self.real_batch(c, rng);
            let syn_batch = syn.class_batch(c);
            let (_, g_real) = loss_and_grad(model, &real_batch)?;
            let (_, g_syn) = loss_and_grad(model, &syn_batch)?;
            let (dist, v) = cosine_distance(&g_syn.0, &g_real.0, &self.layers);
            total += dist;
            let Some(grad_x) = grad_x.as_deref_mut() else {
                continue;
            };
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let eps = 0.01 / norm;
            let shifted = |sign: f64| {
                let params = model.params.iter().zip(&v).map(|(w, d)| w + sign * eps * d).collect();
                ModelState::new(self.arch.clone(), params, model.seed)
            };
            let (_, _, gx_plus) = loss_grad_input(&shifted(1.0)?, &syn_batch)?;
            let (_, _, gx_minus) = loss_grad_input(&shifted(-1.0)?, &syn_batch)?;
            let rows = &mut grad_x[c * syn.ipc * syn.dim..(c + 1) * syn.ipc * syn.dim];
            for (g, (p, m)) in rows.iter_mut().zip(gx_plus.iter().zip(&gx_minus)) {
                *g += (p - m) / (2.0 * eps);
            }
        }
        Ok(total)
    }

    /// Mean matching loss over a fixed panel of inits and real batches.
    fn panel_loss(&self, syn: &SyntheticDataset, seed: u64, samples: usize) -> Result<f64> {
        let mut rng = rng::substream(seed, streams::DISTILL, u64::MAX);
        let mut total = 0.0;
        for _ in 0..samples {
            let model = init_model(self.arch, rng.next_u64())?;
            total += self.evaluate(&model, syn, &mut rng, None)?;
        }
        Ok(total / samples as f64)
    }
}

pub fn distill_config_hash(real: &Dataset, arch: &ArchSpec, ipc: usize, cfg: &DistillConfig) -> String {
    let text = format!(
        "source={}\nn={}\narch={}\nipc={ipc}\n{}",
        real.name,
        real.len(),
        arch.describe(),
        toml::to_string(cfg).unwrap_or_default()
    );
    digest(text.as_bytes())
}

/// Distills `real` into `ipc` synthetic rows per class for `arch`.
pub fn distill(real: &Dataset, arch: &ArchSpec, ipc: usize, cfg: &DistillConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    arch.validate()?;
    if ipc == 0 {
        return Err(Error::InvalidConfig("ipc must be >= 1".into()));
    }
    if ipc * real.class_count > real.len() {
        return Err(Error::InvalidConfig(format!(
            "ipc {ipc} x {} classes exceeds the {} real rows",
            real.class_count,
            real.len()
        )));
    }
    if real.dim != arch.input_dim() || real.class_count != arch.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "dataset (dim {}, {} classes) does not fit {}",
            real.dim,
            real.class_count,
            arch.describe()
        )));
    }

    let mut rng = rng::stream(cfg.seed, streams::DISTILL);
    let features = match cfg.init_mode {
        InitMode::RealSample => real.gather(&sample_per_class(real, ipc, &mut rng)?).features,
        InitMode::ClassMean => {
            let mut out = Vec::with_capacity(real.class_count * ipc * real.dim);
            for members in real.class_indices() {
                if members.is_empty() {
                    return Err(Error::InvalidConfig("class without real rows".into()));
                }
                let mut mean = vec![0.0; real.dim];
                for &i in &members {
                    for (m, v) in mean.iter_mut().zip(real.row(i)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= members.len() as f64);
                for _ in 0..ipc {
                    out.extend_from_slice(&mean);
                }
            }
            out
        }
        InitMode::Noise => {
            use rand::Rng;
            (0..real.class_count * ipc * real.dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect()
        }
    };
    let mut syn = SyntheticDataset::from_features(
        features,
        real.dim,
        real.class_count,
        ipc,
        &real.name,
        distill_config_hash(real, arch, ipc, cfg),
    )?;

    let matcher = Matcher {
        arch,
        layers: arch.layers(),
        class_rows: real.class_indices(),
        real,
        match_batch: cfg.match_batch,
    };
    syn.initial_matching_loss = matcher.panel_loss(&syn, cfg.seed, cfg.inner_model_samples)?;

    let mut grad_x = vec![0.0; syn.features.len()];
    for step in 0..cfg.outer_steps {
        grad_x.fill(0.0);
        let mut step_loss = 0.0;
        for _ in 0..cfg.inner_model_samples {
            let model = sample_model(arch, &syn, cfg, &mut rng)?;
            step_loss += matcher.evaluate(&model, &syn, &mut rng, Some(&mut grad_x))?;
        }
        step_loss /= cfg.inner_model_samples as f64;
        if !step_loss.is_finite() || grad_x.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step });
        }
        syn.matching_loss_history.push(step_loss);
        let scale = cfg.syn_lr / cfg.inner_model_samples as f64;
        for (x, g) in syn.features.iter_mut().zip(&grad_x) {
            *x -= scale * g;
        }
        if syn.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { step });
        }
    }
    syn.final_matching_loss = matcher.panel_loss(&syn, cfg.seed, cfg.inner_model_samples)?;
    Ok(syn)
}

/// A fresh init advanced `U{0..=net_steps}` full-batch steps on `syn`.
fn sample_model(
    arch: &ArchSpec,
    syn: &SyntheticDataset,
    cfg: &DistillConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<ModelState> {
    use rand::Rng;
    let mut model = init_model(arch, rng.next_u64())?;
    let steps = rng.random_range(0..=cfg.net_steps);
    if steps == 0 {
        return Ok(model);
    }
    let batch = syn.as_batch();
    for _ in 0..steps {
        let (_, grad) = loss_and_grad(&model, &batch)?;
        for (w, g) in model.params.iter_mut().zip(&grad.0) {
            *w -= cfg.net_lr * g;
        }
    }
    Ok(model)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator; 0 for a single run).
    pub std: f64,
    pub accuracies: Vec<f64>,
}

impl EvalSummary {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = if accuracies.len() > 1 {
            (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std, accuracies }
    }
}

/// Validation accuracy of models trained on `data`, one per seed. Seed `s`
/// sets both the init and the ordering.
pub fn eval_training_set(
    data: &Dataset,
    arch: &ArchSpec,
    val: &Dataset,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<EvalSummary> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    let mask = SparsityMask::dense(arch);
    let mut accuracies = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let init = init_model(arch, seed)?;
        let trained = train(&init, data, &cfg.with_ordering_seed(seed), &mask)?;
        accuracies.push(evaluate(&trained.model, val)?.accuracy);
    }
    Ok(EvalSummary::from_accuracies(accuracies))
}

/// Trains fresh models on the synthetic set and reports validation accuracy.
pub fn eval_synthetic(
    syn: &SyntheticDataset,
    arch: &ArchSpec,
    val: &Dataset,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<EvalSummary> {
    if syn.dim != val.dim {
        return Err(Error::DimensionMismatch(format!(
            "synthetic dim {} vs validation dim {}",
            syn.dim, val.dim
        )));
    }
    eval_training_set(&syn.to_dataset()?, arch, val, cfg, seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;

    #[test]
    fn cosine_gradient_matches_finite_differences() {
        let arch = ArchSpec::mlp(&[2, 3, 2]);
        let layers = arch.layers();
        let n = arch.param_count();
        let a: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let b: Vec<f64> = (0..n).map(|i| ((i * 5 % 13) as f64 - 6.0) / 4.0).collect();
        let (_, g) = cosine_distance(&a, &b, &layers);
        let h = 1e-6;
        for i in 0..n {
            let mut ap = a.clone();
            ap[i] += h;
            let mut am = a.clone();
            am[i] -= h;
            let fd = (cosine_distance(&ap, &b, &layers).0 - cosine_distance(&am, &b, &layers).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "coord {i}: {fd} vs {}", g[i]);
        }
        let (same, _) = cosine_distance(&a, &a, &layers);
        assert!(same.abs() < 1e-12);
    }

    #[test]
    fn feature_gradient_matches_finite_differences() {
        let real = make_blobs(2, 30, 2, 1.0, 7).unwrap();
        let arch = ArchSpec::mlp(&[2, 6, 2]);
        let matcher = Matcher {
            arch: &arch,
            layers: arch.layers(),
            class_rows: real.class_indices(),
            real: &real,
            match_batch: 8,
        };
        let mut rng = rng::stream(3, streams::DISTILL);
        let idx = sample_per_class(&real, 4, &mut rng).unwrap();
        let syn = SyntheticDataset::from_features(real.gather(&idx).features, 2, 2, 4, "blobs", String::new()).unwrap();
        let model = init_model(&arch, 5).unwrap();

        let mut grad = vec![0.0; syn.features.len()];
        matcher.evaluate(&model, &syn, &mut rng.clone(), Some(&mut grad)).unwrap();
        let mut worst = 0.0f64;
        for k in 0..syn.features.len() {
            let h = 1e-5;
            let at = |delta: f64| {
                let mut s = syn.clone();
                s.features[k] += delta;
                matcher.evaluate(&model, &s, &mut rng.clone(), None).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3));
        }
        assert!(worst < 1e-2, "worst relative error {worst}");
    }

    #[test]
    fn class_mean_init_without_steps() {
        let real = make_blobs(3, 40, 2, 0.5, 7).unwrap();
        let cfg = DistillConfig {
            outer_steps: 0,
            init_mode: InitMode::ClassMean,
            ..DistillConfig::default()
        };
        let syn = distill(&real, &ArchSpec::mlp(&[2, 8, 3]), 1, &cfg).unwrap();
        for (c, members) in real.class_indices().iter().enumerate() {
            for d in 0..2 {
                let mean = members.iter().map(|&i| real.row(i)[d]).sum::<f64>() / members.len() as f64;
                assert!((syn.features[c * 2 + d] - mean).abs() < 1e-12);
            }
        }
        assert_eq!(syn.labels, vec![0, 1, 2]);
    }

    #[test]
    fn labels_fixed_and_deterministic() {
        let real = make_blobs(3, 40, 2, 0.5, 7).unwrap();
        let arch = ArchSpec::mlp(&[2, 8, 3]);
        let cfg = DistillConfig {
            outer_steps: 5,
            ..DistillConfig::default()
        };
        let a = distill(&real, &arch, 4, &cfg).unwrap();
        let b = distill(&real, &arch, 4, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_dataset().unwrap().class_counts(), vec![4, 4, 4]);
        assert_eq!(a.matching_loss_history.len(), 5);
    }

    #[test]
    fn rejects_oversized_ipc() {
        let real = make_blobs(2, 5, 2, 0.5, 7).unwrap();
        let arch = ArchSpec::mlp(&[2, 2]);
        assert!(distill(&real, &arch, 6, &DistillConfig::default()).is_err());
        assert!(SyntheticDataset::random_subset(&real, 6, 0).is_err());
    }

    #[test]
    fn summary_moments() {
        let s = EvalSummary::from_accuracies(vec![0.5, 0.7, 0.9]);
        assert!((s.mean - 0.7).abs() < 1e-12);
        assert!((s.std - 0.2).abs() < 1e-12);
        assert_eq!(EvalSummary::from_accuracies(vec![0.4]).std, 0.0);
    }
}
