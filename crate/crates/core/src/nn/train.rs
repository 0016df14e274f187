use serde::{Deserialize, Serialize};

use super::model::{GradVector, ModelState};
use super::net::{self, Gates, Mode};
use crate::data::{Dataset, LabeledBatch};
use crate::pruning::SparsityMask;
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Minibatch SGD with classical momentum and no weight decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Seeds the per-epoch data ordering; the only source of SGD noise.
    pub ordering_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.05,
            momentum: 0.9,
            ordering_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_ordering_seed(&self, ordering_seed: u64) -> Self {
        Self {
            ordering_seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }

    /// Training points consumed by one run on a dataset of `n` rows.
    pub fn points_seen(&self, n: usize) -> usize {
        self.epochs * n
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eval {
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: ModelState,
    /// Per-epoch mean minibatch loss and accuracy, measured before each step.
    pub history: Vec<Eval>,
}

fn check_batch(model: &ModelState, batch: &LabeledBatch) -> Result<()> {
    if batch.dim != model.arch.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "batch feature dim {} does not match {} input dim {}",
            batch.dim,
            model.arch.describe(),
            model.arch.input_dim()
        )));
    }
    Ok(())
}

/// Mean cross-entropy over the batch and its gradient.
pub fn loss_and_grad(model: &ModelState, batch: &LabeledBatch) -> Result<(f64, GradVector)> {
    check_batch(model, batch)?;
    let pass = net::run(&model.arch, &model.params, &batch.features, &batch.labels, Mode::Grad)?;
    Ok((pass.loss, GradVector(pass.grad)))
}

pub fn loss(model: &ModelState, batch: &LabeledBatch) -> Result<f64> {
    check_batch(model, batch)?;
    Ok(net::run(&model.arch, &model.params, &batch.features, &batch.labels, Mode::Forward)?.loss)
}

/// Loss, parameter gradient and input gradient (`batch.len() x dim`).
pub(crate) fn loss_grad_input(model: &ModelState, batch: &LabeledBatch) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_batch(model, batch)?;
    let pass = net::run(
        &model.arch,
        &model.params,
        &batch.features,
        &batch.labels,
        Mode::GradAndInput,
    )?;
    Ok((pass.loss, pass.grad, pass.input_grad))
}

/// ReLU gates of the model on `batch`.
pub(crate) fn relu_gates(model: &ModelState, batch: &LabeledBatch) -> Result<Gates> {
    check_batch(model, batch)?;
    Ok(net::run(&model.arch, &model.params, &batch.features, &batch.labels, Mode::Forward)?.gates)
}

/// Loss and gradient with the ReLU gates held at `gates`.
pub(crate) fn loss_and_grad_gated(model: &ModelState, batch: &LabeledBatch, gates: &Gates, want_grad: bool) -> Result<(f64, Vec<f64>)> {
    check_batch(model, batch)?;
    let mode = if want_grad { Mode::Grad } else { Mode::Forward };
    let pass = net::run_gated(&model.arch, &model.params, &batch.features, &batch.labels, mode, Some(gates))?;
    Ok((pass.loss, pass.grad))
}

const EVAL_CHUNK: usize = 512;

/// Loss and accuracy over a whole dataset.
pub fn evaluate(model: &ModelState, data: &Dataset) -> Result<Eval> {
    if data.dim != model.arch.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "dataset dim {} does not match {} input dim {}",
            data.dim,
            model.arch.describe(),
            model.arch.input_dim()
        )));
    }
    let (mut loss_sum, mut correct) = (0.0, 0);
    for start in (0..data.len()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(data.len());
        let pass = net::run(
            &model.arch,
            &model.params,
            &data.features[start * data.dim..end * data.dim],
            &data.labels[start..end],
            Mode::Forward,
        )?;
        loss_sum += pass.loss * (end - start) as f64;
        correct += pass.correct;
    }
    Ok(Eval {
        loss: loss_sum / data.len() as f64,
        accuracy: correct as f64 / data.len() as f64,
    })
}

fn check_aligned(len: usize, what: &str, other: usize) -> Result<()> {
    if len != other {
        return Err(Error::DimensionMismatch(format!("{what} has length {other}, params have {len}")));
    }
    Ok(())
}

fn step_in_place(params: &mut [f64], grad: &[f64], velocity: &mut [f64], cfg: &TrainConfig, mask: &SparsityMask) {
    for i in 0..params.len() {
        if mask.bits[i] {
            velocity[i] = cfg.momentum * velocity[i] + grad[i];
            params[i] -= cfg.learning_rate * velocity[i];
        } else {
            velocity[i] = 0.0;
            params[i] = 0.0;
        }
    }
}

/// One momentum step: `v <- m*v + g`, `w <- w - lr*v`, then both zeroed
/// wherever the mask bit is 0.
pub fn sgd_step(
    model: &ModelState,
    grad: &GradVector,
    velocity: &GradVector,
    cfg: &TrainConfig,
    mask: &SparsityMask,
) -> Result<(ModelState, GradVector)> {
    let n = model.params.len();
    check_aligned(n, "gradient", grad.len())?;
    check_aligned(n, "velocity", velocity.len())?;
    check_aligned(n, "mask", mask.len())?;
    let mut params = model.params.clone();
    let mut vel = velocity.0.clone();
    step_in_place(&mut params, &grad.0, &mut vel, cfg, mask);
    Ok((model.with_params(params), GradVector(vel)))
}

/// Minibatch SGD for `cfg.epochs` epochs over `data`.
///
/// Epoch `e` visits the rows in the permutation drawn from the
/// `(ordering_seed, ORDERING, e)` substream, in consecutive chunks of
/// `batch_size` (the final chunk may be smaller). Masked parameters are
/// zeroed before the first step and stay exactly zero.
pub fn train(model: &ModelState, data: &Dataset, cfg: &TrainConfig, mask: &SparsityMask) -> Result<TrainedModel> {
    cfg.validate()?;
    check_aligned(model.params.len(), "mask", mask.len())?;
    if data.dim != model.arch.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "dataset dim {} does not match {} input dim {}",
            data.dim,
            model.arch.describe(),
            model.arch.input_dim()
        )));
    }
    if cfg.batch_size > data.len() {
        return Err(Error::InvalidConfig(format!(
            "batch_size {} exceeds dataset size {}",
            cfg.batch_size,
            data.len()
        )));
    }

    let mut params = model.params.clone();
    for (p, &keep) in params.iter_mut().zip(&mask.bits) {
        if !keep {
            *p = 0.0;
        }
    }
    let mut velocity = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = rng::permutation(
            data.len(),
            &mut rng::substream(cfg.ordering_seed, streams::ORDERING, epoch as u64),
        );
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.gather(chunk);
            let pass = net::run(&model.arch, &params, &batch.features, &batch.labels, Mode::Grad)?;
            loss_sum += pass.loss * chunk.len() as f64;
            correct += pass.correct;
            step_in_place(&mut params, &pass.grad, &mut velocity, cfg, mask);
        }
        history.push(Eval {
            loss: loss_sum / data.len() as f64,
            accuracy: correct as f64 / data.len() as f64,
        });
    }
    Ok(TrainedModel {
        model: model.with_params(params),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_blobs;
    use crate::nn::{init_model, ArchSpec};

    fn three_param_model(params: [f64; 3]) -> ModelState {
        // mlp [2, 1]: two weights and one bias
        ModelState::new(ArchSpec::mlp(&[2, 1]), params.to_vec(), 0).unwrap()
    }

    fn cfg(lr: f64, momentum: f64) -> TrainConfig {
        TrainConfig {
            epochs: 1,
            batch_size: 1,
            learning_rate: lr,
            momentum,
            ordering_seed: 0,
        }
    }

    #[test]
    fn plain_gradient_step() {
        let m = three_param_model([1.0, 2.0, 3.0]);
        let mask = SparsityMask::dense(&m.arch);
        let g = GradVector(vec![0.5, -1.0, 2.0]);
        let (next, vel) = sgd_step(&m, &g, &GradVector::zeros(3), &cfg(0.1, 0.0), &mask).unwrap();
        assert_eq!(next.params, vec![1.0 - 0.1 * 0.5, 2.0 + 0.1, 3.0 - 0.1 * 2.0]);
        assert_eq!(vel, g);
    }

    #[test]
    fn masked_index_stays_zero() {
        let m = three_param_model([1.0, 2.0, 3.0]);
        let mask = SparsityMask::from_bits(&m.arch, vec![false, true, true]).unwrap();
        let g = GradVector(vec![5.0, 1.0, 1.0]);
        let (next, vel) = sgd_step(&m, &g, &GradVector(vec![1.0, 0.0, 0.0]), &cfg(0.1, 0.9), &mask).unwrap();
        assert_eq!(next.params[0].to_bits(), 0.0f64.to_bits());
        assert_eq!(vel.0[0], 0.0);
    }

    #[test]
    fn momentum_matches_hand_recurrence() {
        let m = three_param_model([0.3, -0.7, 1.1]);
        let mask = SparsityMask::dense(&m.arch);
        let c = cfg(0.05, 0.9);
        let g1 = [0.2, -0.4, 0.6];
        let g2 = [-0.1, 0.3, 0.5];
        let (m1, v1) = sgd_step(&m, &GradVector(g1.to_vec()), &GradVector::zeros(3), &c, &mask).unwrap();
        let (m2, _) = sgd_step(&m1, &GradVector(g2.to_vec()), &v1, &c, &mask).unwrap();
        for i in 0..3 {
            let v1 = g1[i];
            let w1 = m.params[i] - 0.05 * v1;
            let v2 = 0.9 * v1 + g2[i];
            let w2 = w1 - 0.05 * v2;
            assert!((m2.params[i] - w2).abs() <= 1e-12);
        }
    }

    #[test]
    fn misaligned_vectors_rejected() {
        let m = three_param_model([1.0, 2.0, 3.0]);
        let mask = SparsityMask::dense(&m.arch);
        assert!(sgd_step(&m, &GradVector::zeros(2), &GradVector::zeros(3), &cfg(0.1, 0.0), &mask).is_err());
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = make_blobs(3, 10, 2, 0.5, 1).unwrap();
        let m = init_model(&ArchSpec::mlp(&[2, 8, 3]), 3).unwrap();
        let c = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&m, &data, &c, &SparsityMask::dense(&m.arch)).unwrap();
        assert_eq!(out.model, m);
        assert!(out.history.is_empty());
    }

    #[test]
    fn batch_larger_than_data_rejected() {
        let data = make_blobs(2, 3, 2, 0.5, 1).unwrap();
        let m = init_model(&ArchSpec::mlp(&[2, 2]), 3).unwrap();
        let c = TrainConfig {
            batch_size: 7,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&m, &data, &c, &SparsityMask::dense(&m.arch)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let m = init_model(&ArchSpec::mlp(&[3, 2]), 0).unwrap();
        let batch = LabeledBatch::new(vec![0.0; 4], 2, vec![0, 1]).unwrap();
        assert!(matches!(loss_and_grad(&m, &batch), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn non_finite_loss_names_layer() {
        let arch = ArchSpec::mlp(&[1, 2, 2]);
        let mut m = init_model(&arch, 0).unwrap();
        m.params[0] = 1e300;
        m.params[1] = 1e300;
        let batch = LabeledBatch::new(vec![1e300], 1, vec![0]).unwrap();
        match loss_and_grad(&m, &batch) {
            Err(Error::NonFiniteLoss { layer }) => assert_eq!(layer, "dense1"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }
}
