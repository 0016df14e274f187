//! Diagonal of the loss Hessian for one batch, and summary statistics over
//! the surviving coordinates of a mask.
//!
//! Two estimators share one [`Objective`] interface: a per-coordinate second
//! central difference (exact up to truncation error, one pair of loss
//! evaluations per parameter) and a Hutchinson estimator averaging
//! `z * (H z)` over Rademacher probes, with `H z` taken as a central
//! difference of gradients. The model wrappers evaluate both with the ReLU
//! gates held as they are at the model's parameters, so they measure the
//! smooth piece of the loss containing the model and ReLU kinks contribute
//! nothing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledBatch;
use crate::nn::{loss, loss_and_grad, loss_and_grad_gated, relu_gates, Gates, ModelState};
use crate::pruning::SparsityMask;
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Largest parameter count the exact finite-difference diagonal accepts.
pub const EXACT_PARAM_LIMIT: usize = 10_000;
pub const DEFAULT_EXACT_STEP: f64 = 1e-4;

/// A scalar function of a flat parameter vector with its gradient.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> Result<f64>;
    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>>;
}

/// Mean cross-entropy of a model's architecture on a fixed batch.
///
/// Built with [`BatchLoss::frozen`], the ReLU gates stay as they are at the
/// model's parameters, so nearby evaluations see one smooth piece of the loss
/// and finite differences never straddle a kink.
pub struct BatchLoss<'a> {
    model: &'a ModelState,
    batch: &'a LabeledBatch,
    gates: Option<Gates>,
}

impl<'a> BatchLoss<'a> {
    pub fn new(model: &'a ModelState, batch: &'a LabeledBatch) -> Self {
        Self { model, batch, gates: None }
    }

    pub fn frozen(model: &'a ModelState, batch: &'a LabeledBatch) -> Result<Self> {
        Ok(Self {
            model,
            batch,
            gates: Some(relu_gates(model, batch)?),
        })
    }

    fn at(&self, w: &[f64]) -> Result<ModelState> {
        ModelState::new(self.model.arch.clone(), w.to_vec(), self.model.seed)
    }
}

impl Objective for BatchLoss<'_> {
    fn dim(&self) -> usize {
        self.model.param_count()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        match &self.gates {
            Some(g) => Ok(loss_and_grad_gated(&self.at(w)?, self.batch, g, false)?.0),
            None => loss(&self.at(w)?, self.batch),
        }
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        match &self.gates {
            Some(g) => Ok(loss_and_grad_gated(&self.at(w)?, self.batch, g, true)?.1),
            None => Ok(loss_and_grad(&self.at(w)?, self.batch)?.1 .0),
        }
    }
}

/// `(f(w + h e_i) - 2 f(w) + f(w - h e_i)) / h^2` for every coordinate.
pub fn diag_exact_fd(f: &impl Objective, w: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be > 0, got {h}")));
    }
    if w.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!("point has {} coords, objective {}", w.len(), f.dim())));
    }
    if w.len() > EXACT_PARAM_LIMIT {
        return Err(Error::TooManyParams {
            count: w.len(),
            limit: EXACT_PARAM_LIMIT,
        });
    }
    let center = f.value(w)?;
    let mut probe = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        probe[i] = w[i] + h;
        let plus = f.value(&probe)?;
        probe[i] = w[i] - h;
        let minus = f.value(&probe)?;
        probe[i] = w[i];
        out.push((plus - 2.0 * center + minus) / (h * h));
    }
    Ok(out)
}

/// Relative step of the gradient difference used for Hessian-vector products,
/// scaled by `1 + max |w_i|`.
pub const HVP_STEP: f64 = 1e-3;

/// Hutchinson diagonal estimate from `probes` Rademacher vectors drawn from
/// the `(seed, HESSIAN)` stream, accumulated in probe order.
pub fn diag_hutchinson(f: &impl Objective, w: &[f64], probes: usize, seed: u64) -> Result<Vec<f64>> {
    if probes == 0 {
        return Err(Error::InvalidConfig("need at least one probe".into()));
    }
    if w.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!("point has {} coords, objective {}", w.len(), f.dim())));
    }
    let w_max = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eps = HVP_STEP * (1.0 + w_max);
    let mut rng = rng::stream(seed, streams::HESSIAN);
    let mut sum = vec![0.0; w.len()];
    let mut z = vec![0.0; w.len()];
    let mut shifted = vec![0.0; w.len()];
    for probe in 0..probes {
        z.iter_mut().for_each(|zi| *zi = if rng.random::<bool>() { 1.0 } else { -1.0 });
        shifted.iter_mut().zip(w.iter().zip(&z)).for_each(|(s, (w, z))| *s = w + eps * z);
        let plus = f.gradient(&shifted);
        shifted.iter_mut().zip(w.iter().zip(&z)).for_each(|(s, (w, z))| *s = w - eps * z);
        let minus = f.gradient(&shifted);
        let (plus, minus) = match (plus, minus) {
            (Ok(p), Ok(m)) => (p, m),
            (Err(Error::NonFiniteLoss { .. }), _) | (_, Err(Error::NonFiniteLoss { .. })) => {
                return Err(Error::NonFiniteProbe { probe })
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        for ((s, z), (p, m)) in sum.iter_mut().zip(&z).zip(plus.iter().zip(&minus)) {
            let hz = (p - m) / (2.0 * eps);
            if !hz.is_finite() {
                return Err(Error::NonFiniteProbe { probe });
            }
            *s += z * hz;
        }
    }
    Ok(sum.into_iter().map(|s| s / probes as f64).collect())
}

/// Exact finite-difference diagonal of the batch loss at `model`, with ReLU
/// gates frozen at `model`.
pub fn hessian_diag_exact(model: &ModelState, batch: &LabeledBatch, h: f64) -> Result<Vec<f64>> {
    diag_exact_fd(&BatchLoss::frozen(model, batch)?, &model.params, h)
}

/// Stochastic diagonal of the batch loss at `model`, with ReLU gates frozen
/// at `model`.
pub fn hessian_diag_estimate(model: &ModelState, batch: &LabeledBatch, probes: usize, seed: u64) -> Result<Vec<f64>> {
    diag_hutchinson(&BatchLoss::frozen(model, batch)?, &model.params, probes, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianMethod {
    ExactFd,
    Stochastic,
}

impl HessianMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HessianMethod::ExactFd => "exact_fd",
            HessianMethod::Stochastic => "stochastic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianDiagStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Mean of `|diag_i|`.
    pub avg_magnitude: f64,
    pub count: usize,
    pub probes_used: usize,
    pub method: HessianMethod,
}

/// Statistics of `diag` over the coordinates the mask keeps.
pub fn diag_stats(diag: &[f64], mask: &SparsityMask, method: HessianMethod, probes_used: usize) -> Result<HessianDiagStats> {
    if diag.len() != mask.len() {
        return Err(Error::DimensionMismatch(format!(
            "diagonal has {} entries, mask {}",
            diag.len(),
            mask.len()
        )));
    }
    let kept: Vec<f64> = diag.iter().zip(&mask.bits).filter(|(_, &b)| b).map(|(&d, _)| d).collect();
    if kept.is_empty() {
        return Err(Error::Degenerate("mask keeps no coordinates".into()));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    // Shifting by a sample keeps a constant diagonal at exactly zero spread.
    let shift = kept[0];
    let shifted_mean = kept.iter().map(|d| d - shift).sum::<f64>() / n;
    let var = kept.iter().map(|d| (d - shift - shifted_mean).powi(2)).sum::<f64>() / n;
    Ok(HessianDiagStats {
        min: kept.iter().copied().fold(f64::INFINITY, f64::min),
        max: kept.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: var.sqrt(),
        avg_magnitude: kept.iter().map(|d| d.abs()).sum::<f64>() / n,
        count: kept.len(),
        probes_used,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ArchSpec;

    struct Quadratic(Vec<f64>);

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, w: &[f64]) -> Result<f64> {
            Ok(0.5 * self.0.iter().zip(w).map(|(a, w)| a * w * w).sum::<f64>())
        }
        fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.iter().zip(w).map(|(a, w)| a * w).collect())
        }
    }

    struct Linear(Vec<f64>);

    impl Objective for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, w: &[f64]) -> Result<f64> {
            Ok(self.0.iter().zip(w).map(|(c, w)| c * w).sum())
        }
        fn gradient(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn quadratic_both_methods() {
        let q = Quadratic(vec![1.0, 2.0, 3.0]);
        let w = [0.3, -1.2, 2.0];
        for (d, a) in diag_exact_fd(&q, &w, 1e-4).unwrap().iter().zip(&q.0) {
            assert!((d - a).abs() < 1e-4, "{d} vs {a}");
        }
        for (d, a) in diag_hutchinson(&q, &w, 1, 5).unwrap().iter().zip(&q.0) {
            assert!((d - a).abs() < 1e-4, "{d} vs {a}");
        }
    }

    #[test]
    fn linear_has_no_curvature() {
        let l = Linear(vec![1.5, -2.0, 0.25]);
        let w = [1.0, 2.0, 3.0];
        assert!(diag_exact_fd(&l, &w, 1e-4).unwrap().iter().all(|d| d.abs() < 1e-4));
        assert!(diag_hutchinson(&l, &w, 3, 0).unwrap().iter().all(|d| d.abs() < 1e-4));
    }

    #[test]
    fn one_weight_logistic() {
        // A [1, 2] net: logits (w0 x + b0, w1 x + b1). With everything but w0
        // at zero, the loss for label 0 is ln(1 + e^{-w0 x}) and its second
        // derivative in w0 is s (1 - s) x^2 with s = sigmoid(w0 x).
        let x = 1.7;
        let w0 = 0.4;
        let model = ModelState::new(ArchSpec::mlp(&[1, 2]), vec![w0, 0.0, 0.0, 0.0], 0).unwrap();
        let batch = LabeledBatch::new(vec![x], 1, vec![0]).unwrap();
        let s = 1.0 / (1.0 + (-w0 * x).exp());
        let expected = s * (1.0 - s) * x * x;
        let diag = hessian_diag_exact(&model, &batch, 1e-4).unwrap();
        assert!((diag[0] - expected).abs() < 1e-4, "{} vs {expected}", diag[0]);
    }

    #[test]
    fn guards() {
        let q = Quadratic(vec![1.0; EXACT_PARAM_LIMIT + 1]);
        let w = vec![0.0; EXACT_PARAM_LIMIT + 1];
        assert!(matches!(diag_exact_fd(&q, &w, 1e-4), Err(Error::TooManyParams { .. })));
        assert!(diag_exact_fd(&Quadratic(vec![1.0]), &[0.0], 0.0).is_err());
        assert!(diag_hutchinson(&Quadratic(vec![1.0]), &[0.0], 0, 0).is_err());
    }

    #[test]
    fn stats_arithmetic_and_masking() {
        let arch = ArchSpec::mlp(&[2, 1]);
        let dense = SparsityMask::dense(&arch);
        let s = diag_stats(&[-1.0, 2.0, 3.0], &dense, HessianMethod::ExactFd, 0).unwrap();
        assert_eq!((s.min, s.max, s.count), (-1.0, 3.0, 3));
        assert!((s.mean - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.avg_magnitude, 2.0);

        let masked = SparsityMask::from_bits(&arch, vec![false, true, true]).unwrap();
        let s = diag_stats(&[-1.0, 2.0, 3.0], &masked, HessianMethod::ExactFd, 0).unwrap();
        assert_eq!((s.min, s.mean), (2.0, 2.5));

        let s = diag_stats(&[0.7, 0.7, 0.7], &dense, HessianMethod::Stochastic, 10).unwrap();
        assert_eq!(s.std, 0.0);
        assert!(diag_stats(&[1.0, 2.0], &dense, HessianMethod::ExactFd, 0).is_err());
    }
}
