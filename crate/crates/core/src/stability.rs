//! Instability analysis: one masked init trained under two data orderings,
//! then the training loss along the straight line between the two results.

use crate::data::Dataset;
use crate::nn::{blend, evaluate, ModelState, TrainConfig, TrainedModel};
use crate::pruning::{apply_and_retrain, sparsity, SparsityMask};
use crate::{Error, Result};

pub const DEFAULT_NUM_ALPHAS: usize = 21;
pub const DEFAULT_TOLERANCE: f64 = 0.02;
/// Below this magnitude an IMP barrier is treated as zero when forming ratios.
pub const RATIO_EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CurveMeta {
    pub sparsity: f64,
    pub seed_a: u64,
    pub seed_b: u64,
    pub dataset: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationCurve {
    pub alphas: Vec<f64>,
    /// Loss on the full training set at each alpha.
    pub train_loss: Vec<f64>,
    pub val_accuracy: Vec<f64>,
    pub meta: CurveMeta,
}

impl InterpolationCurve {
    pub fn new(alphas: Vec<f64>, train_loss: Vec<f64>, val_accuracy: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        if alphas.len() < 2 || alphas.len() != train_loss.len() || alphas.len() != val_accuracy.len() {
            return Err(Error::InvalidConfig(format!(
                "curve vectors must share a length >= 2 (alphas {}, loss {}, accuracy {})",
                alphas.len(),
                train_loss.len(),
                val_accuracy.len()
            )));
        }
        if alphas[0] != 0.0 || *alphas.last().expect("len >= 2") != 1.0 {
            return Err(Error::InvalidConfig("curve alphas must start at 0 and end at 1".into()));
        }
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("curve alphas must be strictly increasing".into()));
        }
        Ok(Self {
            alphas,
            train_loss,
            val_accuracy,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Evaluates `num_alphas` evenly spaced points between `a` and `b`.
///
/// Point `i` uses weights `(n - i) / n` and `i / n` with `n = num_alphas - 1`,
/// so swapping `a` and `b` reverses the curve exactly.
pub fn curve_between(
    a: &ModelState,
    b: &ModelState,
    train_data: &Dataset,
    val: &Dataset,
    num_alphas: usize,
    meta: CurveMeta,
) -> Result<InterpolationCurve> {
    if num_alphas < 3 {
        return Err(Error::InvalidConfig(format!("num_alphas must be >= 3, got {num_alphas}")));
    }
    let n = (num_alphas - 1) as f64;
    let mut alphas = Vec::with_capacity(num_alphas);
    let mut train_loss = Vec::with_capacity(num_alphas);
    let mut val_accuracy = Vec::with_capacity(num_alphas);
    for i in 0..num_alphas {
        let (wa, wb) = ((num_alphas - 1 - i) as f64 / n, i as f64 / n);
        let point = blend(a, b, wa, wb)?;
        alphas.push(wb);
        train_loss.push(evaluate(&point, train_data)?.loss);
        val_accuracy.push(evaluate(&point, val)?.accuracy);
    }
    InterpolationCurve::new(alphas, train_loss, val_accuracy, meta)
}

/// Result of an instability analysis: the curve and both trained endpoints.
#[derive(Clone, Debug)]
pub struct InstabilityRun {
    pub curve: InterpolationCurve,
    pub model_a: TrainedModel,
    pub model_b: TrainedModel,
}

/// Trains `mask` applied to `init` on `data` under orderings `seed_a` and
/// `seed_b` and interpolates between the results.
#[allow(clippy::too_many_arguments)]
pub fn instability_analysis(
    init: &ModelState,
    mask: &SparsityMask,
    data: &Dataset,
    val: &Dataset,
    seed_a: u64,
    seed_b: u64,
    cfg: &TrainConfig,
    num_alphas: usize,
) -> Result<InstabilityRun> {
    if seed_a == seed_b {
        return Err(Error::IdenticalOrderings(seed_a));
    }
    if num_alphas < 3 {
        return Err(Error::InvalidConfig(format!("num_alphas must be >= 3, got {num_alphas}")));
    }
    let model_a = apply_and_retrain(init, mask, data, &cfg.with_ordering_seed(seed_a))?;
    let model_b = apply_and_retrain(init, mask, data, &cfg.with_ordering_seed(seed_b))?;
    let meta = CurveMeta {
        sparsity: sparsity(mask),
        seed_a,
        seed_b,
        dataset: data.name.clone(),
    };
    let curve = curve_between(&model_a.model, &model_b.model, data, val, num_alphas, meta)?;
    Ok(InstabilityRun { curve, model_a, model_b })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barrier {
    /// `loss(0.5) - (loss(0) + loss(1)) / 2`; may be negative.
    pub halfway: f64,
    /// Max over alphas of `loss(alpha)` minus the straight line between the
    /// endpoint losses. Endpoints are included, so this is never negative.
    pub max: f64,
    /// `true` when 0.5 was not sampled and `halfway` was linearly
    /// interpolated from the two nearest alphas.
    pub halfway_interpolated: bool,
}

pub fn barrier_height(curve: &InterpolationCurve) -> Barrier {
    let l0 = curve.train_loss[0];
    let l1 = *curve.train_loss.last().expect("valid curve");
    let (mid, interpolated) = match curve.alphas.iter().position(|&a| a == 0.5) {
        Some(i) => (curve.train_loss[i], false),
        None => {
            let hi = curve.alphas.iter().position(|&a| a > 0.5).expect("last alpha is 1");
            let lo = hi - 1;
            let t = (0.5 - curve.alphas[lo]) / (curve.alphas[hi] - curve.alphas[lo]);
            (curve.train_loss[lo] + t * (curve.train_loss[hi] - curve.train_loss[lo]), true)
        }
    };
    let max = curve
        .alphas
        .iter()
        .zip(&curve.train_loss)
        .map(|(&a, &l)| l - ((1.0 - a) * l0 + a * l1))
        .fold(f64::NEG_INFINITY, f64::max);
    Barrier {
        halfway: mid - 0.5 * (l0 + l1),
        max,
        halfway_interpolated: interpolated,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport {
    pub barrier_halfway: f64,
    pub barrier_max: f64,
    pub stable: bool,
    pub tolerance: f64,
    pub sparsity: f64,
    pub halfway_interpolated: bool,
}

/// Stable iff the max barrier does not exceed `tolerance`.
pub fn stability_verdict(curve: &InterpolationCurve, tolerance: f64) -> Result<StabilityReport> {
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let b = barrier_height(curve);
    Ok(StabilityReport {
        barrier_halfway: b.halfway,
        barrier_max: b.max,
        stable: b.max <= tolerance,
        tolerance,
        sparsity: curve.meta.sparsity,
        halfway_interpolated: b.halfway_interpolated,
    })
}

/// Mean barriers of several runs at one sparsity. `stable` holds for the mean
/// max barrier, and `halfway_interpolated` if any input was interpolated.
pub fn mean_report(reports: &[StabilityReport]) -> Result<StabilityReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidConfig("no stability reports to average".into()))?;
    if reports.iter().any(|r| (r.sparsity - first.sparsity).abs() > 1e-9 || r.tolerance != first.tolerance) {
        return Err(Error::InvalidConfig("averaged reports must share sparsity and tolerance".into()));
    }
    let n = reports.len() as f64;
    let barrier_halfway = reports.iter().map(|r| r.barrier_halfway).sum::<f64>() / n;
    let barrier_max = reports.iter().map(|r| r.barrier_max).sum::<f64>() / n;
    Ok(StabilityReport {
        barrier_halfway,
        barrier_max,
        stable: barrier_max <= first.tolerance,
        tolerance: first.tolerance,
        sparsity: first.sparsity,
        halfway_interpolated: reports.iter().any(|r| r.halfway_interpolated),
    })
}

/// Synthetic-over-IMP halfway barrier ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BarrierRatio {
    Finite(f64),
    /// `|imp barrier| < RATIO_EPSILON`; the ratio is not reported.
    DegenerateDenominator { numerator: f64, denominator: f64 },
}

impl BarrierRatio {
    pub fn value(&self) -> Option<f64> {
        match *self {
            BarrierRatio::Finite(v) => Some(v),
            BarrierRatio::DegenerateDenominator { .. } => None,
        }
    }
}

pub fn barrier_ratio(syn: &StabilityReport, imp: &StabilityReport) -> Result<BarrierRatio> {
    if (syn.sparsity - imp.sparsity).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "barrier ratio needs matched sparsity, got {} vs {}",
            syn.sparsity, imp.sparsity
        )));
    }
    if imp.barrier_halfway.abs() < RATIO_EPSILON {
        return Ok(BarrierRatio::DegenerateDenominator {
            numerator: syn.barrier_halfway,
            denominator: imp.barrier_halfway,
        });
    }
    Ok(BarrierRatio::Finite(syn.barrier_halfway / imp.barrier_halfway))
}
