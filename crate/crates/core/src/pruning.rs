//! Sparsity masks, magnitude pruning, and the IMP / distilled-pruning loops.
//!
//! Both loops rewind to the original initialization after every round: the
//! surviving weights of the next round's starting point are bitwise copies of
//! the init, and pruned weights are exactly zero.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::distill::SyntheticDataset;
use crate::nn::{evaluate, train, ArchSpec, Eval, ModelState, TrainConfig, TrainedModel};
use crate::{Error, Result};

/// Binary keep-mask over a model's flat parameters.
///
/// `prunable[i]` marks weight coordinates; biases are never prunable, so
/// their bit is always 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityMask {
    pub bits: Vec<bool>,
    pub prunable: Vec<bool>,
}

impl SparsityMask {
    pub fn dense(arch: &ArchSpec) -> Self {
        let n = arch.param_count();
        let mut prunable = vec![false; n];
        for layer in arch.layers() {
            prunable[layer.weights].fill(true);
        }
        Self {
            bits: vec![true; n],
            prunable,
        }
    }

    pub fn from_bits(arch: &ArchSpec, bits: Vec<bool>) -> Result<Self> {
        let dense = Self::dense(arch);
        if bits.len() != dense.bits.len() {
            return Err(Error::InvalidMask(format!(
                "mask has {} bits, {} has {} params",
                bits.len(),
                arch.describe(),
                dense.bits.len()
            )));
        }
        if let Some(i) = (0..bits.len()).find(|&i| !bits[i] && !dense.prunable[i]) {
            return Err(Error::InvalidMask(format!("bias coordinate {i} cannot be pruned")));
        }
        Ok(Self {
            bits,
            prunable: dense.prunable,
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn prunable_count(&self) -> usize {
        self.prunable.iter().filter(|&&p| p).count()
    }

    pub fn surviving_weights(&self) -> usize {
        self.bits.iter().zip(&self.prunable).filter(|&(&b, &p)| b && p).count()
    }

    /// Copy of `model` with every masked coordinate set to 0.
    pub fn apply(&self, model: &ModelState) -> Result<ModelState> {
        if self.len() != model.params.len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} bits, model has {} params",
                self.len(),
                model.params.len()
            )));
        }
        let mut out = model.clone();
        for (p, &keep) in out.params.iter_mut().zip(&self.bits) {
            if !keep {
                *p = 0.0;
            }
        }
        Ok(out)
    }

    /// `true` wherever `self` keeps nothing that `earlier` had pruned.
    pub fn is_subset_of(&self, earlier: &SparsityMask) -> bool {
        self.bits.iter().zip(&earlier.bits).all(|(&now, &before)| !now || before)
    }
}

/// Fraction of prunable coordinates whose bit is 0.
pub fn sparsity(mask: &SparsityMask) -> f64 {
    let prunable = mask.prunable_count();
    if prunable == 0 {
        return 0.0;
    }
    (prunable - mask.surviving_weights()) as f64 / prunable as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneScope {
    #[default]
    Global,
    PerLayer,
}

/// Zeroes `fraction` of the currently surviving prunable weights, smallest
/// magnitude first, ties broken by lower flat index.
///
/// With [`PruneScope::PerLayer`] the total count is split across layers in
/// proportion to their surviving weights (largest-remainder rounding) and
/// each layer prunes its own smallest weights.
pub fn magnitude_prune(
    trained: &ModelState,
    mask: &SparsityMask,
    fraction: f64,
    scope: PruneScope,
) -> Result<SparsityMask> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("prune fraction must lie in (0, 1), got {fraction}")));
    }
    let count = (fraction * mask.surviving_weights() as f64).round() as usize;
    prune_count(trained, mask, count, scope)
}

fn by_magnitude(params: &[f64], candidates: &mut [usize]) {
    candidates.sort_by(|&a, &b| params[a].abs().total_cmp(&params[b].abs()).then(a.cmp(&b)));
}

pub(crate) fn prune_count(
    trained: &ModelState,
    mask: &SparsityMask,
    count: usize,
    scope: PruneScope,
) -> Result<SparsityMask> {
    if mask.len() != trained.params.len() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} bits, model has {} params",
            mask.len(),
            trained.params.len()
        )));
    }
    let layers = trained.arch.layers();
    let survivors: Vec<Vec<usize>> = layers
        .iter()
        .map(|l| l.weights.clone().filter(|&i| mask.bits[i]).collect())
        .collect();
    let mut bits = mask.bits.clone();

    match scope {
        PruneScope::Global => {
            let mut all: Vec<usize> = survivors.iter().flatten().copied().collect();
            by_magnitude(&trained.params, &mut all);
            for &i in all.iter().take(count) {
                bits[i] = false;
            }
        }
        PruneScope::PerLayer => {
            let total: usize = survivors.iter().map(Vec::len).sum();
            let quotas = apportion(count, &survivors.iter().map(Vec::len).collect::<Vec<_>>(), total);
            for (mut members, quota) in survivors.into_iter().zip(quotas) {
                by_magnitude(&trained.params, &mut members);
                for &i in members.iter().take(quota) {
                    bits[i] = false;
                }
            }
        }
    }

    for layer in &layers {
        if !bits[layer.weights.clone()].iter().any(|&b| b) {
            return Err(Error::LayerWipeout {
                layer: layer.name.clone(),
            });
        }
    }
    Ok(SparsityMask {
        bits,
        prunable: mask.prunable.clone(),
    })
}

/// Splits `count` across groups proportionally to `sizes` using largest
/// remainders (ties to the lower group index).
fn apportion(count: usize, sizes: &[usize], total: usize) -> Vec<usize> {
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| count * s / total).collect();
    let mut rest: Vec<(usize, usize)> = sizes
        .iter()
        .enumerate()
        .map(|(g, &s)| ((count * s) % total, g))
        .collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = quotas.iter().sum();
    for &(_, g) in rest.iter().take(count - assigned) {
        quotas[g] += 1;
    }
    quotas
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneSchedule {
    pub rounds: usize,
    /// Fraction of surviving weights removed per round.
    pub rate: f64,
    #[serde(default)]
    pub scope: PruneScope,
}

impl PruneSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("prune rounds must be >= 1".into()));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::InvalidConfig(format!("prune rate must lie in (0, 1), got {}", self.rate)));
        }
        Ok(())
    }

    /// Target sparsity after `round` rounds: `1 - (1 - rate)^round`.
    pub fn target_sparsity(&self, round: usize) -> f64 {
        1.0 - (1.0 - self.rate).powi(round as i32)
    }

    /// Surviving prunable weights after `round` rounds out of `prunable`.
    fn target_survivors(&self, prunable: usize, round: usize) -> usize {
        (prunable as f64 * (1.0 - self.rate).powi(round as i32)).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PruneRunRecord {
    /// 1-based round number.
    pub round_index: usize,
    pub mask: SparsityMask,
    pub sparsity: f64,
    /// Training points consumed by the round that chose this mask
    /// (`epochs x pruning-set size`).
    pub pruning_dataset_size: usize,
    /// Training points consumed by all rounds up to and including this one.
    pub cumulative_dataset_size: usize,
    /// Validation metrics after training the masked init on real data.
    pub trained_eval: Eval,
}

/// Masked init trained on real data.
pub fn apply_and_retrain(
    init: &ModelState,
    mask: &SparsityMask,
    real_train: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    train(&mask.apply(init)?, real_train, cfg, mask)
}

/// Iterative magnitude pruning with rewinding to `init`, using real data to
/// choose the masks.
pub fn imp(
    init: &ModelState,
    prune_data: &Dataset,
    val: &Dataset,
    schedule: &PruneSchedule,
    cfg: &TrainConfig,
) -> Result<Vec<PruneRunRecord>> {
    schedule.validate()?;
    let mut mask = SparsityMask::dense(&init.arch);
    let mut trained = apply_and_retrain(init, &mask, prune_data, cfg)?;
    let per_round = cfg.points_seen(prune_data.len());
    let mut records = Vec::with_capacity(schedule.rounds);
    for round in 1..=schedule.rounds {
        mask = next_mask(&trained.model, &mask, schedule, round)?;
        // the retrain on real data is both this round's evaluation and the
        // next round's pruning run
        trained = apply_and_retrain(init, &mask, prune_data, cfg)?;
        records.push(PruneRunRecord {
            round_index: round,
            sparsity: sparsity(&mask),
            mask: mask.clone(),
            pruning_dataset_size: per_round,
            cumulative_dataset_size: per_round * round,
            trained_eval: evaluate(&trained.model, val)?,
        });
    }
    Ok(records)
}

/// IMP with the synthetic set standing in for real data when choosing masks.
/// Each round's mask is still evaluated after training the masked init on
/// `real_train`.
pub fn distilled_prune(
    init: &ModelState,
    syn: &SyntheticDataset,
    real_train: &Dataset,
    val: &Dataset,
    schedule: &PruneSchedule,
    cfg: &TrainConfig,
) -> Result<Vec<PruneRunRecord>> {
    schedule.validate()?;
    let syn_data = syn.to_dataset()?;
    let mut mask = SparsityMask::dense(&init.arch);
    let mut trained = apply_and_retrain(init, &mask, &syn_data, cfg)?;
    let per_round = cfg.points_seen(syn_data.len());
    let mut records = Vec::with_capacity(schedule.rounds);
    for round in 1..=schedule.rounds {
        mask = next_mask(&trained.model, &mask, schedule, round)?;
        let real = apply_and_retrain(init, &mask, real_train, cfg)?;
        records.push(PruneRunRecord {
            round_index: round,
            sparsity: sparsity(&mask),
            mask: mask.clone(),
            pruning_dataset_size: per_round,
            cumulative_dataset_size: per_round * round,
            trained_eval: evaluate(&real.model, val)?,
        });
        if round < schedule.rounds {
            trained = apply_and_retrain(init, &mask, &syn_data, cfg)?;
        }
    }
    Ok(records)
}

fn next_mask(trained: &ModelState, mask: &SparsityMask, schedule: &PruneSchedule, round: usize) -> Result<SparsityMask> {
    let target = schedule.target_survivors(mask.prunable_count(), round);
    let count = mask.surviving_weights().saturating_sub(target);
    prune_count(trained, mask, count, schedule.scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_model;

    /// mlp [2, 2]: weights at 0..4, biases at 4..6.
    fn toy(weights: [f64; 4]) -> ModelState {
        let mut params = weights.to_vec();
        params.extend([0.1, 0.2]);
        ModelState::new(ArchSpec::mlp(&[2, 2]), params, 0).unwrap()
    }

    #[test]
    fn sparsity_of_masks() {
        let arch = ArchSpec::mlp(&[2, 5]);
        let dense = SparsityMask::dense(&arch);
        assert_eq!(sparsity(&dense), 0.0);
        let mut bits = dense.bits.clone();
        for b in bits.iter_mut().take(5) {
            *b = false;
        }
        assert_eq!(sparsity(&SparsityMask::from_bits(&arch, bits).unwrap()), 0.5);
    }

    #[test]
    fn bias_bits_cannot_be_cleared() {
        let arch = ArchSpec::mlp(&[2, 2]);
        let mut bits = vec![true; 6];
        bits[5] = false;
        assert!(matches!(SparsityMask::from_bits(&arch, bits), Err(Error::InvalidMask(_))));
        assert!(SparsityMask::from_bits(&arch, vec![true; 5]).is_err());
    }

    #[test]
    fn global_prune_order_statistics() {
        let m = toy([3.0, -1.0, 2.0, -4.0]);
        let out = magnitude_prune(&m, &SparsityMask::dense(&m.arch), 0.5, PruneScope::Global).unwrap();
        assert_eq!(&out.bits[..4], &[true, false, false, true]);
        assert!(out.bits[4] && out.bits[5]);
    }

    #[test]
    fn ties_prune_lower_index() {
        // mlp [2, 5]: 10 weights
        let arch = ArchSpec::mlp(&[2, 5]);
        let mut params = vec![1.0; 15];
        params[3] = 0.5;
        params[9] = -0.5;
        let m = ModelState::new(arch.clone(), params, 0).unwrap();
        let out = magnitude_prune(&m, &SparsityMask::dense(&arch), 0.1, PruneScope::Global).unwrap();
        assert!(!out.bits[3]);
        assert!(out.bits[9]);
    }

    #[test]
    fn pruning_compounds_on_existing_mask() {
        // mlp [10, 10]: 100 weights
        let arch = ArchSpec::mlp(&[10, 10]);
        let m = init_model(&arch, 4).unwrap();
        let first = prune_count(&m, &SparsityMask::dense(&arch), 60, PruneScope::Global).unwrap();
        assert!((sparsity(&first) - 0.6).abs() < 1e-12);
        let second = magnitude_prune(&m, &first, 0.2, PruneScope::Global).unwrap();
        assert!((sparsity(&second) - 0.68).abs() < 1e-12);
        assert!(second.is_subset_of(&first));
    }

    #[test]
    fn wipeout_is_an_error() {
        let arch = ArchSpec::mlp(&[2, 2, 2]);
        let mut params = init_model(&arch, 0).unwrap().params;
        // make the second layer's weights the smallest
        for p in &mut params[6..10] {
            *p = 1e-6;
        }
        let m = ModelState::new(arch.clone(), params, 0).unwrap();
        match prune_count(&m, &SparsityMask::dense(&arch), 4, PruneScope::Global) {
            Err(Error::LayerWipeout { layer }) => assert_eq!(layer, "dense2"),
            other => panic!("expected wipeout, got {other:?}"),
        }
        assert!(matches!(
            prune_count(&m, &SparsityMask::dense(&arch), 8, PruneScope::PerLayer),
            Err(Error::LayerWipeout { .. })
        ));
    }

    #[test]
    fn per_layer_quota_is_proportional() {
        assert_eq!(apportion(5, &[10, 10], 20), vec![3, 2]);
        assert_eq!(apportion(7, &[32, 256, 48], 336), vec![1, 5, 1]);
        assert_eq!(apportion(0, &[3, 4], 7), vec![0, 0]);
        let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
        let m = init_model(&arch, 1).unwrap();
        let out = magnitude_prune(&m, &SparsityMask::dense(&arch), 0.25, PruneScope::PerLayer).unwrap();
        for layer in arch.layers() {
            let pruned = out.bits[layer.weights.clone()].iter().filter(|&&b| !b).count();
            assert_eq!(pruned, layer.weights.len() / 4);
        }
    }

    #[test]
    fn fraction_out_of_range() {
        let m = toy([1.0, 2.0, 3.0, 4.0]);
        let mask = SparsityMask::dense(&m.arch);
        assert!(magnitude_prune(&m, &mask, 0.0, PruneScope::Global).is_err());
        assert!(magnitude_prune(&m, &mask, 1.0, PruneScope::Global).is_err());
    }

    #[test]
    fn schedule_targets() {
        let s = PruneSchedule {
            rounds: 3,
            rate: 0.2,
            scope: PruneScope::Global,
        };
        let got: Vec<f64> = (1..=3).map(|r| s.target_sparsity(r)).collect();
        for (g, want) in got.iter().zip([0.2, 0.36, 0.488]) {
            assert!((g - want).abs() < 1e-12);
        }
    }
}
