use rand::Rng;

use super::arch::ArchSpec;
use crate::rng::{self, streams};
use crate::{Error, Result};

/// Flat parameter vector plus the architecture that interprets it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub arch: ArchSpec,
    pub params: Vec<f64>,
    /// Seed the parameters were initialized from.
    pub seed: u64,
}

/// Gradient aligned index-for-index with [`ModelState::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradVector(pub Vec<f64>);

impl GradVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl ModelState {
    pub fn new(arch: ArchSpec, params: Vec<f64>, seed: u64) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {} params, got {}",
                arch.describe(),
                arch.param_count(),
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig(format!("param {i} is not finite")));
        }
        Ok(Self { arch, params, seed })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn with_params(&self, params: Vec<f64>) -> Self {
        debug_assert_eq!(params.len(), self.params.len());
        Self {
            arch: self.arch.clone(),
            params,
            seed: self.seed,
        }
    }

    pub(crate) fn check_same_arch(&self, other: &ModelState) -> Result<()> {
        if self.arch != other.arch {
            return Err(Error::DimensionMismatch(format!(
                "architecture mismatch: {} vs {}",
                self.arch.describe(),
                other.arch.describe()
            )));
        }
        Ok(())
    }
}

/// Scale applied to the classifier layer's init bound so untrained logits sit near zero and the
/// initial softmax is close to uniform.
pub const OUTPUT_GAIN: f64 = 0.1;

/// He-style uniform initialization.
///
/// Weights of a layer with fan-in `f` are drawn from `U(-sqrt(6/f), sqrt(6/f))`
/// in canonical parameter order from the `(seed, INIT)` stream; the classifier layer's bound is
/// further scaled by [`OUTPUT_GAIN`]. Biases are 0.
pub fn init_model(arch: &ArchSpec, seed: u64) -> Result<ModelState> {
    arch.validate()?;
    let mut params = vec![0.0; arch.param_count()];
    let mut rng = rng::stream(seed, streams::INIT);
    let layers = arch.layers();
    let last = layers.len() - 1;
    for (i, layer) in layers.into_iter().enumerate() {
        let gain = if i == last { OUTPUT_GAIN } else { 1.0 };
        let bound = gain * (6.0 / layer.fan_in as f64).sqrt();
        for p in &mut params[layer.weights.clone()] {
            *p = rng.random_range(-bound..bound);
        }
    }
    Ok(ModelState {
        arch: arch.clone(),
        params,
        seed,
    })
}

/// `(1 - alpha) * a + alpha * b`, elementwise. The endpoints return exact copies.
pub fn interpolate_params(a: &ModelState, b: &ModelState, alpha: f64) -> Result<ModelState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    blend(a, b, 1.0 - alpha, alpha)
}

/// `wa * a + wb * b` for `wa + wb == 1`; used directly where both weights are computed exactly
/// (e.g. `(n - i) / n` and `i / n`) so that swapping the endpoints mirrors the
/// result bit for bit.
pub(crate) fn blend(a: &ModelState, b: &ModelState, wa: f64, wb: f64) -> Result<ModelState> {
    a.check_same_arch(b)?;
    if wb == 0.0 {
        return Ok(a.clone());
    }
    if wa == 0.0 {
        return Ok(b.clone());
    }
    // Step from the endpoint with the larger weight so that blending a model
    // with itself returns it unchanged.
    let params = a
        .params
        .iter()
        .zip(&b.params)
        .map(|(&x, &y)| {
            if wb < wa {
                x + wb * (y - x)
            } else if wa < wb {
                y + wa * (x - y)
            } else {
                wa * x + wb * y
            }
        })
        .collect();
    Ok(a.with_params(params))
}
