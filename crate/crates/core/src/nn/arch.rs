use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hidden-layer nonlinearity. Only ReLU is supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArchKind {
    /// Fully connected network. `layer_sizes` includes input and output widths.
    Mlp { layer_sizes: Vec<usize> },
    /// Conv blocks (`k x k` same-padded conv, ReLU, 2x2 average pool) over a
    /// `in_channels x height x width` input, followed by one dense classifier.
    ConvNet {
        in_channels: usize,
        height: usize,
        width: usize,
        channels: Vec<usize>,
        kernel: usize,
        classes: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchSpec {
    #[serde(flatten)]
    pub kind: ArchKind,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Dense,
    Conv,
}

/// Location of one layer's parameters inside the flat parameter vector.
///
/// Canonical order: layers front to back; within a layer the weights come
/// first (dense: row-major `out x in`; conv: `out_ch x in_ch x k x k`),
/// followed by one bias per output unit or channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSlot {
    pub name: String,
    pub kind: LayerKind,
    pub weights: Range<usize>,
    pub biases: Range<usize>,
    pub fan_in: usize,
}

impl LayerSlot {
    pub fn range(&self) -> Range<usize> {
        self.weights.start..self.biases.end
    }
}

impl ArchSpec {
    pub fn mlp(layer_sizes: &[usize]) -> Self {
        Self {
            kind: ArchKind::Mlp {
                layer_sizes: layer_sizes.to_vec(),
            },
            activation: Activation::Relu,
        }
    }

    pub fn convnet(
        (in_channels, height, width): (usize, usize, usize),
        channels: &[usize],
        kernel: usize,
        classes: usize,
    ) -> Self {
        Self {
            kind: ArchKind::ConvNet {
                in_channels,
                height,
                width,
                channels: channels.to_vec(),
                kernel,
                classes,
            },
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ArchKind::Mlp { layer_sizes } => {
                if layer_sizes.len() < 2 {
                    return Err(Error::InvalidArch(format!(
                        "mlp needs at least 2 layer sizes, got {}",
                        layer_sizes.len()
                    )));
                }
                if let Some(i) = layer_sizes.iter().position(|&s| s == 0) {
                    return Err(Error::InvalidArch(format!("mlp layer {i} has size 0")));
                }
            }
            ArchKind::ConvNet {
                in_channels,
                height,
                width,
                channels,
                kernel,
                classes,
            } => {
                if channels.is_empty() {
                    return Err(Error::InvalidArch("convnet needs at least one conv block".into()));
                }
                if [*in_channels, *height, *width, *kernel, *classes]
                    .iter()
                    .chain(channels)
                    .any(|&s| s == 0)
                {
                    return Err(Error::InvalidArch("convnet sizes must all be >= 1".into()));
                }
                if kernel % 2 == 0 {
                    return Err(Error::InvalidArch(format!(
                        "convnet kernel must be odd for same padding, got {kernel}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match &self.kind {
            ArchKind::Mlp { layer_sizes } => layer_sizes[0],
            ArchKind::ConvNet {
                in_channels,
                height,
                width,
                ..
            } => in_channels * height * width,
        }
    }

    pub fn num_classes(&self) -> usize {
        match &self.kind {
            ArchKind::Mlp { layer_sizes } => *layer_sizes.last().expect("validated"),
            ArchKind::ConvNet { classes, .. } => *classes,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, |l| l.biases.end)
    }

    /// Parameter layout in canonical order.
    pub fn layers(&self) -> Vec<LayerSlot> {
        let mut out = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, kind, n_weights: usize, n_biases: usize, fan_in| {
            let weights = offset..offset + n_weights;
            let biases = weights.end..weights.end + n_biases;
            offset = biases.end;
            out.push(LayerSlot {
                name,
                kind,
                weights,
                biases,
                fan_in,
            });
        };
        match &self.kind {
            ArchKind::Mlp { layer_sizes } => {
                for (i, pair) in layer_sizes.windows(2).enumerate() {
                    push(format!("dense{}", i + 1), LayerKind::Dense, pair[0] * pair[1], pair[1], pair[0]);
                }
            }
            ArchKind::ConvNet {
                in_channels,
                channels,
                kernel,
                classes,
                ..
            } => {
                let mut cin = *in_channels;
                for (i, &cout) in channels.iter().enumerate() {
                    let fan_in = cin * kernel * kernel;
                    push(format!("conv{}", i + 1), LayerKind::Conv, cout * fan_in, cout, fan_in);
                    cin = cout;
                }
                let (h, w) = self.conv_output_hw();
                let flat = cin * h * w;
                push("fc".to_string(), LayerKind::Dense, classes * flat, *classes, flat);
            }
        }
        out
    }

    /// Spatial size after all conv blocks (each block halves, flooring, while >= 2).
    pub(crate) fn conv_output_hw(&self) -> (usize, usize) {
        match &self.kind {
            ArchKind::ConvNet {
                height,
                width,
                channels,
                ..
            } => {
                let (mut h, mut w) = (*height, *width);
                for _ in channels {
                    if h >= 2 && w >= 2 {
                        h /= 2;
                        w /= 2;
                    }
                }
                (h, w)
            }
            ArchKind::Mlp { .. } => (1, 1),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ArchKind::Mlp { layer_sizes } => format!("mlp{layer_sizes:?}"),
            ArchKind::ConvNet {
                in_channels,
                height,
                width,
                channels,
                kernel,
                classes,
            } => format!("convnet[{in_channels}x{height}x{width} -> {channels:?} k{kernel} -> {classes}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mlp_param_count() {
        let arch = ArchSpec::mlp(&[2, 16, 16, 3]);
        assert_eq!(arch.param_count(), 32 + 16 + 256 + 16 + 48 + 3);
        assert_eq!(arch.param_count(), 371);
    }

    #[test]
    fn convnet_layout_is_contiguous() {
        let arch = ArchSpec::convnet((1, 8, 8), &[4, 6], 3, 10);
        arch.validate().unwrap();
        let layers = arch.layers();
        assert_eq!(layers.len(), 3);
        assert_eq!(layers[0].weights, 0..36);
        assert_eq!(layers[0].biases, 36..40);
        assert_eq!(layers[1].fan_in, 36);
        // 8x8 -> 4x4 -> 2x2, 6 channels
        assert_eq!(layers[2].fan_in, 24);
        assert_eq!(arch.param_count(), 40 + 6 * 36 + 6 + 240 + 10);
    }

    #[test]
    fn rejects_bad_arch() {
        assert!(ArchSpec::mlp(&[3]).validate().is_err());
        assert!(ArchSpec::mlp(&[3, 0, 2]).validate().is_err());
        assert!(ArchSpec::convnet((1, 8, 8), &[], 3, 10).validate().is_err());
        assert!(ArchSpec::convnet((1, 8, 8), &[2], 2, 10).validate().is_err());
    }

    #[test]
    fn arch_toml_round_trip() {
        let arch = ArchSpec::convnet((1, 28, 28), &[8, 8], 3, 10);
        let text = toml::to_string(&arch).unwrap();
        let back: ArchSpec = toml::from_str(&text).unwrap();
        assert_eq!(arch, back);
        let parsed: ArchSpec = toml::from_str("kind = \"mlp\"\nlayer_sizes = [2, 4, 2]\n").unwrap();
        assert_eq!(parsed, ArchSpec::mlp(&[2, 4, 2]));
    }
}
