//! Batched forward/backward passes over a flat parameter vector.
//!
//! Activations are row-major per sample; conv activations are laid out
//! `channel x height x width` within a sample.

use super::arch::{ArchKind, ArchSpec, LayerSlot};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Forward,
    Grad,
    GradAndInput,
}

#[derive(Debug)]
pub(crate) struct Pass {
    pub loss: f64,
    pub correct: usize,
    pub grad: Vec<f64>,
    pub input_grad: Vec<f64>,
    /// Which ReLU units passed their input, one vector per ReLU op.
    pub gates: Gates,
}

pub(crate) type Gates = Vec<Vec<bool>>;

enum Op {
    Dense { layer: usize, n_in: usize, n_out: usize },
    Conv { layer: usize, cin: usize, cout: usize, h: usize, w: usize, k: usize },
    Relu,
    Pool { c: usize, h: usize, w: usize },
}

struct Plan {
    ops: Vec<Op>,
    layers: Vec<LayerSlot>,
    input_dim: usize,
    classes: usize,
}

fn plan(arch: &ArchSpec) -> Plan {
    let layers = arch.layers();
    let mut ops = Vec::new();
    match &arch.kind {
        ArchKind::Mlp { layer_sizes } => {
            let last = layer_sizes.len() - 2;
            for (i, pair) in layer_sizes.windows(2).enumerate() {
                ops.push(Op::Dense {
                    layer: i,
                    n_in: pair[0],
                    n_out: pair[1],
                });
                if i < last {
                    ops.push(Op::Relu);
                }
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
            let (mut cin, mut h, mut w) = (*in_channels, *height, *width);
            for (i, &cout) in channels.iter().enumerate() {
                ops.push(Op::Conv {
                    layer: i,
                    cin,
                    cout,
                    h,
                    w,
                    k: *kernel,
                });
                ops.push(Op::Relu);
                if h >= 2 && w >= 2 {
                    ops.push(Op::Pool { c: cout, h, w });
                    h /= 2;
                    w /= 2;
                }
                cin = cout;
            }
            ops.push(Op::Dense {
                layer: channels.len(),
                n_in: cin * h * w,
                n_out: *classes,
            });
        }
    }
    Plan {
        ops,
        layers,
        input_dim: arch.input_dim(),
        classes: arch.num_classes(),
    }
}

impl Plan {
    /// Name of the layer that produced the output of op `j`.
    fn layer_name(&self, j: usize) -> String {
        self.ops[..=j]
            .iter()
            .rev()
            .find_map(|op| match op {
                Op::Dense { layer, .. } | Op::Conv { layer, .. } => Some(self.layers[*layer].name.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "input".to_string())
    }
}

fn dense_forward(x: &[f64], w: &[f64], bias: &[f64], batch: usize, n_in: usize, n_out: usize) -> Vec<f64> {
    let mut out = vec![0.0; batch * n_out];
    for b in 0..batch {
        let xb = &x[b * n_in..(b + 1) * n_in];
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            out[b * n_out + o] = bias[o] + row.iter().zip(xb).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    w: &[f64],
    bias: &[f64],
    batch: usize,
    (cin, cout): (usize, usize),
    (h, wd): (usize, usize),
    k: usize,
) -> Vec<f64> {
    let pad = k / 2;
    let mut out = vec![0.0; batch * cout * h * wd];
    for b in 0..batch {
        let xb = &x[b * cin * h * wd..(b + 1) * cin * h * wd];
        let ob = &mut out[b * cout * h * wd..(b + 1) * cout * h * wd];
        for co in 0..cout {
            let plane = &mut ob[co * h * wd..(co + 1) * h * wd];
            plane.fill(bias[co]);
            for ci in 0..cin {
                let xin = &xb[ci * h * wd..(ci + 1) * h * wd];
                let kern = &w[(co * cin + ci) * k * k..(co * cin + ci + 1) * k * k];
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = kern[ky * k + kx];
                        for y in 0..h {
                            let iy = y + ky;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            for xx in 0..wd {
                                let ix = xx + kx;
                                if ix < pad || ix - pad >= wd {
                                    continue;
                                }
                                plane[y * wd + xx] += wv * xin[iy * wd + ix - pad];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    w: &[f64],
    dout: &[f64],
    batch: usize,
    (cin, cout): (usize, usize),
    (h, wd): (usize, usize),
    k: usize,
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let pad = k / 2;
    let hw = h * wd;
    for b in 0..batch {
        let xb = &x[b * cin * hw..(b + 1) * cin * hw];
        let gb = &dout[b * cout * hw..(b + 1) * cout * hw];
        for co in 0..cout {
            let g = &gb[co * hw..(co + 1) * hw];
            db[co] += g.iter().sum::<f64>();
            for ci in 0..cin {
                let xin = &xb[ci * hw..(ci + 1) * hw];
                let base = (co * cin + ci) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = w[base + ky * k + kx];
                        let mut acc = 0.0;
                        for y in 0..h {
                            let iy = y + ky;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            for xx in 0..wd {
                                let ix = xx + kx;
                                if ix < pad || ix - pad >= wd {
                                    continue;
                                }
                                let gv = g[y * wd + xx];
                                acc += gv * xin[iy * wd + ix - pad];
                                if let Some(dx) = dx.as_deref_mut() {
                                    dx[b * cin * hw + ci * hw + iy * wd + ix - pad] += gv * wv;
                                }
                            }
                        }
                        dw[base + ky * k + kx] += acc;
                    }
                }
            }
        }
    }
}

fn pool_forward(x: &[f64], batch: usize, c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; batch * c * oh * ow];
    for bc in 0..batch * c {
        let xin = &x[bc * h * w..(bc + 1) * h * w];
        for y in 0..oh {
            for xx in 0..ow {
                let s = xin[2 * y * w + 2 * xx]
                    + xin[2 * y * w + 2 * xx + 1]
                    + xin[(2 * y + 1) * w + 2 * xx]
                    + xin[(2 * y + 1) * w + 2 * xx + 1];
                out[bc * oh * ow + y * ow + xx] = 0.25 * s;
            }
        }
    }
    out
}

fn pool_backward(dout: &[f64], batch: usize, c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut dx = vec![0.0; batch * c * h * w];
    for bc in 0..batch * c {
        for y in 0..oh {
            for xx in 0..ow {
                let g = 0.25 * dout[bc * oh * ow + y * ow + xx];
                let base = bc * h * w;
                dx[base + 2 * y * w + 2 * xx] += g;
                dx[base + 2 * y * w + 2 * xx + 1] += g;
                dx[base + (2 * y + 1) * w + 2 * xx] += g;
                dx[base + (2 * y + 1) * w + 2 * xx + 1] += g;
            }
        }
    }
    dx
}

/// Mean softmax cross-entropy. Returns `(loss, correct, dlogits)` where
/// `dlogits` is the gradient of the mean loss.
fn softmax_xent(logits: &[f64], labels: &[usize], classes: usize, want_grad: bool) -> (f64, usize, Vec<f64>) {
    let batch = labels.len();
    let mut total = 0.0;
    let mut correct = 0;
    let mut d = if want_grad { vec![0.0; logits.len()] } else { Vec::new() };
    let inv_b = 1.0 / batch as f64;
    for (b, &y) in labels.iter().enumerate() {
        let z = &logits[b * classes..(b + 1) * classes];
        let (mut arg, mut max) = (0, z[0]);
        for (c, &v) in z.iter().enumerate().skip(1) {
            if v > max {
                arg = c;
                max = v;
            }
        }
        if arg == y {
            correct += 1;
        }
        let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - z[y];
        if want_grad {
            for (c, &v) in z.iter().enumerate() {
                let p = (v - lse).exp();
                d[b * classes + c] = (p - if c == y { 1.0 } else { 0.0 }) * inv_b;
            }
        }
    }
    (total * inv_b, correct, d)
}

pub(crate) fn run(arch: &ArchSpec, params: &[f64], features: &[f64], labels: &[usize], mode: Mode) -> Result<Pass> {
    run_gated(arch, params, features, labels, mode, None)
}

/// Like [`run`], but with `fixed` the ReLUs pass exactly the units recorded
/// there instead of the positive ones, which makes the loss a smooth function
/// of the parameters around the point the gates came from.
pub(crate) fn run_gated(
    arch: &ArchSpec,
    params: &[f64],
    features: &[f64],
    labels: &[usize],
    mode: Mode,
    fixed: Option<&Gates>,
) -> Result<Pass> {
    let plan = plan(arch);
    let batch = labels.len();
    if batch == 0 {
        return Err(Error::DimensionMismatch("empty batch".into()));
    }
    if features.len() != batch * plan.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "{} expects input dim {}, batch has {} features for {batch} rows",
            arch.describe(),
            plan.input_dim,
            features.len()
        )));
    }
    if params.len() != arch.param_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} expects {} params, got {}",
            arch.describe(),
            arch.param_count(),
            params.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= plan.classes) {
        return Err(Error::DimensionMismatch(format!(
            "label {bad} out of range for {} classes",
            plan.classes
        )));
    }

    let relus = plan.ops.iter().filter(|op| matches!(op, Op::Relu)).count();
    if let Some(g) = fixed {
        if g.len() != relus {
            return Err(Error::DimensionMismatch(format!("{} gate layers for {relus} ReLUs", g.len())));
        }
    }
    let mut gates: Gates = Vec::with_capacity(relus);
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(plan.ops.len() + 1);
    acts.push(features.to_vec());
    for op in &plan.ops {
        let x = acts.last().expect("input pushed");
        let y = match *op {
            Op::Dense { layer, n_in, n_out } => {
                let l = &plan.layers[layer];
                dense_forward(x, &params[l.weights.clone()], &params[l.biases.clone()], batch, n_in, n_out)
            }
            Op::Conv { layer, cin, cout, h, w, k } => {
                let l = &plan.layers[layer];
                conv_forward(
                    x,
                    &params[l.weights.clone()],
                    &params[l.biases.clone()],
                    batch,
                    (cin, cout),
                    (h, w),
                    k,
                )
            }
            Op::Relu => {
                let gate: Vec<bool> = match fixed {
                    Some(g) => {
                        let g = &g[gates.len()];
                        if g.len() != x.len() {
                            return Err(Error::DimensionMismatch(format!(
                                "gate layer {} has {} units, activation {}",
                                gates.len(),
                                g.len(),
                                x.len()
                            )));
                        }
                        g.clone()
                    }
                    None => x.iter().map(|&v| v > 0.0).collect(),
                };
                let y = x.iter().zip(&gate).map(|(&v, &on)| if on { v } else { 0.0 }).collect();
                gates.push(gate);
                y
            }
            Op::Pool { c, h, w } => pool_forward(x, batch, c, h, w),
        };
        acts.push(y);
    }

    let want_grad = mode != Mode::Forward;
    let (loss, correct, dlogits) =
        softmax_xent(acts.last().expect("logits"), labels, plan.classes, want_grad);
    if !loss.is_finite() {
        let layer = acts
            .iter()
            .skip(1)
            .position(|a| a.iter().any(|v| !v.is_finite()))
            .map_or_else(|| "loss".to_string(), |j| plan.layer_name(j));
        return Err(Error::NonFiniteLoss { layer });
    }
    if !want_grad {
        return Ok(Pass {
            loss,
            correct,
            grad: Vec::new(),
            input_grad: Vec::new(),
            gates,
        });
    }

    let mut grad = vec![0.0; params.len()];
    let mut d = dlogits;
    let mut relu_index = gates.len();
    for (j, op) in plan.ops.iter().enumerate().rev() {
        let need_dx = j > 0 || mode == Mode::GradAndInput;
        let x = &acts[j];
        d = match *op {
            Op::Dense { layer, n_in, n_out } => {
                let l = &plan.layers[layer];
                let w = &params[l.weights.clone()];
                let mut dx = if need_dx { vec![0.0; batch * n_in] } else { Vec::new() };
                let (gw, gb) = grad[l.weights.start..l.biases.end].split_at_mut(l.weights.len());
                for b in 0..batch {
                    let xb = &x[b * n_in..(b + 1) * n_in];
                    for o in 0..n_out {
                        let g = d[b * n_out + o];
                        if g == 0.0 {
                            continue;
                        }
                        gb[o] += g;
                        let gw_row = &mut gw[o * n_in..(o + 1) * n_in];
                        for (gwv, xv) in gw_row.iter_mut().zip(xb) {
                            *gwv += g * xv;
                        }
                        if need_dx {
                            let w_row = &w[o * n_in..(o + 1) * n_in];
                            for (dxv, wv) in dx[b * n_in..(b + 1) * n_in].iter_mut().zip(w_row) {
                                *dxv += g * wv;
                            }
                        }
                    }
                }
                dx
            }
            Op::Conv { layer, cin, cout, h, w, k } => {
                let l = &plan.layers[layer];
                let mut dx = if need_dx { vec![0.0; batch * cin * h * w] } else { Vec::new() };
                let (gw, gb) = grad[l.weights.start..l.biases.end].split_at_mut(l.weights.len());
                conv_backward(
                    x,
                    &params[l.weights.clone()],
                    &d,
                    batch,
                    (cin, cout),
                    (h, w),
                    k,
                    gw,
                    gb,
                    need_dx.then_some(dx.as_mut_slice()),
                );
                dx
            }
            Op::Relu => {
                relu_index -= 1;
                d.iter().zip(&gates[relu_index]).map(|(&g, &on)| if on { g } else { 0.0 }).collect()
            }
            Op::Pool { c, h, w } => pool_backward(&d, batch, c, h, w),
        };
    }
    let input_grad = if mode == Mode::GradAndInput { d } else { Vec::new() };
    Ok(Pass {
        loss,
        correct,
        grad,
        input_grad,
        gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xent_uniform_logits() {
        let (loss, _, d) = softmax_xent(&[0.0; 6], &[0, 2], 3, true);
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        assert!((d[0] - (1.0 / 3.0 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn conv_identity_kernel() {
        // 1 channel 3x3 input, kernel with 1 at the center: output == input
        let x: Vec<f64> = (0..9).map(f64::from).collect();
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let y = conv_forward(&x, &w, &[0.5], 1, (1, 1), (3, 3), 3);
        assert_eq!(y, x.iter().map(|v| v + 0.5).collect::<Vec<_>>());
    }

    #[test]
    fn recorded_gates_reproduce_free_pass() {
        let arch = ArchSpec::mlp(&[2, 4, 3]);
        let params: Vec<f64> = (0..arch.param_count()).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.1).collect();
        let x = [0.5, -1.0, 2.0, 0.3];
        let free = run(&arch, &params, &x, &[0, 2], Mode::Grad).unwrap();
        let fixed = run_gated(&arch, &params, &x, &[0, 2], Mode::Grad, Some(&free.gates)).unwrap();
        assert_eq!(free.loss, fixed.loss);
        assert_eq!(free.grad, fixed.grad);
        let off = vec![vec![false; 8]];
        let dead = run_gated(&arch, &params, &x, &[0, 2], Mode::Grad, Some(&off)).unwrap();
        assert!(dead.grad[..8].iter().all(|&g| g == 0.0));
        assert!(run_gated(&arch, &params, &x, &[0, 2], Mode::Grad, Some(&vec![vec![true; 3]])).is_err());
    }

    #[test]
    fn pool_averages() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pool_forward(&x, 1, 1, 2, 2), vec![2.5]);
        assert_eq!(pool_backward(&[4.0], 1, 1, 2, 2), vec![1.0; 4]);
    }
}
