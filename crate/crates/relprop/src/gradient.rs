//! Exact reverse-mode gradients of a chosen logit with respect to the input,
//! sensitivity maps built from them, and a central-difference oracle.
//!
//! The ReLU derivative at exactly 0 is defined as 0 (dead units stay dead),
//! and max-pool routes gradient to the window winner recorded in the trace.
//! Central differences agree with the exact gradient up to rounding as long
//! as no pre-activation sits within the step of a kink; tests sample inputs
//! with a margin above 10h.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrp::{MethodLabel, RelevanceMap};
use crate::model::{forward, ForwardTrace, Layer, Model};
use crate::tensor::Tensor;

/// What the gradient is taken with respect to. Token-id inputs are not
/// continuous, so models starting with an embedding layer differentiate
/// with respect to the embedding output instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSpace {
    ModelInput,
    EmbeddingOutput,
}

/// Signed partial derivatives of one logit.
#[derive(Debug, Clone)]
pub struct GradientMap {
    pub values: Tensor,
    pub target_class: usize,
    pub space: GradientSpace,
}

/// Norm used to collapse a multi-channel gradient into one score per input
/// variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelNorm {
    /// Absolute value per scalar input.
    Abs,
    /// Euclidean norm across the channel axis: `c x h x w` collapses to
    /// `h x w`; a `tokens x dim` embedding gradient collapses to one score
    /// per token.
    L2OverChannels,
}

/// Exact chain-rule gradient of `logits[target_class]` with respect to the
/// traced input.
pub fn backward_gradient(
    model: &Model,
    trace: &ForwardTrace,
    target_class: usize,
) -> Result<GradientMap> {
    check_trace(model, trace)?;
    if target_class >= model.num_classes() {
        return Err(Error::InvalidConfig(format!(
            "target class {target_class} out of range for {} classes",
            model.num_classes()
        )));
    }

    let mut grad = vec![0.0; trace.logits.len()];
    grad[target_class] = 1.0;
    let mut grad_shape = trace.logits.shape().to_vec();

    for (i, layer) in model.layers.iter().enumerate().rev() {
        let input = &trace.layer_inputs[i];
        match layer {
            Layer::Dense { weights, .. } => {
                let (n, m) = (weights.shape()[0], weights.shape()[1]);
                let wd = weights.data();
                let mut next = vec![0.0; n];
                for (j, nj) in next.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, &gk) in grad.iter().enumerate() {
                        acc += wd[j * m + k] * gk;
                    }
                    *nj = acc;
                }
                grad = next;
                grad_shape = vec![n];
            }
            Layer::Conv(spec) => {
                let out_shape = spec.output_shape(input.shape())?;
                let (oc, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
                let (ic, ih, iw) = (input.shape()[0], input.shape()[1], input.shape()[2]);
                let (kh, kw) = spec.kernel_size();
                let (sh, sw) = spec.stride;
                let (ph, pw) = spec.padding;
                let kd = spec.kernel.data();
                let mut next = vec![0.0; ic * ih * iw];
                for o in 0..oc {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let g = grad[(o * oh + oy) * ow + ox];
                            if g == 0.0 {
                                continue;
                            }
                            for c in 0..ic {
                                for ky in 0..kh {
                                    let y = (oy * sh + ky) as isize - ph as isize;
                                    if y < 0 || y as usize >= ih {
                                        continue;
                                    }
                                    for kx in 0..kw {
                                        let x = (ox * sw + kx) as isize - pw as isize;
                                        if x < 0 || x as usize >= iw {
                                            continue;
                                        }
                                        let wi = ((o * ic + c) * kh + ky) * kw + kx;
                                        next[(c * ih + y as usize) * iw + x as usize] += kd[wi] * g;
                                    }
                                }
                            }
                        }
                    }
                }
                grad = next;
                grad_shape = input.shape().to_vec();
            }
            Layer::MaxPool { .. } => {
                let mut next = vec![0.0; input.len()];
                for (out_idx, &winner) in trace.pool_argmax[i].iter().enumerate() {
                    next[winner] += grad[out_idx];
                }
                grad = next;
                grad_shape = input.shape().to_vec();
            }
            Layer::AvgPool { window, stride } => {
                let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
                let (wh, ww) = *window;
                let (sh, sw) = *stride;
                let oh = (h - wh) / sh + 1;
                let ow = (w - ww) / sw + 1;
                let share = 1.0 / (wh * ww) as f64;
                let mut next = vec![0.0; input.len()];
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let g = grad[(ch * oh + oy) * ow + ox] * share;
                            for ky in 0..wh {
                                for kx in 0..ww {
                                    next[(ch * h + oy * sh + ky) * w + ox * sw + kx] += g;
                                }
                            }
                        }
                    }
                }
                grad = next;
                grad_shape = input.shape().to_vec();
            }
            Layer::Relu => {
                for (g, x) in grad.iter_mut().zip(input.iter()) {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                }
                grad_shape = input.shape().to_vec();
            }
            Layer::Flatten => {
                grad_shape = input.shape().to_vec();
            }
            Layer::Embedding { .. } => {
                // ids are discrete: stop at the embedding output
                let values = Tensor::new(grad_shape, grad)?;
                if !values.all_finite() {
                    return Err(Error::InvalidShape(
                        "gradient contains non-finite values".into(),
                    ));
                }
                return Ok(GradientMap {
                    values,
                    target_class,
                    space: GradientSpace::EmbeddingOutput,
                });
            }
        }
    }

    let values = Tensor::new(grad_shape, grad)?;
    if values.shape() != model.input_shape.as_slice() {
        return Err(Error::ShapeMismatch {
            context: "gradient vs model input",
            left: values.shape().to_vec(),
            right: model.input_shape.clone(),
        });
    }
    if !values.all_finite() {
        return Err(Error::InvalidShape(
            "gradient contains non-finite values".into(),
        ));
    }
    Ok(GradientMap {
        values,
        target_class,
        space: GradientSpace::ModelInput,
    })
}

/// Non-negative importance per input variable: `R_i = ||d f / d x_i||`.
pub fn sensitivity_map(grad: &GradientMap, norm: ChannelNorm) -> Result<RelevanceMap> {
    let values = match norm {
        ChannelNorm::Abs => grad.values.map(f64::abs),
        ChannelNorm::L2OverChannels => match grad.values.rank() {
            3 => {
                let (c, h, w) = (
                    grad.values.shape()[0],
                    grad.values.shape()[1],
                    grad.values.shape()[2],
                );
                let mut out = vec![0.0; h * w];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for ch in 0..c {
                        let v = grad.values.get_flat(ch * h * w + i);
                        acc += v * v;
                    }
                    *o = acc.sqrt();
                }
                Tensor::new(vec![h, w], out)?
            }
            2 => {
                let (tokens, dim) = (grad.values.shape()[0], grad.values.shape()[1]);
                let mut out = vec![0.0; tokens];
                for (t, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for d in 0..dim {
                        let v = grad.values.get_flat(t * dim + d);
                        acc += v * v;
                    }
                    *o = acc.sqrt();
                }
                Tensor::new(vec![tokens], out)?
            }
            _ => {
                return Err(Error::InvalidShape(format!(
                    "l2_over_channels needs a channel axis, input has rank {}",
                    grad.values.rank()
                )))
            }
        },
    };
    Ok(RelevanceMap {
        values,
        target_class: grad.target_class,
        method: MethodLabel::Sensitivity { norm },
        conservation: None,
        layer_relevances: Vec::new(),
        tokens: None,
        token_relevance: None,
    })
}

/// Central differences `(f_c(x + h e_i) - f_c(x - h e_i)) / 2h` per
/// coordinate, the model-independent oracle for [`backward_gradient`].
pub fn finite_difference_gradient(
    model: &Model,
    input: &Tensor,
    target_class: usize,
    h: f64,
) -> Result<GradientMap> {
    if h <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "step must be positive, got {h}"
        )));
    }
    if matches!(model.layers.first(), Some(Layer::Embedding { .. })) {
        return Err(Error::UnsupportedLayer(
            "embedding (token ids are not continuous)".into(),
        ));
    }
    let base = input.data().to_vec();
    let shape = input.shape().to_vec();
    let mut grad = vec![0.0; base.len()];
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let f_plus = forward(model, &Tensor::new(shape.clone(), plus)?)?
            .logits
            .get_flat(target_class);
        let f_minus = forward(model, &Tensor::new(shape.clone(), minus)?)?
            .logits
            .get_flat(target_class);
        grad[i] = (f_plus - f_minus) / (2.0 * h);
    }
    Ok(GradientMap {
        values: Tensor::new(shape, grad)?,
        target_class,
        space: GradientSpace::ModelInput,
    })
}

fn check_trace(model: &Model, trace: &ForwardTrace) -> Result<()> {
    if trace.layer_inputs.len() != model.layers.len() {
        return Err(Error::ShapeIncompatible(format!(
            "trace records {} layers, model has {}",
            trace.layer_inputs.len(),
            model.layers.len()
        )));
    }
    if trace.input().shape() != model.input_shape.as_slice() {
        return Err(Error::ShapeMismatch {
            context: "trace input vs model",
            left: trace.input().shape().to_vec(),
            right: model.input_shape.clone(),
        });
    }
    Ok(())
}
