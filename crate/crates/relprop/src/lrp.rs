//! Layer-wise relevance propagation: per-layer redistribution rules, the
//! full backward relevance pass, conservation accounting, and per-group
//! aggregation.
//!
//! The backward pass starts from the explained logit (not a softmax
//! probability, not 1.0) and redistributes it layer by layer, so the input
//! scores decompose the classifier output itself. Per-layer relevance sums
//! are recorded on the way down; stabilizer leakage and the share absorbed
//! by bias terms are accounted explicitly instead of silently vanishing.
//!
//! Two denominator conventions worth knowing:
//! - the epsilon stabilizer is `epsilon * sign(z)` with `sign(0) = +1`; a
//!   plain `+ epsilon` could still cancel against `z` near `-epsilon`.
//! - bias terms join the denominator and their relevance share is recorded
//!   as `bias_absorbed`, never propagated further.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::ChannelNorm;
use crate::model::{ForwardTrace, Layer, Model};
use crate::tensor::Tensor;

/// Redistribution rule with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleConfig {
    Epsilon { epsilon: f64 },
    AlphaBeta { alpha: f64, beta: f64 },
}

impl RuleConfig {
    pub fn epsilon(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidRule(format!(
                "epsilon must be a non-negative float, got {epsilon}"
            )));
        }
        Ok(RuleConfig::Epsilon { epsilon })
    }

    /// `alpha - beta == 1` is required exactly, with `alpha >= 1`.
    pub fn alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite())
            || alpha - beta != 1.0
            || alpha < 1.0
            || beta < 0.0
        {
            return Err(Error::InvalidRule(format!(
                "alpha-beta rule needs alpha - beta == 1, alpha >= 1, beta >= 0; got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(RuleConfig::AlphaBeta { alpha, beta })
    }
}

/// How a relevance map was produced; stored alongside the scores so no
/// output file has hidden configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodLabel {
    Sensitivity {
        norm: ChannelNorm,
    },
    Lrp {
        #[serde(flatten)]
        rule: RuleConfig,
    },
}

/// Per-layer conservation accounting for one explanation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConservationReport {
    /// Relevance sum at every layer boundary, ordered output -> input.
    pub layer_sums: Vec<f64>,
    /// The explained logit.
    pub f_value: f64,
    /// Total relevance attributed to bias terms (never propagated further).
    pub bias_absorbed: f64,
    /// Total relevance lost to the epsilon stabilizer.
    pub epsilon_leaked: f64,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
}

impl ConservationReport {
    fn from_sums(
        layer_sums: Vec<f64>,
        f_value: f64,
        bias_absorbed: f64,
        epsilon_leaked: f64,
    ) -> Self {
        let max_abs_deviation = layer_sums
            .iter()
            .map(|s| (s - f_value).abs())
            .fold(0.0, f64::max);
        let scale = f_value.abs().max(f64::MIN_POSITIVE);
        ConservationReport {
            layer_sums,
            f_value,
            bias_absorbed,
            epsilon_leaked,
            max_abs_deviation,
            max_rel_deviation: max_abs_deviation / scale,
        }
    }
}

/// Signed relevance scores over the explained input (or over embedding
/// outputs for token models), with full provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelevanceMap {
    pub values: Tensor,
    pub target_class: usize,
    #[serde(flatten)]
    pub method: MethodLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationReport>,
    /// Relevance tensors at every layer boundary (output first), kept in
    /// memory for independent auditing; not serialized.
    #[serde(skip)]
    pub layer_relevances: Vec<Tensor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token_relevance: Option<Vec<f64>>,
}

impl RelevanceMap {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<RelevanceMap> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// One rule application: relevance for the layer input plus the shares that
/// left the propagation at this layer.
#[derive(Debug, Clone)]
pub struct LayerRelevance {
    pub relevance: Tensor,
    pub bias_absorbed: f64,
    pub epsilon_leaked: f64,
}

/// Epsilon rule through a dense layer:
/// `R_j = sum_k (x_j w_jk / (z_k + eps * sign(z_k))) R_k` with
/// `z_k = sum_j x_j w_jk + b_k` and `sign(0) = +1`. A neuron whose
/// stabilized denominator is still zero (only possible at eps = 0) is
/// dropped.
pub fn lrp_epsilon_layer(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    r_out: &Tensor,
    epsilon: f64,
) -> Result<LayerRelevance> {
    RuleConfig::epsilon(epsilon)?;
    let (n, m) = dense_dims(x, weights, bias, r_out)?;
    let xd = x.data();
    let wd = weights.data();

    let mut relevance = vec![0.0; n];
    let mut bias_absorbed = 0.0;
    let mut epsilon_leaked = 0.0;
    for k in 0..m {
        let rk = r_out.get_flat(k);
        if rk == 0.0 {
            continue;
        }
        let mut z = 0.0;
        for (j, &xj) in xd.iter().enumerate() {
            z += xj * wd[j * m + k];
        }
        z += bias.get_flat(k);
        let denom = z + epsilon * sign_pos_zero(z);
        if denom == 0.0 {
            continue;
        }
        for (j, &xj) in xd.iter().enumerate() {
            relevance[j] += (xj * wd[j * m + k] / denom) * rk;
        }
        bias_absorbed += (bias.get_flat(k) / denom) * rk;
        epsilon_leaked += (epsilon * sign_pos_zero(z) / denom) * rk;
    }
    Ok(LayerRelevance {
        relevance: Tensor::new(vec![n], relevance)?,
        bias_absorbed,
        epsilon_leaked,
    })
}

/// Alpha-beta rule through a dense layer: positive and negative
/// contributions are redistributed separately, weighted `alpha` and `beta`.
/// A side with an empty denominator is dropped; bias parts join their side
/// and are absorbed.
pub fn lrp_alphabeta_layer(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    r_out: &Tensor,
    alpha: f64,
    beta: f64,
) -> Result<LayerRelevance> {
    RuleConfig::alpha_beta(alpha, beta)?;
    let (n, m) = dense_dims(x, weights, bias, r_out)?;
    let xd = x.data();
    let wd = weights.data();

    let mut relevance = vec![0.0; n];
    let mut bias_absorbed = 0.0;
    for k in 0..m {
        let rk = r_out.get_flat(k);
        if rk == 0.0 {
            continue;
        }
        let bk = bias.get_flat(k);
        let mut pos = 0.0;
        let mut neg = 0.0;
        for (j, &xj) in xd.iter().enumerate() {
            let c = xj * wd[j * m + k];
            if c > 0.0 {
                pos += c;
            } else {
                neg += c;
            }
        }
        if bk > 0.0 {
            pos += bk;
        } else {
            neg += bk;
        }
        for (j, &xj) in xd.iter().enumerate() {
            let c = xj * wd[j * m + k];
            if c > 0.0 && pos > 0.0 {
                relevance[j] += alpha * (c / pos) * rk;
            } else if c < 0.0 && neg < 0.0 {
                relevance[j] -= beta * (c / neg) * rk;
            }
        }
        if bk > 0.0 && pos > 0.0 {
            bias_absorbed += alpha * (bk / pos) * rk;
        } else if bk < 0.0 && neg < 0.0 {
            bias_absorbed -= beta * (bk / neg) * rk;
        }
    }
    Ok(LayerRelevance {
        relevance: Tensor::new(vec![n], relevance)?,
        bias_absorbed,
        epsilon_leaked: 0.0,
    })
}

fn dense_dims(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    r_out: &Tensor,
) -> Result<(usize, usize)> {
    if weights.rank() != 2 || x.len() != weights.shape()[0] {
        return Err(Error::ShapeMismatch {
            context: "lrp input vs weights",
            left: x.shape().to_vec(),
            right: weights.shape().to_vec(),
        });
    }
    let m = weights.shape()[1];
    if bias.len() != m || r_out.len() != m {
        return Err(Error::ShapeMismatch {
            context: "lrp output relevance vs weights",
            left: r_out.shape().to_vec(),
            right: weights.shape().to_vec(),
        });
    }
    if !r_out.all_finite() {
        return Err(Error::InvalidShape(
            "output relevance contains non-finite values".into(),
        ));
    }
    Ok((x.len(), m))
}

fn sign_pos_zero(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Full backward relevance pass. Relevance starts one-hot at the output
/// (`R_c = logit_c`), dense and convolutional layers apply the configured
/// rule (conv acting as the equivalent sparse linear map), ReLU is
/// transparent, max-pool sends everything to the recorded winner, avg-pool
/// redistributes as the linear layer it is, flatten reshapes, and an
/// embedding layer terminates the pass on its outputs.
pub fn lrp_explain(
    model: &Model,
    trace: &ForwardTrace,
    target_class: usize,
    config: RuleConfig,
) -> Result<RelevanceMap> {
    match config {
        RuleConfig::Epsilon { epsilon } => RuleConfig::epsilon(epsilon)?,
        RuleConfig::AlphaBeta { alpha, beta } => RuleConfig::alpha_beta(alpha, beta)?,
    };
    if trace.layer_inputs.len() != model.layers.len() {
        return Err(Error::ShapeIncompatible(format!(
            "trace records {} layers, model has {}",
            trace.layer_inputs.len(),
            model.layers.len()
        )));
    }
    if target_class >= model.num_classes() {
        return Err(Error::InvalidConfig(format!(
            "target class {target_class} out of range for {} classes",
            model.num_classes()
        )));
    }

    let f_value = trace.logits.get_flat(target_class);
    let mut init = vec![0.0; trace.logits.len()];
    init[target_class] = f_value;
    let mut r = Tensor::new(trace.logits.shape().to_vec(), init)?;

    let mut layer_relevances = vec![r.clone()];
    let mut bias_absorbed = 0.0;
    let mut epsilon_leaked = 0.0;

    for (i, layer) in model.layers.iter().enumerate().rev() {
        let input = &trace.layer_inputs[i];
        r = match layer {
            Layer::Dense { weights, bias } => {
                let lr = apply_dense_rule(input, weights, bias, &r, config)?;
                bias_absorbed += lr.bias_absorbed;
                epsilon_leaked += lr.epsilon_leaked;
                lr.relevance
            }
            Layer::Conv(spec) => {
                let lr = conv_rule(input, spec, &r, config)?;
                bias_absorbed += lr.bias_absorbed;
                epsilon_leaked += lr.epsilon_leaked;
                lr.relevance
            }
            Layer::MaxPool { .. } => {
                let mut next = vec![0.0; input.len()];
                for (out_idx, &winner) in trace.pool_argmax[i].iter().enumerate() {
                    next[winner] += r.get_flat(out_idx);
                }
                Tensor::new(input.shape().to_vec(), next)?
            }
            Layer::AvgPool { window, stride } => {
                let lr = avg_pool_rule(input, *window, *stride, &r, config)?;
                epsilon_leaked += lr.epsilon_leaked;
                lr.relevance
            }
            Layer::Relu => r.reshape(input.shape().to_vec())?,
            Layer::Flatten => r.reshape(input.shape().to_vec())?,
            Layer::Embedding { .. } => {
                // relevance stays on the embedding output; token ids carry none
                break;
            }
        };
        layer_relevances.push(r.clone());
    }

    let layer_sums: Vec<f64> = layer_relevances.iter().map(|t| t.sum()).collect();
    let conservation =
        ConservationReport::from_sums(layer_sums, f_value, bias_absorbed, epsilon_leaked);
    let values = layer_relevances.last().unwrap().clone();
    Ok(RelevanceMap {
        values,
        target_class,
        method: MethodLabel::Lrp { rule: config },
        conservation: Some(conservation),
        layer_relevances,
        tokens: None,
        token_relevance: None,
    })
}

fn apply_dense_rule(
    x: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    r_out: &Tensor,
    config: RuleConfig,
) -> Result<LayerRelevance> {
    match config {
        RuleConfig::Epsilon { epsilon } => lrp_epsilon_layer(x, weights, bias, r_out, epsilon),
        RuleConfig::AlphaBeta { alpha, beta } => {
            lrp_alphabeta_layer(x, weights, bias, r_out, alpha, beta)
        }
    }
}

/// Applies the configured rule through a convolution without materializing
/// its dense equivalent: every output neuron redistributes to the window
/// that fed it.
fn conv_rule(
    input: &Tensor,
    spec: &crate::tensor::ConvSpec,
    r_out: &Tensor,
    config: RuleConfig,
) -> Result<LayerRelevance> {
    let out_shape = spec.output_shape(input.shape())?;
    let (oc, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let (ic, ih, iw) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (kh, kw) = spec.kernel_size();
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let kd = spec.kernel.data();
    let xd = input.data();

    let mut relevance = vec![0.0; input.len()];
    let mut bias_absorbed = 0.0;
    let mut epsilon_leaked = 0.0;

    // contributions of one output neuron: (input flat index, x_j * w_jk)
    let mut contribs: Vec<(usize, f64)> = Vec::with_capacity(ic * kh * kw);
    for o in 0..oc {
        let bk = spec.bias.get_flat(o);
        for oy in 0..oh {
            for ox in 0..ow {
                let rk = r_out.get_flat((o * oh + oy) * ow + ox);
                if rk == 0.0 {
                    continue;
                }
                contribs.clear();
                let mut z = 0.0;
                for c in 0..ic {
                    for ky in 0..kh {
                        let y = (oy * sh + ky) as isize - ph as isize;
                        if y < 0 || y as usize >= ih {
                            continue;
                        }
                        for kx in 0..kw {
                            let xcol = (ox * sw + kx) as isize - pw as isize;
                            if xcol < 0 || xcol as usize >= iw {
                                continue;
                            }
                            let j = (c * ih + y as usize) * iw + xcol as usize;
                            let c_val = xd[j] * kd[((o * ic + c) * kh + ky) * kw + kx];
                            z += c_val;
                            contribs.push((j, c_val));
                        }
                    }
                }
                z += bk;
                match config {
                    RuleConfig::Epsilon { epsilon } => {
                        let denom = z + epsilon * sign_pos_zero(z);
                        if denom == 0.0 {
                            continue;
                        }
                        for &(j, c_val) in &contribs {
                            relevance[j] += (c_val / denom) * rk;
                        }
                        bias_absorbed += (bk / denom) * rk;
                        epsilon_leaked += (epsilon * sign_pos_zero(z) / denom) * rk;
                    }
                    RuleConfig::AlphaBeta { alpha, beta } => {
                        let mut pos = 0.0;
                        let mut neg = 0.0;
                        for &(_, c_val) in &contribs {
                            if c_val > 0.0 {
                                pos += c_val;
                            } else {
                                neg += c_val;
                            }
                        }
                        if bk > 0.0 {
                            pos += bk;
                        } else {
                            neg += bk;
                        }
                        for &(j, c_val) in &contribs {
                            if c_val > 0.0 && pos > 0.0 {
                                relevance[j] += alpha * (c_val / pos) * rk;
                            } else if c_val < 0.0 && neg < 0.0 {
                                relevance[j] -= beta * (c_val / neg) * rk;
                            }
                        }
                        if bk > 0.0 && pos > 0.0 {
                            bias_absorbed += alpha * (bk / pos) * rk;
                        } else if bk < 0.0 && neg < 0.0 {
                            bias_absorbed -= beta * (bk / neg) * rk;
                        }
                    }
                }
            }
        }
    }
    Ok(LayerRelevance {
        relevance: Tensor::new(input.shape().to_vec(), relevance)?,
        bias_absorbed,
        epsilon_leaked,
    })
}

/// Average pooling as the linear layer it is: every window member
/// contributes `x_j / window_size` to a bias-free neuron.
fn avg_pool_rule(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
    r_out: &Tensor,
    config: RuleConfig,
) -> Result<LayerRelevance> {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (wh, ww) = window;
    let (sh, sw) = stride;
    let oh = (h - wh) / sh + 1;
    let ow = (w - ww) / sw + 1;
    let share = 1.0 / (wh * ww) as f64;
    let xd = input.data();

    let mut relevance = vec![0.0; input.len()];
    let mut epsilon_leaked = 0.0;
    let mut contribs: Vec<(usize, f64)> = Vec::with_capacity(wh * ww);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let rk = r_out.get_flat((ch * oh + oy) * ow + ox);
                if rk == 0.0 {
                    continue;
                }
                contribs.clear();
                let mut z = 0.0;
                for ky in 0..wh {
                    for kx in 0..ww {
                        let j = (ch * h + oy * sh + ky) * w + ox * sw + kx;
                        let c_val = xd[j] * share;
                        z += c_val;
                        contribs.push((j, c_val));
                    }
                }
                match config {
                    RuleConfig::Epsilon { epsilon } => {
                        let denom = z + epsilon * sign_pos_zero(z);
                        if denom == 0.0 {
                            continue;
                        }
                        for &(j, c_val) in &contribs {
                            relevance[j] += (c_val / denom) * rk;
                        }
                        epsilon_leaked += (epsilon * sign_pos_zero(z) / denom) * rk;
                    }
                    RuleConfig::AlphaBeta { alpha, beta } => {
                        let mut pos = 0.0;
                        let mut neg = 0.0;
                        for &(_, c_val) in &contribs {
                            if c_val > 0.0 {
                                pos += c_val;
                            } else {
                                neg += c_val;
                            }
                        }
                        for &(j, c_val) in &contribs {
                            if c_val > 0.0 && pos > 0.0 {
                                relevance[j] += alpha * (c_val / pos) * rk;
                            } else if c_val < 0.0 && neg < 0.0 {
                                relevance[j] -= beta * (c_val / neg) * rk;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(LayerRelevance {
        relevance: Tensor::new(input.shape().to_vec(), relevance)?,
        bias_absorbed: 0.0,
        epsilon_leaked,
    })
}

/// Signed sum of member relevances per group. `groups` must partition the
/// map's index set: every index exactly once, none out of range.
pub fn aggregate_groups(map: &RelevanceMap, groups: &[Vec<usize>]) -> Result<Vec<f64>> {
    let len = map.values.len();
    let mut seen = vec![false; len];
    let mut covered = 0usize;
    for group in groups {
        for &idx in group {
            if idx >= len {
                return Err(Error::BadPartition(format!(
                    "index {idx} out of range ({len} values)"
                )));
            }
            if seen[idx] {
                return Err(Error::BadPartition(format!(
                    "index {idx} appears in two groups"
                )));
            }
            seen[idx] = true;
            covered += 1;
        }
    }
    if covered != len {
        return Err(Error::BadPartition(format!(
            "groups cover {covered} of {len} indices"
        )));
    }
    Ok(groups
        .iter()
        .map(|group| group.iter().map(|&idx| map.values.get_flat(idx)).sum())
        .collect())
}

/// Row groups of a `tokens x dim` map, one group per token.
pub fn per_token_groups(tokens: usize, dim: usize) -> Vec<Vec<usize>> {
    (0..tokens)
        .map(|t| (t * dim..(t + 1) * dim).collect())
        .collect()
}

/// Recomputes per-layer sums from the recorded relevance tensors,
/// independently of the running sums the propagation pass kept (the audit
/// iterates each tensor back to front), and reports the worst deviation
/// from the explained logit.
pub fn conservation_audit(map: &RelevanceMap) -> Result<ConservationReport> {
    if matches!(map.method, MethodLabel::Sensitivity { .. }) {
        return Err(Error::AuditNotApplicable(
            "sensitivity maps measure variation, not a decomposition of the function value",
        ));
    }
    if map.layer_relevances.is_empty() {
        return Err(Error::AuditNotApplicable(
            "no recorded layer relevances (map was deserialized?)",
        ));
    }
    let stored = map.conservation.as_ref().ok_or(Error::AuditNotApplicable(
        "map carries no conservation accounting",
    ))?;
    let layer_sums: Vec<f64> = map
        .layer_relevances
        .iter()
        .map(|t| t.data().iter().rev().sum())
        .collect();
    Ok(ConservationReport::from_sums(
        layer_sums,
        stored.f_value,
        stored.bias_absorbed,
        stored.epsilon_leaked,
    ))
}
