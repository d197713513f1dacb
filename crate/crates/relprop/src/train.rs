//! Minimal deterministic trainer for Dense/ReLU classifiers.
//!
//! Plain per-sample stochastic gradient descent with a softmax
//! cross-entropy loss. Initialization and epoch shuffling are driven by
//! seeded substreams, and the loop is single-threaded by contract, so the
//! same seed always yields a bit-identical model. Softmax exists only
//! inside the loss; the stored model ends at the logits.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{argmax, Layer, Model};
use crate::rng::Xoshiro256StarStar;
use crate::tensor::Tensor;

const INIT_STREAM: u64 = 0x696e_6974; // "init"
const SHUFFLE_STREAM: u64 = 0x7368_7566; // "shuf"

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: Model,
    pub train_accuracy: f64,
    /// Mean per-sample loss of each epoch, in order.
    pub epoch_losses: Vec<f64>,
}

struct DenseParams {
    weights: Vec<f64>, // row-major, in x out
    bias: Vec<f64>,
    inputs: usize,
    outputs: usize,
}

/// Trains a multi-layer perceptron whose layer widths are `widths`
/// (input width first, class count last), with a ReLU after every dense
/// layer except the final one.
pub fn train_mlp(
    dataset: &Dataset,
    widths: &[usize],
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    dataset.validate()?;
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "layer widths must list at least input and output sizes, got {widths:?}"
        )));
    }
    let input_dim = dataset.inputs[0].len();
    if dataset.inputs[0].rank() != 1 || widths[0] != input_dim {
        return Err(Error::InvalidConfig(format!(
            "first width {} must equal the {input_dim}-feature input",
            widths[0]
        )));
    }
    if *widths.last().unwrap() != dataset.class_names.len() {
        return Err(Error::InvalidConfig(format!(
            "last width {} must equal the {} classes",
            widths.last().unwrap(),
            dataset.class_names.len()
        )));
    }

    let mut params: Vec<DenseParams> = Vec::with_capacity(widths.len() - 1);
    for l in 0..widths.len() - 1 {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut rng = Xoshiro256StarStar::substream(seed, &[INIT_STREAM, l as u64]);
        let weights = (0..fan_in * fan_out)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        params.push(DenseParams {
            weights,
            bias: vec![0.0; fan_out],
            inputs: fan_in,
            outputs: fan_out,
        });
    }

    let n = dataset.len();
    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..epochs {
        order.sort_unstable();
        let mut rng = Xoshiro256StarStar::substream(seed, &[SHUFFLE_STREAM, epoch as u64]);
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        for &i in &order {
            let x = dataset.inputs[i].data();
            let label = dataset.labels[i];
            let (activations, pre_relu) = forward_all(&params, x);
            let logits = activations.last().unwrap();
            let (loss, mut delta) = softmax_cross_entropy(logits, label);
            loss_sum += loss;

            // reverse pass: delta is dLoss/dLogits at entry
            for l in (0..params.len()).rev() {
                let input = if l == 0 { x } else { &activations[l - 1] };
                let p = &mut params[l];
                let mut d_input = vec![0.0; p.inputs];
                for (k, &dz) in delta.iter().enumerate() {
                    p.bias[k] -= learning_rate * dz;
                    for j in 0..p.inputs {
                        d_input[j] += p.weights[j * p.outputs + k] * dz;
                        p.weights[j * p.outputs + k] -= learning_rate * dz * input[j];
                    }
                }
                if l > 0 {
                    // ReLU derivative on the recorded pre-activation
                    for (d, &z) in d_input.iter_mut().zip(&pre_relu[l - 1]) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                delta = d_input;
            }
        }
        let mean_loss = loss_sum / n as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        epoch_losses.push(mean_loss);
    }

    let mut layers = Vec::new();
    for (l, p) in params.iter().enumerate() {
        layers.push(Layer::Dense {
            weights: Tensor::new(vec![p.inputs, p.outputs], p.weights.clone())?,
            bias: Tensor::new(vec![p.outputs], p.bias.clone())?,
        });
        if l + 1 < params.len() {
            layers.push(Layer::Relu);
        }
    }
    let model = Model::new(vec![input_dim], layers, dataset.class_names.clone())?;

    let mut correct = 0usize;
    for (input, &label) in dataset.inputs.iter().zip(&dataset.labels) {
        let (activations, _) = forward_all(&params, input.data());
        if argmax(activations.last().unwrap()) == label {
            correct += 1;
        }
    }
    Ok(TrainReport {
        model,
        train_accuracy: correct as f64 / n as f64,
        epoch_losses,
    })
}

/// Returns (post-activation per layer, pre-ReLU values per hidden layer).
fn forward_all(params: &[DenseParams], x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut activations = Vec::with_capacity(params.len());
    let mut pre_relu = Vec::with_capacity(params.len().saturating_sub(1));
    let mut current = x.to_vec();
    for (l, p) in params.iter().enumerate() {
        let mut z = vec![0.0; p.outputs];
        for (k, zk) in z.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &xj) in current.iter().enumerate() {
                acc += xj * p.weights[j * p.outputs + k];
            }
            *zk = acc + p.bias[k];
        }
        if l + 1 < params.len() {
            pre_relu.push(z.clone());
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        activations.push(z.clone());
        current = z;
    }
    (activations, pre_relu)
}

/// Numerically stable softmax cross-entropy; returns (loss, dLoss/dLogits).
fn softmax_cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp_sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum();
    let log_sum = exp_sum.ln();
    let loss = -(logits[label] - max - log_sum);
    let delta: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let p = (z - max).exp() / exp_sum;
            if k == label {
                p - 1.0
            } else {
                p
            }
        })
        .collect();
    (loss, delta)
}
