//! Layer-graph models: definition, shape validation, forward pass with full
//! activation recording, and the on-disk format.
//!
//! A model on disk is two files in one directory: `model.json`, a
//! human-diffable manifest (layer kinds, shapes, class names, blob checksum),
//! and a raw weight blob of little-endian `f32` in declaration order. Weights
//! are widened to `f64` on load; all in-memory arithmetic is 64-bit.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::{
    conv_forward, dense_forward, pool_forward, relu_forward, ConvSpec, PoolKind, Tensor,
};

pub const MANIFEST_NAME: &str = "model.json";
pub const WEIGHTS_NAME: &str = "weights.bin";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub enum Layer {
    Dense {
        weights: Tensor,
        bias: Tensor,
    },
    Conv(ConvSpec),
    MaxPool {
        window: (usize, usize),
        stride: (usize, usize),
    },
    AvgPool {
        window: (usize, usize),
        stride: (usize, usize),
    },
    Relu,
    Flatten,
    /// Token-id lookup table, `vocab x dim`. Row 0 is the pad/unknown row and
    /// must be all-zero so padding carries no signal.
    Embedding {
        table: Tensor,
    },
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv(_) => "conv",
            Layer::MaxPool { .. } => "max_pool",
            Layer::AvgPool { .. } => "avg_pool",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
            Layer::Embedding { .. } => "embedding",
        }
    }

    /// Output shape this layer produces for `input`, or an error if the
    /// shapes are incompatible.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Dense { weights, bias: _ } => {
                if input.len() != 1 || input[0] != weights.shape()[0] {
                    return Err(Error::ShapeIncompatible(format!(
                        "dense layer expects input [{}], got {input:?}",
                        weights.shape()[0]
                    )));
                }
                Ok(vec![weights.shape()[1]])
            }
            Layer::Conv(spec) => spec.output_shape(input),
            Layer::MaxPool { window, stride } | Layer::AvgPool { window, stride } => {
                if input.len() != 3 {
                    return Err(Error::ShapeIncompatible(format!(
                        "pool layer expects rank-3 input, got {input:?}"
                    )));
                }
                let (h, w) = (input[1], input[2]);
                if window.0 > h || window.1 > w {
                    return Err(Error::ShapeIncompatible(format!(
                        "pool window {:?} larger than input {h}x{w}",
                        window
                    )));
                }
                Ok(vec![
                    input[0],
                    (h - window.0) / stride.0 + 1,
                    (w - window.1) / stride.1 + 1,
                ])
            }
            Layer::Relu => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Embedding { table } => {
                if input.len() != 1 {
                    return Err(Error::ShapeIncompatible(format!(
                        "embedding layer expects a rank-1 id sequence, got {input:?}"
                    )));
                }
                Ok(vec![input[0], table.shape()[1]])
            }
        }
    }

    fn parameter_count(&self) -> usize {
        match self {
            Layer::Dense { weights, bias } => weights.len() + bias.len(),
            Layer::Conv(spec) => spec.kernel.len() + spec.bias.len(),
            Layer::Embedding { table } => table.len(),
            _ => 0,
        }
    }
}

/// The classifier function: an ordered layer list with a declared input
/// shape and one name per output class.
#[derive(Debug, Clone)]
pub struct Model {
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer>,
    pub class_names: Vec<String>,
}

impl Model {
    pub fn new(
        input_shape: Vec<usize>,
        layers: Vec<Layer>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let model = Model {
            input_shape,
            layers,
            class_names,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the whole layer chain against the declared input shape and the
    /// class list. Embedding layers may only appear first (they consume raw
    /// token ids) and their pad row must be zero.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::ShapeIncompatible("model has no layers".into()));
        }
        if self.class_names.len() < 2 {
            return Err(Error::ShapeIncompatible(format!(
                "a classifier needs at least 2 class names, got {}",
                self.class_names.len()
            )));
        }
        let mut shape = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Layer::Embedding { table } = layer {
                if i != 0 {
                    return Err(Error::ShapeIncompatible(format!(
                        "embedding layer must be first, found at position {i}"
                    )));
                }
                let dim = table.shape()[1];
                if (0..dim).any(|d| table.get(&[0, d]) != 0.0) {
                    return Err(Error::ShapeIncompatible(
                        "embedding pad row (id 0) must be all-zero".into(),
                    ));
                }
            }
            shape = layer.output_shape(&shape).map_err(|e| {
                Error::ShapeIncompatible(format!("layer {i} ({}): {e}", layer.kind_name()))
            })?;
        }
        if shape.len() != 1 || shape[0] != self.class_names.len() {
            return Err(Error::ShapeIncompatible(format!(
                "layer chain yields {shape:?} outputs but {} class names are declared",
                self.class_names.len()
            )));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Shapes at every layer boundary, input first, logits last.
    pub fn boundary_shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes = vec![self.input_shape.clone()];
        for layer in &self.layers {
            let next = layer.output_shape(shapes.last().unwrap())?;
            shapes.push(next);
        }
        Ok(shapes)
    }
}

/// Everything one forward pass recorded: per-layer inputs and outputs in
/// order, plus the winner index of every max-pool window.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layer_inputs: Vec<Tensor>,
    pub layer_outputs: Vec<Tensor>,
    /// Aligned with layers; non-empty only for max-pool layers.
    pub pool_argmax: Vec<Vec<usize>>,
    pub logits: Tensor,
    pub predicted_class: usize,
}

impl ForwardTrace {
    pub fn input(&self) -> &Tensor {
        &self.layer_inputs[0]
    }
}

/// Runs the model, recording every intermediate activation. The predicted
/// class is the argmax of the logits, ties broken by smallest index.
pub fn forward(model: &Model, input: &Tensor) -> Result<ForwardTrace> {
    if input.shape() != model.input_shape.as_slice() {
        return Err(Error::ShapeMismatch {
            context: "model input",
            left: input.shape().to_vec(),
            right: model.input_shape.clone(),
        });
    }
    let mut layer_inputs = Vec::with_capacity(model.layers.len());
    let mut layer_outputs = Vec::with_capacity(model.layers.len());
    let mut pool_argmax = vec![Vec::new(); model.layers.len()];

    let mut current = input.clone();
    for (i, layer) in model.layers.iter().enumerate() {
        layer_inputs.push(current.clone());
        let out = match layer {
            Layer::Dense { weights, bias } => dense_forward(&current, weights, bias)?,
            Layer::Conv(spec) => conv_forward(&current, spec)?,
            Layer::MaxPool { window, stride } => {
                let pooled = pool_forward(&current, PoolKind::Max, *window, *stride)?;
                pool_argmax[i] = pooled.argmax;
                pooled.output
            }
            Layer::AvgPool { window, stride } => {
                pool_forward(&current, PoolKind::Avg, *window, *stride)?.output
            }
            Layer::Relu => relu_forward(&current),
            Layer::Flatten => current.reshape(vec![current.len()])?,
            Layer::Embedding { table } => embed(&current, table)?,
        };
        layer_outputs.push(out.clone());
        current = out;
    }

    let logits = current;
    if logits.rank() != 1 || logits.len() != model.num_classes() {
        return Err(Error::ShapeIncompatible(format!(
            "logits shape {:?} does not match {} classes",
            logits.shape(),
            model.num_classes()
        )));
    }
    let predicted_class = argmax(logits.data());
    Ok(ForwardTrace {
        layer_inputs,
        layer_outputs,
        pool_argmax,
        logits,
        predicted_class,
    })
}

/// First index of the maximum value (ties go to the smallest index).
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn embed(ids: &Tensor, table: &Tensor) -> Result<Tensor> {
    let vocab = table.shape()[0];
    let dim = table.shape()[1];
    let mut data = Vec::with_capacity(ids.len() * dim);
    for raw in ids.iter() {
        if raw < 0.0 || raw.fract() != 0.0 || raw as usize >= vocab {
            return Err(Error::InvalidShape(format!(
                "token id {raw} is not an integer in [0, {vocab})"
            )));
        }
        let row = raw as usize;
        for d in 0..dim {
            data.push(table.get(&[row, d]));
        }
    }
    Tensor::new(vec![ids.len(), dim], data)
}

// --- on-disk format -------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    input_shape: Vec<usize>,
    layers: Vec<ManifestLayer>,
    class_names: Vec<String>,
    weights_file: String,
    weights_sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLayer {
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
struct DenseParams {
    inputs: usize,
    outputs: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConvParams {
    out_channels: usize,
    in_channels: usize,
    kernel: [usize; 2],
    stride: [usize; 2],
    padding: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct PoolParams {
    window: [usize; 2],
    stride: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingParams {
    vocab: usize,
    dim: usize,
}

/// Writes `model.json` plus the weight blob into `dir`, creating it if
/// needed. Both files are written via temp-then-rename so a crash never
/// leaves a half-written model behind.
pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    model.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut blob: Vec<u8> = Vec::new();
    let mut layers = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let (kind, params) = match layer {
            Layer::Dense { weights, bias } => {
                push_f32(&mut blob, weights);
                push_f32(&mut blob, bias);
                (
                    "dense",
                    serde_json::to_value(DenseParams {
                        inputs: weights.shape()[0],
                        outputs: weights.shape()[1],
                    })?,
                )
            }
            Layer::Conv(spec) => {
                push_f32(&mut blob, &spec.kernel);
                push_f32(&mut blob, &spec.bias);
                (
                    "conv",
                    serde_json::to_value(ConvParams {
                        out_channels: spec.out_channels(),
                        in_channels: spec.in_channels(),
                        kernel: [spec.kernel_size().0, spec.kernel_size().1],
                        stride: [spec.stride.0, spec.stride.1],
                        padding: [spec.padding.0, spec.padding.1],
                    })?,
                )
            }
            Layer::MaxPool { window, stride } => (
                "max_pool",
                serde_json::to_value(PoolParams {
                    window: [window.0, window.1],
                    stride: [stride.0, stride.1],
                })?,
            ),
            Layer::AvgPool { window, stride } => (
                "avg_pool",
                serde_json::to_value(PoolParams {
                    window: [window.0, window.1],
                    stride: [stride.0, stride.1],
                })?,
            ),
            Layer::Relu => ("relu", serde_json::Value::Object(Default::default())),
            Layer::Flatten => ("flatten", serde_json::Value::Object(Default::default())),
            Layer::Embedding { table } => {
                push_f32(&mut blob, table);
                (
                    "embedding",
                    serde_json::to_value(EmbeddingParams {
                        vocab: table.shape()[0],
                        dim: table.shape()[1],
                    })?,
                )
            }
        };
        layers.push(ManifestLayer {
            kind: kind.to_string(),
            params,
        });
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        input_shape: model.input_shape.clone(),
        layers,
        class_names: model.class_names.clone(),
        weights_file: WEIGHTS_NAME.to_string(),
        weights_sha256: sha256_hex(&blob),
    };

    write_atomic(&dir.join(WEIGHTS_NAME), &blob)?;
    let manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&dir.join(MANIFEST_NAME), &manifest_bytes)?;
    Ok(())
}

/// Loads a model directory written by [`save_model`]: parses the manifest,
/// verifies the blob checksum, reads little-endian `f32` weights in
/// declaration order, and shape-checks the resulting model.
pub fn load_model(dir: &Path) -> Result<Model> {
    let manifest_path = dir.join(MANIFEST_NAME);
    if !manifest_path.is_file() {
        return Err(Error::MissingFile(manifest_path));
    }
    let manifest_bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported model format_version {}",
            manifest.format_version
        )));
    }

    let blob_path = dir.join(&manifest.weights_file);
    if !blob_path.is_file() {
        return Err(Error::MissingFile(blob_path));
    }
    let blob = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let actual = sha256_hex(&blob);
    if actual != manifest.weights_sha256 {
        return Err(Error::ChecksumMismatch {
            expected: manifest.weights_sha256,
            actual,
        });
    }
    if blob.len() % 4 != 0 {
        return Err(Error::Truncated(blob_path));
    }
    let floats: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();

    let mut cursor = 0usize;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, entry) in manifest.layers.iter().enumerate() {
        let layer = match entry.kind.as_str() {
            "dense" => {
                let p: DenseParams = serde_json::from_value(entry.params.clone())?;
                let (w, b) = take_layer(
                    &floats,
                    &mut cursor,
                    p.inputs * p.outputs,
                    p.outputs,
                    i,
                    "dense",
                )?;
                Layer::Dense {
                    weights: Tensor::new(vec![p.inputs, p.outputs], w)?,
                    bias: Tensor::new(vec![p.outputs], b)?,
                }
            }
            "conv" => {
                let p: ConvParams = serde_json::from_value(entry.params.clone())?;
                let klen = p.out_channels * p.in_channels * p.kernel[0] * p.kernel[1];
                let (k, b) = take_layer(&floats, &mut cursor, klen, p.out_channels, i, "conv")?;
                Layer::Conv(ConvSpec::new(
                    Tensor::new(
                        vec![p.out_channels, p.in_channels, p.kernel[0], p.kernel[1]],
                        k,
                    )?,
                    Tensor::new(vec![p.out_channels], b)?,
                    (p.stride[0], p.stride[1]),
                    (p.padding[0], p.padding[1]),
                )?)
            }
            "max_pool" | "avg_pool" => {
                let p: PoolParams = serde_json::from_value(entry.params.clone())?;
                let window = (p.window[0], p.window[1]);
                let stride = (p.stride[0], p.stride[1]);
                if entry.kind == "max_pool" {
                    Layer::MaxPool { window, stride }
                } else {
                    Layer::AvgPool { window, stride }
                }
            }
            "relu" => Layer::Relu,
            "flatten" => Layer::Flatten,
            "embedding" => {
                let p: EmbeddingParams = serde_json::from_value(entry.params.clone())?;
                let (t, _) = take_layer(&floats, &mut cursor, p.vocab * p.dim, 0, i, "embedding")?;
                Layer::Embedding {
                    table: Tensor::new(vec![p.vocab, p.dim], t)?,
                }
            }
            other => return Err(Error::UnsupportedLayer(other.to_string())),
        };
        layers.push(layer);
    }
    if cursor != floats.len() {
        return Err(Error::ShapeIncompatible(format!(
            "weight blob holds {} floats but the layer chain consumes {cursor}",
            floats.len()
        )));
    }

    Model::new(manifest.input_shape, layers, manifest.class_names)
}

/// Consumes one layer's `weights + bias` floats. The availability check is
/// done on the layer's full requirement so the error can name it whole.
fn take_layer(
    floats: &[f64],
    cursor: &mut usize,
    weights: usize,
    bias: usize,
    layer_index: usize,
    kind: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let available = floats.len() - *cursor;
    if weights + bias > available {
        return Err(Error::WeightCount {
            layer: format!("layer {layer_index} ({kind})"),
            expected_weights: weights,
            expected_bias: bias,
            got: available,
        });
    }
    let w = floats[*cursor..*cursor + weights].to_vec();
    *cursor += weights;
    let b = floats[*cursor..*cursor + bias].to_vec();
    *cursor += bias;
    Ok((w, b))
}

fn push_f32(blob: &mut Vec<u8>, t: &Tensor) {
    for v in t.iter() {
        blob.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Total number of stored parameters (useful for sanity checks and reports).
pub fn parameter_count(model: &Model) -> usize {
    model.layers.iter().map(|l| l.parameter_count()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn identity_model() -> Model {
        Model::new(
            vec![2],
            vec![Layer::Dense {
                weights: Tensor::matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
                bias: Tensor::vector(vec![0.0, 0.0]),
            }],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn forward_identity_dense() {
        let model = identity_model();
        let trace = forward(&model, &Tensor::vector(vec![0.2, 0.8])).unwrap();
        assert_eq!(trace.logits.data(), &[0.2, 0.8]);
        assert_eq!(trace.predicted_class, 1);
    }

    #[test]
    fn forward_dense_then_relu() {
        let model = Model::new(
            vec![2],
            vec![
                Layer::Dense {
                    weights: Tensor::matrix(vec![vec![2.0, 0.0], vec![-1.0, 0.0]]).unwrap(),
                    bias: Tensor::vector(vec![0.0, 0.0]),
                },
                Layer::Relu,
            ],
            vec!["pos".into(), "zero".into()],
        )
        .unwrap();
        let trace = forward(&model, &Tensor::vector(vec![1.0, 1.0])).unwrap();
        assert_eq!(trace.logits.data(), &[1.0, 0.0]);
    }

    #[test]
    fn equal_logits_pick_class_zero() {
        let model = identity_model();
        let trace = forward(&model, &Tensor::vector(vec![0.5, 0.5])).unwrap();
        assert_eq!(trace.predicted_class, 0);
    }

    #[test]
    fn trace_chains_outputs_to_inputs() {
        let model = Model::new(
            vec![3],
            vec![
                Layer::Dense {
                    weights: Tensor::matrix(vec![
                        vec![0.5, -1.0],
                        vec![2.0, 0.25],
                        vec![-0.5, 1.0],
                    ])
                    .unwrap(),
                    bias: Tensor::vector(vec![0.1, -0.2]),
                },
                Layer::Relu,
            ],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let trace = forward(&model, &Tensor::vector(vec![1.0, -2.0, 0.5])).unwrap();
        for i in 0..model.layers.len() - 1 {
            assert_eq!(trace.layer_outputs[i], trace.layer_inputs[i + 1]);
        }
        assert_eq!(&trace.layer_outputs[model.layers.len() - 1], &trace.logits);
    }

    #[test]
    fn save_load_round_trip() {
        let model = identity_model();
        let dir = tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        assert_eq!(loaded.input_shape, model.input_shape);
        assert_eq!(loaded.class_names, model.class_names);
        match (&loaded.layers[0], &model.layers[0]) {
            (
                Layer::Dense {
                    weights: lw,
                    bias: lb,
                },
                Layer::Dense {
                    weights: mw,
                    bias: mb,
                },
            ) => {
                assert_eq!(lw, mw);
                assert_eq!(lb, mb);
            }
            _ => panic!("layer kind changed in round trip"),
        }
    }

    #[test]
    fn save_is_atomic_overwrite() {
        let model = identity_model();
        let dir = tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        save_model(&model, dir.path()).unwrap();
        assert!(load_model(dir.path()).is_ok());
        assert!(!dir.path().join(format!(".{MANIFEST_NAME}.tmp")).exists());
    }

    #[test]
    fn empty_layer_list_rejected_before_write() {
        let model = Model {
            input_shape: vec![2],
            layers: vec![],
            class_names: vec!["a".into(), "b".into()],
        };
        let dir = tempdir().unwrap();
        assert!(save_model(&model, dir.path()).is_err());
        assert!(!dir.path().join(MANIFEST_NAME).exists());
    }

    #[test]
    fn short_blob_names_expected_counts() {
        let dir = tempdir().unwrap();
        let model = Model::new(
            vec![4],
            vec![Layer::Dense {
                weights: Tensor::new(vec![4, 3], vec![0.5; 12]).unwrap(),
                bias: Tensor::vector(vec![0.0, 0.0, 0.0]),
            }],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        save_model(&model, dir.path()).unwrap();

        // truncate the blob to 13 floats and fix the checksum so the count
        // check is what trips
        let blob_path = dir.path().join(WEIGHTS_NAME);
        let blob = fs::read(&blob_path).unwrap();
        let short = &blob[..13 * 4];
        fs::write(&blob_path, short).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let mut manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
        manifest["weights_sha256"] = serde_json::Value::String(sha256_hex(short));
        fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();

        let err = load_model(dir.path()).unwrap_err();
        match err {
            Error::WeightCount {
                expected_weights,
                expected_bias,
                got,
                ..
            } => {
                assert_eq!(expected_weights, 12);
                assert_eq!(expected_bias, 3);
                assert_eq!(got, 13);
            }
            other => panic!("expected WeightCount, got {other:?}"),
        }
        let msg = format!(
            "{}",
            Error::WeightCount {
                layer: "layer 0 (dense)".into(),
                expected_weights: 12,
                expected_bias: 3,
                got: 13
            }
        );
        assert!(
            msg.contains("expected 12 weight floats (+3 bias)"),
            "got: {msg}"
        );
    }

    #[test]
    fn checksum_mismatch_is_distinct() {
        let dir = tempdir().unwrap();
        save_model(&identity_model(), dir.path()).unwrap();
        let blob_path = dir.path().join(WEIGHTS_NAME);
        let mut blob = fs::read(&blob_path).unwrap();
        blob[0] ^= 0xff;
        fs::write(&blob_path, &blob).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn missing_file_is_distinct() {
        let dir = tempdir().unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::MissingFile(_))));
    }

    #[test]
    fn class_count_mismatch_is_shape_incompatible() {
        let dir = tempdir().unwrap();
        let model = Model::new(
            vec![2],
            vec![Layer::Dense {
                weights: Tensor::new(vec![2, 5], vec![0.1; 10]).unwrap(),
                bias: Tensor::vector(vec![0.0; 5]),
            }],
            vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
        )
        .unwrap();
        save_model(&model, dir.path()).unwrap();
        let manifest_path = dir.path().join(MANIFEST_NAME);
        let mut manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
        manifest["class_names"] = serde_json::json!(["a", "b", "c"]);
        fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&manifest).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::ShapeIncompatible(_))
        ));
    }

    #[test]
    fn embedding_pad_row_must_be_zero() {
        let table = Tensor::matrix(vec![vec![0.1, 0.0], vec![1.0, 2.0]]).unwrap();
        let result = Model::new(
            vec![3],
            vec![
                Layer::Embedding { table },
                Layer::Flatten,
                Layer::Dense {
                    weights: Tensor::new(vec![6, 2], vec![0.0; 12]).unwrap(),
                    bias: Tensor::vector(vec![0.0, 0.0]),
                },
            ],
            vec!["a".into(), "b".into()],
        );
        assert!(result.is_err());
    }

    #[test]
    fn embedding_maps_ids_to_rows() {
        let table = Tensor::matrix(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let model = Model::new(
            vec![2],
            vec![
                Layer::Embedding { table },
                Layer::Flatten,
                Layer::Dense {
                    weights: Tensor::new(vec![4, 2], vec![1.0; 8]).unwrap(),
                    bias: Tensor::vector(vec![0.0, 0.0]),
                },
            ],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let trace = forward(&model, &Tensor::vector(vec![2.0, 0.0])).unwrap();
        assert_eq!(trace.layer_outputs[0].data(), &[-1.0, 0.5, 0.0, 0.0]);
    }
}
