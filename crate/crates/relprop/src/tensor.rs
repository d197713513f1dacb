//! Dense tensors and the forward layer primitives everything else builds on.
//!
//! All values are 64-bit floats and all reductions run in a fixed, documented
//! order (dense: input index ascending; convolution: channel, then kernel row,
//! then kernel column), so a forward pass is bit-reproducible across runs and
//! thread counts. Tensors are immutable after construction and may be shared
//! freely across threads.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Dense n-dimensional array of `f64`, row-major (last index fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking `product(shape) == data.len()` and that every
    /// extent is positive.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidShape(format!(
                "extents must be positive, got {shape:?}"
            )));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} holds {len} elements but {} were provided",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len: usize = shape.iter().product();
        Tensor::new(shape, vec![0.0; len])
    }

    pub fn vector(data: Vec<f64>) -> Self {
        let n = data.len();
        Tensor::new(vec![n], data).expect("non-empty vector")
    }

    /// Row-major 2-D constructor from nested rows; all rows must have equal length.
    pub fn matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidShape("ragged matrix rows".into()));
        }
        Tensor::new(vec![r, c], rows.into_iter().flatten().collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Bounds-checked element access by multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }

    /// Bounds-checked element access by flat (row-major) index.
    pub fn get_flat(&self, index: usize) -> f64 {
        self.data[index]
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(
            index.len(),
            self.shape.len(),
            "index rank {} does not match tensor rank {}",
            index.len(),
            self.shape.len()
        );
        let mut flat = 0;
        for (axis, (&i, &extent)) in index.iter().zip(&self.shape).enumerate() {
            assert!(
                i < extent,
                "index {i} out of bounds for axis {axis} (extent {extent})"
            );
            flat = flat * extent + i;
        }
        flat
    }

    /// Same data under a new shape with equal element count.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Tensor> {
        Tensor::new(shape, self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Left-to-right sum over the flat data.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            shape: Vec<usize>,
            data: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Tensor::new(raw.shape, raw.data).map_err(serde::de::Error::custom)
    }
}

/// Convolution parameters: kernel is `out_channels x in_channels x kh x kw`,
/// bias has one entry per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    pub kernel: Tensor,
    pub bias: Tensor,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl ConvSpec {
    pub fn new(
        kernel: Tensor,
        bias: Tensor,
        stride: (usize, usize),
        padding: (usize, usize),
    ) -> Result<Self> {
        if kernel.rank() != 4 {
            return Err(Error::InvalidShape(format!(
                "conv kernel must be rank 4 (out x in x kh x kw), got {:?}",
                kernel.shape()
            )));
        }
        if bias.rank() != 1 || bias.shape()[0] != kernel.shape()[0] {
            return Err(Error::ShapeMismatch {
                context: "conv bias vs kernel output channels",
                left: bias.shape().to_vec(),
                right: kernel.shape().to_vec(),
            });
        }
        if stride.0 == 0 || stride.1 == 0 {
            return Err(Error::InvalidShape("conv stride must be positive".into()));
        }
        Ok(ConvSpec {
            kernel,
            bias,
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernel.shape()[2], self.kernel.shape()[3])
    }

    /// Output shape for a `c x h x w` input; the spatial extent
    /// `floor((in + 2p - k)/s) + 1` must be at least 1.
    pub fn output_shape(&self, input_shape: &[usize]) -> Result<Vec<usize>> {
        if input_shape.len() != 3 {
            return Err(Error::InvalidShape(format!(
                "conv input must be rank 3 (c x h x w), got {input_shape:?}"
            )));
        }
        if input_shape[0] != self.in_channels() {
            return Err(Error::ShapeMismatch {
                context: "conv input channels vs kernel",
                left: input_shape.to_vec(),
                right: self.kernel.shape().to_vec(),
            });
        }
        let (kh, kw) = self.kernel_size();
        let (sh, sw) = self.stride;
        let (ph, pw) = self.padding;
        let oh = conv_extent(input_shape[1], kh, sh, ph)?;
        let ow = conv_extent(input_shape[2], kw, sw, pw)?;
        Ok(vec![self.out_channels(), oh, ow])
    }
}

fn conv_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = input + 2 * pad;
    if padded < kernel {
        return Err(Error::InvalidShape(format!(
            "kernel extent {kernel} exceeds padded input extent {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// `out_k = sum_j x_j * w_jk + b_k`, accumulated with `j` ascending.
pub fn dense_forward(x: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if weights.rank() != 2 {
        return Err(Error::InvalidShape(format!(
            "dense weights must be rank 2, got {:?}",
            weights.shape()
        )));
    }
    let n = weights.shape()[0];
    let m = weights.shape()[1];
    if x.len() != n {
        return Err(Error::ShapeMismatch {
            context: "dense input vs weights",
            left: x.shape().to_vec(),
            right: weights.shape().to_vec(),
        });
    }
    if bias.rank() != 1 || bias.len() != m {
        return Err(Error::ShapeMismatch {
            context: "dense bias vs weights",
            left: bias.shape().to_vec(),
            right: weights.shape().to_vec(),
        });
    }
    let xd = x.data();
    let wd = weights.data();
    let mut out = vec![0.0; m];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &xj) in xd.iter().enumerate() {
            acc += xj * wd[j * m + k];
        }
        *o = acc + bias.get_flat(k);
    }
    Ok(Tensor::from_parts_unchecked(vec![m], out))
}

/// Cross-correlation with bias over a `c x h x w` input. The accumulation
/// per output element iterates input channel, then kernel row, then kernel
/// column. Padding contributes zeros.
pub fn conv_forward(x: &Tensor, spec: &ConvSpec) -> Result<Tensor> {
    let out_shape = spec.output_shape(x.shape())?;
    let (oc, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let (ic, ih, iw) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kh, kw) = spec.kernel_size();
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let kd = spec.kernel.data();
    let xd = x.data();

    let mut out = vec![0.0; oc * oh * ow];
    for o in 0..oc {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
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
                            let xi = (c * ih + y as usize) * iw + xcol as usize;
                            let wi = ((o * ic + c) * kh + ky) * kw + kx;
                            acc += xd[xi] * kd[wi];
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = acc + spec.bias.get_flat(o);
            }
        }
    }
    Ok(Tensor::from_parts_unchecked(out_shape, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    Max,
    Avg,
}

/// Pooling output. For max pooling, `argmax` holds the flat input index of
/// each window's winner (ties broken by smallest flat index), in output
/// order; empty for average pooling.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub output: Tensor,
    pub argmax: Vec<usize>,
}

/// Per-window maximum or arithmetic mean over a `c x h x w` input. The window
/// slides per channel; a window must fit at least once.
pub fn pool_forward(
    x: &Tensor,
    kind: PoolKind,
    window: (usize, usize),
    stride: (usize, usize),
) -> Result<PoolOutput> {
    if x.rank() != 3 {
        return Err(Error::InvalidShape(format!(
            "pool input must be rank 3 (c x h x w), got {:?}",
            x.shape()
        )));
    }
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (wh, ww) = window;
    let (sh, sw) = stride;
    if wh == 0 || ww == 0 || sh == 0 || sw == 0 {
        return Err(Error::InvalidShape(
            "pool window and stride must be positive".into(),
        ));
    }
    if wh > h || ww > w {
        return Err(Error::InvalidShape(format!(
            "pool window {wh}x{ww} larger than input {h}x{w}"
        )));
    }
    let oh = (h - wh) / sh + 1;
    let ow = (w - ww) / sw + 1;
    let xd = x.data();

    let mut out = vec![0.0; c * oh * ow];
    let mut argmax = Vec::new();
    if kind == PoolKind::Max {
        argmax.reserve(out.len());
    }
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                match kind {
                    PoolKind::Max => {
                        let mut best = f64::NEG_INFINITY;
                        let mut best_idx = 0;
                        for ky in 0..wh {
                            for kx in 0..ww {
                                let idx = (ch * h + oy * sh + ky) * w + ox * sw + kx;
                                // strict > keeps the smallest flat index on ties
                                if xd[idx] > best {
                                    best = xd[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        out[(ch * oh + oy) * ow + ox] = best;
                        argmax.push(best_idx);
                    }
                    PoolKind::Avg => {
                        let mut acc = 0.0;
                        for ky in 0..wh {
                            for kx in 0..ww {
                                acc += xd[(ch * h + oy * sh + ky) * w + ox * sw + kx];
                            }
                        }
                        out[(ch * oh + oy) * ow + ox] = acc / (wh * ww) as f64;
                    }
                }
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::from_parts_unchecked(vec![c, oh, ow], out),
        argmax,
    })
}

/// Elementwise `max(0, x)`.
pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}
