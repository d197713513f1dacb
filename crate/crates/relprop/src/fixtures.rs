//! Deterministic fixtures: synthetic datasets and seeded models for tests,
//! examples, and the acceptance suite. Everything here is a pure function of
//! its seed.

use crate::data::Dataset;
use crate::error::Result;
use crate::model::{Layer, Model};
use crate::rng::Xoshiro256StarStar;
use crate::tensor::{ConvSpec, Tensor};

/// Two linearly separable Gaussian blobs in the plane, classes alternating
/// by sample index.
pub fn two_blobs(n: usize, seed: u64) -> Dataset {
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xb10b, i as u64]);
        let class = i % 2;
        let (cx, cy) = if class == 0 { (-1.5, -1.0) } else { (1.5, 1.0) };
        inputs.push(Tensor::vector(vec![
            cx + 0.5 * rng.next_gaussian(),
            cy + 0.5 * rng.next_gaussian(),
        ]));
        labels.push(class);
    }
    Dataset::new(inputs, labels, vec!["neg".into(), "pos".into()]).expect("valid fixture")
}

/// Two-class set built so explanation methods separate measurably: the first
/// `informative` features carry the class sign but each is active only part
/// of the time and at its own scale, the rest are pure noise. A magnitude
/// ranking that ignores the actual input values keeps paying for inactive
/// features, while a contribution ranking does not.
pub fn eval_fixture(n: usize, seed: u64) -> Dataset {
    const DIM: usize = 16;
    const INFORMATIVE: usize = 8;
    let scales = [2.0, 1.5, 1.2, 1.0, 0.8, 0.6, 0.5, 0.4];
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xe7a1, i as u64]);
        let class = i % 2;
        let sign = if class == 0 { -1.0 } else { 1.0 };
        let mut x = Vec::with_capacity(DIM);
        for &scale in &scales {
            let active = rng.next_f64() < 0.55;
            if active {
                let magnitude = 0.6 + 0.8 * rng.next_f64();
                x.push(sign * scale * magnitude);
            } else {
                x.push(0.0);
            }
        }
        for _ in INFORMATIVE..DIM {
            x.push(0.35 * rng.next_gaussian());
        }
        inputs.push(Tensor::vector(x));
        labels.push(class);
    }
    Dataset::new(inputs, labels, vec!["a".into(), "b".into()]).expect("valid fixture")
}

/// Seeded Dense/ReLU stack: a dense layer per consecutive width pair with a
/// ReLU between them. `with_bias` draws biases from the same stream,
/// otherwise biases are zero.
pub fn random_mlp(widths: &[usize], seed: u64, with_bias: bool) -> Result<Model> {
    assert!(widths.len() >= 2);
    let mut layers = Vec::new();
    for l in 0..widths.len() - 1 {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0x4d4c50, l as u64]);
        let (fi, fo) = (widths[l], widths[l + 1]);
        let scale = (2.0 / fi as f64).sqrt();
        let weights: Vec<f64> = (0..fi * fo)
            .map(|_| scale * (rng.next_f64() * 2.0 - 1.0))
            .collect();
        let bias: Vec<f64> = if with_bias {
            (0..fo)
                .map(|_| 0.2 * (rng.next_f64() * 2.0 - 1.0))
                .collect()
        } else {
            vec![0.0; fo]
        };
        layers.push(Layer::Dense {
            weights: Tensor::new(vec![fi, fo], weights)?,
            bias: Tensor::new(vec![fo], bias)?,
        });
        if l + 1 < widths.len() - 1 {
            layers.push(Layer::Relu);
        }
    }
    let classes = *widths.last().unwrap();
    let class_names = (0..classes).map(|c| format!("c{c}")).collect();
    Model::new(vec![widths[0]], layers, class_names)
}

/// Seeded convolutional classifier on a `1 x size x size` input:
/// conv -> ReLU -> pool -> flatten -> dense. Pool kind alternates with the
/// seed so both redistribution paths get exercised.
pub fn random_conv_net(size: usize, seed: u64, max_pool: bool) -> Result<Model> {
    let mut rng = Xoshiro256StarStar::substream(seed, &[0xc0c0]);
    let out_channels = 2;
    let kernel: Vec<f64> = (0..out_channels * 9)
        .map(|_| rng.next_f64() * 2.0 - 1.0)
        .collect();
    let bias: Vec<f64> = (0..out_channels)
        .map(|_| 0.1 * (rng.next_f64() * 2.0 - 1.0))
        .collect();
    let spec = ConvSpec::new(
        Tensor::new(vec![out_channels, 1, 3, 3], kernel)?,
        Tensor::new(vec![out_channels], bias)?,
        (1, 1),
        (0, 0),
    )?;
    let conv_out = size - 2;
    let pooled = conv_out / 2;
    let flat = out_channels * pooled * pooled;
    let dense_w: Vec<f64> = (0..flat * 2).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
    let pool = if max_pool {
        Layer::MaxPool {
            window: (2, 2),
            stride: (2, 2),
        }
    } else {
        Layer::AvgPool {
            window: (2, 2),
            stride: (2, 2),
        }
    };
    Model::new(
        vec![1, size, size],
        vec![
            Layer::Conv(spec),
            Layer::Relu,
            pool,
            Layer::Flatten,
            Layer::Dense {
                weights: Tensor::new(vec![flat, 2], dense_w)?,
                bias: Tensor::new(vec![2], vec![0.0, 0.0])?,
            },
        ],
        vec!["c0".into(), "c1".into()],
    )
}

/// 8x8 bar images: class 0 draws a horizontal bar, class 1 a vertical one,
/// plus faint seeded background noise. Returned as raw bytes for IDX fixture
/// files.
pub fn bar_images(n: usize, seed: u64) -> (Vec<Vec<u8>>, Vec<u8>) {
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xba7, i as u64]);
        let class = (i % 2) as u8;
        let mut img = vec![0u8; 64];
        for px in img.iter_mut() {
            *px = (rng.next_f64() * 40.0) as u8;
        }
        let lane = 2 + rng.next_below(4);
        for t in 1..7 {
            let idx = if class == 0 {
                lane * 8 + t
            } else {
                t * 8 + lane
            };
            img[idx] = 230 + (rng.next_f64() * 25.0) as u8;
        }
        images.push(img);
        labels.push(class);
    }
    (images, labels)
}

/// Tiny sentiment-style corpus and vocabulary in the `token<TAB>id` /
/// `label<TAB>document` formats the token loader reads.
pub fn sentiment_corpus() -> (&'static str, &'static str) {
    let vocab = "good\t1\nbad\t2\ngreat\t3\nterrible\t4\nfine\t5\nokay\t6\n";
    let docs = "pos\tgood great good okay\n\
                neg\tbad terrible bad\n\
                pos\tgreat fine good\n\
                neg\tterrible bad awful\n";
    (docs, vocab)
}
