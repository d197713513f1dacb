//! End-to-end acceptance checks, one test per criterion. Run with
//! `cargo test -p relprop --test acceptance -- --nocapture` to see one
//! PASS line per criterion.

use std::path::Path;
use std::process::Command;

use relprop::data::save_csv;
use relprop::evaluate::{curve_auc, perturbation_curve, PerturbMode, PerturbationPlan};
use relprop::fixtures;
use relprop::gradient::{
    backward_gradient, finite_difference_gradient, sensitivity_map, ChannelNorm,
};
use relprop::lrp::{
    conservation_audit, lrp_alphabeta_layer, lrp_epsilon_layer, lrp_explain, per_token_groups,
    RuleConfig,
};
use relprop::model::{forward, Layer, Model};
use relprop::rng::Xoshiro256StarStar;
use relprop::tensor::{ConvSpec, Tensor};

fn pass(line: &str) {
    println!("[PASS] {line}");
}

fn rel_close(a: f64, b: f64, rel: f64, abs_floor: f64) -> bool {
    let diff = (a - b).abs();
    diff <= abs_floor || diff <= rel * a.abs().max(b.abs())
}

// --- random network families -------------------------------------------------

/// Bias-free Dense/ReLU stack with seeded widths (2..=32) and depth
/// (2..=5 dense layers).
fn random_deep_mlp(seed: u64) -> Model {
    let mut rng = Xoshiro256StarStar::substream(seed, &[0x91]);
    let depth = 2 + rng.next_below(4); // dense layers
    let mut widths = vec![2 + rng.next_below(31)];
    for _ in 0..depth {
        widths.push(2 + rng.next_below(31));
    }
    let last = widths.len() - 1;
    widths[last] = widths[last].max(2);
    fixtures::random_mlp(&widths, seed, false).unwrap()
}

/// Bias-free net with a spatial front end: AvgPool -> Flatten -> Dense/ReLU.
fn random_pool_net(seed: u64) -> Model {
    let mut rng = Xoshiro256StarStar::substream(seed, &[0x92]);
    let c = 1 + rng.next_below(2);
    let h = 4 + 2 * rng.next_below(2);
    let flat = c * (h / 2) * (h / 2);
    let hidden = 2 + rng.next_below(10);
    let mlp = fixtures::random_mlp(&[flat, hidden, 2], seed, false).unwrap();
    let mut layers = vec![
        Layer::AvgPool {
            window: (2, 2),
            stride: (2, 2),
        },
        Layer::Flatten,
    ];
    layers.extend(mlp.layers);
    Model::new(vec![c, h, h], layers, mlp.class_names).unwrap()
}

fn random_input_for(model: &Model, seed: u64, attempt: u64) -> Tensor {
    let mut rng = Xoshiro256StarStar::substream(seed, &[0x93, attempt]);
    let len: usize = model.input_shape.iter().product();
    Tensor::new(
        model.input_shape.clone(),
        (0..len).map(|_| rng.next_f64() * 2.0 - 1.0).collect(),
    )
    .unwrap()
}

/// Smallest |pre-activation| over every dense layer output and the logits.
/// Inputs are resampled until this margin clears, keeping the tolerance
/// checks about the rules instead of about cancellation luck.
fn min_preactivation(model: &Model, trace: &relprop::model::ForwardTrace) -> f64 {
    let mut min = f64::INFINITY;
    for (i, layer) in model.layers.iter().enumerate() {
        if matches!(
            layer,
            Layer::Dense { .. } | Layer::AvgPool { .. } | Layer::Conv(_)
        ) {
            for v in trace.layer_outputs[i].iter() {
                min = min.min(v.abs());
            }
        }
    }
    min
}

fn well_conditioned_sample(
    make: impl Fn(u64) -> Model,
    seed: u64,
    margin: f64,
) -> (Model, relprop::model::ForwardTrace) {
    let mut net_seed = seed;
    loop {
        let model = make(net_seed);
        for attempt in 0..50u64 {
            let input = random_input_for(&model, net_seed, attempt);
            let trace = forward(&model, &input).unwrap();
            let f = trace.logits.get_flat(trace.predicted_class);
            if min_preactivation(&model, &trace) >= margin && f.abs() >= 1e-2 {
                return (model, trace);
            }
        }
        net_seed += 100_000;
    }
}

#[test]
fn criterion_1_epsilon_rule_conserves_relevance() {
    let mut checked = 0;
    for seed in 0..120u64 {
        let make: fn(u64) -> Model = if seed % 2 == 0 {
            random_deep_mlp
        } else {
            random_pool_net
        };
        let (model, trace) = well_conditioned_sample(make, seed, 1e-3);
        let map = lrp_explain(
            &model,
            &trace,
            trace.predicted_class,
            RuleConfig::Epsilon { epsilon: 0.0 },
        )
        .unwrap();
        let audit = conservation_audit(&map).unwrap();
        assert!(
            audit.max_rel_deviation <= 1e-9,
            "seed {seed}: relative deviation {} over layers {:?} (f = {})",
            audit.max_rel_deviation,
            audit.layer_sums,
            audit.f_value
        );
        checked += 1;
    }
    assert!(checked >= 100);
    pass(&format!(
        "criterion 1: epsilon rule (eps = 0) conserved relevance at every layer across {checked} bias-free networks (<= 1e-9 relative)"
    ));
}

/// Every dense neuron must carry both positive and negative contributions
/// above `margin` for the sample to qualify.
fn mixed_sign_sample(seed: u64, margin: f64) -> (Model, relprop::model::ForwardTrace) {
    let mut net_seed = seed;
    loop {
        let model = random_deep_mlp(net_seed);
        'attempts: for attempt in 0..200u64 {
            let input = random_input_for(&model, net_seed, attempt);
            let trace = forward(&model, &input).unwrap();
            if trace.logits.get_flat(trace.predicted_class).abs() < 1e-2 {
                continue;
            }
            for (i, layer) in model.layers.iter().enumerate() {
                if let Layer::Dense { weights, .. } = layer {
                    let x = &trace.layer_inputs[i];
                    let m = weights.shape()[1];
                    for k in 0..m {
                        let mut pos = 0.0;
                        let mut neg = 0.0;
                        for (j, xj) in x.iter().enumerate() {
                            let c = xj * weights.get(&[j, k]);
                            if c > 0.0 {
                                pos += c;
                            } else {
                                neg += c;
                            }
                        }
                        if pos < margin || neg > -margin {
                            continue 'attempts;
                        }
                    }
                }
            }
            return (model, trace);
        }
        net_seed += 100_000;
    }
}

#[test]
fn criterion_2_alphabeta_rule_conserves_relevance() {
    let mut checked = 0;
    for seed in 0..100u64 {
        let (model, trace) = mixed_sign_sample(seed, 1e-3);
        for (alpha, beta) in [(1.0, 0.0), (2.0, 1.0)] {
            let map = lrp_explain(
                &model,
                &trace,
                trace.predicted_class,
                RuleConfig::AlphaBeta { alpha, beta },
            )
            .unwrap();
            let audit = conservation_audit(&map).unwrap();
            assert!(
                audit.max_rel_deviation <= 1e-9,
                "seed {seed} (alpha={alpha}): deviation {}",
                audit.max_rel_deviation
            );
        }
        checked += 1;
    }
    assert!(checked >= 100);
    pass(&format!(
        "criterion 2: alpha-beta rule conserved relevance for (1,0) and (2,1) across {checked} mixed-sign networks (<= 1e-9 relative)"
    ));
}

/// Kink-free sample: ReLU inputs and max-pool win margins clear of the
/// finite-difference step.
fn kink_free_sample(seed: u64, h: f64) -> (Model, Tensor) {
    let mut net_seed = seed;
    loop {
        let model: Model = match net_seed % 3 {
            0 => random_deep_mlp(net_seed),
            1 => fixtures::random_conv_net(8, net_seed, true).unwrap(),
            _ => fixtures::random_conv_net(8, net_seed, false).unwrap(),
        };
        'attempts: for attempt in 0..100u64 {
            let input = random_input_for(&model, net_seed, attempt);
            let trace = forward(&model, &input).unwrap();
            for (i, layer) in model.layers.iter().enumerate() {
                match layer {
                    Layer::Relu => {
                        for v in trace.layer_inputs[i].iter() {
                            if v.abs() <= 10.0 * h {
                                continue 'attempts;
                            }
                        }
                    }
                    Layer::MaxPool { window, stride } => {
                        // winner must beat the runner-up by a safe margin
                        let x = &trace.layer_inputs[i];
                        let (c, ih, iw) = (x.shape()[0], x.shape()[1], x.shape()[2]);
                        let (wh, ww) = *window;
                        let (sh, sw) = *stride;
                        let oh = (ih - wh) / sh + 1;
                        let ow = (iw - ww) / sw + 1;
                        for ch in 0..c {
                            for oy in 0..oh {
                                for ox in 0..ow {
                                    let mut best = f64::NEG_INFINITY;
                                    let mut second = f64::NEG_INFINITY;
                                    for ky in 0..wh {
                                        for kx in 0..ww {
                                            let v = x.get(&[ch, oy * sh + ky, ox * sw + kx]);
                                            if v > best {
                                                second = best;
                                                best = v;
                                            } else if v > second {
                                                second = v;
                                            }
                                        }
                                    }
                                    if best - second <= 100.0 * h {
                                        continue 'attempts;
                                    }
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            return (model, trace.input().clone());
        }
        net_seed += 100_000;
    }
}

#[test]
fn criterion_3_gradient_matches_central_differences() {
    let h = 1e-4;
    let mut checked = 0;
    for seed in 0..102u64 {
        let (model, input) = kink_free_sample(seed, h);
        let trace = forward(&model, &input).unwrap();
        let class = trace.predicted_class;
        let exact = backward_gradient(&model, &trace, class).unwrap();
        let fd = finite_difference_gradient(&model, &input, class, h).unwrap();
        for (i, (a, b)) in exact.values.iter().zip(fd.values.iter()).enumerate() {
            assert!(
                rel_close(a, b, 1e-6, 1e-9),
                "seed {seed}, coord {i}: exact {a} vs fd {b}"
            );
        }
        checked += 1;
    }
    assert!(checked >= 100);
    pass(&format!(
        "criterion 3: reverse-mode gradient matched central differences (h = 1e-4) on {checked} networks (<= 1e-6 relative)"
    ));
}

#[test]
fn criterion_4_hand_computed_values() {
    // epsilon rule on x=[1,2], w=[[1],[1]], b=0, R=3
    let x = Tensor::vector(vec![1.0, 2.0]);
    let w = Tensor::matrix(vec![vec![1.0], vec![1.0]]).unwrap();
    let b = Tensor::vector(vec![0.0]);
    let r = Tensor::vector(vec![3.0]);
    let exact = lrp_epsilon_layer(&x, &w, &b, &r, 0.0).unwrap();
    assert_eq!(exact.relevance.data(), &[1.0, 2.0]);
    let stabilized = lrp_epsilon_layer(&x, &w, &b, &r, 0.1).unwrap();
    assert!(rel_close(
        stabilized.relevance.get_flat(0),
        3.0 / 3.1,
        1e-12,
        0.0
    ));
    assert!(rel_close(
        stabilized.relevance.get_flat(1),
        6.0 / 3.1,
        1e-12,
        0.0
    ));
    assert!((stabilized.epsilon_leaked - 0.0968).abs() <= 1e-4);
    assert!(rel_close(
        stabilized.epsilon_leaked,
        3.0 - 9.0 / 3.1,
        1e-12,
        0.0
    ));

    // alpha-beta on x=[1,1], w=[[2],[-1]], b=0, R=1
    let x = Tensor::vector(vec![1.0, 1.0]);
    let w = Tensor::matrix(vec![vec![2.0], vec![-1.0]]).unwrap();
    let a1 = lrp_alphabeta_layer(&x, &w, &b, &Tensor::vector(vec![1.0]), 1.0, 0.0).unwrap();
    assert_eq!(a1.relevance.data(), &[1.0, 0.0]);
    let a2 = lrp_alphabeta_layer(&x, &w, &b, &Tensor::vector(vec![1.0]), 2.0, 1.0).unwrap();
    assert_eq!(a2.relevance.data(), &[2.0, -1.0]);
    assert_eq!(a2.relevance.sum(), 1.0);

    // zero-deletion curve of f(x) = x1 + 2 x2 + 3 x3 at (1,1,1)
    let model = Model::new(
        vec![3],
        vec![Layer::Dense {
            weights: Tensor::matrix(vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]]).unwrap(),
            bias: Tensor::vector(vec![0.0, 0.0]),
        }],
        vec!["f".into(), "o".into()],
    )
    .unwrap();
    let input = Tensor::vector(vec![1.0, 1.0, 1.0]);
    let trace = forward(&model, &input).unwrap();
    let map = lrp_explain(&model, &trace, 0, RuleConfig::Epsilon { epsilon: 0.0 }).unwrap();
    assert_eq!(map.values.data(), &[1.0, 2.0, 3.0]);
    let plan = PerturbationPlan {
        mode: PerturbMode::ZeroDelete,
        steps: 3,
        seed: 0,
    };
    let curve = perturbation_curve(&model, &input, &map, &plan, 0).unwrap();
    assert_eq!(curve.absolute_scores, vec![6.0, 3.0, 1.0, 0.0]);
    assert_eq!(curve.relative_scores[0], 1.0);
    assert!(rel_close(curve.relative_scores[1], 0.5, 1e-12, 0.0));
    assert!((curve.relative_scores[2] - 0.1667).abs() <= 1e-4);
    assert!(rel_close(curve.relative_scores[2], 1.0 / 6.0, 1e-12, 0.0));
    assert_eq!(curve.relative_scores[3], 0.0);
    assert!(rel_close(
        curve_auc(&curve.relative_scores),
        7.0 / 18.0,
        1e-12,
        0.0
    ));

    pass("criterion 4: hand-computed values reproduced (epsilon split [1,2], leak 0.0968; alpha-beta [1,0] and [2,-1]; curve [1, 0.5, 0.1667, 0])");
}

#[test]
fn criterion_5_relevance_order_is_the_optimal_deletion_order() {
    let mut checked = 0;
    for seed in 0..55u64 {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xbf]);
        let features = 2 + rng.next_below(5); // 2..=6
        let weights: Vec<f64> = (0..features).map(|_| 0.1 + 1.9 * rng.next_f64()).collect();
        let input: Vec<f64> = (0..features).map(|_| 0.1 + 1.9 * rng.next_f64()).collect();
        let model = Model::new(
            vec![features],
            vec![Layer::Dense {
                weights: Tensor::new(
                    vec![features, 2],
                    weights.iter().flat_map(|&w| [w, 0.0]).collect(),
                )
                .unwrap(),
                bias: Tensor::vector(vec![0.0, 0.0]),
            }],
            vec!["f".into(), "o".into()],
        )
        .unwrap();
        let x = Tensor::vector(input.clone());
        let trace = forward(&model, &x).unwrap();
        assert_eq!(trace.predicted_class, 0);
        let map = lrp_explain(&model, &trace, 0, RuleConfig::Epsilon { epsilon: 0.0 }).unwrap();
        let plan = PerturbationPlan {
            mode: PerturbMode::ZeroDelete,
            steps: features,
            seed,
        };
        let lrp_curve = perturbation_curve(&model, &x, &map, &plan, 0).unwrap();

        // independent oracle: direct forward evaluation over every deletion order
        let score0 = trace.logits.get_flat(0);
        let mut order: Vec<usize> = (0..features).collect();
        permutations(&mut order, &mut |perm| {
            let mut data = input.clone();
            for (step, &kill) in perm.iter().enumerate() {
                data[kill] = 0.0;
                let score = forward(&model, &Tensor::vector(data.clone()))
                    .unwrap()
                    .logits
                    .get_flat(0);
                let other = lrp_curve.relative_scores[step + 1];
                assert!(
                    other <= score / score0 + 1e-12,
                    "seed {seed}: relevance order beaten by {perm:?} at step {step}"
                );
            }
        });
        checked += 1;
    }
    assert!(checked >= 50);
    pass(&format!(
        "criterion 5: relevance-ordered deletion was pointwise minimal over all permutations for {checked} positive linear models"
    ));
}

fn permutations(items: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    heap_permute(items, n, visit);
}

fn heap_permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == 1 {
        visit(items);
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, visit);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn relprop(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_relprop"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn criterion_6_lrp_beats_sa_beats_random_on_the_desk_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    let eval_csv = dir.path().join("eval.csv");
    save_csv(&fixtures::eval_fixture(200, 3), &train_csv, "y").unwrap();
    save_csv(&fixtures::eval_fixture(64, 1003), &eval_csv, "y").unwrap();

    let (code, stdout, stderr) = relprop(
        &[
            "train",
            "--data",
            "train.csv",
            "--label",
            "y",
            "--layers",
            "16,12,2",
            "--epochs",
            "40",
            "--lr",
            "0.05",
            "--seed",
            "3",
            "--out",
            "model",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "train failed: {stderr}");
    let accuracy: f64 = stdout
        .lines()
        .find_map(|l| l.split("train accuracy ").nth(1))
        .expect("accuracy line")
        .trim()
        .parse()
        .unwrap();
    assert!(accuracy >= 0.95, "train accuracy {accuracy} below 0.95");

    let (code, _, stderr) = relprop(
        &[
            "evaluate",
            "--model",
            "model",
            "--data",
            "eval.csv",
            "--label",
            "y",
            "--methods",
            "lrp-eps,sa,random",
            "--perturb",
            "zero",
            "--steps",
            "12",
            "--seed",
            "3",
            "--out",
            "eval",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "evaluate failed: {stderr}");

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("eval/summary.json")).unwrap())
            .unwrap();
    let mut auc = std::collections::BTreeMap::new();
    for method in summary["methods"].as_array().unwrap() {
        auc.insert(
            method["label"].as_str().unwrap().to_string(),
            method["auc"].as_f64().unwrap(),
        );
        // mean curve starts at exactly 1.0
        assert_eq!(method["mean_relative"][0].as_f64().unwrap(), 1.0);
    }
    assert!(
        auc["lrp-eps"] < auc["sa"] && auc["sa"] < auc["random"],
        "expected auc(lrp-eps) < auc(sa) < auc(random), got {auc:?}"
    );
    pass(&format!(
        "criterion 6: desk-scale fixture (accuracy {accuracy:.3}) ordered auc(lrp-eps) {:.4} < auc(sa) {:.4} < auc(random) {:.4}, curves start at 1.0",
        auc["lrp-eps"], auc["sa"], auc["random"]
    ));
}

#[test]
fn criterion_7_signed_token_relevance_vs_unsigned_sensitivity() {
    // vocabulary: 0 pad, 1 supporting token, 2 contradicting token
    let table = Tensor::matrix(vec![vec![0.0], vec![1.0], vec![1.0]]).unwrap();
    let model = Model::new(
        vec![2],
        vec![
            Layer::Embedding { table },
            Layer::Flatten,
            Layer::Dense {
                weights: Tensor::matrix(vec![vec![2.0, 0.0], vec![-1.0, 0.0]]).unwrap(),
                bias: Tensor::vector(vec![0.0, 0.0]),
            },
        ],
        vec!["topic".into(), "other".into()],
    )
    .unwrap();
    let doc = Tensor::vector(vec![1.0, 2.0]);
    let trace = forward(&model, &doc).unwrap();
    assert_eq!(trace.predicted_class, 0);

    let map = lrp_explain(&model, &trace, 0, RuleConfig::Epsilon { epsilon: 0.0 }).unwrap();
    let token_scores = relprop::lrp::aggregate_groups(&map, &per_token_groups(2, 1)).unwrap();
    assert!(
        token_scores[0] > 0.0 && token_scores[1] < 0.0,
        "got {token_scores:?}"
    );
    assert_eq!(token_scores, vec![2.0, -1.0]);

    let grad = backward_gradient(&model, &trace, 0).unwrap();
    let sa = sensitivity_map(&grad, ChannelNorm::L2OverChannels).unwrap();
    assert!(sa.values.iter().all(|v| v >= 0.0));
    assert_eq!(sa.values.data(), &[2.0, 1.0]);

    pass("criterion 7: token relevance separated supporting (+2) from contradicting (-1) evidence; the sensitivity map stayed non-negative");
}

/// Dense-layer equivalent of a convolution for small shapes, built
/// independently of the propagation code.
fn materialize_conv(spec: &ConvSpec, input_shape: &[usize]) -> (Tensor, Tensor) {
    let out_shape = spec.output_shape(input_shape).unwrap();
    let (oc, oh, ow) = (out_shape[0], out_shape[1], out_shape[2]);
    let (ic, ih, iw) = (input_shape[0], input_shape[1], input_shape[2]);
    let (kh, kw) = spec.kernel_size();
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let n = ic * ih * iw;
    let m = oc * oh * ow;
    let mut weights = vec![0.0; n * m];
    let mut bias = vec![0.0; m];
    for o in 0..oc {
        for oy in 0..oh {
            for ox in 0..ow {
                let k = (o * oh + oy) * ow + ox;
                bias[k] = spec.bias.get_flat(o);
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
                            let j = (c * ih + y as usize) * iw + x as usize;
                            weights[j * m + k] = spec.kernel.get(&[o, c, ky, kx]);
                        }
                    }
                }
            }
        }
    }
    (
        Tensor::new(vec![n, m], weights).unwrap(),
        Tensor::new(vec![m], bias).unwrap(),
    )
}

#[test]
fn criterion_8_rule_consistency_and_conv_as_linear() {
    // alpha-beta with alpha = 1 equals the exact epsilon rule when every
    // contribution is non-negative
    for seed in 0..25u64 {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xac]);
        let (n, m) = (1 + rng.next_below(8), 1 + rng.next_below(6));
        let x = Tensor::vector((0..n).map(|_| rng.next_f64()).collect());
        let w = Tensor::new(vec![n, m], (0..n * m).map(|_| rng.next_f64()).collect()).unwrap();
        let b = Tensor::vector(vec![0.0; m]);
        let r = Tensor::vector((0..m).map(|_| rng.next_f64() * 2.0).collect());
        let ab = lrp_alphabeta_layer(&x, &w, &b, &r, 1.0, 0.0).unwrap();
        let eps = lrp_epsilon_layer(&x, &w, &b, &r, 0.0).unwrap();
        for (a, e) in ab.relevance.iter().zip(eps.relevance.iter()) {
            assert!(rel_close(a, e, 1e-12, 1e-15), "seed {seed}: {a} vs {e}");
        }
    }

    // propagating through a convolution equals propagating through its
    // materialized dense equivalent
    let mut compared = 0;
    for seed in 0..12u64 {
        let mut rng = Xoshiro256StarStar::substream(seed, &[0xad]);
        let (ic, h, w) = (1 + rng.next_below(2), 5, 5);
        let oc = 1 + rng.next_below(2);
        let padding = (rng.next_below(2), rng.next_below(2));
        let spec = ConvSpec::new(
            Tensor::new(
                vec![oc, ic, 3, 3],
                (0..oc * ic * 9)
                    .map(|_| rng.next_f64() * 2.0 - 1.0)
                    .collect(),
            )
            .unwrap(),
            Tensor::new(
                vec![oc],
                (0..oc).map(|_| 0.1 * (rng.next_f64() - 0.5)).collect(),
            )
            .unwrap(),
            (1, 1),
            padding,
        )
        .unwrap();
        let input_shape = vec![ic, h, w];
        let out_shape = spec.output_shape(&input_shape).unwrap();
        let flat_out: usize = out_shape.iter().product();
        let (dense_w, dense_b) = materialize_conv(&spec, &input_shape);

        let head = Layer::Dense {
            weights: Tensor::new(
                vec![flat_out, 2],
                (0..flat_out * 2)
                    .map(|_| rng.next_f64() * 2.0 - 1.0)
                    .collect(),
            )
            .unwrap(),
            bias: Tensor::vector(vec![0.0, 0.0]),
        };
        let conv_model = Model::new(
            input_shape.clone(),
            vec![Layer::Conv(spec.clone()), Layer::Flatten, head.clone()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let dense_model = Model::new(
            input_shape.clone(),
            vec![
                Layer::Flatten,
                Layer::Dense {
                    weights: dense_w,
                    bias: dense_b,
                },
                head,
            ],
            vec!["a".into(), "b".into()],
        )
        .unwrap();

        let len: usize = input_shape.iter().product();
        let input = Tensor::new(
            input_shape.clone(),
            (0..len).map(|_| rng.next_f64() * 2.0 - 1.0).collect(),
        )
        .unwrap();
        let t_conv = forward(&conv_model, &input).unwrap();
        let t_dense = forward(&dense_model, &input).unwrap();
        for (a, b) in t_conv.logits.iter().zip(t_dense.logits.iter()) {
            assert!(rel_close(a, b, 1e-12, 1e-15), "forward mismatch {a} vs {b}");
        }

        for config in [
            RuleConfig::Epsilon { epsilon: 0.0 },
            RuleConfig::Epsilon { epsilon: 0.01 },
            RuleConfig::AlphaBeta {
                alpha: 2.0,
                beta: 1.0,
            },
        ] {
            let via_conv = lrp_explain(&conv_model, &t_conv, 0, config).unwrap();
            let via_dense = lrp_explain(&dense_model, &t_dense, 0, config).unwrap();
            for (a, b) in via_conv.values.iter().zip(via_dense.values.iter()) {
                assert!(
                    rel_close(a, b, 1e-12, 1e-14),
                    "seed {seed} {config:?}: conv {a} vs dense {b}"
                );
            }
        }
        compared += 1;
    }
    assert!(compared >= 10);
    pass(&format!(
        "criterion 8: alpha=1 matched the exact epsilon rule on non-negative layers, and conv propagation matched its dense equivalent on {compared} seeded cases (<= 1e-12)"
    ));
}

/// Runs the identical command twice and asserts every listed output file is
/// byte-identical between runs.
fn assert_rerun_identical(args: &[&str], cwd: &Path, outputs: &[&str]) {
    let (code, _, stderr) = relprop(args, cwd);
    assert_eq!(code, 0, "first run failed: {stderr}");
    let snapshot: Vec<Vec<u8>> = outputs
        .iter()
        .map(|f| std::fs::read(cwd.join(f)).unwrap_or_else(|_| panic!("missing output {f}")))
        .collect();
    let (code, _, stderr) = relprop(args, cwd);
    assert_eq!(code, 0, "second run failed: {stderr}");
    for (file, before) in outputs.iter().zip(snapshot) {
        let after = std::fs::read(cwd.join(file)).unwrap();
        assert_eq!(
            before, after,
            "output {file} differs between identical runs"
        );
    }
}

#[test]
fn criterion_9_repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("blobs.csv");
    save_csv(&fixtures::two_blobs(80, 7), &train_csv, "y").unwrap();

    assert_rerun_identical(
        &[
            "train",
            "--data",
            "blobs.csv",
            "--label",
            "y",
            "--layers",
            "2,6,2",
            "--epochs",
            "20",
            "--lr",
            "0.1",
            "--seed",
            "7",
            "--out",
            "m1",
        ],
        dir.path(),
        &["m1/model.json", "m1/weights.bin", "m1/run_manifest.json"],
    );

    // image fixture for patch-mode evaluation (exercises the parallel path
    // and the patch value streams)
    let (images, labels) = fixtures::bar_images(24, 5);
    relprop::data::write_idx_fixture(
        &dir.path().join("imgs.idx"),
        &dir.path().join("lbls.idx"),
        &images,
        &labels,
        8,
        8,
    )
    .unwrap();
    let conv = fixtures::random_conv_net(8, 11, true).unwrap();
    relprop::model::save_model(&conv, &dir.path().join("cnn")).unwrap();

    assert_rerun_identical(
        &[
            "evaluate",
            "--model",
            "cnn",
            "--data",
            "imgs.idx",
            "--methods",
            "lrp-eps,sa,random",
            "--perturb",
            "patch",
            "--patch",
            "3x3",
            "--steps",
            "4",
            "--seed",
            "21",
            "--out",
            "e1",
        ],
        dir.path(),
        &["e1/curves.csv", "e1/summary.json", "e1/run_manifest.json"],
    );

    assert_rerun_identical(
        &[
            "explain",
            "--model",
            "cnn",
            "--input",
            "imgs.idx",
            "--index",
            "2",
            "--method",
            "lrp-eps",
            "--epsilon",
            "0.01",
            "--out",
            "r.json",
            "--render",
            "r.ppm",
        ],
        dir.path(),
        &["r.json", "r.ppm", "r.manifest.json"],
    );

    pass("criterion 9: train, evaluate (parallel, patch mode), explain and render all reproduced byte-identical outputs, manifests included");
}
