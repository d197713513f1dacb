//! Objective explanation quality: perturb the most relevant input regions
//! first and track how fast the prediction score collapses. A steeper
//! decline means the explanation pointed at variables the classifier
//! actually used; the area under the mean relative-score curve (lower =
//! better) condenses each method to one number.
//!
//! The tracked score is always the logit of the class the unperturbed input
//! was assigned, never the running argmax, and perturbations are cumulative.
//! All randomness (patch values, random-ranking baseline) comes from
//! substreams keyed by (seed, sample id, step), so runs are byte-identical
//! regardless of parallel scheduling.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gradient::{backward_gradient, sensitivity_map, ChannelNorm};
use crate::lrp::{aggregate_groups, lrp_explain, per_token_groups, RelevanceMap, RuleConfig};
use crate::model::{argmax, forward, Model};
use crate::rng::Xoshiro256StarStar;
use crate::tensor::Tensor;

const PATCH_STREAM: u64 = 0x7061;
const RANK_STREAM: u64 = 0x7261;

/// How input variables are destroyed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbMode {
    /// Non-overlapping spatial tiles replaced by i.i.d. uniform draws over
    /// `value_range` (rank-3 inputs only; the tile covers all channels).
    PatchUniform {
        patch: (usize, usize),
        value_range: (f64, f64),
    },
    /// Single variables set to 0 (features, or token ids where 0 is pad).
    ZeroDelete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationPlan {
    pub mode: PerturbMode,
    pub steps: usize,
    pub seed: u64,
}

impl PerturbationPlan {
    pub fn validate_for(&self, input_shape: &[usize]) -> Result<()> {
        match self.mode {
            PerturbMode::PatchUniform { patch, value_range } => {
                if input_shape.len() != 3 {
                    return Err(Error::InvalidConfig(format!(
                        "patch perturbation needs a rank-3 input, got {input_shape:?}"
                    )));
                }
                if patch.0 == 0
                    || patch.1 == 0
                    || patch.0 > input_shape[1]
                    || patch.1 > input_shape[2]
                {
                    return Err(Error::InvalidConfig(format!(
                        "patch {}x{} exceeds the {}x{} input",
                        patch.0, patch.1, input_shape[1], input_shape[2]
                    )));
                }
                if !(value_range.0.is_finite() && value_range.1.is_finite())
                    || value_range.0 > value_range.1
                {
                    return Err(Error::InvalidConfig(format!(
                        "bad value range {value_range:?}"
                    )));
                }
            }
            PerturbMode::ZeroDelete => {}
        }
        Ok(())
    }
}

/// Prediction scores across perturbation steps for one sample.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationCurve {
    /// `relative_scores[0] == 1.0`; entry `t` is `score_t / score_0`.
    pub relative_scores: Vec<f64>,
    pub absolute_scores: Vec<f64>,
    pub ranking_source: String,
    /// Whether the argmax still equals the originally predicted class after
    /// each step (entry 0 is always true).
    pub argmax_unchanged: Vec<bool>,
}

/// Ordered index sets to perturb, most relevant first.
///
/// Patch mode tiles the spatial grid into non-overlapping patches (the last
/// row/column may be truncated), ranks tiles by descending relevance sum
/// (summed over channels for a rank-3 map) and breaks ties by smallest tile
/// index; regions hold spatial indices `y * w + x`. Zero-delete ranks
/// single variables by descending relevance, ties by smallest index.
pub fn rank_regions(
    map: &RelevanceMap,
    plan: &PerturbationPlan,
    input_shape: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let ranking = ranking_values(map, input_shape)?;
    match plan.mode {
        PerturbMode::PatchUniform { patch, .. } => {
            plan.validate_for(input_shape)?;
            let (h, w) = (input_shape[1], input_shape[2]);
            let spatial: Vec<f64> = match ranking.rank() {
                2 if ranking.shape() == [h, w] => ranking.data().to_vec(),
                3 if ranking.shape() == [input_shape[0], h, w] => {
                    let mut out = vec![0.0; h * w];
                    for c in 0..input_shape[0] {
                        for (i, o) in out.iter_mut().enumerate() {
                            *o += ranking.get_flat(c * h * w + i);
                        }
                    }
                    out
                }
                _ => {
                    return Err(Error::ShapeMismatch {
                        context: "relevance map vs patch plan",
                        left: ranking.shape().to_vec(),
                        right: input_shape.to_vec(),
                    })
                }
            };
            let (ph, pw) = patch;
            let tiles_y = h.div_ceil(ph);
            let tiles_x = w.div_ceil(pw);
            let mut tiles: Vec<(usize, f64, Vec<usize>)> = Vec::with_capacity(tiles_y * tiles_x);
            for ty in 0..tiles_y {
                for tx in 0..tiles_x {
                    let mut cells = Vec::new();
                    let mut score = 0.0;
                    for y in ty * ph..((ty + 1) * ph).min(h) {
                        for x in tx * pw..((tx + 1) * pw).min(w) {
                            cells.push(y * w + x);
                            score += spatial[y * w + x];
                        }
                    }
                    tiles.push((ty * tiles_x + tx, score, cells));
                }
            }
            tiles.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            Ok(tiles.into_iter().map(|(_, _, cells)| cells).collect())
        }
        PerturbMode::ZeroDelete => {
            if ranking.len() != input_shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch {
                    context: "relevance map vs input",
                    left: ranking.shape().to_vec(),
                    right: input_shape.to_vec(),
                });
            }
            let mut order: Vec<usize> = (0..ranking.len()).collect();
            order.sort_by(|&a, &b| {
                ranking
                    .get_flat(b)
                    .partial_cmp(&ranking.get_flat(a))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            Ok(order.into_iter().map(|i| vec![i]).collect())
        }
    }
}

/// Relevance values aligned with the ranking granularity. Token maps over
/// `tokens x dim` embedding outputs are collapsed to one signed score per
/// token; everything else passes through.
fn ranking_values(map: &RelevanceMap, input_shape: &[usize]) -> Result<Tensor> {
    if input_shape.len() == 1 && map.values.rank() == 2 && map.values.shape()[0] == input_shape[0] {
        let tokens = input_shape[0];
        let scores = match &map.token_relevance {
            Some(scores) if scores.len() == tokens => scores.clone(),
            _ => aggregate_groups(map, &per_token_groups(tokens, map.values.shape()[1]))?,
        };
        return Tensor::new(vec![tokens], scores);
    }
    Ok(map.values.clone())
}

/// Applies one region's perturbation on top of `input`. Patch draws come
/// from the stream keyed (seed, sample id, step); spatial cells are filled
/// in ascending index order, channels innermost. Zero-delete writes zeros.
pub fn perturb_step(
    input: &Tensor,
    region: &[usize],
    plan: &PerturbationPlan,
    sample_id: u64,
    step_index: usize,
) -> Tensor {
    let mut data = input.data().to_vec();
    match plan.mode {
        PerturbMode::ZeroDelete => {
            for &idx in region {
                data[idx] = 0.0;
            }
        }
        PerturbMode::PatchUniform { value_range, .. } => {
            let mut rng = Xoshiro256StarStar::substream(
                plan.seed,
                &[PATCH_STREAM, sample_id, step_index as u64],
            );
            let (c, hw) = (input.shape()[0], input.shape()[1] * input.shape()[2]);
            for &spatial in region {
                for ch in 0..c {
                    data[ch * hw + spatial] = rng.uniform(value_range.0, value_range.1);
                }
            }
        }
    }
    Tensor::from_parts_unchecked(input.shape().to_vec(), data)
}

/// Tracks the originally predicted class's logit while regions ranked by
/// `map` are destroyed one per step. The sample is excluded (error) when the
/// starting logit is not positive, since a relative decrease is undefined.
pub fn perturbation_curve(
    model: &Model,
    input: &Tensor,
    map: &RelevanceMap,
    plan: &PerturbationPlan,
    sample_id: u64,
) -> Result<PerturbationCurve> {
    let regions = rank_regions(map, plan, input.shape())?;
    curve_for_regions(model, input, &regions, plan, sample_id, ranking_label(map))
}

fn ranking_label(map: &RelevanceMap) -> String {
    match map.method {
        crate::lrp::MethodLabel::Sensitivity { norm } => format!("sa({norm:?})"),
        crate::lrp::MethodLabel::Lrp { rule } => match rule {
            RuleConfig::Epsilon { epsilon } => format!("lrp-eps(epsilon={epsilon})"),
            RuleConfig::AlphaBeta { alpha, beta } => format!("lrp-ab(alpha={alpha},beta={beta})"),
        },
    }
}

fn curve_for_regions(
    model: &Model,
    input: &Tensor,
    regions: &[Vec<usize>],
    plan: &PerturbationPlan,
    sample_id: u64,
    ranking_source: String,
) -> Result<PerturbationCurve> {
    if plan.steps > regions.len() {
        return Err(Error::InvalidConfig(format!(
            "{} steps requested but only {} disjoint regions exist",
            plan.steps,
            regions.len()
        )));
    }
    let base = forward(model, input)?;
    let class = base.predicted_class;
    let score0 = base.logits.get_flat(class);
    if score0 <= 0.0 {
        return Err(Error::ScoreNotPositive { score: score0 });
    }

    let mut absolute = vec![score0];
    let mut relative = vec![1.0];
    let mut unchanged = vec![true];
    let mut current = input.clone();
    for (step, region) in regions.iter().take(plan.steps).enumerate() {
        current = perturb_step(&current, region, plan, sample_id, step);
        let trace = forward(model, &current)?;
        let score = trace.logits.get_flat(class);
        absolute.push(score);
        relative.push(score / score0);
        unchanged.push(argmax(trace.logits.data()) == class);
    }
    Ok(PerturbationCurve {
        relative_scores: relative,
        absolute_scores: absolute,
        ranking_source,
        argmax_unchanged: unchanged,
    })
}

/// One explanation method to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    /// Gradient sensitivity; `norm` defaults by input rank (channel L2 for
    /// rank-3 inputs, absolute value otherwise).
    Sa {
        norm: Option<ChannelNorm>,
    },
    LrpEpsilon {
        epsilon: f64,
    },
    LrpAlphaBeta {
        alpha: f64,
        beta: f64,
    },
    /// Seeded random region order; the model-independent floor.
    Random,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Sa { .. } => "sa".into(),
            MethodSpec::LrpEpsilon { .. } => "lrp-eps".into(),
            MethodSpec::LrpAlphaBeta { .. } => "lrp-ab".into(),
            MethodSpec::Random => "random".into(),
        }
    }
}

/// Mean curve of one method over all surviving samples.
#[derive(Debug, Clone, Serialize)]
pub struct MethodCurve {
    pub label: String,
    pub mean_relative: Vec<f64>,
    /// Fraction of surviving samples whose argmax still equals the original
    /// prediction after each step.
    pub accuracy: Vec<f64>,
    pub auc: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub curves: Vec<MethodCurve>,
    pub n_excluded: usize,
    pub exclusion_reasons: Vec<String>,
    pub steps: usize,
}

/// Trapezoidal area under a relative-score curve with unit steps,
/// normalized by the step count (a 0-step curve scores its constant value).
pub fn curve_auc(relative_scores: &[f64]) -> f64 {
    let intervals = relative_scores.len() - 1;
    if intervals == 0 {
        return relative_scores[0];
    }
    let area: f64 = relative_scores
        .windows(2)
        .map(|pair| (pair[0] + pair[1]) / 2.0)
        .sum();
    area / intervals as f64
}

/// Evaluates every method on every sample, in parallel over samples but
/// aggregated in sample-id order. A seeded random-ranking baseline is
/// appended when the method list lacks one. Samples whose starting logit is
/// not positive are excluded from every method alike.
pub fn compare_methods(
    model: &Model,
    inputs: &[Tensor],
    methods: &[MethodSpec],
    plan: &PerturbationPlan,
) -> Result<Comparison> {
    let mut methods: Vec<MethodSpec> = methods.to_vec();
    if !methods.iter().any(|m| matches!(m, MethodSpec::Random)) {
        methods.push(MethodSpec::Random);
    }

    struct SampleResult {
        curves: Vec<PerturbationCurve>,
        excluded: Option<String>,
    }

    let per_sample: Vec<Result<SampleResult>> = inputs
        .par_iter()
        .enumerate()
        .map(|(sample_id, input)| {
            let base = forward(model, input)?;
            let score0 = base.logits.get_flat(base.predicted_class);
            if score0 <= 0.0 {
                return Ok(SampleResult {
                    curves: Vec::new(),
                    excluded: Some(format!(
                        "sample {sample_id}: starting logit {score0} is not positive"
                    )),
                });
            }
            let mut curves = Vec::with_capacity(methods.len());
            for method in &methods {
                let curve = match method {
                    MethodSpec::Random => {
                        let mut regions = index_order_regions(input, plan)?;
                        let mut rng = Xoshiro256StarStar::substream(
                            plan.seed,
                            &[RANK_STREAM, sample_id as u64],
                        );
                        rng.shuffle(&mut regions);
                        curve_for_regions(
                            model,
                            input,
                            &regions,
                            plan,
                            sample_id as u64,
                            "random".into(),
                        )?
                    }
                    _ => {
                        let map = explain_for(model, input, &base, method)?;
                        perturbation_curve(model, input, &map, plan, sample_id as u64)?
                    }
                };
                curves.push(curve);
            }
            Ok(SampleResult {
                curves,
                excluded: None,
            })
        })
        .collect();

    let mut survivors = 0usize;
    let mut exclusion_reasons = Vec::new();
    let mut sums: Vec<Vec<f64>> = vec![vec![0.0; plan.steps + 1]; methods.len()];
    let mut hits: Vec<Vec<usize>> = vec![vec![0; plan.steps + 1]; methods.len()];
    for result in per_sample {
        let result = result?;
        if let Some(reason) = result.excluded {
            exclusion_reasons.push(reason);
            continue;
        }
        survivors += 1;
        for (m, curve) in result.curves.iter().enumerate() {
            for (t, &v) in curve.relative_scores.iter().enumerate() {
                sums[m][t] += v;
            }
            for (t, &ok) in curve.argmax_unchanged.iter().enumerate() {
                if ok {
                    hits[m][t] += 1;
                }
            }
        }
    }
    if survivors == 0 {
        return Err(Error::EmptySurvivorSet);
    }

    let curves = methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let mean_relative: Vec<f64> = sums[m].iter().map(|s| s / survivors as f64).collect();
            let accuracy: Vec<f64> = hits[m]
                .iter()
                .map(|&h| h as f64 / survivors as f64)
                .collect();
            MethodCurve {
                label: method.label(),
                auc: curve_auc(&mean_relative),
                mean_relative,
                accuracy,
                n_samples: survivors,
            }
        })
        .collect();

    Ok(Comparison {
        curves,
        n_excluded: exclusion_reasons.len(),
        exclusion_reasons,
        steps: plan.steps,
    })
}

/// Regions in plain index order (tiling order for patches, flat index order
/// for zero-deletion); the random baseline shuffles these.
fn index_order_regions(input: &Tensor, plan: &PerturbationPlan) -> Result<Vec<Vec<usize>>> {
    match plan.mode {
        PerturbMode::PatchUniform { patch, .. } => {
            plan.validate_for(input.shape())?;
            let (h, w) = (input.shape()[1], input.shape()[2]);
            let (ph, pw) = patch;
            let mut regions = Vec::new();
            for ty in 0..h.div_ceil(ph) {
                for tx in 0..w.div_ceil(pw) {
                    let mut cells = Vec::new();
                    for y in ty * ph..((ty + 1) * ph).min(h) {
                        for x in tx * pw..((tx + 1) * pw).min(w) {
                            cells.push(y * w + x);
                        }
                    }
                    regions.push(cells);
                }
            }
            Ok(regions)
        }
        PerturbMode::ZeroDelete => Ok((0..input.len()).map(|i| vec![i]).collect()),
    }
}

/// Builds the relevance map a method prescribes for one traced sample,
/// explaining the predicted class.
pub fn explain_for(
    model: &Model,
    _input: &Tensor,
    trace: &crate::model::ForwardTrace,
    method: &MethodSpec,
) -> Result<RelevanceMap> {
    let class = trace.predicted_class;
    match method {
        MethodSpec::Sa { norm } => {
            let grad = backward_gradient(model, trace, class)?;
            let norm = norm.unwrap_or(if grad.values.rank() >= 2 {
                ChannelNorm::L2OverChannels
            } else {
                ChannelNorm::Abs
            });
            sensitivity_map(&grad, norm)
        }
        MethodSpec::LrpEpsilon { epsilon } => {
            lrp_explain(model, trace, class, RuleConfig::epsilon(*epsilon)?)
        }
        MethodSpec::LrpAlphaBeta { alpha, beta } => {
            lrp_explain(model, trace, class, RuleConfig::alpha_beta(*alpha, *beta)?)
        }
        MethodSpec::Random => Err(Error::InvalidConfig(
            "random ranking has no relevance map".into(),
        )),
    }
}

/// CSV with the pinned header `step,method,mean_relative_score,n_samples`.
pub fn write_curves_csv(cmp: &Comparison, path: &Path) -> Result<()> {
    let mut out = String::from("step,method,mean_relative_score,n_samples\n");
    for curve in &cmp.curves {
        for (step, value) in curve.mean_relative.iter().enumerate() {
            out.push_str(&format!(
                "{step},{},{value},{}\n",
                curve.label, curve.n_samples
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lrp::MethodLabel;

    fn linear_123_model() -> Model {
        Model::new(
            vec![3],
            vec![crate::model::Layer::Dense {
                weights: Tensor::matrix(vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]])
                    .unwrap(),
                bias: Tensor::vector(vec![0.0, 0.0]),
            }],
            vec!["f".into(), "o".into()],
        )
        .unwrap()
    }

    fn zero_plan(steps: usize) -> PerturbationPlan {
        PerturbationPlan {
            mode: PerturbMode::ZeroDelete,
            steps,
            seed: 3,
        }
    }

    fn plain_map(values: Tensor) -> RelevanceMap {
        RelevanceMap {
            values,
            target_class: 0,
            method: MethodLabel::Lrp {
                rule: RuleConfig::Epsilon { epsilon: 0.0 },
            },
            conservation: None,
            layer_relevances: vec![],
            tokens: None,
            token_relevance: None,
        }
    }

    #[test]
    fn rank_regions_zero_delete_hand_example() {
        let map = plain_map(Tensor::vector(vec![1.0, 3.0, 2.0]));
        let regions = rank_regions(&map, &zero_plan(3), &[3]).unwrap();
        assert_eq!(regions, vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn rank_regions_constant_map_keeps_index_order() {
        let map = plain_map(Tensor::vector(vec![0.5; 4]));
        let regions = rank_regions(&map, &zero_plan(4), &[4]).unwrap();
        assert_eq!(regions, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn rank_regions_patch_puts_hot_tile_first() {
        let mut values = vec![1.0; 16];
        // tile (1, 0) covers rows 2-3, cols 0-1
        for &i in &[8, 9, 12, 13] {
            values[i] = 2.0;
        }
        let map = plain_map(Tensor::new(vec![4, 4], values).unwrap());
        let plan = PerturbationPlan {
            mode: PerturbMode::PatchUniform {
                patch: (2, 2),
                value_range: (0.0, 1.0),
            },
            steps: 4,
            seed: 1,
        };
        let regions = rank_regions(&map, &plan, &[1, 4, 4]).unwrap();
        assert_eq!(regions[0], vec![8, 9, 12, 13]);
        // remaining ties resolve in tile-index order
        assert_eq!(regions[1], vec![0, 1, 4, 5]);
    }

    #[test]
    fn perturb_zero_delete_and_degenerate_patch() {
        let x = Tensor::vector(vec![5.0, 7.0]);
        let out = perturb_step(&x, &[0], &zero_plan(1), 0, 0);
        assert_eq!(out.data(), &[0.0, 7.0]);

        let img = Tensor::new(vec![1, 2, 2], vec![9.0; 4]).unwrap();
        let plan = PerturbationPlan {
            mode: PerturbMode::PatchUniform {
                patch: (2, 2),
                value_range: (0.0, 0.0),
            },
            steps: 1,
            seed: 5,
        };
        let out = perturb_step(&img, &[0, 1, 2, 3], &plan, 0, 0);
        assert_eq!(out.data(), &[0.0; 4]);
    }

    #[test]
    fn perturb_streams_are_deterministic() {
        let img = Tensor::new(vec![2, 2, 2], vec![0.0; 8]).unwrap();
        let plan = PerturbationPlan {
            mode: PerturbMode::PatchUniform {
                patch: (1, 1),
                value_range: (-1.0, 1.0),
            },
            steps: 1,
            seed: 11,
        };
        let a = perturb_step(&img, &[1, 2], &plan, 4, 9);
        let b = perturb_step(&img, &[1, 2], &plan, 4, 9);
        let c = perturb_step(&img, &[1, 2], &plan, 4, 10);
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn linear_curve_hand_example() {
        let model = linear_123_model();
        let x = Tensor::vector(vec![1.0, 1.0, 1.0]);
        let trace = forward(&model, &x).unwrap();
        let map = lrp_explain(&model, &trace, 0, RuleConfig::Epsilon { epsilon: 0.0 }).unwrap();
        let curve = perturbation_curve(&model, &x, &map, &zero_plan(3), 0).unwrap();
        assert_eq!(curve.absolute_scores, vec![6.0, 3.0, 1.0, 0.0]);
        assert_eq!(curve.relative_scores[0], 1.0);
        assert!((curve.relative_scores[1] - 0.5).abs() < 1e-12);
        assert!((curve.relative_scores[2] - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(curve.relative_scores[3], 0.0);
        // trapezoid with unit steps: ((1+0.5) + (0.5+1/6) + (1/6+0)) / 2 / 3
        assert!((curve_auc(&curve.relative_scores) - 7.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn tie_map_deletes_in_index_order_and_stays_monotone() {
        let model = linear_123_model();
        let x = Tensor::vector(vec![1.0, 1.0, 1.0]);
        let map = plain_map(Tensor::vector(vec![0.0, 0.0, 0.0]));
        let curve = perturbation_curve(&model, &x, &map, &zero_plan(3), 0).unwrap();
        // deleting x1 (w=1), then x2 (w=2), then x3 (w=3)
        assert_eq!(curve.absolute_scores, vec![6.0, 5.0, 3.0, 0.0]);
        for pair in curve.relative_scores.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn zero_steps_gives_flat_curve() {
        let model = linear_123_model();
        let x = Tensor::vector(vec![1.0, 1.0, 1.0]);
        let map = plain_map(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let curve = perturbation_curve(&model, &x, &map, &zero_plan(0), 0).unwrap();
        assert_eq!(curve.relative_scores, vec![1.0]);
        assert_eq!(curve_auc(&curve.relative_scores), 1.0);
    }

    #[test]
    fn non_positive_score_is_excluded() {
        let model = linear_123_model();
        let x = Tensor::vector(vec![-1.0, -1.0, -1.0]);
        // predicted class is 1 (logit 0) since class 0's logit is -6
        let map = plain_map(Tensor::vector(vec![1.0, 1.0, 1.0]));
        let err = perturbation_curve(&model, &x, &map, &zero_plan(1), 0).unwrap_err();
        assert!(matches!(err, Error::ScoreNotPositive { .. }));
    }

    #[test]
    fn anti_relevance_order_scores_worse() {
        let model = linear_123_model();
        let x = Tensor::vector(vec![1.0, 1.0, 1.0]);
        let best: Vec<Vec<usize>> = vec![vec![2], vec![1], vec![0]];
        let worst: Vec<Vec<usize>> = vec![vec![0], vec![1], vec![2]];
        let plan = zero_plan(3);
        let b = curve_for_regions(&model, &x, &best, &plan, 0, "best".into()).unwrap();
        let w = curve_for_regions(&model, &x, &worst, &plan, 0, "worst".into()).unwrap();
        assert!(curve_auc(&b.relative_scores) < curve_auc(&w.relative_scores));
    }

    #[test]
    fn compare_methods_is_deterministic_and_dedupes_nothing() {
        // positive weights and inputs keep every starting logit positive
        let model = linear_123_model();
        let inputs: Vec<Tensor> = (0..6)
            .map(|i| {
                let mut rng = Xoshiro256StarStar::substream(50, &[i]);
                Tensor::vector((0..3).map(|_| rng.next_f64() + 0.1).collect())
            })
            .collect();
        let plan = zero_plan(3);
        let methods = vec![
            MethodSpec::LrpEpsilon { epsilon: 0.0 },
            MethodSpec::LrpEpsilon { epsilon: 0.0 },
        ];
        let cmp = compare_methods(&model, &inputs, &methods, &plan).unwrap();
        // duplicate methods produce identical curves; random was appended
        assert_eq!(cmp.curves.len(), 3);
        assert_eq!(cmp.curves[0].mean_relative, cmp.curves[1].mean_relative);
        assert_eq!(cmp.curves[2].label, "random");
        for curve in &cmp.curves {
            assert_eq!(curve.mean_relative[0], 1.0);
        }

        let again = compare_methods(&model, &inputs, &methods, &plan).unwrap();
        for (a, b) in cmp.curves.iter().zip(&again.curves) {
            assert_eq!(a.mean_relative, b.mean_relative);
            assert_eq!(a.auc, b.auc);
        }
    }

    #[test]
    fn all_excluded_is_an_error() {
        let model = linear_123_model();
        let inputs = vec![Tensor::vector(vec![-1.0, -1.0, -1.0])];
        let err = compare_methods(
            &model,
            &inputs,
            &[MethodSpec::LrpEpsilon { epsilon: 0.0 }],
            &zero_plan(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptySurvivorSet));
    }

    #[test]
    fn csv_has_the_pinned_header() {
        let model = linear_123_model();
        let inputs = vec![Tensor::vector(vec![1.0, 1.0, 1.0])];
        let cmp = compare_methods(
            &model,
            &inputs,
            &[MethodSpec::LrpEpsilon { epsilon: 0.0 }],
            &zero_plan(2),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        write_curves_csv(&cmp, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,method,mean_relative_score,n_samples\n"));
        assert!(text.contains("0,lrp-eps,1,1"));
    }
}
