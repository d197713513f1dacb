//! Explains what a feed-forward classifier looked at, and measures whether
//! the explanation was any good.
//!
//! Two explanation families are implemented over the same small inference
//! engine:
//!
//! - **Sensitivity maps** ([`gradient`]): the magnitude of the exact
//!   gradient of a chosen logit per input variable — what change would move
//!   the output.
//! - **Relevance propagation** ([`lrp`]): the logit itself redistributed
//!   backwards through the layers under a conservation constraint — what
//!   actually produced the output. Per-layer sums, stabilizer leakage and
//!   bias absorption are all reported, so the conservation property is
//!   checkable rather than assumed.
//!
//! Explanation quality is scored by perturbation ([`evaluate`]): destroy
//! input regions most-relevant-first and watch the prediction score fall;
//! faster is better, and a seeded random ranking gives the floor. Heatmap
//! and token-coloring output live in [`render`], dataset loading in
//! [`data`], and a deterministic trainer for desk-scale fixtures in
//! [`train`].
//!
//! Determinism is a design constraint throughout: fixed summation orders,
//! one documented PRNG ([`rng`]) with substreams keyed by role, and
//! parallel evaluation that aggregates in sample order. The same seeds give
//! the same bytes.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `relprop` binary wraps the same entry points as subcommands.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod gradient;
pub mod lrp;
pub mod model;
pub mod render;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use evaluate::{
    compare_methods, perturbation_curve, rank_regions, MethodSpec, PerturbMode, PerturbationCurve,
    PerturbationPlan,
};
pub use gradient::{
    backward_gradient, finite_difference_gradient, sensitivity_map, ChannelNorm, GradientMap,
};
pub use lrp::{
    aggregate_groups, conservation_audit, lrp_explain, ConservationReport, MethodLabel,
    RelevanceMap, RuleConfig,
};
pub use model::{forward, load_model, save_model, ForwardTrace, Layer, Model};
pub use render::{render_heatmap_image, render_text_html, ColorMapKind, ColorMapSpec};
pub use tensor::{ConvSpec, PoolKind, Tensor};
pub use train::{train_mlp, TrainReport};
