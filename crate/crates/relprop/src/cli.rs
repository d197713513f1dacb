//! Command-line entry points: `train`, `explain`, `evaluate`, `render`.
//!
//! Every command writes a JSON run manifest next to its outputs with the
//! fully resolved configuration (defaults included), the SHA-256 of every
//! input file, and the list of files written — no run has hidden
//! configuration, and re-running a recorded configuration reproduces every
//! output byte for byte.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration/usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::data;
use crate::error::{Error, Result};
use crate::evaluate::{
    compare_methods, write_curves_csv, MethodSpec, PerturbMode, PerturbationPlan,
};
use crate::gradient::{backward_gradient, sensitivity_map, ChannelNorm};
use crate::lrp::{conservation_audit, lrp_explain, per_token_groups, RuleConfig};
use crate::model::{forward, load_model, save_model, Layer, Model};
use crate::render::{render_heatmap_image, render_text_html, ColorMapKind, ColorMapSpec};
use crate::tensor::Tensor;
use crate::train::train_mlp;

#[derive(Parser, Debug)]
#[command(
    name = "relprop",
    version,
    about = "Relevance-propagation explanations for small feed-forward classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a Dense/ReLU classifier on a CSV dataset.
    Train(TrainArgs),
    /// Explain one prediction as a relevance map (JSON, optionally rendered).
    Explain(ExplainArgs),
    /// Compare explanation methods by perturbation curves.
    Evaluate(EvaluateArgs),
    /// Render a saved relevance JSON as a PPM heatmap or token HTML.
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label: String,
    /// Comma-separated layer widths, input first, classes last (e.g. 2,8,2).
    #[arg(long)]
    layers: String,
    #[arg(long)]
    epochs: usize,
    #[arg(long)]
    lr: f64,
    /// PRNG seed; required so every run is reproducible.
    #[arg(long)]
    seed: u64,
    /// Output model directory.
    #[arg(long)]
    out: PathBuf,
    /// Min-max normalize features before training.
    #[arg(long)]
    normalize: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InputKind {
    Auto,
    Idx,
    Csv,
    Tokens,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sa,
    LrpEps,
    LrpAb,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    /// Model directory written by `train` (or by hand).
    #[arg(long)]
    model: PathBuf,
    /// Input file: IDX images, CSV, or a token document file.
    #[arg(long)]
    input: PathBuf,
    /// Input format; `auto` infers from the file extension.
    #[arg(long, value_enum, default_value = "auto")]
    input_kind: InputKind,
    /// Sample index within the input file.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Label column to drop (CSV inputs).
    #[arg(long)]
    label: Option<String>,
    /// Vocabulary TSV (token inputs).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Stabilizer for lrp-eps.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Alpha for lrp-ab; beta is derived as alpha - 1.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Explained class; defaults to the predicted one.
    #[arg(long)]
    class: Option<usize>,
    /// Sensitivity norm: abs or l2 (default picked by input rank).
    #[arg(long)]
    sa_norm: Option<String>,
    /// Where to write the relevance JSON.
    #[arg(long, default_value = "relevance.json")]
    out: PathBuf,
    /// Also render a heatmap PPM (or HTML for token models).
    #[arg(long)]
    render: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset file: IDX images, CSV, or token documents.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    input_kind: InputKind,
    /// Label column to drop (CSV inputs).
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Evaluate at most this many samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Comma-separated methods: sa, lrp-eps, lrp-ab, random.
    #[arg(long, default_value = "lrp-eps,sa,random")]
    methods: String,
    /// Perturbation mode: patch or zero.
    #[arg(long, default_value = "zero")]
    perturb: String,
    /// Patch size for patch mode, e.g. 9x9.
    #[arg(long, value_parser = parse_patch)]
    patch: Option<(usize, usize)>,
    /// Uniform replacement range lo,hi; defaults to the dataset min/max.
    #[arg(long, value_parser = parse_range)]
    value_range: Option<(f64, f64)>,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Output directory for curves.csv, summary.json and the manifest.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Relevance JSON produced by `explain`.
    #[arg(long)]
    input: PathBuf,
    /// Output path; .html renders tokens, anything else renders a PPM.
    #[arg(long)]
    out: PathBuf,
    /// diverging (signed) or magnitude.
    #[arg(long, default_value = "diverging")]
    colormap: String,
    #[arg(long)]
    saturation: Option<f64>,
}

fn parse_widths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad layer width '{part}'")))
        })
        .collect()
}

fn parse_patch(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once('x')
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    Ok((
        h.trim()
            .parse()
            .map_err(|_| format!("bad patch height '{h}'"))?,
        w.trim()
            .parse()
            .map_err(|_| format!("bad patch width '{w}'"))?,
    ))
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi, got '{s}'"))?;
    Ok((
        lo.trim()
            .parse()
            .map_err(|_| format!("bad range low '{lo}'"))?,
        hi.trim()
            .parse()
            .map_err(|_| format!("bad range high '{hi}'"))?,
    ))
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version, 2 for usage errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

// --- run manifests ----------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: serde_json::Value,
    input_sha256: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn write_manifest(
    path: &Path,
    command: &'static str,
    config: serde_json::Value,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let mut input_sha256 = BTreeMap::new();
    for input in inputs {
        input_sha256.insert(input.display().to_string(), file_sha256(input)?);
    }
    let manifest = RunManifest {
        tool: "relprop",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        input_sha256,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let bytes = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// --- train ------------------------------------------------------------------

fn cmd_train(args: TrainArgs) -> Result<()> {
    let widths = parse_widths(&args.layers)?;
    let dataset = data::load_csv(&args.data, &args.label, args.normalize)?;
    let report = train_mlp(&dataset, &widths, args.epochs, args.lr, args.seed)?;
    save_model(&report.model, &args.out)?;

    let config = serde_json::json!({
        "data": args.data.display().to_string(),
        "label": args.label,
        "layers": widths,
        "epochs": args.epochs,
        "lr": args.lr,
        "seed": args.seed,
        "normalize": args.normalize,
        "out": args.out.display().to_string(),
    });
    let manifest_path = args.out.join("run_manifest.json");
    write_manifest(
        &manifest_path,
        "train",
        config,
        &[&args.data],
        &[
            &args.out.join(crate::model::MANIFEST_NAME),
            &args.out.join(crate::model::WEIGHTS_NAME),
        ],
    )?;

    println!(
        "trained {} epochs on {} samples: train accuracy {:.4}",
        args.epochs,
        dataset.len(),
        report.train_accuracy
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

// --- explain ----------------------------------------------------------------

fn resolve_kind(kind: InputKind, path: &Path) -> InputKind {
    if kind != InputKind::Auto {
        return kind;
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => InputKind::Csv,
        Some("idx") | Some("ubyte") => InputKind::Idx,
        _ => {
            let name = path.to_string_lossy();
            if name.contains("idx") || name.contains("ubyte") {
                InputKind::Idx
            } else {
                InputKind::Tokens
            }
        }
    }
}

/// Inputs plus per-document token texts when the source is a token file.
struct LoadedInputs {
    inputs: Vec<Tensor>,
    token_texts: Option<Vec<Vec<String>>>,
    extra_input_files: Vec<PathBuf>,
}

fn load_inputs(
    path: &Path,
    kind: InputKind,
    label: Option<&str>,
    vocab: Option<&Path>,
    max_len: Option<usize>,
    limit: Option<usize>,
) -> Result<LoadedInputs> {
    match resolve_kind(kind, path) {
        InputKind::Idx => Ok(LoadedInputs {
            inputs: data::load_idx_images(path, limit)?,
            token_texts: None,
            extra_input_files: vec![],
        }),
        InputKind::Csv => {
            let label = label.ok_or_else(|| {
                Error::InvalidConfig("CSV inputs need --label to name the label column".into())
            })?;
            let mut ds = data::load_csv(path, label, false)?;
            if let Some(l) = limit {
                ds.inputs.truncate(l);
            }
            Ok(LoadedInputs {
                inputs: ds.inputs,
                token_texts: None,
                extra_input_files: vec![],
            })
        }
        InputKind::Tokens => {
            let vocab =
                vocab.ok_or_else(|| Error::InvalidConfig("token inputs need --vocab".into()))?;
            let max_len = max_len.ok_or_else(|| {
                Error::InvalidConfig(
                    "token inputs need a model with a fixed sequence length".into(),
                )
            })?;
            let loaded = data::load_tokens(path, vocab, max_len)?;
            if loaded.dropped_tokens > 0 {
                eprintln!(
                    "note: {} tokens dropped by max_len truncation",
                    loaded.dropped_tokens
                );
            }
            let mut inputs = loaded.dataset.inputs;
            let mut texts = loaded.dataset.token_texts.unwrap_or_default();
            if let Some(l) = limit {
                inputs.truncate(l);
                texts.truncate(l);
            }
            Ok(LoadedInputs {
                inputs,
                token_texts: Some(texts),
                extra_input_files: vec![vocab.to_path_buf()],
            })
        }
        InputKind::Auto => unreachable!("resolved above"),
    }
}

fn model_sequence_len(model: &Model) -> Option<usize> {
    if matches!(model.layers.first(), Some(Layer::Embedding { .. })) {
        Some(model.input_shape[0])
    } else {
        None
    }
}

fn cmd_explain(args: ExplainArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let loaded = load_inputs(
        &args.input,
        args.input_kind,
        args.label.as_deref(),
        args.vocab.as_deref(),
        model_sequence_len(&model),
        None,
    )?;
    let input = loaded
        .inputs
        .get(args.index)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "index {} out of range, file holds {} samples",
                args.index,
                loaded.inputs.len()
            ))
        })?
        .clone();

    let trace = forward(&model, &input)?;
    let target = match args.class {
        Some(c) if c >= model.num_classes() => {
            return Err(Error::InvalidConfig(format!(
                "class {c} out of range for {} classes",
                model.num_classes()
            )))
        }
        Some(c) => c,
        None => trace.predicted_class,
    };

    let mut map = match args.method {
        MethodArg::Sa => {
            let grad = backward_gradient(&model, &trace, target)?;
            let norm = match args.sa_norm.as_deref() {
                Some("abs") => ChannelNorm::Abs,
                Some("l2") => ChannelNorm::L2OverChannels,
                Some(other) => {
                    return Err(Error::InvalidConfig(format!("unknown --sa-norm '{other}'")))
                }
                None => {
                    if grad.values.rank() >= 2 {
                        ChannelNorm::L2OverChannels
                    } else {
                        ChannelNorm::Abs
                    }
                }
            };
            sensitivity_map(&grad, norm)?
        }
        MethodArg::LrpEps => {
            let config = RuleConfig::epsilon(args.epsilon)?;
            let mut map = lrp_explain(&model, &trace, target, config)?;
            // the serialized report is the independent audit, not the
            // propagation pass's own bookkeeping
            map.conservation = Some(conservation_audit(&map)?);
            map
        }
        MethodArg::LrpAb => {
            let config = RuleConfig::alpha_beta(args.alpha, args.alpha - 1.0)?;
            let mut map = lrp_explain(&model, &trace, target, config)?;
            map.conservation = Some(conservation_audit(&map)?);
            map
        }
    };

    // token models: attach the document's tokens and per-token scores
    if let Some(texts) = &loaded.token_texts {
        let kept = &texts[args.index];
        let scores: Vec<f64> = if map.values.rank() == 2 {
            let dim = map.values.shape()[1];
            let groups = per_token_groups(map.values.shape()[0], dim);
            crate::lrp::aggregate_groups(&map, &groups)?
        } else {
            map.values.data().to_vec()
        };
        map.tokens = Some(kept.clone());
        map.token_relevance = Some(scores.into_iter().take(kept.len()).collect());
    }

    map.save_json(&args.out)?;
    let mut outputs: Vec<PathBuf> = vec![args.out.clone()];

    if let Some(render_path) = &args.render {
        if let (Some(tokens), Some(scores)) = (&map.tokens, &map.token_relevance) {
            render_text_html(tokens, scores, &ColorMapSpec::diverging(), render_path)?;
        } else {
            // sign matters for lrp, magnitude for sa
            let spec = match args.method {
                MethodArg::Sa => ColorMapSpec::magnitude(),
                _ => ColorMapSpec::diverging(),
            };
            render_heatmap_image(&map, &spec, render_path)?;
        }
        outputs.push(render_path.clone());
    }

    let config = serde_json::json!({
        "model": args.model.display().to_string(),
        "input": args.input.display().to_string(),
        "index": args.index,
        "method": format!("{:?}", args.method).to_lowercase(),
        "epsilon": args.epsilon,
        "alpha": args.alpha,
        "beta": args.alpha - 1.0,
        "class": target,
        "predicted_class": trace.predicted_class,
        "sa_norm": args.sa_norm,
        "score_convention": "pre-softmax logit",
        "out": args.out.display().to_string(),
        "render": args.render.as_ref().map(|p| p.display().to_string()),
    });
    let manifest_path = manifest_sidecar(&args.out);
    let mut inputs: Vec<&Path> = vec![
        args.input.as_path(),
        // model files pin the exact weights explained
    ];
    let model_manifest = args.model.join(crate::model::MANIFEST_NAME);
    let model_weights = args.model.join(crate::model::WEIGHTS_NAME);
    inputs.push(&model_manifest);
    inputs.push(&model_weights);
    for extra in &loaded.extra_input_files {
        inputs.push(extra);
    }
    let output_refs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    write_manifest(&manifest_path, "explain", config, &inputs, &output_refs)?;

    println!(
        "explained class {} ({}) -> {}",
        target,
        model
            .class_names
            .get(target)
            .map(String::as_str)
            .unwrap_or("?"),
        args.out.display()
    );
    if let Some(report) = &map.conservation {
        println!(
            "conservation: sum(R) = {:.6}, f = {:.6}, max relative deviation {:.3e}",
            report.layer_sums.last().copied().unwrap_or(f64::NAN),
            report.f_value,
            report.max_rel_deviation
        );
    } else {
        println!("sensitivity map: non-conserving by construction, audit skipped");
    }
    Ok(())
}

fn manifest_sidecar(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.manifest.json"))
}

// --- evaluate ---------------------------------------------------------------

fn parse_methods(list: &str, epsilon: f64, alpha: f64) -> Result<Vec<MethodSpec>> {
    let mut methods = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        match part {
            "sa" => methods.push(MethodSpec::Sa { norm: None }),
            "lrp-eps" => methods.push(MethodSpec::LrpEpsilon { epsilon }),
            "lrp-ab" => {
                RuleConfig::alpha_beta(alpha, alpha - 1.0)?;
                methods.push(MethodSpec::LrpAlphaBeta {
                    alpha,
                    beta: alpha - 1.0,
                });
            }
            "random" => methods.push(MethodSpec::Random),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown method '{other}' (expected sa, lrp-eps, lrp-ab or random)"
                )))
            }
        }
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    Ok(methods)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let loaded = load_inputs(
        &args.data,
        args.input_kind,
        args.label.as_deref(),
        args.vocab.as_deref(),
        model_sequence_len(&model),
        args.limit,
    )?;
    if loaded.inputs.is_empty() {
        return Err(Error::InvalidConfig("no samples to evaluate".into()));
    }

    let methods = parse_methods(&args.methods, args.epsilon, args.alpha)?;
    let mode = match args.perturb.as_str() {
        "zero" => PerturbMode::ZeroDelete,
        "patch" => {
            let patch = args
                .patch
                .ok_or_else(|| Error::InvalidConfig("patch mode needs --patch HxW".into()))?;
            let value_range = args.value_range.unwrap_or_else(|| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for t in &loaded.inputs {
                    for v in t.iter() {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                (lo, hi)
            });
            PerturbMode::PatchUniform { patch, value_range }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown perturbation '{other}' (expected patch or zero)"
            )))
        }
    };
    let plan = PerturbationPlan {
        mode,
        steps: args.steps,
        seed: args.seed,
    };
    plan.validate_for(loaded.inputs[0].shape())?;

    let comparison = compare_methods(&model, &loaded.inputs, &methods, &plan)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("curves.csv");
    write_curves_csv(&comparison, &csv_path)?;

    let plan_json = match mode {
        PerturbMode::ZeroDelete => serde_json::json!({
            "mode": "zero", "steps": args.steps, "seed": args.seed,
        }),
        PerturbMode::PatchUniform { patch, value_range } => serde_json::json!({
            "mode": "patch", "patch": [patch.0, patch.1],
            "value_range": [value_range.0, value_range.1],
            "steps": args.steps, "seed": args.seed,
        }),
    };
    let summary = serde_json::json!({
        "plan": plan_json,
        "score_convention": "pre-softmax logit of the originally predicted class",
        "auc_definition": "trapezoid over the mean relative-score curve, unit steps, normalized by step count; lower is better",
        "methods": comparison.curves,
        "n_samples": loaded.inputs.len(),
        "n_excluded": comparison.n_excluded,
        "exclusion_reasons": comparison.exclusion_reasons,
    });
    let summary_path = args.out.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_vec_pretty(&summary)?)
        .map_err(|e| Error::io(&summary_path, e))?;

    let config = serde_json::json!({
        "model": args.model.display().to_string(),
        "data": args.data.display().to_string(),
        "label": args.label,
        "limit": args.limit,
        "methods": args.methods,
        "perturb": args.perturb,
        "patch": args.patch.map(|p| [p.0, p.1]),
        "value_range": match mode {
            PerturbMode::PatchUniform { value_range, .. } => Some([value_range.0, value_range.1]),
            PerturbMode::ZeroDelete => None,
        },
        "steps": args.steps,
        "seed": args.seed,
        "epsilon": args.epsilon,
        "alpha": args.alpha,
        "out": args.out.display().to_string(),
    });
    let model_manifest = args.model.join(crate::model::MANIFEST_NAME);
    let model_weights = args.model.join(crate::model::WEIGHTS_NAME);
    let mut inputs: Vec<&Path> = vec![args.data.as_path(), &model_manifest, &model_weights];
    for extra in &loaded.extra_input_files {
        inputs.push(extra);
    }
    write_manifest(
        &args.out.join("run_manifest.json"),
        "evaluate",
        config,
        &inputs,
        &[&csv_path, &summary_path],
    )?;

    for curve in &comparison.curves {
        println!(
            "{}: auc {:.6} over {} samples",
            curve.label, curve.auc, curve.n_samples
        );
    }
    if comparison.n_excluded > 0 {
        println!(
            "excluded {} samples (non-positive starting logit)",
            comparison.n_excluded
        );
    }
    println!("curves -> {}", csv_path.display());
    println!("summary -> {}", summary_path.display());
    Ok(())
}

// --- render -----------------------------------------------------------------

fn cmd_render(args: RenderArgs) -> Result<()> {
    let map = crate::lrp::RelevanceMap::load_json(&args.input)?;
    let kind = match args.colormap.as_str() {
        "diverging" => ColorMapKind::DivergingSigned,
        "magnitude" => ColorMapKind::SequentialMagnitude,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown colormap '{other}' (expected diverging or magnitude)"
            )))
        }
    };
    let spec = ColorMapSpec {
        kind,
        saturation: args.saturation,
    };

    let is_html = args.out.extension().and_then(|e| e.to_str()) == Some("html");
    if is_html {
        let (tokens, scores) = match (&map.tokens, &map.token_relevance) {
            (Some(t), Some(s)) => (t, s),
            _ => {
                return Err(Error::InvalidConfig(
                    "HTML output needs a relevance JSON with tokens (explain a token model)".into(),
                ))
            }
        };
        render_text_html(tokens, scores, &spec, &args.out)?;
    } else {
        render_heatmap_image(&map, &spec, &args.out)?;
    }

    let config = serde_json::json!({
        "input": args.input.display().to_string(),
        "out": args.out.display().to_string(),
        "colormap": args.colormap,
        "saturation": args.saturation,
    });
    write_manifest(
        &manifest_sidecar(&args.out),
        "render",
        config,
        &[args.input.as_path()],
        &[args.out.as_path()],
    )?;
    println!(
        "rendered {} -> {}",
        args.input.display(),
        args.out.display()
    );
    Ok(())
}
