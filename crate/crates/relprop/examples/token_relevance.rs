//! Word-level relevance for a tiny embedding classifier: per-token scores
//! keep their sign (supporting vs contradicting the predicted topic) and
//! are rendered as a colored HTML document.
//!
//! ```sh
//! cargo run -p relprop --example token_relevance
//! ```

use relprop::data::load_tokens;
use relprop::fixtures;
use relprop::lrp::{aggregate_groups, lrp_explain, per_token_groups, RuleConfig};
use relprop::model::{forward, Layer, Model};
use relprop::render::{render_text_html, ColorMapSpec};
use relprop::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("relprop-examples/token_relevance");
    std::fs::create_dir_all(&out)?;
    let (docs, vocab) = fixtures::sentiment_corpus();
    std::fs::write(out.join("docs.txt"), docs)?;
    std::fs::write(out.join("vocab.tsv"), vocab)?;

    let max_len = 6;
    let loaded = load_tokens(&out.join("docs.txt"), &out.join("vocab.tsv"), max_len)?;

    // hand-set sentiment embeddings (dim 1): positive words +1, negative -1,
    // neutral near zero; the dense head just sums every position
    let table = Tensor::matrix(vec![
        vec![0.0],  // 0 pad/unknown
        vec![1.0],  // good
        vec![-1.0], // bad
        vec![1.2],  // great
        vec![-1.3], // terrible
        vec![0.3],  // fine
        vec![0.2],  // okay
    ])?;
    let head: Vec<f64> = (0..max_len).flat_map(|_| [1.0, -1.0]).collect();
    let model = Model::new(
        vec![max_len],
        vec![
            Layer::Embedding { table },
            Layer::Flatten,
            Layer::Dense {
                weights: Tensor::new(vec![max_len, 2], head)?,
                bias: Tensor::vector(vec![0.0, 0.0]),
            },
        ],
        vec!["pos".into(), "neg".into()],
    )?;

    let doc_index = 0;
    let input = &loaded.dataset.inputs[doc_index];
    let tokens = &loaded.dataset.token_texts.as_ref().unwrap()[doc_index];
    let trace = forward(&model, input)?;
    println!(
        "document {:?} classified as '{}'",
        tokens, model.class_names[trace.predicted_class]
    );

    let map = lrp_explain(
        &model,
        &trace,
        trace.predicted_class,
        RuleConfig::epsilon(0.0)?,
    )?;
    // relevance lands on the embedding outputs; sum each token's row
    let dim = map.values.shape()[1];
    let scores = aggregate_groups(&map, &per_token_groups(max_len, dim))?;
    for (token, score) in tokens.iter().zip(&scores) {
        println!("  {token:>10}: {score:+.3}");
    }

    let html = out.join("tokens.html");
    render_text_html(
        tokens,
        &scores[..tokens.len()],
        &ColorMapSpec::diverging(),
        &html,
    )?;
    println!("colored document written to {}", html.display());
    Ok(())
}
