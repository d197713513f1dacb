//! Explain one tabular prediction two ways and compare what the scores
//! mean: relevance propagation decomposes the logit itself (signed, sums to
//! the prediction), while a sensitivity map only measures how hard the
//! output would react to changes (non-negative, no decomposition).
//!
//! ```sh
//! cargo run -p relprop --example explain_prediction
//! ```

use relprop::fixtures;
use relprop::gradient::{backward_gradient, sensitivity_map, ChannelNorm};
use relprop::lrp::{lrp_explain, RuleConfig};
use relprop::model::forward;
use relprop::tensor::Tensor;
use relprop::train::train_mlp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = fixtures::two_blobs(200, 7);
    let report = train_mlp(&dataset, &[2, 8, 2], 50, 0.1, 7)?;
    let model = report.model;

    let input = Tensor::vector(vec![1.4, 0.9]);
    let trace = forward(&model, &input)?;
    let class = trace.predicted_class;
    println!(
        "input {:?} predicted as '{}' with logit {:.4}",
        input.data(),
        model.class_names[class],
        trace.logits.get_flat(class)
    );

    let lrp = lrp_explain(&model, &trace, class, RuleConfig::epsilon(0.01)?)?;
    println!("\nrelevance propagation (epsilon = 0.01):");
    for (i, r) in lrp.values.iter().enumerate() {
        println!("  feature {i}: {r:+.4}");
    }
    let report = lrp.conservation.as_ref().unwrap();
    println!(
        "  sum {:.4} vs logit {:.4} (stabilizer leaked {:.2e}, bias absorbed {:.4})",
        lrp.values.sum(),
        report.f_value,
        report.epsilon_leaked,
        report.bias_absorbed
    );

    let grad = backward_gradient(&model, &trace, class)?;
    let sa = sensitivity_map(&grad, ChannelNorm::Abs)?;
    println!("\nsensitivity map (|gradient|):");
    for (i, r) in sa.values.iter().enumerate() {
        println!("  feature {i}: {r:.4}");
    }
    println!("  (non-negative by construction; does not sum to the logit)");
    Ok(())
}
