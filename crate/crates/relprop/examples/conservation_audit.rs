//! Watch the conservation property directly: with an exact rule the
//! relevance sum at every layer equals the explained logit; a stabilizer
//! leaks a measurable share and biases absorb another, and both are
//! accounted instead of silently lost.
//!
//! ```sh
//! cargo run -p relprop --example conservation_audit
//! ```

use relprop::fixtures;
use relprop::lrp::{conservation_audit, lrp_explain, RuleConfig};
use relprop::model::forward;
use relprop::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::random_mlp(&[4, 10, 6, 2], 21, true)?;
    let input = Tensor::vector(vec![0.8, -0.3, 0.5, -0.9]);
    let trace = forward(&model, &input)?;
    let class = trace.predicted_class;
    println!("explained logit f = {:.6}\n", trace.logits.get_flat(class));

    for epsilon in [0.0, 0.01, 0.1] {
        let map = lrp_explain(&model, &trace, class, RuleConfig::epsilon(epsilon)?)?;
        let audit = conservation_audit(&map)?;
        println!("epsilon = {epsilon}:");
        println!("  per-layer relevance sums (logits -> input): ");
        for (i, sum) in audit.layer_sums.iter().enumerate() {
            println!("    boundary {i}: {sum:.6}");
        }
        println!("  bias absorbed:   {:+.6}", audit.bias_absorbed);
        println!("  stabilizer leak: {:+.6}", audit.epsilon_leaked);
        println!(
            "  worst deviation from f: {:.3e} absolute, {:.3e} relative\n",
            audit.max_abs_deviation, audit.max_rel_deviation
        );
    }

    println!("(with a bias-free network and epsilon = 0 every boundary sum equals f to ~1e-15)");
    let clean = fixtures::random_mlp(&[4, 10, 6, 2], 21, false)?;
    let trace = forward(&clean, &input)?;
    let map = lrp_explain(
        &clean,
        &trace,
        trace.predicted_class,
        RuleConfig::epsilon(0.0)?,
    )?;
    let audit = conservation_audit(&map)?;
    println!(
        "bias-free, epsilon 0: worst relative deviation {:.3e}",
        audit.max_rel_deviation
    );
    Ok(())
}
