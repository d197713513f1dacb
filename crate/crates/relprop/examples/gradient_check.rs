//! Verify the exact reverse-mode gradient against central finite
//! differences, the standard independent oracle. Away from ReLU kinks the
//! two agree to rounding precision on piecewise-linear networks.
//!
//! ```sh
//! cargo run -p relprop --example gradient_check
//! ```

use relprop::fixtures;
use relprop::gradient::{backward_gradient, finite_difference_gradient};
use relprop::model::forward;
use relprop::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::random_mlp(&[6, 12, 8, 3], 42, true)?;
    let input = Tensor::vector(vec![0.31, -0.74, 0.52, 0.18, -0.46, 0.91]);
    let trace = forward(&model, &input)?;
    let class = trace.predicted_class;
    let h = 1e-4;

    let exact = backward_gradient(&model, &trace, class)?;
    let fd = finite_difference_gradient(&model, &input, class, h)?;

    println!("gradient of logit {class} vs central differences (h = {h}):");
    let mut worst = 0.0f64;
    for (i, (a, b)) in exact.values.iter().zip(fd.values.iter()).enumerate() {
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
        worst = worst.max(rel);
        println!("  d/dx{i}: exact {a:+.8}  fd {b:+.8}  rel diff {rel:.2e}");
    }
    println!("worst relative difference: {worst:.2e}");
    assert!(worst < 1e-6);

    // the one place the oracle legitimately disagrees: a kink under the step
    println!("\nat a ReLU kink the convention (derivative 0) and the symmetric");
    println!("difference split the corner instead:");
    let kinked = relprop::model::Model::new(
        vec![1],
        vec![
            relprop::model::Layer::Dense {
                weights: Tensor::matrix(vec![vec![1.0, 0.0]])?,
                bias: Tensor::vector(vec![0.0, 0.0]),
            },
            relprop::model::Layer::Relu,
            relprop::model::Layer::Dense {
                weights: Tensor::matrix(vec![vec![4.0, 0.0], vec![0.0, 1.0]])?,
                bias: Tensor::vector(vec![0.0, 0.0]),
            },
        ],
        vec!["f".into(), "aux".into()],
    )?;
    let at_kink = Tensor::vector(vec![0.0]);
    let trace = forward(&kinked, &at_kink)?;
    let exact = backward_gradient(&kinked, &trace, 0)?;
    let fd = finite_difference_gradient(&kinked, &at_kink, 0, h)?;
    println!(
        "  exact {} vs fd {} (tests therefore sample inputs with margin > 10h)",
        exact.values.get_flat(0),
        fd.values.get_flat(0)
    );
    Ok(())
}
