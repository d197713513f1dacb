//! Explain a convolutional classifier on an 8x8 bar image and render the
//! relevance map as a PPM heatmap: red where pixels supported the
//! prediction, blue where they spoke against it.
//!
//! ```sh
//! cargo run -p relprop --example heatmap_image
//! ```

use relprop::fixtures;
use relprop::lrp::{lrp_explain, RuleConfig};
use relprop::model::forward;
use relprop::render::{render_heatmap_image, ColorMapSpec};
use relprop::tensor::Tensor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("relprop-examples/heatmap_image");
    std::fs::create_dir_all(&out)?;

    let model = fixtures::random_conv_net(8, 11, true)?;
    let (images, _) = fixtures::bar_images(8, 5);
    let image = Tensor::new(
        vec![1, 8, 8],
        images[2].iter().map(|&b| b as f64 / 255.0).collect(),
    )?;

    let trace = forward(&model, &image)?;
    println!(
        "predicted class {} with logit {:.4}",
        trace.predicted_class,
        trace.logits.get_flat(trace.predicted_class)
    );

    let map = lrp_explain(
        &model,
        &trace,
        trace.predicted_class,
        RuleConfig::alpha_beta(2.0, 1.0)?,
    )?;

    // quick terminal view: + supporting, - contradicting, . quiet
    let sat = map.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for y in 0..8 {
        let row: String = (0..8)
            .map(|x| {
                let v = map.values.get(&[0, y, x]);
                if v > 0.2 * sat {
                    '+'
                } else if v < -0.2 * sat {
                    '-'
                } else {
                    '.'
                }
            })
            .collect();
        println!("  {row}");
    }

    let ppm = out.join("heatmap.ppm");
    render_heatmap_image(&map, &ColorMapSpec::diverging(), &ppm)?;
    println!("heatmap written to {}", ppm.display());
    Ok(())
}
