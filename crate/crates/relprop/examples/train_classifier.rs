//! Train a small Dense/ReLU classifier on a synthetic two-blob dataset and
//! save it as a model directory (JSON manifest + float32 weight blob).
//!
//! ```sh
//! cargo run -p relprop --example train_classifier
//! ```

use relprop::data::save_csv;
use relprop::fixtures;
use relprop::model::{load_model, save_model};
use relprop::train::train_mlp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("relprop-examples/train_classifier");
    std::fs::create_dir_all(&out)?;

    let dataset = fixtures::two_blobs(200, 7);
    save_csv(&dataset, &out.join("blobs.csv"), "y")?;

    let report = train_mlp(&dataset, &[2, 8, 2], 50, 0.1, 7)?;
    println!("train accuracy: {:.4}", report.train_accuracy);
    println!(
        "loss: {:.4} (first epoch) -> {:.4} (last epoch)",
        report.epoch_losses.first().unwrap(),
        report.epoch_losses.last().unwrap()
    );

    let model_dir = out.join("model");
    save_model(&report.model, &model_dir)?;

    // the two files round-trip: loading gives back the same classifier
    let loaded = load_model(&model_dir)?;
    assert_eq!(loaded.class_names, report.model.class_names);
    println!("model saved to {}", model_dir.display());
    println!("same run from the CLI:");
    println!(
        "  relprop train --data {} --label y --layers 2,8,2 --epochs 50 --lr 0.1 --seed 7 --out {}",
        out.join("blobs.csv").display(),
        model_dir.display()
    );
    Ok(())
}
