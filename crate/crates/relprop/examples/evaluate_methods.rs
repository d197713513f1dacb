//! Score explanation quality objectively: delete the most relevant
//! features first and watch the prediction logit fall. A good explanation
//! finds the variables the model actually used, so its curve drops faster
//! and its area under the curve is smaller. A seeded random ranking gives
//! the floor any method must beat.
//!
//! ```sh
//! cargo run -p relprop --example evaluate_methods
//! ```

use relprop::evaluate::{
    compare_methods, write_curves_csv, MethodSpec, PerturbMode, PerturbationPlan,
};
use relprop::fixtures;
use relprop::train::train_mlp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("relprop-examples/evaluate_methods");
    std::fs::create_dir_all(&out)?;

    let train_set = fixtures::eval_fixture(200, 3);
    let report = train_mlp(&train_set, &[16, 12, 2], 40, 0.05, 3)?;
    println!(
        "trained fixture classifier: accuracy {:.3}",
        report.train_accuracy
    );

    let eval_inputs = fixtures::eval_fixture(64, 1003).inputs;
    let plan = PerturbationPlan {
        mode: PerturbMode::ZeroDelete,
        steps: 12,
        seed: 3,
    };
    let methods = vec![
        MethodSpec::LrpEpsilon { epsilon: 0.01 },
        MethodSpec::Sa { norm: None },
        MethodSpec::Random,
    ];
    let comparison = compare_methods(&report.model, &eval_inputs, &methods, &plan)?;

    println!("\nmean relative score while deleting the 12 top-ranked features:");
    print!("{:>8}", "step");
    for curve in &comparison.curves {
        print!("{:>10}", curve.label);
    }
    println!();
    for step in 0..=plan.steps {
        print!("{step:>8}");
        for curve in &comparison.curves {
            print!("{:>10.4}", curve.mean_relative[step]);
        }
        println!();
    }
    println!("\narea under the curve (lower = better explanation):");
    for curve in &comparison.curves {
        println!("  {:>8}: {:.4}", curve.label, curve.auc);
    }

    let csv = out.join("curves.csv");
    write_curves_csv(&comparison, &csv)?;
    println!("\ncurves written to {}", csv.display());
    Ok(())
}
