//! Generates a synthetic train/test split, trains all four streams and
//! evaluates the ensemble on the held-out images.
//!
//! cargo run --release --example train_and_evaluate -- [work_dir] [train] [test]

use std::path::PathBuf;
use std::time::Instant;

use fundus_screen::data::SyntheticSpec;
use fundus_screen::pipeline::{cmd_eval, cmd_generate, cmd_train, PipelineConfig};
use fundus_screen::StreamKind;

fn main() -> fundus_screen::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let work = args.first().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fundus-demo"));
    let n_train = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let n_test = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(100);

    let train = cmd_generate(&SyntheticSpec { seed: 1, ..SyntheticSpec::default() }, n_train, &work.join("train"))?;
    let test = cmd_generate(&SyntheticSpec { seed: 2, ..SyntheticSpec::default() }, n_test, &work.join("test"))?;
    println!("train: {} positive, {} negative", train.positives, train.negatives);

    let config = PipelineConfig { seed: 7, ..PipelineConfig::default() };
    let start = Instant::now();
    let outcome = cmd_train(&config, &train.manifest, &work.join("weights"))?;
    for r in &outcome.reports {
        println!(
            "{:<10} {:<14} epochs={:<3} final loss={:.4}",
            r.stream.name(),
            r.phase,
            r.epochs.len(),
            r.final_loss().unwrap_or(f64::NAN)
        );
    }
    println!("training took {:.1} s", start.elapsed().as_secs_f64());

    let report = cmd_eval(&config, &work.join("weights"), &test.manifest, &work.join("reports"))?;
    print!("{}", report.report_text());
    for kind in StreamKind::ALL {
        println!("{kind}: auc {:.4}", report.stream(kind).summary.auc);
    }
    println!("outputs in {}", work.display());
    Ok(())
}
