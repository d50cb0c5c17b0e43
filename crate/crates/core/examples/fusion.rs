//! Fuses four per-stream probabilities with each operator and ranks every
//! stream subset by AUC.

use fundus_screen::ensemble::{evaluate_combinations, fuse, FusionMode, StreamScores, StreamSubset};

fn main() -> fundus_screen::Result<()> {
    let one = StreamScores::complete([0.8, 0.6, 0.7, 0.9])?;
    for mode in FusionMode::ALL {
        println!("{mode:<8} all streams: {:.4}", fuse(&one, mode, StreamSubset::ALL)?);
    }
    let pair: StreamSubset = "disc+polar".parse()?;
    println!("average {pair}: {:.4}", fuse(&one, FusionMode::Average, pair)?);

    let images = [
        ([0.9, 0.4, 0.8, 0.7], true),
        ([0.3, 0.8, 0.7, 0.5], true),
        ([0.6, 0.4, 0.4, 0.8], true),
        ([0.7, 0.5, 0.5, 0.2], false),
        ([0.2, 0.6, 0.6, 0.3], false),
        ([0.4, 0.2, 0.3, 0.6], false),
    ];
    let images = images
        .iter()
        .map(|&(p, y)| Ok((StreamScores::complete(p)?, y)))
        .collect::<fundus_screen::Result<Vec<_>>>()?;
    for row in evaluate_combinations(&images, FusionMode::Average)? {
        println!("{:<30} auc {:.4} bacc {:.4}", row.subset.to_string(), row.auc, row.best.bacc);
    }
    Ok(())
}
