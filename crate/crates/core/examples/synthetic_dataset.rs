//! Writes a small synthetic fundus dataset (images, disc masks, manifest)
//! and reads it back through the manifest.
//!
//! cargo run --example synthetic_dataset -- [out_dir] [count]

use std::path::PathBuf;

use fundus_screen::data::{DatasetManifest, SyntheticSpec};
use fundus_screen::pipeline::cmd_generate;

fn main() -> fundus_screen::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fundus-synthetic"));
    let count = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);

    let spec = SyntheticSpec { positive_fraction: 0.1, seed: 5, ..SyntheticSpec::default() };
    let summary = cmd_generate(&spec, count, &out)?;
    println!("{}: {} positive, {} negative", summary.manifest.display(), summary.positives, summary.negatives);

    let manifest = DatasetManifest::load(&summary.manifest)?;
    let image = manifest.load_image(0)?;
    let mask = manifest.load_mask(0, &image)?.expect("generated records carry masks");
    let area = mask.pixels().iter().filter(|&&m| m > 0.5).count();
    println!("first image {}x{}, disc area {area} px", image.width(), image.height());
    Ok(())
}
