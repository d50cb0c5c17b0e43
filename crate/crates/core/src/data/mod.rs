//! Datasets: the synthetic fundus generator, PPM images, TSV manifests and
//! the per-stream input pipelines.

mod augment;
mod manifest;
mod ppm;
mod synthetic;

pub use augment::{
    apply_augmentation, augment_for_stream, augmentation_rng, prepare_for_stream, sample_augmentation,
    Augmentation, StreamPrep, StreamSample,
};
pub use manifest::{DatasetManifest, ManifestRecord};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use synthetic::{generate_sample, generate_synthetic, SyntheticSample, SyntheticSpec};
