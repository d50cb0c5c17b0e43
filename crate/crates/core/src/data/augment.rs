//! Per-stream input preparation and training-time augmentation.
//!
//! * global and segmentation-guided: quarter-turn rotation and flips, with
//!   the disc mask transformed identically;
//! * disc: crop around the located disc with a random drift, then rotation
//!   and flips;
//! * polar: the disc crop resampled to polar coordinates with jittered
//!   angle, centre and radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    apply_polar_jitter, crop, resize, rotate_flip, ImageBuffer, PolarJitter, PolarJitterRange, PolarParams,
    Rotation,
};
use crate::localization::DiscLocation;
use crate::stream::StreamKind;

/// Geometry of the disc and polar stream inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPrep {
    /// Disc crop side as a multiple of the detected diameter.
    pub crop_ratio: f64,
    /// The disc crop is resized to this side before the polar transform.
    pub polar_source_side: usize,
    /// Angular samples of the polar image.
    pub polar_divisions: usize,
    /// Maximum crop and polar-centre drift as a fraction of the crop side.
    pub drift_fraction: f64,
}

impl Default for StreamPrep {
    fn default() -> Self {
        Self {
            crop_ratio: 2.0,
            polar_source_side: 128,
            polar_divisions: 64,
            drift_fraction: 0.025,
        }
    }
}

impl StreamPrep {
    pub fn validate(&self) -> Result<()> {
        if !(self.crop_ratio > 0.0 && self.crop_ratio.is_finite()) {
            return Err(Error::Parameter(format!("crop ratio must be positive, got {}", self.crop_ratio)));
        }
        if self.polar_source_side < 4 || self.polar_divisions < 4 {
            return Err(Error::Parameter("polar source side and divisions must be at least 4".into()));
        }
        if !(0.0..0.5).contains(&self.drift_fraction) {
            return Err(Error::Parameter(format!(
                "drift fraction must lie in [0, 0.5), got {}",
                self.drift_fraction
            )));
        }
        Ok(())
    }

    pub fn crop_side(&self, loc: &DiscLocation) -> usize {
        (self.crop_ratio * loc.diameter).round().max(1.0) as usize
    }

    fn max_drift(&self, side: usize) -> i32 {
        (self.drift_fraction * side as f64).round() as i32
    }

    /// Polar parameters on the resized crop: centred, radius half the side.
    pub fn polar_params(&self) -> PolarParams {
        let side = self.polar_source_side as f64;
        PolarParams::new((side - 1.0) / 2.0, (side - 1.0) / 2.0, side / 2.0, self.polar_divisions)
    }
}

/// A concrete augmentation draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Augmentation {
    pub rotation: Rotation,
    pub flip_h: bool,
    pub flip_v: bool,
    /// Disc-crop drift in original pixels.
    pub drift: (i32, i32),
    pub polar: PolarJitter,
}

impl Augmentation {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation::R0,
            flip_h: false,
            flip_v: false,
            drift: (0, 0),
            polar: PolarJitter::default(),
        }
    }
}

/// An image with whatever ground truth the stream needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSample {
    pub image: ImageBuffer,
    pub mask: Option<ImageBuffer>,
    pub location: Option<DiscLocation>,
}

/// Random generator for the augmentation of sample `index` in `epoch`.
pub fn augmentation_rng(seed: u64, kind: StreamKind, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 56) | ((epoch as u64 & 0xff_ffff) << 32) | (index as u64 & 0xffff_ffff));
    rng
}

/// Draws the stream's augmentation. `crop_side` bounds the disc drift.
pub fn sample_augmentation<R: Rng>(kind: StreamKind, prep: &StreamPrep, crop_side: usize, rng: &mut R) -> Augmentation {
    let mut aug = Augmentation::identity();
    match kind {
        StreamKind::Global | StreamKind::SegGuided | StreamKind::Disc => {
            aug.rotation = Rotation::ALL[rng.random_range(0..4)];
            aug.flip_h = rng.random_bool(0.5);
            aug.flip_v = rng.random_bool(0.5);
            if kind == StreamKind::Disc {
                let d = prep.max_drift(crop_side);
                aug.drift = (rng.random_range(-d..=d), rng.random_range(-d..=d));
            }
        }
        StreamKind::Polar => {
            aug.polar = PolarJitterRange::standard(prep.max_drift(prep.polar_source_side)).sample(rng);
        }
    }
    aug
}

fn location(sample: &StreamSample, kind: StreamKind) -> Result<DiscLocation> {
    sample
        .location
        .ok_or_else(|| Error::Input(format!("{kind} stream input needs a disc location")))
}

/// Applies `aug` and produces the stream's input image (and, for the
/// segmentation-guided stream, the matching mask).
pub fn apply_augmentation(
    sample: &StreamSample,
    kind: StreamKind,
    prep: &StreamPrep,
    aug: &Augmentation,
) -> Result<StreamSample> {
    let turn = |img: &ImageBuffer| rotate_flip(img, aug.rotation, aug.flip_h, aug.flip_v);
    match kind {
        StreamKind::Global | StreamKind::SegGuided => Ok(StreamSample {
            image: turn(&sample.image),
            mask: sample.mask.as_ref().map(turn),
            location: None,
        }),
        StreamKind::Disc => {
            let loc = location(sample, kind)?;
            let side = prep.crop_side(&loc);
            let (du, dv) = aug.drift;
            let c = crop(&sample.image, loc.center_u + f64::from(du), loc.center_v + f64::from(dv), side)?;
            Ok(StreamSample { image: turn(&c), mask: None, location: None })
        }
        StreamKind::Polar => {
            let loc = location(sample, kind)?;
            let c = crop(&sample.image, loc.center_u, loc.center_v, prep.crop_side(&loc))?;
            let src = resize(&c, prep.polar_source_side, prep.polar_source_side)?;
            let polar = apply_polar_jitter(&src, &prep.polar_params(), &aug.polar)?;
            Ok(StreamSample { image: polar, mask: None, location: None })
        }
    }
}

/// Stream input with a fresh augmentation drawn from `rng`.
pub fn augment_for_stream<R: Rng>(
    sample: &StreamSample,
    kind: StreamKind,
    prep: &StreamPrep,
    rng: &mut R,
) -> Result<StreamSample> {
    let side = sample.location.map_or(0, |l| prep.crop_side(&l));
    let aug = sample_augmentation(kind, prep, side, rng);
    apply_augmentation(sample, kind, prep, &aug)
}

/// Stream input without augmentation, as used at test time.
pub fn prepare_for_stream(sample: &StreamSample, kind: StreamKind, prep: &StreamPrep) -> Result<StreamSample> {
    apply_augmentation(sample, kind, prep, &Augmentation::identity())
}
