//! Turning the disc probability map into a disc position and crop.
//!
//! The map is thresholded at 0.5 and the largest 4-connected component is
//! kept. Its centroid gives the centre and the longer bounding-box side gives
//! the diameter.

use crate::error::{Error, Result};
use crate::geometry::{crop, ImageBuffer};
use crate::tensor::Tensor;

pub const MAP_THRESHOLD: f32 = 0.5;
pub const DEFAULT_CROP_RATIO: f64 = 2.0;

/// Row-major boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} mask needs {} values, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bits[v * self.width + u]
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Position of the optic disc in original-image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscLocation {
    pub center_u: f64,
    pub center_v: f64,
    pub diameter: f64,
    /// Mean map probability over the detected region; 0 for a fallback.
    pub confidence: f64,
}

impl DiscLocation {
    /// Image centre with a fifth of the shorter side as diameter.
    pub fn fallback(width: usize, height: usize) -> Self {
        Self {
            center_u: (width as f64 - 1.0) / 2.0,
            center_v: (height as f64 - 1.0) / 2.0,
            diameter: width.min(height) as f64 / 5.0,
            confidence: 0.0,
        }
    }

    pub fn is_fallback(&self) -> bool {
        self.confidence == 0.0
    }
}

fn map_dims(map: &Tensor<f32>) -> Result<(usize, usize)> {
    match *map.shape() {
        [h, w] | [1, h, w] => Ok((w, h)),
        _ => Err(Error::Dimension(format!(
            "disc map must be [H, W] or [1, H, W], got {:?}",
            map.shape()
        ))),
    }
}

pub fn binarize_map(map: &Tensor<f32>, threshold: f32) -> Result<BinaryMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Parameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let (w, h) = map_dims(map)?;
    BinaryMask::new(w, h, map.data().iter().map(|&p| p >= threshold).collect())
}

/// Keeps the largest 4-connected component; ties go to the component found
/// first in row-major order.
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut label = vec![0u32; w * h];
    let mut best = (0u32, 0usize);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            area += 1;
            let (u, v) = (i % w, i / w);
            let neighbours = [
                (u > 0).then(|| i - 1),
                (u + 1 < w).then(|| i + 1),
                (v > 0).then(|| i - w),
                (v + 1 < h).then(|| i + w),
            ];
            for j in neighbours.into_iter().flatten() {
                if mask.bits[j] && label[j] == 0 {
                    label[j] = next;
                    stack.push(j);
                }
            }
        }
        if area > best.1 {
            best = (next, area);
        }
    }
    BinaryMask {
        width: w,
        height: h,
        bits: label.iter().map(|&l| l != 0 && l == best.0).collect(),
    }
}

/// Locates the disc in a probability map whose pixels are `map_scale`
/// original pixels wide. Map pixel centre `c` maps to `(c + 0.5)·scale − 0.5`.
pub fn locate_disc(map: &Tensor<f32>, map_scale: f64) -> Result<DiscLocation> {
    locate_disc_scaled(map, map_scale, map_scale)
}

/// [`locate_disc`] with separate horizontal and vertical scales, for maps
/// computed on a resized non-square image.
pub fn locate_disc_scaled(map: &Tensor<f32>, scale_u: f64, scale_v: f64) -> Result<DiscLocation> {
    if ![scale_u, scale_v].iter().all(|s| *s > 0.0 && s.is_finite()) {
        return Err(Error::Parameter(format!(
            "map scales must be positive, got {scale_u} and {scale_v}"
        )));
    }
    if let Some(p) = map.data().iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Input(format!("map value {p} outside [0, 1]")));
    }
    let component = largest_component(&binarize_map(map, MAP_THRESHOLD)?);
    let w = component.width;
    let (mut n, mut su, mut sv, mut conf) = (0usize, 0.0, 0.0, 0.0);
    let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (usize::MAX, 0, usize::MAX, 0);
    for (i, _) in component.bits.iter().enumerate().filter(|(_, &b)| b) {
        let (u, v) = (i % w, i / w);
        n += 1;
        su += u as f64;
        sv += v as f64;
        conf += f64::from(map.data()[i]);
        u_lo = u_lo.min(u);
        u_hi = u_hi.max(u);
        v_lo = v_lo.min(v);
        v_hi = v_hi.max(v);
    }
    if n == 0 {
        return Err(Error::NoDiscFound);
    }
    let to_original = |c: f64, scale: f64| (c + 0.5) * scale - 0.5;
    let width = (u_hi - u_lo + 1) as f64 * scale_u;
    let height = (v_hi - v_lo + 1) as f64 * scale_v;
    Ok(DiscLocation {
        center_u: to_original(su / n as f64, scale_u),
        center_v: to_original(sv / n as f64, scale_v),
        diameter: width.max(height),
        confidence: conf / n as f64,
    })
}

/// [`locate_disc`], falling back to [`DiscLocation::fallback`] on an
/// original image of `width`×`height` when nothing is found.
pub fn locate_disc_or_fallback(
    map: &Tensor<f32>,
    map_scale: f64,
    width: usize,
    height: usize,
) -> Result<DiscLocation> {
    match locate_disc(map, map_scale) {
        Err(Error::NoDiscFound) => Ok(DiscLocation::fallback(width, height)),
        other => other,
    }
}

/// Square crop of side `crop_ratio × diameter` centred on the disc.
pub fn crop_for_streams(image: &ImageBuffer, loc: &DiscLocation, crop_ratio: f64) -> Result<ImageBuffer> {
    if !(crop_ratio > 0.0 && crop_ratio.is_finite()) {
        return Err(Error::Parameter(format!("crop ratio must be positive, got {crop_ratio}")));
    }
    let side = (crop_ratio * loc.diameter).round().max(1.0) as usize;
    crop(image, loc.center_u, loc.center_v, side)
}
