use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ImageBuffer, Rotation, FILL};
use crate::error::{Error, Result};

/// Polar resampling parameters: centre `(u_o, v_o)`, radius `R`, angle
/// offset `φ` and angular stride `s`.
///
/// The polar image has `round(R)` rows (one per unit radius, starting at the
/// centre) and `round(2π / s)` columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarParams {
    pub center_u: f64,
    pub center_v: f64,
    pub radius: f64,
    pub angle_offset: f64,
    pub stride: f64,
}

impl PolarParams {
    /// Parameters with `divisions` columns and no angle offset.
    pub fn new(center_u: f64, center_v: f64, radius: f64, divisions: usize) -> Self {
        Self {
            center_u,
            center_v,
            radius,
            angle_offset: 0.0,
            stride: TAU / divisions.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.center_u, self.center_v, self.radius, self.angle_offset, self.stride]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("polar parameters must be finite".into()));
        }
        if self.radius <= 0.0 || self.stride <= 0.0 {
            return Err(Error::Parameter(format!(
                "polar radius and stride must be positive (R={}, s={})",
                self.radius, self.stride
            )));
        }
        if self.height() == 0 || self.width() == 0 {
            return Err(Error::Parameter(format!(
                "polar image would be empty (R={}, s={})",
                self.radius, self.stride
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        (TAU / self.stride).round() as usize
    }

    pub fn height(&self) -> usize {
        self.radius.round() as usize
    }
}

/// Cartesian → polar: output `(row r, column j)` samples
/// `u = u_o + r cos(j s + φ)`, `v = v_o + r sin(j s + φ)` bilinearly.
pub fn polar_transform(image: &ImageBuffer, params: &PolarParams) -> Result<ImageBuffer> {
    params.validate()?;
    let (w, h, ch) = (params.width(), params.height(), image.channels());
    let mut pixels = Vec::with_capacity(w * h * ch);
    let dirs: Vec<(f64, f64)> = (0..w)
        .map(|j| {
            let theta = j as f64 * params.stride + params.angle_offset;
            (theta.cos(), theta.sin())
        })
        .collect();
    for r in 0..h {
        let r = r as f64;
        for &(cos, sin) in &dirs {
            let u = params.center_u + r * cos;
            let v = params.center_v + r * sin;
            for c in 0..ch {
                pixels.push(image.sample_bilinear(u, v, c));
            }
        }
    }
    ImageBuffer::new(w, h, ch, pixels)
}

/// Polar → Cartesian: output `(u, v)` samples radius
/// `r = |(u, v) − O|` and angle `atan2(v − v_o, u − u_o) − φ` (wrapped to
/// `[0, 2π)`). Columns wrap around; points beyond `R` are filled.
pub fn inverse_polar_transform(
    polar: &ImageBuffer,
    params: &PolarParams,
    out_width: usize,
    out_height: usize,
) -> Result<ImageBuffer> {
    params.validate()?;
    if out_width == 0 || out_height == 0 {
        return Err(Error::Parameter("output image must be non-empty".into()));
    }
    let (pw, ph, ch) = (polar.width(), polar.height(), polar.channels());
    let mut pixels = Vec::with_capacity(out_width * out_height * ch);
    for v in 0..out_height {
        for u in 0..out_width {
            let (du, dv) = (u as f64 - params.center_u, v as f64 - params.center_v);
            let r = du.hypot(dv);
            if r > params.radius {
                pixels.extend(std::iter::repeat_n(FILL, ch));
                continue;
            }
            let theta = (dv.atan2(du) - params.angle_offset).rem_euclid(TAU);
            let col = theta / params.stride;
            let row = r.min((ph - 1) as f64);
            let (c0, fc) = (col.floor(), col - col.floor());
            let c0 = (c0 as usize) % pw;
            let c1 = (c0 + 1) % pw;
            let r0 = row.floor() as usize;
            let r1 = (r0 + 1).min(ph - 1);
            let fr = row - r0 as f64;
            for c in 0..ch {
                let p = |rr, cc| polar.get(cc, rr, c) as f64;
                let a = p(r0, c0) + (p(r0, c1) - p(r0, c0)) * fc;
                let b = p(r1, c0) + (p(r1, c1) - p(r1, c0)) * fc;
                pixels.push((a + (b - a) * fr) as f32);
            }
        }
    }
    ImageBuffer::new(out_width, out_height, ch, pixels)
}

/// A concrete perturbation of the polar parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarJitter {
    pub angle: Rotation,
    pub drift_u: i32,
    pub drift_v: i32,
    pub radius_scale: f64,
}

impl Default for PolarJitter {
    fn default() -> Self {
        Self {
            angle: Rotation::R0,
            drift_u: 0,
            drift_v: 0,
            radius_scale: 1.0,
        }
    }
}

impl PolarJitter {
    pub fn apply(&self, base: &PolarParams) -> PolarParams {
        PolarParams {
            center_u: base.center_u + f64::from(self.drift_u),
            center_v: base.center_v + f64::from(self.drift_v),
            radius: base.radius * self.radius_scale,
            angle_offset: base.angle_offset + self.angle.radians(),
            stride: base.stride,
        }
    }
}

/// The set a [`PolarJitter`] is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarJitterRange {
    pub angles: Vec<Rotation>,
    pub max_drift: i32,
    pub radius_scales: Vec<f64>,
}

impl PolarJitterRange {
    /// Quarter-turn angles, centre drift of up to `max_drift` pixels and
    /// radius scales {0.8, 1}.
    pub fn standard(max_drift: i32) -> Self {
        Self {
            angles: Rotation::ALL.to_vec(),
            max_drift,
            radius_scales: vec![0.8, 1.0],
        }
    }

    pub fn none() -> Self {
        Self {
            angles: vec![Rotation::R0],
            max_drift: 0,
            radius_scales: vec![1.0],
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> PolarJitter {
        let angle = if self.angles.is_empty() {
            Rotation::R0
        } else {
            self.angles[rng.random_range(0..self.angles.len())]
        };
        let d = self.max_drift.abs();
        let drift_u = rng.random_range(-d..=d);
        let drift_v = rng.random_range(-d..=d);
        let radius_scale = if self.radius_scales.is_empty() {
            1.0
        } else {
            self.radius_scales[rng.random_range(0..self.radius_scales.len())]
        };
        PolarJitter {
            angle,
            drift_u,
            drift_v,
            radius_scale,
        }
    }
}

/// Polar transform with jittered parameters.
pub fn apply_polar_jitter(image: &ImageBuffer, base: &PolarParams, jitter: &PolarJitter) -> Result<ImageBuffer> {
    base.validate()?;
    polar_transform(image, &jitter.apply(base))
}

/// Polar transform with parameters drawn from `range` using `seed`.
pub fn polar_augment(
    image: &ImageBuffer,
    base: &PolarParams,
    range: &PolarJitterRange,
    seed: u64,
) -> Result<ImageBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    apply_polar_jitter(image, base, &range.sample(&mut rng))
}
