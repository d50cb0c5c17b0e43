use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ImageBuffer;

/// Parameters of the synthetic fundus generator. Radii are fractions of the
/// image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub image_side: usize,
    pub disc_radius_range: (f64, f64),
    pub cdr_normal: (f64, f64),
    pub cdr_glaucoma: (f64, f64),
    /// Standard deviation of the additive per-channel noise.
    pub noise_level: f64,
    pub vessel_count: usize,
    /// Fraction of glaucoma cases.
    pub positive_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            image_side: 128,
            disc_radius_range: (0.08, 0.15),
            cdr_normal: (0.3, 0.55),
            cdr_glaucoma: (0.7, 0.9),
            noise_level: 0.02,
            vessel_count: 6,
            positive_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi < 1.0;
        if self.image_side < 16 {
            return Err(Error::Parameter(format!("image side {} is below 16", self.image_side)));
        }
        if !range_ok(self.disc_radius_range) || self.disc_radius_range.1 > 0.2 {
            return Err(Error::Parameter(format!(
                "disc radius range {:?} must lie within (0, 0.2]",
                self.disc_radius_range
            )));
        }
        if !range_ok(self.cdr_normal) || !range_ok(self.cdr_glaucoma) {
            return Err(Error::Parameter("cup-to-disc ranges must lie within (0, 1)".into()));
        }
        if self.cdr_glaucoma.0 <= self.cdr_normal.1 {
            return Err(Error::Parameter(format!(
                "glaucoma CDR range {:?} must lie strictly above the normal range {:?}",
                self.cdr_glaucoma, self.cdr_normal
            )));
        }
        if !(0.0..=0.5).contains(&self.noise_level) {
            return Err(Error::Parameter(format!("noise level {} outside [0, 0.5]", self.noise_level)));
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return Err(Error::Parameter(format!(
                "positive fraction {} outside [0, 1]",
                self.positive_fraction
            )));
        }
        Ok(())
    }

    /// Label of sample `index`: positives are spread evenly so that any
    /// prefix of `n` samples holds `floor(n · fraction)` of them.
    pub fn label_of(&self, index: usize) -> bool {
        let f = self.positive_fraction;
        ((index + 1) as f64 * f).floor() > (index as f64 * f).floor()
    }
}

/// One generated image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: ImageBuffer,
    /// Single-channel binary disc mask.
    pub mask: ImageBuffer,
    pub label: bool,
    pub disc_center: (f64, f64),
    /// Vertical disc radius in pixels.
    pub disc_radius: f64,
    /// Vertical cup-to-disc ratio.
    pub cdr: f64,
}

fn quantize(v: f64) -> f32 {
    ((v.clamp(0.0, 1.0) * 255.0).round() / 255.0) as f32
}

/// Soft coverage of an ellipse edge, one pixel wide.
fn coverage(du: f64, dv: f64, ru: f64, rv: f64) -> f64 {
    let d = ((du / ru).powi(2) + (dv / rv).powi(2)).sqrt();
    ((1.0 - d) * rv.min(ru) + 0.5).clamp(0.0, 1.0)
}

/// Generates sample `index` of the dataset described by `spec`; samples are
/// independent, so any subset can be produced in any order.
pub fn generate_sample(spec: &SyntheticSpec, index: usize) -> Result<SyntheticSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let side = spec.image_side;
    let s = side as f64;
    let label = spec.label_of(index);

    let rv = rng.random_range(spec.disc_radius_range.0..=spec.disc_radius_range.1) * s;
    let ru = rv * rng.random_range(0.88..=1.0);
    let (cu, cv) = (rng.random_range(0.3..=0.7) * s, rng.random_range(0.3..=0.7) * s);
    let (lo, hi) = if label { spec.cdr_glaucoma } else { spec.cdr_normal };
    let cdr = rng.random_range(lo..=hi);
    let (cup_v, cup_u) = (cdr * rv, cdr * ru);

    let tone = rng.random_range(0.85..=1.1);
    let background = [0.55 * tone, 0.25 * tone, 0.12 * tone];
    let disc_tone = rng.random_range(0.9..=1.0);
    let disc = [0.92 * disc_tone, 0.70 * disc_tone, 0.42 * disc_tone];
    let cup = [1.0, 0.95, 0.8];
    let side_dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let macula = (cu + side_dir * 2.5 * rv, cv);

    let mut rgb = vec![[0.0f64; 3]; side * side];
    let mut mask = vec![0.0f32; side * side];
    let centre = (s - 1.0) / 2.0;
    for v in 0..side {
        for u in 0..side {
            let (x, y) = (u as f64, v as f64);
            let r2 = ((x - centre).powi(2) + (y - centre).powi(2)) / (0.7 * s).powi(2);
            let vignette = (1.0 - 0.35 * r2).max(0.2);
            let dm = ((x - macula.0).powi(2) + (y - macula.1).powi(2)) / (1.2 * rv).powi(2);
            let dark = 1.0 - 0.25 * (-dm).exp();
            let mut px = background.map(|b| b * vignette * dark);
            let a = coverage(x - cu, y - cv, ru, rv);
            let c = coverage(x - cu, y - cv, cup_u, cup_v);
            for k in 0..3 {
                px[k] = px[k] * (1.0 - a) + disc[k] * a;
                px[k] = px[k] * (1.0 - c) + cup[k] * c;
            }
            rgb[v * side + u] = px;
            if ((x - cu) / ru).powi(2) + ((y - cv) / rv).powi(2) <= 1.0 {
                mask[v * side + u] = 1.0;
            }
        }
    }

    let width = (0.008 * s).max(0.6);
    for k in 0..spec.vessel_count {
        let theta = std::f64::consts::TAU * (k as f64 + rng.random_range(0.0..0.6)) / spec.vessel_count as f64;
        let (dx, dy) = (theta.cos(), theta.sin());
        let amp = rng.random_range(0.5..=2.0) * width * 2.0;
        let freq = rng.random_range(0.03..=0.08);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let w = width * rng.random_range(0.7..=1.3);
        let mut t = 0.3 * rv;
        while t < s {
            let off = amp * (freq * t + phase).sin();
            let (px, py) = (cu + t * dx - off * dy, cv + t * dy + off * dx);
            let (u0, u1) = ((px - w - 1.0).floor().max(0.0), (px + w + 1.0).ceil().min(s - 1.0));
            let (v0, v1) = ((py - w - 1.0).floor().max(0.0), (py + w + 1.0).ceil().min(s - 1.0));
            let mut v = v0;
            while v <= v1 {
                let mut u = u0;
                while u <= u1 {
                    let d = (u - px).hypot(v - py);
                    let a = (w + 0.5 - d).clamp(0.0, 1.0) * 0.5;
                    if a > 0.0 {
                        let p = &mut rgb[v as usize * side + u as usize];
                        let target = [0.35, 0.08, 0.05];
                        for c in 0..3 {
                            p[c] = p[c].min(p[c] * (1.0 - a) + target[c] * a);
                        }
                    }
                    u += 1.0;
                }
                v += 1.0;
            }
            t += 0.5;
        }
    }

    let amp = spec.noise_level * 3f64.sqrt();
    let mut pixels = Vec::with_capacity(side * side * 3);
    for px in &rgb {
        for &c in px {
            let n = if amp > 0.0 { rng.random_range(-amp..=amp) } else { 0.0 };
            pixels.push(quantize(c + n));
        }
    }
    Ok(SyntheticSample {
        image: ImageBuffer::new(side, side, 3, pixels)?,
        mask: ImageBuffer::new(side, side, 1, mask)?,
        label,
        disc_center: (cu, cv),
        disc_radius: rv,
        cdr,
    })
}

pub fn generate_synthetic(spec: &SyntheticSpec, count: usize) -> Result<Vec<SyntheticSample>> {
    if count == 0 {
        return Err(Error::Parameter("sample count must be positive".into()));
    }
    (0..count).map(|i| generate_sample(spec, i)).collect()
}
