use super::{ImageBuffer, FILL};
use crate::error::{Error, Result};

/// Clockwise quarter turns (rows grow downwards).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn quarter_turns(self) -> usize {
        self as usize
    }

    pub fn from_degrees(deg: u32) -> Result<Self> {
        match deg {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => Err(Error::Parameter(format!(
                "rotation must be 0, 90, 180 or 270 degrees, got {deg}"
            ))),
        }
    }

    pub fn degrees(self) -> u32 {
        90 * self as u32
    }

    pub fn radians(self) -> f64 {
        f64::from(self.degrees()).to_radians()
    }
}

/// Maps a source position through [`rotate_flip`] on a `width`×`height`
/// image. Works for fractional positions (e.g. centroids).
pub fn rotate_flip_point(
    u: f64,
    v: f64,
    width: usize,
    height: usize,
    rotation: Rotation,
    flip_h: bool,
    flip_v: bool,
) -> (f64, f64) {
    let (w, h) = (width as f64, height as f64);
    let (mut pu, mut pv, ow, oh) = match rotation {
        Rotation::R0 => (u, v, w, h),
        Rotation::R90 => (h - 1.0 - v, u, h, w),
        Rotation::R180 => (w - 1.0 - u, h - 1.0 - v, w, h),
        Rotation::R270 => (v, w - 1.0 - u, h, w),
    };
    if flip_h {
        pu = ow - 1.0 - pu;
    }
    if flip_v {
        pv = oh - 1.0 - pv;
    }
    (pu, pv)
}

/// Right-angle rotation followed by optional horizontal and vertical flips.
/// A pure pixel permutation.
pub fn rotate_flip(image: &ImageBuffer, rotation: Rotation, flip_h: bool, flip_v: bool) -> ImageBuffer {
    let (w, h, ch) = (image.width(), image.height(), image.channels());
    let (ow, oh) = match rotation {
        Rotation::R0 | Rotation::R180 => (w, h),
        Rotation::R90 | Rotation::R270 => (h, w),
    };
    let mut pixels = vec![0.0; image.pixels().len()];
    for v in 0..h {
        for u in 0..w {
            let (mut pu, mut pv) = match rotation {
                Rotation::R0 => (u, v),
                Rotation::R90 => (h - 1 - v, u),
                Rotation::R180 => (w - 1 - u, h - 1 - v),
                Rotation::R270 => (v, w - 1 - u),
            };
            if flip_h {
                pu = ow - 1 - pu;
            }
            if flip_v {
                pv = oh - 1 - pv;
            }
            let src = (v * w + u) * ch;
            let dst = (pv * ow + pu) * ch;
            pixels[dst..dst + ch].copy_from_slice(&image.pixels()[src..src + ch]);
        }
    }
    ImageBuffer::new(ow, oh, ch, pixels).expect("permutation preserves validity")
}

/// Top-left pixel of a `side`-wide window centred on `center`.
pub(crate) fn crop_origin(center: f64, side: usize) -> isize {
    (center - (side as f64 - 1.0) / 2.0 + 0.5).floor() as isize
}

/// Axis-aligned square crop centred at `(center_u, center_v)`. Area outside
/// the source is filled.
pub fn crop(image: &ImageBuffer, center_u: f64, center_v: f64, side: usize) -> Result<ImageBuffer> {
    if side == 0 {
        return Err(Error::Parameter("crop side must be positive".into()));
    }
    let ch = image.channels();
    let (left, top) = (crop_origin(center_u, side), crop_origin(center_v, side));
    let mut pixels = vec![FILL; side * side * ch];
    for y in 0..side {
        let sv = top + y as isize;
        if sv < 0 || sv >= image.height() as isize {
            continue;
        }
        for x in 0..side {
            let su = left + x as isize;
            if su < 0 || su >= image.width() as isize {
                continue;
            }
            let src = (sv as usize * image.width() + su as usize) * ch;
            let dst = (y * side + x) * ch;
            pixels[dst..dst + ch].copy_from_slice(&image.pixels()[src..src + ch]);
        }
    }
    ImageBuffer::new(side, side, ch, pixels)
}

fn source_axis(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(in_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resampling with half-pixel alignment and edge clamping.
pub fn resize(image: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Parameter(format!(
            "resize target must be positive, got {out_w}x{out_h}"
        )));
    }
    if out_w == image.width() && out_h == image.height() {
        return Ok(image.clone());
    }
    let cols = source_axis(out_w, image.width());
    let rows = source_axis(out_h, image.height());
    let ch = image.channels();
    let mut pixels = Vec::with_capacity(out_w * out_h * ch);
    for &(v0, v1, fv) in &rows {
        for &(u0, u1, fu) in &cols {
            for c in 0..ch {
                let p = |u, v| image.get(u, v, c) as f64;
                let top = p(u0, v0) + (p(u1, v0) - p(u0, v0)) * fu;
                let bottom = p(u0, v1) + (p(u1, v1) - p(u0, v1)) * fu;
                pixels.push(((top + (bottom - top) * fv) as f32).clamp(0.0, 1.0));
            }
        }
    }
    ImageBuffer::new(out_w, out_h, ch, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize, ch: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, ch, |u, v, c| ((u * 7 + v * 13 + c * 3) % 31) as f32 / 31.0)
    }

    #[test]
    fn rotation_zero_no_flip_is_identity() {
        let img = ramp(5, 3, 3);
        assert_eq!(rotate_flip(&img, Rotation::R0, false, false), img);
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let img = ramp(5, 3, 1);
        let mut r = img.clone();
        for _ in 0..4 {
            r = rotate_flip(&r, Rotation::R90, false, false);
        }
        assert_eq!(r, img);
        let once = rotate_flip(&img, Rotation::R90, false, false);
        assert_eq!((once.width(), once.height()), (3, 5));
    }

    #[test]
    fn half_turn_equals_both_flips() {
        let img = ramp(6, 4, 3);
        let both = rotate_flip(&rotate_flip(&img, Rotation::R0, true, false), Rotation::R0, false, true);
        assert_eq!(rotate_flip(&img, Rotation::R180, false, false), both);
        assert_eq!(rotate_flip(&img, Rotation::R0, true, true), both);
    }

    #[test]
    fn quarter_turn_is_clockwise() {
        // top-left pixel ends up top-right
        let mut img = ImageBuffer::filled(3, 2, 1, 0.0);
        img.set(0, 0, 0, 1.0);
        let r = rotate_flip(&img, Rotation::R90, false, false);
        assert_eq!(r.get(1, 0, 0), 1.0);
        assert_eq!(rotate_flip_point(0.0, 0.0, 3, 2, Rotation::R90, false, false), (1.0, 0.0));
    }

    #[test]
    fn crop_identity_and_outside() {
        let img = ramp(8, 8, 3);
        assert_eq!(crop(&img, 3.5, 3.5, 8).unwrap(), img);
        let out = crop(&img, -50.0, -50.0, 4).unwrap();
        assert!(out.pixels().iter().all(|&v| v == FILL));
        assert!(crop(&img, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn crop_with_drift_contains_disc() {
        // disc of diameter 21 centred at (40, 40); side 61 >= 21 + 40
        let (cx, cy, r) = (40.0f64, 40.0f64, 10.0f64);
        let img = ImageBuffer::from_fn(96, 96, 1, |u, v, _| {
            if (u as f64 - cx).hypot(v as f64 - cy) <= r { 1.0 } else { 0.0 }
        });
        let disc_pixels = img.pixels().iter().filter(|&&v| v > 0.5).count();
        for du in [-20.0, 0.0, 20.0] {
            for dv in [-20.0, 0.0, 20.0] {
                let c = crop(&img, cx + du, cy + dv, 61).unwrap();
                assert_eq!(c.pixels().iter().filter(|&&v| v > 0.5).count(), disc_pixels);
            }
        }
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = ramp(7, 5, 3);
        assert_eq!(resize(&img, 7, 5).unwrap(), img);
        let c = ImageBuffer::filled(9, 4, 3, 0.7);
        for (w, h) in [(1, 1), (3, 17), (20, 20)] {
            let r = resize(&c, w, h).unwrap();
            assert!(r.pixels().iter().all(|&v| (v - 0.7).abs() < 1e-6));
        }
    }

    #[test]
    fn resize_round_trip_on_smooth_image() {
        let img = ImageBuffer::from_fn(32, 32, 1, |u, v, _| {
            0.5 + 0.3 * ((u as f32) / 9.0).sin() * ((v as f32) / 11.0).cos()
        });
        let up = resize(&img, 64, 64).unwrap();
        let back = resize(&up, 32, 32).unwrap();
        let mae: f32 = img.pixels().iter().zip(back.pixels()).map(|(a, b)| (a - b).abs()).sum::<f32>()
            / img.pixels().len() as f32;
        assert!(mae < 0.01, "{mae}");
    }

    proptest! {
        #[test]
        fn point_map_agrees_with_pixel_map(
            w in 1usize..7, h in 1usize..7, rot in 0usize..4, fh: bool, fv: bool,
        ) {
            let rotation = Rotation::ALL[rot];
            let img = ImageBuffer::from_fn(w, h, 1, |u, v, _| (v * w + u) as f32 / (w * h) as f32);
            let out = rotate_flip(&img, rotation, fh, fv);
            for v in 0..h {
                for u in 0..w {
                    let (pu, pv) = rotate_flip_point(u as f64, v as f64, w, h, rotation, fh, fv);
                    prop_assert_eq!(out.get(pu as usize, pv as usize, 0), img.get(u, v, 0));
                }
            }
            let twice = rotate_flip(&rotate_flip(&img, Rotation::R0, fh, fv), Rotation::R0, fh, fv);
            prop_assert_eq!(twice, img);
        }
    }
}
