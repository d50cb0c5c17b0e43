//! Equivariance properties of the polar resampling.

use fundus_screen::geometry::{
    apply_polar_jitter, inverse_polar_transform, polar_transform, ImageBuffer, PolarJitter,
    PolarParams, Rotation,
};

pub fn textured(w: usize, h: usize, du: i64, dv: i64) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, 3, |u, v, c| {
        let (x, y) = ((u as i64 - du) as f32, (v as i64 - dv) as f32);
        0.5 + 0.25 * (x * 0.31 + c as f32).sin() * (y * 0.17).cos() + 0.2 * ((x + y) * 0.05).sin()
    })
}

fn max_abs_diff(a: &ImageBuffer, b: &ImageBuffer) -> f32 {
    a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

/// Worst deviation between the polar image at `φ + m s` and the `φ`
/// image circularly shifted by `m` columns, over several `m`.
pub fn angle_shift_deviation() -> f32 {
    let img = textured(96, 96, 0, 0);
    let base = PolarParams {
        angle_offset: 0.2,
        ..PolarParams::new(47.3, 45.8, 40.0, 256)
    };
    let reference = polar_transform(&img, &base).unwrap();
    let mut worst = 0.0f32;
    for m in [1usize, 17, 64, 128, 200] {
        let shifted = PolarParams {
            angle_offset: base.angle_offset + m as f64 * base.stride,
            ..base
        };
        let out = polar_transform(&img, &shifted).unwrap();
        let w = reference.width();
        for r in 0..reference.height() {
            for j in 0..w {
                for c in 0..3 {
                    let d = (out.get(j, r, c) - reference.get((j + m) % w, r, c)).abs();
                    worst = worst.max(d);
                }
            }
        }
    }
    // quarter-turn jitter is the same operation expressed through PolarJitter
    let jittered = apply_polar_jitter(
        &img,
        &base,
        &PolarJitter { angle: Rotation::R90, ..Default::default() },
    )
    .unwrap();
    let w = reference.width();
    let shift = ((std::f64::consts::FRAC_PI_2) / base.stride).round() as usize;
    for r in 0..reference.height() {
        for j in 0..w {
            for c in 0..3 {
                worst = worst.max((jittered.get(j, r, c) - reference.get((j + shift) % w, r, c)).abs());
            }
        }
    }
    worst
}

/// Shifting the image and the centre by the same integer offset leaves the
/// polar image unchanged (radius chosen so no sample touches the border).
pub fn center_drift_deviation() -> f32 {
    let base = PolarParams::new(60.4, 58.7, 30.0, 128);
    let reference = polar_transform(&textured(128, 128, 0, 0), &base).unwrap();
    let mut worst = 0.0f32;
    for (du, dv) in [(20i64, 0i64), (-20, 5), (7, -13), (-1, -1), (20, 20)] {
        let img = textured(128, 128, du, dv);
        let params = PolarParams {
            center_u: base.center_u + du as f64,
            center_v: base.center_v + dv as f64,
            ..base
        };
        worst = worst.max(max_abs_diff(&polar_transform(&img, &params).unwrap(), &reference));
    }
    worst
}

/// Mean absolute forward/inverse round-trip error inside `0.9 R`, worst
/// over a few smooth images.
pub fn round_trip_error() -> f64 {
    let (w, h) = (96usize, 96usize);
    let params = PolarParams {
        angle_offset: 0.4,
        ..PolarParams::new(48.0, 47.0, 40.0, 256)
    };
    let images = [
        ImageBuffer::from_fn(w, h, 1, |u, v, _| 0.1 + 0.8 * (u + v) as f32 / (w + h) as f32),
        ImageBuffer::from_fn(w, h, 1, |u, _, _| 0.2 + 0.6 * u as f32 / w as f32),
        ImageBuffer::from_fn(w, h, 3, |u, v, c| {
            0.5 + 0.3 * ((u as f32) / 13.0 + c as f32).sin() * ((v as f32) / 17.0).cos()
        }),
    ];
    let mut worst = 0.0f64;
    for img in &images {
        let polar = polar_transform(img, &params).unwrap();
        let back = inverse_polar_transform(&polar, &params, w, h).unwrap();
        let (mut sum, mut n) = (0.0f64, 0usize);
        for v in 0..h {
            for u in 0..w {
                let r = (u as f64 - params.center_u).hypot(v as f64 - params.center_v);
                if r <= 0.9 * params.radius {
                    for c in 0..img.channels() {
                        sum += (img.get(u, v, c) - back.get(u, v, c)).abs() as f64;
                        n += 1;
                    }
                }
            }
        }
        worst = worst.max(sum / n as f64);
    }
    worst
}
