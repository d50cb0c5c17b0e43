//! Polar resampling of a synthetic fundus image around its disc and the
//! inverse mapping back to Cartesian coordinates.
//!
//! cargo run --example polar_transform -- [out_dir]

use std::path::PathBuf;

use fundus_screen::data::{generate_sample, write_ppm, SyntheticSpec};
use fundus_screen::geometry::{inverse_polar_transform, polar_transform, PolarParams};

fn main() -> fundus_screen::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out).map_err(|e| fundus_screen::Error::Io { path: out.clone(), source: e })?;
    let sample = generate_sample(&SyntheticSpec::default(), 0)?;
    let (cu, cv) = sample.disc_center;
    let params = PolarParams::new(cu, cv, 2.0 * sample.disc_radius, 128);

    let polar = polar_transform(&sample.image, &params)?;
    let rotated = polar_transform(&sample.image, &PolarParams { angle_offset: params.stride * 10.0, ..params })?;
    let side = sample.image.width();
    let back = inverse_polar_transform(&polar, &params, side, side)?;

    let shifted = (0..polar.height()).all(|r| {
        (0..polar.width()).all(|j| (rotated.get(j, r, 0) - polar.get((j + 10) % polar.width(), r, 0)).abs() < 1e-6)
    });
    println!("polar image {}x{}; offset of ten strides = ten-column rotation: {shifted}", polar.width(), polar.height());

    write_ppm(out.join("fundus.ppm"), &sample.image)?;
    write_ppm(out.join("fundus_polar.ppm"), &polar)?;
    write_ppm(out.join("fundus_roundtrip.ppm"), &back)?;
    println!("images written to {}", out.display());
    Ok(())
}
