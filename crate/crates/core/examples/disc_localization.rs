//! Locates the disc in a probability map: threshold, largest connected
//! component, centre and diameter mapped back to image coordinates, and the
//! crop fed to the disc and polar streams.

use fundus_screen::data::{generate_sample, SyntheticSpec};
use fundus_screen::geometry::resize;
use fundus_screen::localization::{crop_for_streams, locate_disc, DEFAULT_CROP_RATIO};
use fundus_screen::tensor::Tensor;

fn main() -> fundus_screen::Result<()> {
    let sample = generate_sample(&SyntheticSpec::default(), 3)?;
    let side = sample.image.width();
    // The true mask at a quarter of the resolution stands in for a network map,
    // plus a small false blob that the component filter removes.
    let small = resize(&sample.mask, side / 4, side / 4)?;
    let mut map: Vec<f32> = small.pixels().to_vec();
    map[2 * (side / 4) + 2] = 0.9;
    let map = Tensor::new(&[side / 4, side / 4], map)?;

    let loc = locate_disc(&map, 4.0)?;
    println!(
        "located centre ({:.1}, {:.1}) diameter {:.1}; true centre ({:.1}, {:.1}) diameter {:.1}",
        loc.center_u,
        loc.center_v,
        loc.diameter,
        sample.disc_center.0,
        sample.disc_center.1,
        2.0 * sample.disc_radius
    );
    let crop = crop_for_streams(&sample.image, &loc, DEFAULT_CROP_RATIO)?;
    println!("stream crop {}x{}", crop.width(), crop.height());
    Ok(())
}
