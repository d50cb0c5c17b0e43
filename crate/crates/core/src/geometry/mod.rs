//! Raster images and the geometric operations applied to them.
//!
//! Pixel centres sit at integer coordinates: `u` is the column, `v` the
//! row. Samples that fall outside the image read as `0.0`.

mod polar;
mod transform;

pub use polar::{
    apply_polar_jitter, inverse_polar_transform, polar_augment, polar_transform, PolarJitter,
    PolarJitterRange, PolarParams,
};
pub use transform::{crop, resize, rotate_flip, rotate_flip_point, Rotation};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Fill value for samples outside the image.
pub const FILL: f32 = 0.0;

/// A grayscale or RGB raster with values in `[0, 1]`, row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{width}x{height}x{channels} image needs {} values, got {}",
                width * height * channels,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(
            width,
            height,
            channels,
            vec![value.clamp(0.0, 1.0); width * height * channels],
        )
        .expect("valid dimensions")
    }

    /// Builds an image from a per-pixel function of `(u, v, channel)`;
    /// values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut pixels = Vec::with_capacity(width * height * channels);
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    pixels.push(f(u, v, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, pixels).expect("valid dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, u: usize, v: usize, c: usize) -> f32 {
        self.pixels[(v * self.width + u) * self.channels + c]
    }

    pub fn set(&mut self, u: usize, v: usize, c: usize, value: f32) {
        self.pixels[(v * self.width + u) * self.channels + c] = value.clamp(0.0, 1.0);
    }

    fn get_or_fill(&self, u: isize, v: isize, c: usize) -> f32 {
        if u < 0 || v < 0 || u >= self.width as isize || v >= self.height as isize {
            FILL
        } else {
            self.get(u as usize, v as usize, c)
        }
    }

    /// Bilinear sample at a fractional position; neighbours outside the
    /// image contribute the fill value.
    pub fn sample_bilinear(&self, u: f64, v: f64, c: usize) -> f32 {
        let (u0, v0) = (u.floor(), v.floor());
        let (fu, fv) = (u - u0, v - v0);
        let (iu, iv) = (u0 as isize, v0 as isize);
        let p00 = self.get_or_fill(iu, iv, c) as f64;
        let p01 = self.get_or_fill(iu + 1, iv, c) as f64;
        let p10 = self.get_or_fill(iu, iv + 1, c) as f64;
        let p11 = self.get_or_fill(iu + 1, iv + 1, c) as f64;
        let top = p00 + (p01 - p00) * fu;
        let bottom = p10 + (p11 - p10) * fu;
        (top + (bottom - top) * fv) as f32
    }

    /// Single-channel view: the mean over colour channels.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let pixels = self
            .pixels
            .chunks(self.channels)
            .map(|px| px.iter().sum::<f32>() / self.channels as f32)
            .collect();
        ImageBuffer::new(self.width, self.height, 1, pixels).expect("same dimensions")
    }

    /// Planar `[C, H, W]` tensor, the network input layout.
    pub fn to_tensor(&self) -> Tensor<f32> {
        let plane = self.width * self.height;
        let mut data = vec![0.0; plane * self.channels];
        for (i, px) in self.pixels.chunks(self.channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * plane + i] = v;
            }
        }
        Tensor::new(&[self.channels, self.height, self.width], data).expect("non-empty image")
    }

    /// Inverse of [`ImageBuffer::to_tensor`]; values are clamped to `[0, 1]`.
    pub fn from_tensor(tensor: &Tensor<f32>) -> Result<Self> {
        let [c, h, w] = *tensor.shape() else {
            return Err(Error::Dimension(format!(
                "expected a [C, H, W] tensor, got {:?}",
                tensor.shape()
            )));
        };
        let plane = h * w;
        Ok(Self::from_fn(w, h, c, |u, v, ch| {
            tensor.data()[ch * plane + v * w + u]
        }))
    }
}
