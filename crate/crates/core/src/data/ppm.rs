//! Binary PPM (P6, 8-bit) images.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ImageBuffer;

/// Encodes as P6; single-channel images are written as gray RGB.
pub fn encode_ppm(image: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    let to_byte = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    out.reserve(image.width() * image.height() * 3);
    for px in image.pixels().chunks(image.channels()) {
        match *px {
            [g] => out.extend([to_byte(g); 3]),
            [r, g, b] => out.extend([to_byte(r), to_byte(g), to_byte(b)]),
            _ => unreachable!("images have 1 or 3 channels"),
        }
    }
    out
}

/// Decodes a P6 image with maxval up to 255 into RGB values in `[0, 1]`.
pub fn decode_ppm(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("PPM header is truncated".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or(""));
    }
    if fields[0] != "P6" {
        return Err(Error::Format(format!("expected a P6 image, found '{}'", fields[0])));
    }
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("PPM {what} '{s}' is not a number")))
    };
    let (w, h, maxval) = (num(fields[1], "width")?, num(fields[2], "height")?, num(fields[3], "maxval")?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("PPM maxval {maxval} is not in 1..=255")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    let len = w * h * 3;
    if data.len() < len {
        return Err(Error::Format(format!(
            "PPM raster holds {} bytes, {w}x{h} needs {len}",
            data.len()
        )));
    }
    let pixels = data[..len].iter().map(|&b| f32::from(b) / maxval as f32).collect();
    ImageBuffer::new(w, h, 3, pixels)
}

pub fn write_ppm(path: impl AsRef<Path>, image: &ImageBuffer) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ppm(image)).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
