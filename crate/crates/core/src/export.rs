//! PNG frames and animated GIF episodes.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::gif::{GifEncoder, Repeat};
use image::{Delay, Frame, Rgb, RgbImage, RgbaImage};

use crate::env::Observation;
use crate::error::{Error, Result};

/// Playback rate of exported episodes.
pub const GIF_FPS: u32 = 10;

fn to_image(obs: &Observation, scale: u32) -> Result<RgbImage> {
    let base = RgbImage::from_raw(obs.width as u32, obs.height as u32, obs.pixels.clone())
        .ok_or_else(|| Error::Format("observation buffer has the wrong length".into()))?;
    if scale <= 1 {
        return Ok(base);
    }
    let (w, h) = (base.width() * scale, base.height() * scale);
    Ok(RgbImage::from_fn(w, h, |x, y| *base.get_pixel(x / scale, y / scale)))
}

/// Writes one frame as PNG, each pixel repeated `scale` times per axis.
pub fn write_png(obs: &Observation, path: impl AsRef<Path>, scale: u32) -> Result<()> {
    to_image(obs, scale)?.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

/// Writes the frames as a looping GIF at [`GIF_FPS`].
pub fn write_gif(frames: &[Observation], path: impl AsRef<Path>, scale: u32) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = GifEncoder::new(file);
    encoder.set_repeat(Repeat::Infinite)?;
    let delay = Delay::from_numer_denom_ms(1000, GIF_FPS);
    for obs in frames {
        let rgb = to_image(obs, scale)?;
        let rgba = RgbaImage::from_fn(rgb.width(), rgb.height(), |x, y| {
            let Rgb([r, g, b]) = *rgb.get_pixel(x, y);
            image::Rgba([r, g, b, 255])
        });
        encoder.encode_frame(Frame::from_parts(rgba, 0, 0, delay))?;
    }
    Ok(())
}
