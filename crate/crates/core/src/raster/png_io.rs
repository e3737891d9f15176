use std::io::Cursor;

use super::image::Raster;
use crate::error::{Error, Result};

/// Largest decoded image accepted from untrusted bytes.
pub const MAX_DECODED_BYTES: usize = 64 * 1024 * 1024;

fn encode(raster: &Raster, color: png::ColorType) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, raster.width() as u32, raster.height() as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(raster.data())
            .map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(buf)
}

/// Encodes a single-channel raster as 8-bit grayscale PNG.
pub fn encode_gray_png(raster: &Raster) -> Result<Vec<u8>> {
    if raster.channels() != 1 {
        return Err(Error::argument("grayscale PNG needs a one-channel raster"));
    }
    encode(raster, png::ColorType::Grayscale)
}

pub fn encode_rgb_png(raster: &Raster) -> Result<Vec<u8>> {
    if raster.channels() != 3 {
        return Err(Error::argument("RGB PNG needs a three-channel raster"));
    }
    encode(raster, png::ColorType::Rgb)
}

/// Decodes an 8-bit grayscale PNG. Other colour types and depths are
/// rejected rather than converted.
pub fn decode_gray_png(bytes: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    decoder.set_limits(png::Limits { bytes: MAX_DECODED_BYTES });
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Unsupported(format!(
            "expected 8-bit grayscale PNG, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .filter(|&n| n <= MAX_DECODED_BYTES)
        .ok_or_else(|| Error::Png(format!("{w}x{h} image exceeds the decode limit")))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    if frame.line_size != w {
        return Err(Error::Png("unexpected row stride".into()));
    }
    Raster::from_vec(w, h, 1, buf)
}
