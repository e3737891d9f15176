use crate::error::{Error, Result};

/// Interleaved 8-bit raster with `channels` samples per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Self {
        let channels = pixel.len();
        let mut data = Vec::with_capacity(width * height * channels);
        for _ in 0..width * height {
            data.extend_from_slice(pixel);
        }
        Self { width, height, channels, data }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels == 0 || data.len() != width * height * channels {
            return Err(Error::argument(format!(
                "raster buffer of {} bytes does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let o = (y * self.width + x) * self.channels;
        &mut self.data[o..o + self.channels]
    }

    pub fn flip_horizontal(&self) -> Raster {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.pixel_mut(self.width - 1 - x, y)
                    .copy_from_slice(self.pixel(x, y));
            }
        }
        out
    }

    /// Nearest-neighbour resize where destination pixel `d` samples source
    /// coordinate `d / scale`. Never introduces new sample values.
    pub fn resize_nearest(&self, width: usize, height: usize, scale: f64) -> Result<Raster> {
        check_resize(width, height, scale)?;
        let mut out = Raster::filled(width, height, &vec![0; self.channels]);
        let xs: Vec<usize> = (0..width)
            .map(|x| source_index(x, scale, self.width))
            .collect();
        for y in 0..height {
            let sy = source_index(y, scale, self.height);
            for (x, &sx) in xs.iter().enumerate() {
                out.pixel_mut(x, y).copy_from_slice(self.pixel(sx, sy));
            }
        }
        Ok(out)
    }

    /// Bilinear resize with the same coordinate mapping as [`Self::resize_nearest`].
    pub fn resize_bilinear(&self, width: usize, height: usize, scale: f64) -> Result<Raster> {
        check_resize(width, height, scale)?;
        let c = self.channels;
        let mut out = Raster::filled(width, height, &vec![0; c]);
        let taps = |d: usize, len: usize| -> (usize, usize, f64) {
            let s = (d as f64 / scale).clamp(0.0, (len - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            (lo, hi, s - lo as f64)
        };
        let xtaps: Vec<_> = (0..width).map(|x| taps(x, self.width)).collect();
        for y in 0..height {
            let (y0, y1, fy) = taps(y, self.height);
            for (x, &(x0, x1, fx)) in xtaps.iter().enumerate() {
                for k in 0..c {
                    let p00 = self.pixel(x0, y0)[k] as f64;
                    let p10 = self.pixel(x1, y0)[k] as f64;
                    let p01 = self.pixel(x0, y1)[k] as f64;
                    let p11 = self.pixel(x1, y1)[k] as f64;
                    let top = p00 + (p10 - p00) * fx;
                    let bottom = p01 + (p11 - p01) * fx;
                    let v = top + (bottom - top) * fy;
                    out.pixel_mut(x, y)[k] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        Ok(out)
    }

    /// Window of `width` x `height` starting at source pixel `(x0, y0)`;
    /// pixels outside the source take `fill`.
    pub fn crop_pad(&self, x0: usize, y0: usize, width: usize, height: usize, fill: &[u8]) -> Raster {
        assert_eq!(fill.len(), self.channels);
        let mut out = Raster::filled(width, height, fill);
        for y in 0..height {
            let sy = y0 + y;
            if sy >= self.height {
                break;
            }
            for x in 0..width {
                let sx = x0 + x;
                if sx >= self.width {
                    break;
                }
                out.pixel_mut(x, y).copy_from_slice(self.pixel(sx, sy));
            }
        }
        out
    }
}

fn check_resize(width: usize, height: usize, scale: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::argument("resize target has a zero dimension"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::argument(format!("resize scale {scale} must be positive")));
    }
    Ok(())
}

fn source_index(d: usize, scale: f64, len: usize) -> usize {
    ((d as f64 / scale).round().max(0.0) as usize).min(len - 1)
}

/// Binary mask, one byte per pixel holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height] }
    }

    /// Any nonzero byte of a single-channel raster becomes set.
    pub fn from_raster(raster: &Raster) -> Result<Self> {
        if raster.channels() != 1 {
            return Err(Error::argument("mask raster must have one channel"));
        }
        Ok(Self {
            width: raster.width(),
            height: raster.height(),
            data: raster.data().iter().map(|&v| u8::from(v != 0)).collect(),
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn to_raster(&self) -> Raster {
        Raster::from_vec(self.width, self.height, 1, self.data.clone()).expect("mask dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = u8::from(on);
    }

    pub fn toggle(&mut self, x: usize, y: usize) {
        self.data[y * self.width + x] ^= 1;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// `(|A ∩ B|, |A ∪ B|)`.
    pub fn overlap(&self, other: &BinaryMask) -> (usize, usize) {
        let mut inter = 0;
        let mut union = 0;
        for (a, b) in self.data.iter().zip(&other.data) {
            inter += usize::from(*a != 0 && *b != 0);
            union += usize::from(*a != 0 || *b != 0);
        }
        (inter, union)
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a |= *b;
        }
    }

    pub fn subtract(&mut self, other: &BinaryMask) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if *b != 0 {
                *a = 0;
            }
        }
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }
}
