//! Four-channel network inputs: RGB plus the attention map, normalised per
//! channel, and widening of a pre-trained 3-channel stem convolution to 4
//! input channels.

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attention::AttentionMap;
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Stem convolution shape `(out, in, kh, kw)` before widening.
pub const STEM_DIMS_RGB: [usize; 4] = [64, 3, 7, 7];
/// Upper bound (exclusive) of the attention-channel initial weights.
pub const ATTENTION_WEIGHT_MAX: f64 = 0.001;

const HEADER_LEN: usize = 16;

/// Per-channel normalisation statistics for (R, G, B, attention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

impl Default for NormStats {
    fn default() -> Self {
        default_norm_stats()
    }
}

/// ImageNet RGB statistics extended with mean 0.5 and std 0.2 for the
/// attention channel.
pub fn default_norm_stats() -> NormStats {
    NormStats {
        mean: [0.485, 0.456, 0.406, 0.5],
        std: [0.229, 0.224, 0.225, 0.2],
    }
}

impl NormStats {
    pub fn validate(&self) -> Result<()> {
        if self.std.iter().all(|s| s.is_finite() && *s > 0.0) && self.mean.iter().all(|m| m.is_finite()) {
            Ok(())
        } else {
            Err(Error::argument("normalisation std must be positive and all stats finite"))
        }
    }

    /// Byte value to normalised float for channel `c`.
    pub fn normalize(&self, c: usize, byte: u8) -> f32 {
        ((byte as f64 / 255.0 - self.mean[c]) / self.std[c]) as f32
    }

    /// Inverse of [`Self::normalize`], rounded back to a byte.
    pub fn denormalize(&self, c: usize, value: f32) -> u8 {
        ((value as f64 * self.std[c] + self.mean[c]) * 255.0)
            .round()
            .clamp(0.0, 255.0) as u8
    }
}

/// Height x width x 4 float tensor, channels last.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTensor {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl InputTensor {
    pub fn at(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 4 + c]
    }
}

/// Concatenates an RGB image with its attention map and normalises each
/// channel: bytes are scaled to [0, 1], then `(v - mean) / std`.
pub fn assemble_input(image: &Raster, map: &AttentionMap, stats: &NormStats) -> Result<InputTensor> {
    stats.validate()?;
    if image.channels() != 3 {
        return Err(Error::argument(format!("image has {} channels, expected 3", image.channels())));
    }
    if image.width() != map.width() || image.height() != map.height() {
        return Err(Error::argument(format!(
            "image {}x{} and attention map {}x{} differ",
            image.width(),
            image.height(),
            map.width(),
            map.height()
        )));
    }
    let mut data = Vec::with_capacity(image.width() * image.height() * 4);
    for (rgb, &attn) in image.data().chunks_exact(3).zip(map.data()) {
        for (c, &v) in rgb.iter().enumerate() {
            data.push(stats.normalize(c, v));
        }
        data.push(stats.normalize(3, attn));
    }
    Ok(InputTensor { height: image.height(), width: image.width(), data })
}

/// Dense 4-d float tensor, row-major over `(out, in, kh, kw)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f32>,
}

impl Tensor4 {
    pub fn new(dims: [usize; 4], data: Vec<f32>) -> Result<Self> {
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::argument("tensor dims overflow"))?;
        if data.len() != len {
            return Err(Error::argument(format!(
                "tensor data has {} values, dims {:?} need {len}",
                data.len(),
                dims
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("tensor holds a non-finite value"));
        }
        Ok(Self { dims, data })
    }

    pub fn filled(dims: [usize; 4], value: f32) -> Self {
        Self::new(dims, vec![value; dims.iter().product()]).expect("consistent dims")
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn offset(&self, o: usize, i: usize, y: usize, x: usize) -> usize {
        ((o * self.dims[1] + i) * self.dims[2] + y) * self.dims[3] + x
    }

    pub fn get(&self, o: usize, i: usize, y: usize, x: usize) -> f32 {
        self.data[self.offset(o, i, y, x)]
    }

    /// Little-endian file form: four `u32` dims then `f32` values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let parse_err = |offset: usize, message: &str| Error::Parse { offset, message: message.into() };
        if bytes.len() < HEADER_LEN {
            return Err(parse_err(bytes.len(), "truncated tensor header"));
        }
        let mut dims = [0usize; 4];
        for (k, d) in dims.iter_mut().enumerate() {
            let raw: [u8; 4] = bytes[k * 4..k * 4 + 4].try_into().expect("4 bytes");
            *d = u32::from_le_bytes(raw) as usize;
        }
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| parse_err(0, "tensor dims overflow"))?;
        let body = &bytes[HEADER_LEN..];
        if Some(body.len()) != count.checked_mul(4) {
            return Err(parse_err(
                HEADER_LEN + body.len().min(count.saturating_mul(4)),
                "tensor body length does not match its dims",
            ));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Tensor4::new(dims, data)
    }
}

/// Widens a `(64, 3, 7, 7)` stem to `(64, 4, 7, 7)`. RGB weights are copied
/// bit for bit; attention weights are drawn i.i.d. from the open interval
/// (0, 0.001). Deterministic per seed.
pub fn adapt_first_conv(weights: &Tensor4, seed: u64) -> Result<Tensor4> {
    if weights.dims() != STEM_DIMS_RGB {
        return Err(Error::argument(format!(
            "stem weights have dims {:?}, expected {:?}",
            weights.dims(),
            STEM_DIMS_RGB
        )));
    }
    let [out_c, in_c, kh, kw] = STEM_DIMS_RGB;
    let plane = kh * kw;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = || loop {
        let u: f64 = Open01.sample(&mut rng);
        let v = (u * ATTENTION_WEIGHT_MAX) as f32;
        // f32 rounding can land on either bound
        if v > 0.0 && (v as f64) < ATTENTION_WEIGHT_MAX {
            return v;
        }
    };
    let mut data = Vec::with_capacity(out_c * (in_c + 1) * plane);
    for o in 0..out_c {
        let start = o * in_c * plane;
        data.extend_from_slice(&weights.data()[start..start + in_c * plane]);
        data.extend((0..plane).map(|_| sample()));
    }
    Tensor4::new([out_c, in_c + 1, kh, kw], data)
}
