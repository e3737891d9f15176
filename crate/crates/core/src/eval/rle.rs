//! COCO run-length encoding. Runs alternate background/foreground starting
//! with background and walk the image in column-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// `counts` either as a plain list or as the compact COCO string form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RleCounts {
    List(Vec<u64>),
    Compact(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`.
    pub size: [u64; 2],
    pub counts: RleCounts,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse { offset, message: message.into() }
}

/// Decodes the compact string form into run lengths.
pub fn decode_counts_string(s: &str) -> Result<Vec<u64>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0u32;
        loop {
            let b = *bytes.get(p).ok_or_else(|| parse_err(p, "unterminated run in RLE string"))?;
            if !(48..48 + 64).contains(&b) {
                return Err(parse_err(p, format!("byte {b:#x} outside the RLE alphabet")));
            }
            if k >= 12 {
                return Err(parse_err(p, "RLE run value too long"));
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        if counts.len() > 2 {
            x = x
                .checked_add(counts[counts.len() - 2])
                .ok_or_else(|| parse_err(p, "RLE run overflow"))?;
        }
        if x < 0 {
            return Err(parse_err(p, "negative RLE run"));
        }
        counts.push(x);
    }
    Ok(counts.into_iter().map(|c| c as u64).collect())
}

/// Encodes run lengths into the compact string form.
pub fn encode_counts_string(counts: &[u64]) -> String {
    let mut out = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        let mut more = true;
        while more {
            let mut c = (x & 0x1f) as u8;
            x >>= 5;
            more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                c |= 0x20;
            }
            out.push(c + 48);
        }
    }
    String::from_utf8(out).expect("ascii")
}

impl Rle {
    pub fn counts(&self) -> Result<Vec<u64>> {
        match &self.counts {
            RleCounts::List(v) => Ok(v.clone()),
            RleCounts::Compact(s) => decode_counts_string(s),
        }
    }

    pub fn to_mask(&self) -> Result<BinaryMask> {
        let [h, w] = self.size;
        let total = h
            .checked_mul(w)
            .filter(|&t| t <= 1 << 28)
            .ok_or_else(|| Error::argument("RLE size too large"))?;
        let counts = self.counts()?;
        let sum = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::argument("RLE counts overflow"))?;
        if sum != total {
            return Err(Error::argument(format!("RLE counts sum to {sum}, image has {total} pixels")));
        }
        let (h, w) = (h as usize, w as usize);
        let mut mask = BinaryMask::new(w, h);
        let mut pos = 0usize;
        for (i, &c) in counts.iter().enumerate() {
            let c = c as usize;
            if i % 2 == 1 {
                for k in pos..pos + c {
                    mask.set(k / h, k % h, true);
                }
            }
            pos += c;
        }
        Ok(mask)
    }

    pub fn from_mask(mask: &BinaryMask) -> Rle {
        let (w, h) = (mask.width(), mask.height());
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for x in 0..w {
            for y in 0..h {
                let v = mask.get(x, y);
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle { size: [h as u64, w as u64], counts: RleCounts::Compact(encode_counts_string(&counts)) }
    }
}
