//! Joint augmentation of image, attention map and annotations: random
//! horizontal flip, large-scale jitter, fixed-size crop and simple
//! copy-paste.
//!
//! Coordinates follow the raster convention used throughout the crate:
//! pixel `(i, j)` is centred on `(i, j)`, so a flip maps `x` to `W - 1 - x`
//! and a resize by `s` maps destination pixel `d` to source `d / s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{AttentionMap, Stroke, BACKGROUND_VALUE};
use crate::dataset::{AnnotationRecord, BBox};
use crate::error::{Error, Result};
use crate::geometry::{total_area, Point2, Ring};
use crate::raster::{fill_rings, trace_contours, BinaryMask, Raster};

/// Image padding value used by the crop.
pub const IMAGE_PAD_VALUE: u8 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugConfig {
    pub flip_prob: f64,
    pub jitter_range: (f64, f64),
    /// `(width, height)`.
    pub target_size: (usize, usize),
    pub seed: u64,
    pub copy_paste: bool,
    /// Chance that each partner object is pasted.
    pub paste_prob: f64,
}

impl Default for AugConfig {
    fn default() -> Self {
        Self {
            flip_prob: 0.5,
            jitter_range: (0.1, 2.0),
            target_size: (1024, 1024),
            seed: 0,
            copy_paste: true,
            paste_prob: 0.5,
        }
    }
}

impl AugConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.flip_prob) || !prob(self.paste_prob) {
            return Err(Error::argument("flip_prob and paste_prob must lie in [0, 1]"));
        }
        let (lo, hi) = self.jitter_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::argument(format!("jitter_range ({lo}, {hi}) needs 0 < min <= max")));
        }
        if self.target_size.0 == 0 || self.target_size.1 == 0 {
            return Err(Error::argument("target_size has a zero dimension"));
        }
        Ok(())
    }
}

/// One image with its attention map and annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image_id: u64,
    /// RGB raster.
    pub image: Raster,
    pub attention: AttentionMap,
    pub annotations: Vec<AnnotationRecord>,
}

impl Sample {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    fn check_dims(&self) -> Result<()> {
        if self.attention.width() != self.width() || self.attention.height() != self.height() {
            return Err(Error::argument(format!(
                "image {}x{} and attention map {}x{} differ",
                self.width(),
                self.height(),
                self.attention.width(),
                self.attention.height()
            )));
        }
        Ok(())
    }
}

/// Parameters drawn for one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugTrace {
    pub flipped: bool,
    pub scale: f64,
    /// Dimensions after jitter, before the crop.
    pub scaled_size: (usize, usize),
    /// Crop window origin in the jittered image.
    pub crop_origin: (usize, usize),
    /// Index of the copy-paste partner in the batch.
    pub partner: Option<usize>,
    /// Ids of the partner annotations that were pasted.
    pub pasted: Vec<u64>,
}

fn map_strokes(strokes: &[Stroke], f: impl Fn(Point2) -> Point2) -> Vec<Stroke> {
    strokes
        .iter()
        .map(|s| Stroke {
            points: s.points.iter().map(|&p| f(p)).collect(),
            ..s.clone()
        })
        .collect()
}

fn map_annotation(a: &AnnotationRecord, bbox: BBox, f: impl Fn(Point2) -> Point2 + Copy) -> Result<AnnotationRecord> {
    Ok(AnnotationRecord {
        bbox,
        rings: a.rings.iter().map(|r| r.map(f)).collect::<Result<_>>()?,
        strokes: map_strokes(&a.strokes, f),
        ..a.clone()
    })
}

/// Mirrors everything horizontally.
pub fn flip(sample: &Sample) -> Result<Sample> {
    sample.check_dims()?;
    let w = sample.width() as f64;
    let f = move |p: Point2| Point2::new(w - 1.0 - p.x, p.y);
    Ok(Sample {
        image_id: sample.image_id,
        image: sample.image.flip_horizontal(),
        attention: AttentionMap::from_raster(sample.attention.raster().flip_horizontal())?,
        annotations: sample
            .annotations
            .iter()
            .map(|a| {
                let b = a.bbox;
                map_annotation(a, BBox::new(w - 1.0 - b.x - b.w, b.y, b.w, b.h), f)
            })
            .collect::<Result<_>>()?,
    })
}

/// Flips with probability `flip_prob`.
pub fn random_flip<R: Rng>(sample: &Sample, config: &AugConfig, rng: &mut R) -> Result<(Sample, bool)> {
    let flipped = rng.random::<f64>() < config.flip_prob;
    Ok((if flipped { flip(sample)? } else { sample.clone() }, flipped))
}

/// Output dimensions for a resize by `s`.
pub fn scaled_dims(width: usize, height: usize, s: f64) -> Result<(usize, usize)> {
    let w = (width as f64 * s).round();
    let h = (height as f64 * s).round();
    if !(w >= 1.0 && h >= 1.0) {
        return Err(Error::argument(format!("scaling {width}x{height} by {s} gives an empty image")));
    }
    Ok((w as usize, h as usize))
}

/// Resizes by `s`: bilinear for the image, nearest for the attention map so
/// it stays two-valued.
pub fn rescale(sample: &Sample, s: f64) -> Result<Sample> {
    sample.check_dims()?;
    let (w, h) = scaled_dims(sample.width(), sample.height(), s)?;
    let f = move |p: Point2| p.scale(s);
    Ok(Sample {
        image_id: sample.image_id,
        image: sample.image.resize_bilinear(w, h, s)?,
        attention: AttentionMap::from_raster(sample.attention.raster().resize_nearest(w, h, s)?)?,
        annotations: sample
            .annotations
            .iter()
            .map(|a| {
                let b = a.bbox;
                map_annotation(a, BBox::new(b.x * s, b.y * s, b.w * s, b.h * s), f)
            })
            .collect::<Result<_>>()?,
    })
}

/// Draws `s` uniformly from the jitter range and rescales.
pub fn large_scale_jitter<R: Rng>(sample: &Sample, config: &AugConfig, rng: &mut R) -> Result<(Sample, f64)> {
    let (lo, hi) = config.jitter_range;
    let s = rng.random_range(lo..=hi);
    Ok((rescale(sample, s)?, s))
}

#[derive(Debug, Clone, Copy)]
struct Window {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Window {
    fn contains(&self, p: &Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// Sutherland-Hodgman clip of a ring against an axis-aligned window.
fn clip_ring(ring: &Ring, win: Window) -> Option<Ring> {
    // (axis, bound, keep-greater)
    let edges = [(0, win.x0, true), (0, win.x1, false), (1, win.y0, true), (1, win.y1, false)];
    let mut poly: Vec<Point2> = ring.vertices().to_vec();
    for (axis, bound, greater) in edges {
        if poly.is_empty() {
            break;
        }
        let coord = |p: &Point2| if axis == 0 { p.x } else { p.y };
        let inside = |p: &Point2| if greater { coord(p) >= bound } else { coord(p) <= bound };
        let mut out = Vec::with_capacity(poly.len() + 4);
        for i in 0..poly.len() {
            let cur = poly[i];
            let prev = poly[(i + poly.len() - 1) % poly.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - coord(&prev)) / (coord(&cur) - coord(&prev));
                let mut q = prev.lerp(&cur, t);
                if axis == 0 {
                    q.x = bound;
                } else {
                    q.y = bound;
                }
                out.push(q);
            }
            if ci {
                out.push(cur);
            }
        }
        poly = out;
    }
    poly.dedup();
    while poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
    let ring = Ring::new(poly).ok()?;
    (ring.signed_area().abs() > 0.0).then_some(ring)
}

/// Clips a polyline to the window, splitting it where it leaves. Timing is
/// shared out in proportion to length.
fn clip_stroke(stroke: &Stroke, win: Window) -> Vec<Stroke> {
    let pts = &stroke.points;
    if pts.len() == 1 {
        return if win.contains(&pts[0]) { vec![stroke.clone()] } else { Vec::new() };
    }
    let total = stroke.length();
    let mut pieces: Vec<(Vec<Point2>, f64, f64)> = Vec::new(); // points, start arc, end arc
    let mut arc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(&b);
        // Liang-Barsky
        let d = b.sub(&a);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let mut visible = true;
        for (p, q) in [
            (-d.x, a.x - win.x0),
            (d.x, win.x1 - a.x),
            (-d.y, a.y - win.y0),
            (d.y, win.y1 - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    visible = false;
                    break;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if visible && t0 <= t1 {
            let (pa, pb) = (a.lerp(&b, t0), a.lerp(&b, t1));
            match pieces.last_mut() {
                Some((v, _, end)) if t0 == 0.0 && v.last() == Some(&pa) => {
                    v.push(pb);
                    *end = arc + len * t1;
                }
                _ => pieces.push((vec![pa, pb], arc + len * t0, arc + len * t1)),
            }
        }
        arc += len;
    }
    let frac = |x: f64| if total > 0.0 { x / total } else { 0.0 };
    pieces
        .into_iter()
        .map(|(mut points, s, e)| {
            points.dedup();
            Stroke {
                points,
                start_time: stroke.start_time + stroke.duration * frac(s),
                duration: stroke.duration * frac(e - s),
            }
        })
        .collect()
}

/// Cuts a `width` x `height` window at `(x0, y0)`, padding past the image
/// edge. Geometry is clipped to the part of the window covered by the
/// image; annotations left with no area are dropped.
pub fn crop(sample: &Sample, x0: usize, y0: usize, width: usize, height: usize) -> Result<Sample> {
    sample.check_dims()?;
    let image = sample.image.crop_pad(x0, y0, width, height, &vec![IMAGE_PAD_VALUE; sample.image.channels()]);
    let attention = AttentionMap::from_raster(sample.attention.raster().crop_pad(x0, y0, width, height, &[BACKGROUND_VALUE]))?;
    let (dx, dy) = (x0 as f64, y0 as f64);
    let win = Window {
        x0: -0.5,
        y0: -0.5,
        x1: (width.min(sample.width().saturating_sub(x0)) as f64) - 0.5,
        y1: (height.min(sample.height().saturating_sub(y0)) as f64) - 0.5,
    };
    let shift = move |p: Point2| Point2::new(p.x - dx, p.y - dy);
    let mut annotations = Vec::new();
    for a in &sample.annotations {
        let rings: Vec<Ring> = a
            .rings
            .iter()
            .filter_map(|r| clip_ring(&r.map(shift).ok()?, win))
            .collect();
        if rings.is_empty() || total_area(&rings) <= 0.0 {
            continue;
        }
        let strokes = map_strokes(&a.strokes, shift).iter().flat_map(|s| clip_stroke(s, win)).collect();
        annotations.push(AnnotationRecord {
            bbox: BBox::of_rings(&rings).unwrap_or(a.bbox),
            rings,
            strokes,
            ..a.clone()
        });
    }
    Ok(Sample { image_id: sample.image_id, image, attention, annotations })
}

/// Crops to `target_size` at a uniformly drawn origin.
pub fn fixed_size_crop<R: Rng>(sample: &Sample, config: &AugConfig, rng: &mut R) -> Result<(Sample, (usize, usize))> {
    let (tw, th) = config.target_size;
    let x0 = rng.random_range(0..=sample.width().saturating_sub(tw));
    let y0 = rng.random_range(0..=sample.height().saturating_sub(th));
    Ok((crop(sample, x0, y0, tw, th)?, (x0, y0)))
}

/// Pastes a random subset of `b`'s objects onto `a`, each chosen with
/// probability `paste_prob`. Returns the sample and the pasted ids.
pub fn simple_copy_paste(a: &Sample, b: &Sample, seed: u64, paste_prob: f64) -> Result<(Sample, Vec<u64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<&AnnotationRecord> = b.annotations.iter().filter(|_| rng.random::<f64>() < paste_prob).collect();
    paste_objects(a, b, &chosen)
}

/// Pastes the given objects of `b` onto `a`.
pub fn paste_objects(a: &Sample, b: &Sample, chosen: &[&AnnotationRecord]) -> Result<(Sample, Vec<u64>)> {
    a.check_dims()?;
    b.check_dims()?;
    if a.width() != b.width() || a.height() != b.height() || a.image.channels() != b.image.channels() {
        return Err(Error::argument(format!(
            "copy-paste needs equal sizes, got {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = (a.width(), a.height());
    let mut paste = BinaryMask::new(w, h);
    for obj in chosen {
        // union, not parity: overlapping pasted objects must not cancel
        paste.union_with(&fill_rings(&obj.rings, w, h));
    }
    let mut out = a.clone();
    if chosen.is_empty() {
        return Ok((out, Vec::new()));
    }
    let mut att = a.attention.raster().clone();
    for (x, y) in paste.iter_set() {
        out.image.pixel_mut(x, y).copy_from_slice(b.image.pixel(x, y));
        att.pixel_mut(x, y)[0] = b.attention.get(x, y);
    }
    out.attention = AttentionMap::from_raster(att)?;

    let mut annotations = Vec::new();
    for ann in &a.annotations {
        let mut mask = fill_rings(&ann.rings, w, h);
        let (overlap, _) = mask.overlap(&paste);
        if overlap == 0 {
            annotations.push(ann.clone());
            continue;
        }
        mask.subtract(&paste);
        if mask.is_empty() {
            continue;
        }
        let rings = trace_contours(&mask);
        annotations.push(AnnotationRecord {
            bbox: BBox::of_rings(&rings).unwrap_or(ann.bbox),
            rings,
            ..ann.clone()
        });
    }
    let mut pasted = Vec::new();
    for obj in chosen {
        pasted.push(obj.id);
        annotations.push(AnnotationRecord { image_id: a.image_id, ..(*obj).clone() });
    }
    out.annotations = annotations;
    Ok((out, pasted))
}

/// Flip, jitter and crop with draws from `rng`.
pub fn augment_sample<R: Rng>(sample: &Sample, config: &AugConfig, rng: &mut R) -> Result<(Sample, AugTrace)> {
    let (s, flipped) = random_flip(sample, config, rng)?;
    let (s, scale) = large_scale_jitter(&s, config, rng)?;
    let scaled_size = (s.width(), s.height());
    let (s, crop_origin) = fixed_size_crop(&s, config, rng)?;
    Ok((s, AugTrace { flipped, scale, scaled_size, crop_origin, partner: None, pasted: Vec::new() }))
}

/// Splitmix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` under `root`.
pub fn sample_seed(root: u64, index: usize) -> u64 {
    splitmix64(root.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Runs the pipeline over a batch. Sample `i` gets its own seed, so the
/// result does not depend on thread count. With copy-paste enabled and at
/// least two samples, sample `i` receives objects from augmented sample
/// `(i + 1) % n`.
pub fn augment_batch(samples: &[Sample], config: &AugConfig) -> Result<Vec<(Sample, AugTrace)>> {
    config.validate()?;
    let stage: Vec<(Sample, AugTrace, u64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.seed, i));
            let (out, trace) = augment_sample(s, config, &mut rng)?;
            Ok((out, trace, rng.random::<u64>()))
        })
        .collect::<Result<_>>()?;
    let n = stage.len();
    if !config.copy_paste || n < 2 {
        return Ok(stage.into_iter().map(|(s, t, _)| (s, t)).collect());
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let j = (i + 1) % n;
            let (a, trace, seed) = &stage[i];
            let (out, pasted) = simple_copy_paste(a, &stage[j].0, *seed, config.paste_prob)?;
            Ok((out, AugTrace { partner: Some(j), pasted, ..trace.clone() }))
        })
        .collect()
}
