//! Reference implementations and generators shared by the integration tests.
//! The references are written from the definitions, not from the library
//! code, and favour obviousness over speed.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use psob_core::attention::{rasterize, Stroke};
use psob_core::augment::Sample;
use psob_core::dataset::{AnnotationRecord, BBox, Category, DatasetSplit, ImageInfo, SplitName};
use psob_core::geometry::{Point2, Ring};
use psob_core::raster::{BinaryMask, Raster};
use psob_core::sim::{simulate_sketch, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- geometry

pub fn oracle_perimeter(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % n];
        total += ((x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0)).sqrt();
    }
    total
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 { 0.0 } else { ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Open-chain RDP: returns the positions (within `chain`) that survive,
/// endpoints included.
fn rdp_chain(chain: &[(f64, f64)], eps: f64) -> Vec<usize> {
    let last = chain.len() - 1;
    if last < 2 {
        return (0..=last).collect();
    }
    let mut far = 0;
    let mut dmax = -1.0;
    for k in 1..last {
        let d = seg_dist(chain[k], chain[0], chain[last]);
        if d > dmax {
            dmax = d;
            far = k;
        }
    }
    if dmax <= eps {
        return vec![0, last];
    }
    let mut left = rdp_chain(&chain[..=far], eps);
    let right = rdp_chain(&chain[far..], eps);
    left.pop();
    left.extend(right.into_iter().map(|k| k + far));
    left
}

/// Closed-ring RDP reference: split at the farthest vertex pair (first such
/// pair in index order), simplify both halves, merge. Returns sorted vertex
/// indices.
pub fn oracle_rdp(pts: &[(f64, f64)], eps: f64) -> Vec<usize> {
    let n = pts.len();
    let mut best = (0, 1, -1.0);
    for i in 0..n {
        for j in i + 1..n {
            let d2 = (pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2);
            if d2 > best.2 {
                best = (i, j, d2);
            }
        }
    }
    let (i, j, _) = best;
    let first: Vec<usize> = (i..=j).collect();
    let second: Vec<usize> = (j..n).chain(0..=i).collect();
    let mut kept = BTreeSet::new();
    for half in [first, second] {
        let chain: Vec<(f64, f64)> = half.iter().map(|&k| pts[k]).collect();
        for k in rdp_chain(&chain, eps) {
            kept.insert(half[k]);
        }
    }
    kept.into_iter().collect()
}

/// Random simple ring: star-shaped around the origin with sorted angles.
pub fn random_ring(r: &mut ChaCha8Rng, min_v: usize, max_v: usize, radius: (f64, f64), centre: (f64, f64)) -> Ring {
    loop {
        let n = r.random_range(min_v..=max_v);
        let mut angles: Vec<f64> = (0..n).map(|_| r.random_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let pts: Vec<Point2> = angles
            .iter()
            .map(|&a| {
                let rad = r.random_range(radius.0..radius.1);
                Point2::new(centre.0 + rad * a.cos(), centre.1 + rad * a.sin())
            })
            .collect();
        if let Ok(ring) = Ring::new(pts) {
            if ring.signed_area().abs() > 1.0 {
                return ring;
            }
        }
    }
}

/// Smooth closed outline: a circle of radius `mean` perturbed by three low
/// harmonics of random phase, sampled at `n` evenly spaced angles.
pub fn random_blob(r: &mut ChaCha8Rng, n: usize, mean: f64, centre: (f64, f64)) -> Ring {
    let harmonics: Vec<(f64, f64)> = (1..=3).map(|_| (r.random_range(0.0..0.15), r.random_range(0.0..TAU))).collect();
    let pts = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let k: f64 = harmonics.iter().enumerate().map(|(j, (a, ph))| a * ((j + 1) as f64 * t + ph).cos()).sum();
            let rad = mean * (1.0 + k);
            Point2::new(centre.0 + rad * t.cos(), centre.1 + rad * t.sin())
        })
        .collect();
    Ring::new(pts).unwrap()
}

pub fn xy(ring: &Ring) -> Vec<(f64, f64)> {
    ring.vertices().iter().map(|p| (p.x, p.y)).collect()
}

// ------------------------------------------------------------------ raster

/// Even-odd point-in-polygon over all rings, sampled at the pixel centre.
pub fn oracle_inside(rings: &[Ring], x: f64, y: f64) -> bool {
    let mut inside = false;
    for ring in rings {
        let v = ring.vertices();
        let n = v.len();
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                let xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x < xc {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

pub fn oracle_fill(rings: &[Ring], w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| oracle_inside(rings, x as f64, y as f64))
}

pub fn oracle_iou(a: &BinaryMask, b: &BinaryMask) -> Option<f64> {
    let mut inter = 0usize;
    let mut union = 0usize;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.get(x, y), b.get(x, y));
            inter += (p && q) as usize;
            union += (p || q) as usize;
        }
    }
    (union > 0).then(|| inter as f64 / union as f64)
}

/// Pixels a digital line between two integer points must contain: for
/// every step along the major axis, the pixel nearest the ideal line when
/// that choice is unambiguous.
pub fn required_line_pixels(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut out = vec![a, b];
    if dx.abs() >= dy.abs() {
        if dx == 0 {
            return out;
        }
        let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
        for x in lo.0..=hi.0 {
            let y = lo.1 as f64 + (x - lo.0) as f64 * (hi.1 - lo.1) as f64 / (hi.0 - lo.0) as f64;
            if (y - y.floor() - 0.5).abs() > 1e-9 {
                out.push((x, y.round() as i64));
            }
        }
    } else {
        let (lo, hi) = if a.1 <= b.1 { (a, b) } else { (b, a) };
        for y in lo.1..=hi.1 {
            let x = lo.0 as f64 + (y - lo.1) as f64 * (hi.0 - lo.0) as f64 / (hi.1 - lo.1) as f64;
            if (x - x.floor() - 0.5).abs() > 1e-9 {
                out.push((x.round() as i64, y));
            }
        }
    }
    out
}

/// Stroke point to pixel as the rasteriser documents it: round, then clamp.
pub fn to_pixel(p: &Point2, w: usize, h: usize) -> (i64, i64) {
    (
        (p.x.round() as i64).clamp(0, w as i64 - 1),
        (p.y.round() as i64).clamp(0, h as i64 - 1),
    )
}

pub fn random_strokes(r: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<Stroke> {
    let n = r.random_range(0..5);
    (0..n)
        .map(|_| {
            let k = r.random_range(1..8);
            let pts = (0..k)
                .map(|_| {
                    // occasionally off-image to exercise clamping
                    Point2::new(r.random_range(-5.0..w as f64 + 5.0), r.random_range(-5.0..h as f64 + 5.0))
                })
                .collect();
            Stroke::from_points(pts).unwrap()
        })
        .collect()
}

// -------------------------------------------------------------------- COCO

pub struct OracleGt {
    pub image: usize,
    pub category: u64,
    pub mask: BinaryMask,
}

pub struct OracleDet {
    pub image: usize,
    pub category: u64,
    pub score: f64,
    pub mask: BinaryMask,
}

fn iou_or_zero(a: &BinaryMask, b: &BinaryMask) -> f64 {
    oracle_iou(a, b).unwrap_or(0.0)
}

/// Greedy matching then 101-point interpolated precision, averaged over
/// thresholds and categories with ground truth. Assumes distinct scores,
/// no crowd objects and fewer than 100 detections per image.
pub fn oracle_ap(gts: &[OracleGt], dets: &[OracleDet], thresholds: &[f64]) -> Option<f64> {
    let cats: BTreeSet<u64> = gts.iter().map(|g| g.category).collect();
    let mut curves = Vec::new();
    for &t in thresholds {
        for &c in &cats {
            let npos = gts.iter().filter(|g| g.category == c).count();
            let mut order: Vec<usize> = (0..dets.len()).filter(|&d| dets[d].category == c).collect();
            order.sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap());
            let mut taken = vec![false; gts.len()];
            let mut is_tp = Vec::new();
            for &d in &order {
                let mut best: Option<(usize, f64)> = None;
                for (g, gt) in gts.iter().enumerate() {
                    if gt.category != c || gt.image != dets[d].image || taken[g] {
                        continue;
                    }
                    let iou = iou_or_zero(&dets[d].mask, &gt.mask);
                    if iou >= t && best.is_none_or(|(_, b)| iou >= b) {
                        best = Some((g, iou));
                    }
                }
                if let Some((g, _)) = best {
                    taken[g] = true;
                }
                is_tp.push(best.is_some());
            }
            let mut pr = Vec::new();
            let (mut tp, mut fp) = (0.0, 0.0);
            for &hit in &is_tp {
                if hit {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
                pr.push((tp / npos as f64, tp / (tp + fp)));
            }
            let mut sum = 0.0;
            for k in 0..=100 {
                let r = k as f64 / 100.0;
                sum += pr.iter().filter(|(rc, _)| *rc >= r).map(|(_, p)| *p).fold(0.0, f64::max);
            }
            curves.push(sum / 101.0);
        }
    }
    (!curves.is_empty()).then(|| curves.iter().sum::<f64>() / curves.len() as f64)
}

// ---------------------------------------------------------------- datasets

/// Value with at most three decimals so text round trips are exact.
fn grid(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (r.random_range(lo..hi) * 1000.0).round() / 1000.0
}

pub fn random_split(r: &mut ChaCha8Rng) -> DatasetSplit {
    let n_img = r.random_range(1..4);
    let images: Vec<ImageInfo> = (0..n_img)
        .map(|i| ImageInfo {
            id: i as u64 + 1,
            file_name: format!("img_{i}.png"),
            width: r.random_range(64..512),
            height: r.random_range(64..512),
            extra: Default::default(),
        })
        .collect();
    let categories = vec![
        Category { id: 1, name: "cup".into(), extra: Default::default() },
        Category { id: 7, name: "dog".into(), extra: Default::default() },
    ];
    let n_ann = r.random_range(0..6);
    let annotations = (0..n_ann)
        .map(|k| {
            let img = &images[r.random_range(0..images.len())];
            let n_rings = r.random_range(1..3);
            let rings: Vec<Ring> = (0..n_rings)
                .map(|_| loop {
                    let n = r.random_range(3..9);
                    let pts: Vec<Point2> = (0..n)
                        .map(|_| Point2::new(grid(r, 0.0, img.width as f64), grid(r, 0.0, img.height as f64)))
                        .collect();
                    if let Ok(ring) = Ring::new(pts) {
                        break ring;
                    }
                })
                .collect();
            let b = BBox::of_rings(&rings).unwrap();
            let snap = |v: f64| (v * 1000.0).round() / 1000.0;
            let bbox = BBox::new(b.x, b.y, snap(b.w).max(1.0), snap(b.h).max(1.0));
            let strokes = (0..r.random_range(0..3))
                .map(|_| {
                    let pts = (0..r.random_range(1..5))
                        .map(|_| Point2::new(grid(r, 0.0, 64.0), grid(r, 0.0, 64.0)))
                        .collect();
                    Stroke::new(pts, grid(r, 0.0, 10.0), grid(r, 0.0, 3.0)).unwrap()
                })
                .collect();
            let sketch_time = grid(r, 0.0, 5.0);
            AnnotationRecord {
                id: k as u64 + 100,
                image_id: img.id,
                category_id: if r.random_bool(0.5) { 1 } else { 7 },
                bbox,
                rings,
                strokes,
                interaction_time: ((sketch_time + grid(r, 0.0, 5.0)) * 1000.0).round() / 1000.0,
                sketch_time,
                extra: Default::default(),
            }
        })
        .collect();
    let name = [None, Some(SplitName::Train), Some(SplitName::Validation), Some(SplitName::Test)][r.random_range(0..4)];
    DatasetSplit { name, images, annotations, categories, extra: Default::default() }
}

/// Random RGB image with 1 to 4 smooth blob objects sketched by the
/// simulator and a matching attention map.
pub fn blob_sample(r: &mut ChaCha8Rng, id: u64) -> Sample {
    let (w, h) = (r.random_range(150..320), r.random_range(150..320));
    let data = (0..w * h * 3).map(|_| r.random::<u8>()).collect();
    let mut annotations = Vec::new();
    for k in 0..r.random_range(1..=4) {
        let mean = r.random_range(20.0..60.0);
        let centre = (r.random_range(mean..w as f64 - mean), r.random_range(mean..h as f64 - mean));
        let n = r.random_range(16..48);
        let ring = random_blob(r, n, mean, centre);
        let strokes = simulate_sketch(&ring, &SimConfig { seed: r.random(), ..Default::default() }).unwrap().strokes;
        annotations.push(AnnotationRecord {
            id: id * 10 + k,
            image_id: id,
            category_id: 1,
            bbox: BBox::of_rings(std::slice::from_ref(&ring)).unwrap(),
            rings: vec![ring],
            strokes,
            interaction_time: 0.0,
            sketch_time: 0.0,
            extra: Default::default(),
        });
    }
    let strokes: Vec<_> = annotations.iter().flat_map(|a| a.strokes.clone()).collect();
    Sample {
        image_id: id,
        image: Raster::from_vec(w, h, 3, data).unwrap(),
        attention: rasterize(&strokes, w, h, 1).unwrap(),
        annotations,
    }
}
