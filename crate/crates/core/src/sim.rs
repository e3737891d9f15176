//! Synthetic partial-boundary sketches.
//!
//! Stands in for human annotators: strokes are arcs of the ground-truth
//! boundary centred on the vertices an adaptive RDP pass keeps, visited in
//! descending order of the deviation that kept them. Total sketch length is
//! steered to a target fraction of the perimeter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attention::{sketch_length, Stroke};
use crate::error::{Error, Result};
use crate::geometry::{curvature_points, Point2, Ring};

/// Pen speed in pixels per second that reproduces the training-split
/// averages (about 138 px of sketch in 2.0 s).
pub const DEFAULT_SPEED: f64 = 69.2;
/// Non-drawing time per object in seconds (7.2 s interaction minus 2.0 s
/// sketching on the training split).
pub const DEFAULT_LATENCY: f64 = 5.2;

const FIT_TOLERANCE: f64 = 0.005;
const FIT_ROUNDS: usize = 12;
const GAIN_ROUNDS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub target_coverage: f64,
    /// Perpendicular jitter in pixels. Damped when the zig-zag alone would
    /// overshoot the coverage budget.
    pub jitter_sigma: f64,
    pub seed: u64,
    pub points_per_arc: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { target_coverage: 0.2, jitter_sigma: 0.0, seed: 0, points_per_arc: 16 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target_coverage) {
            return Err(Error::argument(format!(
                "target coverage {} outside [0, 1]",
                self.target_coverage
            )));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::argument("jitter sigma must be finite and non-negative"));
        }
        if self.points_per_arc < 2 {
            return Err(Error::argument("points_per_arc must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchResult {
    pub strokes: Vec<Stroke>,
    /// Set when the ring had fewer than three curvature points and a single
    /// arc from the sharpest vertex was drawn instead.
    pub fallback: bool,
}

/// Arc-length parametrisation of a closed ring.
struct Boundary<'a> {
    pts: &'a [Point2],
    cum: Vec<f64>,
    total: f64,
}

impl<'a> Boundary<'a> {
    fn new(ring: &'a Ring) -> Self {
        let pts = ring.vertices();
        let mut cum = Vec::with_capacity(pts.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for (a, b) in ring.segments() {
            acc += a.distance(&b);
            cum.push(acc);
        }
        Self { pts, cum, total: acc }
    }

    fn n(&self) -> usize {
        self.pts.len()
    }

    fn seg_normal(&self, i: usize) -> Point2 {
        let a = self.pts[i];
        let b = self.pts[(i + 1) % self.n()];
        let d = b.sub(&a);
        let len = d.norm();
        Point2::new(-d.y / len, d.x / len)
    }

    fn vertex_normal(&self, i: usize) -> Point2 {
        let prev = self.seg_normal((i + self.n() - 1) % self.n());
        let next = self.seg_normal(i);
        let sum = prev.add(&next);
        let len = sum.norm();
        if len < 1e-12 {
            next
        } else {
            sum.scale(1.0 / len)
        }
    }

    /// Point and outward-ish normal at arc position `s` (any real).
    fn at(&self, s: f64) -> (Point2, Point2) {
        let s = s.rem_euclid(self.total);
        let seg = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return (self.pts[i % self.n()], self.vertex_normal(i % self.n())),
            Err(i) => i - 1,
        };
        let a = self.pts[seg];
        let b = self.pts[(seg + 1) % self.n()];
        let len = self.cum[seg + 1] - self.cum[seg];
        (a.lerp(&b, (s - self.cum[seg]) / len), self.seg_normal(seg))
    }

    /// Points along the boundary from `s0` to `s1` (`s1 > s0`): `samples`
    /// evenly spaced positions plus every vertex strictly in between.
    fn path(&self, s0: f64, s1: f64, samples: usize) -> Vec<(Point2, Point2)> {
        let mut pos: Vec<f64> = (0..samples)
            .map(|k| s0 + (s1 - s0) * k as f64 / (samples - 1) as f64)
            .collect();
        let laps = (s0 / self.total).floor() as i64;
        for lap in laps..=laps + 2 {
            for i in 0..self.n() {
                let v = self.cum[i] + lap as f64 * self.total;
                if v > s0 && v < s1 {
                    pos.push(v);
                }
            }
        }
        pos.sort_by(f64::total_cmp);
        pos.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        pos.into_iter().map(|s| self.at(s)).collect()
    }
}

fn sharpest_vertex(ring: &Ring) -> usize {
    let pts = ring.vertices();
    let n = pts.len();
    let mut best = 0;
    let mut best_turn = f64::NEG_INFINITY;
    for i in 0..n {
        let din = pts[i].sub(&pts[(i + n - 1) % n]);
        let dout = pts[(i + 1) % n].sub(&pts[i]);
        let turn = din.cross(&dout).atan2(din.dot(&dout)).abs();
        if turn > best_turn {
            best_turn = turn;
            best = i;
        }
    }
    best
}

fn jittered_stroke(path: Vec<(Point2, Point2)>, noise: Option<&Normal<f64>>, gain: f64, rng: &mut ChaCha8Rng) -> Stroke {
    let points = path
        .into_iter()
        .map(|(p, n)| match noise {
            Some(dist) => p.add(&n.scale(gain * dist.sample(rng))),
            None => p,
        })
        .collect();
    Stroke { points, start_time: 0.0, duration: 0.0 }
}

/// Generates strokes for `ring` whose total length approximates
/// `config.target_coverage` times the perimeter. Deterministic per seed.
pub fn simulate_sketch(ring: &Ring, config: &SimConfig) -> Result<SketchResult> {
    config.validate()?;
    if config.target_coverage == 0.0 {
        return Ok(SketchResult { strokes: Vec::new(), fallback: false });
    }
    let boundary = Boundary::new(ring);
    let total = boundary.total;
    let budget = config.target_coverage * total;
    let noise = if config.jitter_sigma > 0.0 {
        Some(Normal::new(0.0, config.jitter_sigma).map_err(|e| Error::argument(e.to_string()))?)
    } else {
        None
    };

    let cp = curvature_points(ring);
    let (centres, arc_count, fallback): (Vec<f64>, usize, bool) = if config.target_coverage >= 1.0 {
        let start = cp.indices[cp.by_deviation()[0]];
        (vec![boundary.cum[start]], 1, false)
    } else if cp.count() < 3 {
        (vec![boundary.cum[sharpest_vertex(ring)]], 1, true)
    } else {
        // arcs no longer than the mean spacing of curvature points
        let k = cp.count();
        let m = ((config.target_coverage * k as f64).ceil() as usize).clamp(1, k);
        let centres = cp.by_deviation()[..m]
            .iter()
            .map(|&o| boundary.cum[cp.indices[o]])
            .collect();
        (centres, m, false)
    };

    let build = |arc_len: f64, gain: f64| -> Vec<Stroke> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        centres
            .iter()
            .map(|&c| {
                let (s0, s1) = if config.target_coverage >= 1.0 {
                    (c, c + total)
                } else if fallback {
                    (c, c + arc_len)
                } else {
                    (c - arc_len / 2.0, c + arc_len / 2.0)
                };
                let path = boundary.path(s0, s1, config.points_per_arc);
                jittered_stroke(path, noise.as_ref(), gain, &mut rng)
            })
            .collect()
    };

    let misfit = |strokes: &[Stroke]| (sketch_length(strokes) - budget) / total;
    let mut arc_len = budget / arc_count as f64;
    let mut strokes = build(arc_len, 1.0);
    if noise.is_some() && config.target_coverage < 1.0 {
        // jitter lengthens strokes; shrink arcs until the total fits
        for _ in 0..FIT_ROUNDS {
            let achieved = sketch_length(&strokes);
            if achieved <= 0.0 || misfit(&strokes).abs() < FIT_TOLERANCE {
                break;
            }
            arc_len = (arc_len * budget / achieved).min(total);
            strokes = build(arc_len, 1.0);
        }
    }
    if noise.is_some() && misfit(&strokes).abs() >= FIT_TOLERANCE {
        // the zig-zag alone exceeds the budget: keep full-length arcs and
        // damp the jitter instead
        arc_len = budget / arc_count as f64;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..GAIN_ROUNDS {
            let mid = 0.5 * (lo + hi);
            if misfit(&build(arc_len, mid)) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        strokes = build(arc_len, lo);
    }
    Ok(SketchResult { strokes, fallback })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedSketch {
    pub strokes: Vec<Stroke>,
    pub sketch_time: f64,
    pub interaction_time: f64,
}

/// Assigns stroke durations from pen `speed` and lays strokes out back to
/// back from t = 0. Interaction time adds `latency` to the sketch time.
pub fn simulate_timing(strokes: &[Stroke], speed: f64, latency: f64) -> Result<TimedSketch> {
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::argument(format!("pen speed {speed} must be positive")));
    }
    if !(latency.is_finite() && latency >= 0.0) {
        return Err(Error::argument("latency must be finite and non-negative"));
    }
    let mut t = 0.0;
    let strokes: Vec<Stroke> = strokes
        .iter()
        .map(|s| {
            let duration = s.length() / speed;
            let timed = Stroke { points: s.points.clone(), start_time: t, duration };
            t += duration;
            timed
        })
        .collect();
    Ok(TimedSketch { strokes, sketch_time: t, interaction_time: t + latency })
}

/// Closest distance from each point of `strokes` to the ring outline.
pub fn max_boundary_distance(strokes: &[Stroke], ring: &Ring) -> f64 {
    strokes
        .iter()
        .flat_map(|s| s.points.iter())
        .map(|p| ring.distance_to_boundary(p))
        .fold(0.0, f64::max)
}
