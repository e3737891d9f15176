//! Polygon measurement, adaptive Ramer-Douglas-Peucker simplification and
//! curvature classification.
//!
//! Rings are closed: the last vertex connects back to the first. The RDP
//! tolerance used for curvature counting is 3% of the ring perimeter, so the
//! count is independent of the object's scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the perimeter used as the RDP tolerance.
pub const EPSILON_PERIMETER_FRACTION: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(&self, other: &Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(&self, other: &Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(&self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(&self, other: &Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(&self, other: &Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Linear interpolation from `self` (t = 0) to `other` (t = 1).
    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let ab = b.sub(a);
    let len_sq = ab.dot(&ab);
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    p.distance(&a.lerp(b, t))
}

/// Closed polygon boundary in pixel coordinates.
///
/// At least three vertices, all finite, no two consecutive vertices equal
/// (including the closing pair last/first).
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point2>,
}

impl Ring {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::geometry(format!(
                "ring needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::geometry(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::geometry(format!(
                    "consecutive duplicate vertices at {} and {}",
                    i,
                    (i + 1) % n
                )));
            }
        }
        Ok(Self { vertices })
    }

    /// Builds a ring from a COCO-style flat `[x1, y1, x2, y2, ...]` list.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() % 2 != 0 {
            return Err(Error::geometry(format!(
                "flat polygon has odd coordinate count {}",
                coords.len()
            )));
        }
        Ring::new(
            coords
                .chunks_exact(2)
                .map(|c| Point2::new(c[0], c[1]))
                .collect(),
        )
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    /// Iterates over the `n` boundary segments, closing segment included.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> Result<Ring> {
        Ring::new(self.vertices.iter().map(|p| f(*p)).collect())
    }

    /// Shoelace area with sign (positive for counter-clockwise in a y-up frame).
    pub fn signed_area(&self) -> f64 {
        0.5 * self.segments().map(|(a, b)| a.cross(&b)).sum::<f64>()
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Closest distance from `p` to the ring outline.
    pub fn distance_to_boundary(&self, p: &Point2) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sum of the Euclidean lengths of all segments, closing segment included.
pub fn perimeter(ring: &Ring) -> f64 {
    ring.segments().map(|(a, b)| a.distance(&b)).sum()
}

/// RDP tolerance for `ring`: 3% of its perimeter.
pub fn adaptive_epsilon(ring: &Ring) -> f64 {
    EPSILON_PERIMETER_FRACTION * perimeter(ring)
}

/// Absolute shoelace area.
pub fn area(ring: &Ring) -> f64 {
    ring.signed_area().abs()
}

pub fn total_perimeter(rings: &[Ring]) -> f64 {
    rings.iter().map(perimeter).sum()
}

pub fn total_area(rings: &[Ring]) -> f64 {
    rings.iter().map(area).sum()
}

/// Vertices kept by a closed-ring RDP pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoints {
    /// Indices into the source ring, ascending.
    pub indices: Vec<usize>,
    /// Retained vertices, in source order.
    pub points: Vec<Point2>,
    /// Deviation that caused each vertex to be kept. The two anchor vertices
    /// carry `f64::INFINITY`.
    pub deviations: Vec<f64>,
}

impl CurvaturePoints {
    pub fn count(&self) -> usize {
        self.indices.len()
    }

    /// The retained vertices as a ring, when at least three survive.
    pub fn to_ring(&self) -> Result<Ring> {
        Ring::new(self.points.clone())
    }

    /// Positions into `indices` ordered by descending deviation, ties by
    /// source index.
    pub fn by_deviation(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.indices.len()).collect();
        order.sort_by(|&a, &b| {
            self.deviations[b]
                .total_cmp(&self.deviations[a])
                .then(self.indices[a].cmp(&self.indices[b]))
        });
        order
    }
}

/// Indices of the two mutually farthest vertices, `i < j`. Ties keep the
/// first pair in lexicographic order.
pub fn farthest_pair(points: &[Point2]) -> (usize, usize) {
    let mut best = (0, 1);
    let mut best_d = f64::NEG_INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].distance(&points[j]);
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    best
}

/// Open-polyline RDP over `chain` (indices into `points`). Pushes kept
/// interior indices together with their deviation; endpoints are not emitted.
fn rdp_open(points: &[Point2], chain: &[usize], epsilon: f64, kept: &mut Vec<(usize, f64)>) {
    if chain.len() < 3 {
        return;
    }
    let a = points[chain[0]];
    let b = points[chain[chain.len() - 1]];
    let mut split = 0;
    let mut dmax = f64::NEG_INFINITY;
    for (k, &idx) in chain.iter().enumerate().take(chain.len() - 1).skip(1) {
        let d = point_segment_distance(&points[idx], &a, &b);
        if d > dmax {
            dmax = d;
            split = k;
        }
    }
    if dmax > epsilon {
        rdp_open(points, &chain[..=split], epsilon, kept);
        kept.push((chain[split], dmax));
        rdp_open(points, &chain[split..], epsilon, kept);
    }
}

/// Closed-ring RDP at an explicit tolerance.
///
/// The ring is split at its two mutually farthest vertices; each half is
/// simplified as an open polyline and the halves are merged.
pub fn simplify_ring(ring: &Ring, epsilon: f64) -> CurvaturePoints {
    let pts = ring.vertices();
    let n = pts.len();
    let (i, j) = farthest_pair(pts);

    let mut kept = vec![(i, f64::INFINITY), (j, f64::INFINITY)];
    let first: Vec<usize> = (i..=j).collect();
    let second: Vec<usize> = (j..n).chain(0..=i).collect();
    rdp_open(pts, &first, epsilon, &mut kept);
    rdp_open(pts, &second, epsilon, &mut kept);
    kept.sort_by_key(|&(idx, _)| idx);

    CurvaturePoints {
        indices: kept.iter().map(|&(idx, _)| idx).collect(),
        points: kept.iter().map(|&(idx, _)| pts[idx]).collect(),
        deviations: kept.iter().map(|&(_, d)| d).collect(),
    }
}

/// Closed-ring RDP with the perimeter-adaptive tolerance.
pub fn curvature_points(ring: &Ring) -> CurvaturePoints {
    simplify_ring(ring, adaptive_epsilon(ring))
}

/// Curvature point count summed over rings, each ring with its own tolerance.
pub fn curvature_count(rings: &[Ring]) -> usize {
    rings.iter().map(|r| curvature_points(r).count()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureClass {
    Low,
    Medium,
    High,
}

impl CurvatureClass {
    pub const ALL: [CurvatureClass; 3] = [Self::Low, Self::Medium, Self::High];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

/// Low below six points, Medium for six through ten, High above ten.
pub fn classify_curvature(count: usize) -> CurvatureClass {
    match count {
        0..=5 => CurvatureClass::Low,
        6..=10 => CurvatureClass::Medium,
        _ => CurvatureClass::High,
    }
}
