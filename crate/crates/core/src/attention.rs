//! Human attention maps and assistance levels.
//!
//! Sketched boundary pixels are encoded as 255 and every other pixel as a
//! fixed background value of 10. Assistance is graded from the ratio of
//! sketch length to polygon perimeter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{perimeter, total_perimeter, Point2, Ring};
use crate::raster::{bresenham, dilate_square, encode_gray_png, Raster};

/// Value of pixels on a sketched stroke.
pub const ATTENTION_VALUE: u8 = 255;
/// Value of every pixel away from the strokes.
pub const BACKGROUND_VALUE: u8 = 10;
/// Default brush size in pixels.
pub const DEFAULT_THICKNESS: usize = 1;

/// One pen gesture: an ordered list of points plus its timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub points: Vec<Point2>,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default)]
    pub duration: f64,
}

impl Stroke {
    pub fn new(points: Vec<Point2>, start_time: f64, duration: f64) -> Result<Self> {
        let s = Self { points, start_time, duration };
        s.validate()?;
        Ok(s)
    }

    /// Convenience constructor with zero timing.
    pub fn from_points(points: Vec<Point2>) -> Result<Self> {
        Self::new(points, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Validation("stroke has no points".into()));
        }
        if !self.points.iter().all(Point2::is_finite) {
            return Err(Error::Validation("stroke point is not finite".into()));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::Validation(format!(
                "stroke duration {} must be finite and non-negative",
                self.duration
            )));
        }
        if !self.start_time.is_finite() {
            return Err(Error::Validation("stroke start time is not finite".into()));
        }
        Ok(())
    }

    /// Polyline length; zero for single-point strokes.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

/// Two-valued attention raster with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttentionMap {
    raster: Raster,
}

impl AttentionMap {
    /// Map with no attention pixels.
    pub fn blank(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::argument(format!(
                "attention map dimensions {width}x{height} must be positive"
            )));
        }
        Ok(Self { raster: Raster::filled(width, height, &[BACKGROUND_VALUE]) })
    }

    /// Wraps a raster after checking its value domain.
    pub fn from_raster(raster: Raster) -> Result<Self> {
        if raster.channels() != 1 || raster.width() == 0 || raster.height() == 0 {
            return Err(Error::argument("attention map must be a non-empty single-channel raster"));
        }
        if let Some(v) = raster
            .data()
            .iter()
            .find(|&&v| v != ATTENTION_VALUE && v != BACKGROUND_VALUE)
        {
            return Err(Error::Validation(format!("attention map holds pixel value {v}")));
        }
        Ok(Self { raster })
    }

    pub fn width(&self) -> usize {
        self.raster.width()
    }

    pub fn height(&self) -> usize {
        self.raster.height()
    }

    pub fn data(&self) -> &[u8] {
        self.raster.data()
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.raster.pixel(x, y)[0]
    }

    pub fn attention_count(&self) -> usize {
        self.data().iter().filter(|&&v| v == ATTENTION_VALUE).count()
    }

    /// Marks every pixel of `stroke`'s Bresenham polyline, dilated by a
    /// square brush of side `thickness`. Points are rounded to the nearest
    /// pixel and clamped to the image.
    pub fn draw_stroke(&mut self, stroke: &Stroke, thickness: usize) {
        let (w, h) = (self.width() as i64, self.height() as i64);
        let to_px = |p: &Point2| -> (i64, i64) {
            (
                (p.x.round() as i64).clamp(0, w - 1),
                (p.y.round() as i64).clamp(0, h - 1),
            )
        };
        let pixels: Vec<(i64, i64)> = match stroke.points.as_slice() {
            [] => Vec::new(),
            [p] => vec![to_px(p)],
            pts => pts
                .windows(2)
                .flat_map(|seg| bresenham(to_px(&seg[0]), to_px(&seg[1])))
                .collect(),
        };
        let brush: Vec<(i64, i64)> = dilate_square(thickness).collect();
        for (x, y) in pixels {
            for &(dx, dy) in &brush {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 && px < w && py < h {
                    self.raster.pixel_mut(px as usize, py as usize)[0] = ATTENTION_VALUE;
                }
            }
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_gray_png(&self.raster)
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }
}

/// Attention map file name for an image.
pub fn attention_file_name(image_id: u64) -> String {
    format!("{image_id}_attn.png")
}

/// Rasterises all strokes into one shared attention map.
pub fn rasterize(strokes: &[Stroke], width: usize, height: usize, thickness: usize) -> Result<AttentionMap> {
    if thickness == 0 {
        return Err(Error::argument("stroke thickness must be at least 1"));
    }
    let mut map = AttentionMap::blank(width, height)?;
    for s in strokes {
        map.draw_stroke(s, thickness);
    }
    Ok(map)
}

/// Total polyline length over all strokes.
pub fn sketch_length(strokes: &[Stroke]) -> f64 {
    strokes.iter().map(Stroke::length).sum()
}

/// Sketch length over polygon perimeter. Values above 1 mean redundant
/// over-tracing.
pub fn coverage_ratio(strokes: &[Stroke], ring: &Ring) -> Result<f64> {
    coverage_ratio_for_perimeter(strokes, perimeter(ring))
}

/// Coverage against an object made of several rings.
pub fn coverage_ratio_rings(strokes: &[Stroke], rings: &[Ring]) -> Result<f64> {
    coverage_ratio_for_perimeter(strokes, total_perimeter(rings))
}

fn coverage_ratio_for_perimeter(strokes: &[Stroke], perimeter: f64) -> Result<f64> {
    if !(perimeter > 0.0) {
        return Err(Error::geometry("coverage needs a positive perimeter"));
    }
    Ok(sketch_length(strokes) / perimeter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssistanceClass {
    Minor,
    Medium,
    Major,
}

impl AssistanceClass {
    pub const ALL: [AssistanceClass; 3] = [Self::Minor, Self::Medium, Self::Major];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Minor => "minor",
            Self::Medium => "medium",
            Self::Major => "major",
        }
    }
}

/// Minor below 25%, Medium from 25% to 50% inclusive, Major above 50%.
pub fn classify_assistance(ratio: f64) -> AssistanceClass {
    if ratio < 0.25 {
        AssistanceClass::Minor
    } else if ratio <= 0.50 {
        AssistanceClass::Medium
    } else {
        AssistanceClass::Major
    }
}
