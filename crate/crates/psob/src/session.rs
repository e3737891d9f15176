//! Annotation sessions: one image, an optional ground-truth outline and the
//! strokes drawn so far.

use psob_core::attention::{
    classify_assistance, coverage_ratio_rings, rasterize, sketch_length, AssistanceClass, AttentionMap, Stroke,
    DEFAULT_THICKNESS,
};
use psob_core::dataset::{classify_scale, BBox, Category, DatasetSplit, Extra, ImageInfo, AnnotationRecord, ScaleClass};
use psob_core::eval::mask_iou;
use psob_core::geometry::{
    classify_curvature, curvature_count, curvature_points, point_segment_distance, total_area, total_perimeter,
    CurvatureClass, Point2, Ring,
};
use psob_core::raster::fill_rings;
use psob_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// A retained curvature vertex counts as covered when a stroke passes
/// within this many pixels.
pub const COVER_RADIUS: f64 = 5.0;

/// Largest image a session accepts, in pixels.
pub const MAX_IMAGE_PIXELS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRef {
    #[serde(default = "default_image_id")]
    pub id: u64,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn default_image_id() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryRef {
    pub id: u64,
    pub name: String,
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    pub image: ImageRef,
    /// Flat `[x0, y0, x1, y1, ...]` rings.
    #[serde(default)]
    pub ground_truth: Vec<Vec<f64>>,
    #[serde(default)]
    pub category: Option<CategoryRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub image: ImageRef,
    pub ground_truth: Vec<Ring>,
    pub category: CategoryRef,
    strokes: Vec<Stroke>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlineSource {
    GroundTruth,
    StrokeClosure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureMark {
    pub x: f64,
    pub y: f64,
    pub covered: bool,
}

/// Classifications of a session. `preview_iou` compares the closed stroke
/// polyline with the ground truth; it is a sketch preview, not a model
/// prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub empty: bool,
    pub stroke_count: usize,
    pub sketch_length: f64,
    pub outline: Option<OutlineSource>,
    pub curvature_count: Option<usize>,
    pub curvature_class: Option<CurvatureClass>,
    pub perimeter: Option<f64>,
    pub area: Option<f64>,
    pub scale_class: Option<ScaleClass>,
    pub coverage_ratio: Option<f64>,
    pub assistance_class: Option<AssistanceClass>,
    pub curvature_points: Vec<CurvatureMark>,
    pub preview_iou: Option<f64>,
}

impl Session {
    pub fn new(id: String, spec: NewSession) -> Result<Self> {
        if spec.image.width == 0 || spec.image.height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive".into()));
        }
        if spec.image.width as u64 * spec.image.height as u64 > MAX_IMAGE_PIXELS {
            return Err(Error::InvalidArgument(format!(
                "image {}x{} exceeds {MAX_IMAGE_PIXELS} pixels",
                spec.image.width, spec.image.height
            )));
        }
        let ground_truth = spec
            .ground_truth
            .iter()
            .map(|flat| Ring::from_flat(flat))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id,
            image: spec.image,
            ground_truth,
            category: spec.category.unwrap_or(CategoryRef { id: 1, name: "object".into() }),
            strokes: Vec::new(),
        })
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    fn dims(&self) -> (usize, usize) {
        (self.image.width as usize, self.image.height as usize)
    }

    /// Appends a stroke. Start times may not go backwards.
    pub fn add_stroke(&mut self, stroke: Stroke) -> Result<usize> {
        stroke.validate()?;
        if let Some(last) = self.strokes.last() {
            if stroke.start_time < last.start_time {
                return Err(Error::Validation(format!(
                    "stroke starts at {} before the previous stroke ({})",
                    stroke.start_time, last.start_time
                )));
            }
        }
        self.strokes.push(stroke);
        Ok(self.strokes.len())
    }

    pub fn attention_map(&self) -> Result<AttentionMap> {
        let (w, h) = self.dims();
        rasterize(&self.strokes, w, h, DEFAULT_THICKNESS)
    }

    /// All stroke points joined in drawing order and closed, when that gives
    /// a valid ring.
    pub fn stroke_closure(&self) -> Option<Ring> {
        let mut pts: Vec<Point2> = Vec::new();
        for p in self.strokes.iter().flat_map(|s| &s.points) {
            if pts.last() != Some(p) {
                pts.push(*p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        Ring::new(pts).ok()
    }

    pub fn analysis(&self) -> Analysis {
        let closure = self.stroke_closure();
        let (outline, rings): (Option<OutlineSource>, Vec<Ring>) = if !self.ground_truth.is_empty() {
            (Some(OutlineSource::GroundTruth), self.ground_truth.clone())
        } else if let Some(c) = &closure {
            (Some(OutlineSource::StrokeClosure), vec![c.clone()])
        } else {
            (None, Vec::new())
        };
        let mut a = Analysis {
            empty: self.strokes.is_empty() && self.ground_truth.is_empty(),
            stroke_count: self.strokes.len(),
            sketch_length: sketch_length(&self.strokes),
            outline,
            curvature_count: None,
            curvature_class: None,
            perimeter: None,
            area: None,
            scale_class: None,
            coverage_ratio: None,
            assistance_class: None,
            curvature_points: Vec::new(),
            preview_iou: None,
        };
        if rings.is_empty() {
            return a;
        }
        let count = curvature_count(&rings);
        let area = total_area(&rings);
        a.curvature_count = Some(count);
        a.curvature_class = Some(classify_curvature(count));
        a.perimeter = Some(total_perimeter(&rings));
        a.area = Some(area);
        a.scale_class = Some(classify_scale(area));
        if self.ground_truth.is_empty() {
            return a;
        }
        if let Ok(ratio) = coverage_ratio_rings(&self.strokes, &self.ground_truth) {
            a.coverage_ratio = Some(ratio);
            a.assistance_class = Some(classify_assistance(ratio));
        }
        a.curvature_points = self
            .ground_truth
            .iter()
            .flat_map(|r| curvature_points(r).points)
            .map(|p| CurvatureMark { x: p.x, y: p.y, covered: self.near_stroke(&p) })
            .collect();
        if let Some(c) = &closure {
            let (w, h) = self.dims();
            a.preview_iou = mask_iou(&fill_rings(std::slice::from_ref(c), w, h), &fill_rings(&self.ground_truth, w, h)).ok();
        }
        a
    }

    fn near_stroke(&self, p: &Point2) -> bool {
        self.strokes.iter().any(|s| match s.points.as_slice() {
            [only] => only.distance(p) <= COVER_RADIUS,
            pts => pts.windows(2).any(|w| point_segment_distance(p, &w[0], &w[1]) <= COVER_RADIUS),
        })
    }

    /// The session as a one-image split. The outline is the ground truth when
    /// present, otherwise the stroke closure.
    pub fn export(&self) -> Result<DatasetSplit> {
        let rings = if !self.ground_truth.is_empty() {
            self.ground_truth.clone()
        } else {
            vec![self
                .stroke_closure()
                .ok_or_else(|| Error::Validation("session has no outline to export".into()))?]
        };
        let bbox = BBox::of_rings(&rings).ok_or_else(|| Error::Validation("empty outline".into()))?;
        let sketch_time: f64 = self.strokes.iter().map(|s| s.duration).sum();
        let span = match (
            self.strokes.iter().map(|s| s.start_time).reduce(f64::min),
            self.strokes.iter().map(|s| s.start_time + s.duration).reduce(f64::max),
        ) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        let mut extra = Extra::new();
        extra.insert("iscrowd".into(), 0.into());
        let split = DatasetSplit {
            name: None,
            images: vec![ImageInfo {
                id: self.image.id,
                file_name: self.image.path.clone().unwrap_or_else(|| format!("{}.png", self.image.id)),
                width: self.image.width,
                height: self.image.height,
                extra: Extra::new(),
            }],
            annotations: vec![AnnotationRecord {
                id: 1,
                image_id: self.image.id,
                category_id: self.category.id,
                bbox,
                rings,
                strokes: self.strokes.clone(),
                interaction_time: span.max(sketch_time),
                sketch_time,
                extra,
            }],
            categories: vec![Category { id: self.category.id, name: self.category.name.clone(), extra: Extra::new() }],
            extra: Extra::new(),
        };
        split.validate()?;
        Ok(split)
    }
}
