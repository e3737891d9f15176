//! PSOB records: COCO/LVIS-compatible JSON plus per-annotation strokes and
//! timings.
//!
//! Loading validates the whole split (ids, references, geometry, timing).
//! Fields the model does not know about are kept and written back
//! unchanged. Saving produces canonical JSON so that `load(save(s)) == s`.

mod canonical;
mod stats;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use canonical::{byte_offset, to_canonical_string, FLOAT_DECIMALS};
pub use stats::{corpus_stats, CorpusStats};

use crate::attention::Stroke;
use crate::error::{Error, Result};
use crate::geometry::{total_area, Ring};

/// Tolerance, in pixels, for ring vertices lying outside their bbox.
pub const BBOX_TOLERANCE: f64 = 1.0;

pub type Extra = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleClass {
    Small,
    Medium,
    Large,
}

impl ScaleClass {
    pub const ALL: [ScaleClass; 3] = [Self::Small, Self::Medium, Self::Large];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Small => "small",
            Self::Medium => "medium",
            Self::Large => "large",
        }
    }
}

pub const SMALL_AREA_LIMIT: f64 = 32.0 * 32.0;
pub const LARGE_AREA_LIMIT: f64 = 96.0 * 96.0;

/// Small below 32², Medium in [32², 96²), Large from 96².
pub fn classify_scale(area: f64) -> ScaleClass {
    if area < SMALL_AREA_LIMIT {
        ScaleClass::Small
    } else if area < LARGE_AREA_LIMIT {
        ScaleClass::Medium
    } else {
        ScaleClass::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: u64,
    pub name: String,
    #[serde(flatten)]
    pub extra: Extra,
}

/// Axis-aligned box `(x, y, w, h)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Tight box around all ring vertices.
    pub fn of_rings(rings: &[Ring]) -> Option<BBox> {
        let mut it = rings.iter().map(Ring::bounds);
        let (mut lo, mut hi) = it.next()?;
        for (l, h) in it {
            lo.x = lo.x.min(l.x);
            lo.y = lo.y.min(l.y);
            hi.x = hi.x.max(h.x);
            hi.y = hi.y.max(h.y);
        }
        Some(BBox::new(lo.x, lo.y, hi.x - lo.x, hi.y - lo.y))
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        let inter = ix.max(0.0) * iy.max(0.0);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// One annotated object with its partial sketch.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub rings: Vec<Ring>,
    pub strokes: Vec<Stroke>,
    pub interaction_time: f64,
    pub sketch_time: f64,
    pub extra: Extra,
}

impl AnnotationRecord {
    /// Sum of absolute ring areas.
    pub fn area(&self) -> f64 {
        total_area(&self.rings)
    }

    pub fn scale(&self) -> ScaleClass {
        classify_scale(self.area())
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.id;
        let b = &self.bbox;
        if ![b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) || !(b.w > 0.0 && b.h > 0.0) {
            return Err(Error::Validation(format!(
                "annotation {id}: bbox [{}, {}, {}, {}] needs positive width and height",
                b.x, b.y, b.w, b.h
            )));
        }
        if self.rings.is_empty() {
            return Err(Error::Validation(format!("annotation {id}: no polygon rings")));
        }
        for p in self.rings.iter().flat_map(|r| r.vertices()) {
            if p.x < b.x - BBOX_TOLERANCE
                || p.y < b.y - BBOX_TOLERANCE
                || p.x > b.x + b.w + BBOX_TOLERANCE
                || p.y > b.y + b.h + BBOX_TOLERANCE
            {
                return Err(Error::Validation(format!(
                    "annotation {id}: vertex ({}, {}) lies outside its bbox",
                    p.x, p.y
                )));
            }
        }
        for s in &self.strokes {
            s.validate()
                .map_err(|e| Error::Validation(format!("annotation {id}: {e}")))?;
        }
        let times_ok = self.sketch_time.is_finite()
            && self.interaction_time.is_finite()
            && self.sketch_time >= 0.0
            && self.sketch_time <= self.interaction_time;
        if !times_ok {
            return Err(Error::Validation(format!(
                "annotation {id}: need 0 <= sketch_time ({}) <= interaction_time ({})",
                self.sketch_time, self.interaction_time
            )));
        }
        Ok(())
    }
}

/// Wire form of an annotation. `area` is derived and never stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: BBox,
    segmentation: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    area: Option<f64>,
    #[serde(default)]
    strokes: Vec<Stroke>,
    #[serde(default)]
    interaction_time: f64,
    #[serde(default)]
    sketch_time: f64,
    #[serde(flatten)]
    extra: Extra,
}

fn parse_segmentation(id: u64, seg: &Value) -> Result<Vec<Ring>> {
    let polys = match seg {
        Value::Array(polys) => polys,
        Value::Object(_) => {
            return Err(Error::Unsupported(format!(
                "annotation {id}: RLE segmentation is not supported for ground truth"
            )))
        }
        _ => {
            return Err(Error::Validation(format!(
                "annotation {id}: segmentation must be a list of polygons"
            )))
        }
    };
    polys
        .iter()
        .map(|poly| {
            let coords: Vec<f64> = poly
                .as_array()
                .ok_or_else(|| Error::Validation(format!("annotation {id}: polygon is not a list")))?
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::Validation(format!("annotation {id}: non-numeric coordinate")))
                })
                .collect::<Result<_>>()?;
            Ring::from_flat(&coords).map_err(|e| Error::Validation(format!("annotation {id}: {e}")))
        })
        .collect()
}

impl TryFrom<RawAnnotation> for AnnotationRecord {
    type Error = Error;

    fn try_from(raw: RawAnnotation) -> Result<Self> {
        let rings = parse_segmentation(raw.id, &raw.segmentation)?;
        let rec = AnnotationRecord {
            id: raw.id,
            image_id: raw.image_id,
            category_id: raw.category_id,
            bbox: raw.bbox,
            rings,
            strokes: raw.strokes,
            interaction_time: raw.interaction_time,
            sketch_time: raw.sketch_time,
            extra: raw.extra,
        };
        rec.validate()?;
        Ok(rec)
    }
}

impl From<&AnnotationRecord> for RawAnnotation {
    fn from(a: &AnnotationRecord) -> Self {
        RawAnnotation {
            id: a.id,
            image_id: a.image_id,
            category_id: a.category_id,
            bbox: a.bbox,
            segmentation: Value::Array(
                a.rings
                    .iter()
                    .map(|r| Value::Array(r.to_flat().into_iter().map(Value::from).collect()))
                    .collect(),
            ),
            area: Some(a.area()),
            strokes: a.strokes.clone(),
            interaction_time: a.interaction_time,
            sketch_time: a.sketch_time,
            extra: a.extra.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSplit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitName>,
    #[serde(default)]
    images: Vec<ImageInfo>,
    #[serde(default)]
    annotations: Vec<RawAnnotation>,
    #[serde(default)]
    categories: Vec<Category>,
    #[serde(flatten)]
    extra: Extra,
}

/// A validated split: images, categories and annotations with resolvable
/// references.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: Option<SplitName>,
    pub images: Vec<ImageInfo>,
    pub annotations: Vec<AnnotationRecord>,
    pub categories: Vec<Category>,
    pub extra: Extra,
}

fn check_unique(kind: &str, ids: impl Iterator<Item = u64>) -> Result<HashSet<u64>> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!("duplicate {kind} id {id}")));
        }
    }
    Ok(seen)
}

impl DatasetSplit {
    pub fn empty(name: Option<SplitName>) -> Self {
        Self { name, images: Vec::new(), annotations: Vec::new(), categories: Vec::new(), extra: Extra::new() }
    }

    /// Checks id uniqueness, references, image sizes and every annotation.
    pub fn validate(&self) -> Result<()> {
        let images = check_unique("image", self.images.iter().map(|i| i.id))?;
        let cats = check_unique("category", self.categories.iter().map(|c| c.id))?;
        check_unique("annotation", self.annotations.iter().map(|a| a.id))?;
        for img in &self.images {
            if img.width == 0 || img.height == 0 {
                return Err(Error::Validation(format!("image {} has a zero dimension", img.id)));
            }
        }
        for a in &self.annotations {
            if !images.contains(&a.image_id) {
                return Err(Error::Reference(format!(
                    "annotation {} references missing image {}",
                    a.id, a.image_id
                )));
            }
            if !cats.contains(&a.category_id) {
                return Err(Error::Reference(format!(
                    "annotation {} references missing category {}",
                    a.id, a.category_id
                )));
            }
            a.validate()?;
        }
        Ok(())
    }

    pub fn image(&self, id: u64) -> Option<&ImageInfo> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn annotations_for(&self, image_id: u64) -> impl Iterator<Item = &AnnotationRecord> {
        self.annotations.iter().filter(move |a| a.image_id == image_id)
    }

    /// Parses and validates a split from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawSplit = serde_json::from_str(text).map_err(|e| Error::Parse {
            offset: byte_offset(text, e.line(), e.column()),
            message: e.to_string(),
        })?;
        let split = DatasetSplit {
            name: raw.split,
            images: raw.images,
            annotations: raw
                .annotations
                .into_iter()
                .map(AnnotationRecord::try_from)
                .collect::<Result<_>>()?,
            categories: raw.categories,
            extra: raw.extra,
        };
        split.validate()?;
        Ok(split)
    }

    /// Like [`Self::from_json_str`] for raw bytes; invalid UTF-8 is a parse
    /// error at the first bad byte.
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
            offset: e.valid_up_to(),
            message: "invalid UTF-8".into(),
        })?;
        Self::from_json_str(text)
    }

    pub fn to_value(&self) -> Value {
        let raw = RawSplit {
            split: self.name,
            images: self.images.clone(),
            annotations: self.annotations.iter().map(RawAnnotation::from).collect(),
            categories: self.categories.clone(),
            extra: self.extra.clone(),
        };
        serde_json::to_value(raw).expect("split serialises")
    }

    /// Canonical JSON text.
    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(&self.to_value())
    }
}

pub fn load_split(path: impl AsRef<Path>) -> Result<DatasetSplit> {
    let bytes = std::fs::read(path)?;
    DatasetSplit::from_json_bytes(&bytes)
}

pub fn save_split(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<()> {
    split.validate()?;
    let mut text = split.to_canonical_json();
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// A single image with one annotation, as exported by an annotation
/// session. Loads as a regular split when wrapped by [`Fragment::into_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub image: ImageInfo,
    pub annotation: AnnotationRecord,
    pub category: Category,
}

impl Fragment {
    pub fn into_split(self) -> DatasetSplit {
        DatasetSplit {
            name: None,
            images: vec![self.image],
            annotations: vec![self.annotation],
            categories: vec![self.category],
            extra: Extra::new(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("image".into(), serde_json::to_value(&self.image).expect("image"));
        obj.insert(
            "annotation".into(),
            serde_json::to_value(RawAnnotation::from(&self.annotation)).expect("annotation"),
        );
        obj.insert("category".into(), serde_json::to_value(&self.category).expect("category"));
        to_canonical_string(&Value::Object(obj))
    }
}
