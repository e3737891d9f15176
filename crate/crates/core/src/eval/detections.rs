//! Building evaluation sets from a split and COCO-results detections.

use serde::Deserialize;
use serde_json::Value;

use super::coco::{Detection, EvalSet, GroundTruth};
use super::region::Region;
use super::rle::Rle;
use crate::attention::{classify_assistance, coverage_ratio_rings};
use crate::dataset::{byte_offset, BBox, DatasetSplit};
use crate::error::{Error, Result};
use crate::geometry::{classify_curvature, curvature_count, Point2, Ring};

fn is_crowd(extra: &crate::dataset::Extra) -> bool {
    match extra.get("iscrowd") {
        Some(Value::Bool(b)) => *b,
        Some(v) => v.as_f64().is_some_and(|x| x != 0.0),
        None => false,
    }
}

/// Ground truth from a validated split; detections start empty.
///
/// Objects flagged `iscrowd` become ignore regions. Assistance class is
/// taken from the recorded strokes and left unset for objects without any.
pub fn eval_set_from_split(split: &DatasetSplit) -> Result<EvalSet> {
    let mut set = EvalSet::default();
    for img in &split.images {
        set.images.insert(img.id, (img.width as usize, img.height as usize));
    }
    for a in &split.annotations {
        let &(w, h) = set.images.get(&a.image_id).ok_or_else(|| {
            Error::Reference(format!("annotation {} references unknown image {}", a.id, a.image_id))
        })?;
        let assistance = if a.strokes.is_empty() {
            None
        } else {
            Some(classify_assistance(coverage_ratio_rings(&a.strokes, &a.rings)?))
        };
        set.ground_truth.push(GroundTruth {
            id: a.id,
            image_id: a.image_id,
            category_id: a.category_id,
            region: Region::from_rings(&a.rings, w, h),
            bbox: a.bbox,
            area: a.area(),
            curvature: classify_curvature(curvature_count(&a.rings)),
            assistance,
            ignore: is_crowd(&a.extra),
        });
    }
    Ok(set)
}

#[derive(Debug, Deserialize)]
struct RawDetection {
    image_id: u64,
    category_id: u64,
    score: f64,
    #[serde(default)]
    segmentation: Option<Value>,
    #[serde(default)]
    bbox: Option<BBox>,
}

fn rect_ring(b: &BBox) -> Result<Ring> {
    Ring::new(vec![
        Point2::new(b.x, b.y),
        Point2::new(b.x + b.w, b.y),
        Point2::new(b.x + b.w, b.y + b.h),
        Point2::new(b.x, b.y + b.h),
    ])
}

fn region_bbox(r: &Region) -> BBox {
    match r.extent() {
        Some((x0, y0, x1, y1)) => BBox::new(x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64),
        None => BBox::new(0.0, 0.0, 0.0, 0.0),
    }
}

fn detection_region(i: usize, seg: &Value, w: usize, h: usize) -> Result<Region> {
    let invalid = |m: String| Error::Validation(format!("detection {i}: {m}"));
    match seg {
        Value::Array(polys) => {
            if polys.is_empty() {
                return Err(invalid("empty segmentation".into()));
            }
            let rings = polys
                .iter()
                .map(|p| {
                    let coords: Vec<f64> = serde_json::from_value(p.clone())
                        .map_err(|_| invalid("polygon must be a list of numbers".into()))?;
                    Ring::from_flat(&coords).map_err(|e| invalid(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Region::from_rings(&rings, w, h))
        }
        Value::Object(_) => {
            let rle: Rle = serde_json::from_value(seg.clone()).map_err(|e| invalid(format!("bad RLE: {e}")))?;
            if rle.size != [h as u64, w as u64] {
                return Err(invalid(format!(
                    "RLE size [{}, {}] does not match image {}x{}",
                    rle.size[0], rle.size[1], w, h
                )));
            }
            Ok(Region::from_mask(&rle.to_mask()?))
        }
        _ => Err(invalid("segmentation must be polygons or RLE".into())),
    }
}

/// Parses COCO-results JSON (an array of detections) against the images of
/// `set`. A missing segmentation falls back to the filled bbox; a missing
/// bbox is derived from the mask.
pub fn parse_detections(text: &str, set: &EvalSet) -> Result<Vec<Detection>> {
    let raw: Vec<RawDetection> = serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(i, d)| {
            let &(w, h) = set.images.get(&d.image_id).ok_or_else(|| {
                Error::Reference(format!("detection {i} references unknown image {}", d.image_id))
            })?;
            if !(0.0..=1.0).contains(&d.score) {
                return Err(Error::Validation(format!("detection {i}: score {} outside [0, 1]", d.score)));
            }
            if let Some(b) = &d.bbox {
                let ok = [b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) && b.w >= 0.0 && b.h >= 0.0;
                if !ok {
                    return Err(Error::Validation(format!("detection {i}: invalid bbox")));
                }
            }
            let (region, bbox) = match (&d.segmentation, d.bbox) {
                (Some(seg), bbox) => {
                    let region = detection_region(i, seg, w, h)?;
                    let bbox = bbox.unwrap_or_else(|| region_bbox(&region));
                    (region, bbox)
                }
                (None, Some(b)) => {
                    let region = if b.w > 0.0 && b.h > 0.0 {
                        Region::from_rings(&[rect_ring(&b)?], w, h)
                    } else {
                        Region::empty()
                    };
                    (region, b)
                }
                (None, None) => {
                    return Err(Error::Validation(format!("detection {i}: needs a segmentation or a bbox")))
                }
            };
            Ok(Detection {
                image_id: d.image_id,
                category_id: d.category_id,
                score: d.score,
                region,
                bbox,
            })
        })
        .collect()
}
