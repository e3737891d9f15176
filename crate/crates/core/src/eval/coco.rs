//! COCO-protocol average precision.
//!
//! Detections are matched greedily in descending score order at each IoU
//! threshold in 0.50:0.05:0.95; precision is interpolated at 101 recall
//! points and averaged over thresholds and categories. Strata (scale,
//! curvature, assistance) are evaluated by marking out-of-stratum ground
//! truth as ignore regions.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::region::Region;
use crate::attention::AssistanceClass;
use crate::dataset::{classify_scale, BBox, ScaleClass};
use crate::error::{Error, Result};
use crate::geometry::CurvatureClass;

pub const IOU_THRESHOLD_COUNT: usize = 10;
pub const RECALL_POINTS: usize = 101;
pub const MAX_DETECTIONS: usize = 100;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_thresholds() -> [f64; IOU_THRESHOLD_COUNT] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

fn recall_thresholds() -> [f64; RECALL_POINTS] {
    std::array::from_fn(|i| i as f64 / 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub region: Region,
    pub bbox: BBox,
    /// Polygon area, used for the scale class.
    pub area: f64,
    pub curvature: CurvatureClass,
    /// `None` when no sketch information exists.
    pub assistance: Option<AssistanceClass>,
    /// Crowd or otherwise excluded objects.
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: u64,
    pub category_id: u64,
    pub score: f64,
    pub region: Region,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IouType {
    Segm,
    Bbox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    All,
    Scale(ScaleClass),
    Curvature(CurvatureClass),
    Assistance(AssistanceClass),
}

impl Stratum {
    fn admits(&self, gt: &GroundTruth) -> bool {
        match *self {
            Stratum::All => true,
            Stratum::Scale(s) => classify_scale(gt.area) == s,
            Stratum::Curvature(c) => gt.curvature == c,
            Stratum::Assistance(a) => gt.assistance == Some(a),
        }
    }
}

/// Images (id to width/height), ground truth and detections.
#[derive(Debug, Clone, Default)]
pub struct EvalSet {
    pub images: BTreeMap<u64, (usize, usize)>,
    pub ground_truth: Vec<GroundTruth>,
    pub detections: Vec<Detection>,
}

/// AP family for one stratum. `None` marks a stratum without ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApResult {
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
}

struct Group {
    gts: Vec<usize>,
    /// Detection indices, score-descending, at most `MAX_DETECTIONS`.
    dets: Vec<usize>,
    /// `ious[type][d][g]`.
    ious: [Vec<Vec<f64>>; 2],
}

/// Matching state of one (image, category) group at one threshold.
struct Matched {
    matched: Vec<bool>,
    ignored: Vec<bool>,
}

/// Precomputed per-group IoUs, reusable across strata.
pub struct CocoEvaluator<'a> {
    set: &'a EvalSet,
    categories: Vec<u64>,
    groups: BTreeMap<(u64, u64), Group>,
}

fn score_order(set: &EvalSet, mut dets: Vec<usize>) -> Vec<usize> {
    // stable: equal scores keep input order
    dets.sort_by(|&a, &b| set.detections[b].score.total_cmp(&set.detections[a].score));
    dets.truncate(MAX_DETECTIONS);
    dets
}

impl<'a> CocoEvaluator<'a> {
    pub fn new(set: &'a EvalSet) -> Result<Self> {
        for d in &set.detections {
            if !set.images.contains_key(&d.image_id) {
                return Err(Error::Reference(format!(
                    "detection references unknown image {}",
                    d.image_id
                )));
            }
            if !(0.0..=1.0).contains(&d.score) {
                return Err(Error::Validation(format!("detection score {} outside [0, 1]", d.score)));
            }
        }
        for g in &set.ground_truth {
            if !set.images.contains_key(&g.image_id) {
                return Err(Error::Reference(format!(
                    "ground truth {} references unknown image {}",
                    g.id, g.image_id
                )));
            }
        }
        let categories: Vec<u64> = set
            .ground_truth
            .iter()
            .map(|g| g.category_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut members: BTreeMap<(u64, u64), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (i, g) in set.ground_truth.iter().enumerate() {
            members.entry((g.image_id, g.category_id)).or_default().0.push(i);
        }
        for (i, d) in set.detections.iter().enumerate() {
            if categories.binary_search(&d.category_id).is_ok() {
                members.entry((d.image_id, d.category_id)).or_default().1.push(i);
            }
        }
        let groups: BTreeMap<(u64, u64), Group> = members
            .into_par_iter()
            .map(|(key, (gts, dets))| {
                let dets = score_order(set, dets);
                let segm = dets
                    .iter()
                    .map(|&d| {
                        gts.iter()
                            .map(|&g| set.detections[d].region.iou(&set.ground_truth[g].region))
                            .collect()
                    })
                    .collect();
                let bbox = dets
                    .iter()
                    .map(|&d| {
                        gts.iter()
                            .map(|&g| set.detections[d].bbox.iou(&set.ground_truth[g].bbox))
                            .collect()
                    })
                    .collect();
                (key, Group { gts, dets, ious: [segm, bbox] })
            })
            .collect();
        Ok(Self { set, categories, groups })
    }

    fn det_area(&self, d: usize, iou_type: IouType) -> f64 {
        let det = &self.set.detections[d];
        match iou_type {
            IouType::Segm => det.region.area() as f64,
            IouType::Bbox => det.bbox.area(),
        }
    }

    /// Whether an unmatched detection falls outside `stratum` and is ignored.
    fn unmatched_outside(&self, group: &Group, row: &[f64], d: usize, stratum: Stratum, iou_type: IouType) -> bool {
        match stratum {
            Stratum::All => false,
            Stratum::Scale(s) => classify_scale(self.det_area(d, iou_type)) != s,
            Stratum::Curvature(_) | Stratum::Assistance(_) => {
                // attribute to the best-overlapping ground truth, if any
                let mut best: Option<(usize, f64)> = None;
                for (k, &iou) in row.iter().enumerate() {
                    if iou > 0.0 && best.is_none_or(|(_, b)| iou > b) {
                        best = Some((k, iou));
                    }
                }
                match best {
                    Some((k, _)) => !stratum.admits(&self.set.ground_truth[group.gts[k]]),
                    None => false,
                }
            }
        }
    }

    fn match_group(&self, group: &Group, stratum: Stratum, iou_type: IouType, threshold: f64) -> (Matched, usize) {
        let gt_ignore: Vec<bool> = group
            .gts
            .iter()
            .map(|&g| {
                let gt = &self.set.ground_truth[g];
                gt.ignore || !stratum.admits(gt)
            })
            .collect();
        // non-ignored ground truth first, stable
        let mut order: Vec<usize> = (0..group.gts.len()).collect();
        order.sort_by_key(|&k| gt_ignore[k]);

        let ious = &group.ious[iou_type as usize];
        let mut gt_taken = vec![false; group.gts.len()];
        let mut matched = vec![false; group.dets.len()];
        let mut ignored = vec![false; group.dets.len()];
        for (di, row) in ious.iter().enumerate() {
            let mut best_iou = threshold.min(1.0 - 1e-10);
            let mut m: Option<usize> = None;
            for &k in &order {
                if gt_taken[k] {
                    continue;
                }
                if let Some(mk) = m {
                    if !gt_ignore[mk] && gt_ignore[k] {
                        break;
                    }
                }
                if row[k] < best_iou {
                    continue;
                }
                best_iou = row[k];
                m = Some(k);
            }
            match m {
                Some(k) => {
                    gt_taken[k] = true;
                    matched[di] = true;
                    ignored[di] = gt_ignore[k];
                }
                None => {
                    ignored[di] = self.unmatched_outside(group, row, group.dets[di], stratum, iou_type);
                }
            }
        }
        let positives = gt_ignore.iter().filter(|&&i| !i).count();
        (Matched { matched, ignored }, positives)
    }

    /// Interpolated precision at the 101 recall points for one category and
    /// threshold; `None` when the category has no positives.
    fn precision_curve(&self, category: u64, stratum: Stratum, iou_type: IouType, threshold: f64) -> Option<[f64; RECALL_POINTS]> {
        let mut ranked: Vec<(f64, bool, bool)> = Vec::new();
        let mut positives = 0;
        for (_, group) in self.groups.iter().filter(|((_, c), _)| *c == category) {
            let (m, pos) = self.match_group(group, stratum, iou_type, threshold);
            positives += pos;
            for (k, &d) in group.dets.iter().enumerate() {
                ranked.push((self.set.detections[d].score, m.matched[k], m.ignored[k]));
            }
        }
        if positives == 0 {
            return None;
        }
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut recall = Vec::with_capacity(ranked.len());
        let mut precision = Vec::with_capacity(ranked.len());
        for &(_, matched, ignored) in &ranked {
            if !ignored {
                if matched {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            recall.push(tp as f64 / positives as f64);
            precision.push(if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 });
        }
        for i in (1..precision.len()).rev() {
            if precision[i] > precision[i - 1] {
                precision[i - 1] = precision[i];
            }
        }
        let mut q = [0.0; RECALL_POINTS];
        for (qi, &r) in q.iter_mut().zip(recall_thresholds().iter()) {
            let idx = recall.partition_point(|&rc| rc < r);
            if idx < precision.len() {
                *qi = precision[idx];
            }
        }
        Some(q)
    }

    fn mean_ap(&self, stratum: Stratum, iou_type: IouType, thresholds: &[f64]) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &t in thresholds {
            for &c in &self.categories {
                if let Some(q) = self.precision_curve(c, stratum, iou_type, t) {
                    sum += q.iter().sum::<f64>();
                    n += RECALL_POINTS;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    pub fn evaluate(&self, stratum: Stratum, iou_type: IouType) -> ApResult {
        let ts = iou_thresholds();
        ApResult {
            ap: self.mean_ap(stratum, iou_type, &ts),
            ap50: self.mean_ap(stratum, iou_type, &ts[0..1]),
            ap75: self.mean_ap(stratum, iou_type, &ts[5..6]),
        }
    }
}

/// AP family for `stratum` under `iou_type`.
pub fn coco_ap(set: &EvalSet, stratum: Stratum, iou_type: IouType) -> Result<ApResult> {
    Ok(CocoEvaluator::new(set)?.evaluate(stratum, iou_type))
}
