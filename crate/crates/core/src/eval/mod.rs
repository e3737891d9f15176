//! Segmentation quality: IoU, COCO-style AP with scale, curvature and
//! assistance strata, and the ANOVA / regression statistics used to analyse
//! the results.

mod anova;
mod coco;
mod detections;
mod iou;
mod ols;
mod region;
mod report;
mod rle;

pub use anova::{factorial_anova, AnovaEffect, AnovaResult, Observation, SIGNIFICANCE_LEVEL};
pub use coco::{
    coco_ap, iou_thresholds, ApResult, CocoEvaluator, Detection, EvalSet, GroundTruth, IouType, Stratum,
    MAX_DETECTIONS, RECALL_POINTS,
};
pub use detections::{eval_set_from_split, parse_detections};
pub use iou::{mask_iou, miou_by_scale};
pub use ols::{ols_regression, RegressionResult};
pub use region::Region;
pub use report::{evaluate, EvalReport, IouReport, Metric, UNDEFINED};
pub use rle::{decode_counts_string, encode_counts_string, Rle, RleCounts};
