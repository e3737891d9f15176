use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::coco::{CocoEvaluator, EvalSet, IouType, Stratum};
use crate::attention::AssistanceClass;
use crate::dataset::ScaleClass;
use crate::error::Result;
use crate::geometry::CurvatureClass;

/// A metric that is `None` when its stratum has no ground truth. Serialises
/// as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

pub const UNDEFINED: &str = "undefined";

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str(UNDEFINED),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{:.1}", v * 100.0),
            None => f.write_str(UNDEFINED),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IouReport {
    pub ap: Metric,
    pub ap50: Metric,
    pub ap75: Metric,
    pub ap_s: Metric,
    pub ap_m: Metric,
    pub ap_l: Metric,
    /// Keyed by class name (`low`, `medium`, `high`).
    pub curvature: BTreeMap<String, Metric>,
    /// Keyed by class name (`minor`, `medium`, `major`).
    pub assistance: BTreeMap<String, Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub segm: IouReport,
    pub bbox: IouReport,
}

fn iou_report(ev: &CocoEvaluator<'_>, t: IouType) -> IouReport {
    let all = ev.evaluate(Stratum::All, t);
    let scale = |c| Metric(ev.evaluate(Stratum::Scale(c), t).ap);
    IouReport {
        ap: Metric(all.ap),
        ap50: Metric(all.ap50),
        ap75: Metric(all.ap75),
        ap_s: scale(ScaleClass::Small),
        ap_m: scale(ScaleClass::Medium),
        ap_l: scale(ScaleClass::Large),
        curvature: CurvatureClass::ALL
            .iter()
            .map(|&c| (c.name().to_string(), Metric(ev.evaluate(Stratum::Curvature(c), t).ap)))
            .collect(),
        assistance: AssistanceClass::ALL
            .iter()
            .map(|&c| (c.name().to_string(), Metric(ev.evaluate(Stratum::Assistance(c), t).ap)))
            .collect(),
    }
}

/// Full report: AP family, scale, curvature and assistance strata, for both
/// mask and box IoU.
pub fn evaluate(set: &EvalSet) -> Result<EvalReport> {
    let ev = CocoEvaluator::new(set)?;
    Ok(EvalReport {
        segm: iou_report(&ev, IouType::Segm),
        bbox: iou_report(&ev, IouType::Bbox),
    })
}

impl fmt::Display for EvalReport {
    /// Plain-text table, values in percent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = [
            "", "AP", "AP50", "AP75", "APS", "APM", "APL", "APlow", "APmed", "APhigh", "APminor", "APmedium",
            "APmajor",
        ];
        let rows: Vec<Vec<String>> = [("segm", &self.segm), ("bbox", &self.bbox)]
            .iter()
            .map(|(name, r)| {
                let mut row = vec![name.to_string()];
                for m in [r.ap, r.ap50, r.ap75, r.ap_s, r.ap_m, r.ap_l] {
                    row.push(m.to_string());
                }
                for c in CurvatureClass::ALL {
                    row.push(r.curvature.get(c.name()).copied().unwrap_or_default().to_string());
                }
                for c in AssistanceClass::ALL {
                    row.push(r.assistance.get(c.name()).copied().unwrap_or_default().to_string());
                }
                row
            })
            .collect();
        let widths: Vec<usize> = (0..head.len())
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0).max(head[i].len()))
            .collect();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect::<Vec<_>>()
                .join("  ")
        };
        writeln!(f, "{}", line(head.to_vec()))?;
        for r in &rows {
            writeln!(f, "{}", line(r.iter().map(String::as_str).collect()))?;
        }
        Ok(())
    }
}
