use std::fmt;

use serde::Serialize;

use super::DatasetSplit;
use crate::attention::sketch_length;
use crate::geometry::{curvature_count, total_perimeter};

/// Per-split averages in the layout of the corpus summary table. Means are
/// `None` for an empty split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub annotation_count: usize,
    pub interaction_time: Option<f64>,
    pub sketch_time: Option<f64>,
    pub curvature_count: Option<f64>,
    pub perimeter: Option<f64>,
    /// Mean of per-object sketch length over perimeter, in percent.
    pub ls_pp_percent: Option<f64>,
    pub stroke_count: Option<f64>,
    /// True when the split had no annotations and the means are undefined.
    pub empty: bool,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn corpus_stats(split: &DatasetSplit) -> CorpusStats {
    let anns = &split.annotations;
    let perims: Vec<f64> = anns.iter().map(|a| total_perimeter(&a.rings)).collect();
    CorpusStats {
        annotation_count: anns.len(),
        interaction_time: mean(anns.iter().map(|a| a.interaction_time)),
        sketch_time: mean(anns.iter().map(|a| a.sketch_time)),
        curvature_count: mean(anns.iter().map(|a| curvature_count(&a.rings) as f64)),
        perimeter: mean(perims.iter().copied()),
        ls_pp_percent: mean(
            anns.iter()
                .zip(&perims)
                .filter(|(_, &p)| p > 0.0)
                .map(|(a, &p)| 100.0 * sketch_length(&a.strokes) / p),
        ),
        stroke_count: mean(anns.iter().map(|a| a.strokes.len() as f64)),
        empty: anns.is_empty(),
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}"));
        writeln!(f, "{:<24}{:>10}", "Interaction Time [sec]", cell(self.interaction_time))?;
        writeln!(f, "{:<24}{:>10}", "Sketching Time [sec]", cell(self.sketch_time))?;
        writeln!(f, "{:<24}{:>10}", "No. Of Curvatures", cell(self.curvature_count))?;
        writeln!(f, "{:<24}{:>10}", "Perimeter of Polygon", cell(self.perimeter))?;
        writeln!(f, "{:<24}{:>10}", "LS/PP (%)", cell(self.ls_pp_percent))?;
        writeln!(f, "{:<24}{:>10}", "Stroke Count", cell(self.stroke_count))?;
        write!(f, "{:<24}{:>10}", "Annotation Count", self.annotation_count)
    }
}
