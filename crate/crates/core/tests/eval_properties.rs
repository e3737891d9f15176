mod common;

use common::*;
use proptest::prelude::*;
use psob_core::attention::AssistanceClass;
use psob_core::dataset::BBox;
use psob_core::eval::{
    coco_ap, eval_set_from_split, evaluate, factorial_anova, mask_iou, ols_regression, parse_detections, Detection,
    EvalSet, GroundTruth, IouType, Metric, Observation, Region, Stratum,
};
use psob_core::geometry::CurvatureClass;
use psob_core::raster::BinaryMask;
use psob_core::Error;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SIDE: usize = 120;

fn square(x0: usize, y0: usize, s: usize) -> (Region, BBox) {
    let m = BinaryMask::from_fn(SIDE, SIDE, |x, y| (x0..x0 + s).contains(&x) && (y0..y0 + s).contains(&y));
    (Region::from_mask(&m), BBox::new(x0 as f64, y0 as f64, s as f64, s as f64))
}

fn gt(id: u64, x0: usize, y0: usize, s: usize, curvature: CurvatureClass) -> GroundTruth {
    let (region, bbox) = square(x0, y0, s);
    GroundTruth {
        id,
        image_id: 1,
        category_id: 1,
        area: (s * s) as f64,
        region,
        bbox,
        curvature,
        assistance: Some(AssistanceClass::Minor),
        ignore: false,
    }
}

fn det(x0: usize, y0: usize, s: usize, score: f64) -> Detection {
    let (region, bbox) = square(x0, y0, s);
    Detection { image_id: 1, category_id: 1, score, region, bbox }
}

/// Squares on a 30 px grid, each in one of `strata` curvature classes with
/// equal counts, plus perturbed detections and strays. Scores are distinct.
fn scene(r: &mut ChaCha8Rng, strata: usize, per_stratum: usize) -> EvalSet {
    const CLASSES: [CurvatureClass; 3] = [CurvatureClass::Low, CurvatureClass::Medium, CurvatureClass::High];
    let mut cells: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).map(move |j| (i * 30, j * 30))).collect();
    let mut ground_truth = Vec::new();
    let mut detections = Vec::new();
    let mut scores: Vec<f64> = (0..64).map(|k| (k as f64 + 0.5) / 64.0).collect();
    for k in 0..strata * per_stratum {
        let (x, y) = cells.swap_remove(r.random_range(0..cells.len()));
        let s = r.random_range(10..22);
        ground_truth.push(gt(k as u64, x + 2, y + 2, s, CLASSES[k % strata]));
        for _ in 0..r.random_range(0..3) {
            let score = scores.swap_remove(r.random_range(0..scores.len()));
            detections.push(det(x + r.random_range(0..6), y + r.random_range(0..6), s + r.random_range(0..3) - 1, score));
        }
    }
    for _ in 0..r.random_range(0..4) {
        let score = scores.swap_remove(r.random_range(0..scores.len()));
        detections.push(det(r.random_range(0..100), r.random_range(0..100), r.random_range(5..20), score));
    }
    EvalSet { images: [(1, (SIDE, SIDE))].into(), ground_truth, detections }
}

fn ap(set: &EvalSet, stratum: Stratum) -> Option<f64> {
    coco_ap(set, stratum, IouType::Segm).unwrap().ap
}

fn random_mask(r: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    let bits: Vec<bool> = (0..w * h).map(|_| r.random_bool(density)).collect();
    BinaryMask::from_fn(w, h, |x, y| bits[y * w + x])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ap_depends_on_ranking_only(seed in any::<u64>(), power in 0.2f64..5.0) {
        let mut r = rng(seed);
        let set = scene(&mut r, 3, 2);
        let mut warped = set.clone();
        for d in &mut warped.detections {
            d.score = d.score.powf(power);
        }
        for stratum in [Stratum::All, Stratum::Curvature(CurvatureClass::Medium)] {
            prop_assert_eq!(coco_ap(&set, stratum, IouType::Segm).unwrap(), coco_ap(&warped, stratum, IouType::Segm).unwrap());
            prop_assert_eq!(coco_ap(&set, stratum, IouType::Bbox).unwrap(), coco_ap(&warped, stratum, IouType::Bbox).unwrap());
        }
    }

    #[test]
    fn ap_matches_reference_matcher(seed in any::<u64>()) {
        let mut r = rng(seed);
        let per = r.random_range(1..=5);
        let set = scene(&mut r, 1, per);
        let gts: Vec<OracleGt> = set
            .ground_truth
            .iter()
            .map(|g| OracleGt { image: 0, category: 1, mask: g.region.to_mask(SIDE, SIDE) })
            .collect();
        let dets: Vec<OracleDet> = set
            .detections
            .iter()
            .map(|d| OracleDet { image: 0, category: 1, score: d.score, mask: d.region.to_mask(SIDE, SIDE) })
            .collect();
        let thresholds: Vec<f64> = (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect();
        let want = oracle_ap(&gts, &dets, &thresholds).unwrap();
        let got = ap(&set, Stratum::All).unwrap();
        prop_assert!((want - got).abs() < 1e-6, "oracle {want} library {got}");
    }

    #[test]
    fn mask_iou_properties(seed in any::<u64>(), w in 1usize..16, h in 1usize..16, density in 0.05f64..0.95) {
        let mut r = rng(seed);
        let a = random_mask(&mut r, w, h, density);
        let b = random_mask(&mut r, w, h, density);
        if a.is_empty() && b.is_empty() {
            prop_assert!(matches!(mask_iou(&a, &b), Err(Error::UndefinedIou)));
            return Ok(());
        }
        let ab = mask_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, mask_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab == 1.0, a == b);
        if let Some(want) = oracle_iou(&a, &b) {
            prop_assert!((want - ab).abs() < 1e-12);
        }
        // add one pixel of b to a: the intersection grows, IoU cannot fall
        let missing = b.iter_set().find(|&(x, y)| !a.get(x, y));
        if let Some((x, y)) = missing {
            let mut grown = a.clone();
            grown.set(x, y, true);
            prop_assert!(mask_iou(&grown, &b).unwrap() >= ab);
        }
    }

    #[test]
    fn anova_sums_of_squares_are_conserved(seed in any::<u64>(), levels in prop::collection::vec(2usize..4, 2..=3), reps in 1usize..3, interactions in any::<bool>()) {
        let mut r = rng(seed);
        let names = ["a", "b", "c"];
        let factors = &names[..levels.len()];
        let mut obs = Vec::new();
        let cells: usize = levels.iter().product();
        for cell in 0..cells {
            let mut rest = cell;
            let labels: Vec<String> = levels
                .iter()
                .map(|&n| {
                    let l = rest % n;
                    rest /= n;
                    format!("l{l}")
                })
                .collect();
            for _ in 0..reps {
                obs.push(Observation::new(labels.clone(), r.random_range(-50.0..50.0)));
            }
        }
        match factorial_anova(factors, &obs, interactions) {
            Ok(res) => {
                let parts: f64 = res.effects.iter().map(|e| e.sum_squares).sum::<f64>() + res.residual_sum_squares;
                prop_assert!((parts - res.total_sum_squares).abs() <= 1e-9 * res.total_sum_squares.max(1.0));
                for e in &res.effects {
                    prop_assert!(e.f >= 0.0);
                    prop_assert!((0.0..=1.0).contains(&e.p_value));
                }
            }
            // saturated models have no residual to test against
            Err(_) => prop_assert!(reps == 1 && (levels.len() == 2 && interactions)),
        }
    }

    #[test]
    fn ols_is_affine_invariant(seed in any::<u64>(), n in 8usize..40, k in 1usize..4, col in 0usize..4, a in prop_oneof![-20.0f64..-0.05, 0.05f64..20.0], b in -100.0f64..100.0) {
        let col = col % k;
        let mut r = rng(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| r.random_range(-10.0..10.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|row| row.iter().sum::<f64>() + r.random_range(-5.0..5.0)).collect();
        let moved: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[col] = a * row[col] + b;
                row
            })
            .collect();
        let fit = ols_regression(&y, &x).unwrap();
        let fit2 = ols_regression(&y, &moved).unwrap();
        prop_assert!((fit.r_squared - fit2.r_squared).abs() < 1e-9);
        for (row, row2) in x.iter().zip(&moved) {
            let (p, p2) = (fit.predict(row), fit2.predict(row2));
            prop_assert!((p - p2).abs() <= 1e-8 * p.abs().max(1.0), "{p} vs {p2}");
        }
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
    }
}

#[test]
fn independent_noise_explains_nothing() {
    let mut r = rng(5);
    let n = 10_000;
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
    assert!(ols_regression(&y, &x).unwrap().r_squared < 0.1);
}

#[test]
fn detections_file_round_trip() {
    let mut r = rng(9);
    let split = random_split(&mut r);
    let set = eval_set_from_split(&split).unwrap();
    // echo every ground-truth object back as a polygon detection
    let entries: Vec<serde_json::Value> = split
        .annotations
        .iter()
        .map(|a| {
            serde_json::json!({
                "image_id": a.image_id,
                "category_id": a.category_id,
                "score": 0.9,
                "segmentation": a.rings.iter().map(|ring| ring.to_flat()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let dets = parse_detections(&serde_json::Value::Array(entries).to_string(), &set).unwrap();
    assert_eq!(dets.len(), split.annotations.len());
    let mut set = set;
    set.detections = dets;
    let report = evaluate(&set).unwrap();
    assert!(set.ground_truth.iter().any(|g| !g.ignore && !g.region.is_empty()));
    assert_eq!(report.segm.ap, Metric(Some(1.0)));
}

#[test]
fn detections_reject_unknown_images_and_bad_scores() {
    let set = EvalSet { images: [(1, (10, 10))].into(), ..Default::default() };
    let unknown = r#"[{"image_id": 2, "category_id": 1, "score": 0.5, "bbox": [0, 0, 2, 2]}]"#;
    assert!(parse_detections(unknown, &set).is_err());
    let score = r#"[{"image_id": 1, "category_id": 1, "score": 1.5, "bbox": [0, 0, 2, 2]}]"#;
    assert!(parse_detections(score, &set).is_err());
    assert!(parse_detections("[{", &set).is_err());
}

/// Overall AP is not bounded by the stratum APs, even with equal GT counts.
/// Each stratum below sees one hit at recall 0.5 and nothing after it, so
/// both score 51/101; pooled, the high-curvature misses sit between the two
/// hits and drag the second half of the curve down to precision 1/2.
#[test]
fn overall_ap_can_leave_the_strata_range() {
    use CurvatureClass::{High, Low};
    let set = EvalSet {
        images: [(1, (SIDE, SIDE))].into(),
        ground_truth: vec![gt(1, 0, 0, 20, High), gt(2, 40, 0, 20, High), gt(3, 0, 40, 20, Low), gt(4, 40, 40, 20, Low)],
        detections: vec![
            det(0, 0, 20, 0.9),
            // overlap g2 by less than half: misses attributed to the high stratum
            det(52, 0, 20, 0.8),
            det(40, 12, 20, 0.7),
            det(0, 40, 20, 0.6),
        ],
    };
    let high = ap(&set, Stratum::Curvature(High)).unwrap();
    let low = ap(&set, Stratum::Curvature(Low)).unwrap();
    let overall = ap(&set, Stratum::All).unwrap();
    assert!((high - 51.0 / 101.0).abs() < 1e-12);
    assert!((low - 51.0 / 101.0).abs() < 1e-12);
    assert!((overall - 38.5 / 101.0).abs() < 1e-12);
}
