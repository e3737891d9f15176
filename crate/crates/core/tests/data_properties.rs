mod common;

use common::*;
use proptest::prelude::*;
use psob_core::attention::{
    classify_assistance, rasterize, AssistanceClass, ATTENTION_VALUE, BACKGROUND_VALUE,
};
use psob_core::dataset::{classify_scale, corpus_stats, DatasetSplit, ScaleClass};
use psob_core::geometry::total_area;
use psob_core::netprep::{adapt_first_conv, assemble_input, default_norm_stats, Tensor4, STEM_DIMS_RGB};
use psob_core::raster::Raster;
use rand::seq::SliceRandom;
use rand::Rng;

fn scale_rank(c: ScaleClass) -> u8 {
    match c {
        ScaleClass::Small => 0,
        ScaleClass::Medium => 1,
        ScaleClass::Large => 2,
    }
}

fn assistance_rank(c: AssistanceClass) -> u8 {
    match c {
        AssistanceClass::Minor => 0,
        AssistanceClass::Medium => 1,
        AssistanceClass::Major => 2,
    }
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_text_round_trip(seed in any::<u64>()) {
        let split = random_split(&mut rng(seed));
        let text = split.to_canonical_json();
        let back = DatasetSplit::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &split);
        prop_assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn canonical_text_is_a_fixed_point_for_any_float(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = format!(r#"{{"images": [], "annotations": [], "note": [{x:e}]}}"#);
        let once = DatasetSplit::from_json_str(&text).unwrap().to_canonical_json();
        prop_assert_eq!(DatasetSplit::from_json_str(&once).unwrap().to_canonical_json(), once);
    }

    #[test]
    fn scale_classes_are_total_and_monotone(a in 0.0f64..20_000.0, b in 0.0f64..20_000.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(scale_rank(classify_scale(lo)) <= scale_rank(classify_scale(hi)));
    }

    #[test]
    fn annotation_scale_uses_ring_area(seed in any::<u64>()) {
        let split = random_split(&mut rng(seed));
        for a in &split.annotations {
            prop_assert_eq!(a.scale(), classify_scale(total_area(&a.rings)));
        }
    }

    #[test]
    fn stats_ignore_annotation_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let split = random_split(&mut r);
        let mut shuffled = split.clone();
        shuffled.annotations.shuffle(&mut r);
        let (a, b) = (corpus_stats(&split), corpus_stats(&shuffled));
        prop_assert_eq!(a.annotation_count, split.annotations.len());
        prop_assert_eq!(a.empty, split.annotations.is_empty());
        prop_assert!(close(a.interaction_time, b.interaction_time));
        prop_assert!(close(a.sketch_time, b.sketch_time));
        prop_assert!(close(a.curvature_count, b.curvature_count));
        prop_assert!(close(a.perimeter, b.perimeter));
        prop_assert!(close(a.ls_pp_percent, b.ls_pp_percent));
        prop_assert!(close(a.stroke_count, b.stroke_count));
    }

    #[test]
    fn assistance_classes_partition(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(assistance_rank(classify_assistance(lo)) <= assistance_rank(classify_assistance(hi)));
        let expected = if a < 0.25 {
            AssistanceClass::Minor
        } else if a <= 0.5 {
            AssistanceClass::Medium
        } else {
            AssistanceClass::Major
        };
        prop_assert_eq!(classify_assistance(a), expected);
    }

    #[test]
    fn attention_map_is_two_valued(seed in any::<u64>(), w in 1usize..60, h in 1usize..60, thickness in 1usize..4) {
        let mut r = rng(seed);
        let strokes = random_strokes(&mut r, w, h);
        let map = rasterize(&strokes, w, h, thickness).unwrap();
        prop_assert!(map.data().iter().all(|&v| v == ATTENTION_VALUE || v == BACKGROUND_VALUE));
        prop_assert_eq!(map.attention_count() >= 1, !strokes.is_empty());
    }

    #[test]
    fn normalised_input_inverts(seed in any::<u64>(), w in 1usize..24, h in 1usize..24) {
        let mut r = rng(seed);
        let data: Vec<u8> = (0..w * h * 3).map(|_| r.random()).collect();
        let image = Raster::from_vec(w, h, 3, data).unwrap();
        let map = rasterize(&random_strokes(&mut r, w, h), w, h, 1).unwrap();
        let stats = default_norm_stats();
        let t = assemble_input(&image, &map, &stats).unwrap();
        prop_assert!(t.data.iter().all(|v| v.is_finite()));
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let back = stats.denormalize(c, t.at(x, y, c)) as i32;
                    prop_assert!((back - image.pixel(x, y)[c] as i32).abs() <= 1);
                }
                let back = stats.denormalize(3, t.at(x, y, 3)) as i32;
                prop_assert!((back - map.get(x, y) as i32).abs() <= 1);
            }
        }
    }

    #[test]
    fn widened_stem_keeps_rgb_and_bounds_attention(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n: usize = STEM_DIMS_RGB.iter().product();
        let rgb = Tensor4::new(STEM_DIMS_RGB, (0..n).map(|_| r.random_range(-1.0f32..1.0)).collect()).unwrap();
        let wide = adapt_first_conv(&rgb, seed).unwrap();
        prop_assert!(wide.data().iter().all(|v| v.is_finite()));
        let mut sum = 0.0;
        for o in 0..64 {
            for ky in 0..7 {
                for kx in 0..7 {
                    for i in 0..3 {
                        prop_assert_eq!(wide.get(o, i, ky, kx).to_bits(), rgb.get(o, i, ky, kx).to_bits());
                    }
                    let v = wide.get(o, 3, ky, kx) as f64;
                    prop_assert!(v > 0.0 && v < 0.001);
                    sum += v;
                }
            }
        }
        let mean = sum / (64.0 * 49.0);
        prop_assert!(mean > 0.0004 && mean < 0.0006, "mean {mean}");
    }
}
