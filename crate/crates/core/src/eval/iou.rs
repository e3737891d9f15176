use std::collections::BTreeMap;

use crate::dataset::{classify_scale, ScaleClass};
use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// `|A ∩ B| / |A ∪ B|` over two masks of the same size.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::argument(format!(
            "mask sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (inter, union) = a.overlap(b);
    if union == 0 {
        return Err(Error::UndefinedIou);
    }
    Ok(inter as f64 / union as f64)
}

/// Mean IoU per scale class. `areas` drive the scale of each pair; classes
/// with no pairs map to `None`.
pub fn miou_by_scale(
    gts: &[BinaryMask],
    areas: &[f64],
    masks: &[BinaryMask],
) -> Result<BTreeMap<ScaleClass, Option<f64>>> {
    if gts.len() != masks.len() || gts.len() != areas.len() {
        return Err(Error::argument("need exactly one mask and one area per ground truth"));
    }
    let mut acc: BTreeMap<ScaleClass, (f64, usize)> = BTreeMap::new();
    for ((g, m), &area) in gts.iter().zip(masks).zip(areas) {
        let e = acc.entry(classify_scale(area)).or_default();
        e.0 += mask_iou(g, m)?;
        e.1 += 1;
    }
    Ok(ScaleClass::ALL
        .iter()
        .map(|&c| (c, acc.get(&c).map(|&(s, n)| s / n as f64)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x0: usize, y0: usize, w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_fn(40, 40, |x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h)
    }

    #[test]
    fn examples() {
        let a = rect(5, 5, 10, 10);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &rect(20, 20, 5, 5)).unwrap(), 0.0);
        assert!((mask_iou(&a, &rect(5, 10, 10, 10)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            mask_iou(&BinaryMask::new(4, 4), &BinaryMask::new(4, 4)),
            Err(Error::UndefinedIou)
        ));
        assert!(mask_iou(&BinaryMask::new(4, 4), &BinaryMask::new(5, 4)).is_err());
    }

    #[test]
    fn miou_classes() {
        let g = rect(0, 0, 10, 10);
        let r = miou_by_scale(&[g.clone()], &[100.0], &[g.clone()]).unwrap();
        assert_eq!(r[&ScaleClass::Small], Some(1.0));
        assert_eq!(r[&ScaleClass::Medium], None);

        let r = miou_by_scale(&[g.clone()], &[100.0], &[rect(0, 5, 10, 10)]).unwrap();
        assert!((r[&ScaleClass::Small].unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r[&ScaleClass::Large], None);

        let all = miou_by_scale(
            &[g.clone(), g.clone(), g.clone()],
            &[10.0, 2000.0, 20000.0],
            &[g.clone(), g.clone(), g],
        )
        .unwrap();
        assert!(all.values().all(|v| *v == Some(1.0)));
    }

    proptest! {
        #[test]
        fn iou_properties(a in prop::collection::vec(any::<bool>(), 64), b in prop::collection::vec(any::<bool>(), 64)) {
            let ma = BinaryMask::from_fn(8, 8, |x, y| a[y * 8 + x]);
            let mb = BinaryMask::from_fn(8, 8, |x, y| b[y * 8 + x]);
            if let Ok(v) = mask_iou(&ma, &mb) {
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, mask_iou(&mb, &ma).unwrap());
                prop_assert_eq!(v == 1.0, ma == mb);
                // adding a pixel of B \ A to A grows the intersection only
                if let Some((x, y)) = mb.iter_set().find(|&(x, y)| !ma.get(x, y)) {
                    let mut grown = ma.clone();
                    grown.set(x, y, true);
                    prop_assert!(mask_iou(&grown, &mb).unwrap() >= v);
                }
            }
        }
    }
}
