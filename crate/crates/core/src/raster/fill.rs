use super::image::BinaryMask;
use crate::geometry::Ring;

/// Rasterises `rings` with even-odd parity across all rings.
///
/// A pixel is set when its centre lies inside; centres exactly on a left or
/// top edge count as inside, on a right or bottom edge as outside.
pub fn fill_rings(rings: &[Ring], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    fill_rings_into(&mut mask, rings);
    mask
}

/// Toggles the pixels covered by `rings` in `mask` (even-odd).
pub fn fill_rings_into(mask: &mut BinaryMask, rings: &[Ring]) {
    let (width, height) = (mask.width(), mask.height());
    if width == 0 || height == 0 {
        return;
    }
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for r in rings {
        let (lo, hi) = r.bounds();
        ymin = ymin.min(lo.y);
        ymax = ymax.max(hi.y);
    }
    if ymin > ymax {
        return;
    }
    let row_lo = ymin.ceil().max(0.0) as usize;
    let row_hi = (ymax.floor().min((height - 1) as f64)).max(-1.0);
    if row_hi < 0.0 {
        return;
    }
    let mut xs: Vec<f64> = Vec::new();
    for row in row_lo..=row_hi as usize {
        let yc = row as f64;
        xs.clear();
        for ring in rings {
            for (a, b) in ring.segments() {
                if (a.y <= yc) != (b.y <= yc) {
                    xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = pair[0].ceil().max(0.0);
            let end = pair[1].ceil().min(width as f64);
            if end <= start {
                continue;
            }
            for col in start as usize..end as usize {
                mask.toggle(col, row);
            }
        }
    }
}
