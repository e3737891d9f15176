use super::image::BinaryMask;
use crate::geometry::{Point2, Ring};

// Direction codes in image space (y down).
const RIGHT: u8 = 0;
const DOWN: u8 = 1;
const LEFT: u8 = 2;
const UP: u8 = 3;

fn step(d: u8) -> (i64, i64) {
    match d {
        RIGHT => (1, 0),
        DOWN => (0, 1),
        LEFT => (-1, 0),
        _ => (0, -1),
    }
}

/// Traces the pixel-edge boundaries of `mask` into closed rings.
///
/// Outer boundaries and hole boundaries are both emitted; filling the result
/// with even-odd parity (see [`super::fill_rings`]) reproduces `mask`
/// exactly. Vertices sit on pixel corners, i.e. half-integer coordinates.
/// Diagonally touching pixels are traced as separate loops.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Ring> {
    let (w, h) = (mask.width(), mask.height());
    let cw = w + 1;
    let inside = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && mask.get(x as usize, y as usize)
    };

    // Outgoing unused edges per lattice corner, one bit per direction.
    let mut out = vec![0u8; cw * (h + 1)];
    let idx = |x: i64, y: i64| y as usize * cw + x as usize;
    for (px, py) in mask.iter_set() {
        let (x, y) = (px as i64, py as i64);
        if !inside(x, y - 1) {
            out[idx(x, y)] |= 1 << RIGHT;
        }
        if !inside(x + 1, y) {
            out[idx(x + 1, y)] |= 1 << DOWN;
        }
        if !inside(x, y + 1) {
            out[idx(x + 1, y + 1)] |= 1 << LEFT;
        }
        if !inside(x - 1, y) {
            out[idx(x, y + 1)] |= 1 << UP;
        }
    }

    let mut rings = Vec::new();
    for start in 0..out.len() {
        while out[start] != 0 {
            let sx = (start % cw) as i64;
            let sy = (start / cw) as i64;
            let first_dir = out[start].trailing_zeros() as u8;
            let mut corners: Vec<(i64, i64, u8)> = Vec::new();
            let (mut x, mut y, mut d) = (sx, sy, first_dir);
            loop {
                out[idx(x, y)] &= !(1 << d);
                corners.push((x, y, d));
                let (dx, dy) = step(d);
                x += dx;
                y += dy;
                let bits = out[idx(x, y)];
                if bits == 0 {
                    break;
                }
                // interior lies to the right of travel; hug it
                d = [(d + 1) % 4, d, (d + 3) % 4]
                    .into_iter()
                    .find(|c| bits & (1 << c) != 0)
                    .unwrap_or_else(|| bits.trailing_zeros() as u8);
            }
            let n = corners.len();
            let verts: Vec<Point2> = (0..n)
                .filter(|&k| corners[k].2 != corners[(k + n - 1) % n].2)
                .map(|k| Point2::new(corners[k].0 as f64 - 0.5, corners[k].1 as f64 - 0.5))
                .collect();
            if let Ok(r) = Ring::new(verts) {
                rings.push(r);
            }
        }
    }
    rings
}
