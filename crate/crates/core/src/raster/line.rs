/// Integer Bresenham line from `a` to `b`, both endpoints included.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Offsets of a square brush of side `thickness` around the centre pixel.
/// Even sizes extend one pixel further right/down.
pub fn dilate_square(thickness: usize) -> impl Iterator<Item = (i64, i64)> {
    let t = thickness.max(1) as i64;
    let lo = -(t - 1) / 2;
    let hi = lo + t - 1;
    (lo..=hi).flat_map(move |dy| (lo..=hi).map(move |dx| (dx, dy)))
}
