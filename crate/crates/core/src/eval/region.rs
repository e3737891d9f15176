use crate::geometry::{Point2, Ring};
use crate::raster::{fill_rings, BinaryMask};

/// A binary mask stored as its tight bounding window inside a larger image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    x0: usize,
    y0: usize,
    mask: BinaryMask,
    area: usize,
}

impl Region {
    pub fn empty() -> Self {
        Self { x0: 0, y0: 0, mask: BinaryMask::new(0, 0), area: 0 }
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self::tight(0, 0, mask)
    }

    /// Crops `mask`, placed at (`ox`, `oy`), to the bounds of its set pixels.
    fn tight(ox: usize, oy: usize, mask: &BinaryMask) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for (x, y) in mask.iter_set() {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if x0 == usize::MAX {
            return Self::empty();
        }
        let crop = BinaryMask::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| mask.get(x0 + x, y0 + y));
        let area = crop.count();
        Self { x0: ox + x0, y0: oy + y0, mask: crop, area }
    }

    /// Rasterises rings (even-odd) inside a `width` x `height` image without
    /// allocating the full frame.
    pub fn from_rings(rings: &[Ring], width: usize, height: usize) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for r in rings {
            let (l, h) = r.bounds();
            lo = Point2::new(lo.x.min(l.x), lo.y.min(l.y));
            hi = Point2::new(hi.x.max(h.x), hi.y.max(h.y));
        }
        if !(lo.x <= hi.x) || width == 0 || height == 0 {
            return Self::empty();
        }
        let x0 = lo.x.ceil().clamp(0.0, width as f64) as usize;
        let y0 = lo.y.ceil().clamp(0.0, height as f64) as usize;
        let x1 = (hi.x.floor() + 1.0).clamp(0.0, width as f64) as usize;
        let y1 = (hi.y.floor() + 1.0).clamp(0.0, height as f64) as usize;
        if x1 <= x0 || y1 <= y0 {
            return Self::empty();
        }
        let shifted: Vec<Ring> = rings
            .iter()
            .filter_map(|r| r.map(|p| Point2::new(p.x - x0 as f64, p.y - y0 as f64)).ok())
            .collect();
        Self::tight(x0, y0, &fill_rings(&shifted, x1 - x0, y1 - y0))
    }

    /// Pixel bounds `(x0, y0, x1, y1)` with exclusive upper ends.
    pub fn extent(&self) -> Option<(usize, usize, usize, usize)> {
        (self.area > 0).then(|| (self.x0, self.y0, self.x0 + self.mask.width(), self.y0 + self.mask.height()))
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn is_empty(&self) -> bool {
        self.area == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0
            && y >= self.y0
            && x < self.x0 + self.mask.width()
            && y < self.y0 + self.mask.height()
            && self.mask.get(x - self.x0, y - self.y0)
    }

    pub fn intersection(&self, other: &Region) -> usize {
        let xa = self.x0.max(other.x0);
        let ya = self.y0.max(other.y0);
        let xb = (self.x0 + self.mask.width()).min(other.x0 + other.mask.width());
        let yb = (self.y0 + self.mask.height()).min(other.y0 + other.mask.height());
        let mut n = 0;
        for y in ya..yb {
            for x in xa..xb {
                if self.mask.get(x - self.x0, y - self.y0) && other.mask.get(x - other.x0, y - other.y0) {
                    n += 1;
                }
            }
        }
        n
    }

    /// IoU, zero when both regions are empty.
    pub fn iou(&self, other: &Region) -> f64 {
        let inter = self.intersection(other);
        let union = self.area + other.area - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn to_mask(&self, width: usize, height: usize) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for (x, y) in self.mask.iter_set() {
            let (gx, gy) = (x + self.x0, y + self.y0);
            if gx < width && gy < height {
                m.set(gx, gy, true);
            }
        }
        m
    }
}
