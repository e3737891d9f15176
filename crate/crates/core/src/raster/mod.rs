//! Raster primitives shared by the attention, augmentation and evaluation
//! code.
//!
//! Pixel `(i, j)` is centred on the continuous coordinate `(i, j)` and covers
//! `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`. Under this convention a
//! horizontal mirror maps `x` to `width - 1 - x` for pixels and geometry alike.

mod contour;
mod fill;
mod image;
mod line;
mod png_io;

pub use contour::trace_contours;
pub use fill::{fill_rings, fill_rings_into};
pub use image::{BinaryMask, Raster};
pub use line::{bresenham, dilate_square};
pub use png_io::{decode_gray_png, encode_gray_png, encode_rgb_png};
