//! Toolkit for human-assisted instance segmentation data.
//!
//! Partial boundary sketches are turned into two-valued attention rasters,
//! object outlines are scored for curvature with a perimeter-adaptive
//! Ramer-Douglas-Peucker pass, and segmentation output is evaluated with
//! COCO-style AP stratified by scale, curvature and assistance level.

pub mod attention;
pub mod augment;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod netprep;
pub mod raster;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::{CurvatureClass, Point2, Ring};
