//! Computational geometry shared by the fitting and workspace code.

mod hull;
mod point;
mod polygon;

pub use hull::{convex_hull_3d, hull_volume, Hull3};
pub use point::{Point2, Point3};
pub use polygon::{polygon_area, polygon_iou, polyline_length, Polygon2, DEFAULT_IOU_RESOLUTION};
