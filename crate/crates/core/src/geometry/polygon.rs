use super::Point2;
use crate::{lit, Error, Real, Result};

pub const DEFAULT_IOU_RESOLUTION: usize = 1024;

const MIN_AREA: f64 = 1e-12;

/// Simple closed polygon; the closing edge is implicit.
#[derive(Debug, Clone)]
pub struct Polygon2<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Real> Polygon2<T> {
    /// Validates vertex count, finiteness and absence of self-intersections.
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite vertex".into()));
        }
        if let Some((i, j)) = first_self_intersection(&vertices) {
            return Err(Error::DegeneratePolygon(format!(
                "edges {i} and {j} intersect"
            )));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    /// Unsigned shoelace area.
    pub fn area(&self) -> T {
        polygon_area(&self.vertices).abs()
    }

    fn edges(&self) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Sorted x-coordinates where the horizontal line `y` crosses the boundary.
    fn crossings(&self, y: T, out: &mut Vec<T>) {
        out.clear();
        for (p, q) in self.edges() {
            if (p.y > y) != (q.y > y) {
                out.push(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn polygon_area<T: Real>(vertices: &[Point2<T>]) -> T {
    let n = vertices.len();
    let twice: T = (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum();
    twice * lit::<T>(0.5)
}

pub fn polyline_length<T: Real>(curve: &[Point2<T>]) -> T {
    curve.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Raster estimate of |A ∩ B| / |A ∪ B|.
///
/// Both polygons are scan-converted on the same `resolution × resolution`
/// grid spanning their joint bounding box; a cell belongs to a polygon when
/// its centre does (even-odd rule). The result is symmetric in its arguments.
pub fn polygon_iou<T: Real>(a: &Polygon2<T>, b: &Polygon2<T>, resolution: usize) -> Result<T> {
    if resolution < 64 {
        return Err(Error::invalid(format!(
            "IoU resolution must be >= 64, got {resolution}"
        )));
    }
    for (name, p) in [("first", a), ("second", b)] {
        if p.area() < lit(MIN_AREA) {
            return Err(Error::DegeneratePolygon(format!(
                "{name} polygon has zero area"
            )));
        }
    }

    let all = a.vertices.iter().chain(b.vertices.iter());
    let (mut lo, mut hi) = (a.vertices[0], a.vertices[0]);
    for p in all {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let res = T::from_usize(resolution).unwrap();
    let dx = (hi.x - lo.x) / res;
    let dy = (hi.y - lo.y) / res;
    let half = lit::<T>(0.5);

    let mut row_a = vec![false; resolution];
    let mut row_b = vec![false; resolution];
    let mut xs = Vec::new();
    let (mut inter, mut union) = (0usize, 0usize);

    for j in 0..resolution {
        let y = lo.y + (T::from_usize(j).unwrap() + half) * dy;
        for (poly, row) in [(a, &mut row_a), (b, &mut row_b)] {
            row.iter_mut().for_each(|c| *c = false);
            poly.crossings(y, &mut xs);
            for span in xs.chunks_exact(2) {
                // cells whose centre lo.x + (i + 0.5)·dx lies in [span0, span1)
                let first = ((span[0] - lo.x) / dx - half).ceil().max(T::zero());
                let last = ((span[1] - lo.x) / dx - half).ceil().min(res);
                let (first, last) = (first.to_usize().unwrap_or(0), last.to_usize().unwrap_or(0));
                for c in row.iter_mut().take(last).skip(first) {
                    *c = true;
                }
            }
        }
        for (&ca, &cb) in row_a.iter().zip(&row_b) {
            inter += (ca && cb) as usize;
            union += (ca || cb) as usize;
        }
    }

    if union == 0 {
        return Err(Error::DegeneratePolygon("empty raster union".into()));
    }
    Ok(T::from_usize(inter).unwrap() / T::from_usize(union).unwrap())
}

fn first_self_intersection<T: Real>(v: &[Point2<T>]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        let (p1, p2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (q1, q2) = (v[j], v[(j + 1) % n]);
            if segments_intersect(p1, p2, q1, q2) {
                return Some((i, j));
            }
        }
    }
    None
}

fn segments_intersect<T: Real>(p1: Point2<T>, p2: Point2<T>, q1: Point2<T>, q2: Point2<T>) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero))
        && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero))
    {
        return true;
    }
    let on = |a: Point2<T>, b: Point2<T>, c: Point2<T>| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == zero && on(p1, p2, q1))
        || (d2 == zero && on(p1, p2, q2))
        || (d3 == zero && on(q1, q2, p1))
        || (d4 == zero && on(q1, q2, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon2<f64> {
        Polygon2::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
        .unwrap()
    }

    #[test]
    fn identical_polygons() {
        let a = rect(0.0, 0.0, 1.0, 2.0);
        let iou = polygon_iou(&a, &a, 256).unwrap();
        assert!((iou - 1.0).abs() <= 1.0 / 256.0);
    }

    #[test]
    fn disjoint_polygons() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        let b = rect(3.0, 0.0, 4.0, 1.0);
        assert_eq!(polygon_iou(&a, &b, 128).unwrap(), 0.0);
    }

    #[test]
    fn half_overlapping_squares() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        let b = rect(0.5, 0.0, 1.5, 1.0);
        let iou = polygon_iou(&a, &b, 1024).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 0.01, "{iou}");
        assert_eq!(iou, polygon_iou(&b, &a, 1024).unwrap());
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(Polygon2::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
        let bowtie = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(matches!(
            Polygon2::new(bowtie),
            Err(Error::DegeneratePolygon(_))
        ));
        let sliver = Polygon2::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1e-7, 0.0),
            Point2::new(0.0, 1e-7),
        ])
        .unwrap();
        let a = rect(0.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            polygon_iou(&a, &sliver, 64),
            Err(Error::DegeneratePolygon(_))
        ));
        assert!(polygon_iou(&a, &a, 32).is_err());
    }

    #[test]
    fn resolution_doubling_is_stable() {
        let tri = Polygon2::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.3),
            Point2::new(0.7, 1.9),
        ])
        .unwrap();
        let sq = rect(0.2, 0.1, 1.4, 1.2);
        let r1 = polygon_iou(&tri, &sq, 1024).unwrap();
        let r2 = polygon_iou(&tri, &sq, 2048).unwrap();
        assert!((r1 - r2).abs() < 0.005);
    }

    #[test]
    fn polyline_lengths() {
        assert_eq!(
            polyline_length(&[Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)]),
            5.0
        );
        let p = Point2::new(1.5, -2.0);
        assert_eq!(polyline_length(&[p, p]), 0.0);
        let n = 1024;
        let ring: Vec<_> = (0..=n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        assert!((polyline_length(&ring) - 2.0 * std::f64::consts::PI).abs() < 1e-4);
    }
}
