//! Incremental quickhull in 3D.
//!
//! Faces are oriented triangles with outward normals. Each live face owns the
//! set of still-unprocessed points lying strictly in front of its plane; the
//! farthest such point is added next, the cone of visible faces is removed and
//! the horizon is re-triangulated against the new apex.

use std::collections::HashMap;

use super::Point3;
use crate::{lit, Error, Real, Result};

/// Relative coplanarity tolerance, scaled by the bounding-box diagonal.
const PLANE_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Hull3<T> {
    pub vertices: Vec<Point3<T>>,
    /// Vertex-index triangles, counter-clockwise seen from outside.
    pub facets: Vec<[usize; 3]>,
    volume: T,
}

impl<T: Real> Hull3<T> {
    pub fn volume(&self) -> T {
        self.volume
    }

    /// Outward unit normal and offset (`n·p = offset` on the plane) per facet.
    pub fn planes(&self) -> Vec<(Point3<T>, T)> {
        self.facets
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                let n = (b - a).cross(c - a);
                let n = n * (T::one() / n.norm());
                (n, n.dot(a))
            })
            .collect()
    }

    /// Largest signed distance from `p` to any facet plane; `<= 0` means inside.
    pub fn max_signed_distance(&self, p: Point3<T>) -> T {
        self.planes()
            .iter()
            .map(|(n, off)| n.dot(p) - *off)
            .fold(T::neg_infinity(), T::max)
    }

    pub fn contains(&self, p: Point3<T>, tol: T) -> bool {
        self.max_signed_distance(p) <= tol
    }
}

/// Volume of a hull as a fan of tetrahedra from the vertex mean.
pub fn hull_volume<T: Real>(hull: &Hull3<T>) -> T {
    fan_volume(&hull.vertices, &hull.facets)
}

fn fan_volume<T: Real>(vertices: &[Point3<T>], facets: &[[usize; 3]]) -> T {
    if vertices.is_empty() {
        return T::zero();
    }
    let n = T::from_usize(vertices.len()).unwrap();
    let c = vertices.iter().fold(Point3::zero(), |acc, &p| acc + p) * (T::one() / n);
    let six = lit::<T>(6.0);
    let v: T = facets
        .iter()
        .map(|f| {
            let [a, b, d] = f.map(|i| vertices[i] - c);
            a.dot(b.cross(d))
        })
        .sum();
    (v / six).max(T::zero())
}

struct Face<T> {
    v: [usize; 3],
    normal: Point3<T>,
    offset: T,
    outside: Vec<usize>,
    alive: bool,
}

impl<T: Real> Face<T> {
    fn new(points: &[Point3<T>], v: [usize; 3]) -> Self {
        let [a, b, c] = v.map(|i| points[i]);
        let n = (b - a).cross(c - a);
        let len = n.norm();
        let normal = if len > T::zero() {
            n * (T::one() / len)
        } else {
            n
        };
        Face {
            v,
            normal,
            offset: normal.dot(a),
            outside: Vec::new(),
            alive: true,
        }
    }

    fn distance(&self, p: Point3<T>) -> T {
        self.normal.dot(p) - self.offset
    }
}

/// Convex hull of at least four non-coplanar points.
pub fn convex_hull_3d<T: Real>(points: &[Point3<T>]) -> Result<Hull3<T>> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegenerateInput("non-finite point coordinate".into()));
    }

    let (lo, hi) = bounds(points);
    let diag = (hi - lo).norm();
    if diag <= T::zero() {
        return Err(Error::DegenerateInput("all points coincide".into()));
    }
    let eps = lit::<T>(PLANE_EPS) * diag;

    let simplex = initial_simplex(points, eps)?;
    let mut faces: Vec<Face<T>> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();

    let [i0, i1, i2, i3] = simplex;
    let interior = (points[i0] + points[i1] + points[i2] + points[i3]) * lit::<T>(0.25);
    for tri in [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]] {
        let mut face = Face::new(points, tri);
        if face.distance(interior) > T::zero() {
            face = Face::new(points, [tri[0], tri[2], tri[1]]);
        }
        add_face(&mut faces, &mut edges, face);
    }

    for (idx, &p) in points.iter().enumerate() {
        if simplex.contains(&idx) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.distance(p) > eps) {
            f.outside.push(idx);
        }
    }

    let mut pending: Vec<usize> = (0..faces.len())
        .filter(|&i| !faces[i].outside.is_empty())
        .collect();
    let mut visible: Vec<usize> = Vec::new();
    let mut mark: Vec<u32> = vec![0; faces.len()];
    let mut epoch: u32 = 0;

    while let Some(fi) = pending.pop() {
        if !faces[fi].alive || faces[fi].outside.is_empty() {
            continue;
        }
        let apex = {
            let f = &faces[fi];
            *f.outside
                .iter()
                .max_by(|&&a, &&b| {
                    f.distance(points[a])
                        .partial_cmp(&f.distance(points[b]))
                        .unwrap()
                })
                .unwrap()
        };
        let p = points[apex];

        // Flood the connected set of faces that see the apex.
        epoch += 1;
        mark.resize(faces.len(), 0);
        visible.clear();
        visible.push(fi);
        mark[fi] = epoch;
        let mut k = 0;
        while k < visible.len() {
            let f = visible[k];
            k += 1;
            let v = faces[f].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                if let Some(&nb) = edges.get(&(b, a)) {
                    if mark[nb] != epoch && faces[nb].distance(p) > eps {
                        mark[nb] = epoch;
                        visible.push(nb);
                    }
                }
            }
        }

        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                match edges.get(&(b, a)) {
                    Some(&nb) if mark[nb] == epoch => {}
                    _ => horizon.push((a, b)),
                }
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            let face = &mut faces[f];
            face.alive = false;
            orphans.append(&mut face.outside);
            let v = face.v;
            for e in 0..3 {
                edges.remove(&(v[e], v[(e + 1) % 3]));
            }
        }

        let first_new = faces.len();
        for &(a, b) in &horizon {
            add_face(&mut faces, &mut edges, Face::new(points, [a, b, apex]));
        }
        for idx in orphans {
            if idx == apex {
                continue;
            }
            let q = points[idx];
            if let Some(f) = faces[first_new..].iter_mut().find(|f| f.distance(q) > eps) {
                f.outside.push(idx);
            }
        }
        for (f, face) in faces.iter().enumerate().skip(first_new) {
            if !face.outside.is_empty() {
                pending.push(f);
            }
        }
    }

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut facets = Vec::new();
    for face in faces.iter().filter(|f| f.alive) {
        let tri = face.v.map(|i| {
            *remap.entry(i).or_insert_with(|| {
                vertices.push(points[i]);
                vertices.len() - 1
            })
        });
        facets.push(tri);
    }
    let volume = fan_volume(&vertices, &facets);
    Ok(Hull3 {
        vertices,
        facets,
        volume,
    })
}

fn add_face<T: Real>(
    faces: &mut Vec<Face<T>>,
    edges: &mut HashMap<(usize, usize), usize>,
    face: Face<T>,
) {
    let id = faces.len();
    let v = face.v;
    for e in 0..3 {
        edges.insert((v[e], v[(e + 1) % 3]), id);
    }
    faces.push(face);
}

fn bounds<T: Real>(points: &[Point3<T>]) -> (Point3<T>, Point3<T>) {
    points.iter().fold((points[0], points[0]), |(lo, hi), p| {
        (
            Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
            Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
        )
    })
}

fn initial_simplex<T: Real>(points: &[Point3<T>], eps: T) -> Result<[usize; 4]> {
    // Extreme points along each axis; take the most separated pair.
    let mut extremes = [0usize; 6];
    for (i, p) in points.iter().enumerate() {
        let c = p.to_array();
        for axis in 0..3 {
            if c[axis] < points[extremes[2 * axis]].to_array()[axis] {
                extremes[2 * axis] = i;
            }
            if c[axis] > points[extremes[2 * axis + 1]].to_array()[axis] {
                extremes[2 * axis + 1] = i;
            }
        }
    }
    let mut best = (extremes[0], extremes[1]);
    let mut best_d = T::neg_infinity();
    for &a in &extremes {
        for &b in &extremes {
            let d = points[a].distance(points[b]);
            if d > best_d {
                best_d = d;
                best = (a, b);
            }
        }
    }
    let (i0, i1) = best;
    let dir = points[i1] - points[i0];

    let (i2, d2) = argmax(points, |p| (p - points[i0]).cross(dir).norm() / dir.norm());
    if d2 <= eps {
        return Err(Error::DegenerateInput(
            "points are collinear (rank < 3)".into(),
        ));
    }
    let n = dir.cross(points[i2] - points[i0]);
    let n = n * (T::one() / n.norm());
    let (i3, d3) = argmax(points, |p| n.dot(p - points[i0]).abs());
    if d3 <= eps {
        return Err(Error::DegenerateInput(
            "points are coplanar (rank < 3)".into(),
        ));
    }
    Ok([i0, i1, i2, i3])
}

fn argmax<T: Real>(points: &[Point3<T>], f: impl Fn(Point3<T>) -> T) -> (usize, T) {
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, f(p)))
        .fold((0, T::neg_infinity()), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}
