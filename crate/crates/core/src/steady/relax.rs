//! Dynamic relaxation of the steady force balance.
//!
//! The load is nondimensional: drag `f = 1` and weight `μg = R` per unit
//! length. Effective tension vanishes at the tip and has opposite signs on the
//! two halves, so the loop is modelled as two chains leaving the pinned tip,
//! each ending at its pinned horizontal-tangent point. The lower chain is
//! solved mirrored in `z`, with the weight pointing down, where its
//! tension is positive too; results are mapped back before returning.
//!
//! Iteration is explicit fictitious dynamics with unit node masses and
//! viscous damping tuned to the slowest transverse mode.

use serde::{Deserialize, Serialize};

use crate::geometry::{polyline_length, Point2};
use crate::loop_model::{scale_to_length, Half, LoopParams, PlanarCurve};
use crate::{lit, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitShape {
    /// Circular arcs of the rest length through the tip and each end.
    #[default]
    Circle,
    /// Quarter ellipses with a vertical tangent at the tip.
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxSettings<T> {
    /// Total node count including the three pinned ones.
    pub n_nodes: usize,
    /// Residual threshold on the largest free-node force.
    pub tol: T,
    pub max_iters: usize,
    /// Penalty spring modulus as a multiple of the total drag `f·L`.
    pub stiffness: T,
    /// Viscous damping as a multiple of the estimated critical value for the
    /// slowest mode.
    pub damping: T,
    pub init: InitShape,
}

impl<T: Real> Default for RelaxSettings<T> {
    fn default() -> Self {
        Self {
            n_nodes: 512,
            tol: lit(1e-8),
            max_iters: 1_000_000,
            stiffness: lit(1e3),
            damping: T::one(),
            init: InitShape::Circle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeState<T> {
    pub position: Point2<T>,
    pub velocity: Point2<T>,
    /// Effective tension in the following segment (last node: preceding one).
    pub tension: T,
}

#[derive(Debug, Clone)]
pub struct RelaxResult<T> {
    /// Nodes from the lower end through the tip to the upper end.
    pub curve: PlanarCurve<T>,
    pub residual: T,
    pub iterations: usize,
    /// Per-node effective tension, positive on both chains.
    pub tension_profile: Vec<T>,
    pub nodes: Vec<NodeState<T>>,
    /// Closed-form loop with the same `R`, length and `x₊/x₋`.
    pub params: LoopParams<T>,
    pub tip_index: usize,
}

struct Chain<T> {
    /// Positions in the solving frame, tip first.
    pos: Vec<Point2<T>>,
    rest: T,
}

impl<T: Real> Chain<T> {
    fn forces(&self, k: T, r: T, out: &mut [Point2<T>], tension: &mut [T]) {
        out.iter_mut().for_each(|f| *f = Point2::zero());
        let half = lit::<T>(0.5);
        let load = self.rest * half;
        for j in 0..self.pos.len() - 1 {
            let d = self.pos[j + 1] - self.pos[j];
            let len = d.norm();
            let tau = d * (T::one() / len);
            let t = k * (len - self.rest) / self.rest;
            tension[j] = t;
            // spring, drag toward the tip, weight
            let pull = tau * t;
            let ext = tau * (-load) + Point2::new(T::zero(), -r * load);
            out[j] = out[j] + pull + ext;
            out[j + 1] = out[j + 1] - pull + ext;
        }
    }
}

fn mirror<T: Real>(p: Point2<T>) -> Point2<T> {
    Point2::new(p.x, -p.y)
}

/// `n` points at equal arc-length spacing along a polyline.
fn resample_uniform<T: Real>(pts: &[Point2<T>], n: usize) -> Vec<Point2<T>> {
    let mut cum = vec![T::zero()];
    for w in pts.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + w[0].distance(w[1]));
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let target = total * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap();
        while j + 2 < cum.len() && cum[j + 1] < target {
            j += 1;
        }
        let span = cum[j + 1] - cum[j];
        let t = if span > T::zero() {
            ((target - cum[j]) / span).min(T::one())
        } else {
            T::zero()
        };
        out.push(pts[j] + (pts[j + 1] - pts[j]) * t);
    }
    out[n - 1] = pts[pts.len() - 1];
    out
}

fn arc_init<T: Real>(end: Point2<T>, len: T, n: usize, shape: InitShape) -> Vec<Point2<T>> {
    let m = T::from_usize(n - 1).unwrap();
    match shape {
        InitShape::Ellipse => {
            let dense = 64 * n;
            let pts: Vec<_> = (0..=dense)
                .map(|i| {
                    let phi =
                        T::FRAC_PI_2() * T::from_usize(i).unwrap() / T::from_usize(dense).unwrap();
                    Point2::new(end.x * (T::one() - phi.cos()), end.y * phi.sin())
                })
                .collect();
            resample_uniform(&pts, n)
        }
        InitShape::Circle => {
            let chord = end.norm();
            // half-angle φ with arc/chord = φ / sin φ
            let target = (len / chord).max(T::one() + lit(1e-9));
            let (mut lo, mut hi) = (lit::<T>(1e-9), T::PI() - lit(1e-9));
            for _ in 0..200 {
                let mid = (lo + hi) * lit(0.5);
                if mid / mid.sin() < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let phi = (lo + hi) * lit(0.5);
            let radius = chord / (lit::<T>(2.0) * phi.sin());
            let u = end * (T::one() / chord);
            let mut nrm = Point2::new(u.y, -u.x);
            if nrm.x > T::zero() {
                nrm = -nrm;
            }
            let centre = end * lit(0.5) - nrm * (radius * phi.cos());
            // α = 0 is the bulge apex, α = ∓φ the tip and the end
            let mut pts: Vec<_> = (0..n)
                .map(|i| {
                    let a = -phi + lit::<T>(2.0) * phi * T::from_usize(i).unwrap() / m;
                    centre + (nrm * a.cos() + u * a.sin()) * radius
                })
                .collect();
            pts[0] = Point2::zero();
            pts[n - 1] = end;
            pts
        }
    }
}

/// Relaxes a loop of total length `length` and end-abscissa ratio
/// `ratio = x₊/x₋` with gravity-to-drag ratio `r`.
pub fn relax_loop<T: Real>(
    r: T,
    length: T,
    ratio: T,
    settings: &RelaxSettings<T>,
) -> Result<RelaxResult<T>> {
    let params = scale_to_length(r, ratio, length)?;
    if settings.n_nodes < 64 {
        return Err(Error::invalid(format!(
            "relaxation needs n_nodes >= 64, got {}",
            settings.n_nodes
        )));
    }
    if !(settings.tol > T::zero()) || !(settings.stiffness > T::zero()) {
        return Err(Error::invalid("relaxation tol and stiffness must be > 0"));
    }

    let (len_u, len_l) = (
        params.half_length(Half::Upper),
        params.half_length(Half::Lower),
    );
    let segs = settings.n_nodes - 1;
    let seg_u = (len_u / (len_u + len_l) * T::from_usize(segs).unwrap())
        .round()
        .to_usize()
        .unwrap_or(segs / 2);
    let seg_u = seg_u.clamp(2, segs - 2);
    let seg_l = segs - seg_u;

    // lower chain in its mirrored frame, where it ends at (x₋, −R·x₋/(1−R²))
    let end_u = params.extremum(Half::Upper);
    let end_l = mirror(params.extremum(Half::Lower));
    let mut chains = [
        Chain {
            pos: arc_init(end_u, len_u, seg_u + 1, settings.init),
            rest: len_u / T::from_usize(seg_u).unwrap(),
        },
        Chain {
            pos: arc_init(end_l, len_l, seg_l + 1, settings.init),
            rest: len_l / T::from_usize(seg_l).unwrap(),
        },
    ];

    let k = settings.stiffness * length;
    let kappa = chains.iter().map(|c| k / c.rest).fold(T::zero(), T::max);
    let dt = lit::<T>(0.9) / kappa.sqrt();
    // critical damping of the slowest transverse mode, estimated as a taut
    // string with mean tension half the accumulated load
    let omega_min = chains
        .iter()
        .map(|c| {
            let len = c.rest * T::from_usize(c.pos.len() - 1).unwrap();
            T::PI() * (lit::<T>(0.5) * len * c.rest).sqrt() / len
        })
        .fold(T::infinity(), T::min);
    // the drag is a follower load; near R = 1 the chain flutters unless the
    // damping grows with the slenderness 1/(1−R²) of the loop
    let boost = T::one() / (T::one() - r * r);
    let keep = T::one() - lit::<T>(2.0) * settings.damping * boost * omega_min * dt;

    let mut vel: Vec<Vec<Point2<T>>> = chains
        .iter()
        .map(|c| vec![Point2::zero(); c.pos.len()])
        .collect();
    let mut force: Vec<Vec<Point2<T>>> = chains
        .iter()
        .map(|c| vec![Point2::zero(); c.pos.len()])
        .collect();
    let mut tension: Vec<Vec<T>> = chains
        .iter()
        .map(|c| vec![T::zero(); c.pos.len() - 1])
        .collect();

    let mut iterations = 0;
    let residual = loop {
        let mut residual = T::zero();
        for (c, (f, t)) in chains.iter().zip(force.iter_mut().zip(tension.iter_mut())) {
            c.forces(k, r, f, t);
            let last = f.len() - 1;
            residual = f[1..last].iter().map(|p| p.norm()).fold(residual, T::max);
        }
        if residual < settings.tol {
            break residual;
        }
        if iterations >= settings.max_iters {
            return Err(Error::NonConvergence {
                iterations,
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        iterations += 1;

        for ((c, v), f) in chains.iter_mut().zip(vel.iter_mut()).zip(&force) {
            let last = c.pos.len() - 1;
            for i in 1..last {
                v[i] = v[i] * keep + f[i] * dt;
                c.pos[i] = c.pos[i] + v[i] * dt;
            }
        }
    };

    // assemble lower end → tip → upper end in the loop frame
    let mut pos = Vec::with_capacity(settings.n_nodes);
    let mut vel_all = Vec::with_capacity(settings.n_nodes);
    let mut ten = Vec::with_capacity(settings.n_nodes);
    let mut halves = Vec::with_capacity(settings.n_nodes);
    let lower = &chains[1];
    for i in (1..lower.pos.len()).rev() {
        pos.push(mirror(lower.pos[i]));
        vel_all.push(mirror(vel[1][i]));
        ten.push(tension[1][i - 1]);
        halves.push(Half::Lower);
    }
    let tip_index = pos.len();
    for (i, p) in chains[0].pos.iter().enumerate() {
        pos.push(*p);
        vel_all.push(vel[0][i]);
        ten.push(tension[0][i.min(tension[0].len() - 1)]);
        halves.push(Half::Upper);
    }

    let n = pos.len();
    let pts: Vec<_> = (0..n)
        .map(|i| {
            let d = if i + 1 < n {
                pos[i + 1] - pos[i]
            } else {
                pos[i] - pos[i - 1]
            };
            (pos[i], d.y.atan2(d.x), Some(halves[i]))
        })
        .collect();
    let curve = PlanarCurve::from_polyline(&pts, false);
    let nodes = (0..n)
        .map(|i| NodeState {
            position: pos[i],
            velocity: vel_all[i],
            tension: ten[i],
        })
        .collect();
    debug_assert!((polyline_length(&pos) - curve.length()).abs() < lit(1e-9));

    Ok(RelaxResult {
        curve,
        residual,
        iterations,
        tension_profile: ten,
        nodes,
        params,
        tip_index,
    })
}

/// `(s, T°)` per node, `s` measured along the chain from the lower end.
pub fn tension_profile<T: Real>(result: &RelaxResult<T>) -> Vec<(T, T)> {
    result
        .curve
        .points
        .iter()
        .zip(&result.tension_profile)
        .map(|(p, &t)| (p.s, t))
        .collect()
}

/// Distance from every node of `curve` to the closed-form curve of
/// `params` (both halves, tip to extremum).
pub fn distances_to_closed_form<T: Real>(curve: &PlanarCurve<T>, params: &LoopParams<T>) -> Vec<T> {
    const DENSE: usize = 4096;
    let polys: Vec<Vec<Point2<T>>> = [Half::Upper, Half::Lower]
        .iter()
        .map(|&h| {
            let end = params.x_half(h);
            (0..=DENSE)
                .map(|k| {
                    let t =
                        T::FRAC_PI_2() * T::from_usize(k).unwrap() / T::from_usize(DENSE).unwrap();
                    let x = end * t.sin() * t.sin();
                    Point2::new(x, params.z(h, x))
                })
                .collect()
        })
        .collect();
    curve
        .points
        .iter()
        .map(|p| {
            let q = p.position();
            polys
                .iter()
                .flat_map(|poly| poly.windows(2))
                .map(|w| segment_distance(q, w[0], w[1]))
                .fold(T::infinity(), T::min)
        })
        .collect()
}

pub fn mean_distance_to_closed_form<T: Real>(curve: &PlanarCurve<T>, params: &LoopParams<T>) -> T {
    let d = distances_to_closed_form(curve, params);
    d.iter().copied().sum::<T>() / T::from_usize(d.len()).unwrap()
}

fn segment_distance<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / l2).max(T::zero()).min(T::one());
    p.distance(a + d * t)
}
