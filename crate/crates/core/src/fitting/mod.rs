//! Recovering `(R, x₊, x₋)` from measured loop points, and the region-overlap
//! score used to judge a fit.

mod simplex;

pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{polygon_iou, Point2, Polygon2, DEFAULT_IOU_RESOLUTION};
use crate::loop_model::{Half, LoopParams};
use crate::{lit, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint<T> {
    pub x: T,
    pub z: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_hint: Option<Half>,
}

impl<T: Real> SamplePoint<T> {
    pub fn new(x: T, z: T) -> Self {
        Self {
            x,
            z,
            half_hint: None,
        }
    }

    pub fn on(half: Half, x: T, z: T) -> Self {
        Self {
            x,
            z,
            half_hint: Some(half),
        }
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions<T> {
    pub r_bounds: (T, T),
    /// Starts per axis of the `(R, x₊, x₋)` grid.
    pub multistart_grid: usize,
    pub simplex_tol: T,
    pub max_evals: usize,
    /// Also fit a rigid translation of the samples.
    pub fit_translation: bool,
    /// Replaces the grid with this single start.
    pub start: Option<LoopParams<T>>,
    pub iou_resolution: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            r_bounds: (lit(0.01), lit(0.99)),
            multistart_grid: 6,
            simplex_tol: lit(1e-12),
            max_evals: 10_000,
            fit_translation: false,
            start: None,
            iou_resolution: DEFAULT_IOU_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<T> {
    pub params: LoopParams<T>,
    /// Sum of squared residuals.
    pub objective: T,
    pub iou: T,
    pub assignments: Vec<Half>,
    /// `z_i − z_half(x_i)` per sample.
    pub residuals: Vec<T>,
    /// Indices of samples whose `x` was clamped into the half's domain.
    pub clamps: Vec<usize>,
    /// Translation subtracted from the samples (zero unless fitted).
    pub offset: Point2<T>,
    pub evaluations: usize,
}

/// Point on `half` with abscissa `x` clamped to `[0, x_half]`, and whether
/// clamping happened.
fn predict<T: Real>(params: &LoopParams<T>, half: Half, x: T) -> (Point2<T>, bool) {
    let limit = params.x_half(half);
    let xc = x.max(T::zero()).min(limit);
    (Point2::new(xc, params.z(half, xc)), xc != x)
}

fn nearest_half<T: Real>(params: &LoopParams<T>, s: &SamplePoint<T>) -> Half {
    if let Some(h) = s.half_hint {
        return h;
    }
    let du = (s.z - predict(params, Half::Upper, s.x).0.y).abs();
    let dl = (s.z - predict(params, Half::Lower, s.x).0.y).abs();
    if dl < du {
        Half::Lower
    } else {
        Half::Upper
    }
}

/// Hint if present, otherwise the half whose prediction is nearer.
pub fn assign_halves<T: Real>(params: &LoopParams<T>, samples: &[SamplePoint<T>]) -> Vec<Half> {
    samples.iter().map(|s| nearest_half(params, s)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Counterpart<T> {
    pub point: Point2<T>,
    pub half: Half,
    pub clamped: bool,
}

/// Closed-form point at each sample's (clamped) abscissa on its half.
pub fn theoretical_counterparts<T: Real>(
    params: &LoopParams<T>,
    samples: &[SamplePoint<T>],
) -> Vec<Counterpart<T>> {
    samples
        .iter()
        .map(|s| {
            let half = nearest_half(params, s);
            let (point, clamped) = predict(params, half, s.x);
            Counterpart {
                point,
                half,
                clamped,
            }
        })
        .collect()
}

fn angular_order<T: Real>(pts: &[Point2<T>]) -> Vec<usize> {
    let n = T::from_usize(pts.len()).unwrap();
    let c = pts.iter().fold(Point2::zero(), |a, &p| a + p) * (T::one() / n);
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let angle = |p: Point2<T>| (p.y - c.y).atan2(p.x - c.x);
    idx.sort_by(|&a, &b| {
        angle(pts[a])
            .partial_cmp(&angle(pts[b]))
            .unwrap()
            .then(a.cmp(&b))
    });
    idx
}

// Clamped counterparts collapse onto the same extremum point.
fn without_repeats<T: Real>(pts: impl Iterator<Item = Point2<T>>) -> Vec<Point2<T>> {
    let mut out: Vec<Point2<T>> = Vec::new();
    for p in pts {
        if out.last() != Some(&p) && out.first() != Some(&p) {
            out.push(p);
        }
    }
    out
}

/// IoU between the polygon of the samples and that of their counterparts.
///
/// Samples are ordered by angle about their centroid and the counterparts
/// follow the same order. Should that order not give a simple counterpart
/// polygon, the counterparts are re-ordered about their own centroid.
pub fn grasp_region_iou<T: Real>(
    samples: &[SamplePoint<T>],
    params: &LoopParams<T>,
    resolution: usize,
) -> Result<T> {
    if samples.len() < 3 {
        return Err(Error::DegeneratePolygon(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let measured: Vec<Point2<T>> = samples.iter().map(SamplePoint::position).collect();
    let theory: Vec<Point2<T>> = theoretical_counterparts(params, samples)
        .iter()
        .map(|c| c.point)
        .collect();
    let order = angular_order(&measured);
    let ring = |pts: &[Point2<T>], order: &[usize]| {
        Polygon2::new(without_repeats(order.iter().map(|&i| pts[i])))
    };
    let a = ring(&measured, &order)?;
    let b = match ring(&theory, &order) {
        Ok(p) => p,
        Err(_) => ring(&theory, &angular_order(&theory))?,
    };
    polygon_iou(&a, &b, resolution)
}

/// Shifts samples so the leftmost one sits at the origin. Returns the shifted
/// samples and the shift that was subtracted.
pub fn align_to_tip<T: Real>(
    samples: &[SamplePoint<T>],
) -> Result<(Vec<SamplePoint<T>>, Point2<T>)> {
    let tip = samples
        .iter()
        .min_by(|a, b| a.x.partial_cmp(&b.x).unwrap())
        .ok_or_else(|| Error::InsufficientData("no samples".into()))?
        .position();
    let shifted = samples
        .iter()
        .map(|s| SamplePoint {
            x: s.x - tip.x,
            z: s.z - tip.y,
            half_hint: s.half_hint,
        })
        .collect();
    Ok((shifted, tip))
}

struct Problem<'a, T> {
    samples: &'a [SamplePoint<T>],
    r_bounds: (T, T),
    translation: bool,
}

impl<T: Real> Problem<'_, T> {
    fn unpack(&self, v: &[T]) -> Option<(LoopParams<T>, Point2<T>)> {
        if v[0] < self.r_bounds.0 || v[0] > self.r_bounds.1 {
            return None;
        }
        let params = LoopParams::new(v[0], v[1], v[2]).ok()?;
        let offset = if self.translation {
            Point2::new(v[3], v[4])
        } else {
            Point2::zero()
        };
        Some((params, offset))
    }

    fn shifted(&self, s: &SamplePoint<T>, offset: Point2<T>) -> SamplePoint<T> {
        SamplePoint {
            x: s.x - offset.x,
            z: s.z - offset.y,
            half_hint: s.half_hint,
        }
    }

    fn assignments(&self, v: &[T]) -> Option<Vec<Half>> {
        let (p, o) = self.unpack(v)?;
        Some(
            self.samples
                .iter()
                .map(|s| nearest_half(&p, &self.shifted(s, o)))
                .collect(),
        )
    }

    fn objective(&self, v: &[T], halves: &[Half]) -> T {
        let Some((p, o)) = self.unpack(v) else {
            return T::infinity();
        };
        self.samples
            .iter()
            .zip(halves)
            .map(|(s, &h)| {
                let s = self.shifted(s, o);
                let d = s.z - predict(&p, h, s.x).0.y;
                d * d
            })
            .sum()
    }
}

fn grid<T: Real>(lo: T, hi: T, n: usize, geometric: bool) -> Vec<T> {
    (0..n)
        .map(|k| {
            let t = if n == 1 {
                lit(0.5)
            } else {
                T::from_usize(k).unwrap() / T::from_usize(n - 1).unwrap()
            };
            if geometric {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect()
}

fn check_halves<T: Real>(samples: &[SamplePoint<T>]) -> Result<()> {
    if samples.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "need at least 6 samples, got {}",
            samples.len()
        )));
    }
    let side = |s: &SamplePoint<T>| {
        s.half_hint.unwrap_or(if s.z > T::zero() {
            Half::Lower
        } else {
            Half::Upper
        })
    };
    let upper = samples.iter().filter(|s| side(s) == Half::Upper).count();
    if upper == 0 || upper == samples.len() {
        return Err(Error::InsufficientData(
            "samples must cover both halves of the loop".into(),
        ));
    }
    Ok(())
}

/// Least-squares fit of the closed-form loop to `samples`.
///
/// Every start of a multistart grid is scored with its own nearest-half
/// assignment; the best start fixes the assignment, which then stays frozen
/// while a Nelder–Mead simplex descends. Assignments are refreshed between
/// simplex restarts until they stop changing.
pub fn fit_params<T: Real>(
    samples: &[SamplePoint<T>],
    opts: &FitOptions<T>,
) -> Result<FitResult<T>> {
    check_halves(samples)?;
    if samples.iter().any(|s| !s.position().is_finite()) {
        return Err(Error::invalid("sample coordinates must be finite"));
    }
    let (r_lo, r_hi) = opts.r_bounds;
    if !(r_lo < r_hi) || opts.multistart_grid == 0 || opts.max_evals == 0 {
        return Err(Error::invalid(
            "fit options need r_bounds lo < hi, grid >= 1, max_evals >= 1",
        ));
    }
    let problem = Problem {
        samples,
        r_bounds: opts.r_bounds,
        translation: opts.fit_translation,
    };

    let x_max = samples.iter().map(|s| s.x).fold(T::zero(), T::max);
    let x_max = if x_max > T::zero() { x_max } else { T::one() };
    let extra = if opts.fit_translation {
        vec![T::zero(), T::zero()]
    } else {
        vec![]
    };
    let starts: Vec<Vec<T>> = match &opts.start {
        Some(p) => vec![[vec![p.r(), p.x_plus(), p.x_minus()], extra.clone()].concat()],
        None => {
            let g = opts.multistart_grid;
            let r_grid = grid(r_lo.max(lit(1e-6)), r_hi.min(lit(1.0 - 1e-6)), g, false);
            let x_grid = grid(x_max * lit(0.05), x_max * lit(1.5), g, true);
            let mut v = Vec::new();
            for &r in &r_grid {
                for &xp in &x_grid {
                    for &xm in &x_grid {
                        v.push([vec![r, xp, xm], extra.clone()].concat());
                    }
                }
            }
            v
        }
    };

    let scored: Vec<(T, Vec<T>, Vec<Half>)> = starts
        .par_iter()
        .filter_map(|v| {
            let halves = problem.assignments(v)?;
            let f = problem.objective(v, &halves);
            f.is_finite().then(|| (f, v.clone(), halves))
        })
        .collect();
    let (mut best_f, mut best, mut halves) = scored
        .into_iter()
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1[0].partial_cmp(&b.1[0]).unwrap())
                .then(a.1[1].partial_cmp(&b.1[1]).unwrap())
        })
        .ok_or(Error::NoValidStart)?;

    let mut evaluations = 0;
    for _ in 0..10 {
        let steps: Vec<T> = best
            .iter()
            .enumerate()
            .map(|(k, &v)| match k {
                0 => lit::<T>(0.05).min((r_hi - v).max(v - r_lo) * lit(0.5)),
                1 | 2 => v * lit(0.1),
                _ => x_max * lit(0.02),
            })
            .collect();
        let budget = opts.max_evals.saturating_sub(evaluations).max(1);
        let so = SimplexOptions {
            tol: opts.simplex_tol,
            max_evals: budget,
        };
        let res = nelder_mead(|v| problem.objective(v, &halves), &best, &steps, &so);
        evaluations += res.evals;
        let improved = res.f < best_f;
        if improved {
            best_f = res.f;
            best = res.x;
        }
        let fresh = problem.assignments(&best).expect("best point is feasible");
        let changed = fresh != halves;
        if changed {
            let f = problem.objective(&best, &fresh);
            if f <= best_f {
                best_f = f;
                halves = fresh;
            }
        }
        let settled = !improved || best_f - res.f.min(best_f) < opts.simplex_tol;
        if (!changed && settled) || evaluations >= opts.max_evals {
            break;
        }
    }

    let (params, offset) = problem.unpack(&best).expect("best point is feasible");
    let shifted: Vec<SamplePoint<T>> = samples.iter().map(|s| problem.shifted(s, offset)).collect();
    let mut residuals = Vec::with_capacity(samples.len());
    let mut clamps = Vec::new();
    for (i, (s, &h)) in shifted.iter().zip(&halves).enumerate() {
        let (p, clamped) = predict(&params, h, s.x);
        residuals.push(s.z - p.y);
        if clamped {
            clamps.push(i);
        }
    }
    let objective = residuals.iter().map(|&r| r * r).sum();
    let pinned: Vec<SamplePoint<T>> = shifted
        .iter()
        .zip(&halves)
        .map(|(s, &h)| SamplePoint {
            half_hint: Some(h),
            ..*s
        })
        .collect();
    let iou = grasp_region_iou(&pinned, &params, opts.iou_resolution)?;
    Ok(FitResult {
        params,
        objective,
        iou,
        assignments: halves,
        residuals,
        clamps,
        offset,
        evaluations,
    })
}

/// `n_per_half` samples on each half at `sin²`-spaced abscissae (tip
/// excluded, extremum included), with independent Gaussian noise of standard
/// deviation `sigma` on both coordinates.
pub fn synthetic_samples(
    params: &LoopParams<f64>,
    n_per_half: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<SamplePoint<f64>>> {
    if n_per_half == 0 {
        return Err(Error::invalid("n_per_half must be >= 1"));
    }
    let noise = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_per_half);
    for half in [Half::Upper, Half::Lower] {
        for k in 1..=n_per_half {
            let t = std::f64::consts::FRAC_PI_2 * k as f64 / n_per_half as f64;
            let x = params.x_half(half) * t.sin().powi(2);
            let z = params.z(half, x);
            let (dx, dz) = if sigma > 0.0 {
                (noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            out.push(SamplePoint::on(half, x + dx, z + dz));
        }
    }
    Ok(out)
}
