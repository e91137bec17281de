//! Intrinsic (arc-length) form of the steady balance.
//!
//! Along either half, measured outward from the tip, the integrated balance
//! `x·tanθ − z = ±R·s` differentiates to the curvature law
//! `dθ/ds = ±R·cos²θ / x` with `dx/ds = cosθ`, `dz/ds = sinθ`: upper half `+`,
//! lower half `−`. The right-hand side is singular at the tip, so the
//! integration starts at `x = ε`.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::loop_model::{Half, LoopParams, PlanarCurve};
use crate::{lit, Error, Real, Result};

/// How the state at `x = ε` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// Position, angle and arc length from the closed form (validation runs).
    #[default]
    ClosedForm,
    /// Leading singular term of the tip expansion only:
    /// `z ≈ ∓x·u^−R / (2(1−R))`, `tanθ ≈ ∓u^−R / 2`.
    LeadingOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings<T> {
    pub ds: T,
    pub epsilon: T,
    pub max_steps: usize,
    pub seed: SeedMode,
}

impl<T: Real> OdeSettings<T> {
    pub fn new(ds: T, epsilon: T) -> Self {
        Self {
            ds,
            epsilon,
            max_steps: 10_000_000,
            seed: SeedMode::ClosedForm,
        }
    }

    fn check(&self, x_half: T) -> Result<()> {
        if !(self.ds > T::zero() && self.ds < x_half / lit(10.0)) {
            return Err(Error::invalid("ODE step must satisfy 0 < ds < x_half/10"));
        }
        if !(self.epsilon > T::zero() && self.epsilon < x_half / lit(100.0)) {
            return Err(Error::invalid(
                "ODE start offset must satisfy 0 < epsilon < x_half/100",
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct State<T> {
    x: T,
    z: T,
    theta: T,
}

fn rhs<T: Real>(s: State<T>, k: T) -> State<T> {
    let c = s.theta.cos();
    State {
        x: c,
        z: s.theta.sin(),
        theta: k * c * c / s.x,
    }
}

fn rk4<T: Real>(y: State<T>, h: T, k: T) -> State<T> {
    let add = |a: State<T>, b: State<T>, f: T| State {
        x: a.x + b.x * f,
        z: a.z + b.z * f,
        theta: a.theta + b.theta * f,
    };
    let half = h * lit(0.5);
    let k1 = rhs(y, k);
    let k2 = rhs(add(y, k1, half), k);
    let k3 = rhs(add(y, k2, half), k);
    let k4 = rhs(add(y, k3, h), k);
    let sixth = h / lit(6.0);
    State {
        x: y.x + sixth * (k1.x + lit::<T>(2.0) * (k2.x + k3.x) + k4.x),
        z: y.z + sixth * (k1.z + lit::<T>(2.0) * (k2.z + k3.z) + k4.z),
        theta: y.theta + sixth * (k1.theta + lit::<T>(2.0) * (k2.theta + k3.theta) + k4.theta),
    }
}

/// Fixed-step RK4 from `x = ε` to the horizontal-tangent point of `half`.
///
/// Stops when `|θ| < 1e-6`, when `x ≥ x_half`, or when θ changes sign, in
/// which case the last step is shortened so that it lands on `θ = 0`.
pub fn integrate_intrinsic<T: Real>(
    r: T,
    half: Half,
    x_half: T,
    settings: &OdeSettings<T>,
) -> Result<PlanarCurve<T>> {
    let params = LoopParams::new(r, x_half, x_half)?;
    settings.check(x_half)?;
    let k = half.sign::<T>() * r;
    let eps = settings.epsilon;

    let (z0, theta0, s0) = match settings.seed {
        SeedMode::ClosedForm => (
            params.z(half, eps),
            params.slope(half, eps).atan(),
            params.arc_length_to(half, eps),
        ),
        SeedMode::LeadingOrder => {
            let lead = (eps / x_half).powf(-r) * lit(0.5);
            let sign = half.sign::<T>();
            (
                -sign * eps * lead / (T::one() - r),
                (-sign * lead).atan(),
                eps * lead / (T::one() - r),
            )
        }
    };

    let theta_tol = lit::<T>(1e-6);
    let mut y = State {
        x: eps,
        z: z0,
        theta: theta0,
    };
    let mut s = s0;
    let mut out = vec![(y, s)];
    let mut done = y.theta.abs() < theta_tol;
    let mut steps = 0usize;

    while !done {
        if steps >= settings.max_steps {
            return Err(Error::NonConvergence {
                iterations: steps,
                residual: y.theta.abs().to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut h = settings.ds;
        let mut next = rk4(y, h, k);
        if next.theta.signum() != y.theta.signum() && next.theta != T::zero() {
            // regula falsi on the step length for the landing step
            let (mut lo, mut th_lo) = (T::zero(), y.theta);
            let (mut hi, mut th_hi) = (h, next.theta);
            for _ in 0..16 {
                h = lo + (hi - lo) * th_lo / (th_lo - th_hi);
                next = rk4(y, h, k);
                if next.theta.abs() < theta_tol {
                    break;
                }
                if next.theta.signum() == y.theta.signum() {
                    lo = h;
                    th_lo = next.theta;
                } else {
                    hi = h;
                    th_hi = next.theta;
                }
            }
            done = true;
        }
        s = s + h;
        y = next;
        steps += 1;
        out.push((y, s));
        if y.theta.abs() < theta_tol || y.x >= x_half {
            done = true;
        }
    }

    let pts: Vec<_> = out
        .iter()
        .map(|(st, _)| (Point2::new(st.x, st.z), st.theta, Some(half)))
        .collect();
    let mut curve = PlanarCurve::from_polyline(&pts, false);
    // carry the integrated arc length rather than the chord sum
    for (p, (_, s)) in curve.points.iter_mut().zip(&out) {
        p.s = *s;
    }
    Ok(curve)
}

/// Max and mean `|z − z_closed(x)|` over curve points with `x ≥ x_min`.
pub fn closed_form_deviation<T: Real>(
    curve: &PlanarCurve<T>,
    params: &LoopParams<T>,
    half: Half,
    x_min: T,
) -> (T, T) {
    let devs: Vec<T> = curve
        .points
        .iter()
        .filter(|p| p.x >= x_min)
        .map(|p| (p.z - params.z(half, p.x)).abs())
        .collect();
    if devs.is_empty() {
        return (T::zero(), T::zero());
    }
    let max = devs.iter().copied().fold(T::zero(), T::max);
    let mean = devs.iter().copied().sum::<T>() / T::from_usize(devs.len()).unwrap();
    (max, mean)
}
