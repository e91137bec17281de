//! Closed-form steady shape of a self-supporting string loop.
//!
//! In the loop's vertical working plane, with the origin at the tip where the
//! tangent is vertical, the two halves are
//!
//! ```text
//! z₊(x) = ½ ( x/(1+R)·|x/x₊|^R  − x/(1−R)·|x/x₊|^−R )
//! z₋(x) = ½ ( x/(1−R)·|x/x₋|^−R − x/(1+R)·|x/x₋|^R  )
//! ```
//!
//! with `R = μg/f` the weight-to-drag ratio. The halves have horizontal
//! tangents at `x = x₊` and `x = x₋` and only exist for `R < 1`. Signs are
//! used exactly as written: `z₊(x₊) = −R·x₊/(1−R²)` is negative.
//!
//! Two facts of the family are used throughout:
//! `√(1 + z′²) = ½(u^R + u^−R)` with `u = x/x_half`, so the arc length has a
//! closed form; and the family is homogeneous of degree one in `(x, x₊, x₋)`.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::{lit, Error, Real, Result};

/// Smallest |x| used when evaluating `|x/x±|^−R`.
const X_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Upper,
    Lower,
}

impl Half {
    /// +1 for the upper half, −1 for the lower; the lower half is the
    /// mirror image in z of an upper half with the same extent.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Half::Upper => T::one(),
            Half::Lower => -T::one(),
        }
    }

    pub fn other(self) -> Half {
        match self {
            Half::Upper => Half::Lower,
            Half::Lower => Half::Upper,
        }
    }
}

impl std::str::FromStr for Half {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" | "+" | "u" => Ok(Half::Upper),
            "lower" | "-" | "l" => Ok(Half::Lower),
            other => Err(Error::invalid(format!("unknown half '{other}'"))),
        }
    }
}

/// String properties: linear density, drag per unit length, gravity, speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams<T> {
    pub mu: T,
    pub f: T,
    pub g: T,
    pub v: T,
}

impl<T: Real> PhysicalParams<T> {
    pub fn new(mu: T, f: T, g: T, v: T) -> Result<Self> {
        let ok = |x: T| x.is_finite() && x > T::zero();
        if !(ok(mu) && ok(f) && ok(g)) {
            return Err(Error::invalid(
                "mu, f and g must be finite and strictly positive",
            ));
        }
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::invalid(
                "string speed must be finite and non-negative",
            ));
        }
        Ok(Self { mu, f, g, v })
    }
}

/// `R = μg/f`, rejected unless `R < 1`.
pub fn params_from_physics<T: Real>(phys: &PhysicalParams<T>) -> Result<T> {
    let r = phys.mu * phys.g / phys.f;
    check_ratio(r)?;
    Ok(r)
}

/// `T° = T − μv²`.
pub fn effective_tension<T: Real>(phys: &PhysicalParams<T>, tension: T) -> T {
    tension - phys.mu * phys.v * phys.v
}

/// Inverse of [`effective_tension`].
pub fn true_tension<T: Real>(phys: &PhysicalParams<T>, effective: T) -> T {
    effective + phys.mu * phys.v * phys.v
}

fn check_ratio<T: Real>(r: T) -> Result<()> {
    if r.is_finite() && r > T::zero() && r < T::one() {
        Ok(())
    } else {
        Err(Error::ModelInvalid {
            r: r.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Shape triple `(R, x₊, x₋)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopParams<T> {
    r: T,
    x_plus: T,
    x_minus: T,
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for LoopParams<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw<T> {
            r: T,
            x_plus: T,
            x_minus: T,
        }
        let raw = Raw::<T>::deserialize(d)?;
        LoopParams::new(raw.r, raw.x_plus, raw.x_minus).map_err(serde::de::Error::custom)
    }
}

/// How far each half is followed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopExtent {
    /// Each half stops at its horizontal-tangent point; a straight chord
    /// between the two extrema closes the loop.
    #[default]
    Extrema,
    /// Each half continues past its extremum until the two meet at the
    /// ejection point.
    Junction,
}

impl<T: Real> LoopParams<T> {
    pub fn new(r: T, x_plus: T, x_minus: T) -> Result<Self> {
        check_ratio(r)?;
        for (name, v) in [("x_plus", x_plus), ("x_minus", x_minus)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::invalid(format!("{name} must be finite and > 0")));
            }
        }
        Ok(Self { r, x_plus, x_minus })
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn x_plus(&self) -> T {
        self.x_plus
    }

    pub fn x_minus(&self) -> T {
        self.x_minus
    }

    pub fn x_half(&self, half: Half) -> T {
        match half {
            Half::Upper => self.x_plus,
            Half::Lower => self.x_minus,
        }
    }

    /// Same shape, all lengths multiplied by `lambda`.
    pub fn scaled(&self, lambda: T) -> Result<Self> {
        Self::new(self.r, self.x_plus * lambda, self.x_minus * lambda)
    }

    /// `z` on `half` at `x ∈ [0, x_half]`.
    pub fn eval_half(&self, half: Half, x: T) -> Result<T> {
        let limit = self.x_half(half);
        if !(x >= T::zero() && x <= limit) {
            return Err(Error::DomainError {
                x: x.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.z(half, x))
    }

    /// `z` on `half` at `x ∈ [0, x_junction]`, i.e. also past the extremum.
    pub fn eval_extended(&self, half: Half, x: T) -> Result<T> {
        let limit = self.junction_x();
        if !(x >= T::zero() && x <= limit) {
            return Err(Error::DomainError {
                x: x.to_f64().unwrap_or(f64::NAN),
                limit: limit.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.z(half, x))
    }

    /// Unchecked evaluation for `x ≥ 0`.
    pub(crate) fn z(&self, half: Half, x: T) -> T {
        if x == T::zero() {
            return T::zero();
        }
        let x = x.max(lit(X_FLOOR));
        let r = self.r;
        let u = x / self.x_half(half);
        let (up, um) = (u.powf(r), u.powf(-r));
        let half_c = lit::<T>(0.5);
        half.sign::<T>() * half_c * (x * up / (T::one() + r) - x * um / (T::one() - r))
    }

    /// `dz/dx` on `half`; diverges like `x^−R` at the tip.
    pub fn slope(&self, half: Half, x: T) -> T {
        let x = x.max(lit(X_FLOOR));
        let u = x / self.x_half(half);
        half.sign::<T>() * lit::<T>(0.5) * (u.powf(self.r) - u.powf(-self.r))
    }

    /// Arc length along `half` from the tip to abscissa `x` (closed form).
    pub fn arc_length_to(&self, half: Half, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let r = self.r;
        let u = x / self.x_half(half);
        lit::<T>(0.5) * (x * u.powf(r) / (T::one() + r) + x * u.powf(-r) / (T::one() - r))
    }

    /// Closed-form length of one half between the tip and its extremum,
    /// `x_half / (1 − R²)`.
    pub fn half_length(&self, half: Half) -> T {
        self.x_half(half) / (T::one() - self.r * self.r)
    }

    /// Horizontal-tangent point of `half`: `(x_half, ∓R·x_half/(1−R²))`.
    pub fn extremum(&self, half: Half) -> Point2<T> {
        let x = self.x_half(half);
        let z = -half.sign::<T>() * self.r * x / (T::one() - self.r * self.r);
        Point2::new(x, z)
    }

    /// Abscissa of the unique crossing `z₊(x) = z₋(x)` for `x > 0`.
    pub fn junction_x(&self) -> T {
        let r = self.r;
        let (a, b) = (self.x_plus, self.x_minus);
        let num = (T::one() + r) * (a.powf(r) + b.powf(r));
        let den = (T::one() - r) * (a.powf(-r) + b.powf(-r));
        (num / den).powf(T::one() / (lit::<T>(2.0) * r))
    }

    /// Where the halves meet, the physical ejection point of the loop.
    pub fn junction(&self) -> Point2<T> {
        let x = self.junction_x();
        Point2::new(x, self.z(Half::Upper, x))
    }

    /// Far end of each half for the given extent.
    pub fn half_end(&self, half: Half, extent: LoopExtent) -> T {
        match extent {
            LoopExtent::Extrema => self.x_half(half),
            LoopExtent::Junction => self.junction_x(),
        }
    }

    /// Point of the loop that sits in the gripper mouth.
    pub fn ejection_point(&self, extent: LoopExtent) -> Point2<T> {
        match extent {
            LoopExtent::Junction => self.junction(),
            LoopExtent::Extrema => {
                let (a, b) = (self.extremum(Half::Upper), self.extremum(Half::Lower));
                (a + b) * lit::<T>(0.5)
            }
        }
    }

    /// Direction of travel along `half` as drawn by [`sample_loop`]: the
    /// upper half is traversed with increasing `x`, the lower one back towards the tip.
    fn theta(&self, half: Half, x: T) -> T {
        let m = self.slope(half, x);
        match half {
            Half::Upper => m.atan2(T::one()),
            Half::Lower => (-m).atan2(-T::one()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    pub x: T,
    pub z: T,
    /// Tangent angle, `tan θ = dz/dx`, in `(−π, π]`.
    pub theta: T,
    /// Arc length from the first point.
    pub s: T,
    #[serde(skip)]
    pub half: Option<Half>,
}

impl<T: Real> CurvePoint<T> {
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.z)
    }

    pub fn tangent(&self) -> Point2<T> {
        Point2::new(self.theta.cos(), self.theta.sin())
    }

    pub fn normal(&self) -> Point2<T> {
        Point2::new(-self.theta.sin(), self.theta.cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve<T> {
    pub points: Vec<CurvePoint<T>>,
    pub closed: bool,
}

impl<T: Real> PlanarCurve<T> {
    /// Builds a curve from positions and tangent angles, filling `s` as the
    /// cumulative polyline length.
    pub fn from_polyline(pts: &[(Point2<T>, T, Option<Half>)], closed: bool) -> Self {
        let mut s = T::zero();
        let mut out = Vec::with_capacity(pts.len());
        for (i, &(p, theta, half)) in pts.iter().enumerate() {
            if i > 0 {
                s = s + p.distance(pts[i - 1].0);
            }
            out.push(CurvePoint {
                x: p.x,
                z: p.y,
                theta,
                s,
                half,
            });
        }
        Self {
            points: out,
            closed,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Point2<T>> {
        self.points.iter().map(CurvePoint::position).collect()
    }

    /// Distinct vertices of a closed curve (the repeated closing point dropped).
    pub fn ring(&self) -> Vec<Point2<T>> {
        let mut p = self.positions();
        if self.closed && p.len() > 1 && p[0].distance(p[p.len() - 1]) <= lit(1e-12) {
            p.pop();
        }
        p
    }

    pub fn length(&self) -> T {
        self.points.last().map_or(T::zero(), |p| p.s)
    }

    /// Checks spacing, monotone `s` and closure.
    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if !(w[1].position().distance(w[0].position()) > T::zero()) {
                return Err(Error::invalid(
                    "zero spacing between consecutive curve points",
                ));
            }
            if w[1].s < w[0].s {
                return Err(Error::invalid("arc length decreases along the curve"));
            }
        }
        if self.closed {
            let (a, b) = (self.points.first(), self.points.last());
            if let (Some(a), Some(b)) = (a, b) {
                if a.position().distance(b.position()) > lit(1e-9) {
                    return Err(Error::invalid("closed curve does not return to its start"));
                }
            }
        }
        Ok(())
    }
}

/// Closed loop through the tip, out along the upper half to `x₊`, across the
/// chord to `x₋`, and back along the lower half. `n ≥ 16` points, the first
/// and last both at the tip.
pub fn sample_loop<T: Real>(params: &LoopParams<T>, n: usize) -> Result<PlanarCurve<T>> {
    sample_loop_extent(params, n, LoopExtent::Extrema)
}

pub fn sample_loop_extent<T: Real>(
    params: &LoopParams<T>,
    n: usize,
    extent: LoopExtent,
) -> Result<PlanarCurve<T>> {
    if n < 16 {
        return Err(Error::invalid(format!(
            "sample_loop needs n >= 16, got {n}"
        )));
    }
    let (end_u, end_l) = (
        params.half_end(Half::Upper, extent),
        params.half_end(Half::Lower, extent),
    );
    let (len_u, len_l) = (
        params.arc_length_to(Half::Upper, end_u),
        params.arc_length_to(Half::Lower, end_l),
    );
    let share = (len_u / (len_u + len_l) * T::from_usize(n).unwrap())
        .round()
        .to_usize()
        .unwrap_or(n / 2);
    let n_up = share.clamp(8, n - 8);
    let n_lo = n - n_up;

    let quarter = T::FRAC_PI_2();
    let cluster = |end: T, k: usize, m: usize| {
        let t = quarter * T::from_usize(k).unwrap() / T::from_usize(m).unwrap();
        let s = t.sin();
        end * s * s
    };

    let mut pts = Vec::with_capacity(n);
    for k in 0..n_up {
        let x = if k + 1 == n_up {
            end_u
        } else {
            cluster(end_u, k, n_up - 1)
        };
        pts.push((
            Point2::new(x, params.z(Half::Upper, x)),
            params.theta(Half::Upper, x),
            Some(Half::Upper),
        ));
    }
    for j in 0..n_lo {
        let x = match extent {
            // x₋ down to 0 inclusive
            LoopExtent::Extrema => {
                if j == 0 {
                    end_l
                } else {
                    cluster(end_l, n_lo - 1 - j, n_lo - 1)
                }
            }
            // the junction itself is already the last upper point
            LoopExtent::Junction => cluster(end_l, n_lo - 1 - j, n_lo),
        };
        pts.push((
            Point2::new(x, params.z(Half::Lower, x)),
            params.theta(Half::Lower, x),
            Some(Half::Lower),
        ));
    }
    Ok(PlanarCurve::from_polyline(&pts, true))
}

/// 8-point Gauss–Legendre nodes on [−1, 1] (positive half) and weights.
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Length of one half by quadrature of `√(1 + z′²)` over `[0, x_half]`.
///
/// Substitutes `x = x_half·w^m` with `m = 1/(1−R)`, which cancels the
/// `x^−R` growth of the integrand at the tip. The remaining fractional powers
/// of `w` are handled by dyadically graded intervals towards `w = 0`, each
/// split into Gauss–Legendre panels whose count doubles until two successive
/// estimates agree.
pub fn half_arc_length_quadrature<T: Real>(params: &LoopParams<T>, half: Half) -> Result<T> {
    let h = params.x_half(half);
    let r = params.r;
    let m = T::one() / (T::one() - r);
    let quarter = lit::<T>(0.25);
    // √(1 + z′²)·dx/dw with every power taken in log space, so nothing
    // underflows when m is large
    let integrand = |w: T| {
        let lw = w.ln();
        let g = (m - T::one()) * lw;
        let up = (r * m * lw + g).exp();
        let um = (-r * m * lw + g).exp();
        let d = up - um;
        m * h * ((lit::<T>(2.0) * g).exp() + quarter * d * d).sqrt()
    };
    const LEVELS: i32 = 60;
    let two = lit::<T>(2.0);
    let estimate = |panels: usize| {
        let mut sum = composite_gauss(&integrand, T::zero(), two.powi(-LEVELS), 1);
        for j in (0..LEVELS).rev() {
            sum = sum + composite_gauss(&integrand, two.powi(-j - 1), two.powi(-j), panels);
        }
        sum
    };
    let rel_tol = lit::<T>(1e-12).max(T::epsilon() * lit(64.0));

    let mut panels = 1usize;
    let mut prev = estimate(panels);
    loop {
        panels *= 2;
        let cur = estimate(panels);
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return Ok(cur);
        }
        if panels >= 1 << 12 {
            return Err(Error::NonConvergence {
                iterations: panels,
                residual: ((cur - prev) / cur).abs().to_f64().unwrap_or(f64::NAN),
            });
        }
        prev = cur;
    }
}

fn composite_gauss<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, panels: usize) -> T {
    let w = (b - a) / T::from_usize(panels).unwrap();
    let half_w = w * lit(0.5);
    let mut sum = T::zero();
    for p in 0..panels {
        let mid = a + (T::from_usize(p).unwrap() + lit(0.5)) * w;
        for (&xi, &wi) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let d = half_w * lit(xi);
            sum = sum + lit::<T>(wi) * (f(mid - d) + f(mid + d));
        }
    }
    sum * half_w
}

/// Total string length of both halves (tip to extremum each).
pub fn loop_arc_length<T: Real>(params: &LoopParams<T>) -> Result<T> {
    Ok(half_arc_length_quadrature(params, Half::Upper)?
        + half_arc_length_quadrature(params, Half::Lower)?)
}

/// Loop with shape `(R, x₊/x₋ = ratio)` whose [`loop_arc_length`] is `length`.
pub fn scale_to_length<T: Real>(r: T, ratio: T, length: T) -> Result<LoopParams<T>> {
    check_ratio(r)?;
    if !(ratio.is_finite() && ratio > T::zero()) {
        return Err(Error::invalid("x_plus/x_minus ratio must be > 0"));
    }
    if !(length.is_finite() && length > T::zero()) {
        return Err(Error::invalid("target loop length must be > 0"));
    }
    let unit = LoopParams::new(r, ratio, T::one())?;
    let scale = length / loop_arc_length(&unit)?;
    LoopParams::new(r, ratio * scale, scale)
}
