//! Monte Carlo workspace of an arm with the loop attached at its TCP.
//!
//! The loop hangs in the vertical plane through the TCP that contains the
//! tool heading, with zero roll: local `x` along the heading, local `z` along
//! world up. For every sampled configuration the loop point furthest from the
//! base is kept; the hull of those points is the extended workspace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{convex_hull_3d, Point2, Point3};
use crate::kinematics::{
    forward_kinematics, position_azimuth, tool_azimuth, JointConfig, Pose, RobotModel,
};
use crate::loop_model::{sample_loop_extent, LoopExtent, LoopParams};
use crate::{Error, Real, Result};

pub const DEFAULT_CURVE_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OriginMode {
    /// The tip of the curve (its mathematical origin) sits at the TCP.
    #[default]
    CurveOriginAtTcp,
    /// The ejection point sits at the TCP.
    EjectionPointAtTcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AzimuthSource {
    #[default]
    ToolAxis,
    PositionFallbackOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttachmentModel<T> {
    #[serde(rename = "loop")]
    pub loop_params: LoopParams<T>,
    pub n_curve_samples: usize,
    pub origin_mode: OriginMode,
    pub azimuth_source: AzimuthSource,
    pub extent: LoopExtent,
    /// Loop in its local `(x, z)` frame, already shifted for `origin_mode`.
    #[serde(skip)]
    local: Vec<Point2<T>>,
}

impl<T: Real> AttachmentModel<T> {
    pub fn new(loop_params: LoopParams<T>) -> Self {
        Self::with_options(
            loop_params,
            DEFAULT_CURVE_SAMPLES,
            OriginMode::default(),
            AzimuthSource::default(),
            LoopExtent::Junction,
        )
        .expect("default sample count is valid")
    }

    pub fn with_options(
        loop_params: LoopParams<T>,
        n_curve_samples: usize,
        origin_mode: OriginMode,
        azimuth_source: AzimuthSource,
        extent: LoopExtent,
    ) -> Result<Self> {
        if n_curve_samples < 64 {
            return Err(Error::invalid(format!(
                "n_curve_samples must be >= 64, got {n_curve_samples}"
            )));
        }
        let curve = sample_loop_extent(&loop_params, n_curve_samples, extent)?;
        let shift = match origin_mode {
            OriginMode::CurveOriginAtTcp => Point2::zero(),
            OriginMode::EjectionPointAtTcp => loop_params.ejection_point(extent),
        };
        let local = curve.ring().into_iter().map(|p| p - shift).collect();
        Ok(Self {
            loop_params,
            n_curve_samples,
            origin_mode,
            azimuth_source,
            extent,
            local,
        })
    }

    /// Loop points in the local frame.
    pub fn local_curve(&self) -> &[Point2<T>] {
        &self.local
    }

    pub fn azimuth(&self, pose: &Pose<T>) -> T {
        match self.azimuth_source {
            AzimuthSource::ToolAxis => tool_azimuth(pose),
            AzimuthSource::PositionFallbackOnly => position_azimuth(pose),
        }
    }
}

/// The attached loop in world coordinates.
pub fn place_loop<T: Real>(pose: &Pose<T>, attachment: &AttachmentModel<T>) -> Vec<Point3<T>> {
    let (s, c) = attachment.azimuth(pose).sin_cos();
    let o = pose.translation;
    attachment
        .local
        .iter()
        .map(|p| Point3::new(o.x + c * p.x, o.y + s * p.x, o.z + p.y))
        .collect()
}

/// Point furthest from `base_origin`; the first one wins ties.
pub fn far_point<T: Real>(base_origin: Point3<T>, points: &[Point3<T>]) -> Result<Point3<T>> {
    let mut best = *points
        .first()
        .ok_or_else(|| Error::invalid("far_point needs at least one point"))?;
    let mut best_d = (best - base_origin).norm_squared();
    for &p in &points[1..] {
        let d = (p - base_origin).norm_squared();
        if d > best_d {
            best = p;
            best_d = d;
        }
    }
    Ok(best)
}

/// Joint angles of sample `index`, uniform on `[−π, π)` per joint, drawn
/// from its own stream so any subset can be regenerated independently.
pub fn joint_sample<T: Real>(seed: u64, index: u64) -> JointConfig<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let pi = std::f64::consts::PI;
    let q = std::array::from_fn(|_| T::from_f64(rng.random_range(-pi..pi)).unwrap());
    JointConfig { q }
}

/// `100·(v_ext − v_arm)/v_arm`.
pub fn extension_ratio<T: Real>(v_arm: T, v_ext: T) -> Result<T> {
    if !(v_arm > T::zero()) {
        return Err(Error::DegenerateInput(format!(
            "arm volume must be > 0, got {v_arm}"
        )));
    }
    Ok(T::from_f64(100.0).unwrap() * (v_ext - v_arm) / v_arm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceResult<T> {
    pub tcp_points: Vec<Point3<T>>,
    pub far_points: Vec<Point3<T>>,
    pub v_arm: T,
    pub v_ext: T,
    pub ratio_percent: T,
    pub n_samples: usize,
    pub seed: u64,
}

pub const MIN_WORKSPACE_SAMPLES: usize = 1000;

/// Samples `n` configurations, records TCP and far points and their hulls.
///
/// Results do not depend on the number of worker threads.
pub fn sample_workspace<T: Real>(
    model: &RobotModel<T>,
    attachment: &AttachmentModel<T>,
    n: usize,
    seed: u64,
) -> Result<WorkspaceResult<T>> {
    if n < MIN_WORKSPACE_SAMPLES {
        return Err(Error::DegenerateInput(format!(
            "need at least {MIN_WORKSPACE_SAMPLES} samples, got {n}"
        )));
    }
    let base = model.base_pose.translation;
    let pairs: Vec<(Point3<T>, Point3<T>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let pose = forward_kinematics(model, &joint_sample(seed, i));
            let far = far_point(base, &place_loop(&pose, attachment)).expect("loop has points");
            (pose.translation, far)
        })
        .collect();
    let (tcp_points, far_points): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let hull = |pts: &[Point3<T>], what: &str| {
        convex_hull_3d(pts).map_err(|e| Error::DegenerateInput(format!("{what} hull: {e}")))
    };
    let v_arm = hull(&tcp_points, "arm")?.volume();
    let v_ext = hull(&far_points, "extended")?.volume();
    let ratio_percent = extension_ratio(v_arm, v_ext)?;
    Ok(WorkspaceResult {
        tcp_points,
        far_points,
        v_arm,
        v_ext,
        ratio_percent,
        n_samples: n,
        seed,
    })
}
