//! Standard (distal) Denavit–Hartenberg forward kinematics for six-axis arms.

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;
use crate::{lit, Error, Real, Result};

const ORTHO_TOL: f64 = 1e-9;

/// Rigid transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "PoseRepr<T>",
    into = "PoseRepr<T>",
    bound = "T: Real + Serialize + for<'a> Deserialize<'a>"
)]
pub struct Pose<T> {
    pub rotation: [[T; 3]; 3],
    pub translation: Point3<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr<T> {
    rotation: [[T; 3]; 3],
    translation: [T; 3],
}

impl<T: Real> TryFrom<PoseRepr<T>> for Pose<T> {
    type Error = Error;

    fn try_from(r: PoseRepr<T>) -> Result<Self> {
        let [x, y, z] = r.translation;
        Pose::new(r.rotation, Point3::new(x, y, z))
    }
}

impl<T: Real> From<Pose<T>> for PoseRepr<T> {
    fn from(p: Pose<T>) -> Self {
        Self {
            rotation: p.rotation,
            translation: p.translation.to_array(),
        }
    }
}

impl<T: Real> Pose<T> {
    /// Checks `RᵀR = I` and `det R = +1` within 1e-9.
    pub fn new(rotation: [[T; 3]; 3], translation: Point3<T>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        if !translation.is_finite() || rotation.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pose entries must be finite"));
        }
        let err = pose.orthonormality_error();
        if err > lit(ORTHO_TOL) {
            return Err(Error::invalid(format!(
                "rotation is not orthonormal (error {err})"
            )));
        }
        Ok(pose)
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: Point3::zero(),
        }
    }

    /// Largest of `|RᵀR − I|` entries and `|det R − 1|`.
    pub fn orthonormality_error(&self) -> T {
        let r = &self.rotation;
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dot: T = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst.max((self.column(0).cross(self.column(1)).dot(self.column(2)) - T::one()).abs())
    }

    pub fn column(&self, j: usize) -> Point3<T> {
        Point3::new(
            self.rotation[0][j],
            self.rotation[1][j],
            self.rotation[2][j],
        )
    }

    pub fn apply(&self, p: Point3<T>) -> Point3<T> {
        self.rotate(p) + self.translation
    }

    pub fn rotate(&self, p: Point3<T>) -> Point3<T> {
        let r = &self.rotation;
        let row = |i: usize| r[i][0] * p.x + r[i][1] * p.y + r[i][2] * p.z;
        Point3::new(row(0), row(1), row(2))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let mut rot = [[T::zero(); 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3)
                    .map(|k| self.rotation[i][k] * other.rotation[k][j])
                    .sum();
            }
        }
        Self {
            rotation: rot,
            translation: self.apply(other.translation),
        }
    }

    /// Largest entry-wise difference of rotation and translation.
    pub fn max_difference(&self, other: &Self) -> T {
        let rot = self
            .rotation
            .iter()
            .flatten()
            .zip(other.rotation.iter().flatten())
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        rot.max((self.translation - other.translation).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhRow<T> {
    pub a: T,
    pub alpha: T,
    pub d: T,
    pub theta_offset: T,
}

impl<T: Real> DhRow<T> {
    /// `Rot_z(θ) · Trans_z(d) · Trans_x(a) · Rot_x(α)`.
    pub fn transform(&self, q: T) -> Pose<T> {
        let th = q + self.theta_offset;
        let (st, ct) = th.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        Pose {
            rotation: [
                [ct, -st * ca, st * sa],
                [st, ct * ca, -ct * sa],
                [T::zero(), sa, ca],
            ],
            translation: Point3::new(self.a * ct, self.a * st, self.d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "ModelRepr<T>",
    into = "ModelRepr<T>",
    bound = "T: Real + Serialize + for<'a> Deserialize<'a>"
)]
pub struct RobotModel<T> {
    pub name: String,
    pub base_pose: Pose<T>,
    pub rows: [DhRow<T>; 6],
}

#[derive(Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound = "T: Real + Serialize + for<'a> Deserialize<'a>"
)]
struct ModelRepr<T> {
    name: String,
    #[serde(default = "Pose::identity")]
    base_pose: Pose<T>,
    dh: Vec<DhRow<T>>,
}

impl<T: Real> TryFrom<ModelRepr<T>> for RobotModel<T> {
    type Error = Error;

    fn try_from(r: ModelRepr<T>) -> Result<Self> {
        let n = r.dh.len();
        let rows: [DhRow<T>; 6] =
            r.dh.try_into()
                .map_err(|_| Error::invalid(format!("robot needs exactly 6 DH rows, got {n}")))?;
        RobotModel::new(r.name, r.base_pose, rows)
    }
}

impl<T: Real> From<RobotModel<T>> for ModelRepr<T> {
    fn from(m: RobotModel<T>) -> Self {
        Self {
            name: m.name,
            base_pose: m.base_pose,
            dh: m.rows.to_vec(),
        }
    }
}

const UR5_JSON: &str = include_str!("../data/ur5.json");

impl<T: Real> RobotModel<T> {
    pub fn new(name: String, base_pose: Pose<T>, rows: [DhRow<T>; 6]) -> Result<Self> {
        if rows.iter().any(|r| {
            ![r.a, r.alpha, r.d, r.theta_offset]
                .iter()
                .all(|v| v.is_finite())
        }) {
            return Err(Error::invalid("DH entries must be finite"));
        }
        Ok(Self {
            name,
            base_pose,
            rows,
        })
    }

    /// Sum of `|a| + |d|` over the rows, an upper bound on the reach from
    /// the base origin.
    pub fn reach_bound(&self) -> T {
        self.rows.iter().map(|r| r.a.abs() + r.d.abs()).sum()
    }

    pub fn with_base(&self, base_pose: Pose<T>) -> Self {
        Self {
            base_pose,
            ..self.clone()
        }
    }
}

impl<T: Real + Serialize + for<'a> Deserialize<'a>> RobotModel<T> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The shipped UR5 table (vendor nominal values).
    pub fn ur5() -> Self {
        Self::from_json(UR5_JSON).expect("shipped UR5 table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointConfig<T> {
    pub q: [T; 6],
}

impl<T: Real> JointConfig<T> {
    pub fn new(q: [T; 6]) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("joint angles must be finite"));
        }
        Ok(Self { q })
    }

    pub fn zero() -> Self {
        Self { q: [T::zero(); 6] }
    }
}

/// Poses of frames 0..=6, frame 0 being the base.
pub fn joint_frames<T: Real>(model: &RobotModel<T>, q: &JointConfig<T>) -> [Pose<T>; 7] {
    let mut frames = [model.base_pose; 7];
    for i in 0..6 {
        frames[i + 1] = frames[i].compose(&model.rows[i].transform(q.q[i]));
    }
    frames
}

pub fn forward_kinematics<T: Real>(model: &RobotModel<T>, q: &JointConfig<T>) -> Pose<T> {
    joint_frames(model, q)[6]
}

/// Linear part of the geometric Jacobian, column `i` being `zᵢ × (p − pᵢ)`.
pub fn position_jacobian<T: Real>(model: &RobotModel<T>, q: &JointConfig<T>) -> [Point3<T>; 6] {
    let frames = joint_frames(model, q);
    let tip = frames[6].translation;
    std::array::from_fn(|i| frames[i].column(2).cross(tip - frames[i].translation))
}

/// Heading of the tool in the horizontal plane.
///
/// Uses the tool z-axis projected onto the world xy-plane; when that is
/// shorter than 1e-6 (tool vertical) the azimuth of the TCP position is used
/// instead, and 0 when that is degenerate too.
pub fn tool_azimuth<T: Real>(pose: &Pose<T>) -> T {
    let eps = lit::<T>(1e-6);
    let axis = pose.column(2);
    if axis.x.hypot(axis.y) >= eps {
        return axis.y.atan2(axis.x);
    }
    let t = pose.translation;
    if t.x.hypot(t.y) >= eps {
        return t.y.atan2(t.x);
    }
    T::zero()
}

/// Azimuth of the TCP position alone (0 when on the vertical axis).
pub fn position_azimuth<T: Real>(pose: &Pose<T>) -> T {
    let t = pose.translation;
    if t.x.hypot(t.y) >= lit(1e-6) {
        t.y.atan2(t.x)
    } else {
        T::zero()
    }
}
