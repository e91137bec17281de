//! Numerical model of a self-supporting circulating string loop and the
//! workspace it adds to a robot arm.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: points, 3D convex hulls with volume, raster polygon IoU.
//! * [`loop_model`]: the closed-form loop curve, its arc length and sampling.
//! * [`steady`]: two independent solvers for the same steady shape (an
//!   intrinsic arc-length ODE and a dynamic-relaxation node chain).
//! * [`fitting`]: least-squares recovery of loop parameters from measured points.
//! * [`kinematics`]: Denavit–Hartenberg forward kinematics (UR5 shipped).
//! * [`workspace`]: Monte Carlo workspace sampling with the loop attached.
//! * [`control`]: launch / maintain / retract / release phase machine.
//!
//! Everything numeric is generic over [`Real`]; the `*64` aliases below are
//! what the command-line tool uses.

// `!(a > b)` is how NaN gets rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod loop_model;
pub mod scalar;
pub mod steady;
pub mod workspace;

pub use error::{Error, Result};
pub use scalar::{lit, Real, Scalar};

pub type Point2_64 = geometry::Point2<f64>;
pub type Point3_64 = geometry::Point3<f64>;
pub type Hull3_64 = geometry::Hull3<f64>;
pub type Polygon2_64 = geometry::Polygon2<f64>;
pub type LoopParams64 = loop_model::LoopParams<f64>;
pub type PhysicalParams64 = loop_model::PhysicalParams<f64>;
pub type PlanarCurve64 = loop_model::PlanarCurve<f64>;
pub type OdeSettings64 = steady::OdeSettings<f64>;
pub type RelaxSettings64 = steady::RelaxSettings<f64>;
pub type RelaxResult64 = steady::RelaxResult<f64>;
pub type FitOptions64 = fitting::FitOptions<f64>;
pub type FitResult64 = fitting::FitResult<f64>;
pub type SamplePoint64 = fitting::SamplePoint<f64>;
pub type RobotModel64 = kinematics::RobotModel<f64>;
pub type Pose64 = kinematics::Pose<f64>;
pub type JointConfig64 = kinematics::JointConfig<f64>;
pub type AttachmentModel64 = workspace::AttachmentModel<f64>;
pub type WorkspaceResult64 = workspace::WorkspaceResult<f64>;
pub type GripperState64 = control::GripperState<f64>;
pub type MotorCommand64 = control::MotorCommand<f64>;
