//! Command-line arguments. Every subcommand's options are optional here so
//! that a config file can supply them; defaults are applied afterwards.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lasso_core::loop_model::LoopExtent;
use lasso_core::steady::{InitShape, SeedMode};
use lasso_core::workspace::{AzimuthSource, OriginMode};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "lasso",
    version,
    about = "Self-supporting string loop model, fits and arm workspace study"
)]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed for sampling and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the closed-form loop curve.
    Curve(CurveArgs),
    /// Check a numerical solver against the closed form.
    Validate(ValidateArgs),
    /// Fit loop parameters to measured points.
    Fit(FitArgs),
    /// Forward kinematics of one joint configuration.
    Fk(FkArgs),
    /// Monte Carlo workspace with the loop attached.
    Workspace(WorkspaceArgs),
    /// Replay a motor command scenario.
    Control(ControlArgs),
}

/// Parses a kebab-case name through the type's serde representation.
fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

macro_rules! layered {
    ($name:ident { $($field:ident),* $(,)? }) => {
        impl $name {
            /// Fields set here win; the rest come from `other`.
            pub fn or(self, other: Self) -> Self {
                Self { $($field: self.$field.or(other.$field)),* }
            }
        }
    };
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub xp: Option<f64>,
    #[arg(long)]
    pub xm: Option<f64>,
    /// Number of curve points.
    #[arg(short = 'n', long = "points")]
    pub n: Option<usize>,
    /// extrema | junction
    #[arg(long, value_parser = kebab::<LoopExtent>)]
    pub extent: Option<LoopExtent>,
}
layered!(CurveArgs {
    r,
    xp,
    xm,
    n,
    extent
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Ode,
    Relax,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateArgs {
    /// ode | relax
    #[arg(long, value_parser = kebab::<Solver>)]
    pub solver: Option<Solver>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub xp: Option<f64>,
    #[arg(long)]
    pub xm: Option<f64>,
    /// ODE arc-length step [m].
    #[arg(long)]
    pub ds: Option<f64>,
    /// ODE start offset from the tip [m].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// closed-form | leading-order
    #[arg(long, value_parser = kebab::<SeedMode>)]
    pub ode_seed: Option<SeedMode>,
    /// Relaxation node count.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Relaxation residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Penalty spring modulus, in units of the total drag.
    #[arg(long)]
    pub stiffness: Option<f64>,
    /// Damping as a multiple of the default.
    #[arg(long)]
    pub damping: Option<f64>,
    /// circle | ellipse
    #[arg(long, value_parser = kebab::<InitShape>)]
    pub init: Option<InitShape>,
}
layered!(ValidateArgs {
    solver,
    r,
    xp,
    xm,
    ds,
    epsilon,
    ode_seed,
    nodes,
    tol,
    max_iters,
    stiffness,
    damping,
    init
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// CSV with header `x,z[,half]` in metres.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Generate samples from --r/--xp/--xm instead of reading a file.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub synthetic: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub xp: Option<f64>,
    #[arg(long)]
    pub xm: Option<f64>,
    /// Synthetic samples per half.
    #[arg(long)]
    pub per_half: Option<usize>,
    /// Synthetic Gaussian noise [m].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Multistart points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Also fit a rigid translation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fit_translation: Option<bool>,
    /// Shift the leftmost sample to the origin before fitting.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub align: Option<bool>,
    #[arg(long)]
    pub iou_resolution: Option<usize>,
}
layered!(FitArgs {
    samples,
    synthetic,
    r,
    xp,
    xm,
    per_half,
    sigma,
    grid,
    r_min,
    r_max,
    max_evals,
    fit_translation,
    align,
    iou_resolution
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FkArgs {
    /// Robot JSON; the shipped UR5 table when omitted.
    #[arg(long)]
    pub robot: Option<PathBuf>,
    /// Six joint angles in radians, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
}
layered!(FkArgs { robot, q });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceArgs {
    #[arg(long)]
    pub robot: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub xp: Option<f64>,
    #[arg(long)]
    pub xm: Option<f64>,
    /// Number of joint configurations.
    #[arg(short = 'n', long = "samples")]
    pub n: Option<usize>,
    /// curve-origin-at-tcp | ejection-point-at-tcp
    #[arg(long, value_parser = kebab::<OriginMode>)]
    pub origin_mode: Option<OriginMode>,
    /// tool-axis | position-fallback-only
    #[arg(long, value_parser = kebab::<AzimuthSource>)]
    pub azimuth_source: Option<AzimuthSource>,
    /// junction | extrema
    #[arg(long, value_parser = kebab::<LoopExtent>)]
    pub extent: Option<LoopExtent>,
    #[arg(long)]
    pub curve_samples: Option<usize>,
    /// Also write ASCII PLY point clouds.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ply: Option<bool>,
}
layered!(WorkspaceArgs {
    robot,
    r,
    xp,
    xm,
    n,
    origin_mode,
    azimuth_source,
    extent,
    curve_samples,
    ply
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlArgs {
    /// JSON list of `{t, omega_in, omega_out, event?, wind_on?}`.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Initial deployed string length [m].
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub wheel_radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// x_plus / x_minus of the loop family.
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub l_min: Option<f64>,
    #[arg(long)]
    pub l_max: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub allow_launch_to_retract: Option<bool>,
}
layered!(ControlArgs {
    scenario,
    length,
    wheel_radius,
    r,
    ratio,
    l_min,
    l_max,
    omega_max,
    allow_launch_to_retract
});
