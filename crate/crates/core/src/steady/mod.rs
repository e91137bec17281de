//! Numerical routes to the steady loop shape that do not use the closed form
//! (except, optionally, to seed the ODE away from the singular tip).

mod ode;
mod relax;

pub use ode::{closed_form_deviation, integrate_intrinsic, OdeSettings, SeedMode};
pub use relax::{
    distances_to_closed_form, mean_distance_to_closed_form, relax_loop, tension_profile, InitShape,
    NodeState, RelaxResult, RelaxSettings,
};
