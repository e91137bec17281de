//! Launch / maintain / retract / release phase machine and the deployed
//! string length it drives.
//!
//! The two guide wheels of radius `r` turn at `ω_out` (paying string out) and
//! `ω_in` (taking it back in); the loop holds `L` metres of string and
//! `dL/dt = r·(ω_out − ω_in)`. The loop shape family `(R, x₊/x₋)` stays fixed
//! and only its size follows `L`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::loop_model::{scale_to_length, LoopParams};
use crate::{lit, Error, Real, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GripperPhase {
    Launch,
    Maintain,
    Retract,
    Release,
}

impl fmt::Display for GripperPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Launch => "launch",
            Self::Maintain => "maintain",
            Self::Retract => "retract",
            Self::Release => "release",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseEvent {
    BeginMaintain,
    BeginRetract,
    Reopen,
    Release,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand<T> {
    pub omega_in: T,
    pub omega_out: T,
    /// Winding motor on: string is being organised on the spool. No dynamics.
    #[serde(default)]
    pub wind_on: bool,
}

impl<T: Scalar> MotorCommand<T> {
    pub fn new(omega_in: T, omega_out: T) -> Self {
        Self {
            omega_in,
            omega_out,
            wind_on: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits<T> {
    pub l_min: T,
    pub l_max: T,
    /// Upper bound on either wheel speed, if any.
    pub omega_max: Option<T>,
    /// Permit retracting straight from launch.
    pub allow_launch_to_retract: bool,
}

impl<T: Real> Default for ControlLimits<T> {
    fn default() -> Self {
        Self {
            l_min: lit(0.05),
            l_max: lit(5.0),
            omega_max: None,
            allow_launch_to_retract: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GripperState<T> {
    pub phase: GripperPhase,
    pub deployed_length: T,
    pub wheel_radius: T,
    pub loop_r: T,
    pub loop_ratio: T,
    pub limits: ControlLimits<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampSide {
    Min,
    Max,
}

/// A step whose requested length fell outside `[l_min, l_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampEvent<T> {
    pub side: ClampSide,
    /// Length the unclamped update would have produced.
    pub requested: T,
    /// `requested − clamped`: the part of the update that was discarded.
    pub excess: T,
}

impl<T: Scalar> GripperState<T> {
    /// Starts in `Launch` with `deployed_length` clamped into the limits.
    pub fn new(
        deployed_length: T,
        wheel_radius: T,
        loop_r: T,
        loop_ratio: T,
        limits: ControlLimits<T>,
    ) -> Result<Self> {
        if !(limits.l_min > T::zero()) || !(limits.l_max >= limits.l_min) {
            return Err(Error::invalid("length limits need 0 < l_min <= l_max"));
        }
        if !(wheel_radius > T::zero()) {
            return Err(Error::invalid("wheel radius must be > 0"));
        }
        if let Some(w) = &limits.omega_max {
            if !(*w >= T::zero()) {
                return Err(Error::invalid("omega_max must be >= 0"));
            }
        }
        if !(deployed_length >= limits.l_min && deployed_length <= limits.l_max) {
            return Err(Error::invalid(
                "initial deployed length outside [l_min, l_max]",
            ));
        }
        Ok(Self {
            phase: GripperPhase::Launch,
            deployed_length,
            wheel_radius,
            loop_r,
            loop_ratio,
            limits,
        })
    }

    fn check_command(&self, cmd: &MotorCommand<T>) -> Result<()> {
        for (name, w) in [("omega_in", &cmd.omega_in), ("omega_out", &cmd.omega_out)] {
            if !(*w >= T::zero()) {
                return Err(Error::invalid(format!("{name} must be >= 0")));
            }
            if let Some(max) = &self.limits.omega_max {
                if *w > *max {
                    return Err(Error::invalid(format!("{name} exceeds omega_max")));
                }
            }
        }
        Ok(())
    }
}

/// Advances the deployed length by `r·(ω_out − ω_in)·dt`, clamped into the
/// limits. Phase is unchanged.
pub fn step<T: Scalar>(
    state: &GripperState<T>,
    cmd: &MotorCommand<T>,
    dt: T,
) -> Result<(GripperState<T>, Option<ClampEvent<T>>)> {
    if state.phase == GripperPhase::Release {
        return Err(Error::PhaseError("motors are off after release".into()));
    }
    if !(dt > T::zero()) {
        return Err(Error::invalid("dt must be > 0"));
    }
    state.check_command(cmd)?;
    let delta = state.wheel_radius.clone() * (cmd.omega_out.clone() - cmd.omega_in.clone()) * dt;
    let requested = state.deployed_length.clone() + delta;
    let (length, clamp) = if requested < state.limits.l_min {
        let l = state.limits.l_min.clone();
        (
            l.clone(),
            Some(ClampEvent {
                side: ClampSide::Min,
                excess: requested.clone() - l,
                requested,
            }),
        )
    } else if requested > state.limits.l_max {
        let l = state.limits.l_max.clone();
        (
            l.clone(),
            Some(ClampEvent {
                side: ClampSide::Max,
                excess: requested.clone() - l,
                requested,
            }),
        )
    } else {
        (requested, None)
    };
    Ok((
        GripperState {
            deployed_length: length,
            ..state.clone()
        },
        clamp,
    ))
}

/// Whether `event` is legal from `phase`.
pub fn is_legal(phase: GripperPhase, event: PhaseEvent, allow_launch_to_retract: bool) -> bool {
    use GripperPhase as P;
    use PhaseEvent as E;
    matches!(
        (phase, event),
        (P::Launch, E::BeginMaintain)
            | (P::Maintain, E::BeginRetract)
            | (P::Retract, E::Reopen)
            | (P::Launch | P::Maintain | P::Retract, E::Release)
    ) || (allow_launch_to_retract && phase == P::Launch && event == E::BeginRetract)
}

pub fn transition<T: Scalar>(
    state: &GripperState<T>,
    event: PhaseEvent,
) -> Result<GripperState<T>> {
    if !is_legal(state.phase, event, state.limits.allow_launch_to_retract) {
        return Err(Error::PhaseError(format!(
            "{event:?} is not allowed in phase {}",
            state.phase
        )));
    }
    let phase = match event {
        PhaseEvent::BeginMaintain | PhaseEvent::Reopen => GripperPhase::Maintain,
        PhaseEvent::BeginRetract => GripperPhase::Retract,
        PhaseEvent::Release => GripperPhase::Release,
    };
    Ok(GripperState {
        phase,
        ..state.clone()
    })
}

/// Loop of the state's shape family holding the deployed length.
pub fn current_loop<T: Real>(state: &GripperState<T>) -> Result<LoopParams<T>> {
    scale_to_length(state.loop_r, state.loop_ratio, state.deployed_length)
}

/// One scenario entry: at time `t` apply `event` (if any), then hold `command`
/// until the next entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedCommand<T> {
    pub t: T,
    pub omega_in: T,
    pub omega_out: T,
    #[serde(default)]
    pub event: Option<PhaseEvent>,
    #[serde(default)]
    pub wind_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow<T> {
    pub t: T,
    pub length: T,
    pub x_plus: T,
    pub x_minus: T,
    pub phase: GripperPhase,
    pub wind_on: bool,
    pub clamp: Option<ClampSide>,
}

/// Replays a scenario; errors name the offending entry index.
pub fn replay<T: Real>(
    initial: &GripperState<T>,
    scenario: &[TimedCommand<T>],
) -> Result<(Vec<TraceRow<T>>, GripperState<T>)> {
    let mut state = initial.clone();
    let row = |t: T,
               s: &GripperState<T>,
               wind_on: bool,
               clamp: Option<ClampSide>|
     -> Result<TraceRow<T>> {
        let p = current_loop(s)?;
        Ok(TraceRow {
            t,
            length: s.deployed_length,
            x_plus: p.x_plus(),
            x_minus: p.x_minus(),
            phase: s.phase,
            wind_on,
            clamp,
        })
    };
    let mut rows = Vec::with_capacity(scenario.len() + 1);
    for (i, entry) in scenario.iter().enumerate() {
        let tag = |e: Error| match e {
            Error::PhaseError(m) => Error::PhaseError(format!("scenario entry {i}: {m}")),
            Error::InvalidInput(m) => Error::InvalidInput(format!("scenario entry {i}: {m}")),
            other => other,
        };
        if let Some(ev) = entry.event {
            state = transition(&state, ev).map_err(tag)?;
        }
        rows.push(row(entry.t, &state, entry.wind_on, None)?);
        if let Some(next) = scenario.get(i + 1) {
            if !(next.t > entry.t) {
                return Err(tag(Error::invalid("times must be strictly increasing")));
            }
            if state.phase == GripperPhase::Release {
                // motors off: nothing moves, later entries may only carry no event
                continue;
            }
            let cmd = MotorCommand {
                omega_in: entry.omega_in,
                omega_out: entry.omega_out,
                wind_on: entry.wind_on,
            };
            let (s, clamp) = step(&state, &cmd, next.t - entry.t).map_err(tag)?;
            state = s;
            if let Some(c) = clamp {
                rows.last_mut().unwrap().clamp = Some(c.side);
            }
        }
    }
    if let Some(last) = scenario.last() {
        if state.phase == GripperPhase::Release
            && rows.last().map(|r| r.phase) != Some(GripperPhase::Release)
        {
            rows.push(row(last.t, &state, false, None)?);
        }
    }
    Ok((rows, state))
}
