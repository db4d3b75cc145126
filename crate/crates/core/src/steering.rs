//! Escape direction selection: move away from the most threatening subfield by
//! heading toward the quietest one.

use std::fmt;

use crate::error::{Error, Result};
use crate::quadrant::{CLgmdPotentials, Quadrant};

/// Body-frame axis of an escape manoeuvre. +y points left, +z points up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    LateralY,
    VerticalZ,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::LateralY => "y",
            Axis::VerticalZ => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeCommand {
    pub axis: Axis,
    /// Signed speed along `axis`, m/s.
    pub value: f64,
    /// How long the setpoint is held, s.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringParams {
    /// Escape speed, m/s.
    pub speed_0: f64,
    /// Seconds an escape setpoint is held.
    pub hold_duration: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        SteeringParams {
            speed_0: 0.5,
            hold_duration: 1.0,
        }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_0 > 0.0 && self.speed_0.is_finite()) {
            return Err(Error::Config(format!(
                "speed_0 must be > 0, got {}",
                self.speed_0
            )));
        }
        if !(self.hold_duration > 0.0 && self.hold_duration.is_finite()) {
            return Err(Error::Config(format!(
                "hold_duration must be > 0, got {}",
                self.hold_duration
            )));
        }
        Ok(())
    }
}

/// Quadrant with the smallest potential, using a sequential `>=` comparison
/// chain in the order up, down, left, right. Because equality lets a later
/// candidate take over, ties resolve toward right, then left, then down.
pub fn min_direction(p: &CLgmdPotentials) -> Quadrant {
    let mut min = (Quadrant::Up, p.up);
    for (q, v) in [
        (Quadrant::Down, p.down),
        (Quadrant::Left, p.left),
        (Quadrant::Right, p.right),
    ] {
        if min.1 >= v {
            min = (q, v);
        }
    }
    min.0
}

/// Escape command toward the quietest subfield.
///
/// The caller is responsible for only acting on it once a collision has been
/// confirmed.
pub fn select_escape(p: &CLgmdPotentials, params: &SteeringParams) -> Result<EscapeCommand> {
    if p.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite potentials {p:?}")));
    }
    let speed = params.speed_0;
    let (axis, value) = match min_direction(p) {
        Quadrant::Up => (Axis::VerticalZ, speed),
        Quadrant::Down => (Axis::VerticalZ, -speed),
        Quadrant::Left => (Axis::LateralY, speed),
        Quadrant::Right => (Axis::LateralY, -speed),
    };
    Ok(EscapeCommand {
        axis,
        value,
        duration: params.hold_duration,
    })
}

/// Body-frame velocity `(vx, vy, vz)` for a command `elapsed` seconds after it
/// was issued. Forward speed is zero during the hold; after it everything is
/// zero and the caller falls back to its cruise setpoint.
pub fn command_to_setpoint(cmd: &EscapeCommand, elapsed: f64) -> [f64; 3] {
    if elapsed < 0.0 || elapsed >= cmd.duration {
        return [0.0; 3];
    }
    match cmd.axis {
        Axis::LateralY => [0.0, cmd.value, 0.0],
        Axis::VerticalZ => [0.0, 0.0, cmd.value],
    }
}
