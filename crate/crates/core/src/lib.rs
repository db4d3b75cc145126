//! Competitive LGMD looming detection and escape steering.
//!
//! Two consecutive grayscale frames pass through photoreceptor, inhibition,
//! summing and grouping layers ([`layers`]). The grouped excitation is split
//! along the image diagonals into up, down, left and right subfields whose
//! potentials compete ([`quadrant`]); once enough consecutive spikes confirm a
//! collision, [`steering`] picks an escape velocity toward the quietest
//! subfield. [`stimulus`] renders synthetic looming scenes and [`sim`] closes
//! the loop with a point-mass quadcopter.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod geometry;
pub mod grid;
pub mod layers;
pub mod pgm;
pub mod pipeline;
pub mod quadrant;
pub mod sim;
pub mod steering;
pub mod stimulus;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::Vec3;
pub use grid::{Frame, LayerGrid};
pub use layers::{CoreParams, InhibitionKernel};
pub use pipeline::{detect_sequence, Detector, DetectorParams, FrameReport};
pub use quadrant::{CLgmdPotentials, DetectorState, NormParams, Quadrant, QuadrantMask, QuadrantSums};
pub use sim::{run_trial, run_trials, TrialConfig, TrialOutcome, TrialTrace, VehicleState};
pub use steering::{Axis, EscapeCommand, SteeringParams};
pub use stimulus::{CameraModel, Direction, ScenarioSpec, Scene};
