//! Point-mass quadcopter closed around the detector and escape steering.
//!
//! The vehicle tracks its velocity setpoint with a first-order lag. Every
//! simulation step renders the forward camera, runs the detector and, on a
//! confirmed collision, replaces the cruise setpoint with an escape setpoint
//! for the hold duration.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Vec3;
use crate::pipeline::{Detector, DetectorParams};
use crate::quadrant::{CLgmdPotentials, NormParams};
use crate::steering::{command_to_setpoint, select_escape, EscapeCommand, SteeringParams};
use crate::stimulus::{render_frame, CameraModel, Scene, SceneObject, Shape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub setpoint: Vec3,
    /// Fixed during a trial.
    pub yaw: f64,
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        VehicleState {
            position,
            velocity: Vec3::ZERO,
            setpoint: Vec3::ZERO,
            yaw: 0.0,
        }
    }

    fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.setpoint.is_finite()
            && self.yaw.is_finite()
    }
}

/// One step of first-order velocity tracking with time constant `tau`.
///
/// The velocity moves a fraction `min(dt / tau, 1)` of the way to the
/// setpoint, so it never overshoots; position integrates the mean of the old
/// and new velocity.
pub fn step_vehicle(state: &VehicleState, setpoint: Vec3, dt: f64, tau: f64) -> Result<VehicleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be > 0, got {dt}")));
    }
    if !(tau >= 0.0) || !setpoint.is_finite() || !state.is_finite() {
        return Err(Error::InvalidInput("non-finite vehicle state or setpoint".into()));
    }
    let alpha = if tau <= dt { 1.0 } else { dt / tau };
    let velocity = if alpha >= 1.0 {
        setpoint
    } else {
        state.velocity + (setpoint - state.velocity) * alpha
    };
    Ok(VehicleState {
        position: state.position + (state.velocity + velocity) * (0.5 * dt),
        velocity,
        setpoint,
        yaw: state.yaw,
    })
}

/// True when the vehicle is within `margin` of any object surface, boundary
/// included.
pub fn check_collision(state: &VehicleState, scene: &Scene, margin: f64) -> bool {
    scene.objects.iter().any(|o| match o.shape {
        Shape::Sphere { center, radius } => (state.position - center).norm() <= radius + margin,
        Shape::Cuboid { .. } => o.shape.distance(state.position) <= margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstaclePlacement {
    Center,
    Left,
    Right,
    Up,
    Down,
}

impl ObstaclePlacement {
    pub const SIDES: [ObstaclePlacement; 4] = [
        ObstaclePlacement::Left,
        ObstaclePlacement::Right,
        ObstaclePlacement::Up,
        ObstaclePlacement::Down,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObstaclePlacement::Center => "center",
            ObstaclePlacement::Left => "left",
            ObstaclePlacement::Right => "right",
            ObstaclePlacement::Up => "up",
            ObstaclePlacement::Down => "down",
        }
    }

    /// World offset of the obstacle from the flight path.
    fn offset(self, amount: f64) -> Vec3 {
        match self {
            ObstaclePlacement::Center => Vec3::ZERO,
            ObstaclePlacement::Left => Vec3::new(0.0, amount, 0.0),
            ObstaclePlacement::Right => Vec3::new(0.0, -amount, 0.0),
            ObstaclePlacement::Up => Vec3::new(0.0, 0.0, amount),
            ObstaclePlacement::Down => Vec3::new(0.0, 0.0, -amount),
        }
    }
}

impl fmt::Display for ObstaclePlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObstaclePlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "center" | "centre" | "centered" => Ok(ObstaclePlacement::Center),
            "left" => Ok(ObstaclePlacement::Left),
            "right" => Ok(ObstaclePlacement::Right),
            "up" => Ok(ObstaclePlacement::Up),
            "down" => Ok(ObstaclePlacement::Down),
            other => Err(Error::Config(format!("unknown obstacle placement '{other}'"))),
        }
    }
}

/// Box around the start point: x in `[-1, length]`, |y| <= half_width,
/// |z| <= half_height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arena {
    pub length: f64,
    pub half_width: f64,
    pub half_height: f64,
}

impl Arena {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= -1.0 && p.x <= self.length && p.y.abs() <= self.half_width && p.z.abs() <= self.half_height
    }
}

impl Default for Arena {
    fn default() -> Self {
        Arena {
            length: 10.0,
            half_width: 3.0,
            half_height: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    /// Forward cruise speed along +x, m/s.
    pub cruise_speed: f64,
    pub placement: ObstaclePlacement,
    /// Sideways offset of the obstacle centre from the path, m.
    pub obstacle_offset: f64,
    /// Distance from the start point to the obstacle along x, m.
    pub obstacle_distance: f64,
    pub obstacle_radius: f64,
    /// Obstacle velocity for a moving intruder, m/s.
    pub obstacle_velocity: Vec3,
    pub obstacle_luminance: u8,
    pub background: u8,
    pub noise: f64,
    pub seed: u64,
    pub arena: Arena,
    /// Simulation and detector step, s.
    pub dt: f64,
    pub max_duration: f64,
    /// Velocity-loop time constant, s.
    pub tau: f64,
    /// Vehicle radius used for collision checks, m.
    pub margin: f64,
    pub camera_width: usize,
    pub camera_height: usize,
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub detector: DetectorParams,
    pub steering: SteeringParams,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            cruise_speed: 1.0,
            placement: ObstaclePlacement::Left,
            obstacle_offset: 0.2,
            obstacle_distance: 5.0,
            obstacle_radius: 0.3,
            obstacle_velocity: Vec3::ZERO,
            obstacle_luminance: 40,
            background: 180,
            noise: 0.0,
            seed: 0,
            arena: Arena::default(),
            dt: 0.02,
            max_duration: 20.0,
            tau: 0.3,
            margin: 0.15,
            camera_width: 100,
            camera_height: 100,
            fov: std::f64::consts::FRAC_PI_2,
            detector: DetectorParams {
                norm: NormParams::for_cells(100 * 100),
                ..DetectorParams::default()
            },
            steering: SteeringParams::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.max_duration > 0.0) {
            return cfg("max_duration must be > 0".into());
        }
        if !(self.tau >= 0.0) || !(self.margin >= 0.0) || !(self.obstacle_radius > 0.0) {
            return cfg("tau, margin and obstacle_radius must be non-negative (radius positive)".into());
        }
        if !self.cruise_speed.is_finite() || !self.obstacle_velocity.is_finite() {
            return cfg("speeds must be finite".into());
        }
        if !self.arena.contains(self.obstacle_center()) {
            return cfg(format!(
                "obstacle at {:?} lies outside the arena",
                self.obstacle_center()
            ));
        }
        if self.obstacle_center().norm() <= self.obstacle_radius + self.margin {
            return cfg("vehicle starts inside the obstacle".into());
        }
        if self.detector.norm.n_cell != self.camera_width * self.camera_height {
            return cfg(format!(
                "n_cell {} does not match camera {}x{}",
                self.detector.norm.n_cell, self.camera_width, self.camera_height
            ));
        }
        self.steering.validate()?;
        self.camera_at(Vec3::ZERO, 0.0).validate()?;
        Ok(())
    }

    pub fn obstacle_center(&self) -> Vec3 {
        Vec3::new(self.obstacle_distance, 0.0, 0.0) + self.placement.offset(self.obstacle_offset)
    }

    fn camera_at(&self, position: Vec3, yaw: f64) -> CameraModel {
        CameraModel {
            position,
            yaw,
            pitch: 0.0,
            fov: self.fov,
            width: self.camera_width,
            height: self.camera_height,
        }
    }

    fn scene_at(&self, center: Vec3) -> Scene {
        Scene {
            objects: vec![SceneObject {
                shape: Shape::Sphere {
                    center,
                    radius: self.obstacle_radius,
                },
                luminance: self.obstacle_luminance,
            }],
            background: self.background,
            noise: self.noise,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Avoided,
    Collided,
    Timeout,
}

impl TrialOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Avoided => "AVOIDED",
            TrialOutcome::Collided => "COLLIDED",
            TrialOutcome::Timeout => "TIMEOUT",
        }
    }
}

impl fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub frame: u64,
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub potentials: CLgmdPotentials,
    pub spike: bool,
    pub confirmed: bool,
    /// Escape command in force this frame, if any.
    pub command: Option<EscapeCommand>,
    /// Seconds left on the active command.
    pub remaining: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub records: Vec<TraceRecord>,
    pub outcome: TrialOutcome,
    pub final_state: VehicleState,
    /// Frames on which a new escape command was issued.
    pub escape_count: usize,
}

pub const TRACE_HEADER: &str = "frame,t,px,py,pz,vx,vy,vz,kappa,u,d,l,r,spike,confirmed,cmd_axis,cmd_value";

impl TrialTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.records {
            let p = &r.potentials;
            let (axis, value) = match r.command {
                Some(c) => (c.axis.as_str(), c.value),
                None => ("none", 0.0),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.frame,
                r.t,
                r.position.x,
                r.position.y,
                r.position.z,
                r.velocity.x,
                r.velocity.y,
                r.velocity.z,
                p.kappa,
                p.up,
                p.down,
                p.left,
                p.right,
                u8::from(r.spike),
                u8::from(r.confirmed),
                axis,
                value,
            )?;
        }
        Ok(())
    }

    /// `OUTCOME=<AVOIDED|COLLIDED|TIMEOUT>`
    pub fn summary(&self) -> String {
        format!("OUTCOME={}", self.outcome)
    }

    /// Final position relative to the start point.
    pub fn displacement(&self) -> Vec3 {
        self.final_state.position
    }

    pub fn max_speed(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.velocity.norm())
            .chain(std::iter::once(self.final_state.velocity.norm()))
            .fold(0.0, f64::max)
    }
}

/// Runs one closed-loop trial until collision, passing the obstacle, leaving
/// the arena or running out of time.
pub fn run_trial(config: &TrialConfig) -> Result<TrialTrace> {
    config.validate()?;
    let mut detector = Detector::new(config.camera_width, config.camera_height, config.detector.clone())?
        .with_exec(Exec::Sequential);
    let cruise = Vec3::new(config.cruise_speed, 0.0, 0.0);
    let mut state = VehicleState {
        position: Vec3::ZERO,
        velocity: cruise,
        setpoint: cruise,
        yaw: 0.0,
    };
    let mut obstacle = config.obstacle_center();
    let mut active: Option<(EscapeCommand, f64)> = None;
    let mut records = Vec::new();
    let mut escape_count = 0;
    let max_frames = (config.max_duration / config.dt).ceil() as u64;

    for frame in 0..max_frames {
        let t = frame as f64 * config.dt;
        let scene = config.scene_at(obstacle);
        let image = render_frame(&scene, &config.camera_at(state.position, state.yaw), frame)?;
        let report = detector.process(&image)?;
        let potentials = report.as_ref().map(|r| r.potentials).unwrap_or_default();
        let confirmed = report.as_ref().is_some_and(|r| r.confirmed);
        if confirmed {
            active = Some((select_escape(&potentials, &config.steering)?, t));
            escape_count += 1;
        }
        let mut remaining = 0.0;
        let setpoint = match active {
            Some((cmd, issued)) if t - issued < cmd.duration => {
                remaining = cmd.duration - (t - issued);
                Vec3::from_array(command_to_setpoint(&cmd, t - issued))
            }
            _ => {
                active = None;
                cruise
            }
        };
        records.push(TraceRecord {
            frame,
            t,
            position: state.position,
            velocity: state.velocity,
            potentials,
            spike: report.as_ref().is_some_and(|r| r.spike),
            confirmed,
            command: active.map(|(c, _)| c),
            remaining,
        });

        state = step_vehicle(&state, setpoint, config.dt, config.tau)?;
        obstacle = obstacle + config.obstacle_velocity * config.dt;

        let outcome = if check_collision(&state, &config.scene_at(obstacle), config.margin) {
            Some(TrialOutcome::Collided)
        } else if state.position.x > obstacle.x + config.obstacle_radius + config.margin {
            Some(TrialOutcome::Avoided)
        } else if !config.arena.contains(state.position) {
            Some(TrialOutcome::Timeout)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            return Ok(TrialTrace {
                records,
                outcome,
                final_state: state,
                escape_count,
            });
        }
    }
    Ok(TrialTrace {
        records,
        outcome: TrialOutcome::Timeout,
        final_state: state,
        escape_count,
    })
}

/// Runs independent trials, in parallel when `exec` allows. Output order
/// follows input order.
pub fn run_trials(configs: &[TrialConfig], exec: Exec) -> Vec<Result<TrialTrace>> {
    exec.map(configs, run_trial)
}
