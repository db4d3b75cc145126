//! Deterministic synthetic scenes seen through a pinhole camera.
//!
//! Rendering is flat-shaded without anti-aliasing: a pixel takes the
//! luminance of the nearest object its centre ray hits, or the background.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Vec3;
use crate::grid::{check_dims, Frame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Axis-aligned box.
    Cuboid {
        center: Vec3,
        half_extents: Vec3,
    },
}

impl Shape {
    pub fn center(&self) -> Vec3 {
        match *self {
            Shape::Sphere { center, .. } | Shape::Cuboid { center, .. } => center,
        }
    }

    pub fn translated(&self, offset: Vec3) -> Shape {
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: center + offset,
                radius,
            },
            Shape::Cuboid { center, half_extents } => Shape::Cuboid {
                center: center + offset,
                half_extents,
            },
        }
    }

    /// Distance from `p` to the surface, 0 inside.
    pub fn distance(&self, p: Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).max(0.0),
            Shape::Cuboid { center, half_extents } => {
                let d = p - center;
                let outside = Vec3::new(
                    (d.x.abs() - half_extents.x).max(0.0),
                    (d.y.abs() - half_extents.y).max(0.0),
                    (d.z.abs() - half_extents.z).max(0.0),
                );
                outside.norm()
            }
        }
    }

    fn contains(&self, p: Vec3) -> bool {
        match *self {
            Shape::Sphere { center, radius } => {
                let d = p - center;
                d.dot(d) < radius * radius
            }
            Shape::Cuboid { center, half_extents } => {
                let d = p - center;
                d.x.abs() < half_extents.x && d.y.abs() < half_extents.y && d.z.abs() < half_extents.z
            }
        }
    }

    /// Smallest positive ray parameter `t` with `origin + t * dir` on the surface.
    fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = center - origin;
                let a = dir.dot(dir);
                let b = dir.dot(oc);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let root = disc.sqrt();
                let near = (b - root) / a;
                if near > 0.0 {
                    return Some(near);
                }
                let far = (b + root) / a;
                (far > 0.0).then_some(far)
            }
            Shape::Cuboid { center, half_extents } => {
                let lo = center - half_extents;
                let hi = center + half_extents;
                let mut t_enter = f64::NEG_INFINITY;
                let mut t_exit = f64::INFINITY;
                for (o, d, l, h) in [
                    (origin.x, dir.x, lo.x, hi.x),
                    (origin.y, dir.y, lo.y, hi.y),
                    (origin.z, dir.z, lo.z, hi.z),
                ] {
                    if d == 0.0 {
                        if o < l || o > h {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (l - o) / d;
                    let t2 = (h - o) / d;
                    t_enter = t_enter.max(t1.min(t2));
                    t_exit = t_exit.min(t1.max(t2));
                }
                if t_enter > t_exit || t_exit <= 0.0 {
                    return None;
                }
                Some(if t_enter > 0.0 { t_enter } else { t_exit })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { center, radius } => center.is_finite() && radius > 0.0,
            Shape::Cuboid { center, half_extents } => {
                center.is_finite() && half_extents.x > 0.0 && half_extents.y > 0.0 && half_extents.z > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate object {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    pub luminance: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub background: u8,
    /// Amplitude of per-pixel uniform noise in luminance units; 0 disables it.
    pub noise: f64,
    pub seed: u64,
}

impl Scene {
    pub fn empty(background: u8) -> Self {
        Scene {
            objects: Vec::new(),
            background,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// Forward-looking pinhole camera. Yaw rotates about +z, pitch about +y
/// (positive pitch looks down).
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub position: Vec3,
    pub yaw: f64,
    pub pitch: f64,
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            position: Vec3::ZERO,
            yaw: 0.0,
            pitch: 0.0,
            fov: std::f64::consts::FRAC_PI_2,
            width: 100,
            height: 100,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.width, self.height)?;
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!(
                "field of view must lie in (0, pi), got {}",
                self.fov
            )));
        }
        if !self.position.is_finite() || !self.yaw.is_finite() || !self.pitch.is_finite() {
            return Err(Error::InvalidInput("camera pose must be finite".into()));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.fov / 2.0).tan()
    }

    /// Unnormalised world-frame direction through the centre of pixel (col, row).
    pub fn ray(&self, col: usize, row: usize) -> Vec3 {
        let f = self.focal();
        let left = -((col as f64 + 0.5) - self.width as f64 / 2.0) / f;
        let up = -((row as f64 + 0.5) - self.height as f64 / 2.0) / f;
        self.to_world(Vec3::new(1.0, left, up))
    }

    fn to_world(&self, v: Vec3) -> Vec3 {
        let (sp, cp) = self.pitch.sin_cos();
        let pitched = Vec3::new(v.x * cp + v.z * sp, v.y, v.z * cp - v.x * sp);
        let (sy, cy) = self.yaw.sin_cos();
        Vec3::new(
            pitched.x * cy - pitched.y * sy,
            pitched.x * sy + pitched.y * cy,
            pitched.z,
        )
    }

    /// Pixel coordinates (col, row) of a camera-frame point, if in front of the camera.
    pub fn project(&self, p_cam: Vec3) -> Option<(f64, f64)> {
        if p_cam.x <= 0.0 {
            return None;
        }
        let f = self.focal();
        let col = self.width as f64 / 2.0 - f * p_cam.y / p_cam.x;
        let row = self.height as f64 / 2.0 - f * p_cam.z / p_cam.x;
        Some((col - 0.5, row - 0.5))
    }
}

pub fn render_frame(scene: &Scene, camera: &CameraModel, index: u64) -> Result<Frame> {
    camera.validate()?;
    if !(scene.noise >= 0.0 && scene.noise.is_finite()) {
        return Err(Error::InvalidInput(format!("noise amplitude {}", scene.noise)));
    }
    for obj in &scene.objects {
        obj.shape.validate()?;
        if obj.shape.contains(camera.position) {
            return Err(Error::InvalidInput(format!(
                "camera at {:?} is inside {:?}",
                camera.position, obj.shape
            )));
        }
    }
    let (w, h) = (camera.width, camera.height);
    let mut luminance = vec![0u8; w * h];
    for (row, out) in luminance.chunks_mut(w).enumerate() {
        render_row(scene, camera, index, row, out);
    }
    Frame::new(w, h, index, luminance)
}

fn render_row(scene: &Scene, camera: &CameraModel, index: u64, row: usize, out: &mut [u8]) {
    let mut rng = (scene.noise > 0.0).then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        rng.set_stream(index);
        rng.set_word_pos((row * camera.width) as u128);
        rng
    });
    for (col, px) in out.iter_mut().enumerate() {
        let dir = camera.ray(col, row);
        let mut nearest = f64::INFINITY;
        let mut value = scene.background;
        for obj in &scene.objects {
            if let Some(t) = obj.shape.intersect(camera.position, dir) {
                if t < nearest {
                    nearest = t;
                    value = obj.luminance;
                }
            }
        }
        *px = match rng.as_mut() {
            Some(rng) => {
                let unit = rng.next_u32() as f64 / u32::MAX as f64;
                let n = scene.noise * (2.0 * unit - 1.0);
                (value as f64 + n).round().clamp(0.0, 255.0) as u8
            }
            None => value,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
    HeadOn,
}

impl Direction {
    pub const SIDES: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::HeadOn => "head_on",
        }
    }

    /// Camera-frame unit vector toward this side of the field of view.
    fn lateral(self) -> Vec3 {
        match self {
            Direction::Up => Vec3::new(0.0, 0.0, 1.0),
            Direction::Down => Vec3::new(0.0, 0.0, -1.0),
            Direction::Left => Vec3::new(0.0, 1.0, 0.0),
            Direction::Right => Vec3::new(0.0, -1.0, 0.0),
            Direction::HeadOn => Vec3::ZERO,
        }
    }

    /// Unit vector perpendicular to `lateral` used for jitter.
    fn across(self) -> Vec3 {
        match self {
            Direction::Up | Direction::Down => Vec3::new(0.0, 1.0, 0.0),
            _ => Vec3::new(0.0, 0.0, 1.0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            "head_on" | "head-on" | "headon" | "center" | "centre" => Ok(Direction::HeadOn),
            other => Err(Error::InvalidInput(format!("unknown direction '{other}'"))),
        }
    }
}

/// A looming (or receding, for negative speed) test pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub direction: Direction,
    /// Approach speed, m/s. Negative values make the object recede.
    pub speed: f64,
    /// Initial distance from the camera, m.
    pub distance: f64,
    pub fps: f64,
    pub frames: usize,
    pub seed: u64,
    pub noise: f64,
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub object_radius: f64,
    /// Angle between the approach path and the optical axis, radians.
    pub off_axis: f64,
    pub object_luminance: u8,
    pub background: u8,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            direction: Direction::HeadOn,
            speed: 2.0,
            distance: 3.0,
            fps: 50.0,
            frames: 60,
            seed: 0,
            noise: 0.0,
            width: 100,
            height: 100,
            fov: std::f64::consts::FRAC_PI_2,
            object_radius: 0.15,
            off_axis: 30f64.to_radians(),
            object_luminance: 40,
            background: 180,
        }
    }
}

/// Default noise amplitude for noisy scenario batteries, in luminance units.
pub const DEFAULT_NOISE: f64 = 6.0;

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed.is_finite() && self.speed != 0.0) {
            return Err(Error::InvalidInput(format!(
                "speed must be non-zero, got {}",
                self.speed
            )));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidInput(format!("fps must be > 0, got {}", self.fps)));
        }
        if !(self.object_radius > 0.0) {
            return Err(Error::InvalidInput("object radius must be > 0".into()));
        }
        if !(self.distance > self.standoff()) {
            return Err(Error::InvalidInput(format!(
                "start distance {} m must exceed the {} m stand-off in front of the camera",
                self.distance,
                self.standoff()
            )));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.off_axis) {
            return Err(Error::InvalidInput("off-axis angle must lie in [0, pi/2)".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidInput("noise must be >= 0".into()));
        }
        self.camera().validate()
    }

    /// Closest approach; the object stops here.
    pub fn standoff(&self) -> f64 {
        3.0 * self.object_radius
    }

    pub fn camera(&self) -> CameraModel {
        CameraModel {
            fov: self.fov,
            width: self.width,
            height: self.height,
            ..CameraModel::default()
        }
    }

    /// The same scenario seen in a left-right mirror.
    pub fn mirrored(&self) -> ScenarioSpec {
        let direction = match self.direction {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            d => d,
        };
        ScenarioSpec {
            direction,
            ..self.clone()
        }
    }

    /// `key=value` lines describing the spec.
    pub fn manifest(&self) -> String {
        format!(
            "direction={}\nspeed={}\ndistance={}\nfps={}\nframes={}\nseed={}\nnoise={}\n\
             width={}\nheight={}\nfov_deg={}\nobject_radius={}\noff_axis_deg={}\n\
             object_luminance={}\nbackground={}\n",
            self.direction,
            self.speed,
            self.distance,
            self.fps,
            self.frames,
            self.seed,
            self.noise,
            self.width,
            self.height,
            self.fov.to_degrees(),
            self.object_radius,
            self.off_axis.to_degrees(),
            self.object_luminance,
            self.background,
        )
    }
}

/// Per-frame scenes of a scenario, all seen from one camera.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub camera: CameraModel,
    pub scenes: Vec<Scene>,
}

pub fn make_scenario(spec: &ScenarioSpec) -> Result<Trajectory> {
    spec.validate()?;
    // Jitter is drawn identically for every direction so that mirrored
    // specs stay exact mirrors.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let angle_jitter: f64 = rng.gen_range(-0.15..=0.15);
    let across_jitter = rng.gen_range(-3.0f64..=3.0).to_radians();
    let speed_jitter: f64 = rng.gen_range(-0.1..=0.1);
    let distance_jitter: f64 = rng.gen_range(-0.1..=0.1);

    let theta = match spec.direction {
        Direction::HeadOn => 0.0,
        _ => spec.off_axis * (1.0 + angle_jitter),
    };
    let across = match spec.direction {
        Direction::HeadOn => across_jitter / 3.0,
        _ => across_jitter,
    };
    let heading = Vec3::new(theta.cos() * across.cos(), 0.0, 0.0)
        + spec.direction.lateral() * (theta.sin() * across.cos())
        + spec.direction.across() * across.sin();
    let heading = heading * (1.0 / heading.norm());
    let speed = spec.speed * (1.0 + speed_jitter);
    let start = (spec.distance * (1.0 + distance_jitter)).max(spec.standoff() * 1.0001);

    let scenes = (0..spec.frames)
        .map(|k| {
            let travelled = speed * k as f64 / spec.fps;
            let range = (start - travelled).max(spec.standoff());
            Scene {
                objects: vec![SceneObject {
                    shape: Shape::Sphere {
                        center: heading * range,
                        radius: spec.object_radius,
                    },
                    luminance: spec.object_luminance,
                }],
                background: spec.background,
                noise: spec.noise,
                seed: spec.seed,
            }
        })
        .collect();
    Ok(Trajectory {
        camera: spec.camera(),
        scenes,
    })
}

pub fn generate_sequence(spec: &ScenarioSpec) -> Result<Vec<Frame>> {
    generate_sequence_with(spec, Exec::default())
}

/// Renders the frames of a scenario, in parallel by frame index when `exec` allows.
pub fn generate_sequence_with(spec: &ScenarioSpec, exec: Exec) -> Result<Vec<Frame>> {
    let traj = make_scenario(spec)?;
    let indexed: Vec<(u64, &Scene)> = traj
        .scenes
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u64, s))
        .collect();
    exec.map(&indexed, |(i, scene)| render_frame(scene, &traj.camera, *i))
        .into_iter()
        .collect()
}

/// Pixels differing from `background`.
pub fn object_pixels(frame: &Frame, background: u8) -> impl Iterator<Item = (usize, usize)> + '_ {
    let w = frame.width();
    frame
        .luminance()
        .iter()
        .enumerate()
        .filter(move |(_, v)| **v != background)
        .map(move |(i, _)| (i % w, i / w))
}
