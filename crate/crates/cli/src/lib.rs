//! Command implementations behind the `clgmd` binary.
//!
//! Each `cmd_*` function does the work of one subcommand and returns a
//! [`CliError`] that maps onto the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clgmd::pgm::{list_sequence, read_pgm, write_sequence};
use clgmd::sim::{run_trial, ObstaclePlacement, TrialConfig, TrialTrace};
use clgmd::steering::select_escape;
use clgmd::stimulus::generate_sequence_with;
use clgmd::{Detector, Exec, FrameReport, ScenarioSpec, Vec3};

pub const DETECT_HEADER: &str = "frame,kappa,u,d,l,r,spike,confirmed,cmd_axis,cmd_value";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Data(_) => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Wraps a library error raised while handling `path`.
    fn from_core(path: &Path, err: clgmd::Error) -> Self {
        match err {
            clgmd::Error::Io(source) => CliError::io(path, source),
            clgmd::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Data(format!("{}: {other}", path.display())),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Every tunable parameter, settable through `key=value` text.
///
/// Frame size comes from `width`/`height`; `n_cell` follows it and `c2`
/// defaults to `1 / n_cell` unless set explicitly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub trial: TrialConfig,
    c2: Option<f64>,
}

/// Recognised keys with their defaults and units.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("inhibition_delay", "0 (0 or 1 frames)"),
    ("delta_c", "0.5"),
    ("c_w", "4"),
    ("c_de", "0.5"),
    ("t_de", "15"),
    ("c1", "0.005"),
    ("c2", "1/(width*height)"),
    ("t_s", "150"),
    ("n_sp", "4"),
    ("speed_0", "0.5 m/s"),
    ("hold_duration", "1 s"),
    ("cruise_speed", "1 m/s"),
    ("placement", "left (center|left|right|up|down)"),
    ("obstacle_offset", "0.2 m"),
    ("obstacle_distance", "5 m"),
    ("obstacle_radius", "0.3 m"),
    ("obstacle_vx", "0 m/s"),
    ("obstacle_vy", "0 m/s"),
    ("obstacle_vz", "0 m/s"),
    ("obstacle_luminance", "40"),
    ("background", "180"),
    ("noise", "0"),
    ("seed", "0"),
    ("arena_length", "10 m"),
    ("arena_half_width", "3 m"),
    ("arena_half_height", "2 m"),
    ("dt", "0.02 s"),
    ("max_duration", "20 s"),
    ("tau", "0.3 s"),
    ("margin", "0.15 m"),
    ("width", "100 px"),
    ("height", "100 px"),
    ("fov_deg", "90"),
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value '{value}' for key '{key}'")))
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        let t = &mut self.trial;
        let core = &mut t.detector.core;
        let norm = &mut t.detector.norm;
        match key.trim() {
            "inhibition_delay" => core.inhibition_delay = parse(key, value)?,
            "delta_c" => core.delta_c = parse(key, value)?,
            "c_w" => core.c_w = parse(key, value)?,
            "c_de" => core.c_de = parse(key, value)?,
            "t_de" => core.t_de = parse(key, value)?,
            "c1" => norm.c1 = parse(key, value)?,
            "c2" => self.c2 = Some(parse(key, value)?),
            "t_s" => norm.t_s = parse(key, value)?,
            "n_sp" => norm.n_sp = parse(key, value)?,
            "speed_0" => t.steering.speed_0 = parse(key, value)?,
            "hold_duration" => t.steering.hold_duration = parse(key, value)?,
            "cruise_speed" => t.cruise_speed = parse(key, value)?,
            "placement" => {
                t.placement = value
                    .parse::<ObstaclePlacement>()
                    .map_err(|_| CliError::Config(format!("invalid value '{value}' for key 'placement'")))?
            }
            "obstacle_offset" => t.obstacle_offset = parse(key, value)?,
            "obstacle_distance" => t.obstacle_distance = parse(key, value)?,
            "obstacle_radius" => t.obstacle_radius = parse(key, value)?,
            "obstacle_vx" => t.obstacle_velocity.x = parse(key, value)?,
            "obstacle_vy" => t.obstacle_velocity.y = parse(key, value)?,
            "obstacle_vz" => t.obstacle_velocity.z = parse(key, value)?,
            "obstacle_luminance" => t.obstacle_luminance = parse(key, value)?,
            "background" => t.background = parse(key, value)?,
            "noise" => t.noise = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "arena_length" => t.arena.length = parse(key, value)?,
            "arena_half_width" => t.arena.half_width = parse(key, value)?,
            "arena_half_height" => t.arena.half_height = parse(key, value)?,
            "dt" => t.dt = parse(key, value)?,
            "max_duration" => t.max_duration = parse(key, value)?,
            "tau" => t.tau = parse(key, value)?,
            "margin" => t.margin = parse(key, value)?,
            "width" => t.camera_width = parse(key, value)?,
            "height" => t.camera_height = parse(key, value)?,
            "fov_deg" => t.fov = parse::<f64>(key, value)?.to_radians(),
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        self.sync();
        Ok(())
    }

    fn sync(&mut self) {
        let t = &mut self.trial;
        let n_cell = t.camera_width * t.camera_height;
        t.detector.norm.n_cell = n_cell;
        t.detector.norm.c2 = self.c2.unwrap_or(1.0 / n_cell.max(1) as f64);
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    /// `origin` names the source in error messages.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("{origin}:{}: expected key=value, got '{line}'", n + 1))
            })?;
            self.set(key, value).map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("{origin}:{}: {msg}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides such as those given by `--set`.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> CliResult<()> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override '{o}' is not key=value")))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Config file (if any) followed by overrides.
    pub fn resolve<S: AsRef<str>>(file: Option<&Path>, overrides: &[S]) -> CliResult<Self> {
        let mut cfg = match file {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(overrides)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.trial
            .validate()
            .map_err(|e| CliError::Config(strip_prefix(e)))
    }

    /// Effective settings as `key=value` lines, loadable with [`RunConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let t = &self.trial;
        let (core, norm) = (&t.detector.core, &t.detector.norm);
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("inhibition_delay", core.inhibition_delay.to_string());
        kv("delta_c", core.delta_c.to_string());
        kv("c_w", core.c_w.to_string());
        kv("c_de", core.c_de.to_string());
        kv("t_de", core.t_de.to_string());
        kv("c1", norm.c1.to_string());
        kv("c2", norm.c2.to_string());
        kv("t_s", norm.t_s.to_string());
        kv("n_sp", norm.n_sp.to_string());
        kv("speed_0", t.steering.speed_0.to_string());
        kv("hold_duration", t.steering.hold_duration.to_string());
        kv("cruise_speed", t.cruise_speed.to_string());
        kv("placement", t.placement.to_string());
        kv("obstacle_offset", t.obstacle_offset.to_string());
        kv("obstacle_distance", t.obstacle_distance.to_string());
        kv("obstacle_radius", t.obstacle_radius.to_string());
        kv("obstacle_vx", t.obstacle_velocity.x.to_string());
        kv("obstacle_vy", t.obstacle_velocity.y.to_string());
        kv("obstacle_vz", t.obstacle_velocity.z.to_string());
        kv("obstacle_luminance", t.obstacle_luminance.to_string());
        kv("background", t.background.to_string());
        kv("noise", t.noise.to_string());
        kv("seed", t.seed.to_string());
        kv("arena_length", t.arena.length.to_string());
        kv("arena_half_width", t.arena.half_width.to_string());
        kv("arena_half_height", t.arena.half_height.to_string());
        kv("dt", t.dt.to_string());
        kv("max_duration", t.max_duration.to_string());
        kv("tau", t.tau.to_string());
        kv("margin", t.margin.to_string());
        kv("width", t.camera_width.to_string());
        kv("height", t.camera_height.to_string());
        kv("fov_deg", t.fov.to_degrees().to_string());
        s
    }
}

fn strip_prefix(e: clgmd::Error) -> String {
    match e {
        clgmd::Error::Config(msg) | clgmd::Error::InvalidInput(msg) => msg,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectSummary {
    pub frames_read: usize,
    pub rows: Vec<FrameReport>,
    /// Index of the first frame with a confirmed collision.
    pub first_confirmed: Option<u64>,
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Runs the detector over a numbered PGM sequence and writes one CSV row per
/// processed frame.
pub fn cmd_detect(frames_dir: &Path, config: &RunConfig, out_csv: &Path) -> CliResult<DetectSummary> {
    cmd_detect_with(frames_dir, config, out_csv, Exec::Sequential)
}

pub fn cmd_detect_with(
    frames_dir: &Path,
    config: &RunConfig,
    out_csv: &Path,
    exec: Exec,
) -> CliResult<DetectSummary> {
    let steering = &config.trial.steering;
    steering
        .validate()
        .map_err(|e| CliError::Config(strip_prefix(e)))?;
    let files = list_sequence(frames_dir).map_err(|e| CliError::from_core(frames_dir, e))?;
    if files.is_empty() {
        return Err(CliError::Data(format!("no frames in {}", frames_dir.display())));
    }

    let mut detector: Option<Detector> = None;
    let mut rows = Vec::with_capacity(files.len());
    for (index, path) in &files {
        let frame = read_pgm(path, *index).map_err(|e| CliError::from_core(path, e))?;
        let det = match detector.as_mut() {
            Some(d) => d,
            None => {
                let mut params = config.trial.detector.clone();
                params.norm.n_cell = frame.width() * frame.height();
                if config.c2.is_none() {
                    params.norm.c2 = 1.0 / params.norm.n_cell as f64;
                }
                let d = Detector::new(frame.width(), frame.height(), params)
                    .map_err(|e| CliError::Config(strip_prefix(e)))?
                    .with_exec(exec);
                detector.insert(d)
            }
        };
        if let Some(report) = det.process(&frame).map_err(|e| CliError::from_core(path, e))? {
            rows.push(report);
        }
    }

    let mut w = create(out_csv)?;
    let io = |e| CliError::io(out_csv, e);
    writeln!(w, "{DETECT_HEADER}").map_err(io)?;
    for r in &rows {
        let p = &r.potentials;
        let (axis, value) = if r.confirmed {
            let cmd = select_escape(p, steering).map_err(|e| CliError::Data(e.to_string()))?;
            (cmd.axis.as_str(), cmd.value)
        } else {
            ("none", 0.0)
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            p.kappa,
            p.up,
            p.down,
            p.left,
            p.right,
            u8::from(r.spike),
            u8::from(r.confirmed),
            axis,
            value
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;

    Ok(DetectSummary {
        frames_read: files.len(),
        first_confirmed: rows.iter().find(|r| r.confirmed).map(|r| r.index),
        rows,
    })
}

/// Renders a scenario to `out_dir` as numbered PGM files plus a manifest.
/// Returns the number of frames written.
pub fn cmd_generate(spec: &ScenarioSpec, out_dir: &Path) -> CliResult<usize> {
    spec.validate().map_err(|e| CliError::Config(strip_prefix(e)))?;
    let frames =
        generate_sequence_with(spec, Exec::default()).map_err(|e| CliError::Data(strip_prefix(e)))?;
    write_sequence(out_dir, &frames, &spec.manifest()).map_err(|e| CliError::from_core(out_dir, e))?;
    Ok(frames.len())
}

/// Runs one closed-loop trial and writes its trace.
pub fn cmd_simulate(config: &RunConfig, out_csv: &Path) -> CliResult<TrialTrace> {
    config.validate()?;
    let trace = run_trial(&config.trial).map_err(|e| CliError::Data(strip_prefix(e)))?;
    let mut w = create(out_csv)?;
    trace
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(out_csv, e))?;
    Ok(trace)
}

/// Final displacement along the axis pointing away from `placement`;
/// positive means the vehicle moved away from the obstacle side.
pub fn escape_displacement(placement: ObstaclePlacement, displacement: Vec3) -> f64 {
    match placement {
        ObstaclePlacement::Left => -displacement.y,
        ObstaclePlacement::Right => displacement.y,
        ObstaclePlacement::Up => -displacement.z,
        ObstaclePlacement::Down => displacement.z,
        ObstaclePlacement::Center => 0.0,
    }
}
