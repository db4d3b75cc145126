use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clgmd::{Direction, Exec, ScenarioSpec};
use clgmd_cli::{cmd_detect_with, cmd_generate, cmd_simulate, CliResult, RunConfig, CONFIG_KEYS};

#[derive(Parser)]
#[command(name = "clgmd", version, about = "Competitive LGMD looming detector toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value parameter file
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one parameter (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector over a directory of numbered PGM frames
    Detect {
        frames_dir: PathBuf,
        #[arg(long, short, default_value = "detect.csv")]
        out: PathBuf,
        /// Spread each frame's row loops over all cores
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render a synthetic looming sequence
    Generate {
        out_dir: PathBuf,
        #[arg(long, default_value = "head-on")]
        direction: Direction,
        /// Approach speed, m/s (negative recedes)
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        speed: f64,
        /// Start distance, m
        #[arg(long, default_value_t = 3.0)]
        distance: f64,
        #[arg(long, default_value_t = 60)]
        frames: usize,
        #[arg(long, default_value_t = 50.0)]
        fps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Uniform per-pixel noise amplitude
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 100)]
        width: usize,
        #[arg(long, default_value_t = 100)]
        height: usize,
    },
    /// Fly one closed-loop obstacle trial
    Simulate {
        #[arg(long, short, default_value = "trace.csv")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// List configuration keys and defaults
    Keys,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Detect {
            frames_dir,
            out,
            parallel,
            config,
        } => {
            let cfg = RunConfig::resolve(config.config.as_deref(), &config.overrides)?;
            let exec = if parallel {
                Exec::Parallel
            } else {
                Exec::Sequential
            };
            let summary = cmd_detect_with(&frames_dir, &cfg, &out, exec)?;
            match summary.first_confirmed {
                Some(f) => println!("{} frames, collision confirmed at frame {f}", summary.frames_read),
                None => println!("{} frames, no collision confirmed", summary.frames_read),
            }
        }
        Command::Generate {
            out_dir,
            direction,
            speed,
            distance,
            frames,
            fps,
            seed,
            noise,
            width,
            height,
        } => {
            let spec = ScenarioSpec {
                direction,
                speed,
                distance,
                frames,
                fps,
                seed,
                noise,
                width,
                height,
                ..ScenarioSpec::default()
            };
            let n = cmd_generate(&spec, &out_dir)?;
            println!("wrote {n} frames to {}", out_dir.display());
        }
        Command::Simulate { out, config } => {
            let cfg = RunConfig::resolve(config.config.as_deref(), &config.overrides)?;
            let trace = cmd_simulate(&cfg, &out)?;
            println!("{}", trace.summary());
        }
        Command::Keys => {
            for (key, default) in CONFIG_KEYS {
                println!("{key:<20} {default}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clgmd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
