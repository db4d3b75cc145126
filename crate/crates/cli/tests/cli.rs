use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clgmd::pgm::{list_sequence, read_pgm, write_pgm};
use clgmd::{Direction, Frame, ScenarioSpec};
use clgmd_cli::{cmd_detect, cmd_generate, RunConfig, DETECT_HEADER};
use proptest::prelude::*;
use tempfile::tempdir;

fn clgmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clgmd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_frames_and_manifest() {
    let tmp = tempdir().unwrap();
    let out = tmp.path().join("seq");
    let o = clgmd(&[
        "generate",
        out.to_str().unwrap(),
        "--frames",
        "10",
        "--direction",
        "left",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let files = dir_bytes(&out);
    assert_eq!(files.len(), 11);
    assert_eq!(list_sequence(&out).unwrap().len(), 10);
    assert_eq!(files[0].0, "frame_000000.pgm");
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("direction=left") && manifest.contains("frames=10"));
}

#[test]
fn generate_is_deterministic() {
    let tmp = tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "generate".to_owned(),
            tmp.path().join(d).to_string_lossy().into_owned(),
            "--direction".into(),
            "up".into(),
            "--frames".into(),
            "12".into(),
            "--seed".into(),
            "9".into(),
            "--noise".into(),
            "6".into(),
        ]
    };
    for d in ["a", "b"] {
        let a = args(d);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        assert!(clgmd(&refs).status.success());
    }
    assert_eq!(dir_bytes(&tmp.path().join("a")), dir_bytes(&tmp.path().join("b")));
}

#[test]
fn left_and_right_generate_mirrors() {
    let tmp = tempdir().unwrap();
    for side in ["left", "right"] {
        let dir = tmp.path().join(side);
        let o = clgmd(&[
            "generate",
            dir.to_str().unwrap(),
            "--direction",
            side,
            "--frames",
            "15",
            "--seed",
            "4",
        ]);
        assert!(o.status.success());
    }
    let left = list_sequence(&tmp.path().join("left")).unwrap();
    let right = list_sequence(&tmp.path().join("right")).unwrap();
    assert_eq!(left.len(), right.len());
    for ((i, l), (_, r)) in left.iter().zip(&right) {
        let l = read_pgm(l, *i).unwrap();
        let r = read_pgm(r, *i).unwrap();
        assert_eq!(l.mirrored(), r, "frame {i}");
    }
}

#[test]
fn receding_speed_is_accepted() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("recede");
    let o = clgmd(&[
        "generate",
        dir.to_str().unwrap(),
        "--speed",
        "-1",
        "--distance",
        "1.5",
        "--frames",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn invalid_spec_is_rejected() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path().join("bad");
    let o = clgmd(&["generate", dir.to_str().unwrap(), "--fps", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = clgmd(&["generate", dir.to_str().unwrap(), "--direction", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_frames_give_one_silent_row() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("f");
    fs::create_dir(&frames).unwrap();
    for i in 0..2 {
        let f = Frame::new(20, 10, i, (0..200).map(|v| (v * 7 % 256) as u8).collect()).unwrap();
        write_pgm(&frames.join(format!("frame_{i:06}.pgm")), &f).unwrap();
    }
    let csv = tmp.path().join("out.csv");
    let o = clgmd(&["detect", frames.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(DETECT_HEADER));
    assert!(!text.contains('\r'));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0], ["1", "0", "0", "0", "0", "0", "0", "0", "none", "0"]);
}

#[test]
fn left_looming_confirms_with_left_leading() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("left");
    assert!(clgmd(&[
        "generate",
        frames.to_str().unwrap(),
        "--direction",
        "left",
        "--seed",
        "2"
    ])
    .status
    .success());
    let csv = tmp.path().join("d.csv");
    let o = clgmd(&["detect", frames.to_str().unwrap(), "-o", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("collision confirmed"));
    let rows = csv_rows(&csv);
    let first = rows.iter().find(|r| r[7] == "1").expect("confirmation");
    let pot: Vec<f64> = first[2..6].iter().map(|v| v.parse().unwrap()).collect();
    assert!(pot[2] > pot[0] && pot[2] > pot[1] && pot[2] > pot[3], "{first:?}");
    // Left stimulus: escape to the right.
    assert_eq!((first[8].as_str(), first[9].as_str()), ("y", "-0.5"));
}

#[test]
fn parallel_detect_matches_sequential() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("s");
    assert!(clgmd(&[
        "generate",
        frames.to_str().unwrap(),
        "--direction",
        "down",
        "--noise",
        "6",
        "--frames",
        "30"
    ])
    .status
    .success());
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    assert!(
        clgmd(&["detect", frames.to_str().unwrap(), "-o", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(clgmd(&[
        "detect",
        frames.to_str().unwrap(),
        "-o",
        b.to_str().unwrap(),
        "--parallel"
    ])
    .status
    .success());
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn empty_directory_reports_no_frames() {
    let tmp = tempdir().unwrap();
    let o = clgmd(&[
        "detect",
        tmp.path().to_str().unwrap(),
        "-o",
        tmp.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no frames"), "{}", stderr(&o));
}

#[test]
fn missing_directory_is_an_io_error() {
    let tmp = tempdir().unwrap();
    let missing = tmp.path().join("nope");
    let o = clgmd(&["detect", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn corrupt_frame_is_named() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("f");
    assert!(clgmd(&["generate", frames.to_str().unwrap(), "--frames", "6"])
        .status
        .success());
    fs::write(frames.join("frame_000003.pgm"), b"P5\n100 100\n255\n\x01\x02").unwrap();
    let o = clgmd(&[
        "detect",
        frames.to_str().unwrap(),
        "-o",
        tmp.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("frame_000003.pgm"), "{}", stderr(&o));
}

#[test]
fn dimension_drift_is_rejected() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("f");
    fs::create_dir(&frames).unwrap();
    write_pgm(
        &frames.join("frame_000000.pgm"),
        &Frame::filled(10, 10, 0, 5).unwrap(),
    )
    .unwrap();
    write_pgm(
        &frames.join("frame_000001.pgm"),
        &Frame::filled(10, 10, 1, 5).unwrap(),
    )
    .unwrap();
    write_pgm(
        &frames.join("frame_000002.pgm"),
        &Frame::filled(12, 10, 2, 5).unwrap(),
    )
    .unwrap();
    let o = clgmd(&[
        "detect",
        frames.to_str().unwrap(),
        "-o",
        tmp.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("frame_000002.pgm"), "{}", stderr(&o));
}

#[test]
fn simulate_left_obstacle_is_avoided() {
    let tmp = tempdir().unwrap();
    let csv = tmp.path().join("trace.csv");
    let o = clgmd(&["simulate", "-o", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "OUTCOME=AVOIDED");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("frame,t,px,py,pz,vx,vy,vz,kappa,u,d,l,r,spike,confirmed,cmd_axis,cmd_value")
    );
    let last = csv_rows(&csv).pop().unwrap();
    assert!(last[3].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn simulate_disabled_detector_collides() {
    let tmp = tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# detector off\nt_s = 256\nplacement = center\n").unwrap();
    let o = clgmd(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "-o",
        tmp.path().join("t.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "OUTCOME=COLLIDED");
}

#[test]
fn set_flags_override_the_file() {
    let tmp = tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "t_s=256\nplacement=center\n").unwrap();
    let o = clgmd(&[
        "simulate",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "placement=left",
        "--set",
        "t_s=150",
        "-o",
        tmp.path().join("t.csv").to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o).trim(), "OUTCOME=AVOIDED");
}

#[test]
fn malformed_config_key_is_named() {
    let tmp = tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "t_s=150\nspeeed_0=1\n").unwrap();
    let trace = tmp.path().join("t.csv");
    let o = clgmd(&[
        "simulate",
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("speeed_0"), "{}", stderr(&o));
    assert!(!trace.exists(), "nothing runs after a config error");

    let o = clgmd(&["simulate", "--set", "dt=-1", "-o", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = clgmd(&["simulate", "-c", tmp.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(clgmd(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(clgmd(&[]).status.code(), Some(1));
    assert_eq!(clgmd(&["--help"]).status.code(), Some(0));
    let keys = clgmd(&["keys"]);
    assert!(stdout(&keys).contains("hold_duration"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generate_then_detect_round_trips(
        dir in prop_oneof![
            Just(Direction::Up), Just(Direction::Down), Just(Direction::Left),
            Just(Direction::Right), Just(Direction::HeadOn)
        ],
        speed in prop_oneof![0.3f64..4.0, -2.0f64..-0.3],
        distance in 0.6f64..5.0,
        frames in 0usize..12,
        seed in any::<u64>(),
        noise in 0.0f64..20.0,
        width in 5usize..40,
        height in 5usize..40,
    ) {
        let spec = ScenarioSpec { direction: dir, speed, distance, frames, seed, noise, width, height, ..ScenarioSpec::default() };
        prop_assume!(spec.validate().is_ok());
        let tmp = tempdir().unwrap();
        let out = tmp.path().join("seq");
        prop_assert_eq!(cmd_generate(&spec, &out).unwrap(), frames);
        let csv = tmp.path().join("d.csv");
        match cmd_detect(&out, &RunConfig::default(), &csv) {
            Ok(summary) => prop_assert_eq!(summary.rows.len(), frames.saturating_sub(1)),
            Err(e) => {
                prop_assert_eq!(frames, 0);
                prop_assert!(e.to_string().contains("no frames"));
            }
        }
    }
}

#[test]
fn numbering_gap_is_rejected() {
    let tmp = tempdir().unwrap();
    let frames = tmp.path().join("f");
    assert!(clgmd(&["generate", frames.to_str().unwrap(), "--frames", "5"]).status.success());
    fs::remove_file(frames.join("frame_000002.pgm")).unwrap();
    let o = clgmd(&["detect", frames.to_str().unwrap(), "-o", tmp.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("frame_000003.pgm"), "{}", stderr(&o));
}
