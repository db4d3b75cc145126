use proptest::prelude::*;

use clgmd::pgm::{list_sequence, read_pgm, write_sequence};
use clgmd::quadrant::build_quadrant_mask;
use clgmd::sim::{run_trials, ObstaclePlacement};
use clgmd::stimulus::{
    generate_sequence, generate_sequence_with, object_pixels, render_frame, DEFAULT_NOISE,
};
use clgmd::{
    detect_sequence, CameraModel, Detector, DetectorParams, Direction, Exec, Quadrant, ScenarioSpec, Scene,
    TrialConfig, TrialOutcome,
};

fn quadrant_of(d: Direction) -> Quadrant {
    match d {
        Direction::Up => Quadrant::Up,
        Direction::Down => Quadrant::Down,
        Direction::Left => Quadrant::Left,
        _ => Quadrant::Right,
    }
}

fn side() -> impl Strategy<Value = Direction> {
    prop_oneof![
        Just(Direction::Up),
        Just(Direction::Down),
        Just(Direction::Left),
        Just(Direction::Right)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rendering_is_deterministic(dir in side(), seed in any::<u64>(), noise in 0.0f64..30.0) {
        let spec = ScenarioSpec { direction: dir, seed, noise, frames: 6, ..ScenarioSpec::default() };
        prop_assert_eq!(generate_sequence(&spec).unwrap(), generate_sequence(&spec).unwrap());
        prop_assert_eq!(
            generate_sequence_with(&spec, Exec::Sequential).unwrap(),
            generate_sequence_with(&spec, Exec::Parallel).unwrap()
        );
    }

    #[test]
    fn first_appearance_lies_in_the_matching_quadrant(dir in side(), seed in any::<u64>()) {
        let spec = ScenarioSpec { direction: dir, seed, ..ScenarioSpec::default() };
        let mask = build_quadrant_mask(spec.width, spec.height).unwrap();
        let first = generate_sequence(&spec)
            .unwrap()
            .into_iter()
            .find(|f| object_pixels(f, spec.background).next().is_some())
            .expect("object visible");
        let px: Vec<_> = object_pixels(&first, spec.background).collect();
        let cx = px.iter().map(|p| p.0 as f64).sum::<f64>() / px.len() as f64;
        let cy = px.iter().map(|p| p.1 as f64).sum::<f64>() / px.len() as f64;
        prop_assert_eq!(mask.label(cx.round() as usize, cy.round() as usize), quadrant_of(dir));
    }

    #[test]
    fn head_on_area_grows_once_visible(seed in any::<u64>(), speed in 0.5f64..3.0) {
        let spec = ScenarioSpec { seed, speed, frames: 40, ..ScenarioSpec::default() };
        let areas: Vec<usize> = generate_sequence(&spec)
            .unwrap()
            .iter()
            .map(|f| object_pixels(f, spec.background).count())
            .collect();
        let standoff_frame = areas.windows(2).position(|w| w[0] == w[1]).unwrap_or(areas.len());
        for w in areas[..standoff_frame].windows(2) {
            if w[0] >= 4 {
                prop_assert!(w[1] > w[0], "{:?}", areas);
            }
        }
        prop_assert!(areas.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn parallel_detector_matches_sequential(dir in side(), seed in 0u64..1000) {
        let spec = ScenarioSpec { direction: dir, seed, noise: DEFAULT_NOISE, frames: 25, ..ScenarioSpec::default() };
        let frames = generate_sequence(&spec).unwrap();
        let mut seq = Detector::with_defaults(100, 100).unwrap().with_exec(Exec::Sequential);
        let mut par = Detector::with_defaults(100, 100).unwrap().with_exec(Exec::Parallel);
        for f in &frames {
            prop_assert_eq!(seq.process(f).unwrap(), par.process(f).unwrap());
        }
    }
}

#[test]
fn default_noise_alone_never_spikes() {
    let scene = Scene {
        noise: DEFAULT_NOISE,
        seed: 11,
        ..Scene::empty(180)
    };
    let camera = CameraModel::default();
    let frames: Vec<_> = (0..80)
        .map(|i| render_frame(&scene, &camera, i).unwrap())
        .collect();
    let reports = detect_sequence(&frames, &DetectorParams::default()).unwrap();
    assert!(reports.iter().all(|r| r.potentials.kappa == 0.0 && !r.spike));
}

#[test]
fn looming_is_detected_and_receding_is_not() {
    let approach = ScenarioSpec {
        direction: Direction::HeadOn,
        ..ScenarioSpec::default()
    };
    let reports =
        detect_sequence(&generate_sequence(&approach).unwrap(), &DetectorParams::default()).unwrap();
    assert!(reports.iter().any(|r| r.confirmed));

    let recede = ScenarioSpec {
        speed: -2.0,
        distance: 0.5,
        ..approach
    };
    let frames = generate_sequence(&recede).unwrap();
    let areas: Vec<usize> = frames
        .iter()
        .map(|f| object_pixels(f, recede.background).count())
        .collect();
    assert!(areas.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn pgm_sequence_round_trip_preserves_detection() {
    let spec = ScenarioSpec {
        direction: Direction::Down,
        seed: 3,
        frames: 30,
        noise: DEFAULT_NOISE,
        ..ScenarioSpec::default()
    };
    let frames = generate_sequence(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path(), &frames, &spec.manifest()).unwrap();
    let read: Vec<_> = list_sequence(dir.path())
        .unwrap()
        .iter()
        .map(|(i, p)| read_pgm(p, *i).unwrap())
        .collect();
    assert_eq!(read, frames);
    let params = DetectorParams::default();
    assert_eq!(
        detect_sequence(&read, &params).unwrap(),
        detect_sequence(&frames, &params).unwrap()
    );
}

fn battery(t_s: f64) -> Vec<TrialOutcome> {
    let configs: Vec<TrialConfig> = [ObstaclePlacement::Center]
        .iter()
        .chain(ObstaclePlacement::SIDES.iter())
        .map(|&placement| {
            let mut cfg = TrialConfig {
                placement,
                ..TrialConfig::default()
            };
            cfg.detector.norm.t_s = t_s;
            cfg
        })
        .collect();
    run_trials(&configs, Exec::Parallel)
        .into_iter()
        .map(|t| t.unwrap().outcome)
        .collect()
}

#[test]
fn detector_improves_on_the_blind_baseline() {
    let avoided = |v: &[TrialOutcome]| v.iter().filter(|o| **o == TrialOutcome::Avoided).count();
    let blind = battery(256.0);
    let seeing = battery(150.0);
    assert_eq!(blind[0], TrialOutcome::Collided);
    assert!(avoided(&seeing) > avoided(&blind), "{seeing:?} vs {blind:?}");
}

#[test]
fn trial_batteries_agree_across_execution_modes() {
    let configs: Vec<TrialConfig> = ObstaclePlacement::SIDES
        .iter()
        .map(|&placement| TrialConfig {
            placement,
            max_duration: 4.0,
            ..TrialConfig::default()
        })
        .collect();
    let seq: Vec<_> = run_trials(&configs, Exec::Sequential)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let par: Vec<_> = run_trials(&configs, Exec::Parallel)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(seq, par);
}
