//! Stateful per-stream detector chaining the layers, the subfield competition
//! and the spike window.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{Frame, LayerGrid};
use crate::layers::{self, CoreParams, InhibitionKernel};
use crate::quadrant::{
    accumulate_quadrants, normalize, CLgmdPotentials, DetectorState, NormParams, QuadrantMask, QuadrantSums,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorParams {
    pub core: CoreParams,
    pub norm: NormParams,
}

/// Everything the detector produced for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub index: u64,
    pub sums: QuadrantSums,
    pub potentials: CLgmdPotentials,
    pub spike: bool,
    pub confirmed: bool,
}

/// Intermediate layers of one frame, for inspection and benchmarking.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub p: LayerGrid,
    pub i: LayerGrid,
    pub s: LayerGrid,
    pub g: LayerGrid,
}

/// One detector per frame stream. The first frame only primes the buffers.
#[derive(Debug, Clone)]
pub struct Detector {
    params: DetectorParams,
    kernel: InhibitionKernel,
    mask: QuadrantMask,
    previous: Option<Frame>,
    previous_p: LayerGrid,
    state: DetectorState,
    exec: Exec,
}

impl Detector {
    /// `params.norm.n_cell` is checked against the frame size.
    pub fn new(width: usize, height: usize, params: DetectorParams) -> Result<Self> {
        params.core.validate()?;
        params.norm.validate()?;
        if params.norm.n_cell != width * height {
            return Err(Error::Config(format!(
                "n_cell is {} but frames are {width}x{height}",
                params.norm.n_cell
            )));
        }
        Ok(Detector {
            params,
            kernel: InhibitionKernel::standard(),
            mask: QuadrantMask::build(width, height)?,
            previous: None,
            previous_p: LayerGrid::zeros(width, height),
            state: DetectorState::new(),
            exec: Exec::default(),
        })
    }

    /// Detector with default layer and normalisation parameters for this frame size.
    pub fn with_defaults(width: usize, height: usize) -> Result<Self> {
        Detector::new(
            width,
            height,
            DetectorParams {
                core: CoreParams::default(),
                norm: NormParams::for_cells(width * height),
            },
        )
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn mask(&self) -> &QuadrantMask {
        &self.mask
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    /// Feeds one frame. Returns `None` for the first frame of the stream.
    pub fn process(&mut self, frame: &Frame) -> Result<Option<FrameReport>> {
        let (w, h) = self.mask.dims();
        if frame.dims() != (w, h) {
            return Err(Error::mismatch((w, h), frame.dims()));
        }
        let Some(previous) = self.previous.take() else {
            self.previous = Some(frame.clone());
            return Ok(None);
        };
        let stack = match self.layers(&previous, frame) {
            Ok(stack) => stack,
            Err(e) => {
                self.previous = Some(previous);
                return Err(e);
            }
        };
        let sums = accumulate_quadrants(&stack.g, &self.mask)?;
        let potentials = normalize(&sums, &self.params.norm);
        let spike = self.state.push(potentials.kappa, &self.params.norm);
        self.previous_p = stack.p;
        self.previous = Some(frame.clone());
        Ok(Some(FrameReport {
            index: frame.index(),
            sums,
            potentials,
            spike,
            confirmed: self.state.collision_confirmed(),
        }))
    }

    /// Runs P, I, S and G for a frame pair without touching the stream state.
    pub fn layers(&self, previous: &Frame, current: &Frame) -> Result<LayerStack> {
        let p = layers::compute_p_layer(previous, current)?;
        let i = layers::inhibition_with(&p, &self.previous_p, &self.kernel, &self.params.core, self.exec)?;
        let s = layers::compute_s_layer(&p, &i)?;
        let g = layers::g_layer_with(&s, &self.params.core, self.exec)?;
        Ok(LayerStack { p, i, s, g })
    }

    /// Clears the stream buffers and spike window.
    pub fn reset(&mut self) {
        let (w, h) = self.mask.dims();
        self.previous = None;
        self.previous_p = LayerGrid::zeros(w, h);
        self.state = DetectorState::new();
    }
}

/// Runs a fresh detector over a frame sequence.
pub fn detect_sequence(frames: &[Frame], params: &DetectorParams) -> Result<Vec<FrameReport>> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let mut detector =
        Detector::new(first.width(), first.height(), params.clone())?.with_exec(Exec::Sequential);
    let mut reports = Vec::with_capacity(frames.len().saturating_sub(1));
    for frame in frames {
        if let Some(r) = detector.process(frame)? {
            reports.push(r);
        }
    }
    Ok(reports)
}
