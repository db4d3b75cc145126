//! Diagonal partition of the visual field into four competing subfields,
//! their membrane potentials, and spike / collision confirmation.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{check_dims, LayerGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    Up,
    Down,
    Left,
    Right,
}

impl Quadrant {
    /// Canonical order: up, down, left, right.
    pub const ALL: [Quadrant; 4] = [Quadrant::Up, Quadrant::Down, Quadrant::Left, Quadrant::Right];

    pub fn opposite(self) -> Quadrant {
        match self {
            Quadrant::Up => Quadrant::Down,
            Quadrant::Down => Quadrant::Up,
            Quadrant::Left => Quadrant::Right,
            Quadrant::Right => Quadrant::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Quadrant::Up => 0,
            Quadrant::Down => 1,
            Quadrant::Left => 2,
            Quadrant::Right => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::Up => "up",
            Quadrant::Down => "down",
            Quadrant::Left => "left",
            Quadrant::Right => "right",
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-pixel subfield labels.
///
/// With normalised coordinates `u = x / (w - 1)` and `v = y / (h - 1)`
/// (v = 0 at the top), a pixel is UP when `v < min(u, 1 - u)`, DOWN when
/// `v > max(u, 1 - u)`, otherwise LEFT for `u < 0.5` and RIGHT for the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadrantMask {
    width: usize,
    height: usize,
    labels: Vec<Quadrant>,
}

impl QuadrantMask {
    pub fn build(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(label_at(x, y, width - 1, height - 1));
            }
        }
        Ok(QuadrantMask {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn label(&self, x: usize, y: usize) -> Quadrant {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[Quadrant] {
        &self.labels
    }

    /// Pixel counts in canonical order.
    pub fn counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for q in &self.labels {
            counts[q.index()] += 1;
        }
        counts
    }
}

/// The normalised comparisons evaluated exactly after scaling both sides by
/// `(w - 1) * (h - 1)`.
fn label_at(x: usize, y: usize, w1: usize, h1: usize) -> Quadrant {
    let diag = x * h1;
    let anti = (w1 - x) * h1;
    let row = y * w1;
    if row < diag.min(anti) {
        Quadrant::Up
    } else if row > diag.max(anti) {
        Quadrant::Down
    } else if 2 * x < w1 {
        Quadrant::Left
    } else {
        Quadrant::Right
    }
}

/// Unnormalised subfield sums of `|G|` and their total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrantSums {
    pub up: f64,
    pub down: f64,
    pub left: f64,
    pub right: f64,
    pub total: f64,
}

impl QuadrantSums {
    pub fn as_array(&self) -> [f64; 4] {
        [self.up, self.down, self.left, self.right]
    }
}

pub fn build_quadrant_mask(width: usize, height: usize) -> Result<QuadrantMask> {
    QuadrantMask::build(width, height)
}

/// Sums `|g|` over each labelled region. The total is the sum of the four
/// regional sums, so the decomposition holds by construction.
pub fn accumulate_quadrants(g: &LayerGrid, mask: &QuadrantMask) -> Result<QuadrantSums> {
    if g.dims() != mask.dims() {
        return Err(Error::mismatch(g.dims(), mask.dims()));
    }
    let mut acc = [0.0f64; 4];
    for (v, q) in g.values().iter().zip(mask.labels()) {
        acc[q.index()] += v.abs();
    }
    Ok(QuadrantSums {
        up: acc[0],
        down: acc[1],
        left: acc[2],
        right: acc[3],
        total: acc[0] + acc[1] + acc[2] + acc[3],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormParams {
    pub c1: f64,
    pub c2: f64,
    /// Spike threshold on the normalised potential.
    pub t_s: f64,
    /// Consecutive spikes needed to confirm a collision.
    pub n_sp: usize,
    /// Pixels per frame.
    pub n_cell: usize,
}

impl NormParams {
    /// Defaults for a frame of `n_cell` pixels; `c2 = 1 / n_cell` so that a
    /// saturated sigmoid maps to 255.
    pub fn for_cells(n_cell: usize) -> Self {
        NormParams {
            c1: 0.005,
            c2: 1.0 / n_cell as f64,
            t_s: 150.0,
            n_sp: 4,
            n_cell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c2 > 0.0) {
            return Err(Error::Config(format!("c2 must be > 0, got {}", self.c2)));
        }
        if self.n_sp == 0 {
            return Err(Error::Config("n_sp must be >= 1".into()));
        }
        if self.n_cell == 0 {
            return Err(Error::Config("n_cell must be >= 1".into()));
        }
        if !self.c1.is_finite() || self.t_s.is_nan() {
            return Err(Error::Config("c1 and t_s must be numbers".into()));
        }
        Ok(())
    }
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams::for_cells(100 * 100)
    }
}

/// Normalised whole-field potential and the four competing potentials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CLgmdPotentials {
    pub k_f0: f64,
    pub kappa: f64,
    pub up: f64,
    pub down: f64,
    pub left: f64,
    pub right: f64,
}

impl CLgmdPotentials {
    pub fn as_array(&self) -> [f64; 4] {
        [self.up, self.down, self.left, self.right]
    }

    pub fn get(&self, q: Quadrant) -> f64 {
        self.as_array()[q.index()]
    }

    /// Largest potential; ties go to the earlier quadrant in canonical order.
    pub fn argmax(&self) -> Quadrant {
        let mut best = Quadrant::Up;
        for q in Quadrant::ALL {
            if self.get(q) > self.get(best) {
                best = q;
            }
        }
        best
    }
}

/// Sigmoid normalisation of the whole-field sum followed by a proportional
/// split across the four subfields. A zero-activity frame yields all zeros;
/// the normalised value is clamped to `[0, 255]`.
pub fn normalize(sums: &QuadrantSums, params: &NormParams) -> CLgmdPotentials {
    let k = sums.total;
    if !(k > 0.0) {
        return CLgmdPotentials {
            k_f0: k.max(0.0),
            ..CLgmdPotentials::default()
        };
    }
    let n_cell = params.n_cell as f64;
    let raw = (k.sqrt() - n_cell * params.c1).tanh() / (n_cell * params.c2) * 255.0;
    let kappa = raw.clamp(0.0, 255.0);
    CLgmdPotentials {
        k_f0: k,
        kappa,
        up: sums.up / k * kappa,
        down: sums.down / k * kappa,
        left: sums.left / k * kappa,
        right: sums.right / k * kappa,
    }
}

/// Rolling spike window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorState {
    spike_history: VecDeque<bool>,
    collision_confirmed: bool,
    frames_seen: u64,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn collision_confirmed(&self) -> bool {
        self.collision_confirmed
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn spike_history(&self) -> impl Iterator<Item = bool> + '_ {
        self.spike_history.iter().copied()
    }

    pub fn last_spike(&self) -> bool {
        self.spike_history.back().copied().unwrap_or(false)
    }

    /// Pushes one frame's potential; returns the spike bit.
    pub fn push(&mut self, kappa: f64, params: &NormParams) -> bool {
        let spike = kappa >= params.t_s;
        self.spike_history.push_back(spike);
        while self.spike_history.len() > params.n_sp {
            self.spike_history.pop_front();
        }
        self.frames_seen += 1;
        self.collision_confirmed =
            self.spike_history.len() == params.n_sp && self.spike_history.iter().all(|s| *s);
        spike
    }
}

pub fn update_spike_state(kappa: f64, params: &NormParams, state: &DetectorState) -> DetectorState {
    let mut next = state.clone();
    next.push(kappa, params);
    next
}
