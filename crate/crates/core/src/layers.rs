//! Per-frame neural layers: photoreceptor (P), inhibition (I), summing (S)
//! and grouping (G). The excitatory E layer is the P layer passed through
//! unchanged, so it has no function of its own here.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::{Frame, LayerGrid};

pub const KERNEL_SIZE: usize = 5;
const KERNEL_RADIUS: usize = KERNEL_SIZE / 2;

/// Side of the uniform averaging window used by the grouping layer.
pub const GROUPING_KERNEL_SIZE: usize = 3;

/// 5x5 lateral inhibition mask. Off-centre weights fall off as the reciprocal
/// of the Euclidean distance to the centre cell; the centre itself is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct InhibitionKernel {
    weights: [[f64; KERNEL_SIZE]; KERNEL_SIZE],
    scale: f64,
}

impl InhibitionKernel {
    pub fn standard() -> Self {
        Self::with_scale(0.25)
    }

    pub fn with_scale(scale: f64) -> Self {
        let mut weights = [[0.0; KERNEL_SIZE]; KERNEL_SIZE];
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                let dy = i as f64 - KERNEL_RADIUS as f64;
                let dx = j as f64 - KERNEL_RADIUS as f64;
                if dx != 0.0 || dy != 0.0 {
                    *w = 1.0 / dx.hypot(dy);
                }
            }
        }
        InhibitionKernel { weights, scale }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled weight at kernel row `i`, column `j` (both in `0..5`).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.scale * self.weights[i][j]
    }

    pub fn sum(&self) -> f64 {
        (0..KERNEL_SIZE)
            .flat_map(|i| (0..KERNEL_SIZE).map(move |j| (i, j)))
            .map(|(i, j)| self.weight(i, j))
            .sum()
    }
}

impl Default for InhibitionKernel {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreParams {
    /// 0 convolves the current P layer, 1 the P layer of the previous frame.
    pub inhibition_delay: u8,
    /// Bias of the adaptive grouping scale.
    pub delta_c: f64,
    /// Divisor of the adaptive grouping scale.
    pub c_w: f64,
    /// Decay coefficient applied before thresholding.
    pub c_de: f64,
    /// Grouping threshold.
    pub t_de: f64,
}

impl Default for CoreParams {
    fn default() -> Self {
        CoreParams {
            inhibition_delay: 0,
            delta_c: 0.5,
            c_w: 4.0,
            c_de: 0.5,
            t_de: 15.0,
        }
    }
}

impl CoreParams {
    pub fn validate(&self) -> Result<()> {
        if self.inhibition_delay > 1 {
            return Err(Error::Config(format!(
                "inhibition_delay must be 0 or 1, got {}",
                self.inhibition_delay
            )));
        }
        if !(self.c_w > 0.0) {
            return Err(Error::Config(format!("c_w must be > 0, got {}", self.c_w)));
        }
        if !(self.t_de >= 0.0) {
            return Err(Error::Config(format!("t_de must be >= 0, got {}", self.t_de)));
        }
        if !self.delta_c.is_finite() || !self.c_de.is_finite() {
            return Err(Error::Config("delta_c and c_de must be finite".into()));
        }
        Ok(())
    }
}

/// Luminance change between two consecutive frames.
pub fn compute_p_layer(prev: &Frame, curr: &Frame) -> Result<LayerGrid> {
    if prev.dims() != curr.dims() {
        return Err(Error::mismatch(prev.dims(), curr.dims()));
    }
    if curr.index() != prev.index() + 1 {
        return Err(Error::NonConsecutive {
            previous: prev.index(),
            current: curr.index(),
        });
    }
    let values = curr
        .luminance()
        .iter()
        .zip(prev.luminance())
        .map(|(&c, &p)| f64::from(c) - f64::from(p))
        .collect();
    LayerGrid::from_vec(curr.width(), curr.height(), values)
}

/// Inhibition layer: the (optionally delayed) P layer convolved with the
/// inhibition kernel, zero-padded at the borders.
pub fn compute_inhibition(
    p: &LayerGrid,
    p_delayed: &LayerGrid,
    kernel: &InhibitionKernel,
    params: &CoreParams,
) -> Result<LayerGrid> {
    inhibition_with(p, p_delayed, kernel, params, Exec::default())
}

pub(crate) fn inhibition_with(
    p: &LayerGrid,
    p_delayed: &LayerGrid,
    kernel: &InhibitionKernel,
    params: &CoreParams,
    exec: Exec,
) -> Result<LayerGrid> {
    p.same_dims(p_delayed)?;
    let source = if params.inhibition_delay == 0 {
        p
    } else {
        p_delayed
    };
    Ok(convolve(source, kernel, exec))
}

/// Zero-padded 5x5 convolution. The kernel is point-symmetric, so this is
/// computed in correlation form.
///
/// Each output cell accumulates kernel rows top to bottom and columns left to
/// right, skipping taps that fall outside the grid.
pub fn convolve(src: &LayerGrid, kernel: &InhibitionKernel, exec: Exec) -> LayerGrid {
    let (w, h) = src.dims();
    let mut out = LayerGrid::zeros(w, h);
    let input = src.values();
    exec.fill_rows(out.values_mut(), w, |y, row| {
        for ki in 0..KERNEL_SIZE {
            let sy = y as isize + ki as isize - KERNEL_RADIUS as isize;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            let src_row = &input[sy as usize * w..(sy as usize + 1) * w];
            for kj in 0..KERNEL_SIZE {
                let weight = kernel.weight(ki, kj);
                if weight == 0.0 {
                    continue;
                }
                let dx = kj as isize - KERNEL_RADIUS as isize;
                // output x reads source x + dx
                let x0 = (-dx).max(0) as usize;
                let x1 = (w as isize - dx.max(0)) as usize;
                let shifted = &src_row[(x0 as isize + dx) as usize..(x1 as isize + dx) as usize];
                for (o, s) in row[x0..x1].iter_mut().zip(shifted) {
                    *o += weight * s;
                }
            }
        }
    });
    out
}

/// Summing layer: excitation minus inhibition. The sign is kept.
pub fn compute_s_layer(e: &LayerGrid, i: &LayerGrid) -> Result<LayerGrid> {
    e.same_dims(i)?;
    let values = e.values().iter().zip(i.values()).map(|(a, b)| a - b).collect();
    LayerGrid::from_vec(e.width(), e.height(), values)
}

/// Grouping layer with decay threshold.
///
/// A 3x3 mean of S gives the passing coefficient `Ce`; the adaptive scale is
/// `delta_c + max|Ce| / c_w`; `G = S * Ce / scale`; cells with
/// `|G| * c_de < t_de` are zeroed.
pub fn compute_g_layer(s: &LayerGrid, params: &CoreParams) -> Result<LayerGrid> {
    g_layer_with(s, params, Exec::default())
}

pub(crate) fn g_layer_with(s: &LayerGrid, params: &CoreParams, exec: Exec) -> Result<LayerGrid> {
    params.validate()?;
    let ce = box_mean3(s, exec);
    let omega = params.delta_c + ce.max_abs() / params.c_w;
    if !(omega > 0.0) {
        return Err(Error::Config(format!(
            "grouping scale must be positive, got {omega} (delta_c = {})",
            params.delta_c
        )));
    }
    let (w, h) = s.dims();
    let mut out = LayerGrid::zeros(w, h);
    let (sv, cv) = (s.values(), ce.values());
    exec.fill_rows(out.values_mut(), w, |y, row| {
        let base = y * w;
        for (x, o) in row.iter_mut().enumerate() {
            let g = sv[base + x] * cv[base + x] / omega;
            *o = if g.abs() * params.c_de >= params.t_de {
                g
            } else {
                0.0
            };
        }
    });
    Ok(out)
}

/// Zero-padded 3x3 mean; border cells still divide by 9.
pub(crate) fn box_mean3(src: &LayerGrid, exec: Exec) -> LayerGrid {
    let (w, h) = src.dims();
    let input = src.values();
    let norm = 1.0 / (GROUPING_KERNEL_SIZE * GROUPING_KERNEL_SIZE) as f64;
    let mut out = LayerGrid::zeros(w, h);
    exec.fill_rows(out.values_mut(), w, |y, row| {
        let y0 = y.saturating_sub(1);
        let y1 = (y + 1).min(h - 1);
        for (x, o) in row.iter_mut().enumerate() {
            let x0 = x.saturating_sub(1);
            let x1 = (x + 1).min(w - 1);
            let mut acc = 0.0;
            for sy in y0..=y1 {
                for v in &input[sy * w + x0..=sy * w + x1] {
                    acc += v;
                }
            }
            *o = acc * norm;
        }
    });
    out
}
