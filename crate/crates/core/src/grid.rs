//! Frame and layer grids. Both are row-major with row 0 at the top of the image.

use crate::error::{Error, Result};

/// Smallest frame edge the 5x5 inhibition kernel fits into.
pub const MIN_FRAME_EDGE: usize = 5;

/// 8-bit grayscale luminance frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    index: u64,
    luminance: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, index: u64, luminance: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if luminance.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "frame {index}: expected {} luminance values, got {}",
                width * height,
                luminance.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            index,
            luminance,
        })
    }

    /// Uniform frame of a single luminance value.
    pub fn filled(width: usize, height: usize, index: u64, value: u8) -> Result<Self> {
        Frame::new(width, height, index, vec![value; width * height])
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

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn luminance(&self) -> &[u8] {
        &self.luminance
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.luminance[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.luminance[y * self.width + x] = value;
    }

    /// Same pixels under a different frame number.
    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Frame {
        let mut luminance = self.luminance.clone();
        for row in luminance.chunks_mut(self.width) {
            row.reverse();
        }
        Frame { luminance, ..*self }
    }
}

/// Signed real-valued grid holding the output of one neural layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl LayerGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        LayerGrid {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "grid {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(LayerGrid {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        LayerGrid {
            width,
            height,
            values,
        }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    pub fn scaled(&self, factor: f64) -> LayerGrid {
        LayerGrid {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..*self
        }
    }

    pub fn mirrored(&self) -> LayerGrid {
        LayerGrid::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }

    pub fn rotated_180(&self) -> LayerGrid {
        let mut values = self.values.clone();
        values.reverse();
        LayerGrid { values, ..*self }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub(crate) fn same_dims(&self, other: &LayerGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::mismatch(self.dims(), other.dims()));
        }
        Ok(())
    }
}

pub(crate) fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_FRAME_EDGE || height < MIN_FRAME_EDGE {
        return Err(Error::InvalidInput(format!(
            "frame {width}x{height} is smaller than {MIN_FRAME_EDGE}x{MIN_FRAME_EDGE}"
        )));
    }
    Ok(())
}
