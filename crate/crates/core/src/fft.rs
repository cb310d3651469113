//! Small 2D FFT helpers over row-major complex buffers.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward or inverse unnormalized 2D DFT plan for a `width × height` grid.
pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize, inverse: bool) -> Self {
        let mut p = FftPlanner::new();
        let (row, col) = if inverse {
            (p.plan_fft_inverse(width), p.plan_fft_inverse(height))
        } else {
            (p.plan_fft_forward(width), p.plan_fft_forward(height))
        };
        Self {
            width,
            height,
            row,
            col,
        }
    }

    pub fn process(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.width * self.height);
        let mut scratch = vec![Complex64::default(); self.row.get_inplace_scratch_len()];
        for r in data.chunks_exact_mut(self.width) {
            self.row.process_with_scratch(r, &mut scratch);
        }
        let mut column = vec![Complex64::default(); self.height];
        let mut scratch = vec![Complex64::default(); self.col.get_inplace_scratch_len()];
        for x in 0..self.width {
            for y in 0..self.height {
                column[y] = data[y * self.width + x];
            }
            self.col.process_with_scratch(&mut column, &mut scratch);
            for y in 0..self.height {
                data[y * self.width + x] = column[y];
            }
        }
    }
}

/// Maps a DFT index to its signed frequency index in `(-n/2, n/2]`.
#[inline]
pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
