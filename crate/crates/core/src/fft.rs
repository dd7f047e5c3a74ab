//! Forward/inverse transforms with the crate-wide normalization:
//! `c_k = n^{-dim} Σ_j v_j e^{-ik·x_j}` and `v_j = Σ_k c_k e^{ik·x_j}`, so the
//! coefficients are exactly those of the Fourier series `φ = Σ c_k e^{ik·x}`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::TorusGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

fn transform(grid: TorusGrid, buf: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    if grid.dim() == 2 {
        transpose(buf, n);
        fft.process_with_scratch(buf, &mut scratch);
        transpose(buf, n);
    }
}

/// Collocation values to Fourier coefficients.
pub fn forward(grid: TorusGrid, values: &[f64]) -> Vec<Complex64> {
    debug_assert_eq!(values.len(), grid.len());
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut buf, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Fourier coefficients to (real parts of) collocation values.
pub fn inverse(grid: TorusGrid, coeffs: &[Complex64]) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), grid.len());
    let mut buf = coeffs.to_vec();
    transform(grid, &mut buf, FftDirection::Inverse);
    buf.into_iter().map(|c| c.re).collect()
}
