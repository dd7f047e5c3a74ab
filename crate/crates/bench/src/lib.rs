//! Shared fixtures for the criterion benches in `benches/`.

use sqg_core::random::band_limited;
use sqg_core::{SpectralField, TorusGrid};

/// Band-limited mean-zero field on an `n × n` grid, fixed seed.
pub fn fixture(n: usize) -> SpectralField {
    let g = TorusGrid::square(n).expect("bench grid");
    band_limited(g, (n as i64 / 8).max(1), 1.0, 2024).expect("bench field")
}

/// Collocation values of [`fixture`].
pub fn fixture_values(n: usize) -> Vec<f64> {
    let f = fixture(n);
    sqg_core::fft::inverse(f.grid(), f.coeffs())
}
