//! Seeded band-limited random fields.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// Mean-zero field with modes `1 ≤ |k|_∞ ≤ band`, Gaussian coefficients with
/// variance `∝ 1/|k|²`, rescaled so the collocation maximum of `|θ|` equals `linf`.
///
/// The same `(grid, band, linf, seed)` always gives the same field.
pub fn band_limited(grid: TorusGrid, band: i64, linf: f64, seed: u64) -> Result<SpectralField> {
    if band < 1 || band >= grid.dealias_cutoff().max(2) {
        return Err(Error::domain(format!(
            "band {band} must lie in [1, {}) for n = {}",
            grid.dealias_cutoff().max(2),
            grid.n()
        )));
    }
    if !(linf >= 0.0 && linf.is_finite()) {
        return Err(Error::domain(format!("bad amplitude {linf}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let k2_range = if grid.dim() == 1 { 0..=0 } else { -band..=band };
    for k1 in 0..=band {
        for k2 in k2_range.clone() {
            // one representative per ± pair
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let k = [k1, k2];
            let sigma = 1.0 / TorusGrid::wavenumber_norm(k);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = Complex64::new(re, im) * sigma;
            let i = grid.flat_index(k).expect("band below n/2");
            let j = grid.flat_index([-k1, -k2]).expect("band below n/2");
            coeffs[i] = c;
            coeffs[j] = c.conj();
        }
    }
    let raw = SpectralField::from_coeffs(grid, coeffs)?;
    let peak = raw.linf_norm();
    if peak == 0.0 || linf == 0.0 {
        return Ok(SpectralField::zeros(grid));
    }
    Ok(raw.scale(linf / peak))
}
