use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform collocation grid on the torus `[-π, π)^dim`, `dim ∈ {1, 2}`.
///
/// Points are stored as `x_j = j·Δ` with `Δ = 2π/n`; since `n` is even this is
/// the same point set as `-π + j·Δ` read modulo `2π`. In 2D the flat index is
/// row-major with the first coordinate as the row: `flat = i1·n + i2`.
/// Spectral arrays use the same layout with FFT wavenumber ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Grid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("n must be a power of two >= 8, got {n}")));
        }
        Ok(Self { dim, n })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, n)
    }

    pub fn line(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of collocation points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Quadrature weight of one collocation point, `Δ^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Signed wavenumber of a 1D FFT index; index `n/2` maps to `-n/2`.
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// Wavevector of a flat spectral index; the second component is 0 in 1D.
    pub fn wavevector(&self, flat: usize) -> [i64; 2] {
        if self.dim == 1 {
            [self.freq(flat), 0]
        } else {
            [self.freq(flat / self.n), self.freq(flat % self.n)]
        }
    }

    pub fn flat_index(&self, k: [i64; 2]) -> Option<usize> {
        if self.dim == 1 {
            if k[1] != 0 {
                return None;
            }
            self.index_of(k[0])
        } else {
            Some(self.index_of(k[0])? * self.n + self.index_of(k[1])?)
        }
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        let half = self.n as i64 / 2;
        let k = self.wavevector(flat);
        k[0] == -half || (self.dim == 2 && k[1] == -half)
    }

    /// Largest retained `|k_i|` under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.n as i64 / 3
    }

    /// Coordinates of a collocation point.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [flat as f64 * h, 0.0]
        } else {
            [(flat / self.n) as f64 * h, (flat % self.n) as f64 * h]
        }
    }

    /// Integer grid coordinates of a flat index.
    pub fn coords(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    pub fn flat_from_coords(&self, c: [usize; 2]) -> usize {
        if self.dim == 1 {
            c[0] % self.n
        } else {
            (c[0] % self.n) * self.n + c[1] % self.n
        }
    }

    /// Euclidean length of a wavevector.
    pub fn wavenumber_norm(k: [i64; 2]) -> f64 {
        ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()
    }

    /// `|k|` for every spectral index, in storage order.
    pub fn wavenumber_norms(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| Self::wavenumber_norm(self.wavevector(i)))
            .collect()
    }

    pub fn describe(&self) -> String {
        format!("{}D n={}", self.dim, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(2, 6).is_err());
        assert!(TorusGrid::new(2, 12).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(1, 8).is_ok());
    }

    #[test]
    fn fft_ordering() {
        let g = TorusGrid::line(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.freq(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!(g.is_nyquist(4));
    }

    #[test]
    fn flat_index_round_trip() {
        let g = TorusGrid::square(16).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat_index(g.wavevector(flat)), Some(flat));
        }
        assert_eq!(g.flat_index([8, 0]), None);
        assert_eq!(g.flat_index([-8, 0]), Some(8 * 16));
    }

    #[test]
    fn spacing_and_cutoff() {
        let g = TorusGrid::square(64).unwrap();
        assert!((g.spacing() * 64.0 - 2.0 * PI).abs() < 1e-14);
        assert_eq!(g.dealias_cutoff(), 21);
    }
}
