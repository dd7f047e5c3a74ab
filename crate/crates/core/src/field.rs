use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::TorusGrid;
use crate::numeric::pairwise_sum_by;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real periodic field stored by its Fourier coefficients.
///
/// Coefficients follow the normalization in [`crate::fft`]: `φ(x) = Σ c_k e^{ik·x}`,
/// hence `‖φ‖²_{L²} = (2π)^dim Σ |c_k|²`. Nyquist modes are always zero and the
/// coefficient array is kept Hermitian. State fields (θ, f, ξ) are mean-zero;
/// intermediate products such as `φ²` may carry a mean, which
/// [`SpectralField::mean`] exposes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Transform collocation values; the mean is kept.
    pub fn from_values(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} values for {}, got {}",
                grid.len(),
                grid.describe(),
                values.len()
            )));
        }
        let mut f = Self {
            grid,
            coeffs: fft::forward(grid, values),
        };
        f.symmetrize();
        Ok(f)
    }

    /// Transform collocation values and drop the mean.
    pub fn from_values_mean_zero(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        let mut f = Self::from_values(grid, values)?;
        f.coeffs[0] = ZERO;
        Ok(f)
    }

    /// Sample `f` on the grid (second coordinate is 0 in 1D); the mean is kept.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_values(grid, &values).expect("length matches grid")
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let mut f = Self { grid, coeffs };
        f.symmetrize();
        Ok(f)
    }

    /// `amplitude · cos(k·x)` or `amplitude · sin(k·x)`.
    pub fn single_mode(grid: TorusGrid, k: [i64; 2], amplitude: f64, phase: Phase) -> Result<Self> {
        if k == [0, 0] {
            return Err(Error::domain("single mode needs k != 0"));
        }
        let (Some(plus), Some(minus)) = (grid.flat_index(k), grid.flat_index([-k[0], -k[1]])) else {
            return Err(Error::domain(format!("mode {k:?} not resolved on {}", grid.describe())));
        };
        let mut f = Self::zeros(grid);
        let (cp, cm) = match phase {
            Phase::Cos => (
                Complex64::new(0.5 * amplitude, 0.0),
                Complex64::new(0.5 * amplitude, 0.0),
            ),
            Phase::Sin => (
                Complex64::new(0.0, -0.5 * amplitude),
                Complex64::new(0.0, 0.5 * amplitude),
            ),
        };
        f.coeffs[plus] = cp;
        f.coeffs[minus] = cm;
        f.zero_nyquist();
        Ok(f)
    }

    fn zero_nyquist(&mut self) {
        let half = self.grid.n() / 2;
        let n = self.grid.n();
        if self.grid.dim() == 1 {
            self.coeffs[half] = ZERO;
        } else {
            for j in 0..n {
                self.coeffs[half * n + j] = ZERO;
                self.coeffs[j * n + half] = ZERO;
            }
        }
    }

    fn symmetrize(&mut self) {
        let g = self.grid;
        for i in 0..g.len() {
            let k = g.wavevector(i);
            if let Some(j) = g.flat_index([-k[0], -k[1]]) {
                if j > i {
                    let avg = 0.5 * (self.coeffs[i] + self.coeffs[j].conj());
                    self.coeffs[i] = avg;
                    self.coeffs[j] = avg.conj();
                } else if j == i {
                    self.coeffs[i].im = 0.0;
                }
            }
        }
        self.zero_nyquist();
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: [i64; 2]) -> Complex64 {
        self.grid.flat_index(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn values(&self) -> Vec<f64> {
        fft::inverse(self.grid, &self.coeffs)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Mean below `1e-12` relative to the largest coefficient.
    pub fn is_mean_zero(&self) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs[0].norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE)
    }

    pub fn without_mean(&self) -> Self {
        let mut f = self.clone();
        f.coeffs[0] = ZERO;
        f
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    fn ensure_same_grid(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
    }

    /// Apply a real multiplier `m(k)`.
    pub fn map_multiplier(&self, m: impl Fn([i64; 2]) -> f64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if *c == ZERO { ZERO } else { c * m(g.wavevector(i)) })
            .collect();
        Self { grid: g, coeffs }
    }

    /// Apply a complex multiplier; the caller keeps it Hermitian (`m(-k) = conj m(k)`).
    pub fn map_symbol(&self, m: impl Fn([i64; 2]) -> Complex64) -> Self {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if *c == ZERO { ZERO } else { c * m(g.wavevector(i)) })
            .collect();
        Self { grid: g, coeffs }
    }

    /// `Λ^s`, symbol `|k|^s`; the k = 0 coefficient of the output is 0.
    pub fn fractional_laplacian(&self, s: f64) -> Result<Self> {
        if !(-2.0..=3.0).contains(&s) {
            return Err(Error::domain(format!("s = {s} outside [-2, 3]")));
        }
        if s < 0.0 && !self.is_mean_zero() {
            return Err(Error::domain("negative powers of Λ need a mean-zero field"));
        }
        if s == 0.0 {
            return Ok(self.without_mean());
        }
        Ok(self.map_multiplier(|k| {
            if k == [0, 0] {
                0.0
            } else {
                TorusGrid::wavenumber_norm(k).powf(s)
            }
        }))
    }

    /// `u = R^⊥θ = (-R₂θ, R₁θ)` with `R_j ↔ i k_j/|k|`.
    pub fn riesz_perp(&self) -> Result<(Self, Self)> {
        if self.grid.dim() != 2 {
            return Err(Error::Unsupported("riesz_perp needs a 2D field".into()));
        }
        let riesz = |axis: usize| {
            self.map_symbol(move |k| {
                if k == [0, 0] {
                    ZERO
                } else {
                    Complex64::new(0.0, k[axis] as f64 / TorusGrid::wavenumber_norm(k))
                }
            })
        };
        Ok((-riesz(1), riesz(0)))
    }

    /// `∂_{x_axis}`.
    pub fn partial(&self, axis: usize) -> Self {
        self.map_symbol(|k| Complex64::new(0.0, k[axis] as f64))
    }

    pub fn gradient(&self) -> [Self; 2] {
        [self.partial(0), self.partial(1)]
    }

    /// `‖Λ^s φ‖_{L²}`; the mean contributes only at `s = 0`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = self.grid;
        let sum = pairwise_sum_by(g.len(), |i| {
            let c = self.coeffs[i];
            if c == ZERO {
                return 0.0;
            }
            let k = g.wavevector(i);
            let w = if k == [0, 0] {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                TorusGrid::wavenumber_norm(k).powf(2.0 * s)
            };
            w * c.norm_sqr()
        });
        (sum * g.volume()).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Homogeneous `H^s` inner product `(2π)^dim Σ |k|^{2s} Re(f̂ conj ĝ)`.
    pub fn inner_sobolev(&self, other: &Self, s: f64) -> f64 {
        self.ensure_same_grid(other);
        let g = self.grid;
        let sum = pairwise_sum_by(g.len(), |i| {
            let k = g.wavevector(i);
            let w = if k == [0, 0] {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                TorusGrid::wavenumber_norm(k).powf(2.0 * s)
            };
            w * (self.coeffs[i] * other.coeffs[i].conj()).re
        });
        sum * g.volume()
    }

    pub fn inner_l2(&self, other: &Self) -> f64 {
        self.inner_sobolev(other, 0.0)
    }

    pub fn inner_h1(&self, other: &Self) -> f64 {
        self.inner_sobolev(other, 1.0)
    }

    /// `L^p` norm by collocation quadrature (`p` even) or collocation max (`p = ∞`).
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        let values = self.values();
        lp_of_values(self.grid, &values, p)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Zero every mode with `|k_i| > n/3`.
    pub fn dealiased(&self) -> Self {
        let cut = self.grid.dealias_cutoff();
        self.map_multiplier(|k| if k[0].abs() > cut || k[1].abs() > cut { 0.0 } else { 1.0 })
    }

    pub fn is_dealiased(&self) -> bool {
        let cut = self.grid.dealias_cutoff();
        let g = self.grid;
        self.coeffs.iter().enumerate().all(|(i, c)| {
            let k = g.wavevector(i);
            *c == ZERO || (k[0].abs() <= cut && k[1].abs() <= cut)
        })
    }

    /// Pointwise product on the collocation grid (aliasing is the caller's concern).
    pub fn product(&self, other: &Self) -> Self {
        self.ensure_same_grid(other);
        let a = self.values();
        let b = other.values();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_values(self.grid, &prod).expect("same grid")
    }

    /// Pointwise power on the collocation grid.
    pub fn powi(&self, p: i32) -> Self {
        let v: Vec<f64> = self.values().iter().map(|x| x.powi(p)).collect();
        Self::from_values(self.grid, &v).expect("same grid")
    }

    /// `x ↦ φ(x + h)` for an arbitrary real shift.
    pub fn shifted(&self, h: [f64; 2]) -> Self {
        self.map_symbol(|k| Complex64::from_polar(1.0, k[0] as f64 * h[0] + k[1] as f64 * h[1]))
    }

    /// Zero-pad (or truncate) to resolution `n` in every direction.
    pub fn resampled(&self, n: usize) -> Result<Self> {
        let target = TorusGrid::new(self.grid.dim(), n)?;
        let mut out = Self::zeros(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            if let Some(j) = target.flat_index(self.grid.wavevector(i)) {
                out.coeffs[j] = *c;
            }
        }
        out.symmetrize();
        Ok(out)
    }

    /// Largest `|k_i|` carried by a coefficient above `1e-13` of the peak.
    pub fn band(&self) -> i64 {
        let peak = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0;
        }
        let g = self.grid;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-13 * peak)
            .map(|(i, _)| {
                let k = g.wavevector(i);
                k[0].abs().max(k[1].abs())
            })
            .max()
            .unwrap_or(0)
    }

    /// `self + a·x`.
    pub fn axpy(&self, a: f64, x: &Self) -> Self {
        self.ensure_same_grid(x);
        let coeffs = self.coeffs.iter().zip(&x.coeffs).map(|(s, x)| s + x * a).collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * a).collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Wrap coefficients that are already Hermitian with zero Nyquist modes.
    pub(crate) fn from_raw(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn evaluator(&self) -> TrigEvaluator {
        TrigEvaluator::new(self)
    }
}

pub(crate) fn lp_of_values(grid: TorusGrid, values: &[f64], p: f64) -> Result<f64> {
    if p == f64::INFINITY {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    if p < 2.0 || p.fract() != 0.0 || (p as i64) % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "L^p norm needs even p >= 2 or p = inf, got {p}"
        )));
    }
    let pi = p as i32;
    let sum = pairwise_sum_by(values.len(), |i| values[i].powi(pi));
    Ok((sum * grid.cell_volume()).powf(1.0 / p))
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scale(a)
    }
}

/// Value, gradient and Hessian of a field at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

/// Direct evaluation of the trigonometric polynomial at arbitrary points,
/// restricted to the field's band so cost scales with `(2B+1)^dim`.
#[derive(Clone, Debug)]
pub struct TrigEvaluator {
    dim: usize,
    band: i64,
    table: Vec<Complex64>,
    max_wavenumber: f64,
}

impl TrigEvaluator {
    fn new(field: &SpectralField) -> Self {
        let g = field.grid();
        let band = field.band();
        let width = (2 * band + 1) as usize;
        let dim = g.dim();
        let mut table = vec![ZERO; if dim == 1 { width } else { width * width }];
        let mut max_wavenumber: f64 = 0.0;
        for (i, c) in field.coeffs().iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let k = g.wavevector(i);
            if k[0].abs() > band || k[1].abs() > band {
                continue;
            }
            max_wavenumber = max_wavenumber.max(TorusGrid::wavenumber_norm(k));
            let a = (k[0] + band) as usize;
            let idx = if dim == 1 {
                a
            } else {
                a * width + (k[1] + band) as usize
            };
            table[idx] = *c;
        }
        Self {
            dim,
            band,
            table,
            max_wavenumber,
        }
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.max_wavenumber
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn powers(&self, x: f64, out: &mut [Complex64]) {
        let b = self.band as usize;
        let base = Complex64::from_polar(1.0, x);
        out[b] = Complex64::new(1.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for j in 1..=b {
            p = if j % 16 == 0 {
                Complex64::from_polar(1.0, j as f64 * x)
            } else {
                p * base
            };
            out[b + j] = p;
            out[b - j] = p.conj();
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let width = (2 * self.band + 1) as usize;
        if width > 129 {
            return self.jet(x).value;
        }
        let mut e1 = [ZERO; 129];
        let e1 = &mut e1[..width];
        self.powers(x[0], e1);
        if self.dim == 1 {
            let mut s = 0.0;
            for (c, e) in self.table.iter().zip(e1.iter()) {
                s += (c * e).re;
            }
            return s;
        }
        let mut e2 = [ZERO; 129];
        let e2 = &mut e2[..width];
        self.powers(x[1], e2);
        let mut total = 0.0;
        for (a, ea) in e1.iter().enumerate() {
            let row = &self.table[a * width..(a + 1) * width];
            let mut s = ZERO;
            for (c, eb) in row.iter().zip(e2.iter()) {
                s += c * eb;
            }
            total += (s * ea).re;
        }
        total
    }

    pub fn jet(&self, x: [f64; 2]) -> Jet {
        let width = (2 * self.band + 1) as usize;
        let mut e1 = vec![ZERO; width];
        self.powers(x[0], &mut e1);
        let mut e2 = vec![ZERO; width];
        if self.dim == 2 {
            self.powers(x[1], &mut e2);
        }
        let mut jet = Jet {
            value: 0.0,
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
        };
        let b = self.band;
        for a in 0..width {
            let k1 = a as i64 - b;
            let cols = if self.dim == 1 { 1 } else { width };
            for c in 0..cols {
                let (coef, k2, e) = if self.dim == 1 {
                    (self.table[a], 0, e1[a])
                } else {
                    (self.table[a * width + c], c as i64 - b, e1[a] * e2[c])
                };
                if coef == ZERO {
                    continue;
                }
                let z = coef * e;
                let k = [k1 as f64, k2 as f64];
                jet.value += z.re;
                for i in 0..2 {
                    jet.grad[i] += -(z.im) * k[i];
                    for j in 0..2 {
                        jet.hess[i][j] += -z.re * k[i] * k[j];
                    }
                }
            }
        }
        jet
    }
}

/// `2π`-periodic reduction of a coordinate into `[-π, π)`.
pub fn canonical_coordinate(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}
