//! Discrete Hölder seminorm over grid shifts.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// Shifts `h = m·Δ` stored as integer grid steps, each component in `[-n/2, n/2)`
/// so that `|h| ≤ π√dim` (the canonical torus representative).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftSet {
    grid: TorusGrid,
    steps: Vec<[i64; 2]>,
}

impl ShiftSet {
    /// Every nonzero canonical grid shift.
    pub fn all(grid: TorusGrid) -> Self {
        let half = grid.n() as i64 / 2;
        let range = -half..half;
        let mut steps = Vec::new();
        if grid.dim() == 1 {
            steps.extend(range.filter(|&a| a != 0).map(|a| [a, 0]));
        } else {
            for a in range.clone() {
                for b in range.clone() {
                    if (a, b) != (0, 0) {
                        steps.push([a, b]);
                    }
                }
            }
        }
        Self { grid, steps }
    }

    /// Nonzero canonical shifts with `|h| ≤ radius`.
    pub fn within(grid: TorusGrid, radius: f64) -> Self {
        let mut s = Self::all(grid);
        let dx = grid.spacing();
        s.steps.retain(|m| {
            let len = dx * ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            len <= radius
        });
        s
    }

    /// Explicit shifts (grid steps); zero shifts are dropped and the rest canonicalized.
    pub fn from_steps(grid: TorusGrid, steps: impl IntoIterator<Item = [i64; 2]>) -> Self {
        let n = grid.n() as i64;
        let canon = |a: i64| (a + n / 2).rem_euclid(n) - n / 2;
        let mut out: Vec<[i64; 2]> = steps
            .into_iter()
            .map(|m| [canon(m[0]), if grid.dim() == 1 { 0 } else { canon(m[1]) }])
            .filter(|m| *m != [0, 0])
            .collect();
        out.dedup();
        Self { grid, steps: out }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[[i64; 2]] {
        &self.steps
    }

    pub fn length(&self, m: [i64; 2]) -> f64 {
        self.grid.spacing() * ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate {
    pub value: f64,
    /// Maximizing base point (collocation coordinates).
    pub argmax_x: [f64; 2],
    /// Maximizing shift, canonical representative.
    pub argmax_h: [f64; 2],
}

/// `max_{x,h} |φ(x+h) − φ(x)| / |h|^α` over collocation points and `shifts`.
///
/// Ties keep the first maximizer in (shift, point) order, so the argmax is
/// reproducible.
pub fn holder_seminorm(field: &SpectralField, alpha: f64, shifts: &ShiftSet) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!(
            "Hölder exponent must lie in (0, 1], got {alpha}"
        )));
    }
    if shifts.is_empty() {
        return Err(Error::domain("empty shift set"));
    }
    if shifts.grid != field.grid() {
        return Err(Error::GridMismatch(shifts.grid.describe(), field.grid().describe()));
    }
    let values = field.values();
    Ok(holder_of_values(field.grid(), &values, alpha, shifts))
}

pub(crate) fn holder_of_values(grid: TorusGrid, values: &[f64], alpha: f64, shifts: &ShiftSet) -> HolderEstimate {
    let n = grid.n();
    let dx = grid.spacing();
    let mut best = HolderEstimate {
        value: 0.0,
        argmax_x: [0.0; 2],
        argmax_h: [0.0; 2],
    };
    let mut found = false;
    for &m in &shifts.steps {
        let a = m[0].rem_euclid(n as i64) as usize;
        let b = m[1].rem_euclid(n as i64) as usize;
        let (mut peak, mut at) = (0.0f64, 0usize);
        if grid.dim() == 1 {
            for i in 0..n {
                let d = (values[(i + a) % n] - values[i]).abs();
                if d > peak {
                    peak = d;
                    at = i;
                }
            }
        } else {
            for i in 0..n {
                let src = ((i + a) % n) * n;
                let row = i * n;
                for j in 0..n {
                    let d = (values[src + (j + b) % n] - values[row + j]).abs();
                    if d > peak {
                        peak = d;
                        at = row + j;
                    }
                }
            }
        }
        let q = peak / shifts.length(m).powf(alpha);
        if !found || q > best.value {
            found = true;
            best = HolderEstimate {
                value: q,
                argmax_x: grid.point(at),
                argmax_h: [m[0] as f64 * dx, m[1] as f64 * dx],
            };
        }
    }
    best
}
