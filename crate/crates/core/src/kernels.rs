//! Real-space side of `Λ^α`: kernel constants, the periodic lattice kernel,
//! the dissipation density `D_α[φ](x)` by direct quadrature, and numerical
//! checks of the pointwise identity, the `L^p` Poincaré bound and the
//! nonlinear lower bound.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::{SpectralField, TrigEvaluator};
use crate::grid::TorusGrid;
use crate::numeric::{gauss_legendre, pairwise_sum_by};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

/// Normalization of the `Λ^α` kernel on `R^dim`:
/// `2^α Γ((dim+α)/2) / (π^{dim/2} |Γ(-α/2)|)`.
pub fn c_alpha_dim(alpha: f64, dim: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let d = dim as f64;
    Ok(2f64.powf(alpha) * gamma((d + alpha) / 2.0) / (PI.powf(d / 2.0) * gamma(-alpha / 2.0).abs()))
}

/// Planar kernel constant; `c_alpha(1) = 1/(2π)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    c_alpha_dim(alpha, 2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub alpha: f64,
    /// Images with `|k|_∞ ≤ lattice_radius` are summed directly.
    pub lattice_radius: usize,
    /// Add the integral approximation of the images outside the box.
    pub tail_correction: bool,
}

impl KernelSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            lattice_radius: 64,
            tail_correction: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.lattice_radius < 2 {
            return Err(Error::domain(format!(
                "lattice radius must be >= 2, got {}",
                self.lattice_radius
            )));
        }
        Ok(())
    }
}

/// `∫_0^{π/4} cos^γ φ dφ`.
fn cos_power_integral(gamma_exp: f64) -> f64 {
    let (x, w) = gauss_legendre(32);
    let half = PI / 8.0;
    x.iter()
        .zip(&w)
        .map(|(x, w)| w * half * (half * (x + 1.0)).cos().powf(gamma_exp))
        .sum()
}

/// Sum of `|y - 2πk|^{-(2+α)}` over images outside the box `|k|_∞ ≤ R`,
/// replaced by the exterior integral of the square of half-width `(2R+1)π`
/// with midpoint and second-order-in-`y` corrections.
fn lattice_tail(alpha: f64, radius: usize, y_sq: f64) -> f64 {
    let l = (2 * radius + 1) as f64 * PI;
    let beta = 2.0 + alpha;
    let i0 = 8.0 / alpha * l.powf(-alpha) * cos_power_integral(alpha);
    let i2 = beta * beta * 8.0 / (alpha + 2.0) * l.powf(-(alpha + 2.0)) * cos_power_integral(alpha + 2.0);
    (i0 + (y_sq / 4.0 - PI * PI / 6.0) * i2) / (4.0 * PI * PI)
}

/// Periodized kernel `c_α Σ_k |y - 2πk|^{-(2+α)}`; infinite on the lattice.
pub fn lattice_kernel(spec: &KernelSpec, y: [f64; 2]) -> Result<f64> {
    spec.validate()?;
    let alpha = spec.alpha;
    let r = spec.lattice_radius as i64;
    let width = (2 * r + 1) as usize;
    let half_beta = (2.0 + alpha) / 2.0;
    let sum = pairwise_sum_by(width * width, |i| {
        let a = (i / width) as i64 - r;
        let b = (i % width) as i64 - r;
        let d0 = y[0] - 2.0 * PI * a as f64;
        let d1 = y[1] - 2.0 * PI * b as f64;
        (d0 * d0 + d1 * d1).powf(-half_beta)
    });
    let tail = if spec.tail_correction {
        lattice_tail(alpha, spec.lattice_radius, y[0] * y[0] + y[1] * y[1])
    } else {
        0.0
    };
    Ok(c_alpha(alpha)? * (sum + tail))
}

/// Resolution of the principal-value quadrature for `D_α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Radius `δ` of the disk handled by the Taylor model.
    pub pv_inner_radius: f64,
    /// Radius beyond which only the torus-mean part of the integrand is kept.
    pub outer_radius: f64,
    /// Multiplies the radial and angular node counts.
    pub refinement: usize,
}

/// Relative change between refinement levels `L` and `2L` that still counts as resolved.
pub const SELF_CHECK_TOLERANCE: f64 = 1e-3;

impl QuadratureSpec {
    pub fn for_grid(grid: TorusGrid) -> Self {
        Self {
            pv_inner_radius: (0.5 * grid.spacing()).min(1e-3),
            outer_radius: 8.0 * PI,
            refinement: 1,
        }
    }

    pub fn validate(&self, grid: TorusGrid) -> Result<()> {
        if !(self.pv_inner_radius > 0.0 && self.pv_inner_radius < grid.spacing()) {
            return Err(Error::domain(format!(
                "inner radius {} must lie in (0, {})",
                self.pv_inner_radius,
                grid.spacing()
            )));
        }
        if !(self.outer_radius >= 4.0 * PI) {
            return Err(Error::domain(format!("outer radius {} below 4π", self.outer_radius)));
        }
        if self.refinement == 0 {
            return Err(Error::domain("refinement must be >= 1"));
        }
        Ok(())
    }
}

/// `C^∞` step: 1 on `[0, r1]`, 0 from `r2` on.
fn taper(r: f64, r1: f64, r2: f64) -> f64 {
    if r <= r1 {
        return 1.0;
    }
    if r >= r2 {
        return 0.0;
    }
    let t = (r - r1) / (r2 - r1);
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    b / (a + b)
}

#[derive(Clone, Copy, Debug)]
struct RadialNode {
    r: f64,
    /// Quadrature weight times `r^{-1-α}`.
    weight: f64,
    taper: f64,
}

/// `D_α[φ](x) = c_α P.V.∫_{R^dim} (φ(x) - φ(x+y))² |y|^{-dim-α} dy` for one field.
///
/// Polar quadrature around `x`: a second-order Taylor model on `|y| < δ`,
/// Gauss–Legendre panels in `r` (geometric up to 1, uniform after) with a
/// trapezoid rule in angle, and beyond a smooth cutoff only the torus mean of
/// `(φ(x) - φ(x+y))²`, whose radial integral is done in closed form.
#[derive(Clone, Debug)]
pub struct DissipationDensity {
    alpha: f64,
    dim: usize,
    constant: f64,
    eval: TrigEvaluator,
    mean: f64,
    mean_square: f64,
    scale: f64,
    spec: QuadratureSpec,
    kmax: f64,
    nodes: [Vec<RadialNode>; 2],
}

impl DissipationDensity {
    pub fn new(field: &SpectralField, alpha: f64, spec: QuadratureSpec) -> Result<Self> {
        check_alpha(alpha)?;
        let grid = field.grid();
        spec.validate(grid)?;
        let eval = field.evaluator();
        let kmax = eval.max_wavenumber();
        let mean_square = field.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        let mut d = Self {
            alpha,
            dim: grid.dim(),
            constant: c_alpha_dim(alpha, grid.dim())?,
            eval,
            mean: field.mean(),
            mean_square,
            scale: field.linf_norm().powi(2) * kmax.max(1.0).powf(alpha),
            spec,
            kmax,
            nodes: [Vec::new(), Vec::new()],
        };
        d.nodes = [d.radial_nodes(spec.refinement), d.radial_nodes(2 * spec.refinement)];
        Ok(d)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn cutoff_start(&self) -> f64 {
        0.5 * self.spec.outer_radius
    }

    fn radial_nodes(&self, level: usize) -> Vec<RadialNode> {
        let (gx, gw) = gauss_legendre(8 * level);
        let r2 = self.spec.outer_radius;
        let r1 = self.cutoff_start();
        let mut panels = Vec::new();
        let mut a = self.spec.pv_inner_radius;
        while a < 1.0 {
            let b = (2.0 * a).min(1.0);
            panels.push((a, b));
            a = b;
        }
        let target = (6.0 / self.kmax.max(1e-300)).min(1.0);
        let count = ((r2 - 1.0) / target).ceil() as usize;
        let h = (r2 - 1.0) / count as f64;
        panels.extend((0..count).map(|i| (1.0 + i as f64 * h, 1.0 + (i + 1) as f64 * h)));
        let mut nodes = Vec::with_capacity(panels.len() * gx.len());
        for (a, b) in panels {
            let half = 0.5 * (b - a);
            for (x, w) in gx.iter().zip(&gw) {
                let r = a + half * (x + 1.0);
                nodes.push(RadialNode {
                    r,
                    weight: w * half * r.powf(-1.0 - self.alpha),
                    taper: taper(r, r1, r2),
                });
            }
        }
        nodes
    }

    /// `∫ over directions of (φ(x) - φ(x + r ê))²`.
    fn angular(&self, x: [f64; 2], center: f64, r: f64, level: usize) -> f64 {
        if self.dim == 1 {
            let a = center - self.eval.value([x[0] + r, 0.0]);
            let b = center - self.eval.value([x[0] - r, 0.0]);
            return a * a + b * b;
        }
        let kr = self.kmax * r;
        let m = level * 2 * (kr + 8.0 * kr.cbrt() + 10.0).ceil() as usize;
        let dtheta = 2.0 * PI / m as f64;
        let mut s = 0.0;
        for j in 0..m {
            let (sin, cos) = (j as f64 * dtheta).sin_cos();
            let d = center - self.eval.value([x[0] + r * cos, x[1] + r * sin]);
            s += d * d;
        }
        s * dtheta
    }

    /// Value at refinement `level`, without the self-check.
    pub fn evaluate_at_level(&self, x: [f64; 2], level: usize) -> f64 {
        let owned;
        let nodes = if level == self.spec.refinement {
            &self.nodes[0]
        } else if level == 2 * self.spec.refinement {
            &self.nodes[1]
        } else {
            owned = self.radial_nodes(level);
            &owned
        };
        let jet = self.eval.jet(x);
        let center = jet.value;
        let alpha = self.alpha;
        let delta = self.spec.pv_inner_radius;
        let inner_lead = delta.powf(2.0 - alpha) / (2.0 - alpha);
        let inner_next = delta.powf(4.0 - alpha) / (4.0 - alpha);
        let (inner, directions) = if self.dim == 1 {
            let g = jet.grad[0];
            let h = jet.hess[0][0];
            (2.0 * (g * g * inner_lead + 0.25 * h * h * inner_next), 2.0)
        } else {
            let g2 = jet.grad[0].powi(2) + jet.grad[1].powi(2);
            let (a, b, c) = (jet.hess[0][0], jet.hess[0][1], jet.hess[1][1]);
            let quartic = PI * (3.0 * a * a + 3.0 * c * c + 4.0 * b * b + 2.0 * a * c) / 16.0;
            (PI * g2 * inner_lead + quartic * inner_next, 2.0 * PI)
        };
        let far_mean = center * center - 2.0 * center * self.mean + self.mean_square;
        let mut body = 0.0;
        for node in nodes {
            let near = if node.taper > 0.0 {
                node.taper * self.angular(x, center, node.r, level)
            } else {
                0.0
            };
            body += node.weight * (near + (1.0 - node.taper) * directions * far_mean);
        }
        let tail = directions * far_mean * self.spec.outer_radius.powf(-alpha) / alpha;
        (self.constant * (inner + body + tail)).max(0.0)
    }

    /// Value at the configured refinement, without the self-check.
    pub fn evaluate_unchecked(&self, x: [f64; 2]) -> f64 {
        self.evaluate_at_level(x, self.spec.refinement)
    }

    /// Value at twice the configured refinement; fails if it differs from the
    /// configured level by more than [`SELF_CHECK_TOLERANCE`] relative.
    pub fn evaluate(&self, x: [f64; 2]) -> Result<f64> {
        let coarse = self.evaluate_at_level(x, self.spec.refinement);
        let fine = self.evaluate_at_level(x, 2 * self.spec.refinement);
        let floor = 1e-12 * self.scale;
        if (fine - coarse).abs() > SELF_CHECK_TOLERANCE * fine.abs().max(floor) {
            return Err(Error::ResolutionInsufficient { x, coarse, fine });
        }
        Ok(fine)
    }
}

/// One-shot `D_α[φ](x)` with the refinement self-check.
pub fn dissipation_density(field: &SpectralField, alpha: f64, x: [f64; 2], spec: QuadratureSpec) -> Result<f64> {
    DissipationDensity::new(field, alpha, spec)?.evaluate(x)
}

/// Smallest power of two `≥ 8` strictly above `factor · band`, and at least `n`.
fn alias_free_size(band: i64, factor: i64, n: usize) -> usize {
    ((factor * band + 1) as usize).next_power_of_two().max(8).max(n)
}

/// `2φΛ^αφ - Λ^α(φ²)` computed spectrally on a grid fine enough that `φ²` is exact.
pub fn spectral_dissipation(field: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    let g = field.grid();
    let fine = field.resampled(alias_free_size(field.band(), 4, g.n()))?;
    let lam = fine.fractional_laplacian(alpha)?;
    let square = fine.product(&fine);
    let two_phi_lam = fine.product(&lam).scale(2.0);
    Ok(&two_phi_lam - &square.fractional_laplacian(alpha)?)
}

/// Pointwise identity check for one field: spectral side built once,
/// quadrature side evaluated per point.
#[derive(Clone, Debug)]
pub struct IdentityCheck {
    spectral: TrigEvaluator,
    density: DissipationDensity,
}

impl IdentityCheck {
    pub fn new(field: &SpectralField, alpha: f64, spec: QuadratureSpec) -> Result<Self> {
        Ok(Self {
            spectral: spectral_dissipation(field, alpha)?.evaluator(),
            density: DissipationDensity::new(field, alpha, spec)?,
        })
    }

    /// `|2φΛ^αφ - Λ^α(φ²) - D_α[φ]|` at `x`; only the quadrature can fail.
    pub fn residual(&self, x: [f64; 2]) -> Result<f64> {
        Ok((self.spectral.value(x) - self.density.evaluate(x)?).abs())
    }

    pub fn spectral_value(&self, x: [f64; 2]) -> f64 {
        self.spectral.value(x)
    }

    pub fn density(&self) -> &DissipationDensity {
        &self.density
    }
}

pub fn pointwise_identity_residual(
    field: &SpectralField,
    alpha: f64,
    x: [f64; 2],
    spec: QuadratureSpec,
) -> Result<f64> {
    if field.is_zero() {
        check_alpha(alpha)?;
        return Ok(0.0);
    }
    IdentityCheck::new(field, alpha, spec)?.residual(x)
}

/// Constant in the `L^p` Poincaré bound. For the critical planar case the
/// value `2⁹π²` is used; otherwise `8(2π + 2π√d)^{d+α} / (c_{α,d} (2π)^d)`.
pub fn poincare_constant(alpha: f64, dim: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if dim == 2 && alpha == 1.0 {
        return Ok(512.0 * PI * PI);
    }
    let d = dim as f64;
    let diam = 2.0 * PI * d.sqrt();
    Ok(8.0 * (2.0 * PI + diam).powf(d + alpha) / (c_alpha_dim(alpha, dim)? * (2.0 * PI).powf(d)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareReport {
    /// `∫ θ^{p-1} Λ^α θ`.
    pub lhs: f64,
    /// `(1/p) ‖Λ^{α/2}(θ^{p/2})‖²`.
    pub gradient_term: f64,
    /// `‖θ‖_p^p / C`.
    pub lower_order_term: f64,
}

impl PoincareReport {
    pub fn rhs(&self) -> f64 {
        self.gradient_term + self.lower_order_term
    }

    /// `lhs - rhs`, relative to `lhs`; negative means violated.
    pub fn slack(&self) -> f64 {
        if self.lhs == 0.0 {
            return 0.0;
        }
        (self.lhs - self.rhs()) / self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs()
    }
}

/// Both sides of the `L^p` Poincaré bound, integrated exactly on a grid with
/// more than `p · band` points per direction.
pub fn lp_poincare_check(field: &SpectralField, p: u32, alpha: f64) -> Result<PoincareReport> {
    check_alpha(alpha)?;
    if p == 0 || p % 4 != 0 {
        return Err(Error::domain(format!("p must be a positive multiple of 4, got {p}")));
    }
    if !field.is_mean_zero() {
        return Err(Error::Precondition("Poincaré check needs a mean-zero field".into()));
    }
    let c = poincare_constant(alpha, field.grid().dim())?;
    if field.is_zero() {
        return Ok(PoincareReport {
            lhs: 0.0,
            gradient_term: 0.0,
            lower_order_term: 0.0,
        });
    }
    let g = field.grid();
    let fine = field.resampled(alias_free_size(field.band(), p as i64, g.n()))?;
    let fg = fine.grid();
    let values = fine.values();
    let lam = fine.fractional_laplacian(alpha)?.values();
    let pi = p as i32;
    let lhs = pairwise_sum_by(values.len(), |i| values[i].powi(pi - 1) * lam[i]) * fg.cell_volume();
    let half_power: Vec<f64> = values.iter().map(|v| v.powi(pi / 2)).collect();
    let hp = SpectralField::from_values(fg, &half_power)?;
    let gradient_term = hp.sobolev_norm(alpha / 2.0).powi(2) / p as f64;
    let lp = pairwise_sum_by(values.len(), |i| values[i].powi(pi)) * fg.cell_volume();
    Ok(PoincareReport {
        lhs,
        gradient_term,
        lower_order_term: lp / c,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBoundSample {
    pub x: [f64; 2],
    /// `δ_hθ(x) = θ(x+h) - θ(x)`.
    pub increment: f64,
    /// `D[δ_hθ](x)` at `α = 1`.
    pub density: f64,
    /// `D · c₂ ‖θ‖_∞ |h| / |δ_hθ|³`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LowerBoundReport {
    pub samples: Vec<LowerBoundSample>,
}

impl LowerBoundReport {
    /// `None` when no point qualified (e.g. `δ_hθ ≡ 0`).
    pub fn min_ratio(&self) -> Option<f64> {
        self.samples.iter().map(|s| s.ratio).reduce(f64::min)
    }
}

/// Ratio field of the nonlinear lower bound `D[δ_hθ] ≥ |δ_hθ|³/(c₂‖θ‖_∞|h|)`.
///
/// Grid points with `|δ_hθ| > 1e-8 ‖θ‖_∞` qualify; only the `max_points` with the
/// largest increments are evaluated, since the ratio scales like `|δ_hθ|^{-3}`.
pub fn nonlinear_lower_bound_check(
    field: &SpectralField,
    h: [f64; 2],
    c2: f64,
    spec: QuadratureSpec,
    max_points: usize,
) -> Result<LowerBoundReport> {
    let h_len = (h[0] * h[0] + h[1] * h[1]).sqrt();
    if h_len == 0.0 {
        return Err(Error::domain("shift must be nonzero"));
    }
    let g = field.grid();
    let linf = field.linf_norm();
    let increment = &field.shifted(h) - field;
    let values = increment.values();
    let mut candidates: Vec<usize> = (0..values.len()).filter(|&i| values[i].abs() > 1e-8 * linf).collect();
    if candidates.is_empty() {
        return Ok(LowerBoundReport::default());
    }
    candidates.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    candidates.truncate(max_points);
    let density = DissipationDensity::new(&increment, 1.0, spec)?;
    let mut samples = Vec::with_capacity(candidates.len());
    for i in candidates {
        let x = g.point(i);
        let d = density.evaluate(x)?;
        let inc = values[i];
        samples.push(LowerBoundSample {
            x,
            increment: inc,
            density: d,
            ratio: d * c2 * linf * h_len / inc.abs().powi(3),
        });
    }
    Ok(LowerBoundReport { samples })
}
