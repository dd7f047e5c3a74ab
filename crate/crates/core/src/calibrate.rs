//! Calibration of the constants file from corpus measurements.
//!
//! Every constant is the smallest (or largest) value the measurements allow,
//! times a safety factor of 2, except `ε₀` (fixed), `ε₁` (derived) and `c₁₁`
//! (exact lattice count). Time-dependent constants use seeds disjoint from the
//! shipped presets.

use crate::constants::Constants;
use crate::corpus::{corpus_fields, CorpusEntry};
use crate::diagnostics::{decay_rows, holder_budget, log_convexity_monitor, MAlphaEnvelope};
use crate::error::{Error, Result};
use crate::field::{Phase, SpectralField};
use crate::grid::TorusGrid;
use crate::holder::{holder_seminorm, ShiftSet};
use crate::kernels::{DissipationDensity, QuadratureSpec};
use crate::norms::NormSpec;
use crate::random::band_limited;
use crate::solver::{run, Dealias, Force, SolverConfig, Trajectory, TransportFrame};
use crate::tangent::eigenvalue_counting_constant;
use crate::verify::{lower_bound_min_ratio, lower_bound_shifts};

pub const SAFETY: f64 = 2.0;
/// Fixed Hölder budget factor; the decay constant carries the calibration.
pub const EPS0: f64 = 1.0 / 64.0;
/// Hölder exponents at which the gradient lower bound is calibrated.
pub const GRADIENT_ALPHAS: [f64; 3] = [0.125, 0.25, 0.5];

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationOptions {
    /// Grid side for planar corpus fields.
    pub n: usize,
    /// Grid size for line fields.
    pub line_n: usize,
    /// Largest-increment points per field and shift for `c₂`.
    pub lower_bound_points: usize,
    /// Largest-gradient points per field for `c₇`, `c₈`.
    pub gradient_points: usize,
    /// Horizon of the decay and log-convexity runs.
    pub horizon: f64,
    /// Horizon of the Hölder runs.
    pub holder_horizon: f64,
    /// Data and force seeds of the calibration runs (two each).
    pub seeds: [u64; 4],
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            n: 32,
            line_n: 128,
            lower_bound_points: 2,
            gradient_points: 2,
            horizon: 5.0,
            holder_horizon: 10.0,
            seeds: [9001, 9002, 9101, 9102],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub constants: Constants,
    /// One provenance line per constant.
    pub provenance: Vec<String>,
}

impl Calibration {
    pub fn to_text(&self) -> String {
        let mut header = vec!["calibrated by `sqg calibrate`".to_string()];
        header.extend(self.provenance.iter().cloned());
        self.constants.to_text(&header)
    }
}

fn run_config(kappa: f64, t_end: f64) -> SolverConfig {
    SolverConfig {
        kappa,
        dt: 1e-2,
        t_end,
        snapshot_interval: 0.1,
        ..SolverConfig::default()
    }
}

fn decay_norm_spec() -> NormSpec {
    NormSpec {
        lp: vec![4.0],
        hs: vec![],
        holder_alpha: None,
    }
}

/// A decay run: trajectory plus the force norms at `p = 2, 4, ∞`.
pub struct DecayRun {
    pub label: String,
    pub kappa: f64,
    pub trajectory: Trajectory,
    pub force: Force,
}

impl DecayRun {
    pub fn simulate(
        label: impl Into<String>,
        theta0: &SpectralField,
        force: Force,
        config: &SolverConfig,
    ) -> Result<Self> {
        let trajectory = run(theta0, config, &force, &decay_norm_spec(), &mut [])?;
        Ok(Self {
            label: label.into(),
            kappa: config.kappa,
            trajectory,
            force,
        })
    }

    /// `(‖θ(t)‖_p series, ‖f‖_p)` for `p = 2, 4, ∞`.
    pub fn series(&self) -> Result<Vec<(f64, Vec<f64>, f64)>> {
        let f = self.force.field();
        let norms = &self.trajectory.norms;
        Ok(vec![
            (2.0, norms.iter().map(|r| r.l2).collect(), f.l2_norm()),
            (
                4.0,
                norms.iter().map(|r| r.lp(4.0).unwrap_or(f64::NAN)).collect(),
                f.lp_norm(4.0)?,
            ),
            (f64::INFINITY, norms.iter().map(|r| r.linf).collect(), f.linf_norm()),
        ])
    }

    /// Whether every norm stays under the decay envelope with rate factor `c0`.
    pub fn fits(&self, c0: f64) -> Result<bool> {
        let t = &self.trajectory.times;
        Ok(self
            .series()?
            .iter()
            .all(|(_, norms, f)| decay_rows(t, norms, *f, self.kappa, c0).iter().all(|r| !r.violated())))
    }
}

/// Largest `c` with `fits(c)`, by bisection on `[0, 100]`.
pub fn largest_decay_rate(run: &DecayRun) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 100.0);
    if run.fits(hi)? {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if run.fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The decay runs: unforced and forced planar runs plus two line runs.
pub fn decay_runs(opts: &CalibrationOptions) -> Result<Vec<DecayRun>> {
    let [d1, d2, f1, f2] = opts.seeds;
    let grid = TorusGrid::square(opts.n)?;
    let line = TorusGrid::line(opts.line_n)?;
    let cfg = run_config(1.0, opts.horizon);
    let cos = SpectralField::single_mode(grid, [1, 0], 1.0, Phase::Cos)?;
    let data = |seed| band_limited(grid, 3, 1.0, seed);
    let force = |seed| Force::new(band_limited(grid, 2, 0.5, seed)?);
    let line_data = band_limited(line, 3, 1.0, d1)?;
    Ok(vec![
        DecayRun::simulate("cos unforced", &cos, Force::zero(grid), &cfg)?,
        DecayRun::simulate(format!("seed {d1} unforced"), &data(d1)?, Force::zero(grid), &cfg)?,
        DecayRun::simulate(format!("seed {d2} unforced"), &data(d2)?, Force::zero(grid), &cfg)?,
        DecayRun::simulate(format!("seed {d1} force {f1}"), &data(d1)?, force(f1)?, &cfg)?,
        DecayRun::simulate(format!("seed {d2} force {f2}"), &data(d2)?, force(f2)?, &cfg)?,
        DecayRun::simulate("line unforced", &line_data, Force::zero(line), &cfg)?,
        DecayRun::simulate(
            "line forced",
            &line_data,
            Force::new(band_limited(line, 2, 0.5, f1)?)?,
            &cfg,
        )?,
    ])
}

/// `c₀ = ½ min_run (largest admissible rate)`.
pub fn calibrate_c0(runs: &[DecayRun]) -> Result<(f64, String)> {
    let mut worst = (f64::INFINITY, String::new());
    for r in runs {
        let c = largest_decay_rate(r)?;
        if c < worst.0 {
            worst = (c, r.label.clone());
        }
    }
    if !(worst.0 > 0.0 && worst.0.is_finite()) {
        return Err(Error::domain(format!("no positive decay rate fits run `{}`", worst.1)));
    }
    let c0 = 0.5 * worst.0;
    Ok((
        c0,
        format!(
            "c0: half the largest L^p envelope rate, min {:.4e} over {} runs (`{}`)",
            worst.0,
            runs.len(),
            worst.1
        ),
    ))
}

/// `c₂ = 2 / (min lower-bound ratio at c₂ = 1)`.
pub fn calibrate_lower_bound(fields: &[SpectralField], shifts: &[[f64; 2]], points: usize) -> Result<(f64, f64)> {
    let raw = lower_bound_min_ratio(fields, shifts, points)?
        .ok_or_else(|| Error::Precondition("lower-bound calibration needs nonconstant fields".into()))?;
    Ok((SAFETY / raw, raw))
}

/// Line version of the eight shifts: the same lengths, alternating sign.
fn line_shifts() -> Vec<[f64; 2]> {
    lower_bound_shifts()
        .into_iter()
        .enumerate()
        .map(|(j, h)| {
            let len = (h[0] * h[0] + h[1] * h[1]).sqrt();
            [if j % 2 == 0 { len } else { -len }, 0.0]
        })
        .collect()
}

/// Hölder runs for `c₅`: `g(t)` series, `M_∞`, `κ`.
pub struct HolderRun {
    pub times: Vec<f64>,
    pub seminorms: Vec<f64>,
    pub m_inf: f64,
    pub kappa: f64,
}

impl HolderRun {
    pub fn fits(&self, c5: f64) -> Result<bool> {
        let env = MAlphaEnvelope::new(self.seminorms[0], self.m_inf, self.kappa, c5)?;
        Ok(self
            .times
            .iter()
            .zip(&self.seminorms)
            .all(|(&t, &s)| s * s <= env.value(t).powi(2) * (1.0 + 1e-9)))
    }
}

pub fn holder_runs(opts: &CalibrationOptions, consts: &Constants) -> Result<Vec<HolderRun>> {
    let [d1, d2, f1, f2] = opts.seeds;
    let grid = TorusGrid::square(opts.n)?;
    let shifts = ShiftSet::all(grid);
    let cfg = run_config(1.0, opts.holder_horizon);
    let mut out = Vec::new();
    for d in [d1, d2] {
        for f in [f1, f2] {
            let theta0 = band_limited(grid, 3, 1.0, d)?;
            let force = Force::new(band_limited(grid, 2, 0.5, f)?)?;
            let budget = holder_budget(theta0.linf_norm(), force.linf(), cfg.kappa, consts);
            let traj = run(&theta0, &cfg, &force, &decay_norm_spec(), &mut [])?;
            let seminorms = traj
                .snapshots
                .iter()
                .map(|s| holder_seminorm(s, budget.alpha0, &shifts).map(|e| e.value))
                .collect::<Result<Vec<_>>>()?;
            out.push(HolderRun {
                times: traj.times,
                seminorms,
                m_inf: budget.m_inf,
                kappa: cfg.kappa,
            });
        }
    }
    Ok(out)
}

/// Smallest `c₅` (log bisection on `[1e-4, 1e4]`) for which every run fits, times 2.
pub fn calibrate_c5(runs: &[HolderRun]) -> Result<(f64, f64)> {
    let all = |c: f64| -> Result<bool> {
        for r in runs {
            if !r.fits(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut lo, mut hi) = (1e-4f64.ln(), 1e4f64.ln());
    if !all(hi.exp())? {
        return Err(Error::domain("no c5 up to 1e4 bounds the Hölder runs"));
    }
    if all(lo.exp())? {
        return Ok((SAFETY * lo.exp(), lo.exp()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if all(mid.exp())? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((SAFETY * hi.exp(), hi.exp()))
}

/// Pointwise gradient data for `c₇`, `c₈` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientPoint {
    pub grad: f64,
    pub velocity_grad: f64,
    /// `D₁[∂₁θ] + D₁[∂₂θ]`.
    pub density: f64,
    pub linf: f64,
    /// `[θ]_α` at each of [`GRADIENT_ALPHAS`].
    pub seminorms: [f64; 3],
}

pub fn gradient_points(field: &SpectralField, count: usize) -> Result<Vec<GradientPoint>> {
    let grid = field.grid();
    let spec = QuadratureSpec::for_grid(grid);
    let [g1, g2] = field.gradient();
    let (u1, u2) = field.riesz_perp()?;
    let du: Vec<Vec<f64>> = [u1.partial(0), u1.partial(1), u2.partial(0), u2.partial(1)]
        .iter()
        .map(|f| f.values())
        .collect();
    let (v1, v2) = (g1.values(), g2.values());
    let mut order: Vec<usize> = (0..grid.len()).collect();
    let norm = |i: usize| (v1[i] * v1[i] + v2[i] * v2[i]).sqrt();
    order.sort_by(|&a, &b| norm(b).total_cmp(&norm(a)).then(a.cmp(&b)));
    order.truncate(count);
    let d1 = DissipationDensity::new(&g1, 1.0, spec)?;
    let d2 = DissipationDensity::new(&g2, 1.0, spec)?;
    let shifts = ShiftSet::all(grid);
    let mut seminorms = [0.0; 3];
    for (s, a) in seminorms.iter_mut().zip(GRADIENT_ALPHAS) {
        *s = holder_seminorm(field, a, &shifts)?.value;
    }
    let linf = field.linf_norm();
    order
        .into_iter()
        .filter(|&i| norm(i) > 0.0)
        .map(|i| {
            let x = grid.point(i);
            Ok(GradientPoint {
                grad: norm(i),
                velocity_grad: du.iter().map(|d| d[i] * d[i]).sum::<f64>().sqrt(),
                density: d1.evaluate(x)? + d2.evaluate(x)?,
                linf,
                seminorms,
            })
        })
        .collect()
}

/// Smallest `c₇` for `D[∇θ] ≥ |∇θ|^{(3−α)/(1−α)} / (c₇ [θ]_α^{1/(1−α)})` at these points.
pub fn c7_requirement(points: &[GradientPoint]) -> f64 {
    let mut need = 0.0f64;
    for p in points {
        for (a, s) in GRADIENT_ALPHAS.iter().zip(p.seminorms) {
            let num = p.grad.powf((3.0 - a) / (1.0 - a));
            need = need.max(num / (p.density * s.powf(1.0 / (1.0 - a))));
        }
    }
    need
}

/// Smallest `c₈` with `2|∇u||∇θ|² ≤ (κ/2)D + c₈ κ^{-1/2}‖θ‖_∞^{1/2}|∇θ|³` for every `κ`:
/// minimizing the right side over `κ` gives `c₈ ≥ (2a/3)^{3/2} / (D^{1/2} b)`.
pub fn c8_requirement(points: &[GradientPoint]) -> f64 {
    points
        .iter()
        .map(|p| {
            let a = 2.0 * p.velocity_grad * p.grad * p.grad;
            let b = p.linf.sqrt() * p.grad.powi(3);
            (2.0 * a / 3.0).powf(1.5) / (p.density.sqrt() * b)
        })
        .fold(0.0, f64::max)
}

/// `|2⟨u·∇θ, θ⟩_{H^{3/2}}| / (‖θ‖²_{H^{3/2}} ‖θ‖_{H²})`.
pub fn commutator_ratio(theta: &SpectralField) -> Result<f64> {
    let transport = TransportFrame::new(theta)?.transport(Dealias::None);
    let num = 2.0 * transport.inner_sobolev(theta, 1.5).abs();
    let den = theta.sobolev_norm(1.5).powi(2) * theta.sobolev_norm(2.0);
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// `⟨ξ, −u_θ·∇ξ − u_ξ·∇θ⟩_{H¹} / (‖θ‖_{H²} ‖ξ‖_{H¹} ‖ξ‖_{H^{3/2}})`.
pub fn transport_trace_ratio(theta: &SpectralField, xi: &SpectralField) -> Result<f64> {
    let image = TransportFrame::new(theta)?.linearized(xi, Dealias::None)?;
    let num = xi.inner_h1(&image).abs();
    let den = theta.sobolev_norm(2.0) * xi.sobolev_norm(1.0) * xi.sobolev_norm(1.5);
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Largest `(w − w₀) / ∫‖θ̄‖²_{H^{3/2}}` seen along a trajectory pair.
pub fn log_convexity_requirement(first: &Trajectory, second: &Trajectory) -> Result<f64> {
    let monitor = log_convexity_monitor(first, second, 1.0)?;
    let s = monitor.samples();
    let w0 = s.first().map_or(0.0, |x| x.w);
    Ok(s.iter()
        .filter(|x| x.budget - w0 > 0.0)
        .map(|x| (x.w - w0) / (x.budget - w0))
        .fold(0.0, f64::max))
}

/// Pairs for the log-convexity constant: the forced `cos`/`1.01 cos` family and
/// a perturbed random pair, forced and unforced.
pub fn log_convexity_pairs(opts: &CalibrationOptions) -> Result<Vec<(String, Trajectory, Trajectory)>> {
    let [d1, d2, f1, _] = opts.seeds;
    let grid = TorusGrid::square(opts.n)?;
    let cfg = run_config(1.0, opts.horizon);
    let spec = NormSpec {
        lp: vec![],
        hs: vec![],
        holder_alpha: None,
    };
    let cos = SpectralField::single_mode(grid, [1, 0], 1.0, Phase::Cos)?;
    let steady = Force::new(cos.scale(cfg.kappa))?;
    let base = band_limited(grid, 3, 1.0, d1)?;
    let perturbed = base.axpy(0.01, &band_limited(grid, 3, 1.0, d2)?);
    let forced = Force::new(band_limited(grid, 2, 0.5, f1)?)?;
    let mut out = Vec::new();
    for (label, a, b, f) in [
        ("cos family", cos.clone(), cos.scale(1.01), steady),
        ("random forced", base.clone(), perturbed.clone(), forced),
        ("random unforced", base, perturbed, Force::zero(grid)),
    ] {
        let ta = run(&a, &cfg, &f, &spec, &mut [])?;
        let tb = run(&b, &cfg, &f, &spec, &mut [])?;
        out.push((label.to_string(), ta, tb));
    }
    Ok(out)
}

pub fn calibrate(corpus: &[CorpusEntry], opts: &CalibrationOptions) -> Result<Calibration> {
    if corpus.is_empty() {
        return Err(Error::Precondition("calibration needs a nonempty corpus".into()));
    }
    let mut prov = Vec::new();
    let grid = TorusGrid::square(opts.n)?;
    let fields = corpus_fields(corpus, grid)?;

    let (c0, line) = calibrate_c0(&decay_runs(opts)?)?;
    prov.push(line);
    let eps0 = EPS0;
    prov.push(format!("eps0: fixed at {eps0}"));
    let eps1 = eps0 * c0 / 2.0;
    prov.push("eps1: eps0 * c0 / 2".into());

    let (c2, raw) = calibrate_lower_bound(&fields, &lower_bound_shifts(), opts.lower_bound_points)?;
    prov.push(format!(
        "c2: 2 / min ratio {raw:.4e}, {} fields x 8 shifts, n = {}",
        fields.len(),
        opts.n
    ));
    let line_grid = TorusGrid::line(opts.line_n)?;
    let line_fields = corpus_fields(corpus, line_grid)?;
    let (c2_1d, raw) = calibrate_lower_bound(&line_fields, &line_shifts(), opts.lower_bound_points)?;
    prov.push(format!(
        "c2_1d: 2 / min ratio {raw:.4e}, {} line fields x 8 shifts, n = {}",
        line_fields.len(),
        opts.line_n
    ));

    let partial = Constants {
        c0,
        eps0,
        eps1,
        c2,
        c2_1d,
        c5: 1.0,
        c7: 1.0,
        c8: 1.0,
        c9: 1.0,
        c10: 1.0,
        c11: 1.0,
        log_convexity: 1.0,
    };
    let runs = holder_runs(opts, &partial)?;
    let (c5, raw) = calibrate_c5(&runs)?;
    prov.push(format!(
        "c5: 2 x smallest fitting value {raw:.4e} over {} forced runs",
        runs.len()
    ));

    let mut points = Vec::new();
    for f in &fields {
        points.extend(gradient_points(f, opts.gradient_points)?);
    }
    let c7 = SAFETY * c7_requirement(&points);
    let c8 = SAFETY * c8_requirement(&points);
    prov.push(format!(
        "c7, c8: 2 x max pointwise requirement, {} points, alpha in {GRADIENT_ALPHAS:?}",
        points.len()
    ));

    let mut commutator = 0.0f64;
    let mut transport = 0.0f64;
    for (i, f) in fields.iter().enumerate() {
        commutator = commutator.max(commutator_ratio(f)?);
        transport = transport.max(transport_trace_ratio(f, &fields[(i + 1) % fields.len()])?);
    }
    let c9 = SAFETY * commutator * commutator / 2.0;
    let c10 = SAFETY * transport * transport / 2.0;
    prov.push(format!("c9: 2 x C^2/2, C = {commutator:.4e}"));
    prov.push(format!(
        "c10: 2 x C^2/2, C = {transport:.4e} over consecutive corpus pairs"
    ));

    let c11 = eigenvalue_counting_constant(10_000);
    prov.push("c11: exact, first 10000 lattice eigenvalues".into());

    let mut growth = 0.0f64;
    for (_, a, b) in log_convexity_pairs(opts)? {
        growth = growth.max(log_convexity_requirement(&a, &b)?);
    }
    let log_convexity = SAFETY * growth.max(1e-3);
    prov.push(format!("log_convexity: 2 x max growth ratio {growth:.4e} over 3 pairs"));

    Ok(Calibration {
        constants: Constants {
            c0,
            eps0,
            eps1,
            c2,
            c2_1d,
            c5,
            c7,
            c8,
            c9,
            c10,
            c11,
            log_convexity,
        },
        provenance: prov,
    })
}
