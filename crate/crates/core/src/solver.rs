//! Pseudo-spectral time stepping for forced critical SQG on `T²` and the
//! critical Burgers equation on `T`.
//!
//! The linear part `-κΛ - ε(-Δ)` is diagonal in Fourier space and handled
//! implicitly (Crank–Nicolson) or exactly (exponential integrator); the
//! transport term is explicit and second order (Heun / ETDRK2).

use std::path::PathBuf;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Phase, SpectralField};
use crate::grid::TorusGrid;
use crate::norms::{NormReport, NormSpec};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    /// Crank–Nicolson on the linear part, Heun on the transport term.
    ImexCn,
    /// Second-order exponential time differencing.
    Etdrk2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dealias {
    TwoThirds,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    /// Largest step; the CFL controller may shorten it.
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub dealias: Dealias,
    /// Coefficient of the `-εΔ` regularization.
    pub epsilon: f64,
    /// Width of the Gaussian mollifier applied to the force.
    pub mollifier_width: f64,
    pub seed: u64,
    /// Advective Courant number `dt·‖u‖_∞/Δ` never exceeds this.
    pub cfl: f64,
    pub snapshot_interval: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            integrator: Integrator::ImexCn,
            dealias: Dealias::TwoThirds,
            epsilon: 0.0,
            mollifier_width: 0.0,
            seed: 0,
            cfl: 0.5,
            snapshot_interval: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("dt", self.dt),
            ("snapshot_interval", self.snapshot_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("t_end", self.t_end),
            ("epsilon", self.epsilon),
            ("mollifier_width", self.mollifier_width),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::domain(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        Ok(())
    }
}

/// Where a field (initial data or force) comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Zero,
    Mode {
        k: [i64; 2],
        amplitude: f64,
        phase: Phase,
    },
    RandomBand {
        band: i64,
        amplitude: f64,
        seed: u64,
    },
    /// Binary snapshot written by [`crate::snapshot::write_snapshot`].
    File(PathBuf),
    Sum(Vec<FieldSource>),
}

impl FieldSource {
    /// Build on `grid`; the mean is removed.
    pub fn build(&self, grid: TorusGrid) -> Result<SpectralField> {
        let f = match self {
            FieldSource::Zero => SpectralField::zeros(grid),
            FieldSource::Mode { k, amplitude, phase } => SpectralField::single_mode(grid, *k, *amplitude, *phase)?,
            FieldSource::RandomBand { band, amplitude, seed } => random::band_limited(grid, *band, *amplitude, *seed)?,
            FieldSource::File(path) => {
                let file = std::fs::File::open(path)?;
                let (f, _) = crate::snapshot::read_snapshot(std::io::BufReader::new(file)).map_err(|e| match e {
                    Error::Format { message, .. } => Error::Format {
                        path: path.clone(),
                        message,
                    },
                    other => other,
                })?;
                if f.grid() == grid {
                    f
                } else if f.grid().dim() == grid.dim() {
                    f.resampled(grid.n())?
                } else {
                    return Err(Error::GridMismatch(f.grid().describe(), grid.describe()));
                }
            }
            FieldSource::Sum(parts) => {
                let mut acc = SpectralField::zeros(grid);
                for p in parts {
                    acc = &acc + &p.build(grid)?;
                }
                acc
            }
        };
        Ok(f.without_mean())
    }
}

/// Time-independent force with its cached norms.
#[derive(Clone, Debug, PartialEq)]
pub struct Force {
    field: SpectralField,
    linf: f64,
    h1: f64,
}

impl Force {
    pub fn new(field: SpectralField) -> Result<Self> {
        if !field.is_mean_zero() {
            return Err(Error::Precondition("force must be mean-zero".into()));
        }
        Ok(Self {
            linf: field.linf_norm(),
            h1: field.sobolev_norm(1.0),
            field,
        })
    }

    pub fn zero(grid: TorusGrid) -> Self {
        Self::new(SpectralField::zeros(grid)).expect("zero is mean-zero")
    }

    pub fn from_source(source: &FieldSource, grid: TorusGrid) -> Result<Self> {
        Self::new(source.build(grid)?)
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn linf(&self) -> f64 {
        self.linf
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }
}

/// `J_ε f`: Gaussian multiplier `exp(-width²|k|²/2)`; width 0 is the identity.
pub fn mollify_force(f: &SpectralField, width: f64) -> Result<SpectralField> {
    if !(width >= 0.0) {
        return Err(Error::domain(format!("mollifier width must be >= 0, got {width}")));
    }
    if width == 0.0 {
        return Ok(f.clone());
    }
    let w2 = width * width;
    Ok(f.map_multiplier(|k| (-0.5 * w2 * (k[0] * k[0] + k[1] * k[1]) as f64).exp()))
}

fn finish(grid: TorusGrid, values: &[f64], dealias: Dealias) -> SpectralField {
    let f = SpectralField::from_values_mean_zero(grid, values).expect("values match grid");
    match dealias {
        Dealias::TwoThirds => f.dealiased(),
        Dealias::None => f,
    }
}

/// Collocation values of `u = R^⊥θ` and `∇θ`, reused across products.
#[derive(Clone, Debug)]
pub struct TransportFrame {
    grid: TorusGrid,
    velocity: [Vec<f64>; 2],
    gradient: [Vec<f64>; 2],
}

impl TransportFrame {
    pub fn new(theta: &SpectralField) -> Result<Self> {
        let (u1, u2) = theta.riesz_perp()?;
        let [g1, g2] = theta.gradient();
        Ok(Self {
            grid: theta.grid(),
            velocity: [u1.values(), u2.values()],
            gradient: [g1.values(), g2.values()],
        })
    }

    pub fn max_speed(&self) -> f64 {
        let [u1, u2] = &self.velocity;
        u1.iter()
            .zip(u2)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }

    /// `-u·∇θ`.
    pub fn transport(&self, dealias: Dealias) -> SpectralField {
        let [u1, u2] = &self.velocity;
        let [g1, g2] = &self.gradient;
        let v: Vec<f64> = (0..u1.len()).map(|i| -(u1[i] * g1[i] + u2[i] * g2[i])).collect();
        finish(self.grid, &v, dealias)
    }

    /// `-(R^⊥θ·∇ξ + R^⊥ξ·∇θ)` for the frame's `θ`.
    pub fn linearized(&self, xi: &SpectralField, dealias: Dealias) -> Result<SpectralField> {
        if xi.grid() != self.grid {
            return Err(Error::GridMismatch(self.grid.describe(), xi.grid().describe()));
        }
        let other = TransportFrame::new(xi)?;
        let [u1, u2] = &self.velocity;
        let [g1, g2] = &self.gradient;
        let [v1, v2] = &other.velocity;
        let [h1, h2] = &other.gradient;
        let vals: Vec<f64> = (0..u1.len())
            .map(|i| -(u1[i] * h1[i] + u2[i] * h2[i] + v1[i] * g1[i] + v2[i] * g2[i]))
            .collect();
        Ok(finish(self.grid, &vals, dealias))
    }
}

/// `-u·∇θ` with `u = R^⊥θ`, dealiased and mean-zero.
pub fn nonlinear_term(theta: &SpectralField, dealias: Dealias) -> Result<SpectralField> {
    Ok(TransportFrame::new(theta)?.transport(dealias))
}

/// `-θ∂_xθ = -½∂_x(θ²)` on the line.
pub fn burgers_nonlinear_term(theta: &SpectralField, dealias: Dealias) -> Result<SpectralField> {
    if theta.grid().dim() != 1 {
        return Err(Error::Unsupported("Burgers term needs a 1D field".into()));
    }
    let v: Vec<f64> = theta.values().iter().map(|x| x * x).collect();
    let sq = finish(theta.grid(), &v, Dealias::None);
    let out = sq.map_symbol(|k| Complex64::new(0.0, -0.5 * k[0] as f64));
    Ok(match dealias {
        Dealias::TwoThirds => out.dealiased(),
        Dealias::None => out,
    })
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub state: SpectralField,
    /// Predictor (IMEX) or first stage (ETD); the tangent scheme linearizes about it.
    pub stage: SpectralField,
    pub dt: f64,
}

/// Per-coefficient factors of the linear part for one step size.
#[derive(Clone, Debug)]
struct LinearFactors {
    dt: f64,
    /// IMEX: `(1 + dtL/2)/(1 - dtL/2)`, ETD: `e^{dtL}`.
    propagator: Vec<f64>,
    /// IMEX: `dt/(1 - dtL/2)`, ETD: `dt φ₁(dtL)`.
    first: Vec<f64>,
    /// ETD only: `dt φ₂(dtL)`.
    second: Vec<f64>,
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        z.exp_m1() / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Integrator state for one grid: linear symbol, force and cached factors.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: TorusGrid,
    config: SolverConfig,
    force: SpectralField,
    symbol: Vec<f64>,
    factors: Option<LinearFactors>,
}

impl Stepper {
    pub fn new(grid: TorusGrid, config: &SolverConfig, force: &Force) -> Result<Self> {
        config.validate()?;
        if force.field().grid() != grid {
            return Err(Error::GridMismatch(grid.describe(), force.field().grid().describe()));
        }
        let mut f = mollify_force(force.field(), config.mollifier_width)?;
        if config.dealias == Dealias::TwoThirds {
            f = f.dealiased();
        }
        let symbol = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                -config.kappa * k2.sqrt() - config.epsilon * k2
            })
            .collect();
        Ok(Self {
            grid,
            config: config.clone(),
            force: f,
            symbol,
            factors: None,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// The force as the integrator sees it (mollified, dealiased).
    pub fn force(&self) -> &SpectralField {
        &self.force
    }

    /// `-κΛx + εΔx`, the implicit part.
    pub fn linear_part(&self, x: &SpectralField) -> SpectralField {
        let c: Vec<Complex64> = x.coeffs().iter().zip(&self.symbol).map(|(c, l)| c * l).collect();
        SpectralField::from_raw(self.grid, c)
    }

    fn factors(&mut self, dt: f64) -> &LinearFactors {
        if self.factors.as_ref().map_or(true, |f| f.dt != dt) {
            let len = self.symbol.len();
            let mut propagator = Vec::with_capacity(len);
            let mut first = Vec::with_capacity(len);
            let mut second = Vec::with_capacity(len);
            for &l in &self.symbol {
                match self.config.integrator {
                    Integrator::ImexCn => {
                        let b = 1.0 - 0.5 * dt * l;
                        propagator.push((1.0 + 0.5 * dt * l) / b);
                        first.push(dt / b);
                        second.push(0.0);
                    }
                    Integrator::Etdrk2 => {
                        let z = dt * l;
                        propagator.push(z.exp());
                        first.push(dt * phi1(z));
                        second.push(dt * phi2(z));
                    }
                }
            }
            self.factors = Some(LinearFactors {
                dt,
                propagator,
                first,
                second,
            });
        }
        self.factors.as_ref().expect("just set")
    }

    /// One two-stage step for `x' = Lx + n(x) + forcing`, given `n(x0)` and the
    /// map evaluating `n` at the stage.
    pub(crate) fn advance(
        &mut self,
        dt: f64,
        x0: &SpectralField,
        n0: &SpectralField,
        forced: bool,
        stage_term: impl FnOnce(&SpectralField) -> Result<SpectralField>,
    ) -> Result<(SpectralField, SpectralField)> {
        let grid = self.grid;
        let integrator = self.config.integrator;
        let force = if forced { Some(self.force.clone()) } else { None };
        let fac = self.factors(dt).clone();
        let x = x0.coeffs();
        let n = n0.coeffs();
        let f = force.as_ref().map(|f| f.coeffs());
        let zero = Complex64::new(0.0, 0.0);
        let forcing = |i: usize| f.map_or(zero, |f| f[i]);
        let stage: Vec<Complex64> = (0..x.len())
            .map(|i| fac.propagator[i] * x[i] + fac.first[i] * (n[i] + forcing(i)))
            .collect();
        let stage = SpectralField::from_raw(grid, stage);
        let n1 = stage_term(&stage)?;
        let n1 = n1.coeffs();
        let s = stage.coeffs();
        let next: Vec<Complex64> = match integrator {
            Integrator::ImexCn => (0..x.len())
                .map(|i| fac.propagator[i] * x[i] + fac.first[i] * (0.5 * (n[i] + n1[i]) + forcing(i)))
                .collect(),
            Integrator::Etdrk2 => (0..x.len()).map(|i| s[i] + fac.second[i] * (n1[i] - n[i])).collect(),
        };
        Ok((SpectralField::from_raw(grid, next), stage))
    }

    fn nonlinear(&self, theta: &SpectralField) -> Result<(SpectralField, f64)> {
        if self.grid.dim() == 2 {
            let frame = TransportFrame::new(theta)?;
            Ok((frame.transport(self.config.dealias), frame.max_speed()))
        } else {
            let speed = theta.linf_norm();
            Ok((burgers_nonlinear_term(theta, self.config.dealias)?, speed))
        }
    }

    /// Step size allowed by the CFL controller for a given speed.
    pub fn cfl_limit(&self, speed: f64) -> f64 {
        if speed > 0.0 {
            self.config.cfl * self.grid.spacing() / speed
        } else {
            f64::INFINITY
        }
    }

    /// Advance by `min(dt, CFL limit, max_dt)`. A `max_dt` within `1e-6` relative of
    /// the configured `dt` is taken as is, so runs land on snapshot times exactly.
    pub fn step(&mut self, theta: &SpectralField, max_dt: f64) -> Result<StepResult> {
        if theta.grid() != self.grid {
            return Err(Error::GridMismatch(self.grid.describe(), theta.grid().describe()));
        }
        let (n0, speed) = self.nonlinear(theta)?;
        let limit = self.cfl_limit(speed);
        let base = self.config.dt;
        let dt = if max_dt <= base * (1.0 + 1e-6) && max_dt <= limit {
            max_dt
        } else {
            base.min(limit).min(max_dt)
        };
        self.step_from(theta, &n0, dt)
    }

    /// Advance by exactly `dt`, skipping the CFL controller. Paired runs use it
    /// to share one step sequence.
    pub fn step_fixed(&mut self, theta: &SpectralField, dt: f64) -> Result<StepResult> {
        if theta.grid() != self.grid {
            return Err(Error::GridMismatch(self.grid.describe(), theta.grid().describe()));
        }
        let (n0, _) = self.nonlinear(theta)?;
        self.step_from(theta, &n0, dt)
    }

    fn step_from(&mut self, theta: &SpectralField, n0: &SpectralField, dt: f64) -> Result<StepResult> {
        let dealias = self.config.dealias;
        let dim = self.grid.dim();
        let (state, stage) = self.advance(dt, theta, n0, true, |s| {
            if dim == 2 {
                nonlinear_term(s, dealias)
            } else {
                burgers_nonlinear_term(s, dealias)
            }
        })?;
        Ok(StepResult { state, stage, dt })
    }
}

/// One SQG step of at most the configured `dt`.
pub fn step(theta: &SpectralField, config: &SolverConfig, force: &Force) -> Result<SpectralField> {
    if theta.grid().dim() != 2 {
        return Err(Error::Unsupported("SQG step needs a 2D field".into()));
    }
    let mut s = Stepper::new(theta.grid(), config, force)?;
    let out = s.step(theta, config.dt)?;
    check_finite(&out.state, theta, out.dt)?;
    Ok(out.state)
}

/// One critical-Burgers step of at most the configured `dt`.
pub fn burgers_step(theta: &SpectralField, config: &SolverConfig, force: &Force) -> Result<SpectralField> {
    if theta.grid().dim() != 1 {
        return Err(Error::Unsupported("Burgers step needs a 1D field".into()));
    }
    let mut s = Stepper::new(theta.grid(), config, force)?;
    let out = s.step(theta, config.dt)?;
    check_finite(&out.state, theta, out.dt)?;
    Ok(out.state)
}

fn check_finite(next: &SpectralField, last: &SpectralField, time: f64) -> Result<()> {
    if next.is_finite() {
        Ok(())
    } else {
        Err(Error::Blowup {
            time,
            last_valid: Box::new(last.clone()),
        })
    }
}

/// Callback invoked at every snapshot.
pub trait Probe {
    fn observe(&mut self, t: f64, theta: &SpectralField) -> Result<()>;
}

impl<F: FnMut(f64, &SpectralField) -> Result<()>> Probe for F {
    fn observe(&mut self, t: f64, theta: &SpectralField) -> Result<()> {
        self(t, theta)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub norms: Vec<NormReport>,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> Option<&SpectralField> {
        self.snapshots.last()
    }

    pub fn norms_csv(&self) -> String {
        crate::norms::norms_csv(&self.times, &self.norms)
    }
}

/// Snapshot times `0, Δs, 2Δs, …` up to and including `t_end`.
pub fn snapshot_times(t_end: f64, interval: f64) -> Vec<f64> {
    let count = (t_end / interval * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|i| i as f64 * interval).collect();
    if t_end - times[count] > 1e-9 * interval {
        times.push(t_end);
    }
    times
}

/// Integrate from `theta0` to `config.t_end`, recording norms (and the field)
/// at every snapshot time and calling each probe there.
pub fn run(
    theta0: &SpectralField,
    config: &SolverConfig,
    force: &Force,
    norms: &NormSpec,
    probes: &mut [&mut dyn Probe],
) -> Result<Trajectory> {
    if !theta0.is_mean_zero() {
        return Err(Error::Precondition("initial data must be mean-zero".into()));
    }
    let mut stepper = Stepper::new(theta0.grid(), config, force)?;
    let mut theta = match config.dealias {
        Dealias::TwoThirds => theta0.dealiased(),
        Dealias::None => theta0.clone(),
    };
    let mut traj = Trajectory::default();
    let mut record = |t: f64, theta: &SpectralField, traj: &mut Trajectory| -> Result<()> {
        traj.times.push(t);
        traj.norms.push(NormReport::compute(theta, norms)?);
        traj.snapshots.push(theta.clone());
        for p in probes.iter_mut() {
            p.observe(t, theta)?;
        }
        Ok(())
    };
    let times = snapshot_times(config.t_end, config.snapshot_interval);
    record(0.0, &theta, &mut traj)?;
    let mut t = 0.0;
    for &target in &times[1..] {
        while t < target {
            let remaining = target - t;
            let out = stepper.step(&theta, remaining)?;
            if !out.state.is_finite() {
                return Err(Error::Blowup {
                    time: t,
                    last_valid: Box::new(theta),
                });
            }
            theta = out.state;
            traj.steps += 1;
            t = if out.dt == remaining { target } else { t + out.dt };
        }
        record(target, &theta, &mut traj)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_x1(n: usize) -> SpectralField {
        SpectralField::single_mode(TorusGrid::square(n).unwrap(), [1, 0], 1.0, Phase::Cos).unwrap()
    }

    #[test]
    fn transport_vanishes_on_single_mode() {
        let n = nonlinear_term(&cos_x1(32), Dealias::TwoThirds).unwrap();
        assert!(n.is_zero());
    }

    #[test]
    fn mollifier_on_mode() {
        let f = cos_x1(16);
        let m = mollify_force(&f, 1.0).unwrap();
        assert!((m.coeff([1, 0]).re - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(mollify_force(&f, 0.0).unwrap(), f);
        assert!(mollify_force(&f, -1.0).is_err());
    }

    #[test]
    fn exact_decay() {
        let theta0 = cos_x1(32);
        let g = theta0.grid();
        let cfg = SolverConfig {
            t_end: 1.0,
            snapshot_interval: 0.5,
            ..SolverConfig::default()
        };
        let traj = run(&theta0, &cfg, &Force::zero(g), &NormSpec::default(), &mut []).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(traj.steps, 1000);
        let exact = theta0.scale((-1.0f64).exp());
        let err = (&exact - traj.last().unwrap()).linf_norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn etd_is_exact_on_linear_decay() {
        let theta0 = cos_x1(16);
        let cfg = SolverConfig {
            integrator: Integrator::Etdrk2,
            dt: 0.1,
            ..SolverConfig::default()
        };
        let traj = run(
            &theta0,
            &cfg,
            &Force::zero(theta0.grid()),
            &NormSpec::default(),
            &mut [],
        )
        .unwrap();
        let err = (&theta0.scale((-1.0f64).exp()) - traj.last().unwrap()).linf_norm();
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn snapshot_schedule() {
        assert_eq!(snapshot_times(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(snapshot_times(1.0, 0.4), vec![0.0, 0.4, 0.8, 1.0]);
        assert_eq!(snapshot_times(0.0, 0.1), vec![0.0]);
    }

    #[test]
    fn probes_see_every_snapshot() {
        let theta0 = cos_x1(16);
        let mut seen = Vec::new();
        let mut probe = |t: f64, _: &SpectralField| -> Result<()> {
            seen.push(t);
            Ok(())
        };
        let cfg = SolverConfig {
            t_end: 0.3,
            ..SolverConfig::default()
        };
        run(
            &theta0,
            &cfg,
            &Force::zero(theta0.grid()),
            &NormSpec::default(),
            &mut [&mut probe],
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn burgers_rejects_2d() {
        let f = cos_x1(16);
        assert!(burgers_step(&f, &SolverConfig::default(), &Force::zero(f.grid())).is_err());
        assert!(burgers_nonlinear_term(&f, Dealias::None).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.kappa = 0.0;
        assert!(c.validate().is_err());
        c = SolverConfig::default();
        c.cfl = 2.0;
        assert!(c.validate().is_err());
    }
}
