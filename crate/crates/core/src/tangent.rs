//! Linearized dynamics along SQG trajectories: `H¹` volume elements, traces of
//! the linearization on moving frames, the attractor dimension bound and the
//! differentiability and continuity checks.

use std::fmt::Write as _;

use crate::diagnostics::LogValue;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::numeric::fit_slope;
use crate::random::band_limited;
use crate::solver::{Dealias, Force, SolverConfig, StepResult, Stepper, TransportFrame};

/// `-κΛξ - R^⊥θ·∇ξ - R^⊥ξ·∇θ`, products dealiased.
pub fn linearized_rhs(theta: &SpectralField, xi: &SpectralField, kappa: f64) -> Result<SpectralField> {
    if theta.grid() != xi.grid() {
        return Err(Error::GridMismatch(theta.grid().describe(), xi.grid().describe()));
    }
    let transport = TransportFrame::new(theta)?.linearized(xi, Dealias::TwoThirds)?;
    Ok(transport.axpy(-kappa, &xi.fractional_laplacian(1.0)?))
}

/// Advance tangent fields through one base step. Returns the new fields and
/// the transport part of the linearization at the step's start.
fn advance_tangents(
    stepper: &mut Stepper,
    theta: &SpectralField,
    step: &StepResult,
    xis: &[SpectralField],
) -> Result<(Vec<SpectralField>, Vec<SpectralField>)> {
    let dealias = stepper.config().dealias;
    let start = TransportFrame::new(theta)?;
    let stage = TransportFrame::new(&step.stage)?;
    let mut next = Vec::with_capacity(xis.len());
    let mut transport = Vec::with_capacity(xis.len());
    for xi in xis {
        let n0 = start.linearized(xi, dealias)?;
        let (x1, _) = stepper.advance(step.dt, xi, &n0, false, |s| stage.linearized(s, dealias))?;
        if !x1.is_finite() {
            return Err(Error::Blowup {
                time: f64::NAN,
                last_valid: Box::new(xi.clone()),
            });
        }
        next.push(x1);
        transport.push(n0);
    }
    Ok((next, transport))
}

/// One step of `ξ' = A_θ ξ` for each field, matching the base step from
/// `theta` recorded in `step`. The scheme is the exact derivative of the base
/// scheme, so tangent and nonlinear runs agree to second order in the
/// perturbation.
pub fn tangent_step(
    stepper: &mut Stepper,
    theta: &SpectralField,
    step: &StepResult,
    xis: &[SpectralField],
) -> Result<Vec<SpectralField>> {
    Ok(advance_tangents(stepper, theta, step, xis)?.0)
}

/// Modified Gram–Schmidt in `⟨f, g⟩ = ∫ ∇f·∇g`. Returns the orthonormal frame
/// and `Σ log r_ii`, the log-volume carried by the input.
pub fn h1_gram_schmidt(xis: &[SpectralField]) -> Result<(Vec<SpectralField>, f64)> {
    let mut frame: Vec<SpectralField> = Vec::with_capacity(xis.len());
    let mut log_det = 0.0;
    for (index, xi) in xis.iter().enumerate() {
        let norm = xi.inner_h1(xi).sqrt();
        let mut v = xi.clone();
        for phi in &frame {
            v = v.axpy(-v.inner_h1(phi), phi);
        }
        let r = v.inner_h1(&v).sqrt();
        // collinearity beyond a Gram condition number of 1e12
        if !(r > 1e-6 * norm) {
            return Err(Error::RankDeficient { index });
        }
        log_det += r.ln();
        frame.push(v.scale(1.0 / r));
    }
    Ok((frame, log_det))
}

/// `Σ_j ⟨φ_j, A_θ φ_j⟩_{H¹}` for an `H¹`-orthonormal frame.
pub fn trace_pn_a(theta: &SpectralField, frame: &[SpectralField], kappa: f64) -> Result<f64> {
    let mut sum = 0.0;
    for phi in frame {
        sum += phi.inner_h1(&linearized_rhs(theta, phi, kappa)?);
    }
    Ok(sum)
}

/// Lower-triangular Cholesky factor of a dense symmetric matrix, `None` if not
/// positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Nested traces `tr(G_m⁻¹ M_m)`, `m = 1..n`, of the linearization on the
/// span of the first `m` fields, plus `½ log det G`.
struct FrameState {
    traces: Vec<f64>,
    #[allow(dead_code)] // checked against the Gram determinant in tests
    half_log_det: f64,
}

fn frame_state(xis: &[SpectralField], images: &[SpectralField]) -> Result<FrameState> {
    let n = xis.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| xis[i].inner_h1(&xis[j])).collect())
        .collect();
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| xis[i].inner_h1(&images[j])).collect())
        .collect();
    let l = cholesky(&gram).ok_or(Error::EnsembleCollapse {
        condition: f64::INFINITY,
    })?;
    // Y = L⁻¹ M by forward substitution, then diag(Y L⁻ᵀ) row by row
    let solve = |b: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
        }
        y
    };
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| solve(&(0..n).map(|i| m[i][j]).collect::<Vec<_>>()))
        .collect();
    // Y[i][j] = cols[j][i]; B = Y L⁻ᵀ, B_ii = Σ_j Y[i][j] (L⁻ᵀ)[j][i] = (L⁻¹ Y_row_i)_i
    let mut traces = Vec::with_capacity(n);
    let mut acc = 0.0;
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| cols[j][i]).collect();
        acc += solve(&row)[i];
        traces.push(acc);
    }
    let half_log_det = l.iter().enumerate().map(|(i, row)| row[i].ln()).sum();
    Ok(FrameState { traces, half_log_det })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentOptions {
    /// Steps between re-orthonormalizations.
    pub reorth_interval: usize,
    /// Gram condition estimate that forces an early re-orthonormalization.
    pub condition_trigger: f64,
    /// Condition estimate treated as collapse.
    pub collapse_condition: f64,
}

impl Default for TangentOptions {
    fn default() -> Self {
        Self {
            reorth_interval: 20,
            condition_trigger: 1e6,
            collapse_condition: 1e12,
        }
    }
}

/// Tangent fields plus the log-volume removed by earlier re-orthonormalizations.
#[derive(Clone, Debug)]
pub struct TangentEnsemble {
    xis: Vec<SpectralField>,
    log_volume_offset: f64,
    steps_since_reorth: usize,
    reorthonormalizations: usize,
    options: TangentOptions,
}

impl TangentEnsemble {
    pub fn new(xis: Vec<SpectralField>, options: TangentOptions) -> Result<Self> {
        if xis.is_empty() {
            return Err(Error::domain("tangent ensemble needs at least one field"));
        }
        if options.reorth_interval == 0 {
            return Err(Error::domain("re-orthonormalization interval must be positive"));
        }
        let grid = xis[0].grid();
        if let Some(bad) = xis.iter().find(|x| x.grid() != grid) {
            return Err(Error::GridMismatch(grid.describe(), bad.grid().describe()));
        }
        if xis.iter().any(|x| !x.is_mean_zero()) {
            return Err(Error::Precondition("tangent fields must be mean-zero".into()));
        }
        h1_gram_schmidt(&xis)?;
        Ok(Self {
            xis,
            log_volume_offset: 0.0,
            steps_since_reorth: 0,
            reorthonormalizations: 0,
            options,
        })
    }

    /// `count` seeded random fields of band `min(4, n/3 − 1)`.
    pub fn random(grid: TorusGrid, count: usize, seed: u64, options: TangentOptions) -> Result<Self> {
        let band = 4.min(grid.dealias_cutoff() - 1);
        let xis = (0..count)
            .map(|i| band_limited(grid, band, 1.0, seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(xis, options)
    }

    pub fn len(&self) -> usize {
        self.xis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xis.is_empty()
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.xis
    }

    pub fn reorthonormalizations(&self) -> usize {
        self.reorthonormalizations
    }

    /// `log ‖ξ₁ ∧ … ∧ ξ_n‖_{H¹}` including the factors already divided out.
    pub fn log_volume(&self) -> Result<f64> {
        let (_, log_det) = h1_gram_schmidt(&self.xis)?;
        Ok(self.log_volume_offset + log_det)
    }

    fn reorthonormalize(&mut self) -> Result<()> {
        let (frame, log_det) = h1_gram_schmidt(&self.xis)?;
        self.xis = frame;
        self.log_volume_offset += log_det;
        self.steps_since_reorth = 0;
        self.reorthonormalizations += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    /// `Tr(P_m A_θ)` for `m = 1..n`.
    pub traces: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct VolumeTraceRun {
    pub kappa: f64,
    /// One sample per base step, plus the final time.
    pub samples: Vec<TraceSample>,
    /// `(t, log V_n(t))` at snapshot times.
    pub log_volume: Vec<(f64, f64)>,
    /// `(t, ∫₀ᵗ Tr(P_n A_θ))` at snapshot times, trapezoid rule over steps.
    pub trace_integral: Vec<(f64, f64)>,
    /// Time average of `Tr(P_m A_θ)` over the second half of the run.
    pub averages: Vec<f64>,
    /// Whether the last-quarter average agrees with `averages` to 5%.
    pub converged: Vec<bool>,
    /// Smallest `m` with a negative average.
    pub empirical_n: Option<usize>,
    pub reorthonormalizations: usize,
    pub final_state: SpectralField,
}

impl VolumeTraceRun {
    /// `|log V(T) − log V(0) − ∫₀ᵀ Tr|`.
    pub fn identity_residual(&self) -> f64 {
        let (_, v0) = self.log_volume[0];
        let (_, v1) = *self.log_volume.last().expect("at least one record");
        let (_, integral) = *self.trace_integral.last().expect("at least one record");
        (v1 - v0 - integral).abs()
    }

    /// Rows `t,m,trace_m,running_avg_m` at snapshot times.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("t,m,trace_m,running_avg_m\n");
        let n = self.averages.len();
        let mut integrals = vec![0.0; n];
        let snapshot_times: Vec<f64> = self.log_volume.iter().map(|(t, _)| *t).collect();
        let mut next = 0;
        for (i, sample) in self.samples.iter().enumerate() {
            if i > 0 {
                let prev = &self.samples[i - 1];
                for m in 0..n {
                    integrals[m] += 0.5 * (sample.t - prev.t) * (prev.traces[m] + sample.traces[m]);
                }
            }
            if next < snapshot_times.len() && sample.t == snapshot_times[next] {
                next += 1;
                for m in 0..n {
                    let avg = if sample.t > 0.0 {
                        format!("{:e}", integrals[m] / sample.t)
                    } else {
                        String::new()
                    };
                    let _ = writeln!(s, "{},{},{:e},{}", sample.t, m + 1, sample.traces[m], avg);
                }
            }
        }
        s
    }
}

fn window_average(samples: &[TraceSample], from: f64, m: usize) -> f64 {
    let window: Vec<&TraceSample> = samples.iter().filter(|s| s.t >= from - 1e-12).collect();
    if window.len() < 2 {
        return window.first().map_or(f64::NAN, |s| s.traces[m]);
    }
    let integral: f64 = window
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].traces[m] + w[1].traces[m]))
        .sum();
    integral / (window[window.len() - 1].t - window[0].t)
}

/// Co-evolve the base trajectory from `theta0` and `ensemble` to
/// `config.t_end`, recording traces every step and the log-volume at multiples
/// of `snapshot_interval`.
pub fn volume_and_trace_run(
    theta0: &SpectralField,
    mut ensemble: TangentEnsemble,
    config: &SolverConfig,
    force: &Force,
) -> Result<VolumeTraceRun> {
    if theta0.grid().dim() != 2 {
        return Err(Error::Unsupported("tangent dynamics needs a 2D field".into()));
    }
    if !theta0.is_mean_zero() {
        return Err(Error::Precondition("base state must be mean-zero".into()));
    }
    if ensemble.xis[0].grid() != theta0.grid() {
        return Err(Error::GridMismatch(
            theta0.grid().describe(),
            ensemble.xis[0].grid().describe(),
        ));
    }
    let mut stepper = Stepper::new(theta0.grid(), config, force)?;
    let mut theta = theta0.dealiased();
    let n = ensemble.len();
    let opts = ensemble.options;
    let times = crate::solver::snapshot_times(config.t_end, config.snapshot_interval);
    let mut samples = Vec::new();
    let mut log_volume = Vec::new();
    let mut trace_integral = Vec::new();
    let mut integral = 0.0;
    let mut t = 0.0;
    let mut prev_trace: Option<(f64, f64)> = None;
    let images = |stepper: &Stepper, xis: &[SpectralField], transport: &[SpectralField]| -> Vec<SpectralField> {
        xis.iter()
            .zip(transport)
            .map(|(x, n0)| n0 + &stepper.linear_part(x))
            .collect()
    };
    let mut record_trace = |t: f64, state: &FrameState, samples: &mut Vec<TraceSample>, integral: &mut f64| {
        let tr = state.traces[n - 1];
        if let Some((t_prev, tr_prev)) = prev_trace {
            *integral += 0.5 * (t - t_prev) * (tr_prev + tr);
        }
        prev_trace = Some((t, tr));
        samples.push(TraceSample {
            t,
            traces: state.traces.clone(),
        });
    };
    let mut target_idx = 1;
    log_volume.push((0.0, ensemble.log_volume()?));
    trace_integral.push((0.0, 0.0));
    while target_idx < times.len() {
        let target = times[target_idx];
        let step = stepper.step(&theta, target - t)?;
        let (next, transport) = advance_tangents(&mut stepper, &theta, &step, &ensemble.xis)?;
        let state = frame_state(&ensemble.xis, &images(&stepper, &ensemble.xis, &transport))?;
        record_trace(t, &state, &mut samples, &mut integral);
        if !step.state.is_finite() {
            return Err(Error::Blowup {
                time: t,
                last_valid: Box::new(theta),
            });
        }
        theta = step.state;
        ensemble.xis = next;
        ensemble.steps_since_reorth += 1;
        t = if step.dt == target - t { target } else { t + step.dt };
        let landed = t == target;
        // Cholesky failure counts as infinite condition
        let condition = frame_condition(&ensemble.xis);
        if condition > opts.collapse_condition {
            return Err(Error::EnsembleCollapse { condition });
        }
        if ensemble.steps_since_reorth >= opts.reorth_interval || condition > opts.condition_trigger {
            ensemble.reorthonormalize()?;
        }
        if landed {
            log_volume.push((t, ensemble.log_volume()?));
            target_idx += 1;
            if target_idx == times.len() {
                let transport: Vec<SpectralField> = {
                    let frame = TransportFrame::new(&theta)?;
                    ensemble
                        .xis
                        .iter()
                        .map(|x| frame.linearized(x, config.dealias))
                        .collect::<Result<_>>()?
                };
                let state = frame_state(&ensemble.xis, &images(&stepper, &ensemble.xis, &transport))?;
                record_trace(t, &state, &mut samples, &mut integral);
            }
            trace_integral.push((t, integral));
        }
    }
    if samples.is_empty() {
        let frame = TransportFrame::new(&theta)?;
        let transport: Vec<SpectralField> = ensemble
            .xis
            .iter()
            .map(|x| frame.linearized(x, config.dealias))
            .collect::<Result<_>>()?;
        let state = frame_state(&ensemble.xis, &images(&stepper, &ensemble.xis, &transport))?;
        record_trace(0.0, &state, &mut samples, &mut integral);
    }
    let t_end = samples.last().map_or(0.0, |s| s.t);
    let averages: Vec<f64> = (0..n).map(|m| window_average(&samples, 0.5 * t_end, m)).collect();
    let converged: Vec<bool> = (0..n)
        .map(|m| {
            let quarter = window_average(&samples, 0.75 * t_end, m);
            (quarter - averages[m]).abs() <= 0.05 * averages[m].abs()
        })
        .collect();
    let empirical_n = averages.iter().position(|&a| a < 0.0).map(|i| i + 1);
    Ok(VolumeTraceRun {
        kappa: config.kappa,
        samples,
        log_volume,
        trace_integral,
        averages,
        converged,
        empirical_n,
        reorthonormalizations: ensemble.reorthonormalizations,
        final_state: theta,
    })
}

fn frame_condition(xis: &[SpectralField]) -> f64 {
    let n = xis.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| xis[i].inner_h1(&xis[j])).collect())
        .collect();
    match cholesky(&gram) {
        Some(l) => {
            // pivots relative to each field's own norm measure collinearity only
            let rel: Vec<f64> = (0..n).map(|i| l[i][i] / gram[i][i].sqrt()).collect();
            let lo = rel.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rel.iter().copied().fold(0.0, f64::max);
            (hi / lo).powi(2)
        }
        None => f64::INFINITY,
    }
}

/// Run several initial states with one shared step sequence (chosen by the
/// CFL controller on the first), returning each state at every `times` entry.
pub fn paired_runs(
    initial: &[SpectralField],
    config: &SolverConfig,
    force: &Force,
    times: &[f64],
) -> Result<Vec<Vec<SpectralField>>> {
    let grid = initial
        .first()
        .ok_or_else(|| Error::domain("no initial states"))?
        .grid();
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain("snapshot times must be nonnegative and increasing"));
    }
    let mut lead = Stepper::new(grid, config, force)?;
    let mut follow = Stepper::new(grid, config, force)?;
    let mut states: Vec<SpectralField> = initial.iter().map(|s| s.dealiased()).collect();
    let mut out = vec![Vec::with_capacity(times.len()); states.len()];
    let mut t = 0.0;
    for &target in times {
        while t < target {
            let step = lead.step(&states[0], target - t)?;
            for s in states.iter_mut().skip(1) {
                *s = follow.step_fixed(s, step.dt)?.state;
            }
            states[0] = step.state;
            if states.iter().any(|s| !s.is_finite()) {
                return Err(Error::Blowup {
                    time: t,
                    last_valid: Box::new(states[0].clone()),
                });
            }
            t = if step.dt == target - t { target } else { t + step.dt };
        }
        for (o, s) in out.iter_mut().zip(&states) {
            o.push(s.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrechetPoint {
    pub r: f64,
    /// `‖S(t)(θ₀ + rξ₀) − S(t)θ₀ − r ξ(t)‖_{H¹} / r`.
    pub ratio: f64,
    /// Below the round-off floor; left out of the slope.
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrechetCurve {
    pub t: f64,
    pub points: Vec<FrechetPoint>,
    /// Log-log slope of ratio against `r` over the included points.
    pub slope: Option<f64>,
}

impl FrechetCurve {
    /// Ratio shrinks with `r` at the included scales.
    pub fn decreasing(&self) -> bool {
        let mut inc: Vec<&FrechetPoint> = self.points.iter().filter(|p| !p.excluded).collect();
        inc.sort_by(|a, b| b.r.total_cmp(&a.r));
        inc.windows(2).all(|w| w[1].ratio < w[0].ratio)
    }
}

/// Differentiability residual of the solution map at `times`, one curve per
/// time across the perturbation sizes `scales`.
pub fn frechet_residual(
    theta0: &SpectralField,
    xi0: &SpectralField,
    times: &[f64],
    scales: &[f64],
    config: &SolverConfig,
    force: &Force,
) -> Result<Vec<FrechetCurve>> {
    if theta0.grid() != xi0.grid() {
        return Err(Error::GridMismatch(theta0.grid().describe(), xi0.grid().describe()));
    }
    if scales.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::domain("perturbation sizes must be positive"));
    }
    let grid = theta0.grid();
    let mut stepper = Stepper::new(grid, config, force)?;
    let mut follow = Stepper::new(grid, config, force)?;
    let mut base = theta0.dealiased();
    let mut xi = xi0.dealiased();
    let mut perturbed: Vec<SpectralField> = scales.iter().map(|&r| base.axpy(r, &xi)).collect();
    let mut curves = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        while t < target {
            let step = stepper.step(&base, target - t)?;
            xi = tangent_step(&mut stepper, &base, &step, std::slice::from_ref(&xi))?.remove(0);
            for p in perturbed.iter_mut() {
                *p = follow.step_fixed(p, step.dt)?.state;
            }
            base = step.state;
            t = if step.dt == target - t { target } else { t + step.dt };
        }
        let floor = 1e3 * f64::EPSILON * base.inner_h1(&base).sqrt();
        let points: Vec<FrechetPoint> = scales
            .iter()
            .zip(&perturbed)
            .map(|(&r, p)| {
                let eta = &(p - &base) - &xi.scale(r);
                let norm = eta.inner_h1(&eta).sqrt();
                FrechetPoint {
                    r,
                    ratio: norm / r,
                    excluded: norm <= floor,
                }
            })
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| !p.excluded && p.ratio > 0.0)
            .map(|p| (p.r.ln(), p.ratio.ln()))
            .unzip();
        let slope = (xs.len() >= 2).then(|| fit_slope(&xs, &ys));
        curves.push(FrechetCurve {
            t: target,
            points,
            slope,
        });
    }
    Ok(curves)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContinuityStatus {
    Ok,
    /// The two initial states coincide.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub status: ContinuityStatus,
    pub times: Vec<f64>,
    /// `‖S(t)θ₀ − S(t)θ̃₀‖_{H¹} / ‖θ₀ − θ̃₀‖_{H¹}`.
    pub ratios: Vec<f64>,
    /// Running maximum of the ratios, the fitted growth factor `e(t)`.
    pub envelope: Vec<f64>,
}

pub fn continuity_test(
    theta0: &SpectralField,
    perturbed0: &SpectralField,
    times: &[f64],
    config: &SolverConfig,
    force: &Force,
) -> Result<ContinuityReport> {
    let d0 = theta0 - perturbed0;
    let d0_norm = d0.inner_h1(&d0).sqrt();
    if d0_norm == 0.0 {
        return Ok(ContinuityReport {
            status: ContinuityStatus::Degenerate,
            times: Vec::new(),
            ratios: Vec::new(),
            envelope: Vec::new(),
        });
    }
    let runs = paired_runs(&[theta0.clone(), perturbed0.clone()], config, force, times)?;
    let ratios: Vec<f64> = runs[0]
        .iter()
        .zip(&runs[1])
        .map(|(a, b)| {
            let d = a - b;
            d.inner_h1(&d).sqrt() / d0_norm
        })
        .collect();
    let envelope = ratios
        .iter()
        .scan(0.0f64, |m, &r| {
            *m = m.max(r);
            Some(*m)
        })
        .collect();
    Ok(ContinuityReport {
        status: ContinuityStatus::Ok,
        times: times.to_vec(),
        ratios,
        envelope,
    })
}

/// The first `count` eigenvalues `|k|`, `k ∈ Z² \ {0}`, with multiplicity.
pub fn lattice_eigenvalues(count: usize) -> Vec<f64> {
    let mut radius = ((count as f64 / std::f64::consts::PI).sqrt() as i64 + 2).max(2);
    loop {
        let r2 = radius * radius;
        let mut norms: Vec<i64> = Vec::new();
        for a in -radius..=radius {
            for b in -radius..=radius {
                let n2 = a * a + b * b;
                if n2 > 0 && n2 <= r2 {
                    norms.push(n2);
                }
            }
        }
        if norms.len() >= count {
            norms.sort_unstable();
            return norms[..count].iter().map(|&n2| (n2 as f64).sqrt()).collect();
        }
        radius *= 2;
    }
}

/// Smallest `c` with `λ_j ≥ √j / c` for the first `count` lattice eigenvalues.
pub fn eigenvalue_counting_constant(count: usize) -> f64 {
    lattice_eigenvalues(count)
        .iter()
        .enumerate()
        .map(|(i, &l)| ((i + 1) as f64).sqrt() / l)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DimensionCount {
    Exact(u64),
    /// At or beyond `2⁵²`, where the ceiling is below one ulp.
    Astronomical(LogValue),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionBound {
    pub kappa: f64,
    pub m_attractor: LogValue,
    pub c10: f64,
    pub c11: f64,
    /// `c₁₀c₁₁M_A²/κ²`; the count is the ceiling of its square.
    pub ratio: LogValue,
    pub count: DimensionCount,
}

/// `N = ⌈(c₁₀c₁₁M_A²/κ²)²⌉`.
pub fn dimension_bound(kappa: f64, m_attractor: LogValue, c10: f64, c11: f64) -> Result<DimensionBound> {
    if !(kappa > 0.0 && c10 > 0.0 && c11 > 0.0) {
        return Err(Error::domain("κ, c₁₀ and c₁₁ must be positive"));
    }
    let ratio = m_attractor.powf(2.0).scale(c10 * c11 / (kappa * kappa));
    let square = ratio.powf(2.0);
    let count = if square.ln() < 52.0 * std::f64::consts::LN_2 {
        DimensionCount::Exact(square.value().ceil() as u64)
    } else {
        DimensionCount::Astronomical(square)
    };
    Ok(DimensionBound {
        kappa,
        m_attractor,
        c10,
        c11,
        ratio,
        count,
    })
}

impl DimensionBound {
    /// `−κm^{3/2}/c₁₁ + m c₁₀M_A²/κ`, the trace upper bound for `m` directions.
    /// `+∞` when `M_A²` overflows.
    pub fn curve(&self, m: f64) -> f64 {
        -self.kappa * m.powf(1.5) / self.c11 + m * self.c10 * self.m_attractor.powf(2.0).value() / self.kappa
    }

    /// Whether the trace bound is strictly negative at `N`, i.e. `N` exceeds
    /// the squared ratio rather than equalling it. `None` for an astronomical
    /// count: the ceiling moves the value by less than its rounding error, so
    /// the sign cannot be certified.
    pub fn negative_at_bound(&self) -> Option<bool> {
        match self.count {
            DimensionCount::Exact(n) => Some(n as f64 > self.ratio.powf(2.0).value()),
            DimensionCount::Astronomical(_) => None,
        }
    }

    /// `empirical ≤ N`.
    pub fn dominates(&self, empirical: usize) -> bool {
        match self.count {
            DimensionCount::Exact(n) => empirical as u64 <= n,
            DimensionCount::Astronomical(_) => true,
        }
    }

    pub fn count_display(&self) -> String {
        match self.count {
            DimensionCount::Exact(n) => n.to_string(),
            DimensionCount::Astronomical(v) => v.to_string(),
        }
    }
}

/// Text summary of a dimension run.
pub fn dimension_report(bound: &DimensionBound, run: Option<&VolumeTraceRun>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kappa = {}", bound.kappa);
    let _ = writeln!(s, "m_attractor = {}", bound.m_attractor);
    let _ = writeln!(s, "N = {}", bound.count_display());
    let negative = bound
        .negative_at_bound()
        .map_or("undetermined".to_string(), |b| b.to_string());
    let _ = writeln!(s, "curve_negative_at_N = {negative}");
    if let Some(run) = run {
        let emp = run.empirical_n.map_or("none".to_string(), |n| n.to_string());
        let _ = writeln!(s, "empirical_N = {emp}");
        let _ = writeln!(s, "volume_identity_residual = {:e}", run.identity_residual());
        let _ = writeln!(s, "\nm,average_trace,converged,bound_curve");
        for (m, (avg, ok)) in run.averages.iter().zip(&run.converged).enumerate() {
            let _ = writeln!(s, "{},{:e},{},{:e}", m + 1, avg, ok, bound.curve((m + 1) as f64));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Phase;

    fn unit_h1_mode(g: TorusGrid, k: [i64; 2], phase: Phase) -> SpectralField {
        let f = SpectralField::single_mode(g, k, 1.0, phase).unwrap();
        let norm = f.inner_h1(&f).sqrt();
        f.scale(1.0 / norm)
    }

    fn unit_modes(g: TorusGrid) -> Vec<SpectralField> {
        vec![
            unit_h1_mode(g, [1, 0], Phase::Cos),
            unit_h1_mode(g, [1, 0], Phase::Sin),
            unit_h1_mode(g, [0, 1], Phase::Cos),
            unit_h1_mode(g, [0, 1], Phase::Sin),
        ]
    }

    #[test]
    fn linearization_at_zero_is_dissipation() {
        let g = TorusGrid::square(16).unwrap();
        let xi = band_limited(g, 3, 1.0, 1).unwrap();
        let a = linearized_rhs(&SpectralField::zeros(g), &xi, 2.0).unwrap();
        let expect = xi.fractional_laplacian(1.0).unwrap().scale(-2.0);
        assert!((&a - &expect).l2_norm() < 1e-13);
        let theta = band_limited(g, 3, 1.0, 2).unwrap();
        assert!(linearized_rhs(&theta, &SpectralField::zeros(g), 1.0).unwrap().is_zero());
        let other = SpectralField::zeros(TorusGrid::square(8).unwrap());
        assert!(linearized_rhs(&theta, &other, 1.0).is_err());
    }

    #[test]
    fn gram_schmidt_cases() {
        let g = TorusGrid::square(16).unwrap();
        let (frame, inc) = h1_gram_schmidt(&unit_modes(g)).unwrap();
        assert!(inc.abs() < 1e-14);
        assert_eq!(frame.len(), 4);
        let xi = unit_h1_mode(g, [2, 1], Phase::Cos).scale(3.0);
        let (frame, inc) = h1_gram_schmidt(std::slice::from_ref(&xi)).unwrap();
        assert!((inc - 3f64.ln()).abs() < 1e-14);
        assert!((&frame[0] - &xi.scale(1.0 / 3.0)).l2_norm() < 1e-14);
        let a = band_limited(g, 3, 1.0, 5).unwrap();
        match h1_gram_schmidt(&[a.clone(), a.scale(2.0)]) {
            Err(Error::RankDeficient { index }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_at_zero() {
        let g = TorusGrid::square(16).unwrap();
        let zero = SpectralField::zeros(g);
        let four = unit_modes(g);
        assert!((trace_pn_a(&zero, &four, 1.0).unwrap() + 4.0).abs() < 1e-12);
        assert_eq!(trace_pn_a(&zero, &[], 1.0).unwrap(), 0.0);
        let mut six = four.clone();
        six.push(unit_h1_mode(g, [1, 1], Phase::Cos));
        six.push(unit_h1_mode(g, [1, -1], Phase::Sin));
        let expect = -(4.0 + 2.0 * 2f64.sqrt());
        assert!((trace_pn_a(&zero, &six, 1.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn nested_traces_match_frame_traces() {
        let g = TorusGrid::square(16).unwrap();
        let theta = band_limited(g, 3, 1.0, 9).unwrap();
        let xis: Vec<SpectralField> = (0..3).map(|i| band_limited(g, 3, 1.0, 20 + i).unwrap()).collect();
        let images: Vec<SpectralField> = xis.iter().map(|x| linearized_rhs(&theta, x, 0.7).unwrap()).collect();
        let state = frame_state(&xis, &images).unwrap();
        let (frame, log_det) = h1_gram_schmidt(&xis).unwrap();
        for m in 1..=3 {
            let direct = trace_pn_a(&theta, &frame[..m], 0.7).unwrap();
            assert!(
                (state.traces[m - 1] - direct).abs() < 1e-9 * direct.abs().max(1.0),
                "m = {m}"
            );
        }
        assert!((state.half_log_det - log_det).abs() < 1e-10);
        for i in 0..3 {
            for j in 0..3 {
                let gij = frame[i].inner_h1(&frame[j]);
                assert!((gij - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tangent_heat_decay() {
        let g = TorusGrid::square(16).unwrap();
        let cfg = SolverConfig::default();
        let mut stepper = Stepper::new(g, &cfg, &Force::zero(g)).unwrap();
        let zero = SpectralField::zeros(g);
        let xi0 = SpectralField::single_mode(g, [1, 0], 1.0, Phase::Cos).unwrap();
        let mut xis = vec![xi0.clone(), SpectralField::zeros(g)];
        for _ in 0..1000 {
            let step = stepper.step(&zero, 1.0).unwrap();
            xis = tangent_step(&mut stepper, &zero, &step, &xis).unwrap();
        }
        let err = (&xis[0] - &xi0.scale((-1.0f64).exp())).linf_norm();
        assert!(err < 1e-6, "{err}");
        assert!(xis[1].is_zero());
    }

    #[test]
    fn tangent_is_linear() {
        let g = TorusGrid::square(16).unwrap();
        let cfg = SolverConfig {
            dt: 1e-2,
            ..SolverConfig::default()
        };
        let mut stepper = Stepper::new(g, &cfg, &Force::zero(g)).unwrap();
        let mut theta = band_limited(g, 4, 1.0, 3).unwrap();
        let a = band_limited(g, 4, 1.0, 4).unwrap();
        let b = band_limited(g, 4, 1.0, 5).unwrap();
        let mut xis = vec![a.clone(), a.scale(2.0), b.clone(), &a + &b];
        for _ in 0..50 {
            let step = stepper.step(&theta, 1.0).unwrap();
            xis = tangent_step(&mut stepper, &theta, &step, &xis).unwrap();
            theta = step.state;
        }
        let scale = xis[1].l2_norm();
        assert!((&xis[1] - &xis[0].scale(2.0)).l2_norm() <= 1e-10 * scale);
        assert!((&xis[3] - &(&xis[0] + &xis[2])).l2_norm() <= 1e-10 * scale);
    }

    #[test]
    fn volume_identity_on_unforced_run() {
        let g = TorusGrid::square(16).unwrap();
        let cfg = SolverConfig {
            dt: 2e-3,
            t_end: 1.0,
            snapshot_interval: 0.25,
            ..SolverConfig::default()
        };
        let theta0 = band_limited(g, 3, 1.0, 11).unwrap();
        let ens = TangentEnsemble::random(g, 3, 100, TangentOptions::default()).unwrap();
        let run = volume_and_trace_run(&theta0, ens, &cfg, &Force::zero(g)).unwrap();
        assert_eq!(run.log_volume.len(), 5);
        assert!(run.identity_residual() < 1e-4, "{}", run.identity_residual());
        assert_eq!(run.samples.first().unwrap().t, 0.0);
        assert_eq!(run.samples.last().unwrap().t, 1.0);
        assert!(run.reorthonormalizations >= 5);
        let csv = run.trace_csv();
        assert_eq!(csv.lines().count(), 1 + 5 * 3);
    }

    #[test]
    fn zero_base_traces_are_lattice_sums() {
        let g = TorusGrid::square(16).unwrap();
        let cfg = SolverConfig {
            dt: 1e-2,
            t_end: 0.5,
            snapshot_interval: 0.5,
            ..SolverConfig::default()
        };
        let ens = TangentEnsemble::new(unit_modes(g), TangentOptions::default()).unwrap();
        let run = volume_and_trace_run(&SpectralField::zeros(g), ens, &cfg, &Force::zero(g)).unwrap();
        for s in &run.samples {
            for (m, tr) in s.traces.iter().enumerate() {
                assert!((tr + (m + 1) as f64).abs() < 1e-10);
            }
        }
        assert_eq!(run.empirical_n, Some(1));
        assert!(run.converged.iter().all(|&c| c));
    }

    #[test]
    fn lattice_eigenvalue_listing() {
        let ev = lattice_eigenvalues(12);
        let expect = [
            1.0,
            1.0,
            1.0,
            1.0,
            2f64.sqrt(),
            2f64.sqrt(),
            2f64.sqrt(),
            2f64.sqrt(),
            2.0,
            2.0,
            2.0,
            2.0,
        ];
        assert_eq!(ev, expect);
        let c = eigenvalue_counting_constant(10_000);
        let ev = lattice_eigenvalues(10_000);
        assert!(ev
            .iter()
            .enumerate()
            .all(|(j, l)| *l >= ((j + 1) as f64).sqrt() / c * (1.0 - 1e-15)));
        // attained, so no smaller constant works
        assert!(ev
            .iter()
            .enumerate()
            .any(|(j, l)| (((j + 1) as f64).sqrt() / l - c).abs() < 1e-15));
    }

    #[test]
    fn dimension_bound_cases() {
        // ratio 1 → N = 1
        let b = dimension_bound(2.0, LogValue::new(2.0), 0.5, 2.0).unwrap();
        assert_eq!(b.count, DimensionCount::Exact(1));
        // exactly 1 is the integer boundary: the curve vanishes rather than going negative
        assert_eq!(b.negative_at_bound(), Some(false));
        let b = dimension_bound(1.0, LogValue::new(1.3), 1.0, 1.0).unwrap();
        let b2 = dimension_bound(1.0, LogValue::new(2.6), 1.0, 1.0).unwrap();
        let (DimensionCount::Exact(n1), DimensionCount::Exact(n2)) = (b.count, b2.count) else {
            panic!()
        };
        assert_eq!(n1, 3);
        assert_eq!(n2, 46);
        assert!((b2.ratio.value().powi(2) / b.ratio.value().powi(2) - 16.0).abs() < 1e-12);
        assert!(b.negative_at_bound() == Some(true) && b.curve(n1 as f64) < 0.0);
        let huge = dimension_bound(1.0, LogValue::exp_of(1e3), 1.0, 1.0).unwrap();
        assert!(matches!(huge.count, DimensionCount::Astronomical(_)));
        assert!(huge.dominates(10));
        assert_eq!(huge.negative_at_bound(), None);
        let doubly = dimension_bound(1.0, LogValue::from_lnln(1e3), 1.0, 1.0).unwrap();
        assert!(doubly.count_display().starts_with("exp("));
        assert!(doubly.curve(1.0).is_infinite());
        let zero = dimension_bound(1.0, LogValue::ZERO, 1.0, 1.0).unwrap();
        assert_eq!(zero.count, DimensionCount::Exact(0));
        assert_eq!(zero.negative_at_bound(), Some(false));
    }

    #[test]
    fn frechet_at_zero_base_is_quadratic() {
        let g = TorusGrid::square(16).unwrap();
        let cfg = SolverConfig {
            dt: 1e-2,
            ..SolverConfig::default()
        };
        let xi0 = band_limited(g, 3, 1.0, 6).unwrap();
        let curves = frechet_residual(
            &SpectralField::zeros(g),
            &xi0,
            &[0.5, 1.0],
            &[1e-1, 1e-2, 1e-3, 1e-4],
            &cfg,
            &Force::zero(g),
        )
        .unwrap();
        for c in &curves {
            let s = c.slope.unwrap();
            assert!((s - 1.0).abs() < 0.1, "t = {}: slope {s}", c.t);
            assert!(c.decreasing());
        }
        let none = frechet_residual(&xi0, &SpectralField::zeros(g), &[0.5], &[1e-2], &cfg, &Force::zero(g)).unwrap();
        assert_eq!(none[0].points[0].ratio, 0.0);
    }

    #[test]
    fn continuity_on_exact_family() {
        let g = TorusGrid::square(16).unwrap();
        let a = SpectralField::single_mode(g, [1, 0], 1.0, Phase::Cos).unwrap();
        let cfg = SolverConfig::default();
        let rep = continuity_test(&a, &a.scale(1.001), &[0.0, 0.5, 1.0], &cfg, &Force::zero(g)).unwrap();
        for (t, r) in rep.times.iter().zip(&rep.ratios) {
            assert!((r - (-t).exp()).abs() < 1e-6);
        }
        assert_eq!(rep.envelope, vec![rep.ratios[0]; 3]);
        let same = continuity_test(&a, &a, &[1.0], &cfg, &Force::zero(g)).unwrap();
        assert_eq!(same.status, ContinuityStatus::Degenerate);
    }
}
