//! Command drivers. Each returns its output files in memory, so callers decide
//! where they go and tests can compare bytes directly.

use std::fmt::Write as _;

use crate::config::{ExperimentConfig, HolderAlpha, RunSpec, SnapshotMode};
use crate::constants::Constants;
use crate::corpus::CorpusEntry;
use crate::diagnostics::{
    absorbing_constants, absorption_report, burgers_budget, decay_rows, envelope_csv, exceeds, holder_budget,
    EnvelopeSet, HolderEnvelopeKind, HolderTracker,
};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::holder::ShiftSet;
use crate::norms::NormSpec;
use crate::snapshot::write_snapshot;
use crate::solver::{run, Force, Probe, SolverConfig};
use crate::tangent::{dimension_bound, dimension_report, volume_and_trace_run, DimensionCount, TangentEnsemble};
use crate::verify::{verify_kernels, VerifyOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    fn text(name: impl Into<String>, text: String) -> Self {
        Self {
            name: name.into(),
            bytes: text.into_bytes(),
        }
    }

    pub fn is_csv(&self) -> bool {
        self.name.ends_with(".csv")
    }
}

/// Outputs and verdict of one run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<OutputFile>,
    pub falsifications: usize,
    pub summary: String,
}

/// Outputs and verdict of a whole command.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub files: Vec<OutputFile>,
    pub falsifications: usize,
    /// Human-readable report, also written as `summary.txt`.
    pub report: String,
}

impl Outcome {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }

    /// Concatenate run outcomes in order, adding `summary.txt`.
    pub fn assemble(runs: Vec<RunOutcome>) -> Self {
        let mut files = Vec::new();
        let mut falsifications = 0;
        let mut report = String::new();
        for r in runs {
            files.extend(r.files);
            falsifications += r.falsifications;
            report.push_str(&r.summary);
            report.push('\n');
        }
        let _ = writeln!(report, "total_falsifications = {falsifications}");
        files.push(OutputFile::text("summary.txt", report.clone()));
        Self {
            files,
            falsifications,
            report,
        }
    }
}

/// File-name prefix for run `index` of `count`.
pub fn run_prefix(index: usize, count: usize) -> String {
    if count > 1 {
        format!("run{index:02}_")
    } else {
        String::new()
    }
}

fn run_grid(cfg: &ExperimentConfig) -> Result<TorusGrid> {
    TorusGrid::new(cfg.dim, cfg.n)
}

fn norm_spec() -> NormSpec {
    NormSpec {
        lp: vec![4.0],
        hs: vec![0.5, 1.0, 1.5, 2.0],
        holder_alpha: None,
    }
}

/// One run of `simulate` (planar) or `burgers` (line).
pub fn simulate_run(cfg: &ExperimentConfig, spec: &RunSpec, consts: &Constants, prefix: &str) -> Result<RunOutcome> {
    let grid = run_grid(cfg)?;
    let theta0 = spec.initial.build(grid)?;
    let force = Force::from_source(&spec.force, grid)?;
    let kappa = spec.solver.kappa;
    let planar = grid.dim() == 2;
    let budget = if planar {
        holder_budget(theta0.linf_norm(), force.linf(), kappa, consts)
    } else {
        burgers_budget(theta0.linf_norm(), force.linf(), consts)
    };
    let alpha = match cfg.holder_alpha {
        HolderAlpha::Off => None,
        HolderAlpha::Auto => Some(budget.alpha0),
        HolderAlpha::Fixed(a) => Some(a),
    };
    let mut tracker = match alpha {
        Some(a) => {
            let shifts = if cfg.holder_radius > 0.0 {
                ShiftSet::within(grid, cfg.holder_radius)
            } else {
                ShiftSet::all(grid)
            };
            let kind = if planar {
                HolderEnvelopeKind::Sqg {
                    m_inf: budget.m_inf,
                    kappa,
                    c5: consts.c5,
                }
            } else {
                HolderEnvelopeKind::Burgers {
                    b_inf: budget.m_inf,
                    f_linf: force.linf(),
                    c2_1d: consts.c2_1d,
                }
            };
            Some(HolderTracker::new(a, shifts, kind)?)
        }
        None => None,
    };
    let traj = {
        let mut probes: Vec<&mut dyn Probe> = Vec::new();
        if let Some(t) = tracker.as_mut() {
            probes.push(t);
        }
        run(&theta0, &spec.solver, &force, &norm_spec(), &mut probes)?
    };

    let mut files = Vec::new();
    let mut falsifications = 0;
    let mut summary = String::new();
    let _ = writeln!(summary, "[{}{}]", prefix, spec.label);
    let _ = writeln!(summary, "steps = {}", traj.steps);
    files.push(OutputFile::text(format!("{prefix}norms.csv"), traj.norms_csv()));

    let f = force.field();
    let series = [
        ("l2", traj.norms.iter().map(|r| r.l2).collect::<Vec<_>>(), f.l2_norm()),
        (
            "l4",
            traj.norms.iter().map(|r| r.lp(4.0).unwrap_or(f64::NAN)).collect(),
            f.lp_norm(4.0)?,
        ),
        ("linf", traj.norms.iter().map(|r| r.linf).collect(), f.linf_norm()),
    ];
    for (name, norms, f_norm) in series {
        let rows = decay_rows(&traj.times, &norms, f_norm, kappa, consts.c0);
        let bad = rows.iter().filter(|r| r.violated()).count();
        falsifications += bad;
        let _ = writeln!(summary, "envelope_{name}_violations = {bad}");
        files.push(OutputFile::text(
            format!("{prefix}envelope_{name}.csv"),
            envelope_csv(&rows),
        ));
    }

    if let (Some(tracker), Some(a)) = (tracker.as_ref(), alpha) {
        let events = tracker.events().len();
        falsifications += events;
        let _ = writeln!(summary, "holder_alpha = {a:e}\nholder_alpha0 = {:e}", budget.alpha0);
        let _ = writeln!(summary, "holder_events = {events}");
        if let Some(env) = tracker.ode_envelope() {
            let t_alpha = env.t_alpha();
            let bound = env.long_time_bound();
            let late = tracker
                .samples()
                .iter()
                .filter(|s| s.t >= t_alpha)
                .filter(|s| exceeds(env.value(s.t), bound) || exceeds(s.g.sqrt(), bound))
                .count();
            falsifications += late;
            let _ = writeln!(
                summary,
                "t_alpha = {t_alpha:e}\nlong_time_bound = {bound:e}\nlong_time_violations = {late}"
            );
        }
        files.push(OutputFile::text(format!("{prefix}holder.csv"), tracker.csv()));
    }

    if planar {
        if force.field().is_zero() {
            let _ = writeln!(
                summary,
                "absorption = skipped (unforced: the ball shrinks to the origin)"
            );
        } else {
            let env = EnvelopeSet::new(theta0.linf_norm(), force.linf(), force.h1(), kappa, consts)?;
            summary.push_str(&env.summary());
            let h1: Vec<f64> = traj.norms.iter().map(|r| r.hs(1.0).unwrap_or(f64::NAN)).collect();
            let h32: Vec<f64> = traj
                .norms
                .iter()
                .map(|r| r.hs(1.5).unwrap_or(f64::NAN).powi(2))
                .collect();
            let rep = absorption_report(
                &traj.times,
                &h1,
                &h32,
                env.absorbing.m1f,
                env.absorbing.window_bound(kappa),
            )?;
            let bad = usize::from(rep.entry_time.is_none()) + rep.exits_after_entry + rep.window_violations;
            falsifications += bad;
            let entry = rep.entry_time.map_or("never".to_string(), |t| t.to_string());
            let _ = writeln!(
                summary,
                "absorption_entry_time = {entry}\nabsorption_exits = {}\nwindow_max = {:e}\nwindow_bound = {:e}\nwindow_violations = {}",
                rep.exits_after_entry, rep.max_window_integral, rep.window_bound, rep.window_violations
            );
        }
    }

    match cfg.snapshots {
        SnapshotMode::None => {}
        SnapshotMode::Final => {
            let mut buf = Vec::new();
            let t = *traj.times.last().expect("at least the initial snapshot");
            write_snapshot(&mut buf, traj.last().expect("nonempty"), t)?;
            files.push(OutputFile {
                name: format!("{prefix}final.snap"),
                bytes: buf,
            });
        }
        SnapshotMode::All => {
            for (i, (t, s)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
                let mut buf = Vec::new();
                write_snapshot(&mut buf, s, *t)?;
                files.push(OutputFile {
                    name: format!("{prefix}snap_{i:04}.snap"),
                    bytes: buf,
                });
            }
        }
    }
    let _ = writeln!(summary, "falsifications = {falsifications}");
    Ok(RunOutcome {
        files,
        falsifications,
        summary,
    })
}

fn require_dim(cfg: &ExperimentConfig, dim: usize, command: &str) -> Result<()> {
    if cfg.dim != dim {
        return Err(Error::Config {
            line: 0,
            message: format!("`{command}` needs [grid] dim = {dim}, config has {}", cfg.dim),
        });
    }
    Ok(())
}

/// Serial sweep of `simulate_run`.
pub fn simulate(cfg: &ExperimentConfig, consts: &Constants) -> Result<Outcome> {
    require_dim(cfg, 2, "simulate")?;
    sweep(cfg, consts)
}

/// Same driver on the line.
pub fn burgers(cfg: &ExperimentConfig, consts: &Constants) -> Result<Outcome> {
    require_dim(cfg, 1, "burgers")?;
    sweep(cfg, consts)
}

fn sweep(cfg: &ExperimentConfig, consts: &Constants) -> Result<Outcome> {
    let runs = cfg.runs();
    let outcomes = runs
        .iter()
        .enumerate()
        .map(|(i, r)| simulate_run(cfg, r, consts, &run_prefix(i, runs.len())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::assemble(outcomes))
}

/// Relax, then co-evolve a tangent ensemble of `n_max` (or the configured
/// ensemble size) and compare the empirical count with the bound.
pub fn dimension_run(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    consts: &Constants,
    n_max: Option<usize>,
    prefix: &str,
) -> Result<RunOutcome> {
    require_dim(cfg, 2, "dimension")?;
    let ensemble_size = n_max.unwrap_or(cfg.dimension.ensemble);
    if ensemble_size == 0 {
        return Err(Error::domain("ensemble size must be at least 1"));
    }
    let grid = run_grid(cfg)?;
    let theta0 = spec.initial.build(grid)?;
    let force = Force::from_source(&spec.force, grid)?;
    let relax_cfg = SolverConfig {
        t_end: cfg.dimension.relax_time,
        snapshot_interval: cfg.dimension.relax_time.max(spec.solver.snapshot_interval),
        ..spec.solver.clone()
    };
    let quiet = NormSpec {
        lp: vec![],
        hs: vec![],
        holder_alpha: None,
    };
    let relaxed = if cfg.dimension.relax_time > 0.0 {
        run(&theta0, &relax_cfg, &force, &quiet, &mut [])?
            .last()
            .cloned()
            .expect("nonempty")
    } else {
        theta0
    };
    let ensemble = TangentEnsemble::random(grid, ensemble_size, cfg.dimension.seed, cfg.dimension.tangent)?;
    let run_cfg = SolverConfig {
        t_end: cfg.dimension.horizon,
        ..spec.solver.clone()
    };
    let vt = volume_and_trace_run(&relaxed, ensemble, &run_cfg, &force)?;
    let kappa = spec.solver.kappa;
    let absorbing = absorbing_constants(force.linf(), force.h1(), kappa, consts)?;
    let bound = dimension_bound(kappa, absorbing.m_attractor(), consts.c10, consts.c11)?;

    let mut summary = format!("[{}{}]\n", prefix, spec.label);
    summary.push_str(&dimension_report(&bound, Some(&vt)));
    let mut falsifications = 0;
    if spec.force_is_zero {
        let _ = writeln!(summary, "bound_check = skipped (unforced)");
    } else {
        match bound.negative_at_bound() {
            Some(true) => {}
            Some(false) => falsifications += 1,
            None => {
                let _ = writeln!(
                    summary,
                    "bound_sign = undetermined (count beyond f64 integer precision)"
                );
            }
        }
        let beyond_ensemble =
            vt.empirical_n.is_none() && matches!(bound.count, DimensionCount::Exact(n) if (n as usize) < ensemble_size);
        if vt.empirical_n.is_some_and(|e| !bound.dominates(e)) || beyond_ensemble {
            falsifications += 1;
        }
    }
    let _ = writeln!(summary, "falsifications = {falsifications}");

    let mut volume = String::from("t,log_volume,trace_integral\n");
    for ((t, v), (_, i)) in vt.log_volume.iter().zip(&vt.trace_integral) {
        let _ = writeln!(volume, "{t},{v:e},{i:e}");
    }
    Ok(RunOutcome {
        files: vec![
            OutputFile::text(format!("{prefix}trace.csv"), vt.trace_csv()),
            OutputFile::text(format!("{prefix}volume.csv"), volume),
            OutputFile::text(format!("{prefix}dimension.txt"), summary.clone()),
        ],
        falsifications,
        summary,
    })
}

pub fn dimension(cfg: &ExperimentConfig, consts: &Constants, n_max: Option<usize>) -> Result<Outcome> {
    let runs = cfg.runs();
    let outcomes = runs
        .iter()
        .enumerate()
        .map(|(i, r)| dimension_run(cfg, r, consts, n_max, &run_prefix(i, runs.len())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::assemble(outcomes))
}

pub fn verify(entries: &[CorpusEntry], consts: &Constants, opts: &VerifyOptions) -> Result<Outcome> {
    let rep = verify_kernels(entries, consts, opts)?;
    let falsifications = rep.rows.iter().filter(|r| !r.pass).count();
    let table = rep.table();
    Ok(Outcome {
        files: vec![
            OutputFile::text("kernels.csv", rep.csv()),
            OutputFile::text("summary.txt", table.clone()),
        ],
        falsifications,
        report: table,
    })
}
