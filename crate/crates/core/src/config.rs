//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers, plus the shipped presets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::field::Phase;
use crate::solver::{Dealias, FieldSource, Integrator, SolverConfig};
use crate::tangent::TangentOptions;

/// Multiplier mixing the run seed into every random source seed.
pub const SEED_STRIDE: u64 = 1_000_003;

pub const PRESETS: [&str; 5] = [
    "exact-decay",
    "steady-state",
    "holder-corpus",
    "dimension-sweep",
    "burgers-basic",
];

/// A field source as written in a config file.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Zero,
    Mode { k: [i64; 2], amplitude: f64, phase: Phase },
    Random { band: i64, amplitude: f64, seed: u64 },
    File(PathBuf),
}

impl SourceSpec {
    /// The solver-level source with `run_seed` mixed into random seeds.
    pub fn resolve(&self, run_seed: u64) -> FieldSource {
        match self {
            SourceSpec::Zero => FieldSource::Zero,
            SourceSpec::Mode { k, amplitude, phase } => FieldSource::Mode {
                k: *k,
                amplitude: *amplitude,
                phase: *phase,
            },
            SourceSpec::Random { band, amplitude, seed } => FieldSource::RandomBand {
                band: *band,
                amplitude: *amplitude,
                seed: effective_seed(run_seed, *seed),
            },
            SourceSpec::File(p) => FieldSource::File(p.clone()),
        }
    }

    /// Same source with the random seed replaced; other kinds are unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            SourceSpec::Random { band, amplitude, .. } => SourceSpec::Random {
                band: *band,
                amplitude: *amplitude,
                seed,
            },
            other => other.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SourceSpec::Zero => true,
            SourceSpec::Mode { amplitude, .. } | SourceSpec::Random { amplitude, .. } => *amplitude == 0.0,
            SourceSpec::File(_) => false,
        }
    }
}

pub fn effective_seed(run_seed: u64, source_seed: u64) -> u64 {
    run_seed.wrapping_mul(SEED_STRIDE).wrapping_add(source_seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HolderAlpha {
    Off,
    /// The largest exponent the envelope covers.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotMode {
    Final,
    All,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionSettings {
    /// Base run length before the tangent ensemble starts.
    pub relax_time: f64,
    /// Length of the volume/trace run.
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub tangent: TangentOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    /// Empty means the solver `kappa` alone.
    pub kappas: Vec<f64>,
    /// Replace the random force seed; empty keeps the configured one.
    pub force_seeds: Vec<u64>,
    /// Replace the random initial-data seed; empty keeps the configured one.
    pub data_seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n: usize,
    pub solver: SolverConfig,
    pub initial: SourceSpec,
    pub force: SourceSpec,
    pub holder_alpha: HolderAlpha,
    /// Only shifts of at most this length enter the Hölder estimate; 0 means all.
    pub holder_radius: f64,
    pub dimension: DimensionSettings,
    pub sweep: Sweep,
    pub snapshots: SnapshotMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 32,
            solver: SolverConfig::default(),
            initial: SourceSpec::Zero,
            force: SourceSpec::Zero,
            holder_alpha: HolderAlpha::Off,
            holder_radius: 0.0,
            dimension: DimensionSettings {
                relax_time: 2.0,
                horizon: 5.0,
                ensemble: 6,
                seed: 500,
                tangent: TangentOptions::default(),
            },
            sweep: Sweep {
                kappas: vec![],
                force_seeds: vec![],
                data_seeds: vec![],
            },
            snapshots: SnapshotMode::Final,
        }
    }
}

/// One concrete run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub solver: SolverConfig,
    pub initial: FieldSource,
    pub force: FieldSource,
    pub force_is_zero: bool,
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let cos = SourceSpec::Mode {
            k: [1, 0],
            amplitude: 1.0,
            phase: Phase::Cos,
        };
        let base = Self::default();
        let cfg = match name {
            "exact-decay" => Self {
                n: 64,
                solver: SolverConfig {
                    dt: 1e-3,
                    t_end: 1.0,
                    ..SolverConfig::default()
                },
                initial: cos,
                ..base
            },
            "steady-state" => Self {
                solver: SolverConfig {
                    dt: 1e-2,
                    t_end: 10.0,
                    snapshot_interval: 0.5,
                    ..SolverConfig::default()
                },
                initial: cos.clone(),
                force: cos,
                ..base
            },
            "holder-corpus" => Self {
                solver: SolverConfig {
                    dt: 1e-2,
                    t_end: 10.0,
                    ..SolverConfig::default()
                },
                initial: SourceSpec::Random {
                    band: 3,
                    amplitude: 1.0,
                    seed: 1,
                },
                force: SourceSpec::Random {
                    band: 2,
                    amplitude: 0.5,
                    seed: 11,
                },
                holder_alpha: HolderAlpha::Auto,
                sweep: Sweep {
                    kappas: vec![],
                    force_seeds: vec![11, 12, 13],
                    data_seeds: vec![1, 2, 3],
                },
                ..base
            },
            "dimension-sweep" => Self {
                solver: SolverConfig {
                    dt: 1e-2,
                    t_end: 2.0,
                    ..SolverConfig::default()
                },
                initial: SourceSpec::Random {
                    band: 3,
                    amplitude: 1.0,
                    seed: 21,
                },
                force: SourceSpec::Random {
                    band: 2,
                    amplitude: 0.5,
                    seed: 31,
                },
                sweep: Sweep {
                    kappas: vec![1.0, 2.0],
                    force_seeds: vec![],
                    data_seeds: vec![],
                },
                ..base
            },
            "burgers-basic" => Self {
                dim: 1,
                n: 256,
                solver: SolverConfig {
                    dt: 1e-3,
                    t_end: 2.0,
                    ..SolverConfig::default()
                },
                initial: SourceSpec::Mode {
                    k: [1, 0],
                    amplitude: 1.0,
                    phase: Phase::Cos,
                },
                holder_alpha: HolderAlpha::Auto,
                ..base
            },
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
                })
            }
        };
        Ok(cfg)
    }

    /// The runs of the sweep: every `κ × force seed × data seed`.
    pub fn runs(&self) -> Vec<RunSpec> {
        let kappas = if self.sweep.kappas.is_empty() {
            vec![self.solver.kappa]
        } else {
            self.sweep.kappas.clone()
        };
        let forces: Vec<Option<u64>> = if self.sweep.force_seeds.is_empty() {
            vec![None]
        } else {
            self.sweep.force_seeds.iter().copied().map(Some).collect()
        };
        let datas: Vec<Option<u64>> = if self.sweep.data_seeds.is_empty() {
            vec![None]
        } else {
            self.sweep.data_seeds.iter().copied().map(Some).collect()
        };
        let run_seed = self.solver.seed;
        let mut out = Vec::new();
        for &kappa in &kappas {
            for fs in &forces {
                for ds in &datas {
                    let force = fs.map_or(self.force.clone(), |s| self.force.with_seed(s));
                    let initial = ds.map_or(self.initial.clone(), |s| self.initial.with_seed(s));
                    let mut label = format!("kappa={kappa}");
                    if let Some(s) = fs {
                        let _ = write!(label, " force_seed={s}");
                    }
                    if let Some(s) = ds {
                        let _ = write!(label, " data_seed={s}");
                    }
                    out.push(RunSpec {
                        label,
                        solver: SolverConfig {
                            kappa,
                            ..self.solver.clone()
                        },
                        initial: initial.resolve(run_seed),
                        force: force.resolve(run_seed),
                        force_is_zero: force.is_zero(),
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::domain(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        crate::grid::TorusGrid::new(self.dim, self.n)?;
        self.solver.validate()?;
        if let HolderAlpha::Fixed(a) = self.holder_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::domain(format!("holder alpha must lie in (0, 1], got {a}")));
            }
        }
        if self.sweep.kappas.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(Error::domain("sweep kappas must be positive"));
        }
        Ok(())
    }

    /// Canonical text: every key, fixed order. Parsing it gives `self` back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[u64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "[grid]\ndim = {}\nn = {}\n", self.dim, self.n);
        let c = &self.solver;
        let _ = writeln!(
            s,
            "[solver]\nkappa = {:?}\ndt = {:?}\nt_end = {:?}\nintegrator = {}\ndealias = {}\nepsilon = {:?}\nmollifier_width = {:?}\ncfl = {:?}\nsnapshot_interval = {:?}\nseed = {}\n",
            c.kappa,
            c.dt,
            c.t_end,
            match c.integrator {
                Integrator::ImexCn => "imex-cn",
                Integrator::Etdrk2 => "etdrk2",
            },
            match c.dealias {
                Dealias::TwoThirds => "two-thirds",
                Dealias::None => "none",
            },
            c.epsilon,
            c.mollifier_width,
            c.cfl,
            c.snapshot_interval,
            c.seed
        );
        for (name, src) in [("initial", &self.initial), ("force", &self.force)] {
            let _ = writeln!(s, "[{name}]");
            match src {
                SourceSpec::Zero => {
                    let _ = writeln!(s, "kind = zero");
                }
                SourceSpec::Mode { k, amplitude, phase } => {
                    let _ = writeln!(
                        s,
                        "kind = mode\nk1 = {}\nk2 = {}\namplitude = {:?}\nphase = {}",
                        k[0],
                        k[1],
                        amplitude,
                        match phase {
                            Phase::Cos => "cos",
                            Phase::Sin => "sin",
                        }
                    );
                }
                SourceSpec::Random { band, amplitude, seed } => {
                    let _ = writeln!(
                        s,
                        "kind = random\nband = {band}\namplitude = {amplitude:?}\nseed = {seed}"
                    );
                }
                SourceSpec::File(p) => {
                    let _ = writeln!(s, "kind = file\npath = {}", p.display());
                }
            }
            s.push('\n');
        }
        let alpha = match self.holder_alpha {
            HolderAlpha::Off => "off".to_string(),
            HolderAlpha::Auto => "auto".to_string(),
            HolderAlpha::Fixed(a) => format!("{a:?}"),
        };
        let _ = writeln!(
            s,
            "[diagnostics]\nholder_alpha = {alpha}\nholder_radius = {:?}\n",
            self.holder_radius
        );
        let d = &self.dimension;
        let _ = writeln!(
            s,
            "[dimension]\nrelax_time = {:?}\nhorizon = {:?}\nensemble = {}\nseed = {}\nreorth_interval = {}\ncondition_trigger = {:?}\ncollapse_condition = {:?}\n",
            d.relax_time,
            d.horizon,
            d.ensemble,
            d.seed,
            d.tangent.reorth_interval,
            d.tangent.condition_trigger,
            d.tangent.collapse_condition
        );
        let kappas = self
            .sweep
            .kappas
            .iter()
            .map(|k| format!("{k:?}"))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            s,
            "[sweep]\nkappas = {kappas}\nforce_seeds = {}\ndata_seeds = {}\n",
            list(&self.sweep.force_seeds),
            list(&self.sweep.data_seeds)
        );
        let snaps = match self.snapshots {
            SnapshotMode::Final => "final",
            SnapshotMode::All => "all",
            SnapshotMode::None => "none",
        };
        let _ = writeln!(s, "[output]\nsnapshots = {snaps}");
        s
    }

    /// Parse a config; keys left out keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Entries::read(text)?;
        let mut cfg = Self::default();
        cfg.dim = entries.take("grid", "dim", cfg.dim)?;
        cfg.n = entries.take("grid", "n", cfg.n)?;
        let c = &mut cfg.solver;
        c.kappa = entries.take("solver", "kappa", c.kappa)?;
        c.dt = entries.take("solver", "dt", c.dt)?;
        c.t_end = entries.take("solver", "t_end", c.t_end)?;
        c.integrator = entries.take_with("solver", "integrator", c.integrator, |v| match v {
            "imex-cn" => Some(Integrator::ImexCn),
            "etdrk2" => Some(Integrator::Etdrk2),
            _ => None,
        })?;
        c.dealias = entries.take_with("solver", "dealias", c.dealias, |v| match v {
            "two-thirds" => Some(Dealias::TwoThirds),
            "none" => Some(Dealias::None),
            _ => None,
        })?;
        c.epsilon = entries.take("solver", "epsilon", c.epsilon)?;
        c.mollifier_width = entries.take("solver", "mollifier_width", c.mollifier_width)?;
        c.cfl = entries.take("solver", "cfl", c.cfl)?;
        c.snapshot_interval = entries.take("solver", "snapshot_interval", c.snapshot_interval)?;
        c.seed = entries.take("solver", "seed", c.seed)?;
        cfg.initial = entries.source("initial")?;
        cfg.force = entries.source("force")?;
        cfg.holder_alpha = entries.take_with("diagnostics", "holder_alpha", cfg.holder_alpha, |v| match v {
            "off" => Some(HolderAlpha::Off),
            "auto" => Some(HolderAlpha::Auto),
            other => other.parse().ok().map(HolderAlpha::Fixed),
        })?;
        cfg.holder_radius = entries.take("diagnostics", "holder_radius", cfg.holder_radius)?;
        let d = &mut cfg.dimension;
        d.relax_time = entries.take("dimension", "relax_time", d.relax_time)?;
        d.horizon = entries.take("dimension", "horizon", d.horizon)?;
        d.ensemble = entries.take("dimension", "ensemble", d.ensemble)?;
        d.seed = entries.take("dimension", "seed", d.seed)?;
        d.tangent.reorth_interval = entries.take("dimension", "reorth_interval", d.tangent.reorth_interval)?;
        d.tangent.condition_trigger = entries.take("dimension", "condition_trigger", d.tangent.condition_trigger)?;
        d.tangent.collapse_condition = entries.take("dimension", "collapse_condition", d.tangent.collapse_condition)?;
        cfg.sweep.kappas = entries.list("sweep", "kappas")?;
        cfg.sweep.force_seeds = entries.list("sweep", "force_seeds")?;
        cfg.sweep.data_seeds = entries.list("sweep", "data_seeds")?;
        cfg.snapshots = entries.take_with("output", "snapshots", cfg.snapshots, |v| match v {
            "final" => Some(SnapshotMode::Final),
            "all" => Some(SnapshotMode::All),
            "none" => Some(SnapshotMode::None),
            _ => None,
        })?;
        entries.finish()?;
        cfg.validate().map_err(|e| Error::Config {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }
}

const SECTIONS: [&str; 8] = [
    "grid",
    "solver",
    "initial",
    "force",
    "diagnostics",
    "dimension",
    "sweep",
    "output",
];

/// Raw `(section, key) → (line, value)` entries, consumed as they are read.
struct Entries {
    map: BTreeMap<(String, String), (usize, String)>,
}

impl Entries {
    fn read(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("malformed section header `{body}`")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let sec = section
                .clone()
                .ok_or_else(|| err("key outside of any section".to_string()))?;
            let key = key.trim().to_string();
            if map
                .insert((sec.clone(), key.clone()), (line, value.trim().to_string()))
                .is_some()
            {
                return Err(err(format!("duplicate key `{key}` in [{sec}]")));
            }
        }
        Ok(Self { map })
    }

    fn take_raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.map.remove(&(section.to_string(), key.to_string()))
    }

    fn take<T: std::str::FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        match self.take_raw(section, key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| Error::Config {
                line,
                message: format!("[{section}] `{key}`: cannot parse `{v}`"),
            }),
        }
    }

    fn take_with<T>(&mut self, section: &str, key: &str, default: T, f: impl Fn(&str) -> Option<T>) -> Result<T> {
        match self.take_raw(section, key) {
            None => Ok(default),
            Some((line, v)) => f(&v).ok_or_else(|| Error::Config {
                line,
                message: format!("[{section}] `{key}`: unexpected value `{v}`"),
            }),
        }
    }

    fn list<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Vec<T>> {
        match self.take_raw(section, key) {
            None => Ok(vec![]),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| Error::Config {
                        line,
                        message: format!("[{section}] `{key}`: cannot parse list item `{s}`"),
                    })
                })
                .collect(),
        }
    }

    fn source(&mut self, section: &str) -> Result<SourceSpec> {
        let kind = self.take_raw(section, "kind");
        let Some((line, kind)) = kind else {
            return Ok(SourceSpec::Zero);
        };
        Ok(match kind.as_str() {
            "zero" => SourceSpec::Zero,
            "mode" => SourceSpec::Mode {
                k: [self.take(section, "k1", 1)?, self.take(section, "k2", 0)?],
                amplitude: self.take(section, "amplitude", 1.0)?,
                phase: self.take_with(section, "phase", Phase::Cos, |v| match v {
                    "cos" => Some(Phase::Cos),
                    "sin" => Some(Phase::Sin),
                    _ => None,
                })?,
            },
            "random" => SourceSpec::Random {
                band: self.take(section, "band", 3)?,
                amplitude: self.take(section, "amplitude", 1.0)?,
                seed: self.take(section, "seed", 0)?,
            },
            "file" => {
                let (l, p) = self.take_raw(section, "path").ok_or(Error::Config {
                    line,
                    message: format!("[{section}] kind = file needs `path`"),
                })?;
                if p.is_empty() {
                    return Err(Error::Config {
                        line: l,
                        message: "empty path".into(),
                    });
                }
                SourceSpec::File(PathBuf::from(p))
            }
            other => {
                return Err(Error::Config {
                    line,
                    message: format!("[{section}] unknown kind `{other}`"),
                })
            }
        })
    }

    /// Anything not consumed is an unknown key.
    fn finish(self) -> Result<()> {
        match self.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some(((sec, key), (line, _))) => Err(Error::Config {
                line,
                message: format!("unknown key `{key}` in [{sec}]"),
            }),
        }
    }
}
