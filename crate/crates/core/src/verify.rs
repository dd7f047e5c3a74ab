//! Kernel verification suites over a field corpus: the pointwise identity,
//! the `L^p` Poincaré bound and the nonlinear lower bound.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::constants::Constants;
use crate::corpus::{corpus_fields, CorpusEntry};
use crate::error::Result;
use crate::field::{Phase, SpectralField};
use crate::grid::TorusGrid;
use crate::kernels::{lp_poincare_check, nonlinear_lower_bound_check, IdentityCheck, QuadratureSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Grid side for corpus fields.
    pub n: usize,
    pub identity_alphas: Vec<f64>,
    /// Points per field and exponent in the identity suite.
    pub identity_points: usize,
    pub poincare_ps: Vec<u32>,
    /// Largest-increment points per field and shift in the lower-bound suite.
    pub lower_bound_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n: 32,
            identity_alphas: vec![0.5, 1.0, 1.5],
            identity_points: 4,
            poincare_ps: vec![4, 8],
            lower_bound_points: 2,
        }
    }
}

/// Identity residual tolerance, relative to `‖φ‖²_∞`.
pub const IDENTITY_TOLERANCE: f64 = 1e-2;
/// The lower bound must hold (min ratio ≥ 1) without being vacuous (≤ this).
pub const LOWER_BOUND_CEILING: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub case: String,
    pub value: f64,
    pub criterion: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelReport {
    pub rows: Vec<SuiteRow>,
    pub warnings: Vec<String>,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, suite: &str, case: &str) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.suite == suite && r.case == case)
    }

    /// Aligned text table, one line per row.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<10} {:<22} {:>12}  {:<24} {}\n",
            "suite", "case", "value", "criterion", "result"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:<22} {:>12.4e}  {:<24} {}",
                r.suite,
                r.case,
                r.value,
                r.criterion,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("suite,case,value,criterion,pass\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:e},{},{}", r.suite, r.case, r.value, r.criterion, r.pass);
        }
        s
    }
}

/// Deterministic, spread-out sample of `count` flat grid indices.
pub fn sample_points(grid: TorusGrid, count: usize, salt: u64) -> Vec<usize> {
    let len = grid.len();
    (0..count)
        .map(|j| {
            let base = j * len / count.max(1);
            (base + (salt as usize).wrapping_mul(37) + 13 * j) % len
        })
        .collect()
}

/// The eight shifts of the lower-bound suite: direction `jπ/4`, length cycling
/// through `π/16, π/8, π/4, π/2`.
pub fn lower_bound_shifts() -> Vec<[f64; 2]> {
    let radii = [PI / 16.0, PI / 8.0, PI / 4.0, PI / 2.0];
    (0..8)
        .map(|j| {
            let angle = j as f64 * PI / 4.0;
            let r = radii[j % 4];
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}

/// Mean identity residual over sample points, divided by `‖φ‖²_∞`.
pub fn identity_relative_residual(field: &SpectralField, alpha: f64, points: &[usize]) -> Result<f64> {
    let scale = field.linf_norm().powi(2);
    if scale == 0.0 || points.is_empty() {
        return Ok(0.0);
    }
    let grid = field.grid();
    let check = IdentityCheck::new(field, alpha, QuadratureSpec::for_grid(grid))?;
    let mut sum = 0.0;
    for &i in points {
        sum += check.residual(grid.point(i))?;
    }
    Ok(sum / points.len() as f64 / scale)
}

/// Smallest lower-bound ratio at `c₂ = 1` over fields and shifts; `None` when
/// every increment vanished.
pub fn lower_bound_min_ratio(fields: &[SpectralField], shifts: &[[f64; 2]], points: usize) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for f in fields {
        let spec = QuadratureSpec::for_grid(f.grid());
        for &h in shifts {
            let rep = nonlinear_lower_bound_check(f, h, 1.0, spec, points)?;
            if let Some(m) = rep.min_ratio() {
                best = Some(best.map_or(m, |b: f64| b.min(m)));
            }
        }
    }
    Ok(best)
}

pub fn verify_kernels(entries: &[CorpusEntry], consts: &Constants, opts: &VerifyOptions) -> Result<KernelReport> {
    let grid = TorusGrid::square(opts.n)?;
    let fields = corpus_fields(entries, grid)?;
    let mut report = KernelReport::default();
    if fields.is_empty() {
        report.warnings.push("empty corpus: suites pass vacuously".into());
    }

    let cos = SpectralField::single_mode(grid, [1, 0], 1.0, Phase::Cos)?;
    let check = IdentityCheck::new(&cos, 1.0, QuadratureSpec::for_grid(grid))?;
    let d = check.density().evaluate(grid.point(sample_points(grid, 1, 5)[0]))?;
    report.rows.push(SuiteRow {
        suite: "identity",
        case: "D1[cos x1]".into(),
        value: d,
        criterion: "|D - 1| <= 1e-3".into(),
        pass: (d - 1.0).abs() <= 1e-3,
    });

    for &alpha in &opts.identity_alphas {
        let mut worst = 0.0f64;
        for (i, f) in fields.iter().enumerate() {
            let pts = sample_points(grid, opts.identity_points, entries[i].seed);
            worst = worst.max(identity_relative_residual(f, alpha, &pts)?);
        }
        report.rows.push(SuiteRow {
            suite: "identity",
            case: format!("corpus alpha={alpha}"),
            value: worst,
            criterion: format!("mean/|phi|^2 <= {IDENTITY_TOLERANCE:e}"),
            pass: worst <= IDENTITY_TOLERANCE,
        });
    }

    for &p in &opts.poincare_ps {
        let mut violations = 0usize;
        let mut min_slack = f64::INFINITY;
        for f in &fields {
            let rep = lp_poincare_check(f, p, 1.0)?;
            if !rep.holds() {
                violations += 1;
            }
            min_slack = min_slack.min(rep.slack());
        }
        report.rows.push(SuiteRow {
            suite: "poincare",
            case: format!("p={p} alpha=1"),
            value: if fields.is_empty() { 0.0 } else { min_slack },
            criterion: "min slack >= 0".into(),
            pass: violations == 0,
        });
    }

    let raw = lower_bound_min_ratio(&fields, &lower_bound_shifts(), opts.lower_bound_points)?;
    let ratio = raw.map(|r| r * consts.c2);
    report.rows.push(SuiteRow {
        suite: "lower-bnd",
        case: format!("corpus x 8 shifts c2={:.3e}", consts.c2),
        value: ratio.unwrap_or(f64::NAN),
        criterion: format!("1 <= min ratio <= {LOWER_BOUND_CEILING}"),
        pass: ratio.map_or(true, |r| (1.0..=LOWER_BOUND_CEILING).contains(&r)),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn shifts_cover_eight_directions() {
        let s = lower_bound_shifts();
        assert_eq!(s.len(), 8);
        let len = |h: [f64; 2]| (h[0] * h[0] + h[1] * h[1]).sqrt();
        assert!((len(s[0]) - PI / 16.0).abs() < 1e-15);
        assert!((len(s[7]) - PI / 2.0).abs() < 1e-15);
        assert!(s[2][0].abs() < 1e-15 && s[2][1] > 0.0);
    }

    #[test]
    fn sample_points_are_in_range_and_deterministic() {
        let g = TorusGrid::square(16).unwrap();
        let a = sample_points(g, 4, 9);
        assert_eq!(a, sample_points(g, 4, 9));
        assert!(a.iter().all(|&i| i < g.len()));
    }

    #[test]
    fn empty_corpus_passes_with_warning() {
        let opts = VerifyOptions {
            identity_alphas: vec![],
            ..VerifyOptions::default()
        };
        let rep = verify_kernels(&[], &Constants::embedded(), &opts).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.table().contains("vacuous"));
    }

    #[test]
    fn nonzero_mean_is_a_precondition_error() {
        let e = CorpusEntry {
            seed: 1,
            band: 2,
            norm: 1.0,
            mean: 0.25,
        };
        assert!(matches!(
            verify_kernels(&[e], &Constants::embedded(), &VerifyOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn small_corpus_identity_and_poincare() {
        let entries = [CorpusEntry {
            seed: 3,
            band: 2,
            norm: 1.0,
            mean: 0.0,
        }];
        let opts = VerifyOptions {
            identity_alphas: vec![1.0],
            identity_points: 2,
            lower_bound_points: 1,
            ..VerifyOptions::default()
        };
        let rep = verify_kernels(&entries, &Constants::embedded(), &opts).unwrap();
        assert!(rep.row("identity", "D1[cos x1]").unwrap().pass);
        assert!(rep.row("identity", "corpus alpha=1").unwrap().pass);
        assert!(rep.rows.iter().filter(|r| r.suite == "poincare").all(|r| r.pass));
        assert_eq!(rep.csv().lines().count(), rep.rows.len() + 1);
    }
}
