use std::fmt::Write as _;

use crate::error::Result;
use crate::field::{lp_of_values, SpectralField};
use crate::holder::{holder_of_values, ShiftSet};

/// Which norms a [`NormReport`] carries.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSpec {
    pub lp: Vec<f64>,
    pub hs: Vec<f64>,
    pub holder_alpha: Option<f64>,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self {
            lp: vec![4.0],
            hs: vec![0.5, 1.0, 1.5, 2.0],
            holder_alpha: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub linf: f64,
    pub lp: Vec<(f64, f64)>,
    pub hs: Vec<(f64, f64)>,
    pub holder: Option<(f64, f64)>,
}

impl NormReport {
    pub fn compute(field: &SpectralField, spec: &NormSpec) -> Result<Self> {
        let grid = field.grid();
        let values = field.values();
        let lp = spec
            .lp
            .iter()
            .map(|&p| Ok((p, lp_of_values(grid, &values, p)?)))
            .collect::<Result<Vec<_>>>()?;
        let hs = spec.hs.iter().map(|&s| (s, field.sobolev_norm(s))).collect();
        let holder = match spec.holder_alpha {
            Some(alpha) => {
                let est = holder_of_values(grid, &values, alpha, &ShiftSet::all(grid));
                Some((alpha, est.value))
            }
            None => None,
        };
        Ok(Self {
            l2: field.l2_norm(),
            linf: lp_of_values(grid, &values, f64::INFINITY)?,
            lp,
            hs,
            holder,
        })
    }

    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn hs(&self, s: f64) -> Option<f64> {
        self.hs.iter().find(|(q, _)| *q == s).map(|(_, v)| *v)
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("t,l2,linf");
        for (p, _) in &self.lp {
            let _ = write!(h, ",l{p}");
        }
        for (s, _) in &self.hs {
            let _ = write!(h, ",h{s}");
        }
        if let Some((a, _)) = self.holder {
            let _ = write!(h, ",holder{a}");
        }
        h
    }

    pub fn csv_row(&self, t: f64) -> String {
        let mut r = format!("{t},{},{}", self.l2, self.linf);
        for (_, v) in &self.lp {
            let _ = write!(r, ",{v}");
        }
        for (_, v) in &self.hs {
            let _ = write!(r, ",{v}");
        }
        if let Some((_, v)) = self.holder {
            let _ = write!(r, ",{v}");
        }
        r
    }
}

/// CSV for a norm time series; empty input yields an empty string.
pub fn norms_csv(times: &[f64], reports: &[NormReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut out = first.csv_header();
    out.push('\n');
    for (t, r) in times.iter().zip(reports) {
        out.push_str(&r.csv_row(*t));
        out.push('\n');
    }
    out
}
