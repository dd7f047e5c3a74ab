//! Validation corpus: CSV rows `seed,band,norm` (optional `mean`) naming
//! seeded band-limited fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::random::band_limited;

const DEFAULT: &str = include_str!("../data/corpus.csv");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub seed: u64,
    pub band: i64,
    /// Collocation maximum of `|θ|`.
    pub norm: f64,
    /// Added constant; anything but zero fails the mean-zero precondition.
    #[serde(default)]
    pub mean: f64,
}

impl CorpusEntry {
    /// The field on `grid`, including its mean.
    pub fn field(&self, grid: TorusGrid) -> Result<SpectralField> {
        let base = band_limited(grid, self.band, self.norm, self.seed)?;
        if self.mean == 0.0 {
            return Ok(base);
        }
        let values: Vec<f64> = base.values().iter().map(|v| v + self.mean).collect();
        SpectralField::from_values(grid, &values)
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in reader.deserialize::<CorpusEntry>() {
        let entry = row.map_err(|e| Error::Config {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text).map_err(|e| match e {
        Error::Config { line, message } => Error::Format {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        },
        other => other,
    })
}

/// The shipped 20-field corpus.
pub fn default_corpus() -> Vec<CorpusEntry> {
    parse_corpus(DEFAULT).expect("shipped corpus parses")
}

pub fn default_corpus_text() -> &'static str {
    DEFAULT
}

/// Fields for every entry; a nonzero mean is a precondition error naming the row.
pub fn corpus_fields(entries: &[CorpusEntry], grid: TorusGrid) -> Result<Vec<SpectralField>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let f = e.field(grid)?;
            if !f.is_mean_zero() {
                return Err(Error::Precondition(format!(
                    "corpus row {} (seed {}) has mean {}, fields must be mean-zero",
                    i + 1,
                    e.seed,
                    e.mean
                )));
            }
            Ok(f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus() {
        let c = default_corpus();
        assert_eq!(c.len(), 20);
        let fields = corpus_fields(&c, TorusGrid::square(32).unwrap()).unwrap();
        assert!(fields
            .iter()
            .zip(&c)
            .all(|(f, e)| (f.linf_norm() - e.norm).abs() < 1e-12));
    }

    #[test]
    fn mean_column_and_errors() {
        let c = parse_corpus("seed,band,norm,mean\n1,2,1.0,0\n2,2,1.0,0.5\n").unwrap();
        assert_eq!(c[1].mean, 0.5);
        let g = TorusGrid::square(16).unwrap();
        match corpus_fields(&c, g) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("row 2")),
            other => panic!("{other:?}"),
        }
        match parse_corpus("seed,band,norm\n1,2,1\n1,x,1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_corpus("seed,band,norm\n").unwrap().is_empty());
    }
}
