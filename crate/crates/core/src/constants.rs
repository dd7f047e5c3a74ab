//! Calibrated universal constants: a versioned `key = value` text file.
//!
//! The shipped file is compiled in; `SQG_CONSTANTS` points at a replacement.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const ENV_VAR: &str = "SQG_CONSTANTS";

const EMBEDDED: &str = include_str!("../data/constants.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    /// Decay rate factor of the `L^p` envelopes.
    pub c0: f64,
    /// Hölder exponent budget factor, `α₀ = min{ε₀κ/M_∞, 1/4}`.
    pub eps0: f64,
    /// Same for the absorbing `C^α` ball, `α_* = min{ε₁κ²/‖f‖_∞, 1/4}`.
    pub eps1: f64,
    /// Nonlinear lower bound on the plane.
    pub c2: f64,
    /// Nonlinear lower bound on the line (critical Burgers).
    pub c2_1d: f64,
    /// Equilibrium factor of the Hölder envelope ODE.
    pub c5: f64,
    /// Gradient lower bound `D[∇θ] ≥ |∇θ|^{(3-α)/(1-α)} / (c₇ [θ]_α^{1/(1-α)})`.
    pub c7: f64,
    /// Velocity-gradient stretching bound in the `H¹` absorbing estimate.
    pub c8: f64,
    /// Commutator bound in the `H^{3/2}` estimate.
    pub c9: f64,
    /// Transport part of the trace bound.
    pub c10: f64,
    /// Eigenvalue counting, `|k|_j ≥ √j / c₁₁`.
    pub c11: f64,
    /// Growth rate of the backward-uniqueness log-convexity budget.
    pub log_convexity: f64,
}

const KEYS: [&str; 12] = [
    "c0",
    "eps0",
    "eps1",
    "c2",
    "c2_1d",
    "c5",
    "c7",
    "c8",
    "c9",
    "c10",
    "c11",
    "log_convexity",
];

impl Constants {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "c0" => &mut self.c0,
            "eps0" => &mut self.eps0,
            "eps1" => &mut self.eps1,
            "c2" => &mut self.c2,
            "c2_1d" => &mut self.c2_1d,
            "c5" => &mut self.c5,
            "c7" => &mut self.c7,
            "c8" => &mut self.c8,
            "c9" => &mut self.c9,
            "c10" => &mut self.c10,
            "c11" => &mut self.c11,
            "log_convexity" => &mut self.log_convexity,
            _ => return None,
        })
    }

    fn get(&self, key: &str) -> f64 {
        let mut copy = self.clone();
        *copy.slot(key).expect("known key")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self {
            c0: f64::NAN,
            eps0: f64::NAN,
            eps1: f64::NAN,
            c2: f64::NAN,
            c2_1d: f64::NAN,
            c5: f64::NAN,
            c7: f64::NAN,
            c8: f64::NAN,
            c9: f64::NAN,
            c10: f64::NAN,
            c11: f64::NAN,
            log_convexity: f64::NAN,
        };
        let mut version = None;
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "version" {
                let v: u32 = value.parse().map_err(|_| err(format!("bad version `{value}`")))?;
                if v != FORMAT_VERSION {
                    return Err(err(format!("unsupported constants version {v}")));
                }
                version = Some(v);
                continue;
            }
            let v: f64 = value
                .parse()
                .map_err(|_| err(format!("`{key}`: not a number: `{value}`")))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(err(format!("`{key}` must be positive and finite, got {v}")));
            }
            if seen.contains(&key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            *out.slot(key).ok_or_else(|| err(format!("unknown key `{key}`")))? = v;
            seen.push(key.to_string());
        }
        if version.is_none() {
            return Err(Error::Config {
                line: 0,
                message: "missing `version`".into(),
            });
        }
        if let Some(missing) = KEYS.iter().find(|k| !seen.iter().any(|s| s == *k)) {
            return Err(Error::Config {
                line: 0,
                message: format!("missing key `{missing}`"),
            });
        }
        Ok(out)
    }

    /// The compiled-in calibration.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED).expect("shipped constants file parses")
    }

    pub fn embedded_text() -> &'static str {
        EMBEDDED
    }

    /// `SQG_CONSTANTS` if set, else the compiled-in file. Returns the text too,
    /// so callers can hash exactly what was used.
    pub fn load() -> Result<(Self, String)> {
        match std::env::var_os(ENV_VAR) {
            Some(path) => Self::load_file(Path::new(&path)),
            None => Ok((Self::embedded(), EMBEDDED.to_string())),
        }
    }

    pub fn load_file(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        let c = Self::parse(&text).map_err(|e| match e {
            Error::Config { line, message } => Error::Format {
                path: path.to_path_buf(),
                message: format!("line {line}: {message}"),
            },
            other => other,
        })?;
        Ok((c, text))
    }

    /// File text; `header` lines become comments.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            let _ = writeln!(s, "# {h}");
        }
        let _ = writeln!(s, "version = {FORMAT_VERSION}");
        for key in KEYS {
            let _ = writeln!(s, "{key} = {:e}", self.get(key));
        }
        s
    }
}

/// Hex SHA-256 of a text.
pub fn text_hash(text: &str) -> String {
    bytes_hash(text.as_bytes())
}

pub fn bytes_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_round_trips() {
        let c = Constants::embedded();
        let text = c.to_text(&["test".into()]);
        assert_eq!(Constants::parse(&text).unwrap(), c);
    }

    #[test]
    fn errors_carry_lines() {
        let base = Constants::embedded().to_text(&[]);
        let bad = base.replace("c5 =", "c5 = x #");
        match Constants::parse(&bad) {
            Err(Error::Config { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{base}c99 = 1\n");
        assert!(matches!(Constants::parse(&unknown), Err(Error::Config { .. })));
        let missing: String = base
            .lines()
            .filter(|l| !l.starts_with("c9 "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(Constants::parse(&missing).is_err());
        assert!(Constants::parse(&base.replace("version = 1", "version = 2")).is_err());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            text_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
