//! Suite configuration: a flat TOML file with `[model]`, `[quadrature]` and `[output]`
//! sections, overridable from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncindex::quad::QuadratureSpec;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "NCINDEX_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Fredholm,
    MckeanSinger,
    Doubling,
    Psido,
    Cocycle,
    Zeta,
    IndexTheorem,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Fredholm, Suite::MckeanSinger, Suite::Doubling, Suite::Psido, Suite::Cocycle, Suite::Zeta, Suite::IndexTheorem];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fredholm => "fredholm",
            Suite::MckeanSinger => "mckean-singer",
            Suite::Doubling => "doubling",
            Suite::Psido => "psido",
            Suite::Cocycle => "cocycle",
            Suite::Zeta => "zeta",
            Suite::IndexTheorem => "index-theorem",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite `{s}` (expected one of {})", names(&Suite::ALL))))
    }
}

fn names(suites: &[Suite]) -> String {
    suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Seeded random even triple, possibly with weighted blocks.
    Random,
    /// Single-block random triple built to have a prescribed index.
    Constructed,
    Torus,
    Circle,
}

impl FromStr for ModelKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "constructed" => Ok(Self::Constructed),
            "torus" => Ok(Self::Torus),
            "circle" => Ok(Self::Circle),
            _ => Err(HarnessError::Config(format!("unknown model `{s}` (expected random, constructed, torus or circle)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub id: ModelKind,
    /// Fourier cutoff Λ (torus, circle).
    pub cutoff: usize,
    /// Prescribed index (constructed).
    pub index: i64,
    /// Sector sizes n₊, n₋ (constructed).
    pub plus: usize,
    pub minus: usize,
    /// Dimension bound for sampled random triples.
    pub max_dim: usize,
    /// Constant projection c·1, c ∈ {0, 1} (circle).
    pub projection: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { id: ModelKind::Constructed, cutoff: 16, index: 1, plus: 4, minus: 4, max_dim: 16, projection: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("reports") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: Option<Suite>,
    pub seed: u64,
    /// Number of random instances per check family.
    pub instances: usize,
    /// Overrides every per-check tolerance when set.
    pub tol: Option<f64>,
    pub threads: usize,
    pub model: ModelSpec,
    pub quadrature: QuadratureSpec,
    pub output: OutputSpec,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suite: None,
            seed: 0,
            instances: 10,
            tol: None,
            threads: 1,
            model: ModelSpec::default(),
            quadrature: QuadratureSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HarnessError::Config(format!("tol must be positive, got {t}")));
            }
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if self.instances == 0 {
            return Err(HarnessError::Config("instances must be at least 1".into()));
        }
        self.quadrature.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let m = &self.model;
        if m.cutoff == 0 {
            return Err(HarnessError::Config("model.cutoff must be at least 1".into()));
        }
        if m.max_dim < 4 {
            return Err(HarnessError::Config("model.max_dim must be at least 4".into()));
        }
        if m.plus == 0 || m.minus == 0 {
            return Err(HarnessError::Config("model.plus and model.minus must be positive".into()));
        }
        if m.projection != 0.0 && m.projection != 1.0 {
            return Err(HarnessError::Config("model.projection must be 0 or 1".into()));
        }
        Ok(())
    }

    /// The default configuration as TOML, for `--help`.
    pub fn documented_defaults() -> String {
        let body = toml::to_string(&Self::default()).unwrap_or_default();
        format!(
            "Configuration file (--config) keys and defaults; `suite` may also be set there, \
             `tol` (unset) overrides every per-check tolerance:\n\n{body}"
        )
    }

    /// Per-check tolerance, unless overridden globally.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = SuiteConfig::parse(
            r#"
            suite = "index-theorem"
            seed = 7

            [model]
            id = "torus"
            cutoff = 24

            [quadrature]
            abs_tol = 1e-9
            "#,
        )
        .unwrap();
        assert_eq!(cfg.suite, Some(Suite::IndexTheorem));
        assert_eq!(cfg.model.id, ModelKind::Torus);
        assert_eq!(cfg.model.cutoff, 24);
        assert_eq!(cfg.quadrature.abs_tol, 1e-9);
        assert_eq!(cfg.quadrature.contour_a, 0.25);
        assert_eq!(cfg.threads, 1);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SuiteConfig::parse("tol = -1.0").is_err());
        assert!(SuiteConfig::parse("suite = \"nope\"").is_err());
        assert!(SuiteConfig::parse("[model]\nid = \"sphere\"").is_err());
        assert!(SuiteConfig::parse("bogus = 1").is_err());
        assert!(SuiteConfig::parse("[quadrature]\ncontour_a = 0.7").is_err());
    }

    #[test]
    fn documented_defaults_parse_back() {
        let text = SuiteConfig::documented_defaults();
        let body = text.split_once("\n\n").unwrap().1;
        assert_eq!(SuiteConfig::parse(body).unwrap(), SuiteConfig::default());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
    }
}
