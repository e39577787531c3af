//! JSON configuration schema for the command-line surface.
//!
//! Every subcommand has a config struct here; the CLI loads one from a file,
//! overlays any inline flags, echoes the resolved value (the echo is itself a
//! valid config file), and runs. Parsing is strict: unknown fields are
//! rejected, and semantic validation happens before anything executes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::SweepConfig;
use crate::measure::{CovarianceSpec, LinkModel};
use crate::sampling::SignalKind;

fn default_stream() -> u64 {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    pub s: f64,
    #[serde(default = "SignalKind::default_exact")]
    pub signal_kind: SignalKind,
    pub model: LinkModel,
    pub m: usize,
    pub seed: u64,
    #[serde(default = "default_stream")]
    pub stream: u64,
    /// Diagonal covariance entries for correlated rows; empty means identity.
    #[serde(default)]
    pub covariance_diagonal: Vec<f64>,
    pub output: String,
}

impl SignalKind {
    fn default_exact() -> SignalKind {
        SignalKind::ExactSparse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(deny_unknown_fields)]
pub enum ConstraintChoice {
    Sparse { s: f64 },
    Correlated { s: f64, diagonal: Vec<f64> },
    LowRank { r: f64, n1: usize, n2: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub record: String,
    pub constraint: ConstraintChoice,
    /// Where to write the JSON report; stdout when omitted.
    #[serde(default)]
    pub output: Option<String>,
    /// Attach the fixed-signal error bound at this deviation parameter.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Monte Carlo samples for the width entering the bound.
    #[serde(default)]
    pub width_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFileConfig {
    pub sweep: SweepConfig,
    pub output: String,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
#[serde(deny_unknown_fields)]
pub enum WidthSet {
    Ball { n: usize },
    SparseHull { n: usize, s: f64 },
    ExactSparse { n: usize, s: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanWidthConfig {
    pub set: WidthSet,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TessellateConfig {
    pub n: usize,
    pub s: f64,
    pub m: usize,
    pub pairs: usize,
    pub embedding_samples: usize,
    #[serde(default = "TessellateConfig::default_delta")]
    pub delta_target: f64,
    pub seed: u64,
}

impl TessellateConfig {
    fn default_delta() -> f64 {
        0.05
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub model: LinkModel,
    /// When present, also estimate the coefficient empirically at this many
    /// measurements.
    #[serde(default)]
    pub empirical_m: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parse one config value from JSON bytes with strict field checking.
pub fn parse_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Format(format!("config parse: {e}")))
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.m == 0 {
            return Err(Error::Parameter("m must be >= 1".into()));
        }
        if self.n == 0 || self.s < 1.0 || self.s > self.n as f64 {
            return Err(Error::Parameter(format!(
                "need 1 <= s <= n, got s={}, n={}",
                self.s, self.n
            )));
        }
        if !self.covariance_diagonal.is_empty() {
            if self.covariance_diagonal.len() != self.n {
                return Err(Error::Parameter(format!(
                    "covariance diagonal has {} entries, n = {}",
                    self.covariance_diagonal.len(),
                    self.n
                )));
            }
            CovarianceSpec::diagonal(self.covariance_diagonal.clone())?;
        }
        if self.output.is_empty() {
            return Err(Error::Parameter("output path must be nonempty".into()));
        }
        Ok(())
    }
}

impl EstimateConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.constraint {
            ConstraintChoice::Sparse { s } => {
                if *s < 1.0 {
                    return Err(Error::Parameter(format!("need s >= 1, got {s}")));
                }
            }
            ConstraintChoice::Correlated { s, diagonal } => {
                if *s < 1.0 {
                    return Err(Error::Parameter(format!("need s >= 1, got {s}")));
                }
                CovarianceSpec::diagonal(diagonal.clone())?;
            }
            ConstraintChoice::LowRank { r, n1, n2 } => {
                if *r < 1.0 || *n1 == 0 || *n2 == 0 {
                    return Err(Error::Parameter(format!(
                        "need r >= 1 and positive shape, got r={r}, {n1} x {n2}"
                    )));
                }
            }
        }
        if let Some(w) = self.width_samples {
            if w == 0 {
                return Err(Error::Parameter("width_samples must be >= 1".into()));
            }
        }
        Ok(())
    }
}

impl MeanWidthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Parameter("samples must be >= 1".into()));
        }
        let ok = match self.set {
            WidthSet::Ball { n } => n >= 1,
            WidthSet::SparseHull { n, s } => n >= 1 && s >= 1.0 && s <= n as f64,
            WidthSet::ExactSparse { n, s } => n >= 1 && s >= 1 && s <= n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter("invalid set parameters".into()))
        }
    }
}

impl TessellateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.pairs == 0 || self.embedding_samples == 0 {
            return Err(Error::Parameter(
                "n, m, pairs, embedding_samples must all be >= 1".into(),
            ));
        }
        if self.s < 1.0 || self.s > self.n as f64 {
            return Err(Error::Parameter(format!(
                "need 1 <= s <= n, got s={}, n={}",
                self.s, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.delta_target) {
            return Err(Error::Parameter("delta_target must be in [0, 1]".into()));
        }
        Ok(())
    }
}

impl LambdaConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.empirical_m == Some(0) {
            return Err(Error::Parameter("empirical_m must be >= 1".into()));
        }
        Ok(())
    }
}
