//! Scenario files: one JSON document with a block per pipeline stage.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wvalab::estimate::{Estimator, NoiseSpec};
use wvalab::schemes::SchemeSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

/// Correlated detector noise. `n`, `p_f`, `weak_value` and `tau_sweep` are
/// only read by the `noise` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    pub a: f64,
    pub c: f64,
    pub dt: f64,
    pub tau_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_f: Option<f64>,
    /// Defaults to the trade-off value `1/√p_f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_sweep: Option<Vec<f64>>,
}

impl NoiseBlock {
    pub fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            a: self.a,
            c: self.c,
            dt: self.dt,
            tau_c: self.tau_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub nu: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    /// Also write the first trial's raw samples.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dump_samples: bool,
}

fn default_estimator() -> Estimator {
    Estimator::Amr
}

/// Weak-to-strong shift curves `⟨Q⟩_f/(γ0 t)` against the selection angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftBlock {
    pub gammas: Vec<f64>,
    /// Explicit angles; otherwise `theta_points` evenly spaced in `(0, π)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
}

/// Information budget against the pre-selection angle with optimal post-selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetBlock {
    #[serde(default = "default_g_over_2sigma")]
    pub g_over_2sigma: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    /// Success probabilities for the real/imaginary FI-versus-`p_f` comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_f_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

fn default_theta_points() -> usize {
    90
}

fn default_g_over_2sigma() -> f64 {
    0.1
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes `seed` into every seed field the scenario has.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(e) = &mut self.experiment {
            e.seed = seed;
        }
        if let Some(SchemeSpec::JointWm(s)) = &mut self.scheme {
            s.seed = seed;
        }
    }

    /// Seed recorded with the outputs: the experiment seed, else the scheme's, else 0.
    pub fn seed(&self) -> u64 {
        if let Some(e) = &self.experiment {
            return e.seed;
        }
        match &self.scheme {
            Some(SchemeSpec::JointWm(s)) => s.seed,
            _ => 0,
        }
    }

    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config always serializes")
    }

    pub fn require_scheme(&self) -> Result<&SchemeSpec, CliError> {
        self.scheme.as_ref().ok_or(CliError::MissingBlock("scheme"))
    }
}
