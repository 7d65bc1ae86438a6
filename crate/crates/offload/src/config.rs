//! JSON configuration for experiments and benchmarks.

use std::path::{Path, PathBuf};

use offload_core::ga::GaParams;
use offload_core::milp::Budget;
use offload_core::ObjectiveWeights;
use serde::{Deserialize, Serialize};

use crate::harness::{Algorithm, Scenario, WorkloadParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

/// Every field is optional; the defaults describe the desk-scale scenario
/// (20 users × 5 tasks, 2 CPUs, λ = 0.5, 10 runs, all four algorithms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub users: Vec<u32>,
    pub tasks_per_user: Vec<u32>,
    pub m_cpus: u32,
    pub lambda: f64,
    pub runs: u32,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub workload: WorkloadParams,
    pub ga: GaParams,
    pub milp_budget: Budget,
    pub confidence_level: f64,
    /// Falls back to `OFFLOAD_OUT_DIR`, then `results`.
    pub output_dir: Option<PathBuf>,
    /// 0 quiet, 1 progress, 2 per-run detail (stderr).
    pub verbosity: u8,
}

impl Default for CliConfig {
    fn default() -> Self {
        let s = Scenario::default();
        CliConfig {
            users: s.users,
            tasks_per_user: s.tasks_per_user,
            m_cpus: s.m_cpus,
            lambda: s.weights.lambda(),
            runs: s.n_runs,
            base_seed: s.base_seed,
            algorithms: s.algorithms,
            workload: s.workload,
            ga: s.ga_params,
            milp_budget: s.milp_budget,
            confidence_level: s.confidence_level,
            output_dir: None,
            verbosity: 0,
        }
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse { path: path.into(), source },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: CliConfig =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse { path: "<config>".into(), source })?;
        config.scenario()?;
        Ok(config)
    }

    /// The validated scenario this configuration describes.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let weights = ObjectiveWeights::new(self.lambda).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let scenario = Scenario {
            users: self.users.clone(),
            tasks_per_user: self.tasks_per_user.clone(),
            workload: self.workload.clone(),
            m_cpus: self.m_cpus,
            weights,
            algorithms: self.algorithms.clone(),
            n_runs: self.runs,
            base_seed: self.base_seed,
            ga_params: self.ga.clone(),
            milp_budget: self.milp_budget,
            confidence_level: self.confidence_level,
        };
        scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(scenario)
    }

    pub fn output_dir(&self, env: Option<PathBuf>) -> PathBuf {
        self.output_dir.clone().or(env).unwrap_or_else(|| PathBuf::from("results"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(CliConfig::from_json("{}").unwrap(), CliConfig::default());
        let s = CliConfig::default().scenario().unwrap();
        assert_eq!((s.users.as_slice(), s.tasks_per_user.as_slice(), s.m_cpus, s.n_runs), (&[20][..], &[5][..], 2, 10));
        assert_eq!(s.weights.lambda(), 0.5);
        assert_eq!(s.algorithms, Algorithm::ALL);
        assert_eq!((s.ga_params.population, s.ga_params.generations, s.ga_params.tournament_size), (100, 100, 3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(CliConfig::from_json(r#"{"lamda": 0.3}"#), Err(ConfigError::Parse { .. })));
        assert!(CliConfig::from_json(r#"{"ga": {"populaton": 5}}"#).is_err());
        assert!(CliConfig::from_json(r#"{"workload": {"rate": 1}}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for doc in [
            r#"{"lambda": 1.5}"#,
            r#"{"runs": 0}"#,
            r#"{"m_cpus": 0}"#,
            r#"{"users": []}"#,
            r#"{"algorithms": []}"#,
            r#"{"ga": {"population": 1}}"#,
            r#"{"workload": {"arrival_rate_per_ms": 0}}"#,
        ] {
            assert!(matches!(CliConfig::from_json(doc), Err(ConfigError::Invalid(_))), "{doc}");
        }
    }

    #[test]
    fn overrides_parse() {
        let c = CliConfig::from_json(
            r#"{"users": [10, 100], "algorithms": ["fcfs", "milp"], "milp_budget": {"nodes": 5000}, "output_dir": "out"}"#,
        )
        .unwrap();
        assert_eq!(c.users, [10, 100]);
        assert_eq!(c.milp_budget, Budget::Nodes(5000));
        assert_eq!(c.output_dir(Some("env".into())), PathBuf::from("out"));
        assert_eq!(CliConfig::default().output_dir(Some("env".into())), PathBuf::from("env"));
    }
}
