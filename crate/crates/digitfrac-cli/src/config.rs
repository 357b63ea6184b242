//! Experiment configuration files: a JSON alternative to command-line flags.
//! Parsing is strict (unknown fields are rejected) and round-trip stable.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in name or JSON path, as accepted by the `--system` flag.
    pub system: String,
    pub command: CommandSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandSpec {
    Validate,
    Dim,
    FourierCoeff {
        xi: String,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    L1sum {
        q_values: String,
        #[serde(default = "default_term_tol")]
        tol_per_term: f64,
    },
    L1bound {
        level: u32,
        grid: f64,
    },
    Count {
        q_values: String,
        delta: String,
    },
    Slab {
        base: u32,
        digits: u32,
        dim: usize,
    },
    Khinchin {
        psi: String,
        #[serde(default)]
        y: Option<String>,
        #[serde(default)]
        n_max: Option<u64>,
        #[serde(default = "default_measure")]
        measure: String,
        #[serde(default)]
        mc_windows: Option<String>,
        #[serde(default = "default_samples")]
        samples: u64,
    },
    Gallagher {
        psi: String,
        #[serde(default)]
        y: Option<String>,
        #[serde(default)]
        n_max: Option<u64>,
        #[serde(default)]
        mc_windows: Option<String>,
        #[serde(default = "default_samples")]
        samples: u64,
    },
    Intrinsic {
        x: String,
        tau: f64,
        q_max: u64,
    },
}

fn default_tol() -> f64 {
    1e-10
}

fn default_term_tol() -> f64 {
    1e-12
}

fn default_samples() -> u64 {
    10_000
}

fn default_measure() -> String {
    "mu".into()
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<ExperimentConfig, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_stable() {
        let cfg = ExperimentConfig {
            system: "cantor".into(),
            command: CommandSpec::L1bound {
                level: 2,
                grid: 1e-4,
            },
            seed: 7,
            threads: Some(2),
            output: Some("out.json".into()),
        };
        let js = cfg.to_json();
        let back = ExperimentConfig::from_json(&js).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.to_json(), js);
    }

    #[test]
    fn unknown_fields_rejected() {
        let js = r#"{"system":"cantor","command":"dim","bogus":1}"#;
        assert!(ExperimentConfig::from_json(js).is_err());
        let js2 = r#"{"system":"cantor","command":{"l1bound":{"level":1,"grid":0.01,"extra":true}}}"#;
        assert!(ExperimentConfig::from_json(js2).is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let js = r#"{"system":"cantor","command":{"count":{"q_values":"10","delta":"0"}}}"#;
        let cfg = ExperimentConfig::from_json(js).unwrap();
        assert_eq!(cfg.seed, 0);
        assert!(cfg.threads.is_none());
    }
}
