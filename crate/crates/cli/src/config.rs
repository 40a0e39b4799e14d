//! `--config` files: every field is optional and is overridden by the
//! corresponding command-line flag.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must name the subcommand the file is used with.
    pub command: Option<String>,
    pub system: Option<String>,
    pub descriptor: Option<PathBuf>,
    pub norm: Option<String>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub points: Option<usize>,
    /// Net spacing as a fraction of the radius.
    pub delta: Option<f64>,
    /// Occupancy cell size as a fraction of the radius.
    pub epsilon: Option<f64>,
    pub max_points: Option<usize>,
    pub method: Option<String>,
    pub gain: Option<String>,
    pub h: Option<String>,
    pub g_envelope: Option<String>,
    pub table_points: Option<usize>,
    #[serde(rename = "loop")]
    pub loop_name: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t: Option<f64>,
    pub linearize: Option<bool>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path, command: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, command)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Parses config text meant for `command`.
    pub fn parse(text: &str, command: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(CliError::Config(format!("file is for `{c}`, not `{command}`")));
            }
        }
        Ok(cfg)
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_rejects_unknown_fields() {
        let cfg = RunConfig {
            command: Some("certify".into()),
            gain: Some("pow:1:1".into()),
            loop_name: Some("threshold_alpha".into()),
            x0: Some(vec![0.05, 0.05]),
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"loop\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"gian": "pow:1:1"}"#).is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None::<i32>, None, 3), 3);
    }
}
