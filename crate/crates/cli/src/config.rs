//! Run configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! scenario = "stationary"
//! seed = 7
//!
//! [output]
//! dir = "runs/stationary"
//! format = "csv"
//!
//! [params]
//! gamma = 0.2
//! ```
//!
//! `[params]` holds the scenario's parameters; omitted keys take their
//! defaults and unknown keys are rejected.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use oscbath::scenarios::{Scenario, SCENARIOS};

/// Layout of the per-row data files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One CSV file per table.
    #[default]
    Csv,
    /// One JSON object per line, one file per table.
    Jsonl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    #[allow(dead_code)]
    scenario: String,
    seed: Option<u64>,
    #[serde(default)]
    output: OutputConfig,
    #[serde(default)]
    params: P,
}

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
        suggestion: Option<String>,
    },
    Invalid {
        origin: String,
        line: Option<usize>,
        field: String,
        reason: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            ConfigError::Parse {
                origin,
                line,
                column,
                message,
                suggestion,
            } => {
                write!(f, "{origin}:{line}:{column}: {message}")?;
                if let Some(s) = suggestion {
                    write!(f, "\n  help: did you mean `{s}`?")?;
                }
                Ok(())
            }
            ConfigError::Invalid {
                origin,
                line,
                field,
                reason,
            } => {
                write!(f, "{origin}")?;
                if let Some(l) = line {
                    write!(f, ":{l}")?;
                }
                write!(f, ": invalid value for `{field}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text, &path.display().to_string())
}

/// Parses and validates configuration text; `origin` labels error messages.
pub fn parse_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(&e, text, origin, &[]))?;
    let name = match table.get("scenario") {
        Some(toml::Value::String(s)) => s.clone(),
        Some(_) => return Err(located(text, origin, "scenario", "`scenario` must be a string", None)),
        None => {
            return Err(ConfigError::Parse {
                origin: origin.into(),
                line: 1,
                column: 1,
                message: "missing key `scenario`".into(),
                suggestion: None,
            })
        }
    };
    let config = match name.as_str() {
        "short-time-convergence" => typed(text, origin, Scenario::ShortTimeConvergence),
        "rwa-check" => typed(text, origin, Scenario::RwaCheck),
        "mir-pulse-train" => typed(text, origin, Scenario::MirPulseTrain),
        "closure" => typed(text, origin, Scenario::Closure),
        "conservation" => typed(text, origin, Scenario::Conservation),
        "stationary" => typed(text, origin, Scenario::Stationary),
        "reduced-dynamics" => typed(text, origin, Scenario::ReducedDynamics),
        other => {
            let names: Vec<&str> = SCENARIOS.iter().map(|(n, _)| *n).collect();
            return Err(located(
                text,
                origin,
                "scenario",
                &format!("unknown scenario `{other}`"),
                closest(other, names.iter().copied()),
            ));
        }
    }?;
    config.scenario.validate().map_err(|e| match e {
        oscbath::Error::InvalidSpec { field, reason } => ConfigError::Invalid {
            origin: origin.into(),
            line: find_key_line(text, &field),
            field,
            reason,
        },
        other => ConfigError::Invalid {
            origin: origin.into(),
            line: None,
            field: "params".into(),
            reason: other.to_string(),
        },
    })?;
    Ok(config)
}

fn typed<P>(text: &str, origin: &str, wrap: fn(P) -> Scenario) -> Result<RunConfig, ConfigError>
where
    P: DeserializeOwned + Serialize + Default,
{
    let doc: Document<P> = toml::from_str(text).map_err(|e| {
        let mut keys = vec!["scenario".to_string(), "seed".into(), "output".into(), "params".into()];
        keys.extend(["dir".into(), "format".into()]);
        collect_keys(&serde_json::to_value(P::default()).unwrap_or_default(), &mut keys);
        parse_error(&e, text, origin, &keys)
    })?;
    Ok(RunConfig {
        scenario: wrap(doc.params),
        seed: doc.seed,
        output: doc.output,
    })
}

fn collect_keys(v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, v) in m {
                out.push(k.clone());
                collect_keys(v, out);
            }
        }
        serde_json::Value::Array(a) => a.iter().for_each(|v| collect_keys(v, out)),
        _ => {}
    }
}

fn parse_error(e: &toml::de::Error, text: &str, origin: &str, keys: &[String]) -> ConfigError {
    let (line, column) = e.span().map(|s| line_col(text, s)).unwrap_or((1, 1));
    let message = e.message().trim().to_string();
    let suggestion = unknown_field(&message).and_then(|f| closest(f, keys.iter().map(String::as_str)));
    ConfigError::Parse {
        origin: origin.into(),
        line,
        column,
        message,
        suggestion,
    }
}

fn unknown_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("unknown field `")?;
    rest.split('`').next()
}

fn line_col(text: &str, span: Range<usize>) -> (usize, usize) {
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Closest candidate within edit distance 2 (or sharing a long prefix).
fn closest<'a>(word: &str, candidates: impl Iterator<Item = &'a str>) -> Option<String> {
    candidates
        .map(|c| (strsim::levenshtein(word, c), c))
        .filter(|(d, c)| *d <= 2.max(word.len() / 3) && *d < c.len())
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.to_string())
}

/// Line of the first `key = ...` entry for the last path segment of `field`.
fn find_key_line(text: &str, field: &str) -> Option<usize> {
    let leaf = field.rsplit('.').next()?.split('[').next()?;
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(leaf)
            .is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn located(text: &str, origin: &str, key: &str, message: &str, suggestion: Option<String>) -> ConfigError {
    ConfigError::Parse {
        origin: origin.into(),
        line: find_key_line(text, key).unwrap_or(1),
        column: 1,
        message: message.into(),
        suggestion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_str("scenario = \"stationary\"\n", "t").unwrap();
        assert_eq!(c.scenario, Scenario::default_for("stationary").unwrap());
        assert_eq!(c.seed, None);
        assert_eq!(c.output, OutputConfig::default());
    }

    #[test]
    fn params_and_output_are_read() {
        let text = "scenario = \"stationary\"\nseed = 9\n[output]\nformat = \"jsonl\"\n[params]\ngamma = 0.25\n";
        let c = parse_str(text, "t").unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.output.format, Some(Format::Jsonl));
        match c.scenario {
            Scenario::Stationary(p) => assert_eq!(p.gamma, 0.25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_omega0_names_field_and_line() {
        let text = "scenario = \"stationary\"\n[params]\nomega0 = -1.0\n";
        match parse_str(text, "t").unwrap_err() {
            ConfigError::Invalid { field, line, .. } => {
                assert_eq!(field, "omega0");
                assert_eq!(line, Some(3));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn misspelled_key_gets_suggestion() {
        let text = "scenario = \"stationary\"\n[params]\ngamm = 0.1\n";
        let err = parse_str(text, "t").unwrap_err();
        match &err {
            ConfigError::Parse {
                line, suggestion, ..
            } => {
                assert_eq!(*line, 3);
                assert_eq!(suggestion.as_deref(), Some("gamma"));
            }
            other => panic!("{other}"),
        }
        assert!(err.to_string().contains("did you mean `gamma`"));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_str("scenario = \"stationary\"\nseed = = 3\n", "t").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_scenario_is_suggested() {
        let err = parse_str("scenario = \"stationery\"\n", "t").unwrap_err();
        assert!(err.to_string().contains("did you mean `stationary`"), "{err}");
    }

    #[test]
    fn nested_system_parameters_parse() {
        let text = r#"
scenario = "reduced-dynamics"
[params]
points = 11
[params.system]
omega = { kind = "constant", value = 1.0 }
omega0 = 1.0
t_max = 2.0
[params.system.bath]
omegas = [0.8, 1.6]
nu = { kind = "gaussian-pulse", amplitude = 1.0, center = 1.0, width = 0.3 }
temperature = 0.0
couplings = { u = [0.1, 0.0], v = [0.0, 0.1], g = [0.05, 0.0], z = [0.0, 0.02] }
"#;
        let c = parse_str(text, "t").unwrap();
        match c.scenario {
            Scenario::ReducedDynamics(p) => assert_eq!(p.system.bath.omegas, vec![0.8, 1.6]),
            other => panic!("{other:?}"),
        }
    }
}
