//! TOML run configuration: sections [lattice], [model], [run], [output].
//! Unknown keys are rejected.

use crate::engine::{InitialState, RunParams};
use crate::lattice::{InteractionKind, LatticeKind, LatticeSpec, ModelSpec};
use crate::rational::fnv1a64;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeSection {
    kind: String,
    l: usize,
    l2: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    interaction: String,
    #[serde(default = "one")]
    t: f64,
    v: f64,
    mu: Option<f64>,
    filling: String,
    #[serde(default = "default_beta")]
    beta: f64,
    dipolar_cutoff: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Ground-state proxy temperature; beta t = 18 unless overridden.
fn default_beta() -> f64 {
    18.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    seed: u64,
    #[serde(default = "one_u32")]
    replicas: u32,
    thermalization_sweeps: usize,
    target_samples: usize,
    #[serde(default = "two_usize")]
    measure_interval: usize,
    worm_fugacity: Option<f64>,
    #[serde(default)]
    tune_mu: bool,
    pilot_sweeps: Option<usize>,
    initial: Option<String>,
    stall_limit_sweeps: Option<usize>,
}

fn one_u32() -> u32 {
    1
}

fn two_usize() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: String,
    #[serde(default = "yes")]
    write_samples: bool,
    report_threshold: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lattice: LatticeSection,
    model: ModelSection,
    run: RunSection,
    output: OutputSection,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: RunParams,
    pub replicas: u32,
    pub tune_mu: bool,
    pub pilot_sweeps: usize,
    pub out_dir: String,
    pub write_samples: bool,
    pub report_threshold: f64,
    /// Verbatim source text, embedded in the manifest.
    pub text: String,
    pub hash: u64,
}

fn parse_filling(s: &str) -> Result<(u32, u32), ConfigError> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 2 {
        return Err(ConfigError::Invalid(format!(
            "filling must look like \"1/2\", got {s:?}"
        )));
    }
    let num = parts[0]
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("bad filling numerator in {s:?}")))?;
    let den = parts[1]
        .trim()
        .parse()
        .map_err(|_| ConfigError::Invalid(format!("bad filling denominator in {s:?}")))?;
    Ok((num, den))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let kind = match raw.lattice.kind.as_str() {
        "square" => LatticeKind::Square,
        "kagome" => LatticeKind::Kagome,
        "chain" => LatticeKind::Chain,
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown lattice kind {other:?} (square | kagome | chain)"
            )))
        }
    };
    let lattice = LatticeSpec {
        kind,
        l: raw.lattice.l,
        l2: raw.lattice.l2,
    };
    let interaction = match raw.model.interaction.as_str() {
        "nn" => InteractionKind::NearestNeighbor,
        "dipolar" => InteractionKind::Dipolar,
        "hexagon" => InteractionKind::Hexagon,
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown interaction {other:?} (nn | dipolar | hexagon)"
            )))
        }
    };
    let filling = parse_filling(&raw.model.filling)?;
    if raw.model.mu.is_none() && !raw.run.tune_mu {
        return Err(ConfigError::Invalid(
            "model.mu missing and run.tune_mu not set".into(),
        ));
    }
    let model = ModelSpec::new(
        raw.model.t,
        raw.model.v,
        raw.model.mu.unwrap_or(0.0),
        filling,
        raw.model.beta,
    )
    .map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let mut params = RunParams::new(model, lattice, interaction);
    if let Some(c) = raw.model.dipolar_cutoff {
        params.dipolar_cutoff = c;
    }
    params.thermalization_sweeps = raw.run.thermalization_sweeps;
    params.target_samples = raw.run.target_samples;
    params.measure_interval = raw.run.measure_interval;
    params.seed = raw.run.seed;
    if let Some(f) = raw.run.worm_fugacity {
        if f <= 0.0 {
            return Err(ConfigError::Invalid("worm_fugacity must be > 0".into()));
        }
        params.worm_fugacity = f;
    }
    if let Some(s) = raw.run.stall_limit_sweeps {
        params.stall_limit_sweeps = s;
    }
    params.initial = match raw.run.initial.as_deref() {
        None | Some("greedy") => InitialState::Greedy,
        Some("spaced") => InitialState::Spaced,
        Some("checkerboard") => InitialState::Checkerboard,
        Some(other) => {
            return Err(ConfigError::Invalid(format!(
                "unknown initial state {other:?} (greedy | spaced | checkerboard)"
            )))
        }
    };
    if raw.run.replicas == 0 {
        return Err(ConfigError::Invalid("replicas must be >= 1".into()));
    }
    Ok(RunConfig {
        params,
        replicas: raw.run.replicas,
        tune_mu: raw.run.tune_mu,
        pilot_sweeps: raw.run.pilot_sweeps.unwrap_or(4_000),
        out_dir: raw.output.dir,
        write_samples: raw.output.write_samples,
        report_threshold: raw.output.report_threshold.unwrap_or(0.01),
        text: text.to_string(),
        hash: fnv1a64(text.as_bytes()),
    })
}

pub fn load_config(path: &str) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[lattice]
kind = "square"
l = 4

[model]
interaction = "nn"
v = 20.0
mu = 40.0
filling = "1/2"

[run]
seed = 1
thermalization_sweeps = 100
target_samples = 200

[output]
dir = "out/test"
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = parse_config(GOOD).unwrap();
        assert_eq!(cfg.params.model.beta, 18.0);
        assert_eq!(cfg.params.model.filling, (1, 2));
        assert_eq!(cfg.replicas, 1);
        assert_eq!(cfg.report_threshold, 0.01);
        assert!(cfg.write_samples);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let bad = GOOD.replace("v = 20.0", "v = 20.0\ntt = 3.0");
        let err = parse_config(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tt"), "error should name the key: {msg}");
    }

    #[test]
    fn mu_required_unless_tuned() {
        let no_mu = GOOD.replace("mu = 40.0\n", "");
        assert!(parse_config(&no_mu).is_err());
        let tuned = no_mu.replace("seed = 1", "seed = 1\ntune_mu = true");
        assert!(parse_config(&tuned).is_ok());
    }

    #[test]
    fn bad_filling_rejected() {
        let bad = GOOD.replace("\"1/2\"", "\"0.5\"");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn hash_tracks_text() {
        let a = parse_config(GOOD).unwrap();
        let b = parse_config(&GOOD.replace("seed = 1", "seed = 2")).unwrap();
        assert_ne!(a.hash, b.hash);
    }
}
