//! Experiment configuration files.
//!
//! A config is a single JSON object. Every key is checked; a misspelled key is
//! an error, not a silently ignored default.
//!
//! ```json
//! {
//!   "preset": "bistable",
//!   "params": { "C1": 2.5, "m1": 0.5 },
//!   "loan_rate": { "term": "within_one_year", "principal": 100 },
//!   "integrator": { "step_size": 0.01, "t_max": 500 },
//!   "initial_states": { "grid": { "min": 0.1, "max": 0.9, "steps": 2 } },
//!   "sweep": { "m1": { "min": 0, "max": 2, "steps": 5 } },
//!   "basins": { "samples": 1000, "seed": 7, "sweep_samples": 0 },
//!   "outputs": { "dir": "out", "csv": true, "json": true, "svg": true }
//! }
//! ```
//!
//! `params` may be given in full, or on top of a named `preset`. Without a
//! preset every parameter except `m1..m3` (default 0) is required.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use scfgame_core::dynamics::{random_initial_states, IntegratorConfig};
use scfgame_core::model::{ModelParams, ValidationErrors, PARAM_NAMES};
use scfgame_core::{presets, StrategyState};

use crate::rates::{apply_rate_preset, apply_repayment_rate_preset, RatePreset};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}`{}", location(*.line))]
    UnknownKey { key: String, line: Option<usize> },
    #[error("missing parameter `{0}` (no preset given)")]
    MissingParam(&'static str),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    ValidationFailed(#[from] ValidationErrors),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn location(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if self.steps == 0 {
            return Err(ConfigError::Invalid(format!("grid `{name}` has steps = 0")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(ConfigError::Invalid(format!(
                "grid `{name}` needs finite min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Evenly spaced values from `min` to `max`; a single step yields `min`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == self.steps - 1 {
                    self.max
                } else {
                    self.min + span * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStates {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratedStates {
    /// The same axis levels on x, y and z.
    Grid(GridAxis),
    Random(RandomStates),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStates {
    Explicit(Vec<[f64; 3]>),
    Generated(GeneratedStates),
}

impl Default for InitialStates {
    fn default() -> Self {
        InitialStates::Explicit(Vec::new())
    }
}

impl InitialStates {
    /// Expands the specification; `seed_override` replaces a random seed.
    pub fn resolve(&self, seed_override: Option<u64>) -> Vec<StrategyState> {
        match self {
            InitialStates::Explicit(points) => points
                .iter()
                .map(|p| StrategyState {
                    x: p[0],
                    y: p[1],
                    z: p[2],
                })
                .collect(),
            InitialStates::Generated(GeneratedStates::Grid(axis)) => {
                let levels = axis.values();
                let mut out = Vec::with_capacity(levels.len().pow(3));
                for &x in &levels {
                    for &y in &levels {
                        for &z in &levels {
                            out.push(StrategyState { x, y, z });
                        }
                    }
                }
                out
            }
            InitialStates::Generated(GeneratedStates::Random(r)) => {
                random_initial_states(r.n, seed_override.unwrap_or(r.seed))
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match self {
            InitialStates::Explicit(points) => {
                for p in points {
                    StrategyState::from_array(*p)
                        .map_err(|e| ConfigError::Invalid(format!("initial state: {e}")))?;
                }
                Ok(())
            }
            InitialStates::Generated(GeneratedStates::Grid(axis)) => {
                axis.validate("initial_states.grid")?;
                if axis.min < 0.0 || axis.max > 1.0 {
                    return Err(ConfigError::Invalid(
                        "initial_states.grid must lie inside [0, 1]".into(),
                    ));
                }
                Ok(())
            }
            InitialStates::Generated(GeneratedStates::Random(_)) => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinSettings {
    pub samples: usize,
    pub seed: u64,
    /// Samples per sweep cell for the E8 basin-share column; 0 disables it.
    pub sweep_samples: usize,
}

impl Default for BasinSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            sweep_samples: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: true,
            json: true,
            svg: true,
        }
    }
}

/// Sweep axes in canonical parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<(&'static str, GridAxis)>,
}

impl SweepGrid {
    /// Cartesian product in lexicographic order (first axis slowest).
    pub fn cells(&self, base: &ModelParams) -> Vec<ModelParams> {
        let mut out = vec![*base];
        for (name, axis) in &self.axes {
            let values = axis.values();
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p;
                        q.set(name, v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub initial_states: InitialStates,
    pub sweep: Option<SweepGrid>,
    pub basins: BasinSettings,
    pub outputs: OutputSpec,
}

/// On-disk form.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loan_rate: Option<RatePreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repayment_rate: Option<RatePreset>,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    initial_states: InitialStates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<BTreeMap<String, GridAxis>>,
    #[serde(default)]
    basins: BasinSettings,
    #[serde(default)]
    outputs: OutputSpec,
}

fn classify_json_error(err: serde_json::Error) -> ConfigError {
    let message = err.to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        return ConfigError::UnknownKey {
            key,
            line: Some(err.line()),
        };
    }
    ConfigError::ParseError {
        line: err.line(),
        column: err.column(),
        message,
    }
}

fn resolve_params(raw: &RawConfig) -> Result<ModelParams, ConfigError> {
    let given = raw.params.clone().unwrap_or_default();
    for key in given.keys() {
        if !PARAM_NAMES.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: format!("params.{key}"),
                line: None,
            });
        }
    }

    let mut params = match &raw.preset {
        Some(name) => {
            presets::by_name(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?
        }
        None => {
            let mut p = presets::bistable();
            for name in PARAM_NAMES {
                if !given.contains_key(name) {
                    if name.starts_with('m') {
                        p.set(name, 0.0);
                    } else {
                        return Err(ConfigError::MissingParam(name));
                    }
                }
            }
            p
        }
    };
    for (key, value) in &given {
        params.set(key, *value);
    }
    if let Some(rate) = raw.loan_rate {
        let rate = rate
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        params = apply_rate_preset(rate, params);
    }
    if let Some(rate) = raw.repayment_rate {
        let rate = rate
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        params = apply_repayment_rate_preset(rate, params);
    }
    Ok(params.validate()?)
}

fn resolve_sweep(
    raw: &Option<BTreeMap<String, GridAxis>>,
    base: &ModelParams,
) -> Result<Option<SweepGrid>, ConfigError> {
    let Some(map) = raw else { return Ok(None) };
    for key in map.keys() {
        if !PARAM_NAMES.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: format!("sweep.{key}"),
                line: None,
            });
        }
    }
    let axes: Vec<(&'static str, GridAxis)> = PARAM_NAMES
        .iter()
        .filter_map(|name| map.get(*name).map(|axis| (*name, *axis)))
        .collect();
    for (name, axis) in &axes {
        axis.validate(name)?;
    }
    let grid = SweepGrid { axes };
    for cell in grid.cells(base) {
        cell.validate()?;
    }
    Ok(Some(grid))
}

impl ExperimentConfig {
    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(classify_json_error)?;
        let params = resolve_params(&raw)?;
        raw.integrator
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        raw.initial_states.validate()?;
        let sweep = resolve_sweep(&raw.sweep, &params)?;
        let outputs = raw.outputs;
        if !(outputs.csv || outputs.json || outputs.svg) {
            return Err(ConfigError::Invalid("no output format enabled".into()));
        }
        Ok(Self {
            params,
            integrator: raw.integrator,
            initial_states: raw.initial_states,
            sweep,
            basins: raw.basins,
            outputs,
        })
    }

    /// Config built from a named preset with every other setting at its default.
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        Self::from_json(&serde_json::json!({ "preset": name }).to_string())
    }

    /// The fully resolved config as a JSON document that loads back to `self`.
    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            preset: None,
            params: Some(
                self.params
                    .named_values()
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
            ),
            loan_rate: None,
            repayment_rate: None,
            integrator: self.integrator,
            initial_states: self.initial_states.clone(),
            sweep: self
                .sweep
                .as_ref()
                .map(|g| g.axes.iter().map(|(k, a)| (k.to_string(), *a)).collect()),
            basins: self.basins,
            outputs: self.outputs.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("config serializes")
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scfgame_core::model::ParamError;

    const FULL_PARAMS: &str = r#"{
        "params": {
            "R1": 10, "R2": 10, "R3": 10,
            "C1": 2, "C2": 3, "C3": 0.35,
            "r": 5, "theta": 0.5, "K": 4, "I1": 1, "I2": 0.5, "S": 6
        }
    }"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ExperimentConfig::from_json(FULL_PARAMS).unwrap();
        assert_eq!(c.params, presets::bistable());
        assert_eq!(c.integrator, IntegratorConfig::default());
        assert_eq!(c.basins, BasinSettings::default());
        assert_eq!(c.outputs, OutputSpec::default());
        assert_eq!(c.initial_states, InitialStates::Explicit(vec![]));
        assert!(c.sweep.is_none());
    }

    #[test]
    fn theta_out_of_range_fails_validation() {
        let text = FULL_PARAMS.replace("\"theta\": 0.5", "\"theta\": 1.5");
        match ExperimentConfig::from_json(&text) {
            Err(ConfigError::ValidationFailed(e)) => {
                assert_eq!(e.errors(), &[ParamError::ThetaOutOfRange { value: 1.5 }]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn misspelled_param_is_unknown_key() {
        let text = FULL_PARAMS.replace("\"theta\"", "\"thetta\"");
        match ExperimentConfig::from_json(&text) {
            Err(ConfigError::UnknownKey { key, .. }) => assert_eq!(key, "params.thetta"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn misspelled_nested_key_is_unknown_key_with_line() {
        let text = r#"{
            "preset": "bistable",
            "integrator": { "stepsize": 0.1 }
        }"#;
        match ExperimentConfig::from_json(text) {
            Err(ConfigError::UnknownKey { key, line }) => {
                assert_eq!(key, "stepsize");
                assert_eq!(line, Some(3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = "{\n  \"preset\": \"bistable\",\n  \"params\": {\n}";
        match ExperimentConfig::from_json(text) {
            Err(ConfigError::ParseError { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_param_without_preset() {
        let text = FULL_PARAMS.replace(", \"S\": 6", "");
        assert!(matches!(
            ExperimentConfig::from_json(&text),
            Err(ConfigError::MissingParam("S"))
        ));
    }

    #[test]
    fn preset_with_overrides_and_rate() {
        let text = r#"{
            "preset": "bistable",
            "params": { "m1": 0.5 },
            "loan_rate": { "term": "within_one_year", "principal": 10 }
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.params.reduction_sme, 0.5);
        assert_eq!(c.params.loan_interest, 10.0 * 0.0435);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(
            ExperimentConfig::from_preset("nope"),
            Err(ConfigError::UnknownPreset(_))
        ));
    }

    #[test]
    fn zero_step_grid_is_rejected() {
        let text = r#"{"preset": "bistable", "sweep": {"m1": {"min": 0, "max": 1, "steps": 0}}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn sweep_cells_are_validated() {
        let text = r#"{"preset": "bistable", "sweep": {"m1": {"min": 0, "max": 3, "steps": 4}}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text),
            Err(ConfigError::ValidationFailed(_))
        ));
    }

    #[test]
    fn sweep_axes_follow_parameter_order() {
        let text = r#"{"preset": "bistable", "sweep": {
            "m1": {"min": 0, "max": 1, "steps": 2},
            "C1": {"min": 2, "max": 3, "steps": 2}
        }}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let grid = c.sweep.unwrap();
        assert_eq!(grid.axes[0].0, "C1");
        let cells = grid.cells(&c.params);
        let pairs: Vec<_> = cells
            .iter()
            .map(|p| (p.cost_sme, p.reduction_sme))
            .collect();
        assert_eq!(pairs, vec![(2.0, 0.0), (2.0, 1.0), (3.0, 0.0), (3.0, 1.0)]);
    }

    #[test]
    fn grid_values_hit_both_ends() {
        let axis = GridAxis {
            min: 0.0,
            max: 0.3,
            steps: 4,
        };
        let v = axis.values();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[3], 0.3);
        assert_eq!(
            GridAxis {
                min: 0.2,
                max: 0.9,
                steps: 1
            }
            .values(),
            vec![0.2]
        );
    }

    #[test]
    fn initial_state_forms() {
        let c = ExperimentConfig::from_json(
            r#"{"preset": "bistable", "initial_states": [[0.1, 0.2, 0.3]]}"#,
        )
        .unwrap();
        assert_eq!(c.initial_states.resolve(None).len(), 1);

        let c = ExperimentConfig::from_json(
            r#"{"preset": "bistable", "initial_states": {"grid": {"min": 0.1, "max": 0.9, "steps": 2}}}"#,
        )
        .unwrap();
        assert_eq!(c.initial_states.resolve(None).len(), 8);

        let c = ExperimentConfig::from_json(
            r#"{"preset": "bistable", "initial_states": {"random": {"n": 5, "seed": 3}}}"#,
        )
        .unwrap();
        let a = c.initial_states.resolve(None);
        assert_eq!(a.len(), 5);
        assert_eq!(a, c.initial_states.resolve(Some(3)));
        assert_ne!(a, c.initial_states.resolve(Some(4)));

        assert!(ExperimentConfig::from_json(
            r#"{"preset": "bistable", "initial_states": [[1.1, 0.2, 0.3]]}"#
        )
        .is_err());
    }

    #[test]
    fn all_formats_disabled_is_rejected() {
        let text =
            r#"{"preset": "bistable", "outputs": {"csv": false, "json": false, "svg": false}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn effective_config_reloads_identically() {
        let text = r#"{
            "preset": "blockchain",
            "params": { "S": 6.1 },
            "loan_rate": { "term": "above_five_years", "principal": 30 },
            "integrator": { "step_size": 0.02, "record_every": 3 },
            "initial_states": { "random": { "n": 4, "seed": 17 } },
            "sweep": { "C1": { "min": 3, "max": 4, "steps": 3 } },
            "basins": { "samples": 50, "seed": 5, "sweep_samples": 10 }
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_json(), again.to_json());
    }
}
