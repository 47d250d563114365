//! Run configuration files (JSON or TOML) and their validation.

use std::path::Path;

use qutrit_floquet::engine::{FloquetParams, Observable, UxMode};
use qutrit_floquet::mps::{TebdOptions, TruncationPolicy};
use qutrit_floquet::phase::GridAxis;
use qutrit_floquet::state::MAX_DENSE_SITES;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Syntax(String),
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Exact,
    Mps,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MpsMode {
    #[default]
    Finite,
    Infinite,
}

/// Grid of a parameter sweep. Axes are written `start:end:points`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(with = "axis_string")]
    pub grid_x: GridAxis,
    #[serde(with = "axis_string")]
    pub grid_z: GridAxis,
    pub cycles: usize,
}

mod axis_string {
    use qutrit_floquet::phase::GridAxis;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &GridAxis, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&a.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GridAxis, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub sites: usize,
    pub theta_x: f64,
    pub theta_z: f64,
    pub steps: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_stride")]
    pub measure_every: usize,
    #[serde(default)]
    pub ux_mode: UxMode,
    #[serde(default)]
    pub engine: EngineKind,
    #[serde(default)]
    pub mps_mode: MpsMode,
    #[serde(default = "default_tebd_tol")]
    pub tebd_tol: f64,
    #[serde(default = "default_chi_cap")]
    pub chi_cap: usize,
    #[serde(default = "default_substeps")]
    pub trotter_substeps: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

pub const TOP_LEVEL_KEYS: &[&str] = &[
    "L", "theta_x", "theta_z", "steps", "epsilon", "measure_every", "ux_mode", "engine", "mps_mode", "tebd_tol",
    "chi_cap", "trotter_substeps", "observables", "sweep", "out",
];
pub const SWEEP_KEYS: &[&str] = &["grid_x", "grid_z", "cycles"];

fn default_stride() -> usize {
    1
}

fn default_tebd_tol() -> f64 {
    1e-6
}

fn default_chi_cap() -> usize {
    600
}

fn default_substeps() -> usize {
    1
}

pub fn default_observables() -> Vec<String> {
    ["overlap", "mean_Sz", "entropy_half", "fQ"].map(String::from).to_vec()
}

/// Accepts `overlap`, `mean_Sz`, `entropy_half`, `fQ` and `zz_i_j` (1-based
/// sites), plus a few aliases.
pub fn parse_observable(name: &str) -> Result<Observable, String> {
    match name {
        "overlap" => Ok(Observable::Overlap),
        "mean_Sz" | "mean_sz" | "magnetization" => Ok(Observable::MeanSz),
        "entropy_half" | "entropy" => Ok(Observable::EntropyHalf),
        "fQ" | "fq" | "qfi" => Ok(Observable::Qfi),
        other => {
            let parts: Vec<&str> = other.split('_').collect();
            if let ["zz", i, j] = parts[..] {
                if let (Ok(i), Ok(j)) = (i.parse::<usize>(), j.parse::<usize>()) {
                    if i >= 1 && j >= 1 {
                        return Ok(Observable::Zz(i - 1, j - 1));
                    }
                }
            }
            Err(format!("unknown observable `{other}`"))
        }
    }
}

/// Closest entry of `candidates` by Jaro-Winkler similarity, if reasonably close.
pub fn nearest_key(key: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (c, strsim::jaro_winkler(&key.to_ascii_lowercase(), &c.to_ascii_lowercase())))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, s)| *s > 0.7)
        .map(|(c, _)| c.to_string())
}

fn check_keys(value: &serde_json::Value) -> Result<(), ConfigError> {
    let unknown = |key: &str, allowed: &[&str]| ConfigError::UnknownKey {
        key: key.to_string(),
        suggestion: nearest_key(key, allowed),
    };
    let Some(map) = value.as_object() else {
        return Err(ConfigError::Syntax("configuration must be a table of keys".into()));
    };
    for (key, v) in map {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            return Err(unknown(key, TOP_LEVEL_KEYS));
        }
        if key == "sweep" {
            if let Some(inner) = v.as_object() {
                if let Some(k) = inner.keys().find(|k| !SWEEP_KEYS.contains(&k.as_str())) {
                    return Err(unknown(k, SWEEP_KEYS));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Format::Toml,
            _ => Format::Json,
        }
    }
}

impl RunConfig {
    pub fn new(sites: usize, theta_x: f64, theta_z: f64, steps: usize) -> Self {
        RunConfig {
            sites,
            theta_x,
            theta_z,
            steps,
            epsilon: 0.0,
            measure_every: 1,
            ux_mode: UxMode::Exact,
            engine: EngineKind::Exact,
            mps_mode: MpsMode::Finite,
            tebd_tol: default_tebd_tol(),
            chi_cap: default_chi_cap(),
            trotter_substeps: 1,
            observables: default_observables(),
            sweep: None,
            out: None,
        }
    }

    pub fn parse_str(text: &str, format: Format) -> Result<Self, ConfigError> {
        let config: RunConfig = match format {
            Format::Json => {
                let value: serde_json::Value =
                    serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
                check_keys(&value)?;
                serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?
            }
            Format::Toml => {
                let value: serde_json::Value =
                    toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
                check_keys(&value)?;
                toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse_str(&text, Format::from_path(path)).map_err(|e| match e {
            ConfigError::Syntax(m) => ConfigError::Syntax(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_string(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("config serializes"),
            Format::Toml => toml::to_string(self).expect("config serializes"),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, message: String| Err(ConfigError::Invalid { field, message });
        if self.sites < 2 {
            return invalid("L", format!("{} sites, need at least 2", self.sites));
        }
        if self.engine == EngineKind::Exact && self.sites > MAX_DENSE_SITES {
            return invalid("L", format!("exact engine supports at most {MAX_DENSE_SITES} sites"));
        }
        for (field, v) in [("theta_x", self.theta_x), ("theta_z", self.theta_z), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return invalid(field, "must be finite".into());
            }
        }
        if self.measure_every == 0 {
            return invalid("measure_every", "must be positive".into());
        }
        if !(self.tebd_tol > 0.0 && self.tebd_tol < 1.0) {
            return invalid("tebd_tol", format!("{} is outside (0, 1)", self.tebd_tol));
        }
        if self.chi_cap == 0 {
            return invalid("chi_cap", "must be positive".into());
        }
        if self.trotter_substeps == 0 {
            return invalid("trotter_substeps", "must be positive".into());
        }
        self.parsed_observables()?;
        if let Some(s) = &self.sweep {
            if s.grid_x.points == 0 || s.grid_z.points == 0 {
                return invalid("sweep", "grid axes need at least one point".into());
            }
        }
        Ok(())
    }

    pub fn parsed_observables(&self) -> Result<Vec<Observable>, ConfigError> {
        self.observables
            .iter()
            .map(|o| {
                let obs = parse_observable(o).map_err(|m| ConfigError::Invalid { field: "observables", message: m })?;
                if let Observable::Zz(i, j) = obs {
                    if i >= self.sites || j >= self.sites {
                        return Err(ConfigError::Invalid {
                            field: "observables",
                            message: format!("`{o}` refers to a site beyond L = {}", self.sites),
                        });
                    }
                }
                Ok(obs)
            })
            .collect()
    }

    pub fn params(&self) -> FloquetParams {
        FloquetParams::new(self.sites, self.theta_x, self.theta_z, self.steps)
            .with_epsilon(self.epsilon)
            .with_stride(self.measure_every)
            .with_ux_mode(self.ux_mode)
    }

    pub fn tebd_options(&self) -> TebdOptions {
        TebdOptions {
            policy: TruncationPolicy { tolerance: self.tebd_tol, chi_cap: self.chi_cap },
            trotter_substeps: self.trotter_substeps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse_str(r#"{"L": 4, "theta_x": 0.2, "theta_z": 1.0, "steps": 20}"#, Format::Json).unwrap();
        assert_eq!(c, RunConfig::new(4, 0.2, 1.0, 20));
        assert_eq!(c.tebd_tol, 1e-6);
        assert_eq!(c.chi_cap, 600);
        assert_eq!(c.epsilon, 0.0);
        assert_eq!(c.ux_mode, UxMode::Exact);
    }

    #[test]
    fn unknown_key_names_nearest() {
        let err = RunConfig::parse_str(r#"{"L": 4, "thetax": 0.2, "theta_z": 1.0, "steps": 20}"#, Format::Json)
            .unwrap_err();
        assert!(err.to_string().contains("did you mean `theta_x`"), "{err}");
        let err = RunConfig::parse_str(
            "L = 4\ntheta_x = 0.2\ntheta_z = 1.0\nsteps = 20\n[sweep]\ngrid_x = \"0:1:3\"\ngrid_z = \"0:1:3\"\ncylces = 5\n",
            Format::Toml,
        )
        .unwrap_err();
        assert!(err.to_string().contains("`cycles`"), "{err}");
    }

    #[test]
    fn negative_sites_rejected_with_position() {
        let err = RunConfig::parse_str(r#"{"L": -4, "theta_x": 0.2, "theta_z": 1.0, "steps": 20}"#, Format::Json)
            .unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn toml_with_sweep_round_trips() {
        let mut c = RunConfig::new(8, 0.05, 0.0, 150);
        c.sweep = Some(SweepSection { grid_x: GridAxis::new(0.0, 0.6, 25), grid_z: GridAxis::new(0.0, 3.0, 25), cycles: 150 });
        for f in [Format::Json, Format::Toml] {
            assert_eq!(RunConfig::parse_str(&c.to_string(f), f).unwrap(), c);
        }
    }

    #[test]
    fn observables_parse() {
        assert_eq!(parse_observable("zz_1_2"), Ok(Observable::Zz(0, 1)));
        assert!(parse_observable("zz_0_2").is_err());
        let mut c = RunConfig::new(4, 0.2, 1.0, 20);
        c.observables = vec!["zz_1_5".into()];
        assert!(c.validate().is_err());
    }
}
