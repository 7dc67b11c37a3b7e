//! Scenario configuration files (JSON, `schema_version: 1`).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use wellsplit::{BoxState, Complex64, SignalModel, SweepGrid, WellGeometry};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_ENERGY_TERMS: usize = 1000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub state_a: Vec<ModeWeight>,
    #[serde(default)]
    pub state_b: Option<Vec<ModeWeight>>,
    pub insertion_point: f64,
    pub n_cut: usize,
    #[serde(default)]
    pub energy_terms: Option<usize>,
    #[serde(default = "half")]
    pub prior: f64,
    #[serde(default)]
    pub signal: Option<SignalModel>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub density: Option<DensityConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub x_left: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = WellGeometry::default();
        Self {
            x_left: g.x_left,
            width: g.width,
            mass: g.mass,
            hbar: g.hbar,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeWeight {
    pub n: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub times: Vec<f64>,
    pub n_points: usize,
    /// Sample the post-insertion (split) state rather than the intact one.
    #[serde(default = "yes")]
    pub after_insertion: bool,
}

fn yes() -> bool {
    true
}

/// A configuration that passed every check, with states built.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub geometry: WellGeometry,
    pub state_a: BoxState,
    pub state_b: Option<BoxState>,
    pub insertion_point: f64,
    pub n_cut: usize,
    pub energy_terms: usize,
    pub prior: f64,
    pub signal: Option<SignalModel>,
    pub sweep: SweepGrid,
    pub density: Option<DensityConfig>,
    pub output_dir: Option<PathBuf>,
    /// Factor each state's raw weights were multiplied by.
    pub normalization: Vec<(&'static str, f64)>,
}

impl Plan {
    /// Labelled states in a fixed order.
    pub fn states(&self) -> Vec<(&'static str, &BoxState)> {
        let mut v = vec![("state_a", &self.state_a)];
        if let Some(b) = &self.state_b {
            v.push(("state_b", b));
        }
        v
    }
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

pub fn load(path: &Path) -> Result<Plan, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config = parse(&text)?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    config.into_plan(&fallback)
}

fn build_state(field: &'static str, geometry: WellGeometry, weights: &[ModeWeight]) -> Result<(BoxState, f64), ConfigError> {
    if weights.is_empty() {
        return Err(invalid(field, "needs at least one (n, weight) entry"));
    }
    for (i, w) in weights.iter().enumerate() {
        if w.n == 0 {
            return Err(invalid(format!("{field}[{i}].n"), "quantum numbers start at 1"));
        }
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(invalid(format!("{field}[{i}]"), "weights must be finite"));
        }
    }
    let pairs: Vec<_> = weights.iter().map(|w| (w.n, Complex64::new(w.re, w.im))).collect();
    BoxState::from_weights(geometry, &pairs).map_err(|e| invalid(field, e.to_string()))
}

fn check_unit_interval(field: String, value: f64, what: &str) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(invalid(field, format!("{what} out of range [0, 1] (got {value})")))
    }
}

impl ScenarioConfig {
    pub fn into_plan(self, fallback_name: &str) -> Result<Plan, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let g = self.geometry;
        let geometry = WellGeometry::new(g.x_left, g.width, g.mass, g.hbar).map_err(|e| invalid("geometry", e.to_string()))?;

        let (state_a, norm_a) = build_state("state_a", geometry, &self.state_a)?;
        let mut normalization = vec![("state_a", norm_a)];
        let state_b = match &self.state_b {
            Some(w) => {
                let (s, f) = build_state("state_b", geometry, w)?;
                normalization.push(("state_b", f));
                Some(s)
            }
            None => None,
        };

        let a = self.insertion_point;
        if a == geometry.x_left || a == geometry.x_right() {
            return Err(invalid("insertion_point", format!("boundary insertion at {a}; the barrier must go strictly inside the well")));
        }
        if !geometry.contains_interior(a) {
            return Err(invalid(
                "insertion_point",
                format!("{a} lies outside the well ({}, {})", geometry.x_left, geometry.x_right()),
            ));
        }

        if self.n_cut == 0 {
            return Err(invalid("n_cut", "must be at least 1"));
        }
        let energy_terms = self.energy_terms.unwrap_or(DEFAULT_ENERGY_TERMS.min(self.n_cut));
        if energy_terms == 0 || energy_terms > self.n_cut {
            return Err(invalid("energy_terms", format!("must lie in 1..={} (n_cut)", self.n_cut)));
        }

        check_unit_interval("prior".into(), self.prior, "prior")?;

        if let Some(signal) = &self.signal {
            signal.validate().map_err(|e| invalid("signal", e.to_string()))?;
        } else if state_b.is_some() {
            return Err(invalid("signal", "required when state_b is given"));
        }

        let sweep = self.sweep.unwrap_or_default();
        for (i, &p) in sweep.priors.iter().enumerate() {
            check_unit_interval(format!("sweep.priors[{i}]"), p, "prior")?;
        }
        for (i, &e) in sweep.detector_errors.iter().enumerate() {
            check_unit_interval(format!("sweep.detector_errors[{i}]"), e, "detector error")?;
        }
        if state_b.is_none() && !(sweep.priors.is_empty() && sweep.detector_errors.is_empty()) {
            return Err(invalid("sweep", "a sweep needs both state_a and state_b"));
        }

        if let Some(d) = &self.density {
            if d.times.is_empty() {
                return Err(invalid("density.times", "needs at least one time"));
            }
            if let Some(i) = d.times.iter().position(|t| !t.is_finite()) {
                return Err(invalid(format!("density.times[{i}]"), "times must be finite"));
            }
            if d.n_points < 2 {
                return Err(invalid("density.n_points", "needs at least two points"));
            }
        }

        Ok(Plan {
            name: self.name.unwrap_or_else(|| fallback_name.to_string()),
            geometry,
            state_a,
            state_b,
            insertion_point: a,
            n_cut: self.n_cut,
            energy_terms,
            prior: self.prior,
            signal: self.signal,
            sweep,
            density: self.density,
            output_dir: self.output_dir,
            normalization,
        })
    }
}
