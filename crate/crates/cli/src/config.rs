//! Run configuration read from a TOML file.

use std::path::Path;

use gyrocanon::{Ensemble, FieldModel, Metric, Scheme, Species};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub species: SpeciesConfig,
    pub eps: f64,
    pub field: FieldConfig,
    pub initial_state: InitialState,
    pub integrator: IntegratorConfig,
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub m: f64,
    pub q: f64,
    pub c: f64,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        Self { m: 1.0, q: 1.0, c: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    UniformB {
        b0: f64,
    },
    GradBSlab {
        b0: f64,
        scale_length: f64,
    },
    MagneticMirror {
        b0: f64,
        scale_length: f64,
    },
    ScrewPinch {
        bz: f64,
        b_theta: f64,
        scale_length: f64,
    },
    AbcFlow {
        a: f64,
        b: f64,
        c: f64,
    },
    CrossedEb {
        e0: f64,
        b0: f64,
        #[serde(default)]
        e_ramp: f64,
    },
}

impl FieldConfig {
    pub fn model(self) -> FieldModel<f64> {
        match self {
            Self::UniformB { b0 } => FieldModel::UniformB { b0 },
            Self::GradBSlab { b0, scale_length } => FieldModel::GradBSlab { b0, scale_length },
            Self::MagneticMirror { b0, scale_length } => FieldModel::MagneticMirror { b0, scale_length },
            Self::ScrewPinch { bz, b_theta, scale_length } => FieldModel::ScrewPinch { bz, b_theta, scale_length },
            Self::AbcFlow { a, b, c } => FieldModel::AbcFlow { a, b, c },
            Self::CrossedEb { e0, b0, e_ramp } => FieldModel::CrossedEB { e0, b0, e_ramp },
        }
    }
}

/// Either a particle or a guiding center, at `t = 0`.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Full { r: [f64; 3], v: [f64; 3] },
    Gc { r_gc: [f64; 3], u: f64, mu: f64, phi: f64 },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Rk4,
    Boris,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
    /// Guiding-center step; defaults to `dt`.
    pub gc_dt: Option<f64>,
}

fn default_scheme() -> SchemeName {
    SchemeName::Rk4
}

fn default_stride() -> usize {
    1
}

impl IntegratorConfig {
    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeName::Rk4 => Scheme::Rk4,
            SchemeName::Boris => Scheme::Boris,
        }
    }

    pub fn gc_dt(&self) -> f64 {
        self.gc_dt.unwrap_or(self.dt)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleConfig {
    Single,
    Gyrophases {
        n: usize,
    },
    /// Seeded from the top-level `seed`.
    Random {
        n: usize,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub eps_list: Vec<f64>,
    pub metric: String,
    /// Physical span per run; defaults to `integrator.t_end`.
    pub t_span: Option<f64>,
    #[serde(default = "default_dt_omega")]
    pub dt_omega: f64,
    #[serde(default = "default_gc_dt_omega")]
    pub gc_dt_omega: f64,
    pub ensemble: Option<EnsembleConfig>,
}

fn default_dt_omega() -> f64 {
    0.05
}

fn default_gc_dt_omega() -> f64 {
    0.2
}

impl ScanConfig {
    pub fn metric(&self) -> Metric {
        self.metric.parse().expect("validated")
    }

    pub fn ensemble(&self, seed: u64) -> Ensemble {
        match self.ensemble.unwrap_or(EnsembleConfig::Single) {
            EnsembleConfig::Single => Ensemble::Single,
            EnsembleConfig::Gyrophases { n } => Ensemble::Gyrophases(n),
            EnsembleConfig::Random { n } => Ensemble::Random { n, seed },
        }
    }
}

/// Knobs of the residual checks.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    /// Finite-difference step for Hamiltonian gradients and action variations.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Half-width of the hat perturbations, in physical time.
    pub hat_width: Option<f64>,
    /// States of the single-valuedness probe run by `transform`; 0 skips it.
    #[serde(default)]
    pub probe_states: usize,
}

fn default_fd_step() -> f64 {
    1e-6
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self { fd_step: default_fd_step(), hat_width: None, probe_states: 0 }
    }
}

fn positive(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite (got {value})")))
    }
}

fn finite(key: &'static str, values: &[f64]) -> Result<(), ConfigError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(invalid(key, format!("must be finite (got {v})"))),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn species(&self) -> Species<f64> {
        Species { m: self.species.m, q: self.species.q, c: self.species.c }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("species.m", self.species.m)?;
        positive("species.q", self.species.q)?;
        positive("species.c", self.species.c)?;
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(invalid("eps", format!("must lie in (0, 0.5] (got {})", self.eps)));
        }
        self.validate_field()?;
        match self.initial_state {
            InitialState::Full { r, v } => {
                finite("initial_state.r", &r)?;
                finite("initial_state.v", &v)?;
            }
            InitialState::Gc { r_gc, u, mu, phi } => {
                finite("initial_state.r_gc", &r_gc)?;
                finite("initial_state.u", &[u])?;
                finite("initial_state.phi", &[phi])?;
                if !(mu.is_finite() && mu >= 0.0) {
                    return Err(invalid("initial_state.mu", format!("must be non-negative (got {mu})")));
                }
            }
        }
        let int = &self.integrator;
        positive("integrator.dt", int.dt)?;
        positive("integrator.t_end", int.t_end)?;
        if int.t_end <= int.dt {
            return Err(invalid("integrator.t_end", format!("must exceed dt = {} (got {})", int.dt, int.t_end)));
        }
        if int.sample_stride == 0 {
            return Err(invalid("integrator.sample_stride", "must be at least 1"));
        }
        if let Some(gc_dt) = int.gc_dt {
            positive("integrator.gc_dt", gc_dt)?;
            if gc_dt < int.dt {
                return Err(invalid("integrator.gc_dt", format!("must be at least dt = {} (got {gc_dt})", int.dt)));
            }
        }
        if let Some(scan) = &self.scan {
            self.validate_scan(scan)?;
        }
        positive("checks.fd_step", self.checks.fd_step)?;
        if let Some(w) = self.checks.hat_width {
            positive("checks.hat_width", w)?;
        }
        if self.checks.probe_states != 0 && self.checks.probe_states < gyrocanon::diagnostics::MIN_PROBE_STATES {
            return Err(invalid(
                "checks.probe_states",
                format!("must be 0 or at least {}", gyrocanon::diagnostics::MIN_PROBE_STATES),
            ));
        }
        Ok(())
    }

    fn validate_field(&self) -> Result<(), ConfigError> {
        let all: Vec<(&'static str, f64)> = match self.field {
            FieldConfig::UniformB { b0 } => vec![("field.b0", b0)],
            FieldConfig::GradBSlab { b0, scale_length } | FieldConfig::MagneticMirror { b0, scale_length } => {
                vec![("field.b0", b0), ("field.scale_length", scale_length)]
            }
            FieldConfig::ScrewPinch { bz, b_theta, scale_length } => {
                finite("field.b_theta", &[b_theta])?;
                vec![("field.bz", bz), ("field.scale_length", scale_length)]
            }
            FieldConfig::AbcFlow { a, b, c } => {
                finite("field.a", &[a])?;
                finite("field.b", &[b])?;
                finite("field.c", &[c])?;
                if a == 0.0 && b == 0.0 && c == 0.0 {
                    return Err(invalid("field.a", "ABC amplitudes cannot all vanish"));
                }
                vec![]
            }
            FieldConfig::CrossedEb { e0, b0, e_ramp } => {
                finite("field.e0", &[e0])?;
                finite("field.e_ramp", &[e_ramp])?;
                vec![("field.b0", b0)]
            }
        };
        for (key, value) in all {
            positive(key, value)?;
        }
        Ok(())
    }

    fn validate_scan(&self, scan: &ScanConfig) -> Result<(), ConfigError> {
        if scan.metric.parse::<Metric>().is_err() {
            let names: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
            return Err(invalid("scan.metric", format!("unknown metric {:?}, expected one of {names:?}", scan.metric)));
        }
        if scan.eps_list.len() < 2 {
            return Err(invalid("scan.eps_list", "needs at least two values"));
        }
        for &e in &scan.eps_list {
            if !(e > 0.0 && e <= 0.5) {
                return Err(invalid("scan.eps_list", format!("values must lie in (0, 0.5] (got {e})")));
            }
        }
        if scan.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("scan.eps_list", "must be strictly decreasing"));
        }
        if let Some(t) = scan.t_span {
            positive("scan.t_span", t)?;
        }
        positive("scan.dt_omega", scan.dt_omega)?;
        positive("scan.gc_dt_omega", scan.gc_dt_omega)?;
        match scan.ensemble {
            Some(EnsembleConfig::Gyrophases { n: 0 }) | Some(EnsembleConfig::Random { n: 0 }) => {
                Err(invalid("scan.ensemble.n", "must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}
