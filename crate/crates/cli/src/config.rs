//! Run configuration: JSON, SI units, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use coldcloud::{BeamParams, CavityParams, CloudParams, EffNumInputs, OpticalParams};

/// Malformed or inconsistent configuration; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn field(path: &str, msg: impl std::fmt::Display) -> Self {
        Self(format!("field `{path}`: {msg}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cloud: CloudConfig,
    pub beam: BeamConfig,
    #[serde(default)]
    pub optical: Option<OpticalConfig>,
    #[serde(default)]
    pub cavity: Option<CavityConfig>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudConfig {
    pub n_total: f64,
    pub sigma_r: f64,
    #[serde(default)]
    pub sigma_v: Option<f64>,
    /// Kelvin; requires `mass`.
    #[serde(default)]
    pub temperature: Option<f64>,
    /// Atomic mass in kg.
    #[serde(default)]
    pub mass: Option<f64>,
    pub g: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub w0: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalConfig {
    pub delta: f64,
    pub s_m0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub kappa: f64,
    pub tau_c: f64,
}

/// Either an explicit list or `{start, stop, points, log}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Grid {
    pub fn values(&self, name: &str) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                if r.points == 0 {
                    return Err(ConfigError::field(name, "points must be at least 1"));
                }
                if r.log && !(r.start > 0.0 && r.stop > 0.0) {
                    return Err(ConfigError::field(name, "log range needs positive start and stop"));
                }
                let n = r.points;
                (0..n)
                    .map(|i| {
                        let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                        if r.log {
                            (r.start.ln() + f * (r.stop.ln() - r.start.ln())).exp()
                        } else {
                            r.start + f * (r.stop - r.start)
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(ConfigError::field(name, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::field(name, "grid values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Observation times [s].
    #[serde(default = "default_t")]
    pub t: Grid,
    /// Mean fall times for covariance and spectra [s].
    #[serde(rename = "T", default = "default_mid")]
    pub mid: Grid,
    /// Delays [s].
    #[serde(default = "default_tau")]
    pub tau: Grid,
    /// Angular frequencies [rad/s].
    #[serde(default = "default_omega")]
    pub omega: Grid,
}

fn default_t() -> Grid {
    Grid::List(vec![0.0, 5e-4, 1e-3, 1e-2, 3e-2])
}

fn default_mid() -> Grid {
    Grid::List(vec![5e-3, 1e-2, 2e-2])
}

fn default_tau() -> Grid {
    Grid::Range(RangeSpec {
        start: -5e-3,
        stop: 5e-3,
        points: 201,
        log: false,
    })
}

fn default_omega() -> Grid {
    Grid::Range(RangeSpec {
        start: 1.0,
        stop: 1e5,
        points: 101,
        log: true,
    })
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            t: default_t(),
            mid: default_mid(),
            tau: default_tau(),
            omega: default_omega(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub realizations: usize,
    pub seed: u64,
    /// Mean atom number for the Monte Carlo runs; defaults to `cloud.n_total`.
    #[serde(default)]
    pub n_total: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed deviation of Monte Carlo estimates, in standard errors.
    #[serde(default = "default_mc_se")]
    pub mc_se: f64,
}

fn default_mc_se() -> f64 {
    3.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mc_se: default_mc_se() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                ConfigError(inner.to_string())
            } else {
                ConfigError::field(&path, inner)
            }
        })?;
        cfg.inputs()?;
        Ok(cfg)
    }

    pub fn cloud_params(&self) -> Result<CloudParams, ConfigError> {
        let c = &self.cloud;
        let params = match (c.sigma_v, c.temperature, c.mass) {
            (Some(sv), None, None) => CloudParams::new(c.n_total, c.sigma_r, sv, c.g),
            (None, Some(t), Some(m)) => CloudParams::from_temperature(c.n_total, c.sigma_r, t, m, c.g),
            (None, Some(_), None) => return Err(ConfigError::field("cloud.mass", "required with temperature")),
            (None, None, Some(_)) => return Err(ConfigError::field("cloud.temperature", "required with mass")),
            (None, None, None) => {
                return Err(ConfigError::field("cloud.sigma_v", "give sigma_v or temperature and mass"))
            }
            (Some(_), _, _) => {
                return Err(ConfigError::field("cloud.sigma_v", "give sigma_v or temperature and mass, not both"))
            }
        };
        params.map_err(|e| ConfigError::field("cloud", e))
    }

    pub fn beam_params(&self) -> Result<BeamParams, ConfigError> {
        BeamParams::new(self.beam.w0, self.beam.lambda).map_err(|e| ConfigError::field("beam", e))
    }

    pub fn inputs(&self) -> Result<EffNumInputs, ConfigError> {
        let cloud = self.cloud_params()?;
        let beam = self.beam_params()?;
        if let Some(o) = &self.optical {
            OpticalParams::new(o.delta, o.s_m0).map_err(|e| ConfigError::field("optical", e))?;
        }
        if let Some(c) = &self.cavity {
            CavityParams::new(c.kappa, c.tau_c).map_err(|e| ConfigError::field("cavity", e))?;
        }
        if let Some(mc) = &self.mc {
            if mc.realizations < 2 {
                return Err(ConfigError::field("mc.realizations", "at least two realizations are needed"));
            }
            if let Some(n) = mc.n_total {
                if !(n > 0.0 && n.is_finite()) {
                    return Err(ConfigError::field("mc.n_total", "must be positive"));
                }
            }
        }
        if !(self.tolerances.mc_se > 0.0) {
            return Err(ConfigError::field("tolerances.mc_se", "must be positive"));
        }
        EffNumInputs::new(cloud, beam).map_err(|e| ConfigError::field("cloud", e))
    }

    pub fn optical_params(&self) -> Result<OpticalParams, ConfigError> {
        let o = self
            .optical
            .as_ref()
            .ok_or_else(|| ConfigError::field("optical", "section required by this subcommand"))?;
        OpticalParams::new(o.delta, o.s_m0).map_err(|e| ConfigError::field("optical", e))
    }

    pub fn cavity_params(&self) -> Result<CavityParams, ConfigError> {
        let c = self
            .cavity
            .as_ref()
            .ok_or_else(|| ConfigError::field("cavity", "section required by this subcommand"))?;
        CavityParams::new(c.kappa, c.tau_c).map_err(|e| ConfigError::field("cavity", e))
    }

    pub fn mc(&self) -> Result<&McConfig, ConfigError> {
        self.mc
            .as_ref()
            .ok_or_else(|| ConfigError::field("mc", "section required by this subcommand"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "cloud": {"n_total": 1e6, "sigma_r": 1e-3, "sigma_v": 0.1, "g": 9.81},
        "beam": {"w0": 1e-4, "lambda": 852e-9}
    }"#;

    #[test]
    fn minimal_config_parses_with_default_grids() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.grids.t.values("grids.t").unwrap().len(), 5);
        assert_eq!(c.tolerances.mc_se, 3.0);
        assert!(c.optical_params().is_err());
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace(r#""w0": 1e-4, "#, "");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("w0"), "{err}");
        assert!(err.contains("beam"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = MINIMAL.replace(r#""g": 9.81"#, r#""g": 9.81, "gravity": 1"#);
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("gravity"), "{err}");
    }

    #[test]
    fn velocity_spread_sources_are_exclusive() {
        let both = MINIMAL.replace(r#""sigma_v": 0.1"#, r#""sigma_v": 0.1, "temperature": 1e-4, "mass": 2.2e-25"#);
        assert!(RunConfig::parse(&both).is_err());
        let thermal = MINIMAL.replace(r#""sigma_v": 0.1"#, r#""temperature": 1e-4, "mass": 2.2e-25"#);
        let c = RunConfig::parse(&thermal).unwrap();
        assert!(c.cloud_params().unwrap().sigma_v > 0.0);
        let half = MINIMAL.replace(r#""sigma_v": 0.1"#, r#""temperature": 1e-4"#);
        assert!(RunConfig::parse(&half).unwrap_err().to_string().contains("cloud.mass"));
    }

    #[test]
    fn physics_violations_are_config_errors() {
        let text = MINIMAL.replace(r#""w0": 1e-4"#, r#""w0": -1e-4"#);
        assert!(RunConfig::parse(&text).unwrap_err().to_string().contains("beam"));
    }

    #[test]
    fn ranges_and_lists() {
        let lin = Grid::Range(RangeSpec {
            start: 0.0,
            stop: 1.0,
            points: 5,
            log: false,
        });
        assert_eq!(lin.values("x").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = Grid::Range(RangeSpec {
            start: 1.0,
            stop: 100.0,
            points: 3,
            log: true,
        });
        let v = log.values("x").unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!(Grid::List(vec![]).values("x").is_err());
    }
}
