//! Experiment configuration (TOML).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entire::EntireConfig;
use crate::error::{Error, Result};
use crate::model::{
    build_envelopes, custom_registry, make_buffered, make_epidemic, make_fisher, make_population, EnvelopePair,
    GKind, ModelSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Fisher {
        #[serde(default = "one")]
        d: f64,
        #[serde(default = "one")]
        r: f64,
    },
    Buffered {
        d1: f64,
        d2: f64,
        k1: f64,
        k2: f64,
        b: f64,
    },
    Epidemic {
        d1: f64,
        d2: f64,
        gamma: f64,
        beta: f64,
        g: GKind,
        omega: f64,
        nu: f64,
    },
    Population {
        d1: f64,
        d2: f64,
        r1: f64,
        r2: f64,
        alpha: f64,
        delta: f64,
    },
    Custom {
        name: String,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        match self {
            ModelConfig::Fisher { d, r } => make_fisher(*d, *r),
            ModelConfig::Buffered { d1, d2, k1, k2, b } => make_buffered(*d1, *d2, *k1, *k2, *b),
            ModelConfig::Epidemic {
                d1,
                d2,
                gamma,
                beta,
                g,
                omega,
                nu,
            } => make_epidemic(*d1, *d2, *gamma, *beta, *g, *omega, *nu),
            ModelConfig::Population {
                d1,
                d2,
                r1,
                r2,
                alpha,
                delta,
            } => make_population(*d1, *d2, *r1, *r2, *alpha, *delta),
            ModelConfig::Custom { name } => {
                custom_registry(name).ok_or_else(|| Error::Config(format!("unknown custom model '{name}'")))
            }
        }
    }
}

/// Model plus its envelope systems when it is not cooperative.
pub fn build_model(cfg: &ModelConfig) -> Result<(ModelSpec, Option<EnvelopePair>)> {
    let model = cfg.build()?;
    let env = if model.cooperative {
        None
    } else {
        Some(build_envelopes(&model)?)
    };
    Ok((model, env))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    /// Largest lambda of the emitted `M(lambda)` table, in units of `lambda_*`.
    #[serde(default = "default_table_span")]
    pub table_span: f64,
    #[serde(default = "default_table_points")]
    pub table_points: usize,
}

fn default_table_span() -> f64 {
    3.0
}
fn default_table_points() -> usize {
    61
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection {
            table_span: default_table_span(),
            table_points: default_table_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SisSection {
    #[serde(default = "default_sis_tol")]
    pub tol: f64,
    #[serde(default = "default_sis_dt")]
    pub dt: f64,
    #[serde(default = "default_t_left")]
    pub t_left: f64,
}

fn default_sis_tol() -> f64 {
    1e-10
}
fn default_sis_dt() -> f64 {
    0.002
}
fn default_t_left() -> f64 {
    -40.0
}

impl Default for SisSection {
    fn default() -> Self {
        SisSection {
            tol: default_sis_tol(),
            dt: default_sis_dt(),
            t_left: default_t_left(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontSection {
    #[serde(default = "default_front_tol")]
    pub tol: f64,
    #[serde(default = "default_dxi")]
    pub dxi: f64,
    /// Speeds for the standalone `front` stage; the pipeline uses the wave speeds.
    #[serde(default)]
    pub speeds: Vec<f64>,
}

fn default_front_tol() -> f64 {
    1e-8
}
fn default_dxi() -> f64 {
    0.02
}

impl Default for FrontSection {
    fn default() -> Self {
        FrontSection {
            tol: default_front_tol(),
            dxi: default_dxi(),
            speeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckerSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    crate::checker::DEFAULT_SAMPLES
}

impl Default for CheckerSection {
    fn default() -> Self {
        CheckerSection {
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub sis: SisSection,
    #[serde(default)]
    pub front: FrontSection,
    #[serde(default)]
    pub checker: CheckerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entire: Option<EntireConfig>,
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }
}

/// Parses and validates a configuration; syntax errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(e) = &cfg.entire {
        e.validate_shape()?;
    }
    Ok(cfg)
}

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

/// Which stage a `--tol` override targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Spectral,
    Sis,
    Front,
    Entire,
    Assumptions,
    Pipeline,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig, stage: Stage) -> Result<()> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(tol) = self.tol {
            match stage {
                Stage::Sis => cfg.sis.tol = tol,
                Stage::Front => cfg.front.tol = tol,
                Stage::Entire | Stage::Pipeline => {
                    if let Some(e) = cfg.entire.as_mut() {
                        e.tol = tol;
                    }
                }
                Stage::Spectral | Stage::Assumptions => {}
            }
        }
        if let Some(dxi) = self.dx.filter(|_| stage == Stage::Front) {
            cfg.front.dxi = dxi;
        }
        if let Some(dt) = self.dt.filter(|_| stage == Stage::Sis) {
            cfg.sis.dt = dt;
        }
        if self.dx.is_some() || self.dt.is_some() || self.schedule.is_some() {
            if let Some(e) = cfg.entire.as_mut() {
                if stage != Stage::Front {
                    if let Some(dx) = self.dx {
                        e.dx = dx;
                    }
                }
                if stage != Stage::Sis {
                    if let Some(dt) = self.dt {
                        e.dt = dt;
                    }
                }
                if let Some(s) = &self.schedule {
                    e.n_schedule = s.clone();
                }
                e.validate_shape()?;
            }
        }
        Ok(())
    }
}

/// `"2,4,6,8"` to a schedule.
pub fn parse_schedule(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad schedule entry '{p}': {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
kind = "epidemic"
d1 = 1.0
d2 = 1.0
gamma = 1.0
beta = 1.0
g = "g1"
omega = 2.0
nu = 1.0

[entire]
waves = [{ c = 1.5 }]
chi = [1, 1]
"#;

    #[test]
    fn defaults_filled() {
        let cfg = parse_config(MINIMAL).unwrap();
        let e = cfg.entire.unwrap();
        assert_eq!(e.dx, 0.05);
        assert_eq!(e.dt, 1e-3);
        assert_eq!(e.n_schedule, vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(e.waves[0].nu, 1);
        assert_eq!(cfg.sis.tol, 1e-10);
    }

    #[test]
    fn duplicate_field_named() {
        let text = MINIMAL.replace("omega = 2.0", "omega = 2.0\nomega = 3.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
    }

    #[test]
    fn unknown_field_and_syntax_errors() {
        let err = parse_config(&MINIMAL.replace("nu = 1.0", "nu = 1.0\nmu = 2.0")).unwrap_err();
        assert!(err.to_string().contains("mu"), "{err}");
        assert_eq!(err.exit_code(), 4);
        let err = parse_config("[model\nkind = 1").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        let err = parse_config(&MINIMAL.replace("omega = 2.0", "omega = \"two\"")).unwrap_err();
        assert!(err.to_string().contains("expected f64"), "{err}");
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        let o = Overrides {
            dx: Some(0.1),
            schedule: Some(parse_schedule("1, 3").unwrap()),
            tol: Some(5e-3),
            ..Default::default()
        };
        o.apply(&mut cfg, Stage::Entire).unwrap();
        let e = cfg.entire.as_ref().unwrap();
        assert_eq!((e.dx, e.tol), (0.1, 5e-3));
        assert_eq!(e.n_schedule, vec![1.0, 3.0]);
        let bad = Overrides {
            schedule: Some(vec![3.0, 1.0]),
            ..Default::default()
        };
        assert!(bad.apply(&mut cfg, Stage::Entire).is_err());
        assert!(parse_schedule("2,x").is_err());
    }

    #[test]
    fn builds_models() {
        let cfg = parse_config(MINIMAL).unwrap();
        let (m, env) = build_model(&cfg.model).unwrap();
        assert!(m.cooperative && env.is_none());
        let p = ModelConfig::Population {
            d1: 1.0,
            d2: 1.0,
            r1: 2.0,
            r2: 1.0,
            alpha: 1.0,
            delta: 1.0,
        };
        assert!(build_model(&p).unwrap().1.is_some());
        assert!(ModelConfig::Custom { name: "nope".into() }.build().is_err());
    }
}
