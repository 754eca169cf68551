//! Run configuration: TOML text with sections `[model]`, `[spectral]`,
//! `[integration]`, `[forcing]`, `[manifold]` and `[output]`. Every key is
//! optional; missing keys take the defaults below. Unknown keys are errors.
//!
//! ```toml
//! [model]
//! khat = [-3, -2]
//! p = [1, 1]
//! gamma = 2.0
//!
//! [forcing]
//! epsilon = 0.01
//! nu = 1.0
//! a_p = 1.0
//! modes = [[2, 0.1, 0.0]]   # [n, a_n, b_n]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ForcingSpec, LineState, ModelParams};
use crate::lattice::Mode;
use crate::manifold::Direction;
use crate::spectral::LinearSubsystem;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T, E = ConfigError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub khat: [i64; 2],
    pub p: [i64; 2],
    pub gamma: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            khat: [-3, -2],
            p: [1, 1],
            gamma: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    Cf,
    Matrix,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub method: SpectrumMethod,
    /// Matrix truncation `N` (size `2N+1`).
    pub truncation: usize,
    /// Continued-fraction depth `M`.
    pub depth: i64,
    /// Matrix eigenvalues with `|Re λ|` at or below this are dropped;
    /// defaults to `0.05·|Γ|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re_threshold: Option<f64>,
    /// Half-width of the square search box for the cf solver.
    pub search_half_width: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            method: SpectrumMethod::Cf,
            truncation: 100,
            depth: 200,
            re_threshold: None,
            search_half_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `ω*`: `ω_p = Γ`, all chain modes zero.
    FixedPoint,
    /// `ω*` plus uniform noise of size `perturbation` drawn from `seed`.
    Perturbed,
    /// The `values` list, in state layout.
    Inline,
    /// Numbers from `file`, in state layout, separated by commas or whitespace.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Line-model size: chain indices `[−N+2, N+3]`.
    pub truncation: i64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub initial: InitialCondition,
    pub perturbation: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            truncation: 30,
            dt: 1e-3,
            t_end: 10.0,
            stride: 100,
            initial: InitialCondition::FixedPoint,
            perturbation: 1e-3,
            seed: 0,
            values: Vec::new(),
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub epsilon: f64,
    pub nu: f64,
    pub a_p: f64,
    pub b_p: f64,
    /// `[n, a_n, b_n]` rows.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<(i64, f64, f64)>,
    /// Number of forcing periods sampled by `poincare`.
    pub periods: usize,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            nu: 1.0,
            a_p: 0.0,
            b_p: 0.0,
            modes: Vec::new(),
            periods: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    /// Seed radius; defaults to `1e-6·|Γ|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub samples: usize,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub direction: Direction,
    pub re_threshold: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            delta: None,
            samples: 8,
            t_end: 28.0,
            dt: 1e-3,
            stride: 10,
            direction: Direction::Unstable,
            re_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Order `s` of the `Hs` column.
    pub sobolev_order: u32,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            sobolev_order: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub spectral: SpectralConfig,
    pub integration: IntegrationConfig,
    pub forcing: ForcingConfig,
    pub manifold: ManifoldConfig,
    pub output: OutputConfig,
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_with_overrides(text, &[])
}

/// Parses config text, applies `section.key=value` overrides, validates.
/// Override values use TOML syntax; bare words are taken as strings.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let cfg: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    parse_with_overrides(&text, overrides)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override `{spec}` is not key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| ConfigError::Parse(format!("override key `{key}` is not section.key")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(ConfigError::Parse(format!("`{section}` is not a section"))),
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be > 0")))
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        let p = Mode::new(m.p[0], m.p[1]).map_err(|_| invalid("p must be a nonzero mode"))?;
        let khat = Mode::new(m.khat[0], m.khat[1]).map_err(|_| invalid("khat must be a nonzero mode"))?;
        if khat.cross(p) == 0 && khat.dot(p) % p.norm_sq() == 0 {
            return Err(invalid("khat must not lie in the class of 0 (khat + n p = 0 for some n)"));
        }
        if !(m.gamma.is_finite() && m.gamma >= 0.0) {
            return Err(invalid("gamma must be ≥ 0"));
        }

        let s = &self.spectral;
        if s.truncation < 10 {
            return Err(invalid("spectral.truncation must be ≥ 10"));
        }
        if s.depth < 1 {
            return Err(invalid("spectral.depth must be ≥ 1"));
        }
        if let Some(t) = s.re_threshold {
            positive("spectral.re_threshold", t)?;
        }
        positive("spectral.search_half_width", s.search_half_width)?;

        let i = &self.integration;
        if i.truncation < 1 {
            return Err(invalid("integration.truncation must be ≥ 1"));
        }
        positive("dt", i.dt)?;
        if !(i.t_end.is_finite() && i.t_end >= 0.0) {
            return Err(invalid("t_end must be ≥ 0"));
        }
        if i.stride == 0 {
            return Err(invalid("stride must be ≥ 1"));
        }
        if !(i.perturbation.is_finite() && i.perturbation >= 0.0) {
            return Err(invalid("perturbation must be ≥ 0"));
        }
        match i.initial {
            InitialCondition::Inline if i.values.is_empty() => {
                return Err(invalid("values must be set when initial = \"inline\""))
            }
            InitialCondition::File if i.file.is_none() => {
                return Err(invalid("file must be set when initial = \"file\""))
            }
            _ => {}
        }

        let f = &self.forcing;
        if !(f.epsilon.is_finite() && f.epsilon >= 0.0) {
            return Err(invalid("epsilon must be ≥ 0"));
        }
        positive("nu", f.nu)?;
        let coeffs = [f.a_p, f.b_p].into_iter().chain(f.modes.iter().flat_map(|&(_, a, b)| [a, b]));
        if !coeffs.into_iter().all(f64::is_finite) {
            return Err(invalid("forcing coefficients must be finite"));
        }
        let (lo, hi) = self.dynamic_range();
        if let Some(&(n, _, _)) = f.modes.iter().find(|(n, _, _)| *n < lo || *n > hi) {
            return Err(invalid(format!("forcing.modes index {n} outside the model range [{lo}, {hi}]")));
        }
        if f.periods == 0 {
            return Err(invalid("periods must be ≥ 1"));
        }

        let mf = &self.manifold;
        if let Some(d) = mf.delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid("delta must be ≥ 0"));
            }
        }
        if mf.samples == 0 {
            return Err(invalid("samples must be ≥ 1"));
        }
        positive("manifold.t_end", mf.t_end)?;
        positive("manifold.dt", mf.dt)?;
        positive("manifold.re_threshold", mf.re_threshold)?;
        if mf.stride == 0 {
            return Err(invalid("manifold.stride must be ≥ 1"));
        }
        Ok(())
    }

    pub fn khat(&self) -> Mode {
        Mode::new(self.model.khat[0], self.model.khat[1]).expect("validated")
    }

    pub fn p(&self) -> Mode {
        Mode::new(self.model.p[0], self.model.p[1]).expect("validated")
    }

    /// Chain indices `[−N+2, N+3]` of the line model.
    pub fn dynamic_range(&self) -> (i64, i64) {
        let n = self.integration.truncation;
        (-n + 2, n + 3)
    }

    pub fn linear_subsystem(&self) -> LinearSubsystem {
        LinearSubsystem::new(self.khat(), self.p(), self.model.gamma).expect("validated")
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams::line_model(self.khat(), self.p(), self.integration.truncation, self.model.gamma)
            .expect("validated")
    }

    pub fn forcing_spec(&self) -> ForcingSpec {
        let f = &self.forcing;
        ForcingSpec {
            epsilon: f.epsilon,
            nu: f.nu,
            a_p: f.a_p,
            b_p: f.b_p,
            modes: f.modes.iter().map(|&(n, a, b)| (n, (a, b))).collect::<BTreeMap<_, _>>(),
        }
    }

    pub fn spectral_threshold(&self) -> f64 {
        self.spectral.re_threshold.unwrap_or(0.05 * self.model.gamma.abs())
    }

    pub fn manifold_delta(&self) -> f64 {
        self.manifold.delta.unwrap_or(1e-6 * self.model.gamma.abs())
    }

    /// Initial state of `simulate` and `poincare`.
    pub fn initial_state(&self, params: &ModelParams) -> Result<LineState> {
        let i = &self.integration;
        let data = match i.initial {
            InitialCondition::FixedPoint => return Ok(LineState::fixed_point(params)),
            InitialCondition::Perturbed => {
                let mut rng = ChaCha8Rng::seed_from_u64(i.seed);
                let mut y = LineState::fixed_point(params).into_vec();
                y.iter_mut()
                    .for_each(|x| *x += i.perturbation * rng.gen_range(-1.0..=1.0));
                y
            }
            InitialCondition::Inline => i.values.clone(),
            InitialCondition::File => {
                let path = i.file.as_deref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                text.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| invalid(format!("{}: `{s}` is not a number", path.display())))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if !data.iter().all(|x| x.is_finite()) {
            return Err(invalid("initial state must be finite"));
        }
        LineState::from_flat(params, data).map_err(|e| invalid(format!("initial state: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model.khat, [-3, -2]);
        assert_eq!(cfg.spectral.truncation, 100);
        assert_eq!(cfg.integration.truncation, 30);
        assert_eq!(cfg.integration.dt, 1e-3);
        assert_eq!(cfg.manifold_delta(), 2e-6);
    }

    #[test]
    fn negative_epsilon_rejected() {
        let err = parse_config("[forcing]\nepsilon = -0.1\n").unwrap_err();
        assert_eq!(err.to_string(), "epsilon must be ≥ 0");
    }

    #[test]
    fn zero_p_rejected() {
        let err = parse_config("[model]\np = [0, 0]\n").unwrap_err();
        assert_eq!(err.to_string(), "p must be a nonzero mode");
    }

    #[test]
    fn class_of_origin_rejected() {
        assert!(parse_config("[model]\nkhat = [2, 2]\n").is_err());
        assert!(parse_config("[model]\nkhat = [2, 3]\n").is_ok());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config("[model]\nreynolds = 3\n").unwrap_err();
        assert!(err.to_string().contains("reynolds"), "{err}");
        assert!(parse_config("[plotting]\n").is_err());
    }

    #[test]
    fn parse_error_reports_line() {
        let err = parse_config("[model]\ngamma = 2.0\nkhat = [-3,\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("line 3") || err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_with_overrides(
            "",
            &[
                "model.gamma=1.5".into(),
                "spectral.method=matrix".into(),
                "model.khat = [2, -1]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.model.gamma, 1.5);
        assert_eq!(cfg.spectral.method, SpectrumMethod::Matrix);
        assert_eq!(cfg.model.khat, [2, -1]);
        assert!(parse_with_overrides("", &["gamma=1".into()]).is_err());
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.model.gamma = 0.1 + 0.2;
        cfg.forcing.modes = vec![(2, 0.1, -1e-300), (3, 1.0 / 3.0, 0.0)];
        cfg.manifold.delta = Some(3.7e-7);
        cfg.integration.initial = InitialCondition::Inline;
        cfg.integration.values = vec![std::f64::consts::PI; 3];
        let back = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn perturbed_state_is_seeded() {
        let text = "[integration]\ninitial = \"perturbed\"\nseed = 7\ntruncation = 5\n";
        let cfg = parse_config(text).unwrap();
        let params = cfg.model_params();
        let a = cfg.initial_state(&params).unwrap();
        let b = cfg.initial_state(&params).unwrap();
        assert_eq!(a, b);
        assert!(a.chain_values().iter().any(|&x| x != 0.0));
    }
}
