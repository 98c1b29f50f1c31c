//! Run configuration: one TOML file, overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::preprocess::preset;
use crate::error::{Error, Result};
use crate::eval_harness::{EntityStrategy, ModelConfig, ModelKind, ReplayOptions, VectorInit};

pub const OUTPUT_DIR_ENV: &str = "DCF_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "runs";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    path: Option<PathBuf>,
    preset: Option<String>,
    train_frac: Option<f64>,
    valid_frac: Option<f64>,
    n_chunks: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<ModelKind>,
    rank: Option<usize>,
    ranks: Option<[usize; 3]>,
    window: Option<usize>,
    power: Option<f64>,
    init: Option<VectorInit>,
    sigma: Option<f64>,
    new_entities: Option<EntityStrategy>,
    hooi_max_iters: Option<usize>,
    hooi_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    top_n: Option<usize>,
    stability_users: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    data: RawData,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    eval: RawEval,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub kind: Option<ModelKind>,
    pub output_dir: Option<PathBuf>,
    pub data_path: Option<PathBuf>,
    pub rank: Option<usize>,
    pub ranks: Option<[usize; 3]>,
    pub window: Option<usize>,
    pub power: Option<f64>,
    pub init: Option<VectorInit>,
    pub sigma: Option<f64>,
    pub n_chunks: Option<usize>,
    pub top_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataConfig {
    pub path: PathBuf,
    pub train_frac: f64,
    pub valid_frac: f64,
    pub n_chunks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub eval: ReplayOptions,
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing key `{key}`"))
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        Self::resolve(raw, overrides)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, overrides)?;
        if cfg.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data.path = dir.join(&cfg.data.path);
            }
        }
        Ok(cfg)
    }

    fn resolve(raw: RawConfig, o: &Overrides) -> Result<Self> {
        let seed = o.seed.or(raw.seed).ok_or_else(|| missing("seed"))?;
        let p = raw.data.preset.as_deref().map(preset).transpose()?;
        let data = DataConfig {
            path: o.data_path.clone().or(raw.data.path).ok_or_else(|| missing("data.path"))?,
            train_frac: raw
                .data
                .train_frac
                .or(p.map(|p| p.train_frac))
                .ok_or_else(|| missing("data.train_frac"))?,
            valid_frac: raw
                .data
                .valid_frac
                .or(p.map(|p| p.valid_frac))
                .ok_or_else(|| missing("data.valid_frac"))?,
            n_chunks: o
                .n_chunks
                .or(raw.data.n_chunks)
                .or(p.map(|p| p.n_chunks))
                .ok_or_else(|| missing("data.n_chunks"))?,
        };

        let m = raw.model;
        let kind = o.kind.or(m.kind).ok_or_else(|| missing("model.kind"))?;
        let mut model = ModelConfig::new(kind, seed);
        if let Some(w) = p.map(|p| p.window) {
            model.window = w;
        }
        model.rank = o.rank.or(m.rank).unwrap_or(model.rank);
        model.ranks = o.ranks.or(m.ranks).unwrap_or(model.ranks);
        model.window = o.window.or(m.window).unwrap_or(model.window);
        model.power = o.power.or(m.power).unwrap_or(model.power);
        model.strategy.init = o.init.or(m.init).unwrap_or(model.strategy.init);
        model.strategy.sigma = o.sigma.or(m.sigma).unwrap_or(model.strategy.sigma);
        model.strategy.new_entities = m.new_entities.unwrap_or(model.strategy.new_entities);
        model.hooi_max_iters = m.hooi_max_iters.unwrap_or(model.hooi_max_iters);
        model.hooi_tol = m.hooi_tol.unwrap_or(model.hooi_tol);

        let defaults = ReplayOptions::default();
        let eval = ReplayOptions {
            top_n: o.top_n.or(raw.eval.top_n).unwrap_or(defaults.top_n),
            stability_users: raw.eval.stability_users.unwrap_or(defaults.stability_users),
        };
        let output_dir = o
            .output_dir
            .clone()
            .or(raw.output_dir)
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        let cfg = RunConfig {
            seed,
            output_dir,
            data,
            model,
            eval,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |key: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("`{key}` must lie in (0, 1), got {v}")))
            }
        };
        frac("data.train_frac", self.data.train_frac)?;
        frac("data.valid_frac", self.data.valid_frac)?;
        if self.eval.top_n == 0 {
            return Err(Error::Config("`eval.top_n` must be >= 1".into()));
        }
        if self.model.strategy.init == VectorInit::Gaussian && !(self.model.strategy.sigma > 0.0) {
            return Err(Error::Config("`model.sigma` must be > 0 for gaussian init".into()));
        }
        self.model.validate()
    }

    /// JSON echo written next to every report.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}
