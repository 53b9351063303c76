use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fnn::{Fnn, InitScheme, LayerSpec};

/// Top-level experiment description, read from strict JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub prior: PriorConfig,
    pub sampler: SamplerConfig,
    /// Number of trailing retained samples scored by `eval`.
    #[serde(default = "default_eval_last_k")]
    pub eval_last_k: usize,
    /// Test pairs scored for the `test_err` metrics column.
    #[serde(default = "default_monitor_test")]
    pub monitor_test: usize,
    /// PGD horizon for contraction estimates.
    #[serde(default = "default_contraction_horizon")]
    pub contraction_horizon: usize,
    pub output_dir: String,
}

fn default_eval_last_k() -> usize {
    500
}

fn default_monitor_test() -> usize {
    100
}

fn default_contraction_horizon() -> usize {
    2000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentKind {
    ElasticNet,
    BlockImages,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub v2: f64,
    pub latent: LatentKind,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
    /// Random orthogonal `B` in the regularizer `R₀(Bx)`.
    #[serde(default)]
    pub ortho_b: bool,
    /// Gaussian blur operator instead of an i.i.d. Gaussian matrix.
    #[serde(default)]
    pub blur: bool,
    #[serde(default)]
    pub blur_variance: f64,
    #[serde(default)]
    pub image_height: usize,
    #[serde(default)]
    pub image_width: usize,
    /// `(mean, variance)` pairs for block images; defaults when absent.
    #[serde(default)]
    pub block_params: Option<crate::datagen::BlockImageParams>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaMode {
    /// `γ = multiplier / M`; the plain `auto` mode is `multiplier = 1`.
    Auto {
        multiplier: f64,
    },
    Explicit {
        value: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    HeNormal,
    Zeros,
    /// Exact elastic-net prox at the run's `γ`, `λ₁`, `λ₂`.
    ExactProx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: Vec<LayerSpec>,
    pub depth_unroll: usize,
    pub gamma: GammaMode,
    /// `None` starts the unroll at zero.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub init: InitKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub u: f64,
    /// `None` means `n_train`.
    #[serde(default)]
    pub rho0: Option<f64>,
    pub rho1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub sigma2: f64,
    pub step_h: f64,
    pub batch_size: usize,
    pub iters: u64,
    pub thin: u64,
    #[serde(default = "default_flip_fraction")]
    pub flip_fraction: f64,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u64,
}

fn default_flip_fraction() -> f64 {
    0.05
}

fn default_checkpoint_every() -> u64 {
    1000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn rho0(&self) -> f64 {
        self.prior.rho0.unwrap_or(self.data.n_train as f64)
    }

    pub fn build_fnn(&self) -> Result<Fnn> {
        Fnn::new(self.data.d_x, self.model.layers.clone()).map_err(|e| Error::config("model.layers", e.to_string()))
    }

    /// Checks every cross-field constraint before any computation.
    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        let pos = |field: &str, v: usize| {
            if v == 0 {
                Err(Error::config(field, "must be positive"))
            } else {
                Ok(())
            }
        };
        pos("data.n_train", d.n_train)?;
        pos("data.n_test", d.n_test)?;
        pos("data.d_x", d.d_x)?;
        pos("data.d_y", d.d_y)?;
        if !(d.v2 > 0.0 && d.v2.is_finite()) {
            return Err(Error::config("data.v2", "must be positive and finite"));
        }
        if d.blur {
            pos("data.image_height", d.image_height)?;
            pos("data.image_width", d.image_width)?;
            if !(d.blur_variance > 0.0) {
                return Err(Error::config("data.blur_variance", "must be positive when blur is set"));
            }
            let px = d.image_height * d.image_width;
            if d.d_x != px {
                return Err(Error::config(
                    "data.d_x",
                    format!("blur needs d_x = height·width = {px}, got {}", d.d_x),
                ));
            }
            if d.d_y != px {
                return Err(Error::config(
                    "data.d_y",
                    format!("blur needs d_y = height·width = {px}, got {}", d.d_y),
                ));
            }
        }
        match d.latent {
            LatentKind::ElasticNet => {
                if !(d.lambda1 >= 0.0 && d.lambda2 >= 0.0) || (d.lambda1 == 0.0 && d.lambda2 == 0.0) {
                    return Err(Error::config("data.lambda1", "elastic-net latents need λ₁ > 0 or λ₂ > 0, both ≥ 0"));
                }
            }
            LatentKind::BlockImages => {
                let side = 2 * d.block_params.unwrap_or_default().block;
                if d.d_x != side * side {
                    return Err(Error::config(
                        "data.d_x",
                        format!("block images are {side}x{side}, so d_x must be {}, got {}", side * side, d.d_x),
                    ));
                }
                if d.ortho_b {
                    return Err(Error::config("data.ortho_b", "only meaningful for elastic-net latents"));
                }
            }
        }

        let m = &self.model;
        let fnn = self.build_fnn()?;
        if fnn.output_dim() != d.d_x {
            return Err(Error::config(
                "model.layers",
                format!("network maps to {} values but d_x = {}", fnn.output_dim(), d.d_x),
            ));
        }
        pos("model.depth_unroll", m.depth_unroll)?;
        match m.gamma {
            GammaMode::Auto { multiplier } if !(multiplier > 0.0 && multiplier.is_finite()) => {
                return Err(Error::config("model.gamma", "multiplier must be positive"));
            }
            GammaMode::Explicit { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(Error::config("model.gamma", "value must be positive"));
            }
            _ => {}
        }
        if let Some(x0) = &m.x0 {
            if x0.len() != d.d_x {
                return Err(Error::config("model.x0", format!("length {} but d_x = {}", x0.len(), d.d_x)));
            }
        }
        if m.init == InitKind::ExactProx && d.latent != LatentKind::ElasticNet {
            return Err(Error::config("model.init", "exact_prox needs elastic-net latents"));
        }

        let p = &self.prior;
        if !(p.u >= 1.0) {
            return Err(Error::config("prior.u", "must be ≥ 1"));
        }
        if !(p.rho1 > 0.0) {
            return Err(Error::config("prior.rho1", "must be positive"));
        }
        if !(self.rho0() > p.rho1) {
            return Err(Error::config("prior.rho0", "must exceed rho1"));
        }

        let s = &self.sampler;
        if !(s.sigma2 > 0.0) {
            return Err(Error::config("sampler.sigma2", "must be positive"));
        }
        if !(s.step_h > 0.0) {
            return Err(Error::config("sampler.step_h", "must be positive"));
        }
        if s.batch_size == 0 || s.batch_size > d.n_train {
            return Err(Error::config(
                "sampler.batch_size",
                format!("must lie in [1, n_train = {}]", d.n_train),
            ));
        }
        if s.thin == 0 {
            return Err(Error::config("sampler.thin", "must be positive"));
        }
        if s.checkpoint_every == 0 {
            return Err(Error::config("sampler.checkpoint_every", "must be positive"));
        }
        if !(0.0..=1.0).contains(&s.flip_fraction) {
            return Err(Error::config("sampler.flip_fraction", "must lie in [0, 1]"));
        }
        if self.eval_last_k == 0 {
            return Err(Error::config("eval_last_k", "must be positive"));
        }
        Ok(())
    }

    /// Hash of everything that determines the generated data.
    pub fn data_hash(&self) -> String {
        let v = serde_json::json!({ "seed": self.seed, "data": self.data });
        sha256_hex(v.to_string().as_bytes())
    }

    /// Hash of everything that determines a run, output location excluded.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir.clear();
        sha256_hex(serde_json::to_string(&c).expect("serializable").as_bytes())
    }

    pub fn init_scheme(&self, gamma: f64) -> InitScheme {
        match self.model.init {
            InitKind::HeNormal => InitScheme::HeNormal,
            InitKind::Zeros => InitScheme::Zeros,
            InitKind::ExactProx => InitScheme::ExactProx {
                gamma,
                lambda1: self.data.lambda1,
                lambda2: self.data.lambda2,
            },
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
