//! Synthetic `(x, y)` pairs: latents from a known marginal, observations
//! from the Gaussian forward model.

use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardModel, GaussianLinearModel};
use crate::numerics::{sample_trunc_normal_nonneg, Mat, RngState};

pub const GENERATOR_VERSION: &str = "gdn-datagen/1";

/// Paired samples, one row per pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Mat,
    pub y: Mat,
    pub meta: GenerationRecord,
}

/// Enough to regenerate a dataset bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub seed: u64,
    pub stream: String,
    pub generator: String,
    pub prior: LatentPrior,
    pub v2: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        self.y.row(i)
    }

    pub fn ys(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.y.row(i).to_vec()).collect()
    }
}

/// Parameters of the block-structured test images. Gaussian parameters are
/// `(mean, variance)` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockImageParams {
    /// Side of each of the four square blocks; images are `2b × 2b`.
    pub block: usize,
    pub upper_left_diag: (f64, f64),
    pub lower_right_diag: (f64, f64),
    pub upper_right: (f64, f64),
    pub lower_left: (f64, f64),
}

impl Default for BlockImageParams {
    fn default() -> Self {
        Self {
            block: 8,
            upper_left_diag: (20.0, 0.5),
            lower_right_diag: (-10.0, 0.1),
            upper_right: (10.0, 0.1),
            lower_left: (-10.0, 5.0),
        }
    }
}

/// Marginal law of the latent `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentPrior {
    /// Density `∝ exp(−λ₁‖Bx‖₁ − (λ₂/2)‖Bx‖²)`; `b = None` is the identity.
    ElasticNet {
        lambda1: f64,
        lambda2: f64,
        #[serde(skip)]
        b: Option<Mat>,
    },
    BlockImages(BlockImageParams),
}

/// One draw from the elastic-net marginal. Each coordinate of `z = Bx` is
/// a random sign times a magnitude with density `∝ exp(−λ₁t − λ₂t²/2)` on
/// `[0, ∞)`: a truncated `N(−λ₁/λ₂, 1/λ₂)` when `λ₂ > 0`, else `Exp(λ₁)`.
pub fn sample_mu_elastic_net(lambda1: f64, lambda2: f64, b: Option<&Mat>, d: usize, rng: &mut RngState) -> Result<Vec<f64>> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || (lambda1 == 0.0 && lambda2 == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "elastic-net density needs λ₁ > 0 or λ₂ > 0, got ({lambda1}, {lambda2})"
        )));
    }
    let z: Vec<f64> = (0..d)
        .map(|_| {
            let mag = if lambda2 > 0.0 {
                sample_trunc_normal_nonneg(-lambda1 / lambda2, (1.0 / lambda2).sqrt(), rng)
            } else {
                rng.sample(Exp::new(lambda1).expect("positive rate"))
            };
            if rng.uniform() < 0.5 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    match b {
        Some(b) => {
            if b.rows() != d || b.cols() != d {
                return Err(Error::dim(
                    "sample_mu_elastic_net",
                    format!("{d}x{d} transform"),
                    format!("{}x{}", b.rows(), b.cols()),
                ));
            }
            b.matvec_t(&z)
        }
        None => Ok(z),
    }
}

/// `n` vectorized `2b × 2b` images: diagonal upper-left and lower-right
/// blocks (off-diagonal entries exactly zero) and dense off-diagonal blocks.
pub fn generate_block_images(n: usize, params: &BlockImageParams, rng: &mut RngState) -> Result<Mat> {
    if n == 0 || params.block == 0 {
        return Err(Error::InvalidArgument("need at least one image of positive size".into()));
    }
    let b = params.block;
    let side = 2 * b;
    let mut data = Vec::with_capacity(n * side * side);
    for i in 0..n {
        let mut r = rng.split(i as u64);
        let mut draw = |(m, v): (f64, f64)| m + v.sqrt() * r.normal();
        let mut img = vec![0.0; side * side];
        for k in 0..b {
            img[k * side + k] = draw(params.upper_left_diag);
        }
        for k in 0..b {
            img[(b + k) * side + b + k] = draw(params.lower_right_diag);
        }
        for row in 0..b {
            for col in b..side {
                img[row * side + col] = draw(params.upper_right);
            }
        }
        for row in b..side {
            for col in 0..b {
                img[row * side + col] = draw(params.lower_left);
            }
        }
        data.extend(img);
    }
    Mat::new(n, side * side, data)
}

/// `n` pairs with `x_i ~ prior` and `y_i = A x_i + v ε_i`. Row `i` draws
/// from its own split stream, so rows are independent of `n`.
pub fn generate_dataset(fm: &GaussianLinearModel, prior: &LatentPrior, n: usize, rng: &RngState) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be positive".into()));
    }
    let dx = fm.dim_x();
    let xs = match prior {
        LatentPrior::ElasticNet { lambda1, lambda2, b } => {
            let mut data = Vec::with_capacity(n * dx);
            for i in 0..n {
                let mut r = rng.split(2 * i as u64);
                data.extend(sample_mu_elastic_net(*lambda1, *lambda2, b.as_ref(), dx, &mut r)?);
            }
            Mat::new(n, dx, data)?
        }
        LatentPrior::BlockImages(p) => {
            let m = generate_block_images(n, p, &mut rng.split(u64::MAX - 1))?;
            if m.cols() != dx {
                return Err(Error::dim("generate_dataset", format!("images with {dx} pixels"), m.cols()));
            }
            m
        }
    };
    let v = fm.v2().sqrt();
    let mut ydata = Vec::with_capacity(n * fm.dim_y());
    for i in 0..n {
        let mut r = rng.split(2 * i as u64 + 1);
        let ax = fm.operator().matvec(xs.row(i))?;
        ydata.extend(ax.into_iter().map(|m| m + v * r.normal()));
    }
    let y = Mat::new(n, fm.dim_y(), ydata)?;
    Ok(Dataset {
        x: xs,
        y,
        meta: GenerationRecord {
            seed: rng.seed(),
            stream: rng.snapshot().stream,
            generator: GENERATOR_VERSION.to_string(),
            prior: prior.clone(),
            v2: fm.v2(),
        },
    })
}
