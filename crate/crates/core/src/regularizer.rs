//! Convex penalties with closed-form proximal maps.

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// A convex penalty `R` with a computable proximal operator
/// `prox(x, γ) = argmin_u γR(u) + ½‖u − x‖²`.
pub trait Regularizer {
    fn value(&self, x: &[f64]) -> f64;
    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64>;
}

/// `λ₁‖x‖₁ + (λ₂/2)‖x‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticNet {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ElasticNet {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "elastic-net weights must be finite and nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Scalar shrinkage `s_γ(t) = relu((t−γλ₁)/(1+γλ₂)) − relu((−t−γλ₁)/(1+γλ₂))`.
    #[inline]
    pub fn shrink(&self, t: f64, gamma: f64) -> f64 {
        let denom = 1.0 + gamma * self.lambda2;
        let thr = gamma * self.lambda1;
        ((t - thr) / denom).max(0.0) - ((-t - thr) / denom).max(0.0)
    }

    pub fn prox_elastic_net(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        assert!(gamma > 0.0, "prox step must be positive");
        x.iter().map(|&t| self.shrink(t, gamma)).collect()
    }
}

impl Regularizer for ElasticNet {
    fn value(&self, x: &[f64]) -> f64 {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let l2: f64 = x.iter().map(|v| v * v).sum();
        self.lambda1 * l1 + 0.5 * self.lambda2 * l2
    }

    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        self.prox_elastic_net(x, gamma)
    }
}

/// `R(x) = R₀(Bx)` with `R₀` an elastic net and `B` orthogonal. `B = None`
/// stands for the identity and skips the two transforms.
#[derive(Clone, Debug)]
pub struct OrthoRegularizer {
    base: ElasticNet,
    b: Option<Mat>,
}

impl OrthoRegularizer {
    pub fn new(base: ElasticNet, b: Mat) -> Result<Self> {
        if b.rows() != b.cols() {
            return Err(Error::dim(
                "OrthoRegularizer::new",
                "square B",
                format!("{}x{}", b.rows(), b.cols()),
            ));
        }
        let defect = b.orthogonality_defect();
        if defect >= 1e-10 {
            return Err(Error::InvalidArgument(format!("B is not orthogonal: max |BᵀB − I| = {defect:e}")));
        }
        Ok(Self { base, b: Some(b) })
    }

    pub fn identity(base: ElasticNet) -> Self {
        Self { base, b: None }
    }

    pub fn base(&self) -> &ElasticNet {
        &self.base
    }

    pub fn transform(&self) -> Option<&Mat> {
        self.b.as_ref()
    }

    fn to_coeffs(&self, x: &[f64]) -> Vec<f64> {
        match &self.b {
            Some(b) => b.matvec(x).expect("dimension of x must match B"),
            None => x.to_vec(),
        }
    }

    /// `Bᵀ s_γ(Bx)`.
    pub fn prox_ortho(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        let z = self.base.prox_elastic_net(&self.to_coeffs(x), gamma);
        match &self.b {
            Some(b) => b.matvec_t(&z).expect("dimension of x must match B"),
            None => z,
        }
    }
}

impl Regularizer for OrthoRegularizer {
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(&self.to_coeffs(x))
    }

    fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        self.prox_ortho(x, gamma)
    }
}
