//! Gradient descent networks: `g_W(y) = F_{y,W}^{D'}(x⁰)` with
//! `F_{y,W}(x) = H_W(x − γ∇f(y|x))` and one weight set shared by all stages.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::fnn::{Fnn, FnnParams, Tape};
use crate::forward::{ForwardModel, GaussianLinearModel};
use crate::numerics::{norm2, Mat};

/// Something that maps an observation `y` to an estimate of `x` through a
/// network with weights `W`, and can backpropagate a residual into `W`.
pub trait Regressor: Sync {
    fn fnn(&self) -> &Fnn;

    fn predict(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>>;

    /// Adds `scale · ∂/∂W ⟨x − pred, pred⟩|_{pred fixed}`, i.e. the gradient of
    /// `−(scale/2)‖x − g_W(y)‖²`, into `grad`, and returns `‖x − g_W(y)‖²`.
    fn accumulate_grad(&self, w: &FnnParams, y: &[f64], x: &[f64], scale: f64, grad: &mut [f64]) -> Result<f64>;

    /// Number of backward passes performed so far.
    fn backward_count(&self) -> u64;
}

/// The unrolled estimator.
#[derive(Debug)]
pub struct GdnModel {
    fm: GaussianLinearModel,
    fnn: Fnn,
    gamma: f64,
    depth: usize,
    x0: Vec<f64>,
    // I − γ AᵀA/v², the Jacobian of every gradient step
    step_jacobian: Mat,
    backward_calls: AtomicU64,
}

impl Clone for GdnModel {
    fn clone(&self) -> Self {
        Self {
            fm: self.fm.clone(),
            fnn: self.fnn.clone(),
            gamma: self.gamma,
            depth: self.depth,
            x0: self.x0.clone(),
            step_jacobian: self.step_jacobian.clone(),
            backward_calls: AtomicU64::new(0),
        }
    }
}

/// Everything the backward pass needs from one unrolled forward pass.
#[derive(Clone, Debug)]
pub struct GdnTape {
    stages: Vec<Tape>,
    fingerprint: u64,
    /// `max_k ‖x_k‖` over the unroll, `x⁰` included.
    pub max_iterate_norm: f64,
}

impl GdnModel {
    /// `gamma` must lie in `(0, gamma_cap]`, where the cap is the caller's
    /// multiplier over `1/M`.
    pub fn new(fm: GaussianLinearModel, fnn: Fnn, gamma: f64, depth: usize, x0: Option<Vec<f64>>) -> Result<Self> {
        let dx = fm.dim_x();
        if fnn.input_dim() != dx || fnn.output_dim() != dx {
            return Err(Error::InvalidArgument(format!(
                "H_W must map R^{dx} to R^{dx}, got R^{} to R^{}",
                fnn.input_dim(),
                fnn.output_dim()
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {gamma}")));
        }
        if depth == 0 {
            return Err(Error::InvalidArgument("unrolling depth must be at least 1".into()));
        }
        let x0 = x0.unwrap_or_else(|| vec![0.0; dx]);
        if x0.len() != dx {
            return Err(Error::dim("GdnModel::new", format!("x0 of length {dx}"), x0.len()));
        }
        let g = fm.gram();
        let step_jacobian = Mat::from_fn(dx, dx, |i, j| if i == j { 1.0 } else { 0.0 } - gamma * g.get(i, j));
        Ok(Self {
            fm,
            fnn,
            gamma,
            depth,
            x0,
            step_jacobian,
            backward_calls: AtomicU64::new(0),
        })
    }

    pub fn forward_model(&self) -> &GaussianLinearModel {
        &self.fm
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// Same model at a different unrolling depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        Self::new(self.fm.clone(), self.fnn.clone(), self.gamma, depth, Some(self.x0.clone()))
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.fm.dim_y() {
            return Err(Error::dim("gdn_forward", format!("y of length {}", self.fm.dim_y()), y.len()));
        }
        Ok(())
    }

    // x − γ(Gx − b), computed as (I − γG)x + γb
    fn gradient_step(&self, x: &[f64], gb: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; x.len()];
        self.step_jacobian.matvec_into(x, &mut z);
        z.iter_mut().zip(gb).for_each(|(zi, bi)| *zi += bi);
        z
    }

    fn scaled_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut b = self.fm.adjoint(y)?;
        b.iter_mut().for_each(|v| *v *= self.gamma);
        Ok(b)
    }

    /// `g_W(y)` without a tape.
    pub fn predict(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>> {
        self.check_y(y)?;
        let gb = self.scaled_adjoint(y)?;
        let mut x = self.x0.clone();
        for stage in 0..self.depth {
            let z = self.gradient_step(&x, &gb);
            x = self.fnn.predict(w, &z)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { stage });
            }
        }
        Ok(x)
    }

    pub fn forward(&self, w: &FnnParams, y: &[f64]) -> Result<(Vec<f64>, GdnTape)> {
        self.check_y(y)?;
        if w.len() != self.fnn.param_count() {
            return Err(Error::dim("gdn_forward", self.fnn.param_count(), w.len()));
        }
        let gb = self.scaled_adjoint(y)?;
        let mut x = self.x0.clone();
        let mut max_norm = norm2(&x);
        let mut stages = Vec::with_capacity(self.depth);
        for stage in 0..self.depth {
            let z = self.gradient_step(&x, &gb);
            let tape = self.fnn.forward_tape(w.as_slice(), &z)?;
            x = tape.output().to_vec();
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { stage });
            }
            max_norm = max_norm.max(norm2(&x));
            stages.push(tape);
        }
        Ok((
            x,
            GdnTape {
                stages,
                fingerprint: param_fingerprint(w),
                max_iterate_norm: max_norm,
            },
        ))
    }

    /// Gradient of `⟨residual, g_W(y)⟩` with respect to `W`, summed over all
    /// stages that share `W`.
    pub fn backward(&self, tape: &GdnTape, w: &FnnParams, residual: &[f64]) -> Result<FnnParams> {
        if tape.fingerprint != param_fingerprint(w) || tape.stages.len() != self.depth {
            return Err(Error::StaleTape);
        }
        let mut grad = self.fnn.zeros();
        self.backward_into(tape, w, residual, grad.as_mut_slice())?;
        Ok(grad)
    }

    fn backward_into(&self, tape: &GdnTape, w: &FnnParams, residual: &[f64], grad: &mut [f64]) -> Result<()> {
        self.backward_calls.fetch_add(1, Ordering::Relaxed);
        let mut up = residual.to_vec();
        for (k, stage) in tape.stages.iter().enumerate().rev() {
            let gz = self.fnn.backward_into(stage, w.as_slice(), &up, grad)?;
            if k > 0 {
                // the Jacobian is symmetric, so its transpose is itself
                self.step_jacobian.matvec_into(&gz, &mut up);
            }
        }
        Ok(())
    }
}

fn param_fingerprint(w: &FnnParams) -> u64 {
    w.as_slice().iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, v| {
        (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3).rotate_left(7)
    })
}

impl Regressor for GdnModel {
    fn fnn(&self) -> &Fnn {
        &self.fnn
    }

    fn predict(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>> {
        GdnModel::predict(self, w, y)
    }

    fn accumulate_grad(&self, w: &FnnParams, y: &[f64], x: &[f64], scale: f64, grad: &mut [f64]) -> Result<f64> {
        let (pred, tape) = self.forward(w, y)?;
        let resid: Vec<f64> = x.iter().zip(&pred).map(|(a, b)| a - b).collect();
        let sq = resid.iter().map(|r| r * r).sum();
        let up: Vec<f64> = resid.iter().map(|r| scale * r).collect();
        self.backward_into(&tape, w, &up, grad)?;
        Ok(sq)
    }

    fn backward_count(&self) -> u64 {
        self.backward_calls.load(Ordering::Relaxed)
    }
}

/// Plain `H_W(y)`: the same kind of network regressing `x` directly on the
/// observation, with no knowledge of the forward model.
#[derive(Debug)]
pub struct FnnBaseline {
    fnn: Fnn,
    backward_calls: AtomicU64,
}

impl Clone for FnnBaseline {
    fn clone(&self) -> Self {
        Self::new(self.fnn.clone())
    }
}

impl FnnBaseline {
    pub fn new(fnn: Fnn) -> Self {
        Self {
            fnn,
            backward_calls: AtomicU64::new(0),
        }
    }
}

pub fn fnn_baseline_predict(fnn: &Fnn, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>> {
    fnn.predict(w, y)
}

impl Regressor for FnnBaseline {
    fn fnn(&self) -> &Fnn {
        &self.fnn
    }

    fn predict(&self, w: &FnnParams, y: &[f64]) -> Result<Vec<f64>> {
        fnn_baseline_predict(&self.fnn, w, y)
    }

    fn accumulate_grad(&self, w: &FnnParams, y: &[f64], x: &[f64], scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.backward_calls.fetch_add(1, Ordering::Relaxed);
        let tape = self.fnn.forward_tape(w.as_slice(), y)?;
        let resid: Vec<f64> = x.iter().zip(tape.output()).map(|(a, b)| a - b).collect();
        let sq = resid.iter().map(|r| r * r).sum();
        let up: Vec<f64> = resid.iter().map(|r| scale * r).collect();
        self.fnn.backward_into(&tape, w.as_slice(), &up, grad)?;
        Ok(sq)
    }

    fn backward_count(&self) -> u64 {
        self.backward_calls.load(Ordering::Relaxed)
    }
}
