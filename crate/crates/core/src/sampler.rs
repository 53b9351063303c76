//! Spike-and-slab posterior over `(Λ, W)` and a sparse asynchronous SGLD
//! sampler for it.
//!
//! Prior: `Λ_k ~ Ber(1/(1+q^{u+1}))` independently, then `W_k | Λ_k` is
//! `N(0, 1/ρ₁)` (slab) when `Λ_k = 1` and `N(0, 1/ρ₀)` (spike) otherwise.
//! Likelihood: `exp(−Σ‖x_i − g_{W⊙Λ}(y_i)‖²/(2σ²))`.
//!
//! One sampler iteration costs two minibatch backpropagations:
//!
//! 1. **Λ-update.** A random subset of `⌈flip_fraction·q⌉` coordinates is
//!    resampled from its Gibbs conditional, with the likelihood change of
//!    a flip taken to first order, `G_k·w_k`, where `G` is the likelihood
//!    gradient with respect to the effective weights `θ = W⊙Λ`.
//! 2. **W-update.** Active coordinates take one Langevin step on the
//!    minibatch log-posterior; inactive ones are redrawn exactly from the
//!    spike.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::fnn::{apply_mask, FnnParams, Mask};
use crate::gdn::Regressor;
use crate::numerics::{dist2, RngState};

/// `(u, ρ₀, ρ₁, q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeSlabPrior {
    pub u: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub q: usize,
}

impl SpikeSlabPrior {
    pub fn new(u: f64, rho0: f64, rho1: f64, q: usize) -> Result<Self> {
        if !(u >= 1.0) {
            return Err(Error::InvalidArgument(format!("sparsity exponent u must be ≥ 1, got {u}")));
        }
        if !(rho1 > 0.0 && rho0 > rho1) {
            return Err(Error::InvalidArgument(format!("need ρ₀ > ρ₁ > 0, got ρ₀={rho0}, ρ₁={rho1}")));
        }
        if q < 2 {
            return Err(Error::InvalidArgument(format!("parameter count must be ≥ 2, got {q}")));
        }
        Ok(Self { u, rho0, rho1, q })
    }

    /// Log-density of `(Λ, W)` up to the normalizing constant of `Λ`.
    pub fn log_prior(&self, w: &FnnParams, m: &Mask) -> f64 {
        let ln_q = (self.q as f64).ln();
        let half_ln = |rho: f64| 0.5 * (rho / (2.0 * std::f64::consts::PI)).ln();
        let (c1, c0) = (half_ln(self.rho1), half_ln(self.rho0));
        w.as_slice()
            .iter()
            .zip(m.as_slice())
            .map(|(&wk, &on)| {
                if on == 1 {
                    -(self.u + 1.0) * ln_q + c1 - 0.5 * self.rho1 * wk * wk
                } else {
                    c0 - 0.5 * self.rho0 * wk * wk
                }
            })
            .sum()
    }

    /// `log π(Λ_k=1, w) − log π(Λ_k=0, w)`.
    pub fn toggle_log_odds(&self, wk: f64) -> f64 {
        -(self.u + 1.0) * (self.q as f64).ln() + 0.5 * (self.rho1 / self.rho0).ln() - 0.5 * (self.rho1 - self.rho0) * wk * wk
    }

    /// Marginal prior probability that a coordinate is active,
    /// `1/(1+q^{u+1})`.
    pub fn activation_probability(&self) -> f64 {
        1.0 / (1.0 + ((self.u + 1.0) * (self.q as f64).ln()).exp())
    }

    /// `∂/∂w log π(W | Λ)`, coordinatewise.
    pub fn grad_log_prior(&self, wk: f64, active: bool) -> f64 {
        if active {
            -self.rho1 * wk
        } else {
            -self.rho0 * wk
        }
    }
}

/// Everything that defines the target posterior.
pub struct PosteriorSpec<'a, M: Regressor> {
    pub prior: SpikeSlabPrior,
    /// Likelihood variance `σ²`.
    pub sigma2: f64,
    pub model: &'a M,
    /// Training pairs; `None` samples the prior.
    pub data: Option<&'a Dataset>,
}

impl<'a, M: Regressor> PosteriorSpec<'a, M> {
    pub fn new(prior: SpikeSlabPrior, sigma2: f64, model: &'a M, data: Option<&'a Dataset>) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!("σ² must be positive, got {sigma2}")));
        }
        if prior.q != model.fnn().param_count() {
            return Err(Error::dim("PosteriorSpec", format!("q = {}", model.fnn().param_count()), prior.q));
        }
        Ok(Self {
            prior,
            sigma2,
            model,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.data.map_or(0, |d| d.len())
    }
}

/// Minibatch log-likelihood estimate and its gradient with respect to the
/// effective weights `θ`, scaled by `n/|batch|`.
fn theta_grad<M: Regressor>(ps: &PosteriorSpec<M>, theta: &FnnParams, batch: &[usize]) -> Result<(f64, Vec<f64>)> {
    let q = theta.len();
    let Some(data) = ps.data else {
        return Ok((0.0, vec![0.0; q]));
    };
    if batch.is_empty() {
        return Ok((0.0, vec![0.0; q]));
    }
    let scale = data.len() as f64 / batch.len() as f64;
    let inv_s2 = 1.0 / ps.sigma2;
    // per-sample gradients in parallel, then a fixed-order sum
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|&i| {
            let mut g = vec![0.0; q];
            let sq = ps
                .model
                .accumulate_grad(theta, data.y_row(i), data.x_row(i), scale * inv_s2, &mut g)?;
            Ok((sq, g))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; q];
    let mut sse = 0.0;
    for (sq, g) in parts {
        sse += sq;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((-0.5 * scale * inv_s2 * sse, grad))
}

/// Unbiased minibatch estimate of the log-likelihood at `W⊙Λ` and its
/// gradient with respect to `W` (zero wherever `Λ = 0`).
pub fn log_lik_and_grad<M: Regressor>(ps: &PosteriorSpec<M>, w: &FnnParams, m: &Mask, batch: &[usize]) -> Result<(f64, FnnParams)> {
    if let Some(data) = ps.data {
        if let Some(&bad) = batch.iter().find(|&&i| i >= data.len()) {
            return Err(Error::InvalidArgument(format!(
                "batch index {bad} out of range for {} pairs",
                data.len()
            )));
        }
    }
    let theta = apply_mask(w, m)?;
    let (ll, g) = theta_grad(ps, &theta, batch)?;
    let masked: Vec<f64> = g
        .iter()
        .zip(m.as_slice())
        .map(|(&gk, &on)| if on == 1 { gk } else { 0.0 })
        .collect();
    Ok((ll, w.with_data(masked)?))
}

/// Full sampler state; together with the posterior it determines the rest
/// of the chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub w: FnnParams,
    pub mask: Mask,
    pub iter: u64,
    pub step_h: f64,
    pub batch_size: usize,
    pub flip_fraction: f64,
    pub rng: RngState,
    /// Minibatch log-likelihood from the latest W-update.
    pub last_loglik: f64,
}

impl ChainState {
    pub fn new(w: FnnParams, mask: Mask, step_h: f64, batch_size: usize, flip_fraction: f64, rng: RngState) -> Result<Self> {
        if !(step_h > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {step_h}")));
        }
        if !(0.0..=1.0).contains(&flip_fraction) {
            return Err(Error::InvalidArgument(format!(
                "flip fraction must lie in [0, 1], got {flip_fraction}"
            )));
        }
        if w.len() != mask.len() {
            return Err(Error::dim("ChainState::new", w.len(), mask.len()));
        }
        Ok(Self {
            w,
            mask,
            iter: 0,
            step_h,
            batch_size,
            flip_fraction,
            rng,
            last_loglik: 0.0,
        })
    }

    pub fn active_fraction(&self) -> f64 {
        self.mask.count_ones() as f64 / self.mask.len() as f64
    }

    /// `W ⊙ Λ`.
    pub fn effective_weights(&self) -> FnnParams {
        apply_mask(&self.w, &self.mask).expect("congruent by construction")
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn draw_batch(rng: &mut RngState, n: usize, size: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut idx = sample_indices(rng, n, size.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// One sampler iteration, in place.
pub fn sasgld_step<M: Regressor>(ps: &PosteriorSpec<M>, s: &mut ChainState) -> Result<()> {
    let q = s.w.len();
    let n = ps.n();
    if n > 0 && s.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }

    // Λ-update
    let flips = (s.flip_fraction * q as f64).ceil() as usize;
    if flips > 0 {
        let chosen = sample_indices(&mut s.rng, q, flips.min(q)).into_vec();
        let batch = draw_batch(&mut s.rng, n, s.batch_size);
        let (_, g) = theta_grad(ps, &s.effective_weights(), &batch)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iter: s.iter,
                msg: "non-finite likelihood gradient in the Λ-update; step too large?".into(),
            });
        }
        for k in chosen {
            let wk = s.w.as_slice()[k];
            let logit = ps.prior.toggle_log_odds(wk) + g[k] * wk;
            let on = s.rng.uniform() < sigmoid(logit);
            s.mask.set(k, on);
        }
    }

    // W-update
    let batch = draw_batch(&mut s.rng, n, s.batch_size);
    let (ll, g) = theta_grad(ps, &s.effective_weights(), &batch)?;
    let h = s.step_h;
    let sqrt_h = h.sqrt();
    let spike_sd = 1.0 / ps.prior.rho0.sqrt();
    let mask = s.mask.as_slice();
    for (k, wk) in s.w.as_mut_slice().iter_mut().enumerate() {
        let xi = s.rng.normal();
        if mask[k] == 1 {
            let grad = g[k] + ps.prior.grad_log_prior(*wk, true);
            *wk += 0.5 * h * grad + sqrt_h * xi;
        } else {
            *wk = spike_sd * xi;
        }
    }
    if !ll.is_finite() || s.w.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            iter: s.iter,
            msg: "non-finite weights after the Langevin step; step too large?".into(),
        });
    }
    s.last_loglik = ll;
    s.iter += 1;
    Ok(())
}

/// One retained row of the chain's metric trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub loglik: f64,
    pub log_prior: f64,
    pub active_frac: f64,
    pub test_err: Option<f64>,
    pub step_h: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ChainOutput {
    /// Retained `(Λ, W)` pairs.
    pub samples: Vec<(Mask, FnnParams)>,
    pub trace: Vec<TraceRow>,
}

/// Optional per-sample test-error monitor.
pub type TestErrorFn<'a> = dyn Fn(&FnnParams) -> Result<f64> + Sync + 'a;

/// Runs `iters` steps. Whenever the absolute iteration count is a multiple
/// of `thin`, the state is retained, `test_error` (if any) is evaluated on
/// `W⊙Λ`, and `on_sample` is called.
pub fn run_chain<M: Regressor>(
    ps: &PosteriorSpec<M>,
    s: &mut ChainState,
    iters: u64,
    thin: u64,
    test_error: Option<&TestErrorFn<'_>>,
    mut on_sample: impl FnMut(&ChainState, &TraceRow) -> Result<()>,
) -> Result<ChainOutput> {
    if thin == 0 {
        return Err(Error::InvalidArgument("thinning interval must be positive".into()));
    }
    let mut out = ChainOutput::default();
    for _ in 0..iters {
        sasgld_step(ps, s)?;
        if s.iter.is_multiple_of(thin) {
            let theta = s.effective_weights();
            let row = TraceRow {
                iter: s.iter,
                loglik: s.last_loglik,
                log_prior: ps.prior.log_prior(&s.w, &s.mask),
                active_frac: s.active_fraction(),
                test_err: test_error.map(|f| f(&theta)).transpose()?,
                step_h: s.step_h,
            };
            on_sample(s, &row)?;
            out.samples.push((s.mask.clone(), s.w.clone()));
            out.trace.push(row);
        }
    }
    Ok(out)
}

/// Test error of one posterior draw against the exact inversion map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestError {
    /// Mean Euclidean error `(1/m)Σ‖g_θ(y_j) − g(y_j)‖`.
    pub e: f64,
    /// Empirical norm `sqrt((1/m)Σ‖g_θ(y_j) − g(y_j)‖²)`.
    pub norm_n: f64,
    /// Largest single error.
    pub max: f64,
}

pub fn test_error<M: Regressor>(model: &M, theta: &FnnParams, ys: &[Vec<f64>], oracle: &[Vec<f64>]) -> Result<TestError> {
    if ys.len() != oracle.len() || ys.is_empty() {
        return Err(Error::dim("test_error", format!("{} oracle values", ys.len()), oracle.len()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut max: f64 = 0.0;
    for (y, g) in ys.iter().zip(oracle) {
        let d = dist2(&model.predict(theta, y)?, g);
        sum += d;
        sumsq += d * d;
        max = max.max(d);
    }
    let m = ys.len() as f64;
    Ok(TestError {
        e: sum / m,
        norm_n: (sumsq / m).sqrt(),
        max,
    })
}

/// [`test_error`] for every retained sample.
pub fn posterior_test_error<M: Regressor>(
    model: &M,
    samples: &[(Mask, FnnParams)],
    ys: &[Vec<f64>],
    oracle: &[Vec<f64>],
) -> Result<Vec<TestError>> {
    samples
        .par_iter()
        .map(|(m, w)| test_error(model, &apply_mask(w, m)?, ys, oracle))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fnn::{Fnn, LayerSpec};
    use crate::gdn::FnnBaseline;
    use approx::assert_relative_eq;

    fn tiny() -> (FnnBaseline, SpikeSlabPrior) {
        let fnn = Fnn::new(2, vec![LayerSpec::dense(2, false)]).unwrap();
        (FnnBaseline::new(fnn), SpikeSlabPrior::new(1.0, 4.0, 1.0, 4).unwrap())
    }

    #[test]
    fn prior_validation() {
        assert!(SpikeSlabPrior::new(0.5, 4.0, 1.0, 4).is_err());
        assert!(SpikeSlabPrior::new(1.0, 0.5, 1.0, 4).is_err());
        assert!(SpikeSlabPrior::new(1.0, 4.0, 1.0, 1).is_err());
    }

    #[test]
    fn log_prior_all_spike_at_zero() {
        let (model, prior) = tiny();
        let fnn = model.fnn();
        let w = fnn.zeros();
        let m = fnn.full_mask().zeros_like();
        let expected = 2.0 * (4.0 / (2.0 * std::f64::consts::PI)).ln();
        assert_relative_eq!(prior.log_prior(&w, &m), expected, max_relative = 1e-14);
    }

    #[test]
    fn log_prior_toggle_difference() {
        let (model, prior) = tiny();
        let fnn = model.fnn();
        let mut w = fnn.zeros();
        let off = fnn.full_mask().zeros_like();
        let mut on = off.clone();
        on.set(1, true);
        let diff = prior.log_prior(&w, &on) - prior.log_prior(&w, &off);
        assert_relative_eq!(diff, -2.0 * 4f64.ln() + 0.5 * (1.0f64 / 4.0).ln(), max_relative = 1e-13);
        w.as_mut_slice()[1] = 0.7;
        let diff = prior.log_prior(&w, &on) - prior.log_prior(&w, &off);
        assert!((diff - prior.toggle_log_odds(0.7)).abs() < 1e-12);
        let neg = w.with_data(w.as_slice().iter().map(|v| -v).collect()).unwrap();
        assert_eq!(prior.log_prior(&w, &on), prior.log_prior(&neg, &on));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_relative_eq!(sigmoid(0.3) + sigmoid(-0.3), 1.0);
    }

    #[test]
    fn prior_only_chain_keeps_spike_coordinates_small() {
        let (model, prior) = tiny();
        let ps = PosteriorSpec::new(prior, 1.0, &model, None).unwrap();
        let fnn = model.fnn();
        let mut s = ChainState::new(fnn.zeros(), fnn.full_mask().zeros_like(), 1e-3, 1, 0.0, RngState::new(1)).unwrap();
        let out = run_chain(&ps, &mut s, 10, 3, None, |_, _| Ok(())).unwrap();
        assert_eq!(out.samples.len(), 3);
        assert_eq!(out.trace.iter().map(|r| r.iter).collect::<Vec<_>>(), vec![3, 6, 9]);
        let empty = run_chain(&ps, &mut s, 2, 5, None, |_, _| Ok(())).unwrap();
        assert!(empty.samples.is_empty() || empty.samples.len() == 1);
    }

    #[test]
    fn thin_larger_than_iters_is_empty() {
        let (model, prior) = tiny();
        let ps = PosteriorSpec::new(prior, 1.0, &model, None).unwrap();
        let fnn = model.fnn();
        let mut s = ChainState::new(fnn.zeros(), fnn.full_mask(), 1e-3, 1, 0.5, RngState::new(2)).unwrap();
        let out = run_chain(&ps, &mut s, 4, 10, None, |_, _| Ok(())).unwrap();
        assert!(out.samples.is_empty());
        assert_eq!(s.iter, 4);
    }

    #[test]
    fn chain_state_validation() {
        let (model, _) = tiny();
        let fnn = model.fnn();
        assert!(ChainState::new(fnn.zeros(), fnn.full_mask(), 0.0, 1, 0.1, RngState::new(1)).is_err());
        assert!(ChainState::new(fnn.zeros(), fnn.full_mask(), 1e-3, 1, 1.5, RngState::new(1)).is_err());
    }
}
