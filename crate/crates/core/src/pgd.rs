//! Proximal gradient descent for the exact inversion map
//! `g(y) = argmin_x f(y|x) + R(x)`, plus contraction-rate estimation and
//! the depth rule derived from it.
//!
//! `g` is the ground truth every learned estimator is scored against, so
//! solves default to a `1e-10` step tolerance.

use crate::error::{Error, Result};
use crate::forward::{ForwardModel, GaussianLinearModel};
use crate::numerics::{cholesky_solve, dist2, Mat};
use crate::regularizer::{OrthoRegularizer, Regularizer};

/// Stopping rule for [`solve_g`].
#[derive(Clone, Copy, Debug)]
pub struct PgdOptions {
    /// Stop once `‖x_{k+1} − x_k‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Fill [`PgdSolution::dist_trace`] (costs a second pass).
    pub record_trace: bool,
}

impl Default for PgdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
            record_trace: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PgdSolution {
    pub x_star: Vec<f64>,
    pub iterations: usize,
    /// Last step length `‖x_{k+1} − x_k‖`.
    pub residual: f64,
    pub converged: bool,
    /// `‖x_k − x_star‖` for `k = 0..=iterations`; empty unless requested.
    pub dist_trace: Vec<f64>,
}

/// `F_y(x) = prox_{γR}(x − γ∇f(y|x))`.
pub fn pgd_step<F: ForwardModel, R: Regularizer>(fm: &F, reg: &R, gamma: f64, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let g = fm.grad(y, x)?;
    let z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gamma * gi).collect();
    Ok(reg.prox(&z, gamma))
}

/// Fixed-point iteration of [`pgd_step`] from `x⁰ = 0`.
pub fn solve_g<F: ForwardModel, R: Regularizer>(fm: &F, reg: &R, gamma: f64, y: &[f64], opts: &PgdOptions) -> Result<PgdSolution> {
    solve_g_from(fm, reg, gamma, y, &vec![0.0; fm.dim_x()], opts)
}

pub fn solve_g_from<F: ForwardModel, R: Regularizer>(
    fm: &F,
    reg: &R,
    gamma: f64,
    y: &[f64],
    x0: &[f64],
    opts: &PgdOptions,
) -> Result<PgdSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if x0.len() != fm.dim_x() {
        return Err(Error::dim("solve_g", format!("x0 of length {}", fm.dim_x()), x0.len()));
    }
    let grad = fm.grad_map(y)?;
    let mut g = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        grad(&x, &mut g);
        g.iter_mut().zip(&x).for_each(|(gi, xi)| *gi = xi - gamma * *gi);
        let next = reg.prox(&g, gamma);
        residual = dist2(&next, &x);
        x = next;
        iterations += 1;
        if residual <= opts.tol {
            converged = true;
            break;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { stage: iterations });
    }
    let dist_trace = if opts.record_trace {
        pgd_trajectory(fm, reg, gamma, y, x0, &x, iterations)?
    } else {
        Vec::new()
    };
    Ok(PgdSolution {
        x_star: x,
        iterations,
        residual,
        converged,
        dist_trace,
    })
}

/// `‖F_y^k(x⁰) − reference‖` for `k = 0..=horizon`.
pub fn pgd_trajectory<F: ForwardModel, R: Regularizer>(
    fm: &F,
    reg: &R,
    gamma: f64,
    y: &[f64],
    x0: &[f64],
    reference: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    if x0.len() != fm.dim_x() || reference.len() != fm.dim_x() {
        return Err(Error::dim(
            "pgd_trajectory",
            format!("vectors of length {}", fm.dim_x()),
            format!("{} and {}", x0.len(), reference.len()),
        ));
    }
    let grad = fm.grad_map(y)?;
    let mut g = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    let mut trace = Vec::with_capacity(horizon + 1);
    trace.push(dist2(&x, reference));
    for _ in 0..horizon {
        grad(&x, &mut g);
        g.iter_mut().zip(&x).for_each(|(gi, xi)| *gi = xi - gamma * *gi);
        x = reg.prox(&g, gamma);
        trace.push(dist2(&x, reference));
    }
    Ok(trace)
}

/// Plug-in estimates of the linear rate `ϱ` and radius `R₀` in
/// `‖F^k(x⁰) − g(y_i)‖ ≤ R₀ ϱ^k`.
#[derive(Clone, Debug)]
pub struct ContractionEstimate {
    pub rho: f64,
    pub r0: f64,
    /// One distance trace per input, as used for the fit.
    pub traces: Vec<Vec<f64>>,
}

impl ContractionEstimate {
    /// Checks `trace_k ≤ r0·(rho + slack)^k` on every recorded point.
    pub fn envelope_holds(&self, slack: f64) -> bool {
        let rate = self.rho + slack;
        self.traces.iter().all(|t| {
            t.iter()
                .enumerate()
                .all(|(k, &d)| d <= self.r0 * rate.powi(k as i32) * (1.0 + 1e-12) + 1e-300)
        })
    }
}

/// Geometric fit of a single trace: least-squares slope of `ln d_k` against
/// `k` over the second half of its informative points, returned as a rate.
///
/// Trailing points within `floor` of zero carry the solver tolerance rather
/// than the rate and are dropped.
pub fn fit_rate(trace: &[f64], floor: f64) -> f64 {
    let usable = trace.iter().rposition(|&d| d > floor).map_or(0, |i| i + 1);
    if usable < 2 {
        return 0.0;
    }
    let start = usable / 2;
    let pts: Vec<(f64, f64)> = (start..usable).map(|k| (k as f64, trace[k].ln())).collect();
    let rate = if pts.len() < 2 {
        let k = usable - 1;
        trace[k] / trace[k - 1]
    } else {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    };
    rate.clamp(0.0, 1.0 - f64::EPSILON)
}

/// Solves `g(y_i)` for every input from `x0`, then fits the rate on each
/// recorded trajectory and returns the worst case. Any non-converged solve
/// is an error: the linear-rate assumption has failed empirically.
pub fn estimate_contraction<F: ForwardModel, R: Regularizer>(
    fm: &F,
    reg: &R,
    gamma: f64,
    ys: &[Vec<f64>],
    x0: &[f64],
    opts: &PgdOptions,
) -> Result<ContractionEstimate> {
    let opts = PgdOptions {
        record_trace: true,
        ..*opts
    };
    let mut traces = Vec::with_capacity(ys.len());
    for y in ys {
        let sol = solve_g_from(fm, reg, gamma, y, x0, &opts)?;
        if !sol.converged {
            return Err(Error::NotConverged {
                iterations: sol.iterations,
                residual: sol.residual,
            });
        }
        traces.push(sol.dist_trace);
    }
    Ok(summarize(traces, 1e3 * opts.tol))
}

/// As [`estimate_contraction`], but against known solutions and over a fixed
/// number of steps. Useful when the full solve from `x0` is too slow.
pub fn estimate_contraction_with_reference<F: ForwardModel, R: Regularizer>(
    fm: &F,
    reg: &R,
    gamma: f64,
    ys: &[Vec<f64>],
    solutions: &[Vec<f64>],
    x0: &[f64],
    horizon: usize,
) -> Result<ContractionEstimate> {
    if ys.len() != solutions.len() {
        return Err(Error::dim("estimate_contraction", ys.len(), solutions.len()));
    }
    let traces = ys
        .iter()
        .zip(solutions)
        .map(|(y, s)| pgd_trajectory(fm, reg, gamma, y, x0, s, horizon))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(traces, 1e-12))
}

fn summarize(traces: Vec<Vec<f64>>, floor: f64) -> ContractionEstimate {
    let rho = traces.iter().map(|t| fit_rate(t, floor)).fold(0.0, f64::max);
    // smallest R₀ under which the fitted rate bounds every trace
    let r0 = traces
        .iter()
        .flat_map(|t| {
            t.iter()
                .enumerate()
                .map(|(k, &d)| if rho > 0.0 { d / rho.powi(k as i32) } else { d })
                .take(if rho > 0.0 { usize::MAX } else { 1 })
        })
        .fold(0.0, f64::max);
    let r0_plain = traces.iter().filter_map(|t| t.first().copied()).fold(0.0, f64::max);
    ContractionEstimate {
        rho,
        r0: r0.max(r0_plain),
        traces,
    }
}

/// Closed-form per-step factor `max(|1−γL|, |1−γm|)/(1+γλ₂)` for a quadratic
/// data term with curvature in `[m, L]` and an elastic-net prox.
pub fn analytic_contraction_bound(m: f64, l: f64, gamma: f64, lambda2: f64) -> f64 {
    (1.0 - gamma * l).abs().max((1.0 - gamma * m).abs()) / (1.0 + gamma * lambda2)
}

/// Unrolling depth `⌈c·ln n / (−ln ρ)⌉`, clamped to
/// `[1, 10·ln n/(−ln ρ) + 1]`.
pub fn depth_rule(n: usize, rho: f64, c: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("contraction rate must lie in (0, 1), got {rho}")));
    }
    if n < 2 || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "depth rule needs n ≥ 2 and c > 0, got n={n}, c={c}"
        )));
    }
    let base = (n as f64).ln() / (-rho.ln());
    let raw = (c * base).ceil();
    let hi = (10.0 * base + 1.0).floor();
    Ok(raw.clamp(1.0, hi.max(1.0)) as usize)
}

/// Exact minimizer of `‖y − Ax‖²/(2v²) + λ₁‖Bx‖₁ + (λ₂/2)‖Bx‖²` by a
/// primal–dual active-set iteration in the coordinates `z = Bx`. The
/// returned point satisfies the optimality conditions to round-off; when
/// the active set fails to settle, the last iterate is polished with
/// proximal gradient steps from there.
pub fn solve_elastic_net_exact(fm: &GaussianLinearModel, reg: &OrthoRegularizer, y: &[f64]) -> Result<Vec<f64>> {
    let d = fm.dim_x();
    let (l1, l2) = (reg.base().lambda1, reg.base().lambda2);
    let mut p_mat = fm.gram().clone();
    let mut c = fm.adjoint(y)?;
    if let Some(b) = reg.transform() {
        p_mat = b.matmul(&p_mat)?.matmul(&b.transpose())?;
        c = b.matvec(&c)?;
    }
    let p_mat = Mat::from_fn(d, d, |i, j| p_mat.get(i, j) + if i == j { l2 } else { 0.0 });

    let mut z = vec![0.0; d];
    let mut best: Option<Vec<f64>> = None;
    'scales: for scale in [1.0, 1e-2, 1e-4, 1e-6] {
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut dual = c.clone();
        let mut prev: Option<Vec<i8>> = None;
        for _ in 0..200 {
            let signs: Vec<i8> = (0..d)
                .map(|i| {
                    let t = z[i] + scale * dual[i];
                    if t > scale * l1 {
                        1
                    } else if t < -scale * l1 {
                        -1
                    } else {
                        0
                    }
                })
                .collect();
            if prev.as_ref() == Some(&signs) {
                if kkt_holds(&p_mat, &c, &z, l1) {
                    best = Some(z.clone());
                    break 'scales;
                }
                break;
            }
            let active: Vec<usize> = (0..d).filter(|&i| signs[i] != 0).collect();
            z.iter_mut().for_each(|v| *v = 0.0);
            if !active.is_empty() {
                let sub = Mat::from_fn(active.len(), active.len(), |a, b| p_mat.get(active[a], active[b]));
                let rhs: Vec<f64> = active.iter().map(|&i| c[i] - l1 * signs[i] as f64).collect();
                let sol = cholesky_solve(&sub, &rhs)?;
                for (&i, v) in active.iter().zip(sol) {
                    z[i] = v;
                }
            }
            let pz = p_mat.matvec(&z)?;
            dual = c.iter().zip(&pz).map(|(ci, pi)| ci - pi).collect();
            for &i in &active {
                dual[i] = l1 * signs[i] as f64;
            }
            prev = Some(signs);
        }
    }
    let z = best.unwrap_or(z);
    let x = match reg.transform() {
        Some(b) => b.matvec_t(&z)?,
        None => z,
    };
    // polish: from an exact point this stops after one step
    let gamma = fm.default_step(1.0)?;
    let sol = solve_g_from(
        fm,
        reg,
        gamma,
        y,
        &x,
        &PgdOptions {
            tol: 1e-13,
            max_iter: 100_000,
            record_trace: false,
        },
    )?;
    Ok(sol.x_star)
}

fn kkt_holds(p: &Mat, c: &[f64], z: &[f64], l1: f64) -> bool {
    let pz = p.matvec(z).expect("square system");
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    z.iter().zip(pz.iter().zip(c)).all(|(&zi, (&pi, &ci))| {
        let g = pi - ci;
        if zi != 0.0 {
            (g + l1 * zi.signum()).abs() <= 1e-9 * scale
        } else {
            g.abs() <= l1 + 1e-9 * scale
        }
    })
}

/// Largest violation of the coordinatewise optimality conditions of
/// `g(y)` in the `B = I` case: `|∇f_i + λ₂x_i + λ₁ sign(x_i)|` on the support
/// and `max(0, |∇f_i| − λ₁)` off it.
pub fn optimality_violation(fm: &GaussianLinearModel, reg: &OrthoRegularizer, y: &[f64], x: &[f64]) -> Result<f64> {
    let (l1, l2) = (reg.base().lambda1, reg.base().lambda2);
    let (grad, coeffs) = match reg.transform() {
        Some(b) => (b.matvec(&fm.grad(y, x)?)?, b.matvec(x)?),
        None => (fm.grad(y, x)?, x.to_vec()),
    };
    Ok(coeffs
        .iter()
        .zip(&grad)
        .map(|(&zi, &gi)| {
            if zi != 0.0 {
                (gi + l2 * zi + l1 * zi.signum()).abs()
            } else {
                (gi.abs() - l1).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{max_abs_diff, RngState};
    use crate::regularizer::ElasticNet;
    use approx::assert_relative_eq;

    fn ident_model(d: usize, v2: f64) -> GaussianLinearModel {
        GaussianLinearModel::new(Mat::identity(d), v2).unwrap()
    }

    fn en(l1: f64, l2: f64) -> OrthoRegularizer {
        OrthoRegularizer::identity(ElasticNet::new(l1, l2).unwrap())
    }

    #[test]
    fn unregularized_identity_step_lands_on_y() {
        let fm = ident_model(3, 1.0);
        let y = [1.0, -2.0, 0.5];
        let out = pgd_step(&fm, &en(0.0, 0.0), 1.0, &y, &[9.0, 3.0, -4.0]).unwrap();
        assert!(max_abs_diff(&out, &y) < 1e-15);
    }

    #[test]
    fn identity_problem_solution_is_prox_of_y() {
        let fm = ident_model(4, 1.0);
        let reg = en(1.0, 1.0);
        let y = [3.0, -0.4, -2.5, 1.0];
        let sol = solve_g(&fm, &reg, 1.0, &y, &PgdOptions::default()).unwrap();
        let expected = reg.base().prox_elastic_net(&y, 1.0);
        assert!(max_abs_diff(&sol.x_star, &expected) < 1e-10);
        assert!(sol.converged);
    }

    #[test]
    fn zero_observation_gives_zero() {
        let mut rng = RngState::new(1);
        let fm = GaussianLinearModel::new(Mat::gaussian(5, 5, &mut rng), 0.5).unwrap();
        let gamma = fm.default_step(1.0).unwrap();
        let sol = solve_g(&fm, &en(0.3, 0.0), gamma, &[0.0; 5], &PgdOptions::default()).unwrap();
        assert!(sol.x_star.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn solution_is_a_fixed_point_and_traces_decrease() {
        let mut rng = RngState::new(2);
        let fm = GaussianLinearModel::new(Mat::gaussian(6, 4, &mut rng), 0.2).unwrap();
        let reg = en(0.2, 0.5);
        let gamma = fm.default_step(1.0).unwrap();
        let y: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let opts = PgdOptions::default();
        let sol = solve_g(&fm, &reg, gamma, &y, &opts).unwrap();
        let again = pgd_step(&fm, &reg, gamma, &y, &sol.x_star).unwrap();
        assert!(dist2(&again, &sol.x_star) <= 2.0 * opts.tol);
        assert!(sol.residual <= opts.tol);
        for w in sol.dist_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn max_iter_returns_flagged_solution() {
        let mut rng = RngState::new(3);
        let fm = GaussianLinearModel::new(Mat::gaussian(5, 5, &mut rng), 1.0).unwrap();
        let gamma = fm.default_step(1.0).unwrap();
        let y = vec![1.0; 5];
        let opts = PgdOptions {
            max_iter: 3,
            ..Default::default()
        };
        let sol = solve_g(&fm, &en(0.01, 0.01), gamma, &y, &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
        assert_eq!(sol.dist_trace.len(), 4);
    }

    #[test]
    fn contraction_one_step_problem() {
        // A = I, γ = 1, pure ridge: the first step is already the answer
        let fm = ident_model(3, 1.0);
        let ys = vec![vec![1.0, 2.0, -1.0], vec![0.5, 0.0, 3.0]];
        let est = estimate_contraction(&fm, &en(0.0, 1.0), 1.0, &ys, &[0.0; 3], &PgdOptions::default()).unwrap();
        assert!(est.rho < 1e-6, "{}", est.rho);
    }

    #[test]
    fn contraction_scaled_identity_matches_bound() {
        let c = 0.7;
        let fm = GaussianLinearModel::new(Mat::identity(4).scale(c), 1.0).unwrap();
        let (l1, l2) = (0.05, 0.3);
        let gamma = 0.5 * fm.default_step(1.0).unwrap();
        let ys = vec![vec![3.0, -2.0, 1.0, 5.0], vec![-4.0, 0.2, 2.0, -1.0]];
        let est = estimate_contraction(&fm, &en(l1, l2), gamma, &ys, &[0.0; 4], &PgdOptions::default()).unwrap();
        let bound = analytic_contraction_bound(c * c, c * c, gamma, l2);
        assert!(est.rho <= bound + 0.02, "{} vs {}", est.rho, bound);
        assert!(est.rho > 0.0 && est.rho < 1.0);
        assert!(est.envelope_holds(0.05));
    }

    #[test]
    fn depth_rule_examples() {
        assert_eq!(depth_rule(200, 0.5, 1.0).unwrap(), 8);
        // n = e² is not an integer; ln 7 / 1 = 1.95 rounds up to the same 2
        assert_eq!(depth_rule(7, (-1.0f64).exp(), 1.0).unwrap(), 2);
        assert_eq!(depth_rule(7, (-1.0f64).exp(), 0.1).unwrap(), 1);
        assert!(depth_rule(200, 1.0, 1.0).is_err());
        assert!(depth_rule(200, 1.5, 1.0).is_err());
        let mut last = 0;
        for n in 2..500 {
            let d = depth_rule(n, 0.8, 1.0).unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn exact_solver_matches_pgd() {
        let mut rng = RngState::new(4);
        let fm = GaussianLinearModel::new(Mat::gaussian(8, 6, &mut rng), 0.3).unwrap();
        let reg = en(0.5, 0.2);
        let y: Vec<f64> = (0..8).map(|_| 2.0 * rng.normal()).collect();
        let exact = solve_elastic_net_exact(&fm, &reg, &y).unwrap();
        let gamma = fm.default_step(1.0).unwrap();
        let opts = PgdOptions {
            tol: 1e-15,
            ..PgdOptions::default()
        };
        let sol = solve_g(&fm, &reg, gamma, &y, &opts).unwrap();
        assert!(max_abs_diff(&exact, &sol.x_star) < 1e-8);
        assert!(optimality_violation(&fm, &reg, &y, &exact).unwrap() < 1e-9);
    }

    #[test]
    fn fit_rate_recovers_geometric_sequence() {
        let t: Vec<f64> = (0..50).map(|k| 3.0 * 0.8f64.powi(k)).collect();
        assert_relative_eq!(fit_rate(&t, 1e-300), 0.8, max_relative = 1e-10);
        assert_eq!(fit_rate(&[1.0, 0.0], 1e-12), 0.0);
    }
}
