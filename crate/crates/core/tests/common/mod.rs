//! Independent reference computations used by the integration tests. None
//! of these call into the library's solvers.
#![allow(dead_code, clippy::needless_range_loop)]

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Central differences of a scalar function, step `h`.
pub fn central_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = f(&xp);
            xp[i] = orig - h;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Largest relative discrepancy, scaled by the larger of the two norms.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn matvec(b: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    b.iter().map(|r| r.iter().zip(x).map(|(a, c)| a * c).sum()).collect()
}

fn matvec_t(b: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; b[0].len()];
    for (r, xi) in b.iter().zip(x) {
        for (o, a) in out.iter_mut().zip(r) {
            *o += a * xi;
        }
    }
    out
}

/// Minimizer of `γ(λ₁‖Bu‖₁ + (λ₂/2)‖Bu‖²) + ½‖u − x‖²` by subgradient
/// descent with steps `1/(μ(k+1))`, `μ = 1 + γλ₂` the strong-convexity
/// modulus, returning the average of the second half of the iterates.
pub fn subgradient_prox(b: &[Vec<f64>], lambda1: f64, lambda2: f64, gamma: f64, x: &[f64], iters: usize) -> Vec<f64> {
    let d = x.len();
    let mu = 1.0 + gamma * lambda2;
    let mut u = x.to_vec();
    let mut avg = vec![0.0; d];
    let mut count = 0.0;
    for k in 0..iters {
        let z = matvec(b, &u);
        let sub: Vec<f64> = z
            .iter()
            .map(|&zi| {
                gamma
                    * (lambda1
                        * if zi > 0.0 {
                            1.0
                        } else if zi < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                        + lambda2 * zi)
            })
            .collect();
        let mut g = matvec_t(b, &sub);
        g.iter_mut().zip(u.iter().zip(x)).for_each(|(gi, (ui, xi))| *gi += ui - xi);
        let step = 1.0 / (mu * (k as f64 + 1.0));
        u.iter_mut().zip(&g).for_each(|(ui, gi)| *ui -= step * gi);
        if k >= iters / 2 {
            avg.iter_mut().zip(&u).for_each(|(a, ui)| *a += ui);
            count += 1.0;
        }
    }
    avg.iter().map(|a| a / count).collect()
}

/// `∫_a^b f` by composite Simpson with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len() / batches * batches;
    let size = n / batches;
    let means: Vec<f64> = series[..n].chunks(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (batches as f64 - 1.0);
    (m, (var / batches as f64).sqrt())
}
