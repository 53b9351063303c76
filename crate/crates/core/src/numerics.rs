//! Dense linear algebra and seeded sampling primitives.
//!
//! Everything is `f64`. Matrices are row-major and immutable once built;
//! random draws come from [`RngState`], a ChaCha8 stream addressed by
//! `(seed, stream)` so independent workers never share a generator.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::dim("Mat::new", rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Matrix with i.i.d. standard normal entries.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut RngState) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.normal())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(
                "matvec",
                format!("vector of length {} for {}x{} matrix", self.cols, self.rows, self.cols),
                format!("length {}", x.len()),
            ));
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked `out = self * x`; lengths are asserted.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    /// `selfᵀ * x`.
    pub fn matvec_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::dim(
                "matvec_t",
                format!("vector of length {} for transpose of {}x{} matrix", self.rows, self.rows, self.cols),
                format!("length {}", x.len()),
            ));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            axpy(xi, row, &mut out);
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::dim(
                "matmul",
                format!("{}x{} * {}x_", self.rows, self.cols, self.cols),
                format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols),
            ));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a != 0.0 {
                    axpy(a, other.row(k), orow);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self`, symmetric.
    pub fn gram(&self) -> Mat {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for row in self.data.chunks_exact(n) {
            for i in 0..n {
                let ri = row[i];
                if ri != 0.0 {
                    axpy(ri, &row[i..], &mut g.data[i * n + i..(i + 1) * n]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Appends `extra` zero rows.
    pub fn pad_rows(&self, extra: usize) -> Mat {
        let mut data = self.data.clone();
        data.resize((self.rows + extra) * self.cols, 0.0);
        Mat {
            rows: self.rows + extra,
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|selfᵀself − I|`; square matrices only.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = self.gram();
        let n = g.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }
}

/// Dot product with four independent accumulators (fixed summation order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += a * x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Result of [`spectral_norm_sq`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// Estimate of `λ_max(mᵀm)`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `λ_max(mᵀm)` by power iteration on `mᵀm`, starting from the normalized
/// all-ones vector. Stops when successive Rayleigh quotients agree to
/// relative tolerance `tol`.
pub fn spectral_norm_sq(m: &Mat, tol: f64, max_iter: usize) -> SpectralEstimate {
    assert!(tol > 0.0, "tolerance must be positive");
    if m.max_abs() == 0.0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let n = m.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut mv = vec![0.0; m.rows()];
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        m.matvec_into(&v, &mut mv);
        let w = m.matvec_t(&mv).expect("shapes agree");
        // Rayleigh quotient vᵀ(mᵀm)v = ‖mv‖² for unit v
        let next = dot(&mv, &mv);
        let wn = norm2(&w);
        if wn == 0.0 {
            // start vector in the null space; restart from a basis vector
            v.iter_mut().for_each(|x| *x = 0.0);
            v[(it - 1) % n] = 1.0;
            continue;
        }
        v = w.into_iter().map(|x| x / wn).collect();
        if it > 1 && (next - lambda).abs() <= tol * next {
            return SpectralEstimate {
                value: next.max(lambda),
                iterations: it,
                converged: true,
            };
        }
        lambda = next;
    }
    SpectralEstimate {
        value: lambda,
        iterations: max_iter,
        converged: false,
    }
}

/// Solves `s x = b` for symmetric positive definite `s` via Cholesky.
pub fn cholesky_solve(s: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = s.rows();
    if s.cols() != n || b.len() != n {
        return Err(Error::dim(
            "cholesky_solve",
            format!("square system of size {}", b.len()),
            format!("{}x{}", s.rows(), s.cols()),
        ));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            sum -= dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidArgument("matrix is not positive definite".into()));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &z[..i]);
        z[i] = (z[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    Ok(z)
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt (with one round of
/// re-orthogonalization) on the columns of a standard Gaussian matrix.
/// The implied `R` has positive diagonal, which fixes the sign ambiguity.
pub fn rand_orthogonal(d: usize, rng: &mut RngState) -> Mat {
    assert!(d >= 1, "dimension must be at least 1");
    let g = Mat::gaussian(d, d, rng);
    // work on columns stored as rows of the transpose
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| g.get(i, j)).collect()).collect();
    for j in 0..d {
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let c = dot(&done[k], &rest[0]);
                axpy(-c, &done[k], &mut rest[0]);
            }
        }
        let n = norm2(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= n);
    }
    Mat::from_fn(d, d, |i, j| cols[j][i])
}

/// One draw from `N(mean, sd²)` conditioned on `[0, ∞)`.
///
/// Plain rejection when the mean is nonnegative (acceptance ≥ 1/2);
/// otherwise Robert's translated-exponential proposal on the standardized
/// lower bound.
pub fn sample_trunc_normal_nonneg(mean: f64, sd: f64, rng: &mut RngState) -> f64 {
    assert!(sd > 0.0, "standard deviation must be positive");
    let a = -mean / sd;
    if a <= 0.0 {
        loop {
            let z: f64 = rng.normal();
            if z >= a {
                return (mean + sd * z).max(0.0);
            }
        }
    }
    let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(alpha).expect("positive rate");
    loop {
        let z = a + rng.sample(exp);
        let u: f64 = rng.uniform();
        if u <= (-0.5 * (z - alpha) * (z - alpha)).exp() {
            return (mean + sd * z).max(0.0);
        }
    }
}

/// Serializable position of an [`RngState`]. Integers are kept as decimal
/// strings so JSON consumers never round them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub seed: String,
    pub stream: String,
    pub word_pos: String,
}

/// Seeded, splittable generator. A `(seed, stream)` pair names an
/// independent ChaCha8 keystream; the state is the position within it.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    /// Independent generator for sub-task `id`, derived from this seed only
    /// (not from the current position).
    pub fn split(&self, id: u64) -> Self {
        Self::with_stream(self.seed, self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id + 1))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn snapshot(&self) -> RngSnapshot {
        RngSnapshot {
            seed: self.seed.to_string(),
            stream: self.stream.to_string(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
    }

    pub fn restore(snap: &RngSnapshot) -> Result<Self> {
        let parse_err = |what: &str| Error::InvalidArgument(format!("bad rng {what} in snapshot"));
        let seed: u64 = snap.seed.parse().map_err(|_| parse_err("seed"))?;
        let stream: u64 = snap.stream.parse().map_err(|_| parse_err("stream"))?;
        let pos: u128 = snap.word_pos.parse().map_err(|_| parse_err("word_pos"))?;
        let mut rng = Self::with_stream(seed, stream);
        rng.inner.set_word_pos(pos);
        Ok(rng)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
