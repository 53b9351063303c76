//! Known forward models `f(y|x)` and operator builders.

use crate::error::{Error, Result};
use crate::numerics::{dot, spectral_norm_sq, Mat};

/// Negative log-density of the observation given the latent, up to a
/// constant, seen as a function of `x`.
pub trait ForwardModel {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    fn value(&self, y: &[f64], x: &[f64]) -> Result<f64>;
    fn grad(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>>;
    /// Lipschitz constant `M` of `x ↦ ∇f(y|x)`.
    fn lipschitz(&self) -> f64;

    /// `x ↦ ∇f(y|x)` at a fixed `y`, writing into `out`; for solvers that
    /// evaluate the gradient many times.
    fn grad_map<'a>(&'a self, y: &'a [f64]) -> Result<GradMap<'a>> {
        self.grad(y, &vec![0.0; self.dim_x()])?;
        Ok(Box::new(move |x, out| {
            out.copy_from_slice(&self.grad(y, x).expect("dimensions checked"))
        }))
    }
}

/// `(x, out) ↦ out = ∇f(y|x)` for a fixed `y`.
pub type GradMap<'a> = Box<dyn Fn(&[f64], &mut [f64]) + 'a>;

/// `y | x ~ N(Ax, v² I)`.
#[derive(Clone, Debug)]
pub struct GaussianLinearModel {
    a: Mat,
    v2: f64,
    lambda_max: f64,
    lip: f64,
    // AᵀA / v², used by the unrolled network
    gram: Mat,
}

impl GaussianLinearModel {
    pub fn new(a: Mat, v2: f64) -> Result<Self> {
        if !(v2 > 0.0 && v2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive and finite, got {v2}"
            )));
        }
        let est = spectral_norm_sq(&a, 1e-13, 200_000);
        let lambda_max = est.value;
        let gram = a.gram().scale(1.0 / v2);
        Ok(Self {
            lip: lambda_max / v2,
            lambda_max,
            a,
            v2,
            gram,
        })
    }

    pub fn operator(&self) -> &Mat {
        &self.a
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    /// `λ_max(AᵀA)`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `AᵀA / v²`.
    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    /// `Aᵀy / v²`; the gradient is then `gram·x − adjoint(y)`.
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut b = self.a.matvec_t(y)?;
        b.iter_mut().for_each(|v| *v /= self.v2);
        Ok(b)
    }

    /// Step size `multiplier / M`. With `multiplier = 1` this is the
    /// largest step for which the gradient step is nonexpansive.
    pub fn default_step(&self, multiplier: f64) -> Result<f64> {
        if self.lambda_max <= 0.0 {
            return Err(Error::InvalidArgument("operator is zero; step size undefined".into()));
        }
        if !(multiplier > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step multiplier must be positive, got {multiplier}"
            )));
        }
        Ok(multiplier * self.v2 / self.lambda_max)
    }

    fn check(&self, y: &[f64], x: &[f64], op: &'static str) -> Result<()> {
        if x.len() != self.a.cols() {
            return Err(Error::dim(op, format!("x of length {}", self.a.cols()), x.len()));
        }
        if y.len() != self.a.rows() {
            return Err(Error::dim(op, format!("y of length {}", self.a.rows()), y.len()));
        }
        Ok(())
    }
}

impl ForwardModel for GaussianLinearModel {
    fn dim_x(&self) -> usize {
        self.a.cols()
    }

    fn dim_y(&self) -> usize {
        self.a.rows()
    }

    fn value(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        self.check(y, x, "f_value")?;
        let ax = self.a.matvec(x)?;
        let r: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        Ok(dot(&r, &r) / (2.0 * self.v2))
    }

    fn grad(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(y, x, "f_grad")?;
        let mut r = self.a.matvec(x)?;
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
        let mut g = self.a.matvec_t(&r)?;
        g.iter_mut().for_each(|v| *v /= self.v2);
        Ok(g)
    }

    fn lipschitz(&self) -> f64 {
        self.lip
    }

    fn grad_map<'a>(&'a self, y: &'a [f64]) -> Result<GradMap<'a>> {
        let b = self.adjoint(y)?;
        Ok(Box::new(move |x, out| {
            self.gram.matvec_into(x, out);
            out.iter_mut().zip(&b).for_each(|(o, bi)| *o -= bi);
        }))
    }
}

/// Isotropic Gaussian blur on row-major `height × width` images. Entry
/// `((i,j),(k,l))` is proportional to `exp(−((i−k)²+(j−l)²)/(2·variance))`
/// over the whole image (no truncation), and every row sums to one.
pub fn build_blur_matrix(height: usize, width: usize, variance: f64) -> Result<Mat> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument("image dimensions must be positive".into()));
    }
    if !(variance > 0.0) {
        return Err(Error::InvalidArgument(format!("blur variance must be positive, got {variance}")));
    }
    let n = height * width;
    let mut data = vec![0.0; n * n];
    for (p, row) in data.chunks_exact_mut(n).enumerate() {
        let (i, j) = ((p / width) as f64, (p % width) as f64);
        for (q, e) in row.iter_mut().enumerate() {
            let (k, l) = ((q / width) as f64, (q % width) as f64);
            let r2 = (i - k) * (i - k) + (j - l) * (j - l);
            *e = (-r2 / (2.0 * variance)).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|e| *e /= s);
    }
    Mat::new(n, n, data)
}
