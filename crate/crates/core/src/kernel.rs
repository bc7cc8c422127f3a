//! Kernels `K: R^n -> R` and their Fourier transforms under the convention
//! `F f(y) = ∫ exp(-i⟨x, y⟩) f(x) dx`, with inverse
//! `F^{-1} g(x) = (2π)^{-n} ∫ exp(i⟨x, y⟩) g(y) dy`.

use crate::error::{Result, SkError};
use crate::lattice::{checked_inverse, matrix_from_rows, matrix_to_rows, smallest_singular_value};
use crate::quadrature::TensorTrapezoid;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Debug;

/// Values below this magnitude are flushed to zero.
pub const FLUSH_TO_ZERO: f64 = 1e-300;

/// A real, even, integrable kernel with a real Fourier transform.
///
/// `eval` and `fourier` assume their argument has length [`Kernel::dim`];
/// use the `try_` variants for unchecked input.
pub trait Kernel: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Short identifier recorded alongside derived artifacts.
    fn id(&self) -> String;

    fn eval(&self, x: &[f64]) -> f64;

    fn fourier(&self, z: &[f64]) -> f64;

    /// Radius beyond which `|K(x)| <= eps`.
    fn spatial_tail_radius(&self, eps: f64) -> f64;

    /// Radius beyond which `|F(K)(z)| <= eps`.
    fn frequency_tail_radius(&self, eps: f64) -> f64;

    /// Shape matrix, for kernels parameterized by one.
    fn shape(&self) -> Option<&DMatrix<f64>> {
        None
    }

    fn try_eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval(x))
    }

    fn try_fourier(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.dim(), z.len())?;
        Ok(self.fourier(z))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(SkError::DimensionMismatch { expected, got })
    }
}

#[inline]
fn flush(v: f64) -> f64 {
    if v.abs() < FLUSH_TO_ZERO {
        0.0
    } else {
        v
    }
}

/// `K(x) = exp(-|B x|^2)` for a nonsingular shape matrix `B`.
///
/// Its transform is `π^{n/2} / |det B| · exp(-|B^{-T} z|^2 / 4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    dim: usize,
    shape: DMatrix<f64>,
    shape_inv_t: DMatrix<f64>,
    abs_det_shape: f64,
    shape_sigma_min: f64,
    inv_t_sigma_min: f64,
    /// Coefficient of `|B^{-T} z|^2` in the transform's exponent.
    fourier_exponent: f64,
}

impl GaussianKernel {
    pub fn new(shape: DMatrix<f64>) -> Result<Self> {
        let (inverse, abs_det_shape, _) = checked_inverse(&shape)?;
        let shape_inv_t = inverse.transpose();
        Ok(Self {
            dim: shape.nrows(),
            shape_sigma_min: smallest_singular_value(&shape),
            inv_t_sigma_min: smallest_singular_value(&shape_inv_t),
            shape,
            shape_inv_t,
            abs_det_shape,
            fourier_exponent: 0.25,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "B")?)
    }

    /// `exp(-|x|^2)` in `dim` dimensions.
    pub fn isotropic(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is nonsingular")
    }

    /// Replaces the exponent factor of the closed-form transform.
    ///
    /// Only for fault-injection tests: any value other than `0.25` produces
    /// a transform that disagrees with the quadrature oracle.
    #[doc(hidden)]
    pub fn with_faulty_fourier_exponent(mut self, exponent: f64) -> Self {
        self.fourier_exponent = exponent;
        self
    }

    pub fn shape_inv_t(&self) -> &DMatrix<f64> {
        &self.shape_inv_t
    }

    pub fn abs_det_shape(&self) -> f64 {
        self.abs_det_shape
    }

    pub fn shape_rows(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.shape)
    }

    /// The kernel `x ↦ K(Q x)`, which is again Gaussian with shape `B Q`.
    pub fn composed(&self, q: &DMatrix<f64>) -> Result<Self> {
        let mut k = Self::new(&self.shape * q)?;
        k.fourier_exponent = self.fourier_exponent;
        Ok(k)
    }

    /// `F(K)(0) = π^{n/2} / |det B|`.
    pub fn fourier_peak(&self) -> f64 {
        PI.powf(self.dim as f64 / 2.0) / self.abs_det_shape
    }

    /// `∫ |K|^2 dx = (π/2)^{n/2} / |det B|`.
    pub fn l2_norm_squared(&self) -> f64 {
        (PI / 2.0).powf(self.dim as f64 / 2.0) / self.abs_det_shape
    }

    /// `∫ |F(K)|^2 dz`, from the coded closed form of the transform.
    pub fn fourier_l2_norm_squared(&self) -> f64 {
        let peak = self.fourier_peak();
        peak * peak * (PI / (2.0 * self.fourier_exponent)).powf(self.dim as f64 / 2.0) * self.abs_det_shape
    }

    fn quadratic(m: &DMatrix<f64>, x: &[f64]) -> f64 {
        let n = m.nrows();
        let mut s = 0.0;
        for i in 0..n {
            let mut r = 0.0;
            for k in 0..n {
                r += m[(i, k)] * x[k];
            }
            s += r * r;
        }
        s
    }
}

impl Kernel for GaussianKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn id(&self) -> String {
        format!("gaussian{}d", self.dim)
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        flush((-Self::quadratic(&self.shape, x)).exp())
    }

    #[inline]
    fn fourier(&self, z: &[f64]) -> f64 {
        flush(self.fourier_peak() * (-self.fourier_exponent * Self::quadratic(&self.shape_inv_t, z)).exp())
    }

    fn spatial_tail_radius(&self, eps: f64) -> f64 {
        if eps >= 1.0 {
            return 0.0;
        }
        (-eps.ln()).sqrt() / self.shape_sigma_min
    }

    fn frequency_tail_radius(&self, eps: f64) -> f64 {
        let peak = self.fourier_peak();
        if eps >= peak {
            return 0.0;
        }
        ((peak / eps).ln() / self.fourier_exponent).sqrt() / self.inv_t_sigma_min
    }

    fn shape(&self) -> Option<&DMatrix<f64>> {
        Some(&self.shape)
    }
}

/// Trapezoidal approximation of `F(K)(z) = ∫ exp(-i⟨x, z⟩) K(x) dx` over
/// `[-half_width, half_width]^n`.
pub fn quadrature_fourier(kernel: &dyn Kernel, z: &[f64], half_width: f64, points_per_axis: usize) -> Result<Complex64> {
    FourierQuadrature::spatial(kernel, half_width, points_per_axis)?.forward(z)
}

/// Trapezoidal approximation of `F^{-1}(F K)(x)`, which should recover `K(x)`.
pub fn quadrature_inverse_fourier(kernel: &dyn Kernel, x: &[f64], half_width: f64, points_per_axis: usize) -> Result<Complex64> {
    FourierQuadrature::frequency(kernel, half_width, points_per_axis)?.inverse(x)
}

/// A kernel (or its transform) tabulated on a trapezoid grid, reusable for
/// many transform evaluations.
#[derive(Debug, Clone)]
pub struct FourierQuadrature {
    rule: TensorTrapezoid,
}

pub const MIN_QUADRATURE_POINTS: usize = 64;

impl FourierQuadrature {
    /// Tabulates `K` in space; [`FourierQuadrature::forward`] then approximates `F(K)`.
    pub fn spatial(kernel: &dyn Kernel, half_width: f64, points_per_axis: usize) -> Result<Self> {
        check_points(points_per_axis)?;
        let rule = TensorTrapezoid::new(kernel.dim(), half_width, points_per_axis, |x| Ok(Complex64::new(kernel.eval(x), 0.0)))?;
        Ok(Self { rule })
    }

    /// Tabulates `F(K)` in frequency; [`FourierQuadrature::inverse`] then approximates `K`.
    pub fn frequency(kernel: &dyn Kernel, half_width: f64, points_per_axis: usize) -> Result<Self> {
        check_points(points_per_axis)?;
        let rule =
            TensorTrapezoid::new(kernel.dim(), half_width, points_per_axis, |z| Ok(Complex64::new(kernel.fourier(z), 0.0)))?;
        Ok(Self { rule })
    }

    pub fn forward(&self, z: &[f64]) -> Result<Complex64> {
        check_dim(self.rule.dim(), z.len())?;
        Ok(self.rule.transform(z, -1.0))
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Complex64> {
        check_dim(self.rule.dim(), x.len())?;
        Ok(self.rule.transform(x, 1.0) / (2.0 * PI).powi(self.rule.dim() as i32))
    }
}

fn check_points(points_per_axis: usize) -> Result<()> {
    if points_per_axis < MIN_QUADRATURE_POINTS {
        return Err(SkError::InvalidInput(format!(
            "quadrature needs at least {MIN_QUADRATURE_POINTS} points per axis, got {points_per_axis}"
        )));
    }
    Ok(())
}

/// Relative gap in `∫|K|^2 = (2π)^{-n} ∫|F K|^2`, both sides in closed form.
pub fn plancherel_residual(kernel: &GaussianKernel) -> f64 {
    let lhs = kernel.l2_norm_squared();
    let rhs = kernel.fourier_l2_norm_squared() / (2.0 * PI).powi(kernel.dim() as i32);
    (lhs - rhs).abs() / lhs
}

/// `max_z |F(K(Q·))(z) - |det Q|^{-1} F(K)(Q^{-T} z)|`, with the left side
/// taken from the closed form of the composed Gaussian (shape `B Q`).
pub fn scaling_identity_residual(kernel: &GaussianKernel, q: &DMatrix<f64>, sample_zs: &[Vec<f64>]) -> Result<f64> {
    if q.nrows() != kernel.dim() {
        return Err(SkError::DimensionMismatch { expected: kernel.dim(), got: q.nrows() });
    }
    let (q_inv, abs_det_q, _) = checked_inverse(q)?;
    let q_inv_t = q_inv.transpose();
    let composed = kernel.composed(q)?;
    let mut worst: f64 = 0.0;
    for z in sample_zs {
        check_dim(kernel.dim(), z.len())?;
        let lhs = composed.fourier(z);
        let mapped = crate::lattice::mat_vec(&q_inv_t, z);
        let rhs = kernel.fourier(&mapped) / abs_det_q;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
