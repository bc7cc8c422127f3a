//! The fundamental (cardinal) spline `s̃k`, which is 1 at the lattice origin
//! and 0 at every other lattice point.
//!
//! Its coefficients `α_s` are the Fourier coefficients of the periodic
//! function `Υ` with respect to the characters `exp(-i⟨A s, z⟩)`:
//!
//! ```text
//! Υ(z) = Σ_s α_s exp(-i⟨A s, z⟩),      s̃k(x) = |det A| Σ_s α_s K(x - A s).
//! ```
//!
//! The same function also has two integral representations over `R^n`,
//! one using the frequency-domain symbol and one using the lattice-domain
//! symbol; [`IntegralEvaluator`] implements both for cross-checking.

use crate::error::{Result, SkError};
use crate::format::{plain_rows, sci_rows, Sci};
use crate::kernel::{check_dim, Kernel};
use crate::lattice::{inf_norm, mat_int_vec, matrix_to_rows, IndexSet, Lattice, DEFAULT_ENUMERATION_CAP};
use crate::quadrature::TensorTrapezoid;
use crate::summation::{ComplexNeumaierSum, NeumaierSum};
use crate::symbol::SymbolFunction;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Coefficient tables whose reconstruction residual exceeds this are rejected.
pub const RECONSTRUCTION_LIMIT: f64 = 1e-6;

/// Number of off-grid points used to measure the reconstruction residual.
pub const RECONSTRUCTION_SAMPLES: usize = 64;

/// Terms with `|det A| |α_s|` at or below this are dropped from the spatial series.
pub const EVAL_COEFFICIENT_FLOOR: f64 = 1e-14;

/// Relative height of the transform at the edge of the integration box.
pub const INTEGRAL_TAIL_EPS: f64 = 1e-14;

const RECONSTRUCTION_SEED: u64 = 0x5eed_a1fa;

/// Truncated table of `α_s` for `|s|_∞ <= N/2 - 1`.
#[derive(Debug, Clone)]
pub struct CardinalCoefficients {
    lattice: Lattice,
    kernel_id: String,
    kernel_shape: Option<Vec<Vec<f64>>>,
    grid_size: usize,
    indices: IndexSet,
    values: Vec<f64>,
    imaginary_residue: f64,
    reconstruction_residual: f64,
}

/// `α_s` from an `N^n` uniform DFT of `Υ` over the dual fundamental domain.
pub fn cardinal_coefficients(lattice: &Lattice, kernel: Arc<dyn Kernel>, grid_size: usize) -> Result<CardinalCoefficients> {
    let symbol = SymbolFunction::new(lattice.clone(), kernel)?;
    CardinalCoefficients::compute(&symbol, grid_size)
}

impl CardinalCoefficients {
    pub fn compute(symbol: &SymbolFunction, grid_size: usize) -> Result<Self> {
        Self::compute_with_limit(symbol, grid_size, RECONSTRUCTION_LIMIT)
    }

    /// Like [`CardinalCoefficients::compute`] but with a caller-chosen bound on
    /// the reconstruction residual; pass `f64::INFINITY` to inspect a table
    /// that would otherwise be rejected.
    pub fn compute_with_limit(symbol: &SymbolFunction, grid_size: usize, limit: f64) -> Result<Self> {
        if grid_size < 8 || !grid_size.is_multiple_of(2) {
            return Err(SkError::InvalidInput(format!("grid size must be even and at least 8, got {grid_size}")));
        }
        let lattice = symbol.lattice().clone();
        let n = lattice.dim();
        symbol.check_nondegeneracy(grid_size)?;

        // z_j = D (j / N); since ⟨A s, z_j⟩ = 2π ⟨s, j⟩ / N this is a plain DFT.
        let grid = lattice.fundamental_domain_grid(grid_size)?;
        let mut data: Vec<Complex64> =
            grid.iter().map(|z| symbol.upsilon(z).map(|u| Complex64::new(u, 0.0))).collect::<Result<_>>()?;
        inverse_dft_nd(&mut data, n, grid_size);
        let scale = 1.0 / data.len() as f64;

        let radius = grid_size / 2 - 1;
        let indices = IndexSet::cube(n, radius, DEFAULT_ENUMERATION_CAP)?;
        let mut values = Vec::with_capacity(indices.len());
        let mut imaginary_residue: f64 = 0.0;
        for s in indices.iter() {
            let mut flat = 0usize;
            for &sk in s {
                flat = flat * grid_size + sk.rem_euclid(grid_size as i64) as usize;
            }
            let a = data[flat] * scale;
            imaginary_residue = imaginary_residue.max(a.im.abs());
            values.push(a.re);
        }

        let mut table = Self {
            kernel_id: symbol.kernel().id(),
            kernel_shape: symbol.kernel().shape().map(matrix_to_rows),
            lattice,
            grid_size,
            indices,
            values,
            imaginary_residue,
            reconstruction_residual: f64::NAN,
        };

        let mut rng = ChaCha8Rng::seed_from_u64(RECONSTRUCTION_SEED);
        let mut worst: f64 = 0.0;
        for _ in 0..RECONSTRUCTION_SAMPLES {
            let t: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let z = crate::lattice::mat_vec(table.lattice.dual_basis(), &t);
            let exact = symbol.upsilon(&z)?;
            let series = table.series_at_dual_coordinates(&t);
            worst = worst.max((series - Complex64::new(exact, 0.0)).norm());
        }
        table.reconstruction_residual = worst;
        if !(worst <= limit) {
            return Err(SkError::ReconstructionFailure { residual: worst, tolerance: limit });
        }
        Ok(table)
    }

    /// `Σ_s α_s exp(-i⟨A s, z⟩)` for `z = D t`, i.e. `Σ_s α_s exp(-2πi ⟨s, t⟩)`.
    fn series_at_dual_coordinates(&self, t: &[f64]) -> Complex64 {
        let mut acc = ComplexNeumaierSum::new();
        for (s, &a) in self.indices.iter().zip(&self.values) {
            let phase: f64 = s.iter().zip(t).map(|(&si, &ti)| si as f64 * ti).sum();
            acc += Complex64::from_polar(a, -2.0 * PI * phase);
        }
        acc.sum()
    }

    /// The truncated Fourier series of `Υ` at an arbitrary `z`.
    pub fn series(&self, z: &[f64]) -> Result<Complex64> {
        check_dim(self.lattice.dim(), z.len())?;
        Ok(self.series_at_dual_coordinates(&self.lattice.dual_coordinates(z)))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: &[i64]) -> Option<f64> {
        self.indices.position(s).map(|i| self.values[i])
    }

    pub fn radius(&self) -> usize {
        self.grid_size / 2 - 1
    }

    /// Largest imaginary part discarded from the DFT output.
    pub fn imaginary_residue(&self) -> f64 {
        self.imaginary_residue
    }

    /// Max of `|Υ(z) - Σ_s α_s exp(-i⟨A s, z⟩)|` over the off-grid sample points.
    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    /// Max `|α_s|` over the shell `|s|_∞ = k`, for `k = 0..=radius`.
    pub fn shell_maxima(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.radius() + 1];
        for (s, &a) in self.indices.iter().zip(&self.values) {
            let k = inf_norm(s) as usize;
            out[k] = out[k].max(a.abs());
        }
        out
    }

    /// Largest shell radius with `|det A| max|α_s| > EVAL_COEFFICIENT_FLOOR`.
    pub fn default_eval_truncation(&self) -> usize {
        let det = self.lattice.abs_det();
        self.shell_maxima().iter().rposition(|&m| m * det > EVAL_COEFFICIENT_FLOOR).unwrap_or(0)
    }

    pub fn to_table(&self) -> CoefficientTable {
        CoefficientTable {
            dim: self.lattice.dim(),
            a: sci_rows(&matrix_to_rows(self.lattice.generator())),
            b: self.kernel_shape.as_deref().map(sci_rows),
            n: self.grid_size,
            entries: self.indices.iter().zip(&self.values).map(|(s, &a)| (s.to_vec(), Sci(a))).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_table().to_json()
    }
}

/// Serialized form of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Sci>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<Vec<Sci>>>,
    #[serde(rename = "N")]
    pub n: usize,
    pub entries: Vec<(Vec<i64>, Sci)>,
}

impl CoefficientTable {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("coefficient table serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text).map_err(|e| SkError::InvalidInput(format!("coefficient table: {e}")))?;
        if table.a.len() != table.dim || table.entries.iter().any(|(s, _)| s.len() != table.dim) {
            return Err(SkError::InvalidInput("coefficient table: inconsistent dimensions".into()));
        }
        Ok(table)
    }

    pub fn generator_rows(&self) -> Vec<Vec<f64>> {
        plain_rows(&self.a)
    }

    pub fn shape_rows(&self) -> Option<Vec<Vec<f64>>> {
        self.b.as_deref().map(plain_rows)
    }
}

/// In-place unnormalized n-dimensional DFT with kernel `exp(+2πi ⟨s, j⟩ / N)`
/// over row-major data (axis 0 slowest).
fn inverse_dft_nd(data: &mut [Complex64], dim: usize, size: usize) {
    let fft = FftPlanner::new().plan_fft_inverse(size);
    let mut line = vec![Complex64::default(); size];
    let mut stride = 1;
    for _ in 0..dim {
        // stride is the distance between consecutive elements along the current axis
        let block = stride * size;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[start + offset + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[start + offset + k * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

/// `s̃k(x) = |det A| Σ_{|s|_∞ <= T} α_s K(x - A s)`.
#[derive(Debug)]
pub struct FundamentalSpline {
    coefficients: CardinalCoefficients,
    kernel: Arc<dyn Kernel>,
    eval_truncation: usize,
    /// `A s`, flattened, for the retained terms.
    centers: Vec<f64>,
    /// `|det A| α_s` for the retained terms.
    weights: Vec<f64>,
    cardinality_residual_last: AtomicU64,
}

impl Clone for FundamentalSpline {
    fn clone(&self) -> Self {
        Self {
            coefficients: self.coefficients.clone(),
            kernel: self.kernel.clone(),
            eval_truncation: self.eval_truncation,
            centers: self.centers.clone(),
            weights: self.weights.clone(),
            cardinality_residual_last: AtomicU64::new(self.cardinality_residual_last.load(Ordering::Relaxed)),
        }
    }
}

impl FundamentalSpline {
    /// Coefficients on an `N^n` grid, then the spline with the default truncation.
    pub fn build(lattice: &Lattice, kernel: Arc<dyn Kernel>, grid_size: usize) -> Result<Self> {
        let coefficients = cardinal_coefficients(lattice, kernel.clone(), grid_size)?;
        Self::new(coefficients, kernel)
    }

    pub fn new(coefficients: CardinalCoefficients, kernel: Arc<dyn Kernel>) -> Result<Self> {
        let t = coefficients.default_eval_truncation();
        Self::with_truncation(coefficients, kernel, t)
    }

    pub fn with_truncation(coefficients: CardinalCoefficients, kernel: Arc<dyn Kernel>, eval_truncation: usize) -> Result<Self> {
        let lattice = coefficients.lattice();
        check_dim(lattice.dim(), kernel.dim())?;
        if eval_truncation > coefficients.radius() {
            return Err(SkError::InvalidInput(format!(
                "evaluation truncation {eval_truncation} exceeds the coefficient table radius {}",
                coefficients.radius()
            )));
        }
        let det = lattice.abs_det();
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        for (s, &a) in coefficients.indices().iter().zip(coefficients.values()) {
            if inf_norm(s) as usize <= eval_truncation {
                centers.extend(mat_int_vec(lattice.generator(), s));
                weights.push(det * a);
            }
        }
        Ok(Self {
            coefficients,
            kernel,
            eval_truncation,
            centers,
            weights,
            cardinality_residual_last: AtomicU64::new(f64::NAN.to_bits()),
        })
    }

    pub fn coefficients(&self) -> &CardinalCoefficients {
        &self.coefficients
    }

    pub fn lattice(&self) -> &Lattice {
        self.coefficients.lattice()
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn eval_truncation(&self) -> usize {
        self.eval_truncation
    }

    /// The spatial series at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.lattice().dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut diff = vec![0.0; n];
        let mut acc = NeumaierSum::new();
        for (c, &w) in self.centers.chunks_exact(n).zip(&self.weights) {
            for k in 0..n {
                diff[k] = x[k] - c[k];
            }
            acc += w * self.kernel.eval(&diff);
        }
        acc.sum()
    }

    /// `max_{|m|_∞ <= M} |s̃k(A m) - δ_{m,0}|`.
    pub fn cardinality_residual(&self, radius: usize) -> Result<f64> {
        if radius == 0 {
            return Err(SkError::InvalidInput("cardinality check radius must be at least 1".into()));
        }
        let lattice = self.lattice();
        let mut worst: f64 = 0.0;
        for m in lattice.enumerate_box(radius)?.iter() {
            let target = if m.iter().all(|&v| v == 0) { 1.0 } else { 0.0 };
            let v = self.eval_unchecked(&mat_int_vec(lattice.generator(), m));
            worst = worst.max((v - target).abs());
        }
        self.cardinality_residual_last.store(worst.to_bits(), Ordering::Relaxed);
        Ok(worst)
    }

    /// Result of the most recent [`FundamentalSpline::cardinality_residual`] call (`NaN` before any).
    pub fn cardinality_residual_last(&self) -> f64 {
        f64::from_bits(self.cardinality_residual_last.load(Ordering::Relaxed))
    }
}

/// Which integral representation of `s̃k` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralForm {
    /// `|det A| (2π)^{-n} ∫ Υ(z) F(K)(z) exp(i⟨z, x⟩) dz`.
    Frequency,
    /// `F^{-1}[ F(K) / Σ_m K(-A m) exp(i⟨A m, ·⟩) ](x)`.
    LatticeSeries,
}

/// Tabulated integrand for one of the integral forms of `s̃k`, reusable
/// across many evaluation points.
#[derive(Debug, Clone)]
pub struct IntegralEvaluator {
    form: IntegralForm,
    rule: TensorTrapezoid,
}

pub const MIN_INTEGRAL_POINTS: usize = 64;

impl IntegralEvaluator {
    pub fn new(symbol: &SymbolFunction, form: IntegralForm, points_per_axis: usize) -> Result<Self> {
        if points_per_axis < MIN_INTEGRAL_POINTS {
            return Err(SkError::InvalidInput(format!(
                "integral evaluation needs at least {MIN_INTEGRAL_POINTS} points per axis, got {points_per_axis}"
            )));
        }
        let lattice = symbol.lattice();
        let kernel = symbol.kernel().clone();
        let n = lattice.dim();
        let origin = vec![0.0; n];
        let half_width = kernel.frequency_tail_radius(INTEGRAL_TAIL_EPS * kernel.fourier(&origin));
        let inv_volume = (2.0 * PI).powi(n as i32).recip();
        let det = lattice.abs_det();
        let rule = TensorTrapezoid::new(n, half_width, points_per_axis, |z| {
            let fk = kernel.fourier(z);
            match form {
                IntegralForm::Frequency => Ok(Complex64::new(det * inv_volume * symbol.upsilon(z)? * fk, 0.0)),
                IntegralForm::LatticeSeries => {
                    // the symbol check guards against a vanishing denominator
                    symbol.symbol_inverse_spatial(z)?;
                    Ok(Complex64::new(fk * inv_volume, 0.0) / symbol.lattice_series(z)?)
                }
            }
        })?;
        Ok(Self { form, rule })
    }

    pub fn form(&self) -> IntegralForm {
        self.form
    }

    /// The integral at `x`, including its (roundoff-level) imaginary part.
    pub fn eval_complex(&self, x: &[f64]) -> Result<Complex64> {
        check_dim(self.rule.dim(), x.len())?;
        Ok(self.rule.transform(x, 1.0))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_complex(x)?.re)
    }
}

/// `s̃k(x)` through the frequency-domain integral.
pub fn eval_fundamental_integral(lattice: &Lattice, kernel: Arc<dyn Kernel>, x: &[f64], points_per_axis: usize) -> Result<f64> {
    let symbol = SymbolFunction::new(lattice.clone(), kernel)?;
    IntegralEvaluator::new(&symbol, IntegralForm::Frequency, points_per_axis)?.eval(x)
}

/// `s̃k(x)` through the inverse transform with the lattice-series denominator.
pub fn eval_fundamental_lattice_series(
    lattice: &Lattice,
    kernel: Arc<dyn Kernel>,
    x: &[f64],
    points_per_axis: usize,
) -> Result<f64> {
    let symbol = SymbolFunction::new(lattice.clone(), kernel)?;
    IntegralEvaluator::new(&symbol, IntegralForm::LatticeSeries, points_per_axis)?.eval(x)
}
