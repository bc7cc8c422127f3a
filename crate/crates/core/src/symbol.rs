//! The periodized symbol `Υ^{-1}(z) = Σ_m F(K)(z + D m)` and its reciprocal `Υ`.
//!
//! Two independent routes are provided: the frequency-domain sum above and
//! the lattice-domain sum `|det A| Σ_m K(-A m) exp(i⟨A m, z⟩)`. Poisson
//! summation says they coincide.

use crate::error::{Result, SkError};
use crate::kernel::{check_dim, Kernel};
use crate::lattice::{mat_int_vec, IndexSet, Lattice, DEFAULT_ENUMERATION_CAP};
use crate::summation::{ComplexNeumaierSum, NeumaierSum};
use num_complex::Complex64;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Symbol values below this fraction of the leading term count as zero.
pub const DEGENERACY_THRESHOLD: f64 = 1e-13;

/// Truncation targets: first omitted term below this fraction of the leading term.
pub const TRUNCATION_EPS: f64 = 1e-16;

/// Bound on the first omitted frequency shell relative to the value at `z = 0`.
pub const FREQ_SHELL_TOLERANCE: f64 = 1e-14;

#[derive(Debug)]
pub struct SymbolFunction {
    lattice: Lattice,
    kernel: Arc<dyn Kernel>,
    freq_truncation: usize,
    spatial_truncation: usize,
    /// `D m` for `|m|_∞ <= freq_truncation`, flattened.
    dual_offsets: Vec<f64>,
    /// `A m` for `|m|_∞ <= spatial_truncation`, flattened.
    lattice_points: Vec<f64>,
    /// `K(-A m)`, aligned with `lattice_points`.
    kernel_at_points: Vec<f64>,
    freq_leading: f64,
    spatial_leading: f64,
    min_symbol_seen: AtomicU64,
}

impl Clone for SymbolFunction {
    fn clone(&self) -> Self {
        Self {
            lattice: self.lattice.clone(),
            kernel: self.kernel.clone(),
            freq_truncation: self.freq_truncation,
            spatial_truncation: self.spatial_truncation,
            dual_offsets: self.dual_offsets.clone(),
            lattice_points: self.lattice_points.clone(),
            kernel_at_points: self.kernel_at_points.clone(),
            freq_leading: self.freq_leading,
            spatial_leading: self.spatial_leading,
            min_symbol_seen: AtomicU64::new(self.min_symbol_seen.load(Ordering::Relaxed)),
        }
    }
}

impl SymbolFunction {
    /// Builds the symbol with truncations derived from the kernel's tail radii.
    pub fn new(lattice: Lattice, kernel: Arc<dyn Kernel>) -> Result<Self> {
        let (mf, ms) = default_truncations(&lattice, kernel.as_ref())?;
        Self::with_truncation(lattice, kernel, mf, ms)
    }

    /// Builds the symbol with explicit index-box radii for both sums.
    pub fn with_truncation(
        lattice: Lattice,
        kernel: Arc<dyn Kernel>,
        freq_truncation: usize,
        spatial_truncation: usize,
    ) -> Result<Self> {
        let n = lattice.dim();
        check_dim(n, kernel.dim())?;

        let freq_box = IndexSet::cube(n, freq_truncation, DEFAULT_ENUMERATION_CAP)?;
        let mut dual_offsets = Vec::with_capacity(freq_box.len() * n);
        for m in freq_box.iter() {
            dual_offsets.extend(mat_int_vec(lattice.dual_basis(), m));
        }

        let spatial_box = IndexSet::cube(n, spatial_truncation, DEFAULT_ENUMERATION_CAP)?;
        let mut lattice_points = Vec::with_capacity(spatial_box.len() * n);
        let mut kernel_at_points = Vec::with_capacity(spatial_box.len());
        for m in spatial_box.iter() {
            let p = mat_int_vec(lattice.generator(), m);
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            kernel_at_points.push(kernel.eval(&neg));
            lattice_points.extend(p);
        }

        let origin = vec![0.0; n];
        let freq_leading = kernel.fourier(&origin);
        let spatial_leading = lattice.abs_det() * kernel.eval(&origin);

        let sf = Self {
            lattice,
            kernel,
            freq_truncation,
            spatial_truncation,
            dual_offsets,
            lattice_points,
            kernel_at_points,
            freq_leading,
            spatial_leading,
            min_symbol_seen: AtomicU64::new(f64::INFINITY.to_bits()),
        };

        let at_origin = sf.raw_frequency_sum(&origin);
        let shell = sf.frequency_shell(freq_truncation + 1);
        if shell > FREQ_SHELL_TOLERANCE * at_origin {
            return Err(SkError::InvalidInput(format!(
                "frequency truncation {freq_truncation} too small: first omitted shell contributes {shell:e} against {at_origin:e}"
            )));
        }
        Ok(sf)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn freq_truncation(&self) -> usize {
        self.freq_truncation
    }

    pub fn spatial_truncation(&self) -> usize {
        self.spatial_truncation
    }

    /// Smallest `|Υ^{-1}|` returned so far by any evaluation.
    pub fn min_symbol_seen(&self) -> f64 {
        f64::from_bits(self.min_symbol_seen.load(Ordering::Relaxed))
    }

    fn record(&self, value: f64) {
        let v = value.abs();
        // nonnegative floats order like their bit patterns
        self.min_symbol_seen.fetch_min(v.to_bits(), Ordering::Relaxed);
    }

    fn raw_frequency_sum(&self, z: &[f64]) -> f64 {
        let n = self.lattice.dim();
        let reduced = self.lattice.reduce_to_dual_cell(z);
        let mut shifted = vec![0.0; n];
        let mut acc = NeumaierSum::new();
        for offset in self.dual_offsets.chunks_exact(n) {
            for k in 0..n {
                shifted[k] = reduced[k] + offset[k];
            }
            acc += self.kernel.fourier(&shifted);
        }
        acc.sum()
    }

    /// Sum of `F(K)(D m)` over the shell `|m|_∞ = radius`.
    fn frequency_shell(&self, radius: usize) -> f64 {
        let n = self.lattice.dim();
        let r = radius as i64;
        let mut acc = NeumaierSum::new();
        crate::lattice::for_each_multi_index(n, -r, r, |m| {
            if crate::lattice::inf_norm(m) == r {
                acc += self.kernel.fourier(&mat_int_vec(self.lattice.dual_basis(), m));
            }
        });
        acc.sum()
    }

    fn degenerate(&self, value: f64, leading: f64, z: &[f64]) -> Result<()> {
        let threshold = DEGENERACY_THRESHOLD * leading;
        if !(value.abs() >= threshold) {
            return Err(SkError::DegenerateSymbol { value, threshold, z: z.to_vec() });
        }
        Ok(())
    }

    /// `Υ^{-1}(z) = Σ_m F(K)(z + D m)`.
    ///
    /// `z` is first reduced into the dual cell around the origin, which is an
    /// exact reindexing of the infinite sum.
    pub fn symbol_inverse_frequency(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.lattice.dim(), z.len())?;
        let value = self.raw_frequency_sum(z);
        self.record(value);
        self.degenerate(value, self.freq_leading, z)?;
        Ok(value)
    }

    /// `Σ_m K(-A m) exp(i⟨A m, z⟩)`, without the `|det A|` factor.
    pub fn lattice_series(&self, z: &[f64]) -> Result<Complex64> {
        let n = self.lattice.dim();
        check_dim(n, z.len())?;
        let mut acc = ComplexNeumaierSum::new();
        for (p, &k) in self.lattice_points.chunks_exact(n).zip(&self.kernel_at_points) {
            if k == 0.0 {
                continue;
            }
            let phase: f64 = p.iter().zip(z).map(|(a, b)| a * b).sum();
            acc += Complex64::from_polar(k, phase);
        }
        Ok(acc.sum())
    }

    /// `Υ^{-1}(z) = |det A| Σ_m K(-A m) exp(i⟨A m, z⟩)`.
    ///
    /// Returned as a complex number; for even kernels the imaginary part is
    /// roundoff and callers are expected to check that.
    pub fn symbol_inverse_spatial(&self, z: &[f64]) -> Result<Complex64> {
        let value = self.lattice_series(z)? * self.lattice.abs_det();
        self.record(value.norm());
        self.degenerate(value.norm(), self.spatial_leading, z)?;
        Ok(value)
    }

    /// `Υ(z) = 1 / Υ^{-1}(z)`.
    pub fn upsilon(&self, z: &[f64]) -> Result<f64> {
        Ok(1.0 / self.symbol_inverse_frequency(z)?)
    }

    /// Minimum of `Υ^{-1}` over the `N^n` grid on the dual fundamental domain.
    pub fn check_nondegeneracy(&self, points_per_axis: usize) -> Result<f64> {
        if points_per_axis < 8 {
            return Err(SkError::InvalidInput(format!(
                "nondegeneracy check needs at least 8 points per axis, got {points_per_axis}"
            )));
        }
        let mut min = f64::INFINITY;
        for z in self.lattice.fundamental_domain_grid(points_per_axis)? {
            min = min.min(self.symbol_inverse_frequency(&z)?);
        }
        Ok(min)
    }

    /// `max_z |Υ^{-1}_freq(z) - Re Υ^{-1}_spatial(z)|`, the Poisson summation gap.
    pub fn poisson_residual(&self, sample_zs: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for z in sample_zs {
            let f = self.symbol_inverse_frequency(z)?;
            let s = self.symbol_inverse_spatial(z)?;
            worst = worst.max((f - s.re).abs());
        }
        Ok(worst)
    }
}

/// Default `(M_f, M_s)`: every omitted term is below [`TRUNCATION_EPS`] times
/// the leading term of its sum.
pub fn default_truncations(lattice: &Lattice, kernel: &dyn Kernel) -> Result<(usize, usize)> {
    check_dim(lattice.dim(), kernel.dim())?;
    let origin = vec![0.0; lattice.dim()];
    // After reduction z = D t with |t|_∞ <= 1/2, so |z + D m| >= σ_min(D) (|m|_∞ - 1/2).
    let rf = kernel.frequency_tail_radius(TRUNCATION_EPS * kernel.fourier(&origin));
    let mf = (rf / lattice.dual_sigma_min() - 0.5).ceil().max(1.0);
    // |A m| >= σ_min(A) |m|_∞
    let rs = kernel.spatial_tail_radius(TRUNCATION_EPS * kernel.eval(&origin));
    let ms = (rs / lattice.generator_sigma_min()).ceil().max(1.0);
    if !mf.is_finite() || !ms.is_finite() || mf > 1e6 || ms > 1e6 {
        return Err(SkError::SizeOverflow { requested: u128::MAX, cap: DEFAULT_ENUMERATION_CAP });
    }
    Ok((mf as usize, ms as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::GaussianKernel;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sym(lat: Lattice, k: GaussianKernel) -> SymbolFunction {
        SymbolFunction::new(lat, Arc::new(k)).unwrap()
    }

    fn gaussian_1d(b: f64) -> GaussianKernel {
        GaussianKernel::from_rows(&[vec![b]]).unwrap()
    }

    fn lattice_1d(a: f64) -> Lattice {
        Lattice::from_rows(&[vec![a]]).unwrap()
    }

    /// Σ_{|m|<=8} √π exp(-(πm)^2): the frequency form at z = 0 for A = B = 1.
    fn oracle_frequency_1d() -> f64 {
        (-8..=8).map(|m: i32| PI.sqrt() * (-(PI * m as f64).powi(2)).exp()).sum()
    }

    /// Σ_{|m|<=8} exp(-m^2): the lattice form at z = 0 for A = B = 1.
    fn oracle_spatial_1d() -> f64 {
        (-8..=8).map(|m: i32| (-(m as f64).powi(2)).exp()).sum()
    }

    fn random_zs(dim: usize, count: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()).collect()
    }

    #[test]
    fn frequency_form_at_origin() {
        let sf = sym(Lattice::identity(1), GaussianKernel::isotropic(1));
        let v = sf.symbol_inverse_frequency(&[0.0]).unwrap();
        assert_relative_eq!(v, oracle_frequency_1d(), max_relative = 1e-15);
        assert!((v - 1.772_637_204_826_652).abs() < 1e-12);
        let shifted = sf.symbol_inverse_frequency(&[2.0 * PI]).unwrap();
        assert!((shifted - v).abs() <= 1e-12);
    }

    #[test]
    fn tensor_product_in_two_dimensions() {
        let sf = sym(Lattice::identity(2), GaussianKernel::isotropic(2));
        let v = sf.symbol_inverse_frequency(&[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, oracle_frequency_1d().powi(2), max_relative = 1e-14);
    }

    #[test]
    fn lattice_form_values() {
        let sf = sym(Lattice::identity(1), GaussianKernel::isotropic(1));
        let v = sf.symbol_inverse_spatial(&[0.0]).unwrap();
        assert_relative_eq!(v.re, oracle_spatial_1d(), max_relative = 1e-15);
        assert!(v.im.abs() <= 1e-12);
        let sf2 = sym(lattice_1d(2.0), GaussianKernel::isotropic(1));
        let v2 = sf2.symbol_inverse_spatial(&[0.0]).unwrap();
        let oracle: f64 = 2.0 * (-8..=8).map(|m: i32| (-4.0 * (m as f64).powi(2)).exp()).sum::<f64>();
        assert_relative_eq!(v2.re, oracle, max_relative = 1e-15);
        assert!((v2.re - 2.073_263_005_695_636_5).abs() < 1e-12);
        let hex = sym(Lattice::hexagonal(), GaussianKernel::isotropic(2));
        assert!(hex.symbol_inverse_spatial(&[0.0, 0.0]).unwrap().im.abs() <= 1e-12);
    }

    #[test]
    fn two_forms_agree_at_origin() {
        assert!((oracle_frequency_1d() - oracle_spatial_1d()).abs() <= 1e-10);
    }

    #[test]
    fn upsilon_is_reciprocal() {
        let sf = sym(Lattice::identity(1), GaussianKernel::isotropic(1));
        assert_relative_eq!(sf.upsilon(&[0.0]).unwrap(), 1.0 / oracle_frequency_1d(), max_relative = 1e-15);
        assert!((sf.upsilon(&[0.0]).unwrap() - 0.564_131_226_218_842).abs() < 1e-12);
    }

    #[test]
    fn periodicity_and_evenness() {
        for (lat, k) in [
            (Lattice::hexagonal(), GaussianKernel::isotropic(2)),
            (
                Lattice::from_rows(&[vec![1.0, 0.3], vec![-0.2, 0.8]]).unwrap(),
                GaussianKernel::from_rows(&[vec![1.1, 0.0], vec![0.2, 0.9]]).unwrap(),
            ),
        ] {
            let sf = sym(lat.clone(), k);
            for z in random_zs(2, 32, 11, 6.0) {
                let base = sf.symbol_inverse_frequency(&z).unwrap();
                let neg: Vec<f64> = z.iter().map(|v| -v).collect();
                assert_relative_eq!(sf.symbol_inverse_frequency(&neg).unwrap(), base, max_relative = 1e-11);
                for l in [[1, 0], [0, -2], [2, 2], [-1, 1]] {
                    let d = lat.dual_point(&l).unwrap();
                    let zs: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + b).collect();
                    assert_relative_eq!(sf.symbol_inverse_frequency(&zs).unwrap(), base, max_relative = 1e-11);
                    assert_relative_eq!(sf.upsilon(&zs).unwrap(), 1.0 / base, max_relative = 1e-11);
                }
            }
        }
    }

    #[test]
    fn poisson_equivalence() {
        let cases = [
            (Lattice::identity(1), GaussianKernel::isotropic(1), 1e-10),
            (lattice_1d(2.0), GaussianKernel::isotropic(1), 1e-10),
            (Lattice::identity(2), GaussianKernel::isotropic(2), 1e-9),
            (Lattice::hexagonal(), GaussianKernel::isotropic(2), 1e-9),
            (
                Lattice::from_rows(&[vec![0.9, 0.4], vec![-0.3, 1.2]]).unwrap(),
                GaussianKernel::from_rows(&[vec![0.8, 0.1], vec![0.0, 1.3]]).unwrap(),
                1e-9,
            ),
        ];
        for (lat, k, tol) in cases {
            let n = lat.dim();
            let sf = sym(lat, k);
            let r = sf.poisson_residual(&random_zs(n, 32, 3, 10.0)).unwrap();
            assert!(r <= tol, "residual {r}");
            for z in random_zs(n, 8, 4, 10.0) {
                let s = sf.symbol_inverse_spatial(&z).unwrap();
                assert!(s.im.abs() <= 1e-10 * s.re);
            }
        }
    }

    #[test]
    fn nondegeneracy_minimum() {
        let sf = sym(Lattice::identity(1), GaussianKernel::isotropic(1));
        let min = sf.check_nondegeneracy(64).unwrap();
        // minimum at z = π: Σ_m √π exp(-(π(2m+1))^2 / 4)
        let oracle: f64 = (-8..8).map(|m: i32| PI.sqrt() * (-(PI * (2 * m + 1) as f64).powi(2) / 4.0).exp()).sum();
        assert_relative_eq!(min, oracle, max_relative = 1e-13);
        assert!(min > 0.0);
        assert_eq!(sf.min_symbol_seen(), min);

        // a wider kernel (smaller B) has a much smaller minimum, still positive
        let wide = sym(Lattice::identity(1), gaussian_1d(0.5));
        let wide_min = wide.check_nondegeneracy(64).unwrap();
        assert!(wide_min > 0.0 && wide_min < 1e-2 * min);
        // a narrower kernel (larger B) pushes the minimum up toward K(0) = 1
        let narrow = sym(Lattice::identity(1), gaussian_1d(4.0));
        let narrow_min = narrow.check_nondegeneracy(64).unwrap();
        assert!(narrow_min > min);
        assert!(sf.check_nondegeneracy(4).is_err());
    }

    #[test]
    fn degenerate_symbol_is_reported() {
        // spacing far below the kernel width: Υ^{-1}(π) underflows the threshold
        let sf = sym(Lattice::identity(1), gaussian_1d(0.2));
        match sf.check_nondegeneracy(64) {
            Err(SkError::DegenerateSymbol { value, threshold, .. }) => assert!(value < threshold),
            other => panic!("expected DegenerateSymbol, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_stable_under_doubling() {
        for (lat, k) in
            [(Lattice::identity(1), GaussianKernel::isotropic(1)), (Lattice::hexagonal(), GaussianKernel::isotropic(2))]
        {
            let n = lat.dim();
            let base = sym(lat.clone(), k.clone());
            let doubled =
                SymbolFunction::with_truncation(lat, Arc::new(k), 2 * base.freq_truncation(), 2 * base.spatial_truncation())
                    .unwrap();
            for z in random_zs(n, 16, 9, 5.0) {
                let a = base.symbol_inverse_frequency(&z).unwrap();
                let b = doubled.symbol_inverse_frequency(&z).unwrap();
                assert!((a - b).abs() <= 1e-12 * a);
                let a = base.symbol_inverse_spatial(&z).unwrap();
                let b = doubled.symbol_inverse_spatial(&z).unwrap();
                assert!((a - b).norm() <= 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn too_small_frequency_truncation_is_rejected() {
        let r = SymbolFunction::with_truncation(Lattice::identity(1), Arc::new(gaussian_1d(4.0)), 1, 8);
        assert!(matches!(r, Err(SkError::InvalidInput(_))));
    }

    #[test]
    fn faulty_transform_breaks_poisson() {
        let k = GaussianKernel::isotropic(1).with_faulty_fourier_exponent(1.0);
        let sf = sym(Lattice::identity(1), k);
        assert!(sf.poisson_residual(&[vec![0.0], vec![1.0]]).unwrap() > 1e-3);
    }

    #[test]
    fn positivity_on_random_points() {
        let sf = sym(Lattice::hexagonal(), GaussianKernel::isotropic(2));
        for z in random_zs(2, 100, 21, 20.0) {
            assert!(sf.upsilon(&z).unwrap() > 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let sf = sym(Lattice::identity(2), GaussianKernel::isotropic(2));
        assert!(matches!(sf.symbol_inverse_frequency(&[0.0]), Err(SkError::DimensionMismatch { .. })));
        assert!(SymbolFunction::new(Lattice::identity(2), Arc::new(GaussianKernel::isotropic(1))).is_err());
    }
}
