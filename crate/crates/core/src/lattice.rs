//! Lattices `A Z^n`, their dual translates `2π A^{-T} Z^n`, and the dual
//! fundamental domain `2π A^{-T} [0,1)^n`.

use crate::error::{Result, SkError};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Default cap on the number of points produced by any enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Generators whose norm-based condition estimate exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Builds a square matrix from row-major rows, rejecting ragged or
/// non-finite input. `field` names the offending input in error messages.
pub fn matrix_from_rows(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(SkError::InvalidInput(format!("{field}: matrix is empty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(SkError::InvalidInput(format!(
                "{field}: matrix is not square (row {i} has {} entries, expected {n})",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(SkError::InvalidInput(format!("{field}: entry ({i},{j}) is not finite")));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Row-major copy of a matrix.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Inverts `m` after checking it is square, finite and reasonably conditioned.
/// Returns `(inverse, |det|, condition estimate)`.
pub(crate) fn checked_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    if !m.is_square() {
        return Err(SkError::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SkError::InvalidInput("matrix has non-finite entries".into()));
    }
    let abs_det = m.determinant().abs();
    if abs_det == 0.0 || !abs_det.is_finite() {
        return Err(SkError::SingularMatrix { abs_det, cond: f64::INFINITY });
    }
    let inverse = m.clone().try_inverse().ok_or(SkError::SingularMatrix { abs_det, cond: f64::INFINITY })?;
    // ||M||_F ||M^-1||_F bounds the 2-norm condition number from above by at most a factor n.
    let cond = m.norm() * inverse.norm();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(SkError::SingularMatrix { abs_det, cond });
    }
    Ok((inverse, abs_det, cond))
}

pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// The lattice `Ω_A = {A m : m ∈ Z^n}` together with its dual data.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    generator: DMatrix<f64>,
    inverse: DMatrix<f64>,
    dual_basis: DMatrix<f64>,
    abs_det: f64,
    cond_estimate: f64,
    generator_sigma_min: f64,
    dual_sigma_min: f64,
}

impl Lattice {
    /// Builds the lattice generated by the columns of `generator`.
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        let (inverse, abs_det, cond_estimate) = checked_inverse(&generator)?;
        let dim = generator.nrows();
        let dual_basis = inverse.transpose() * (2.0 * PI);
        let generator_sigma_min = smallest_singular_value(&generator);
        let dual_sigma_min = smallest_singular_value(&dual_basis);
        Ok(Self { dim, generator, inverse, dual_basis, abs_det, cond_estimate, generator_sigma_min, dual_sigma_min })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "A")?)
    }

    /// The integer lattice `Z^n`.
    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is nonsingular")
    }

    /// The hexagonal lattice with generator `[[1, 1/2], [0, √3/2]]`.
    pub fn hexagonal() -> Self {
        Self::from_rows(&[vec![1.0, 0.5], vec![0.0, 3f64.sqrt() / 2.0]]).expect("hexagonal generator is nonsingular")
    }

    /// The lattice generated by `factor * A`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.generator * factor)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `D = 2π (A^{-1})^T`.
    pub fn dual_basis(&self) -> &DMatrix<f64> {
        &self.dual_basis
    }

    /// `|det A|`, the volume of a lattice cell.
    pub fn abs_det(&self) -> f64 {
        self.abs_det
    }

    /// `||A||_F ||A^{-1}||_F`.
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    /// Smallest singular value of `A`: `|A m| >= σ_min |m|` for every `m`.
    pub fn generator_sigma_min(&self) -> f64 {
        self.generator_sigma_min
    }

    /// Smallest singular value of the dual basis `D`.
    pub fn dual_sigma_min(&self) -> f64 {
        self.dual_sigma_min
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.dim {
            Ok(())
        } else {
            Err(SkError::DimensionMismatch { expected: self.dim, got: len })
        }
    }

    /// `A m`.
    pub fn lattice_point(&self, m: &[i64]) -> Result<Vec<f64>> {
        self.check_len(m.len())?;
        Ok(mat_int_vec(&self.generator, m))
    }

    /// `D l = 2π A^{-T} l`.
    pub fn dual_point(&self, l: &[i64]) -> Result<Vec<f64>> {
        self.check_len(l.len())?;
        Ok(mat_int_vec(&self.dual_basis, l))
    }

    /// `A x` for a real coordinate vector.
    pub fn apply_generator(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(mat_vec(&self.generator, x))
    }

    /// Coordinates of `z` in the dual basis, `D^{-1} z = A^T z / (2π)`.
    pub fn dual_coordinates(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|k| self.generator[(k, i)] * z[k]).sum::<f64>() / (2.0 * PI)).collect()
    }

    /// Shifts `z` by a dual lattice vector so that its dual coordinates lie
    /// in `[-1/2, 1/2]`. Any function periodic over the dual lattice is
    /// unchanged by this reduction.
    pub fn reduce_to_dual_cell(&self, z: &[f64]) -> Vec<f64> {
        let shift: Vec<i64> = self.dual_coordinates(z).iter().map(|t| t.round() as i64).collect();
        let dz = mat_int_vec(&self.dual_basis, &shift);
        z.iter().zip(dz).map(|(a, b)| a - b).collect()
    }

    /// All `m ∈ Z^n` with `|m|_∞ <= radius`, lexicographically ordered.
    pub fn enumerate_box(&self, radius: usize) -> Result<IndexSet> {
        IndexSet::cube(self.dim, radius, DEFAULT_ENUMERATION_CAP)
    }

    /// Uniform half-open grid `D (j / N)`, `j ∈ {0..N-1}^n`, lexicographic in `j`.
    pub fn fundamental_domain_grid(&self, points_per_axis: usize) -> Result<Vec<Vec<f64>>> {
        self.fundamental_domain_grid_with_cap(points_per_axis, DEFAULT_ENUMERATION_CAP)
    }

    pub fn fundamental_domain_grid_with_cap(&self, points_per_axis: usize, cap: u128) -> Result<Vec<Vec<f64>>> {
        if points_per_axis < 2 {
            return Err(SkError::InvalidInput(format!(
                "fundamental domain grid needs at least 2 points per axis, got {points_per_axis}"
            )));
        }
        let size = checked_power(points_per_axis as u128, self.dim, cap)?;
        let n = points_per_axis as f64;
        let mut out = Vec::with_capacity(size as usize);
        for_each_multi_index(self.dim, 0, points_per_axis as i64 - 1, |j| {
            let frac: Vec<f64> = j.iter().map(|&v| v as f64 / n).collect();
            out.push(mat_vec(&self.dual_basis, &frac));
        });
        Ok(out)
    }
}

#[inline]
pub(crate) fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    (0..n).map(|i| (0..m.ncols()).map(|k| m[(i, k)] * x[k]).sum()).collect()
}

#[inline]
pub(crate) fn mat_int_vec(m: &DMatrix<f64>, x: &[i64]) -> Vec<f64> {
    let n = m.nrows();
    (0..n).map(|i| (0..m.ncols()).map(|k| m[(i, k)] * x[k] as f64).sum()).collect()
}

/// `base^exp`, failing with [`SkError::SizeOverflow`] once it passes `cap`.
pub(crate) fn checked_power(base: u128, exp: usize, cap: u128) -> Result<u128> {
    let mut size: u128 = 1;
    for _ in 0..exp {
        size = size.saturating_mul(base);
        if size > cap {
            return Err(SkError::SizeOverflow { requested: base.saturating_pow(exp as u32), cap });
        }
    }
    Ok(size)
}

/// Visits every vector in `{lo..=hi}^dim` in lexicographic order.
pub(crate) fn for_each_multi_index(dim: usize, lo: i64, hi: i64, mut f: impl FnMut(&[i64])) {
    if hi < lo {
        return;
    }
    let mut idx = vec![lo; dim];
    loop {
        f(&idx);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if idx[axis] < hi {
                idx[axis] += 1;
                break;
            }
            idx[axis] = lo;
        }
    }
}

/// A finite, duplicate-free, lexicographically ordered set of integer vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    indices: Vec<Vec<i64>>,
}

impl IndexSet {
    /// The cube `{-radius..=radius}^dim`, failing if it would hold more than `cap` indices.
    pub fn cube(dim: usize, radius: usize, cap: u128) -> Result<Self> {
        checked_power(2 * radius as u128 + 1, dim, cap)?;
        let r = radius as i64;
        let mut indices = Vec::new();
        for_each_multi_index(dim, -r, r, |m| indices.push(m.to_vec()));
        Ok(Self { dim, indices })
    }

    /// Sorts and deduplicates arbitrary indices into an `IndexSet`.
    pub fn from_indices(dim: usize, mut indices: Vec<Vec<i64>>) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|m| m.len() != dim) {
            return Err(SkError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        indices.sort();
        indices.dedup();
        Ok(Self { dim, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<i64>] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.indices.iter().map(Vec::as_slice)
    }

    /// Position of `m` in the ordering, if present.
    pub fn position(&self, m: &[i64]) -> Option<usize> {
        self.indices.binary_search_by(|probe| probe.as_slice().cmp(m)).ok()
    }

    pub fn contains(&self, m: &[i64]) -> bool {
        self.position(m).is_some()
    }

    /// Largest `|m|_∞` over the set.
    pub fn radius(&self) -> i64 {
        self.indices.iter().flat_map(|m| m.iter().map(|v| v.abs())).max().unwrap_or(0)
    }
}

/// `|m|_∞`.
pub fn inf_norm(m: &[i64]) -> i64 {
    m.iter().map(|v| v.abs()).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hex() -> Lattice {
        Lattice::hexagonal()
    }

    #[test]
    fn identity_lattice() {
        let lat = Lattice::identity(2);
        assert_eq!(lat.abs_det(), 1.0);
        assert_relative_eq!(lat.dual_basis()[(0, 0)], 2.0 * PI);
        assert_relative_eq!(lat.dual_basis()[(1, 1)], 2.0 * PI);
        assert_eq!(lat.dual_basis()[(0, 1)], 0.0);
    }

    #[test]
    fn diagonal_lattice() {
        let lat = Lattice::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_relative_eq!(lat.abs_det(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(lat.dual_basis()[(0, 0)], PI, max_relative = 1e-15);
        assert_relative_eq!(lat.dual_basis()[(1, 1)], 4.0 * PI, max_relative = 1e-15);
        assert_eq!(lat.lattice_point(&[1, 2]).unwrap(), vec![2.0, 1.0]);
        let d = lat.dual_point(&[1, 0]).unwrap();
        assert_relative_eq!(d[0], PI);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn hexagonal_lattice() {
        let lat = hex();
        assert_relative_eq!(lat.abs_det(), 0.866_025_403_784_438_6, max_relative = 1e-12);
        let p = lat.lattice_point(&[1, 1]).unwrap();
        assert_relative_eq!(p[0], 1.5);
        assert_relative_eq!(p[1], 0.866_025_403_784_438_6, max_relative = 1e-12);
        let a10 = lat.lattice_point(&[1, 0]).unwrap();
        let d01 = lat.dual_point(&[0, 1]).unwrap();
        let dot: f64 = a10.iter().zip(&d01).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_dual_point() {
        let lat = Lattice::identity(1);
        assert_relative_eq!(lat.dual_point(&[1]).unwrap()[0], 2.0 * PI);
    }

    #[test]
    fn rejects_singular_and_ill_conditioned() {
        assert!(matches!(Lattice::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]), Err(SkError::SingularMatrix { .. })));
        assert!(matches!(Lattice::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-9]]), Err(SkError::SingularMatrix { .. })));
        assert!(matches!(Lattice::from_rows(&[vec![1.0, 0.0], vec![0.0]]), Err(SkError::InvalidInput(_))));
        assert!(matches!(Lattice::from_rows(&[vec![f64::NAN]]), Err(SkError::InvalidInput(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let lat = Lattice::identity(2);
        assert_eq!(lat.lattice_point(&[1]), Err(SkError::DimensionMismatch { expected: 2, got: 1 }));
        assert!(lat.dual_point(&[1, 2, 3]).is_err());
    }

    #[test]
    fn generator_times_inverse_is_identity() {
        for lat in [hex(), Lattice::from_rows(&[vec![0.3, -1.2, 0.1], vec![0.7, 0.4, 2.0], vec![-0.5, 0.0, 1.1]]).unwrap()] {
            let prod = lat.generator() * lat.inverse();
            let n = lat.dim();
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - expect).abs() <= 1e-12);
                }
            }
            assert_relative_eq!(lat.abs_det(), lat.generator().determinant().abs(), max_relative = 1e-12);
        }
    }

    #[test]
    fn negative_determinant_uses_absolute_value() {
        let lat = Lattice::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(lat.abs_det(), 1.0);
    }

    #[test]
    fn duality_pairing_and_phase_invariance() {
        let lat = hex();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zs: Vec<Vec<f64>> = (0..16).map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]).collect();
        let range = -4..=4i64;
        for m0 in range.clone() {
            for m1 in range.clone() {
                let am = lat.lattice_point(&[m0, m1]).unwrap();
                for l0 in range.clone() {
                    for l1 in range.clone() {
                        let dl = lat.dual_point(&[l0, l1]).unwrap();
                        let pairing: f64 = am.iter().zip(&dl).map(|(a, b)| a * b).sum();
                        let expected = 2.0 * PI * (m0 * l0 + m1 * l1) as f64;
                        assert!((pairing - expected).abs() <= 1e-10);
                        for z in zs.iter().step_by(5) {
                            let p0: f64 = z.iter().zip(&am).map(|(a, b)| a * b).sum();
                            let p1 = p0 + pairing;
                            assert!((p0.cos() - p1.cos()).abs() <= 1e-10);
                            assert!((p0.sin() - p1.sin()).abs() <= 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dual_volume() {
        for lat in [hex(), Lattice::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap(), Lattice::identity(3)] {
            let n = lat.dim() as i32;
            assert_relative_eq!(lat.dual_basis().determinant().abs(), (2.0 * PI).powi(n) / lat.abs_det(), max_relative = 1e-12);
        }
    }

    #[test]
    fn box_enumeration() {
        let l1 = Lattice::identity(1);
        assert_eq!(l1.enumerate_box(1).unwrap().indices(), &[vec![-1], vec![0], vec![1]]);
        let l2 = Lattice::identity(2);
        assert_eq!(l2.enumerate_box(0).unwrap().indices(), &[vec![0, 0]]);
        let b = l2.enumerate_box(2).unwrap();
        assert_eq!(b.len(), 25);
        assert!(b.indices().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.radius(), 2);
        assert_eq!(b.position(&[-2, -2]), Some(0));
        assert_eq!(b.position(&[0, 0]), Some(12));
        assert!(!b.contains(&[3, 0]));
    }

    #[test]
    fn box_enumeration_cap() {
        assert!(matches!(IndexSet::cube(8, 10, DEFAULT_ENUMERATION_CAP), Err(SkError::SizeOverflow { .. })));
        assert!(IndexSet::cube(2, 1, 9).is_ok());
        assert!(IndexSet::cube(2, 1, 8).is_err());
    }

    #[test]
    fn from_indices_sorts_and_dedups() {
        let s = IndexSet::from_indices(1, vec![vec![2], vec![-1], vec![2]]).unwrap();
        assert_eq!(s.indices(), &[vec![-1], vec![2]]);
        assert!(IndexSet::from_indices(2, vec![vec![1]]).is_err());
    }

    #[test]
    fn fundamental_domain_grids() {
        let grid = Lattice::identity(1).fundamental_domain_grid(4).unwrap();
        let expect = [0.0, PI / 2.0, PI, 1.5 * PI];
        for (g, e) in grid.iter().zip(expect) {
            assert_relative_eq!(g[0], e, epsilon = 1e-15);
        }
        let lat = Lattice::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let grid = lat.fundamental_domain_grid(2).unwrap();
        assert_eq!(grid.len(), 4);
        assert_eq!(grid[0], vec![0.0, 0.0]);
        assert_relative_eq!(grid[3][0], PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(grid[3][1], 2.0 * PI, epsilon = 1e-15);
        assert_eq!(Lattice::from_rows(&[vec![3.7]]).unwrap().fundamental_domain_grid(2).unwrap()[0], vec![0.0]);
        assert!(lat.fundamental_domain_grid(1).is_err());
    }

    #[test]
    fn reduction_to_dual_cell() {
        let lat = hex();
        let z = vec![13.1, -7.4];
        let r = lat.reduce_to_dual_cell(&z);
        for t in lat.dual_coordinates(&r) {
            assert!(t.abs() <= 0.5 + 1e-12);
        }
        // difference is a dual lattice vector
        let diff: Vec<f64> = z.iter().zip(&r).map(|(a, b)| a - b).collect();
        for t in lat.dual_coordinates(&diff) {
            assert!((t - t.round()).abs() < 1e-12);
        }
    }
}
