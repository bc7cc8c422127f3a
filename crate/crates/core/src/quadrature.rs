//! Tensor-product trapezoidal rules for Fourier-type integrals over boxes.

use crate::error::{Result, SkError};
use crate::lattice::{checked_power, for_each_multi_index, DEFAULT_ENUMERATION_CAP};
use crate::summation::ComplexNeumaierSum;
use num_complex::Complex64;

/// Nodes and weights of the rule `[-half_width, half_width]^n` with
/// `points_per_axis` equispaced nodes (endpoints included) on every axis,
/// together with a complex value attached to every node.
///
/// Nodes are stored in lexicographic order of their per-axis indices.
#[derive(Debug, Clone)]
pub struct TensorTrapezoid {
    dim: usize,
    axis_nodes: Vec<f64>,
    /// Node value already multiplied by the quadrature weight.
    weighted: Vec<Complex64>,
}

impl TensorTrapezoid {
    /// Builds the rule and tabulates `integrand` at every node.
    pub fn new(
        dim: usize,
        half_width: f64,
        points_per_axis: usize,
        integrand: impl FnMut(&[f64]) -> Result<Complex64>,
    ) -> Result<Self> {
        Self::with_cap(dim, half_width, points_per_axis, DEFAULT_ENUMERATION_CAP, integrand)
    }

    pub fn with_cap(
        dim: usize,
        half_width: f64,
        points_per_axis: usize,
        cap: u128,
        mut integrand: impl FnMut(&[f64]) -> Result<Complex64>,
    ) -> Result<Self> {
        if points_per_axis < 2 || !(half_width > 0.0) || !half_width.is_finite() {
            return Err(SkError::InvalidInput(format!(
                "trapezoid rule needs >= 2 points and a positive half width (got {points_per_axis}, {half_width})"
            )));
        }
        let total = checked_power(points_per_axis as u128, dim, cap)? as usize;
        let p = points_per_axis;
        let h = 2.0 * half_width / (p - 1) as f64;
        let axis_nodes: Vec<f64> = (0..p).map(|i| -half_width + h * i as f64).collect();
        let axis_weight = |i: usize| if i == 0 || i == p - 1 { 0.5 * h } else { h };

        let mut weighted = Vec::with_capacity(total);
        let mut point = vec![0.0; dim];
        let mut failure = None;
        for_each_multi_index(dim, 0, p as i64 - 1, |idx| {
            if failure.is_some() {
                return;
            }
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                point[k] = axis_nodes[i as usize];
                w *= axis_weight(i as usize);
            }
            match integrand(&point) {
                Ok(v) => weighted.push(v * w),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Self { dim, axis_nodes, weighted })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weighted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weighted.is_empty()
    }

    /// `Σ_k w_k g(y_k) exp(i sign ⟨y_k, t⟩)` with compensated summation.
    pub fn transform(&self, t: &[f64], sign: f64) -> Complex64 {
        debug_assert_eq!(t.len(), self.dim);
        let p = self.axis_nodes.len();
        // exp(i sign y t) factorizes over axes
        let tables: Vec<Vec<Complex64>> =
            t.iter().map(|&tk| self.axis_nodes.iter().map(|&y| Complex64::from_polar(1.0, sign * y * tk)).collect()).collect();

        let mut acc = ComplexNeumaierSum::new();
        if self.dim == 0 {
            return self.weighted.first().copied().unwrap_or_default();
        }
        let inner = p;
        let outer = self.weighted.len() / inner;
        let mut outer_idx = vec![0usize; self.dim - 1];
        for block in 0..outer {
            let mut prefix = Complex64::new(1.0, 0.0);
            for (k, &i) in outer_idx.iter().enumerate() {
                prefix *= tables[k][i];
            }
            let last = &tables[self.dim - 1];
            let row = &self.weighted[block * inner..(block + 1) * inner];
            for (w, e) in row.iter().zip(last) {
                acc += *w * prefix * e;
            }
            // advance the outer multi-index
            for k in (0..outer_idx.len()).rev() {
                if outer_idx[k] + 1 < p {
                    outer_idx[k] += 1;
                    break;
                }
                outer_idx[k] = 0;
            }
        }
        acc.sum()
    }

    /// Plain weighted sum of the tabulated values.
    pub fn integral(&self) -> Complex64 {
        let mut acc = ComplexNeumaierSum::new();
        for w in &self.weighted {
            acc += *w;
        }
        acc.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_gaussian() {
        let rule = TensorTrapezoid::new(2, 8.0, 201, |x| Ok(Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0))).unwrap();
        assert!((rule.integral().re - PI).abs() < 1e-12);
    }

    #[test]
    fn transform_matches_direct_sum() {
        let f = |x: &[f64]| Ok(Complex64::new((-(x[0] * x[0]) - 0.5 * x[1] * x[1] - 0.3 * x[0] * x[1]).exp(), 0.0));
        let rule = TensorTrapezoid::new(2, 3.0, 13, f).unwrap();
        let t = [0.7, -1.3];
        let fast = rule.transform(&t, -1.0);
        let h = 6.0 / 12.0;
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 0..13 {
            for j in 0..13 {
                let x = [-3.0 + h * i as f64, -3.0 + h * j as f64];
                let wi = if i == 0 || i == 12 { 0.5 * h } else { h };
                let wj = if j == 0 || j == 12 { 0.5 * h } else { h };
                direct += f(&x).unwrap() * wi * wj * Complex64::from_polar(1.0, -(x[0] * t[0] + x[1] * t[1]));
            }
        }
        assert!((fast - direct).norm() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TensorTrapezoid::new(1, 1.0, 1, |_| Ok(Complex64::default())).is_err());
        assert!(TensorTrapezoid::new(1, -1.0, 8, |_| Ok(Complex64::default())).is_err());
        assert!(matches!(
            TensorTrapezoid::with_cap(3, 1.0, 100, 1000, |_| Ok(Complex64::default())),
            Err(SkError::SizeOverflow { .. })
        ));
    }
}
