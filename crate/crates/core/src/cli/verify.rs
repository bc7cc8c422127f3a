//! The `verify` suite: every module-level identity checked against its
//! tolerance, collected into one deterministic report.

use crate::error::{Result, SkError};
use crate::format::Sci;
use crate::fundamental::{CardinalCoefficients, FundamentalSpline, IntegralEvaluator, IntegralForm};
use crate::interpolation::oracle_discrepancy_with;
use crate::kernel::{plancherel_residual, scaling_identity_residual, FourierQuadrature, Kernel, MIN_QUADRATURE_POINTS};
use crate::lattice::mat_vec;
use crate::symbol::{SymbolFunction, DEGENERACY_THRESHOLD};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::config::Job;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub value: Sci,
    pub tolerance: Sci,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckResult {
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self { value: Sci(value), tolerance: Sci(tolerance), pass: value <= tolerance, error: None }
    }

    fn failed(tolerance: f64, error: impl std::fmt::Display) -> Self {
        Self { value: Sci(f64::NAN), tolerance: Sci(tolerance), pass: false, error: Some(error.to_string()) }
    }

    fn from_result(r: Result<f64>, tolerance: f64) -> Self {
        match r {
            Ok(v) => Self::at_most(v, tolerance),
            Err(e) => Self::failed(tolerance, e),
        }
    }
}

/// Check name to outcome; a `BTreeMap` so the JSON key order is fixed.
pub type VerifyReport = BTreeMap<String, CheckResult>;

pub fn all_pass(report: &VerifyReport) -> bool {
    report.values().all(|c| c.pass)
}

pub fn to_json(report: &VerifyReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

const FOURIER_SAMPLES: usize = 32;
const INVERSE_SAMPLES: usize = 8;
const SCALING_SAMPLES: usize = 8;
const POISSON_SAMPLES: usize = 32;
const PERIODICITY_SAMPLES: usize = 16;
const TRIPLE_SAMPLES: usize = 16;

fn uniform(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-half..=half)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Points per axis for a trapezoid rule of half width `half_width` whose
/// aliased copies sit beyond `reach` (the largest argument plus the tail
/// radius of the transformed function).
fn trapezoid_points(half_width: f64, reach: f64) -> usize {
    let p = (2.0 * half_width * reach / (2.0 * PI)).ceil() as usize + 1;
    let p = p.max(MIN_QUADRATURE_POINTS);
    p + p % 2
}

/// Test matrices for the scaling identity; the second is never diagonal when `n > 1`.
pub fn scaling_matrices(n: usize) -> Vec<DMatrix<f64>> {
    if n == 1 {
        return vec![DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 0.5), DMatrix::from_element(1, 1, -1.5)];
    }
    let diag = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + 0.5 * i as f64 } else { 0.0 });
    let shear = DMatrix::from_fn(n, n, |i, j| match j as i64 - i as i64 {
        0 => 1.0,
        1 => 0.5,
        -1 => 0.2,
        _ => 0.0,
    });
    let angle: f64 = 0.7;
    let rot = DMatrix::from_fn(n, n, |i, j| match (i, j) {
        (0, 0) | (1, 1) => angle.cos(),
        (0, 1) => -angle.sin(),
        (1, 0) => angle.sin(),
        _ if i == j => 1.0,
        _ => 0.0,
    }) * 1.3;
    vec![diag, shear, rot]
}

/// Builds the symbol, coefficient table and fundamental spline once and runs
/// every check. Failures are recorded in the report, never propagated.
pub fn run_checks(job: &Job) -> VerifyReport {
    let n = job.dim;
    let tol = &job.tol;
    let kernel = &job.kernel;
    let shared: Arc<dyn Kernel> = Arc::new(kernel.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let mut report = VerifyReport::new();
    let origin = vec![0.0; n];

    // Closed-form transform against the trapezoid rule in space.
    let shape_t = kernel.shape().expect("gaussian has a shape").transpose();
    let zs: Vec<Vec<f64>> = (0..FOURIER_SAMPLES).map(|_| mat_vec(&shape_t, &uniform(&mut rng, n, 3.0))).collect();
    let fourier = (|| {
        let half = kernel.spatial_tail_radius(1e-18);
        let zmax = zs.iter().map(|z| norm(z)).fold(0.0, f64::max);
        let reach = zmax + kernel.frequency_tail_radius(1e-12 * kernel.fourier(&origin));
        let quad = FourierQuadrature::spatial(kernel, half, trapezoid_points(half, reach))?;
        let mut worst: f64 = 0.0;
        for z in &zs {
            worst = worst.max((quad.forward(z)? - kernel.fourier(z)).norm());
        }
        Ok(worst)
    })();
    report.insert("fourier_quadrature".into(), CheckResult::from_result(fourier, tol.fourier));

    report.insert("plancherel".into(), CheckResult::at_most(plancherel_residual(kernel), tol.plancherel));

    // Inverse transform of the closed form recovers the kernel.
    let shape_inv = kernel.shape_inv_t().transpose();
    let xs: Vec<Vec<f64>> = (0..INVERSE_SAMPLES).map(|_| mat_vec(&shape_inv, &uniform(&mut rng, n, 2.0))).collect();
    let inverse = (|| {
        let half = kernel.frequency_tail_radius(1e-18 * kernel.fourier(&origin));
        let xmax = xs.iter().map(|x| norm(x)).fold(0.0, f64::max);
        let reach = xmax + kernel.spatial_tail_radius(1e-12);
        let quad = FourierQuadrature::frequency(kernel, half, trapezoid_points(half, reach))?;
        let mut worst: f64 = 0.0;
        for x in &xs {
            worst = worst.max((quad.inverse(x)? - kernel.eval(x)).norm());
        }
        Ok(worst)
    })();
    report.insert("inverse_relation".into(), CheckResult::from_result(inverse, tol.inverse));

    let zs: Vec<Vec<f64>> = (0..SCALING_SAMPLES).map(|_| uniform(&mut rng, n, 3.0)).collect();
    let scaling = scaling_matrices(n)
        .iter()
        .map(|q| scaling_identity_residual(kernel, q, &zs))
        .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)));
    report.insert("scaling_identity".into(), CheckResult::from_result(scaling, tol.scaling));

    let symbol = SymbolFunction::new(job.lattice.clone(), shared.clone());
    let dual = job.lattice.dual_basis();

    let zs: Vec<Vec<f64>> = (0..POISSON_SAMPLES).map(|_| mat_vec(dual, &uniform(&mut rng, n, 1.0))).collect();
    let poisson = symbol.as_ref().map_err(Clone::clone).and_then(|s| s.poisson_residual(&zs));
    report.insert("poisson".into(), CheckResult::from_result(poisson, tol.poisson));

    let zs: Vec<Vec<f64>> = (0..PERIODICITY_SAMPLES).map(|_| mat_vec(dual, &uniform(&mut rng, n, 1.0))).collect();
    let periodicity = symbol.as_ref().map_err(Clone::clone).and_then(|s| {
        let mut worst: f64 = 0.0;
        for z in &zs {
            let base = s.symbol_inverse_spatial(z)?;
            for k in 0..n {
                let mut e = vec![0i64; n];
                e[k] = 1;
                let shift = job.lattice.dual_point(&e)?;
                let moved: Vec<f64> = z.iter().zip(&shift).map(|(a, b)| a + b).collect();
                worst = worst.max((s.symbol_inverse_spatial(&moved)? - base).norm());
            }
        }
        Ok(worst)
    });
    report.insert("periodicity".into(), CheckResult::from_result(periodicity, tol.periodicity));

    let threshold = DEGENERACY_THRESHOLD * kernel.fourier(&origin);
    let nondegeneracy = match symbol.as_ref().map_err(Clone::clone).and_then(|s| s.check_nondegeneracy(job.grid)) {
        Ok(min) => CheckResult { value: Sci(min), tolerance: Sci(threshold), pass: min >= threshold, error: None },
        Err(SkError::DegenerateSymbol { value, threshold, .. }) => CheckResult {
            value: Sci(value),
            tolerance: Sci(threshold),
            pass: false,
            error: Some("symbol vanishes numerically".into()),
        },
        Err(e) => CheckResult::failed(threshold, e),
    };
    report.insert("nondegeneracy".into(), nondegeneracy);

    let table = symbol
        .as_ref()
        .map_err(Clone::clone)
        .and_then(|s| CardinalCoefficients::compute_with_limit(s, job.grid, tol.reconstruction_limit));
    let reconstruction = match &table {
        Ok(t) => CheckResult::at_most(t.reconstruction_residual(), tol.reconstruction),
        Err(SkError::ReconstructionFailure { residual, .. }) => CheckResult {
            value: Sci(*residual),
            tolerance: Sci(tol.reconstruction),
            pass: false,
            error: Some("coefficient grid too coarse".into()),
        },
        Err(e) => CheckResult::failed(tol.reconstruction, e),
    };
    report.insert("reconstruction".into(), reconstruction);

    let spline = table.and_then(|t| FundamentalSpline::new(t, shared.clone())).map(Arc::new);
    let cardinality = spline.as_ref().map_err(Clone::clone).and_then(|f| f.cardinality_residual(job.cardinality_radius));
    report.insert("cardinality".into(), CheckResult::from_result(cardinality, tol.cardinality));

    let xs: Vec<Vec<f64>> = (0..TRIPLE_SAMPLES).map(|_| uniform(&mut rng, n, 2.0)).collect();
    let triple = (|| {
        let s = symbol.as_ref().map_err(Clone::clone)?;
        let f = spline.as_ref().map_err(Clone::clone)?;
        let points = match n {
            1 => 512,
            2 => 128,
            _ => MIN_QUADRATURE_POINTS,
        };
        let frequency_form = IntegralEvaluator::new(s, IntegralForm::Frequency, points)?;
        let series_form = IntegralEvaluator::new(s, IntegralForm::LatticeSeries, points)?;
        let mut worst: f64 = 0.0;
        for t in &xs {
            let x = job.lattice.apply_generator(t)?;
            let series = f.eval(&x)?;
            worst = worst.max((frequency_form.eval(&x)? - series).abs());
            worst = worst.max((series_form.eval(&x)? - series).abs());
        }
        Ok(worst)
    })();
    report.insert("triple_representation".into(), CheckResult::from_result(triple, tol.triple));

    let oracle = spline.as_ref().map_err(Clone::clone).and_then(|f| oracle_discrepancy_with(f, job.box_radius.max(8), job.seed));
    let (coeffs, values) = match oracle {
        Ok(r) => (
            CheckResult::at_most(r.coeff_max_diff, tol.oracle_coefficients),
            CheckResult::at_most(r.value_max_diff, tol.oracle_values),
        ),
        Err(e) => (CheckResult::failed(tol.oracle_coefficients, &e), CheckResult::failed(tol.oracle_values, &e)),
    };
    report.insert("oracle_coefficients".into(), coeffs);
    report.insert("oracle_values".into(), values);

    report
}
