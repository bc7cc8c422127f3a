//! Refinement study: interpolate a fixed target on `A`, `A/2`, `A/4`, ...
//! with the kernel held fixed, and record the worst error at cell centres.

use crate::error::Result;
use crate::fundamental::FundamentalSpline;
use crate::interpolation::{interpolate, LatticeSamples};
use crate::kernel::{GaussianKernel, Kernel};
use crate::lattice::{for_each_multi_index, mat_vec};
use std::sync::Arc;

use super::config::{Job, RefineTarget};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineLevel {
    pub level: usize,
    /// Lattice scale relative to the configured `A`.
    pub scale: f64,
    pub max_error: f64,
}

fn target_fn(job: &Job) -> impl Fn(&[f64]) -> f64 + '_ {
    // the shift uses the unfaulted kernel so the target is the same function in every run
    let kernel = GaussianKernel::new(job.kernel.shape().expect("gaussian has a shape").clone()).expect("validated shape");
    let shift: Vec<f64> = job.lattice.generator().column(0).iter().copied().collect();
    move |x: &[f64]| match job.refine.target {
        RefineTarget::Gaussian => (-x.iter().map(|v| v * v).sum::<f64>() / 10.0).exp(),
        RefineTarget::Zero => 0.0,
        RefineTarget::KernelShift => {
            let d: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a - b).collect();
            kernel.eval(&d)
        }
    }
}

/// Level `k` uses the lattice `2^{-k} A`, samples on `|s|_∞ <= window 2^k`
/// (a fixed physical region) and measures `max |sk(x) - f(x)|` over the cell
/// centres `2^{-k} A (j + 1/2)` with `|j + 1/2|_∞ <= inner 2^k`.
pub fn refinement_study(job: &Job) -> Result<Vec<RefineLevel>> {
    let n = job.dim;
    let f = target_fn(job);
    let kernel: Arc<dyn Kernel> = Arc::new(job.kernel.clone());
    let mut out = Vec::with_capacity(job.refine.levels);
    for level in 0..job.refine.levels {
        let factor = 1usize << level;
        let scale = 1.0 / factor as f64;
        let lattice = job.lattice.scaled(scale)?;
        let spline = Arc::new(FundamentalSpline::build(&lattice, kernel.clone(), job.grid)?);
        let samples = LatticeSamples::from_fn(lattice.clone(), job.refine.window * factor, &f)?;
        let interpolant = interpolate(samples, spline)?;
        let reach = (job.refine.inner * factor) as i64;
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for_each_multi_index(n, -reach, reach - 1, |j| {
            if failure.is_some() {
                return;
            }
            let t: Vec<f64> = j.iter().map(|&v| v as f64 + 0.5).collect();
            let x = mat_vec(lattice.generator(), &t);
            match interpolant.eval(&x) {
                Ok(v) => worst = worst.max((v - f(&x)).abs()),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        out.push(RefineLevel { level, scale, max_error: worst });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::JobConfig;

    fn study(text: &str) -> Vec<RefineLevel> {
        refinement_study(&JobConfig::from_json(text).unwrap().validate().unwrap()).unwrap()
    }

    #[test]
    fn gaussian_target_error_decreases() {
        let levels = study(r#"{"dim": 1, "B": [[4.0]]}"#);
        assert_eq!(levels.len(), 3);
        for w in levels.windows(2) {
            assert!(w[1].max_error < w[0].max_error, "{levels:?}");
        }
    }

    #[test]
    fn zero_target_gives_zero() {
        for l in study(r#"{"dim": 1, "B": [[4.0]], "refine": {"target": "zero"}}"#) {
            assert_eq!(l.max_error, 0.0);
        }
    }

    #[test]
    fn kernel_shift_is_reproduced() {
        for l in study(r#"{"dim": 1, "B": [[4.0]], "refine": {"target": "kernel_shift"}}"#) {
            assert!(l.max_error < 1e-10, "{l:?}");
        }
    }

    #[test]
    fn wide_kernel_on_fine_lattice_fails_numerically() {
        // B = 1 on A/4: the symbol is nearly flat at zero, so its reciprocal has no usable Fourier table
        let job = JobConfig::from_json(r#"{"dim": 1}"#).unwrap().validate().unwrap();
        assert!(matches!(
            refinement_study(&job),
            Err(crate::SkError::ReconstructionFailure { .. } | crate::SkError::DegenerateSymbol { .. })
        ));
    }
}
