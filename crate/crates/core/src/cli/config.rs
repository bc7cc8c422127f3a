//! Job configuration: one JSON document per run.

use crate::error::SkError;
use crate::kernel::GaussianKernel;
use crate::lattice::{matrix_from_rows, Lattice};
use serde::Deserialize;
use std::path::PathBuf;

use super::CliError;

/// Exponent factor substituted by the `fourier_constant` fault hook; the
/// correct value is `0.25`.
pub const FAULTY_FOURIER_EXPONENT: f64 = 1.0;

/// The raw document as read from disk. Everything except `dim` has a default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub dim: usize,
    #[serde(rename = "A", default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default)]
    pub b: Option<Vec<Vec<f64>>>,
    /// Points per axis of the coefficient grid.
    #[serde(rename = "N", default)]
    pub grid: Option<usize>,
    /// Radius of the sample / oracle box.
    #[serde(rename = "M", default)]
    pub box_radius: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub symbol: SymbolParams,
    #[serde(default)]
    pub fundamental: FundamentalParams,
    #[serde(default)]
    pub interpolate: InterpolateParams,
    #[serde(default)]
    pub refine: RefineParams,
    /// Test hook; `"fourier_constant"` swaps in a wrong transform exponent.
    #[serde(default)]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub fourier: f64,
    pub inverse: f64,
    pub plancherel: f64,
    pub scaling: f64,
    pub poisson: f64,
    pub periodicity: f64,
    /// Gate applied while building the coefficient table.
    pub reconstruction_limit: f64,
    /// Bound checked by `verify` on the same residual.
    pub reconstruction: f64,
    pub cardinality: f64,
    pub triple: f64,
    pub oracle_coefficients: f64,
    pub oracle_values: f64,
    pub interpolation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fourier: 1e-8,
            inverse: 1e-8,
            plancherel: 1e-12,
            scaling: 1e-12,
            poisson: 1e-9,
            periodicity: 1e-10,
            reconstruction_limit: crate::fundamental::RECONSTRUCTION_LIMIT,
            reconstruction: 1e-8,
            cardinality: 1e-6,
            triple: 1e-5,
            oracle_coefficients: 1e-5,
            oracle_values: 1e-5,
            interpolation: 1e-6,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("fourier", self.fourier),
            ("inverse", self.inverse),
            ("plancherel", self.plancherel),
            ("scaling", self.scaling),
            ("poisson", self.poisson),
            ("periodicity", self.periodicity),
            ("reconstruction_limit", self.reconstruction_limit),
            ("reconstruction", self.reconstruction),
            ("cardinality", self.cardinality),
            ("triple", self.triple),
            ("oracle_coefficients", self.oracle_coefficients),
            ("oracle_values", self.oracle_values),
            ("interpolation", self.interpolation),
        ]
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolParams {
    /// Points per axis of the z grid; 64 in 1-D and 16 otherwise.
    pub points: Option<usize>,
}

/// A line (one direction) or plane (two directions) through `origin`,
/// sampled at `points` values of each parameter in `extent`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FundamentalParams {
    pub origin: Option<Vec<f64>>,
    pub directions: Option<Vec<Vec<f64>>>,
    pub extent: Option<[f64; 2]>,
    pub points: Option<usize>,
    pub cardinality_radius: Option<usize>,
}

/// Evaluation grid in lattice coordinates `t`, mapped to `x = A t`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpolateParams {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineTarget {
    /// `exp(-|x|^2 / 10)`
    Gaussian,
    Zero,
    /// `K(x - A e_1)`, a lattice shift of the kernel at every level.
    KernelShift,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineParams {
    pub target: RefineTarget,
    pub levels: usize,
    /// Sample box radius at the coarsest level, in lattice units.
    pub window: usize,
    /// Mid-cell errors are taken inside this radius, in coarse lattice units.
    pub inner: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self { target: RefineTarget::Gaussian, levels: 3, window: 12, inner: 4 }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct Job {
    pub dim: usize,
    pub lattice: Lattice,
    pub kernel: GaussianKernel,
    pub grid: usize,
    pub box_radius: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: Tolerances,
    pub symbol_points: usize,
    pub line: SampleLine,
    pub cardinality_radius: usize,
    /// Evaluation grid for `interpolate`; unset parts default from the sample box.
    pub eval_lower: Option<Vec<f64>>,
    pub eval_upper: Option<Vec<f64>>,
    pub eval_points: Option<usize>,
    pub refine: RefineParams,
    pub faulty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleLine {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub extent: [f64; 2],
    pub points: usize,
}

fn bad(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn matrix_field(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<nalgebra::DMatrix<f64>, CliError> {
    let m = matrix_from_rows(rows, field).map_err(|e| match e {
        SkError::InvalidInput(msg) => CliError::Config(msg),
        other => bad(field, other),
    })?;
    if m.nrows() != dim {
        return Err(bad(field, format!("expected a {dim}x{dim} matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m)
}

fn vector_field(v: &[f64], dim: usize, field: &str) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(bad(field, format!("expected {dim} entries, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(field, "entries must be finite"));
    }
    Ok(())
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<Job, CliError> {
        let n = self.dim;
        if n == 0 || n > 8 {
            return Err(bad("dim", format!("must be between 1 and 8, got {n}")));
        }
        let lattice = match &self.a {
            Some(rows) => Lattice::new(matrix_field(rows, n, "A")?).map_err(|e| bad("A", e))?,
            None => Lattice::identity(n),
        };
        let mut kernel = match &self.b {
            Some(rows) => GaussianKernel::new(matrix_field(rows, n, "B")?).map_err(|e| bad("B", e))?,
            None => GaussianKernel::isotropic(n),
        };
        let faulty = match self.fault.as_deref() {
            None => false,
            Some("fourier_constant") => true,
            Some(other) => return Err(bad("fault", format!("unknown fault {other:?}"))),
        };
        if faulty {
            kernel = kernel.with_faulty_fourier_exponent(FAULTY_FOURIER_EXPONENT);
        }

        let grid = self.grid.unwrap_or(64);
        if grid < 8 || !grid.is_multiple_of(2) {
            return Err(bad("N", format!("must be even and at least 8, got {grid}")));
        }
        let box_radius = self.box_radius.unwrap_or(if n == 1 { 16 } else { 12 });
        if box_radius == 0 {
            return Err(bad("M", "must be positive"));
        }
        for (name, v) in self.tolerances.named() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(bad(&format!("tolerances.{name}"), format!("must be positive and finite, got {v}")));
            }
        }

        let symbol_points = self.symbol.points.unwrap_or(if n == 1 { 64 } else { 16 });
        if symbol_points < 8 {
            return Err(bad("symbol.points", format!("must be at least 8, got {symbol_points}")));
        }

        let f = &self.fundamental;
        let origin = f.origin.clone().unwrap_or_else(|| vec![0.0; n]);
        vector_field(&origin, n, "fundamental.origin")?;
        let directions = f.directions.clone().unwrap_or_else(|| {
            let unit = |k: usize| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<_>>();
            if n == 2 {
                vec![unit(0), unit(1)]
            } else {
                vec![unit(0)]
            }
        });
        if directions.is_empty() || directions.len() > 2 {
            return Err(bad("fundamental.directions", "give one direction (line) or two (plane)"));
        }
        for d in &directions {
            vector_field(d, n, "fundamental.directions")?;
        }
        let extent = f.extent.unwrap_or([-4.0, 4.0]);
        if !(extent[0] < extent[1]) || extent.iter().any(|v| !v.is_finite()) {
            return Err(bad("fundamental.extent", "must be an increasing finite pair"));
        }
        let points = f.points.unwrap_or(if directions.len() == 1 { 161 } else { 41 });
        if points < 2 {
            return Err(bad("fundamental.points", "must be at least 2"));
        }
        let cardinality_radius = f.cardinality_radius.unwrap_or(3);
        if cardinality_radius == 0 {
            return Err(bad("fundamental.cardinality_radius", "must be positive"));
        }

        let ip = &self.interpolate;
        if let Some(v) = &ip.lower {
            vector_field(v, n, "interpolate.lower")?;
        }
        if let Some(v) = &ip.upper {
            vector_field(v, n, "interpolate.upper")?;
        }
        if let (Some(l), Some(u)) = (&ip.lower, &ip.upper) {
            if l.iter().zip(u).any(|(a, b)| a > b) {
                return Err(bad("interpolate.upper", "must not be below interpolate.lower"));
            }
        }
        if ip.points == Some(0) {
            return Err(bad("interpolate.points", "must be positive"));
        }

        let refine = self.refine.clone();
        if refine.levels == 0 || refine.levels > 6 {
            return Err(bad("refine.levels", format!("must be between 1 and 6, got {}", refine.levels)));
        }
        if refine.inner == 0 || refine.inner > refine.window {
            return Err(bad("refine.inner", "must be positive and at most refine.window"));
        }

        Ok(Job {
            dim: n,
            lattice,
            kernel,
            grid,
            box_radius,
            seed: self.seed,
            out: self.out.clone(),
            tol: self.tolerances.clone(),
            symbol_points,
            line: SampleLine { origin, directions, extent, points },
            cardinality_radius,
            eval_lower: ip.lower.clone(),
            eval_upper: ip.upper.clone(),
            eval_points: ip.points,
            refine,
            faulty,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Job, CliError> {
        JobConfig::from_json(text)?.validate()
    }

    #[test]
    fn defaults_fill_in() {
        let job = parse(r#"{"dim": 2}"#).unwrap();
        assert_eq!(job.grid, 64);
        assert_eq!(job.box_radius, 12);
        assert_eq!(job.line.directions.len(), 2);
        assert_eq!(job.tol, Tolerances::default());
        assert!(!job.faulty);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"dim": 2, "A": [[1, 0], [0]]}"#, "A:"),
            (r#"{"dim": 2, "B": [[1]]}"#, "B:"),
            (r#"{"dim": 1, "N": 31}"#, "N:"),
            (r#"{"dim": 1, "tolerances": {"poisson": -1}}"#, "tolerances.poisson"),
            (r#"{"dim": 1, "fault": "other"}"#, "fault"),
            (r#"{"dim": 1, "bogus": 1}"#, "bogus"),
            (r#"{"dim": 2, "A": [[1, 2], [2, 4]]}"#, "A:"),
            (r#"{"dim": 1, "fundamental": {"origin": [0, 0]}}"#, "fundamental.origin"),
        ];
        for (text, needle) in cases {
            match parse(text) {
                Err(CliError::Config(msg)) => assert!(msg.contains(needle), "{text}: {msg}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn refine_targets_parse() {
        let job = parse(r#"{"dim": 1, "refine": {"target": "kernel_shift"}}"#).unwrap();
        assert_eq!(job.refine.target, RefineTarget::KernelShift);
        assert_eq!(job.refine.levels, 3);
    }
}
