//! Cardinal interpolation from lattice samples, and the dense Gram-system
//! oracle that solves `Σ_j c_j K(x_k - x_j) = f(x_k)` directly.

use crate::error::{Result, SkError};
use crate::fundamental::FundamentalSpline;
use crate::kernel::{check_dim, Kernel};
use crate::lattice::{inf_norm, mat_int_vec, IndexSet, Lattice, DEFAULT_ENUMERATION_CAP};
use crate::summation::NeumaierSum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Read;
use std::sync::Arc;

/// Largest Gram system the dense oracle will factor.
pub const MAX_GRAM_SIZE: usize = 4096;

/// Gram systems with a larger condition estimate are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Values `f(A s)` on a full index box `|s|_∞ <= radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSamples {
    lattice: Lattice,
    indices: IndexSet,
    values: Vec<f64>,
}

impl LatticeSamples {
    /// `values` must follow the lexicographic order of the index box.
    pub fn new(lattice: Lattice, radius: usize, values: Vec<f64>) -> Result<Self> {
        let indices = IndexSet::cube(lattice.dim(), radius, DEFAULT_ENUMERATION_CAP)?;
        if values.len() != indices.len() {
            return Err(SkError::InvalidInput(format!(
                "expected {} sample values for box radius {radius}, got {}",
                indices.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SkError::InvalidInput(format!("sample at index {:?} is not finite", indices.indices()[i])));
        }
        Ok(Self { lattice, indices, values })
    }

    /// Samples `f(A s)` for every `|s|_∞ <= radius`.
    pub fn from_fn(lattice: Lattice, radius: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let indices = IndexSet::cube(lattice.dim(), radius, DEFAULT_ENUMERATION_CAP)?;
        let values = indices.iter().map(|s| f(&mat_int_vec(lattice.generator(), s))).collect();
        Self::new(lattice, radius, values)
    }

    /// Samples given as `(s, value)` pairs in any order. The indices must
    /// fill the box `|s|_∞ <= max |s|_∞` exactly once.
    pub fn from_pairs(lattice: Lattice, pairs: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        let n = lattice.dim();
        if pairs.is_empty() {
            return Err(SkError::InvalidInput("no samples given".into()));
        }
        if let Some((s, _)) = pairs.iter().find(|(s, _)| s.len() != n) {
            return Err(SkError::DimensionMismatch { expected: n, got: s.len() });
        }
        let radius = pairs.iter().map(|(s, _)| inf_norm(s)).max().unwrap_or(0) as usize;
        let indices = IndexSet::cube(n, radius, DEFAULT_ENUMERATION_CAP)?;
        let mut values = vec![None; indices.len()];
        for (s, v) in pairs {
            let i = indices.position(&s).expect("index lies in its own bounding box");
            if values[i].replace(v).is_some() {
                return Err(SkError::InvalidInput(format!("duplicate sample index {s:?}")));
            }
        }
        let mut out = Vec::with_capacity(values.len());
        for (s, v) in indices.iter().zip(values) {
            match v {
                Some(v) => out.push(v),
                None => return Err(SkError::InvalidInput(format!("missing sample index {s:?}"))),
            }
        }
        Self::new(lattice, radius, out)
    }

    /// Reads `s_1,…,s_n,value` rows (with a header row) from CSV.
    pub fn read_csv(lattice: Lattice, reader: impl Read) -> Result<Self> {
        let n = lattice.dim();
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| SkError::InvalidInput(format!("samples CSV: {e}")))?.clone();
        if headers.len() != n + 1 {
            return Err(SkError::InvalidInput(format!(
                "samples CSV: expected {} columns (s_1..s_{n}, value), found {}",
                n + 1,
                headers.len()
            )));
        }
        let mut pairs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| SkError::InvalidInput(format!("samples CSV row {}: {e}", row + 2)))?;
            let bad = |what: &str| SkError::InvalidInput(format!("samples CSV row {}: bad {what}", row + 2));
            let s = (0..n)
                .map(|k| record[k].parse::<i64>().map_err(|_| bad(&format!("index s_{}", k + 1))))
                .collect::<Result<Vec<_>>>()?;
            let v = record[n].parse::<f64>().map_err(|_| bad("value"))?;
            pairs.push((s, v));
        }
        Self::from_pairs(lattice, pairs)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radius(&self) -> usize {
        self.indices.radius() as usize
    }

    pub fn get(&self, s: &[i64]) -> Option<f64> {
        self.indices.position(s).map(|i| self.values[i])
    }
}

/// `sk(x) = Σ_s f(A s) s̃k(x - A s)` over the sample box.
#[derive(Debug, Clone)]
pub struct Interpolant {
    samples: LatticeSamples,
    fundamental: Arc<FundamentalSpline>,
    /// `A t`, flattened, for every `t` in the box of radius `M + T`.
    centers: Vec<f64>,
    /// `Σ_s f_s |det A| α_{t-s}`: the samples convolved with the spline weights.
    coefficients: Vec<f64>,
}

/// Builds the interpolant. No linear system is solved: the samples are
/// convolved with the fundamental spline's coefficients, so
/// `sk(x) = Σ_t c_t K(x - A t)` is the same finite sum regrouped.
pub fn interpolate(samples: LatticeSamples, fundamental: Arc<FundamentalSpline>) -> Result<Interpolant> {
    let n = samples.lattice.dim();
    check_dim(n, fundamental.lattice().dim())?;
    if samples.lattice.generator() != fundamental.lattice().generator() {
        return Err(SkError::InvalidInput("samples and fundamental spline live on different lattices".into()));
    }
    let m = samples.radius();
    let t = fundamental.eval_truncation();
    let outer = IndexSet::cube(n, m + t, DEFAULT_ENUMERATION_CAP)?;
    let det = fundamental.lattice().abs_det();
    let table = fundamental.coefficients();

    let mut coefficients = vec![NeumaierSum::new(); outer.len()];
    let mut shifted = vec![0i64; n];
    let kernel_box = IndexSet::cube(n, t, DEFAULT_ENUMERATION_CAP)?;
    let weights: Vec<f64> = kernel_box.iter().map(|r| det * table.get(r).unwrap_or(0.0)).collect();
    for (s, &f) in samples.indices.iter().zip(&samples.values) {
        if f == 0.0 {
            continue;
        }
        for (r, &w) in kernel_box.iter().zip(&weights) {
            for k in 0..n {
                shifted[k] = s[k] + r[k];
            }
            let idx = outer.position(&shifted).expect("shifted index stays in the enlarged box");
            coefficients[idx] += f * w;
        }
    }
    let mut centers = Vec::with_capacity(outer.len() * n);
    let mut kept = Vec::with_capacity(outer.len());
    for (tix, acc) in outer.iter().zip(coefficients) {
        let c = acc.sum();
        if c != 0.0 {
            centers.extend(mat_int_vec(fundamental.lattice().generator(), tix));
            kept.push(c);
        }
    }
    Ok(Interpolant { samples, fundamental, centers, coefficients: kept })
}

impl Interpolant {
    pub fn samples(&self) -> &LatticeSamples {
        &self.samples
    }

    pub fn fundamental(&self) -> &FundamentalSpline {
        &self.fundamental
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let n = self.samples.lattice.dim();
        check_dim(n, x.len())?;
        let kernel = self.fundamental.kernel();
        let mut diff = vec![0.0; n];
        let mut acc = NeumaierSum::new();
        for (c, &w) in self.centers.chunks_exact(n).zip(&self.coefficients) {
            for k in 0..n {
                diff[k] = x[k] - c[k];
            }
            acc += w * kernel.eval(&diff);
        }
        Ok(acc.sum())
    }

    /// `Σ_s f(A s) s̃k(x - A s)` evaluated literally, term by term.
    pub fn eval_direct(&self, x: &[f64]) -> Result<f64> {
        let n = self.samples.lattice.dim();
        check_dim(n, x.len())?;
        let mut shifted = vec![0.0; n];
        let mut acc = NeumaierSum::new();
        for (s, &f) in self.samples.indices.iter().zip(&self.samples.values) {
            let p = mat_int_vec(self.samples.lattice.generator(), s);
            for k in 0..n {
                shifted[k] = x[k] - p[k];
            }
            acc += f * self.fundamental.eval_unchecked(&shifted);
        }
        Ok(acc.sum())
    }

    /// Max `|sk(A s) - f(A s)|` over samples at ∞-distance at least `margin`
    /// from the edge of the sample box.
    pub fn interior_residual(&self, margin: usize) -> Result<f64> {
        let limit = self.samples.radius() as i64 - margin as i64;
        let mut worst: f64 = 0.0;
        for (s, &f) in self.samples.indices.iter().zip(&self.samples.values) {
            if inf_norm(s) <= limit {
                let x = mat_int_vec(self.samples.lattice.generator(), s);
                worst = worst.max((self.eval(&x)? - f).abs());
            }
        }
        Ok(worst)
    }
}

/// Coefficients of the interpolating combination of kernel shifts on `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSolution {
    pub indices: IndexSet,
    pub coefficients: Vec<f64>,
    /// `max_k |Σ_j c_j K(x_k - x_j) - f(x_k)|`.
    pub residual_inf: f64,
    /// Squared ratio of the largest to smallest Cholesky pivot.
    pub condition_estimate: f64,
}

impl GramSolution {
    pub fn get(&self, j: &[i64]) -> Option<f64> {
        self.indices.position(j).map(|i| self.coefficients[i])
    }

    /// `Σ_j c_j K(x - A j)`.
    pub fn eval(&self, lattice: &Lattice, kernel: &dyn Kernel, x: &[f64]) -> Result<f64> {
        let n = lattice.dim();
        check_dim(n, x.len())?;
        let mut acc = NeumaierSum::new();
        let mut diff = vec![0.0; n];
        for (j, &c) in self.indices.iter().zip(&self.coefficients) {
            let p = mat_int_vec(lattice.generator(), j);
            for k in 0..n {
                diff[k] = x[k] - p[k];
            }
            acc += c * kernel.eval(&diff);
        }
        Ok(acc.sum())
    }
}

fn gram_matrix(lattice: &Lattice, kernel: &dyn Kernel, indices: &IndexSet) -> Vec<f64> {
    let size = indices.len();
    let n = lattice.dim();
    let points: Vec<Vec<f64>> = indices.iter().map(|j| mat_int_vec(lattice.generator(), j)).collect();
    let mut g = vec![0.0; size * size];
    let mut diff = vec![0.0; n];
    for a in 0..size {
        for b in 0..=a {
            for k in 0..n {
                diff[k] = points[a][k] - points[b][k];
            }
            let v = kernel.eval(&diff);
            g[a * size + b] = v;
            g[b * size + a] = v;
        }
    }
    g
}

/// Cholesky factorization with diagonal pivoting, `P A P^T = L L^T`.
/// On return `a` holds `L` in its lower triangle; `perm[k]` is the original
/// row placed at position `k`.
fn pivoted_cholesky(a: &mut [f64], size: usize) -> Result<(Vec<usize>, f64)> {
    let mut perm: Vec<usize> = (0..size).collect();
    let mut max_pivot: f64 = 0.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..size {
        let p =
            (k..size).max_by(|&i, &j| a[i * size + i].total_cmp(&a[j * size + j]).then(j.cmp(&i))).expect("nonempty pivot range");
        if p != k {
            perm.swap(k, p);
            for c in 0..size {
                a.swap(k * size + c, p * size + c);
            }
            for r in 0..size {
                a.swap(r * size + k, r * size + p);
            }
        }
        let d = a[k * size + k];
        if !(d > 0.0) {
            return Err(SkError::IllConditioned { estimate: f64::INFINITY, limit: MAX_GRAM_CONDITION });
        }
        let l = d.sqrt();
        max_pivot = max_pivot.max(l);
        min_pivot = min_pivot.min(l);
        a[k * size + k] = l;
        for i in k + 1..size {
            a[i * size + k] /= l;
            a[k * size + i] = a[i * size + k];
        }
        for j in k + 1..size {
            let ljk = a[j * size + k];
            for i in j..size {
                let v = a[i * size + j] - a[i * size + k] * ljk;
                a[i * size + j] = v;
                a[j * size + i] = v;
            }
        }
    }
    let cond = (max_pivot / min_pivot).powi(2);
    Ok((perm, cond))
}

/// Solves the dense Gram system for the kernel shifts indexed by `indices`.
pub fn gram_solve(lattice: &Lattice, kernel: &dyn Kernel, indices: &IndexSet, rhs: &[f64]) -> Result<GramSolution> {
    check_dim(lattice.dim(), kernel.dim())?;
    check_dim(lattice.dim(), indices.dim())?;
    let size = indices.len();
    if size > MAX_GRAM_SIZE {
        return Err(SkError::SizeOverflow { requested: size as u128, cap: MAX_GRAM_SIZE as u128 });
    }
    if rhs.len() != size {
        return Err(SkError::InvalidInput(format!("right-hand side has {} entries for {size} unknowns", rhs.len())));
    }
    if size == 0 {
        return Ok(GramSolution { indices: indices.clone(), coefficients: vec![], residual_inf: 0.0, condition_estimate: 1.0 });
    }
    let gram = gram_matrix(lattice, kernel, indices);
    let mut l = gram.clone();
    let (perm, cond) = pivoted_cholesky(&mut l, size)?;
    if !(cond <= MAX_GRAM_CONDITION) {
        return Err(SkError::IllConditioned { estimate: cond, limit: MAX_GRAM_CONDITION });
    }

    // L y = P f
    let mut y: Vec<f64> = perm.iter().map(|&p| rhs[p]).collect();
    for i in 0..size {
        let mut acc = y[i];
        for k in 0..i {
            acc -= l[i * size + k] * y[k];
        }
        y[i] = acc / l[i * size + i];
    }
    // L^T w = y
    for i in (0..size).rev() {
        let mut acc = y[i];
        for k in i + 1..size {
            acc -= l[k * size + i] * y[k];
        }
        y[i] = acc / l[i * size + i];
    }
    let mut coefficients = vec![0.0; size];
    for (k, &p) in perm.iter().enumerate() {
        coefficients[p] = y[k];
    }

    let mut residual_inf: f64 = 0.0;
    for r in 0..size {
        let row: NeumaierSum = (0..size).map(|c| gram[r * size + c] * coefficients[c]).collect();
        residual_inf = residual_inf.max((row.sum() - rhs[r]).abs());
    }
    Ok(GramSolution { indices: indices.clone(), coefficients, residual_inf, condition_estimate: cond })
}

/// Differences between the Gram oracle and the cardinal construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// Max `|c_j - |det A| α_j|` for `|j|_∞ <= M/2` with a delta right-hand side.
    pub coeff_max_diff: f64,
    /// Max gap between the two interpolants of `exp(-|x|^2 / 2)` at interior points.
    pub value_max_diff: f64,
}

pub const ORACLE_VALUE_POINTS: usize = 16;

/// The smooth target sampled by [`oracle_discrepancy`].
pub fn oracle_target(x: &[f64]) -> f64 {
    (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
}

/// Runs the Gram oracle on the box `|j|_∞ <= M` against the cardinal
/// construction with an `N^n` coefficient grid.
pub fn oracle_discrepancy(
    lattice: &Lattice,
    kernel: Arc<dyn Kernel>,
    grid_size: usize,
    radius: usize,
    seed: u64,
) -> Result<OracleReport> {
    let fundamental = Arc::new(FundamentalSpline::build(lattice, kernel, grid_size)?);
    oracle_discrepancy_with(&fundamental, radius, seed)
}

pub fn oracle_discrepancy_with(fundamental: &Arc<FundamentalSpline>, radius: usize, seed: u64) -> Result<OracleReport> {
    if radius < 8 {
        return Err(SkError::InvalidInput(format!("oracle box radius must be at least 8, got {radius}")));
    }
    let lattice = fundamental.lattice().clone();
    let kernel = fundamental.kernel().clone();
    let n = lattice.dim();
    let indices = IndexSet::cube(n, radius, DEFAULT_ENUMERATION_CAP)?;
    let delta: Vec<f64> = indices.iter().map(|j| if j.iter().all(|&v| v == 0) { 1.0 } else { 0.0 }).collect();
    let sol = gram_solve(&lattice, kernel.as_ref(), &indices, &delta)?;

    let half = (radius / 2) as i64;
    let det = lattice.abs_det();
    let mut coeff_max_diff: f64 = 0.0;
    for (j, &c) in sol.indices.iter().zip(&sol.coefficients) {
        if inf_norm(j) <= half {
            let alpha = fundamental.coefficients().get(j).unwrap_or(0.0);
            coeff_max_diff = coeff_max_diff.max((c - det * alpha).abs());
        }
    }

    let samples = LatticeSamples::from_fn(lattice.clone(), radius, oracle_target)?;
    let gram = gram_solve(&lattice, kernel.as_ref(), &indices, samples.values())?;
    let cardinal = interpolate(samples, fundamental.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value_max_diff: f64 = 0.0;
    let h = half as f64;
    for _ in 0..ORACLE_VALUE_POINTS {
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-h..=h)).collect();
        let x = lattice.apply_generator(&t)?;
        let a = cardinal.eval(&x)?;
        let b = gram.eval(&lattice, kernel.as_ref(), &x)?;
        value_max_diff = value_max_diff.max((a - b).abs());
    }
    Ok(OracleReport { coeff_max_diff, value_max_diff })
}
