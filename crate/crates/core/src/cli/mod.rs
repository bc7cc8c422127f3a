//! The `skspline` command-line tool.
//!
//! Every subcommand reads one JSON config (`--config`), writes its files
//! into `--out` (default: the config's `out` field, then `.`), and exits with
//! 0 on success, 1 on a usage or config error, 2 on a numerical failure.

pub mod config;
pub mod refine;
pub mod verify;

use crate::error::SkError;
use crate::format::fmt17;
use crate::fundamental::{CardinalCoefficients, FundamentalSpline};
use crate::interpolation::{interpolate, LatticeSamples};
use crate::kernel::Kernel;
use crate::lattice::{for_each_multi_index, mat_vec};
use crate::symbol::SymbolFunction;
use clap::{Parser, Subcommand};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

pub use config::{Job, JobConfig};

#[derive(Debug, Parser)]
#[command(name = "skspline", version, about = "Cardinal interpolation by lattice shifts of a Gaussian kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON job configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out` field.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Suppress the summary printed to stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate both forms of the inverse symbol and check nondegeneracy.
    Symbol(Common),
    /// Build the coefficient table and sample the fundamental spline.
    Fundamental(Common),
    /// Interpolate lattice samples read from CSV.
    Interpolate {
        #[command(flatten)]
        common: Common,
        /// CSV with columns s_1..s_n,value, one row per lattice index.
        #[arg(long, value_name = "PATH")]
        samples: PathBuf,
    },
    /// Run every numerical check and write a JSON report.
    Verify(Common),
    /// Interpolate a fixed target on successively finer lattices.
    Refine(Common),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Numerical(SkError),
    /// A computation finished but its result is outside tolerance.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) | CliError::Check(_) => 2,
        }
    }
}

impl From<SkError> for CliError {
    fn from(e: SkError) -> Self {
        match e {
            SkError::InvalidInput(msg) => CliError::Config(msg),
            e @ SkError::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            e => CliError::Numerical(e),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Symbol(c) => Context::load(c)?.symbol(),
        Command::Fundamental(c) => Context::load(c)?.fundamental(),
        Command::Interpolate { common, samples } => Context::load(common)?.interpolate(samples),
        Command::Verify(c) => Context::load(c)?.verify(),
        Command::Refine(c) => Context::load(c)?.refine(),
    }
}

struct Context {
    job: Job,
    out: PathBuf,
    quiet: bool,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Buffered CSV with a header row and 17-digit floats.
struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    fn create(path: PathBuf, header: &[String]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        writer.write_record(header).map_err(|e| io_err(&path, e))?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let record: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&record).map_err(|e| io_err(&self.path, e))
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| io_err(&self.path, e))
    }
}

fn columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}_{k}"))
}

impl Context {
    fn load(c: &Common) -> Result<Self, CliError> {
        let text = fs::read_to_string(&c.config).map_err(|e| io_err(&c.config, e))?;
        let job = JobConfig::from_json(&text)?.validate()?;
        let out = c.out.clone().or_else(|| job.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
        Ok(Self { job, out, quiet: c.quiet })
    }

    fn say(&self, key: &str, value: impl std::fmt::Display) {
        if !self.quiet {
            println!("{key} = {value}");
        }
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))
    }

    fn kernel(&self) -> Arc<dyn Kernel> {
        Arc::new(self.job.kernel.clone())
    }

    fn spline(&self, symbol: &SymbolFunction) -> Result<FundamentalSpline, CliError> {
        let table = CardinalCoefficients::compute_with_limit(symbol, self.job.grid, self.job.tol.reconstruction_limit)?;
        Ok(FundamentalSpline::new(table, self.kernel())?)
    }

    fn symbol(&self) -> Result<(), CliError> {
        let n = self.job.dim;
        let symbol = SymbolFunction::new(self.job.lattice.clone(), self.kernel())?;
        let grid = self.job.lattice.fundamental_domain_grid(self.job.symbol_points)?;
        let header: Vec<String> = columns("z", n)
            .chain(["upsilon_inv_freq", "upsilon_inv_spatial_re", "upsilon_inv_spatial_im", "upsilon"].map(String::from))
            .collect();
        let mut csv = CsvOut::create(self.out.join("symbol.csv"), &header)?;
        // Values are written even where the symbol is degenerate; the error is raised afterwards.
        let value_of = |r: crate::Result<f64>| -> Result<(f64, bool), CliError> {
            match r {
                Ok(v) => Ok((v, false)),
                Err(SkError::DegenerateSymbol { value, .. }) => Ok((value, true)),
                Err(e) => Err(e.into()),
            }
        };
        let mut min_freq = f64::INFINITY;
        let mut poisson: f64 = 0.0;
        let mut degenerate = None;
        for z in &grid {
            let (freq, bad_f) = value_of(symbol.symbol_inverse_frequency(z))?;
            let spatial = match symbol.symbol_inverse_spatial(z) {
                Ok(v) => v,
                Err(SkError::DegenerateSymbol { .. }) => symbol.lattice_series(z)? * self.job.lattice.abs_det(),
                Err(e) => return Err(e.into()),
            };
            if bad_f && degenerate.is_none() {
                degenerate = Some(z.clone());
            }
            min_freq = min_freq.min(freq);
            poisson = poisson.max((freq - spatial.re).abs());
            csv.row(z.iter().map(|&v| fmt17(v)).chain([freq, spatial.re, spatial.im, 1.0 / freq].map(fmt17)))?;
        }
        csv.finish()?;
        self.say("rows", grid.len());
        self.say("min_symbol_inverse", fmt17(min_freq));
        self.say("max_upsilon", fmt17(1.0 / min_freq));
        self.say("poisson_residual", fmt17(poisson));
        if let Some(z) = degenerate {
            let origin = vec![0.0; n];
            let threshold = crate::symbol::DEGENERACY_THRESHOLD * self.job.kernel.fourier(&origin);
            return Err(CliError::Numerical(SkError::DegenerateSymbol { value: min_freq, threshold, z }));
        }
        Ok(())
    }

    fn fundamental(&self) -> Result<(), CliError> {
        let n = self.job.dim;
        let symbol = SymbolFunction::new(self.job.lattice.clone(), self.kernel())?;
        let spline = self.spline(&symbol)?;
        self.write_text("coefficients.json", &spline.coefficients().to_json())?;

        let line = &self.job.line;
        let p = line.points;
        let param = |i: i64| line.extent[0] + (line.extent[1] - line.extent[0]) * i as f64 / (p - 1) as f64;
        let header: Vec<String> = columns("x", n).chain(["value".to_string()]).collect();
        let mut csv = CsvOut::create(self.out.join("fundamental.csv"), &header)?;
        let mut rows = Vec::new();
        for_each_multi_index(line.directions.len(), 0, p as i64 - 1, |idx| {
            let mut x = line.origin.clone();
            for (d, &i) in line.directions.iter().zip(idx) {
                let u = param(i);
                for k in 0..n {
                    x[k] += u * d[k];
                }
            }
            rows.push(x);
        });
        for x in &rows {
            let v = spline.eval(x)?;
            csv.row(x.iter().chain([&v]).map(|&v| fmt17(v)))?;
        }
        csv.finish()?;

        let residual = spline.cardinality_residual(self.job.cardinality_radius)?;
        let table = spline.coefficients();
        self.say("reconstruction_residual", fmt17(table.reconstruction_residual()));
        self.say("eval_truncation", spline.eval_truncation());
        self.say("cardinality_residual", fmt17(residual));
        if !(residual <= self.job.tol.cardinality) {
            return Err(CliError::Check(format!(
                "cardinality residual {} exceeds tolerance {}",
                fmt17(residual),
                fmt17(self.job.tol.cardinality)
            )));
        }
        Ok(())
    }

    fn interpolate(&self, samples_path: &Path) -> Result<(), CliError> {
        let n = self.job.dim;
        let file = fs::File::open(samples_path).map_err(|e| io_err(samples_path, e))?;
        let samples = LatticeSamples::read_csv(self.job.lattice.clone(), std::io::BufReader::new(file))
            .map_err(|e| CliError::Config(format!("{}: {}", samples_path.display(), e)))?;
        let radius = samples.radius();
        let symbol = SymbolFunction::new(self.job.lattice.clone(), self.kernel())?;
        let spline = Arc::new(self.spline(&symbol)?);
        let margin = spline.eval_truncation().min(radius / 2);
        let interpolant = interpolate(samples, spline)?;

        let half = radius as f64 / 2.0;
        let lower = self.job.eval_lower.clone().unwrap_or_else(|| vec![-half; n]);
        let upper = self.job.eval_upper.clone().unwrap_or_else(|| vec![half; n]);
        let p = self.job.eval_points.unwrap_or(if n == 1 { 4 * radius + 1 } else { radius + 1 });
        let header: Vec<String> = columns("x", n).chain(["value".to_string()]).collect();
        let mut csv = CsvOut::create(self.out.join("interpolant.csv"), &header)?;
        let mut points = Vec::new();
        for_each_multi_index(n, 0, p as i64 - 1, |idx| {
            let t: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(k, &i)| if p == 1 { lower[k] } else { lower[k] + (upper[k] - lower[k]) * i as f64 / (p - 1) as f64 })
                .collect();
            points.push(mat_vec(self.job.lattice.generator(), &t));
        });
        for x in &points {
            let v = interpolant.eval(x)?;
            csv.row(x.iter().chain([&v]).map(|&v| fmt17(v)))?;
        }
        csv.finish()?;

        let residual = interpolant.interior_residual(margin)?;
        self.say("rows", points.len());
        self.say("interior_margin", margin);
        self.say("interior_residual", fmt17(residual));
        if !(residual <= self.job.tol.interpolation) {
            return Err(CliError::Check(format!(
                "interior residual {} exceeds tolerance {}",
                fmt17(residual),
                fmt17(self.job.tol.interpolation)
            )));
        }
        Ok(())
    }

    fn verify(&self) -> Result<(), CliError> {
        let report = verify::run_checks(&self.job);
        self.write_text("verify.json", &verify::to_json(&report))?;
        for (name, c) in &report {
            self.say(
                name,
                format!("{} (tolerance {}) {}", fmt17(c.value.0), fmt17(c.tolerance.0), if c.pass { "pass" } else { "FAIL" }),
            );
        }
        let failing: Vec<&str> = report.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.as_str()).collect();
        if !failing.is_empty() {
            return Err(CliError::Check(format!("failing checks: {}", failing.join(", "))));
        }
        Ok(())
    }

    fn refine(&self) -> Result<(), CliError> {
        let levels = refine::refinement_study(&self.job)?;
        let header = ["level", "scale", "max_error"].map(String::from);
        let mut csv = CsvOut::create(self.out.join("refine.csv"), &header)?;
        for l in &levels {
            csv.row([l.level.to_string(), fmt17(l.scale), fmt17(l.max_error)])?;
            self.say(&format!("level_{}", l.level), fmt17(l.max_error));
        }
        csv.finish()
    }
}
