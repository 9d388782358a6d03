//! Batch command-line front end.
//!
//! Errors go to stderr as `error[<kind>]: <message>`; the exit code is 0 on
//! success, 1 for usage errors, 2 for data or validation errors and 3 for
//! numerical failures.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::{shuffle_within_machines, Seed};
use crate::combiners::{
    consensus_covariance, consensus_independent, sample_average, semiparametric_dpe, DpeConfig,
};
use crate::density::{compare_densities, L2Comparison};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, ExperimentConfig, MhConfig, Model, PAPER_BETA};
use crate::io::{self, format_value, CREATED_BY};

#[derive(Debug, Parser)]
#[command(
    name = "mcmc-combine",
    version,
    about = "Combine subposterior MCMC draws"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Combine a bundle of subposterior draws.
    Combine(CombineArgs),
    /// Relative L2 distance between full-data and combined marginals.
    Metric(MetricArgs),
    /// Simulate data, shard it and sample every shard and the full data.
    Harness(HarnessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    SampleAvg,
    ConsensusIndep,
    ConsensusCov,
    SemiparamDpe,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Bundle manifest.
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Permute draws within each machine before combining.
    #[arg(long)]
    pub shuff: bool,
    /// Defaults to the seed recorded in the manifest, else 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Starting bandwidths, one per parameter (semiparam-dpe).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bandw: Option<Vec<f64>>,
    /// Keep the bandwidth fixed (semiparam-dpe).
    #[arg(long)]
    pub no_anneal: bool,
    /// Drop this many leading combined draws.
    #[arg(long, default_value_t = 0)]
    pub discard: usize,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Full-data chain.
    #[arg(long)]
    pub full: PathBuf,
    #[arg(long)]
    pub combined: PathBuf,
    /// Write the gridded density pairs here.
    #[arg(long)]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Logistic,
    Gamma,
}

#[derive(Debug, Args)]
pub struct HarnessArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Number of data rows.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub shards: usize,
    /// Retained draws per chain.
    #[arg(long)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gamma shape.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Gamma rate.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                1
            } else {
                let _ = write!(stdout, "{}", e.render());
                0
            };
            return code;
        }
    };
    match run(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.kind());
            e.exit_code()
        }
    }
}

pub fn run(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Combine(args) => run_combine(args),
        Command::Metric(args) => run_metric(args, stdout),
        Command::Harness(args) => run_harness(args, stderr),
    }
}

pub fn run_combine(args: &CombineArgs) -> Result<()> {
    if args.method != Method::SemiparamDpe && (args.bandw.is_some() || args.no_anneal) {
        return Err(Error::InvalidArgument(
            "--bandw and --no-anneal only apply to --method semiparam-dpe".into(),
        ));
    }
    let manifest = io::read_manifest(&args.bundle)?;
    let seed = Seed(args.seed.or(manifest.seed).unwrap_or(0));
    let mut bundle = io::read_bundle(&args.bundle)?;
    if args.shuff {
        bundle = shuffle_within_machines(&bundle, seed);
    }
    let combined = match args.method {
        Method::SampleAvg => sample_average(&bundle),
        Method::ConsensusIndep => consensus_independent(&bundle)?,
        Method::ConsensusCov => consensus_covariance(&bundle)?,
        Method::SemiparamDpe => {
            let mut config = DpeConfig::new(bundle.dim(), seed).with_anneal(!args.no_anneal);
            if let Some(bandw) = &args.bandw {
                if bandw.len() != bundle.dim() {
                    return Err(Error::dims("--bandw", bundle.dim(), bandw.len()));
                }
                config = config.with_bandwidths(bandw.clone());
            }
            semiparametric_dpe(&bundle, &config)?
        }
    };
    let combined = if args.discard > 0 {
        combined.discard_leading(args.discard)?
    } else {
        combined
    };
    io::write_combined(&args.out, &combined)
}

pub fn run_metric(args: &MetricArgs, stdout: &mut dyn Write) -> Result<()> {
    let full = io::read_combined(&args.full)?;
    let combined = io::read_combined(&args.combined)?;
    if full.dim() != combined.dim() {
        return Err(Error::dims(
            format!("parameter count of {}", args.combined.display()),
            full.dim(),
            combined.dim(),
        ));
    }
    let comparisons = (0..full.dim())
        .into_par_iter()
        .map(|i| compare_densities(&full.parameter(i), &combined.parameter(i)))
        .collect::<Result<Vec<L2Comparison>>>()?;

    let console = |e: std::io::Error| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(stdout, "{:>9}  {:>12}", "parameter", "relative_l2").map_err(console)?;
    for (i, c) in comparisons.iter().enumerate() {
        writeln!(stdout, "{:>9}  {:>12.6}", i + 1, c.relative()).map_err(console)?;
    }
    if let Some(path) = &args.density_out {
        write_density_table(path, &comparisons)?;
    }
    Ok(())
}

/// CSV with header `parameter,grid,p_full,p_combined`; parameters are 1-based.
pub fn write_density_table(path: &Path, comparisons: &[L2Comparison]) -> Result<()> {
    let err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut out = BufWriter::new(fs::File::create(path).map_err(err)?);
    writeln!(out, "parameter,grid,p_full,p_combined").map_err(err)?;
    for (i, c) in comparisons.iter().enumerate() {
        for ((g, p), q) in c
            .full
            .grid
            .iter()
            .zip(&c.full.values)
            .zip(&c.combined.values)
        {
            writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                format_value(*g),
                format_value(*p),
                format_value(*q)
            )
            .map_err(err)?;
        }
    }
    out.flush().map_err(err)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    created_by: &'a str,
    model: &'a str,
    n: usize,
    shards: usize,
    iters: usize,
    burnin: usize,
    thin: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    bundle: &'a str,
    full_chain: &'a str,
    shard_acceptance: &'a [f64],
    full_acceptance: f64,
    warnings: &'a [String],
}

pub const BUNDLE_MANIFEST: &str = "bundle.json";
pub const FULL_CHAIN: &str = "full.csv";
pub const RUN_MANIFEST: &str = "run.json";

pub fn run_harness(args: &HarnessArgs, stderr: &mut dyn Write) -> Result<()> {
    if args.iters < 2 {
        return Err(Error::InvalidArgument("--iters must be at least 2".into()));
    }
    if args.thin == 0 {
        return Err(Error::InvalidArgument("--thin must be at least 1".into()));
    }
    if args.shards == 0 {
        return Err(Error::InvalidArgument("--shards must be at least 1".into()));
    }
    let model = match args.model {
        ModelKind::Logistic => Model::Logistic {
            beta: PAPER_BETA.to_vec(),
        },
        ModelKind::Gamma => {
            if !(args.alpha > 0.0
                && args.beta > 0.0
                && args.alpha.is_finite()
                && args.beta.is_finite())
            {
                return Err(Error::InvalidArgument(
                    "--alpha and --beta must be positive".into(),
                ));
            }
            Model::Gamma {
                alpha: args.alpha,
                beta: args.beta,
            }
        }
    };
    let config = ExperimentConfig {
        model: model.clone(),
        n: args.n,
        shards: args.shards,
        mh: MhConfig::new(args.iters, args.burnin, Seed(args.seed)).with_thin(args.thin),
    };
    let experiment = run_experiment(&config)?;
    for w in &experiment.warnings {
        let _ = writeln!(stderr, "warning[non-convergence]: {w}");
    }
    io::write_bundle(
        &args.out,
        BUNDLE_MANIFEST,
        &experiment.bundle,
        Some(Seed(args.seed)),
    )?;
    io::write_combined(&args.out.join(FULL_CHAIN), &experiment.full)?;
    let (coefficients, alpha, beta) = match &model {
        Model::Logistic { beta } => (Some(beta.as_slice()), None, None),
        Model::Gamma { alpha, beta } => (None, Some(*alpha), Some(*beta)),
    };
    let manifest = RunManifest {
        created_by: CREATED_BY,
        model: model.name(),
        n: args.n,
        shards: args.shards,
        iters: args.iters,
        burnin: args.burnin,
        thin: args.thin,
        seed: args.seed,
        coefficients,
        alpha,
        beta,
        bundle: BUNDLE_MANIFEST,
        full_chain: FULL_CHAIN,
        shard_acceptance: &experiment.shard_acceptance,
        full_acceptance: experiment.full_acceptance,
        warnings: &experiment.warnings,
    };
    io::write_json(&args.out.join(RUN_MANIFEST), &manifest)
}
