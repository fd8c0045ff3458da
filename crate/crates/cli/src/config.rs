use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Exact Hecke eigenvalue tables and short-interval Rankin–Selberg numerics
/// for level-one cusp forms.
#[derive(Debug, Parser)]
#[command(name = "rankin-lab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Weight of the level-one eigenform (12, 16, 18, 20, 22 or 26).
    #[arg(long, global = true, default_value_t = 12)]
    pub weight: u32,
    /// Table length; each command picks a sufficient default.
    #[arg(long, global = true)]
    pub nmax: Option<u64>,
    /// Range start X (default depends on the command).
    #[arg(long = "X", global = true)]
    pub x: Option<u64>,
    /// Interval length H (default depends on the command).
    #[arg(long = "H", global = true)]
    pub h: Option<u64>,
    /// Divisor cutoff z (default H²).
    #[arg(long, global = true)]
    pub z: Option<u64>,
    /// Number of sample points (default 2000).
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Seed for random sampling; without it points lie on a uniform grid.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory holding cached eigenvalue tables.
    #[arg(
        long,
        global = true,
        env = "RANKIN_LAB_CACHE",
        default_value = ".rankin-cache"
    )]
    pub cache_dir: PathBuf,
    /// Report destination (default: standard output).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker thread cap (default: all cores). Never changes the output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingKind {
    Sharp,
    Exp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute (or load) the eigenvalue table and write eig_k<weight>.csv to the cache.
    Eigen,
    /// Exact Hecke relation, convolution identity and Deligne bound (default nmax 10000).
    Identities,
    /// Main-term ratio with c₁ cross-validated three ways (default X 100000).
    RankinSelberg {
        /// Lower end of the exponent sweep (default X/100).
        #[arg(long)]
        sweep_from: Option<u64>,
        #[arg(long, default_value_t = 13)]
        sweep_points: usize,
    },
    /// Variance of S(x,H) − c₁H over [X, 2X] (defaults X 100000, H 50).
    Variance,
    /// Small-d / large-d / tail decomposition at the sample points.
    Decompose,
    /// Sin-kernel sum at (z, H), or a growth sweep over --sweep.
    SinKernel {
        #[arg(long, default_value_t = 10_000)]
        lambda_max: u64,
        /// Comma-separated H values; each uses z = H².
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<u64>,
    },
    /// Beurling–Selberg majorant checks.
    Majorant {
        /// δ directly; overrides --b and --eps.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
        #[arg(long, default_value_t = 20)]
        probes: usize,
    },
    /// L(sym²f, s) by a truncated Dirichlet series.
    Lvalue {
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, default_value_t = 1000)]
        cutoff: u64,
        #[arg(long, value_enum, default_value_t = SmoothingKind::Sharp)]
        smoothing: SmoothingKind,
        /// Exponential smoothing width (default cutoff/10).
        #[arg(long)]
        width: Option<f64>,
    },
    /// Remainder of Σ_{d<=z} λ(d²)/d and its fitted decay (default z 10000).
    Perron {
        #[arg(long, default_value_t = 13)]
        sweep_points: usize,
    },
    /// Petersson trace formula at dimension one, plus the Weil bound.
    Petersson {
        #[arg(long, default_value_t = 256)]
        cmax: u64,
        /// Check every (m, n) with mn <= this.
        #[arg(long, default_value_t = 100)]
        mn_max: u64,
        /// Largest modulus for the Weil bound sweep.
        #[arg(long, default_value_t = 500)]
        weil_c: u64,
    },
    /// Validate tabulated Maass coefficient files.
    MaassValidate {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Weighted variance over a partial family of Maass forms.
    MaassFamily {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Spectral window [T, 2T].
        #[arg(long = "T")]
        t: f64,
        /// Apply the e^{−t_j/T} factor.
        #[arg(long)]
        spectral_smoothing: bool,
        /// Cutoff for the c₁ weights (default min(nmax, 10000)).
        #[arg(long)]
        cutoff: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Identities => "identities",
            Command::RankinSelberg { .. } => "rankin-selberg",
            Command::Variance => "variance",
            Command::Decompose => "decompose",
            Command::SinKernel { .. } => "sin-kernel",
            Command::Majorant { .. } => "majorant",
            Command::Lvalue { .. } => "lvalue",
            Command::Perron { .. } => "perron",
            Command::Petersson { .. } => "petersson",
            Command::MaassValidate { .. } => "maass-validate",
            Command::MaassFamily { .. } => "maass-family",
        }
    }
}

/// Everything that determines a report. Thread count is deliberately absent.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub weight: u32,
    #[serde(rename = "X")]
    pub x: Option<u64>,
    #[serde(rename = "H")]
    pub h: Option<u64>,
    pub z: Option<u64>,
    pub nmax: Option<u64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub cache_dir: PathBuf,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub params: BTreeMap<&'static str, serde_json::Value>,
}

impl RunConfig {
    pub fn new(command: &Command, c: &Common) -> Self {
        RunConfig {
            command: command.name(),
            weight: c.weight,
            x: c.x,
            h: c.h,
            z: c.z,
            nmax: c.nmax,
            samples: c.samples,
            seed: c.seed,
            cache_dir: c.cache_dir.clone(),
            output: c.output.clone(),
            format: c.format,
            params: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &'static str, value: impl Serialize) {
        self.params.insert(
            key,
            serde_json::to_value(value).expect("serializable parameter"),
        );
    }
}
