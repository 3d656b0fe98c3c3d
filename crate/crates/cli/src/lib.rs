//! Command-line front end: argument parsing, verb dispatch and reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{OutputFormat, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("genus {g} exceeds g_max = {g_max}")]
    GenusBound { g: u32, g_max: u32 },
    #[error("z_order {z_order} is below the {needed} this request reads")]
    ZOrder { needed: usize, z_order: usize },
    #[error("unknown suite {0:?}")]
    Suite(String),
    #[error("{0}")]
    Invalid(String),
    /// The request was well formed but the computation broke an invariant.
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Computation(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mirrorforge", version, about = "Exact verification suites for the twisted O(3) theory over P^2")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Working q-order for series and fits.
    #[arg(long, global = true, env = "MIRRORFORGE_ORDER")]
    pub q_order: Option<usize>,
    /// Depth of the R-matrix in z.
    #[arg(long, global = true, default_value_t = config::DEFAULT_Z_ORDER)]
    pub z_order: usize,
    #[arg(long, global = true, default_value_t = config::DEFAULT_G_MAX)]
    pub g_max: u32,
    /// Surplus coefficients every fit must reproduce.
    #[arg(long, global = true, default_value_t = config::DEFAULT_GUARD)]
    pub guard: usize,
    /// Intersection-number cache file.
    #[arg(long, global = true, env = "MIRRORFORGE_CACHE", default_value = config::DEFAULT_CACHE)]
    pub cache: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

impl GlobalArgs {
    pub fn config(&self) -> RunConfig {
        let base = RunConfig {
            z_order: self.z_order,
            g_max: self.g_max,
            guard: self.guard,
            cache_path: self.cache.clone(),
            output_format: self.format,
            ..RunConfig::default()
        };
        match self.q_order {
            Some(q) => base.with_q_order(q),
            None => base,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Dump a q-series with exact coefficients.
    Series {
        /// i0, i1, i2, i3, l, mirror-q, inverse-q, x1, x2, y1, y2, y3, y4 or iMN for a ladder entry.
        #[arg(long)]
        name: String,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Run verification suites.
    Verify {
        /// A suite name or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Comparison order forced on the selected suites.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Dump the solved r_k and the R-matrix columns.
    Rmatrix {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Dump a, b, E2, E4, E6 as Q-series.
    Modular {
        #[arg(long)]
        order: Option<usize>,
    },
    /// A psi/kappa intersection number on the moduli of stable curves.
    Intersect {
        #[arg(long)]
        g: u32,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        psi: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        kappa: Vec<u32>,
    },
    /// A twisted correlator from the graph sum.
    Correlator(CorrelatorArgs),
    /// Fit a correlator in the generator basis.
    Fit(CorrelatorArgs),
    /// Certify a fitted correlator as quasi-modular.
    Certify(CorrelatorArgs),
    /// Check the holomorphic anomaly equation.
    Hae(CorrelatorArgs),
    /// Inspect or manage the intersection-number cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Args, Clone)]
pub struct CorrelatorArgs {
    #[arg(long)]
    pub g: u32,
    #[arg(long)]
    pub n: Option<usize>,
    /// Insertions among 1, H, H2 (comma separated); defaults to n copies of H.
    #[arg(long, value_delimiter = ',')]
    pub ins: Vec<String>,
    /// Degree of the requested part; checked against the pairing class.
    #[arg(long)]
    pub deg: Option<i64>,
    /// `psi:a1,..`, `kappa:k1,..` or both joined by `+`.
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Include the per-graph breakdown.
    #[arg(long)]
    pub explain: bool,
}

#[derive(Debug, Subcommand, Clone, Copy)]
pub enum CacheAction {
    /// Entry count and schema of the cache file.
    Stats,
    /// Compute every stable key up to a dimension and save.
    Warm {
        #[arg(long, default_value_t = 6)]
        dim: i64,
    },
    /// Delete the cache file.
    Clear,
}

/// Output text and exit status for parsed arguments.
pub fn dispatch(cli: &Cli) -> (String, i32) {
    let config = cli.global.config();
    match commands::run(&cli.verb, &config) {
        Ok(report) => (report.emit(config.output_format), report.exit_code()),
        Err(e) => (format!("error: {e}\n"), e.exit_code()),
    }
}
