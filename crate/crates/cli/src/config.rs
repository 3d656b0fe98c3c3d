//! Run configuration shared by every verb.

use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

pub const DEFAULT_Q_ORDER: usize = 40;
pub const DEFAULT_Z_ORDER: usize = 8;
pub const DEFAULT_G_MAX: u32 = 2;
pub const DEFAULT_GUARD: usize = 10;
pub const DEFAULT_CACHE: &str = ".mirrorforge/wk-cache.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub q_order: usize,
    /// Whether `q_order` came from a flag or the environment rather than the default.
    #[serde(skip)]
    pub q_order_explicit: bool,
    pub z_order: usize,
    pub g_max: u32,
    pub cache_path: PathBuf,
    pub output_format: OutputFormat,
    pub guard: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            q_order: DEFAULT_Q_ORDER,
            q_order_explicit: false,
            z_order: DEFAULT_Z_ORDER,
            g_max: DEFAULT_G_MAX,
            cache_path: PathBuf::from(DEFAULT_CACHE),
            output_format: OutputFormat::Json,
            guard: DEFAULT_GUARD,
        }
    }
}

impl RunConfig {
    pub fn with_q_order(mut self, q_order: usize) -> Self {
        self.q_order = q_order;
        self.q_order_explicit = true;
        self
    }

    /// Rejects requests beyond the configured genus bound.
    pub fn check_genus(&self, g: u32) -> Result<(), CliError> {
        if g > self.g_max {
            return Err(CliError::GenusBound { g, g_max: self.g_max });
        }
        Ok(())
    }

    /// `z_order ≥ 2·(3g−3+n) + 2`, the R-matrix depth a graph sum of that
    /// dimension reads.
    pub fn check_z_order(&self, dim: i64) -> Result<(), CliError> {
        let needed = (2 * dim + 2).max(0) as usize;
        if self.z_order < needed {
            return Err(CliError::ZOrder { needed, z_order: self.z_order });
        }
        Ok(())
    }

    /// Comparison order for a suite: an explicit q-order caps the default.
    pub fn suite_order(&self, default: usize) -> usize {
        if self.q_order_explicit {
            default.min(self.q_order)
        } else {
            default
        }
    }
}
