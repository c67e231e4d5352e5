//! Run configuration: output format, seed and numerical overrides.
//!
//! Defaults can be overridden by a `key=value` file passed with
//! `--config`, and flags given on the command line win over the file.
//! Blank lines and lines starting with `#` are ignored. Recognised keys
//! are `format`, `seed` and every field of the mode solver configuration
//! (`n`, `x0`, `x_max`, `residual_tol`, `rate_tol`, `expansion_tol`,
//! `slope_tol`, `bc_nodes`, `exp_floor`, `exp_max_step`, `refine_tol`).

use crate::error::{CliError, CliResult};
use alh_lab::modes::ModesConfig;
use std::path::Path;

/// Serialisation of the emitted artifact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// A single JSON document.
    Json,
    /// `key,value` rows with a header, one row per scalar result.
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

/// Everything that determines the output of a command besides its flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Output format.
    pub format: Format,
    /// Seed for randomly sampled points.
    pub seed: u64,
    /// Grid and tolerance parameters of the mode solver.
    pub modes: ModesConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format: Format::Json,
            seed: 7,
            modes: ModesConfig::default(),
        }
    }
}

impl RunConfig {
    /// Apply one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "format" => self.format = value.parse().map_err(CliError::Usage)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| CliError::Usage(format!("seed: {e}")))?
            }
            _ => self.modes.set(key, value).map_err(CliError::Usage)?,
        }
        Ok(())
    }

    /// Apply every override of a configuration file.
    pub fn load_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    /// Check the invariants: positive grid size and an ordered interval.
    pub fn validate(&self) -> CliResult<()> {
        let m = &self.modes;
        if m.n < 4 * m.bc_nodes.max(1) {
            return Err(CliError::Usage(format!(
                "grid size n = {} is too small for {} boundary nodes",
                m.n, m.bc_nodes
            )));
        }
        if !(m.x0 > 0.0 && m.x0 < m.x_max && m.x_max.is_finite()) {
            return Err(CliError::Usage(format!(
                "grid interval needs 0 < x0 < x_max, got x0 = {}, x_max = {}",
                m.x0, m.x_max
            )));
        }
        Ok(())
    }
}
