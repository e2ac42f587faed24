//! Run settings shared by the analysis commands, from flags and an optional JSON file.

use std::path::{Path, PathBuf};

use clap::Args;
use protgeom_core::{Adjacency, KarcherOptions};
use serde::{Deserialize, Serialize};

use crate::pipeline::{FiltrationConfig, ShapeConfig};
use crate::report::ReportFormat;

/// Every field is optional so that a config file and command-line flags can
/// be layered; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with any of these settings; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Samples per resampled curve (default 1000).
    #[arg(long)]
    pub points: Option<usize>,
    /// Explicit comma-separated filtration levels.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Largest filtration level (default min(64, L_min - 1)).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Random clouds per protein for the filtration baseline (default 8).
    #[arg(long)]
    pub n_baseline: Option<usize>,
    /// Seed of the baseline clouds; protein i draws from stream i (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Karcher gradient step (default 1.0).
    #[arg(long)]
    pub karcher_step: Option<f64>,
    /// Karcher gradient-norm tolerance (default 1e-6).
    #[arg(long)]
    pub karcher_tol: Option<f64>,
    /// Karcher iteration cap (default 200).
    #[arg(long)]
    pub karcher_max_iter: Option<usize>,
    /// Chain for entries that do not name one (default: first chain).
    #[arg(long)]
    pub chain: Option<char>,
    /// Use symmetrized kNN adjacency instead of directed.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub symmetrize: Option<bool>,
    /// Report path; CSV output also writes `<stem>.scalars.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format (default from the extension of --out, else csv).
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            config: self.config.or(base.config),
            manifest: self.manifest.or(base.manifest),
            points: self.points.or(base.points),
            ks: self.ks.or(base.ks),
            k_max: self.k_max.or(base.k_max),
            n_baseline: self.n_baseline.or(base.n_baseline),
            seed: self.seed.or(base.seed),
            karcher_step: self.karcher_step.or(base.karcher_step),
            karcher_tol: self.karcher_tol.or(base.karcher_tol),
            karcher_max_iter: self.karcher_max_iter.or(base.karcher_max_iter),
            chain: self.chain.or(base.chain),
            symmetrize: self.symmetrize.or(base.symmetrize),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            threads: self.threads.or(base.threads),
        }
    }

    /// Flags layered over the `--config` file, if any.
    pub fn resolve(self) -> anyhow::Result<RunConfig> {
        match &self.config {
            Some(path) => Ok(self.clone().over(RunConfig::from_json_file(path)?)),
            None => Ok(self),
        }
    }

    pub fn shape_config(&self) -> anyhow::Result<ShapeConfig> {
        let defaults = KarcherOptions::default();
        let samples = self.points.unwrap_or(protgeom_core::curve::DEFAULT_SAMPLES);
        anyhow::ensure!(samples >= 2, "--points must be at least 2");
        let karcher = KarcherOptions {
            step: self.karcher_step.unwrap_or(defaults.step),
            tolerance: self.karcher_tol.unwrap_or(defaults.tolerance),
            max_iterations: self.karcher_max_iter.unwrap_or(defaults.max_iterations),
        };
        anyhow::ensure!(
            karcher.step > 0.0 && karcher.step.is_finite(),
            "--karcher-step must be positive"
        );
        anyhow::ensure!(
            karcher.tolerance >= 0.0,
            "--karcher-tol must be non-negative"
        );
        Ok(ShapeConfig {
            samples,
            karcher,
            chain: self.chain,
        })
    }

    pub fn filtration_config(&self) -> anyhow::Result<FiltrationConfig> {
        let defaults = FiltrationConfig::default();
        let baseline_samples = self.n_baseline.unwrap_or(defaults.baseline_samples);
        anyhow::ensure!(baseline_samples >= 1, "--n-baseline must be at least 1");
        Ok(FiltrationConfig {
            ks: self.ks.clone().unwrap_or_default(),
            k_max: self.k_max,
            baseline_samples,
            seed: self.seed.unwrap_or(defaults.seed),
            adjacency: if self.symmetrize.unwrap_or(false) {
                Adjacency::Symmetrized
            } else {
                Adjacency::Directed
            },
            chain: self.chain,
        })
    }

    pub fn report_format(&self) -> ReportFormat {
        self.format
            .unwrap_or_else(|| match self.out.as_ref().and_then(|p| p.extension()) {
                Some(ext) if ext.eq_ignore_ascii_case("json") => ReportFormat::Json,
                _ => ReportFormat::Csv,
            })
    }
}
