//! The analysis commands behind the `protgeom` binary.

use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::RunConfig;
use crate::manifest::read_manifest;
use crate::npy::{write_npy, Precision};
use crate::pdb::{extract_point_cloud, parse_pdb, select_chain};
use crate::pipeline::{self, with_threads, BaselineRow, RunOutcome};
use crate::report::write_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    ShapeStats,
    Filtration,
}

/// Result of an analysis command: the run itself and the files written.
#[derive(Debug)]
pub struct Completed {
    pub outcome: RunOutcome,
    pub written: Vec<PathBuf>,
}

/// Runs `analysis` as configured by `config` (flags already layered over
/// any config file) and writes the report.
pub fn run_analysis(analysis: Analysis, config: &RunConfig) -> anyhow::Result<Completed> {
    let manifest_path = config.manifest.as_ref().context("--manifest is required")?;
    let out = config.out.as_ref().context("--out is required")?;
    let manifest = read_manifest(manifest_path)?;
    let outcome = match analysis {
        Analysis::ShapeStats => {
            let shape = config.shape_config()?;
            with_threads(config.threads, || pipeline::shape_stats(&manifest, &shape))??
        }
        Analysis::Filtration => {
            let filtration = config.filtration_config()?;
            with_threads(config.threads, || {
                pipeline::filtration(&manifest, &filtration)
            })??
        }
    };
    let written = write_report(&outcome.reports, out, config.report_format())
        .with_context(|| format!("writing {}", out.display()))?;
    Ok(Completed { outcome, written })
}

/// Writes the Cα cloud of one chain as NPY; returns its length and chain id.
pub fn parse_pdb_to_npy(
    pdb: &Path,
    chain: Option<char>,
    out: &Path,
    precision: Precision,
) -> anyhow::Result<(usize, char)> {
    let text = std::fs::read(pdb).with_context(|| format!("reading {}", pdb.display()))?;
    let chains = parse_pdb(text).with_context(|| pdb.display().to_string())?;
    let chain = select_chain(&chains, chain)?;
    let cloud = extract_point_cloud(chain)?;
    write_npy(out, &cloud, precision)?;
    Ok((cloud.len(), chain.chain_id))
}

/// Tab-separated table of [`pipeline::baseline_check`] rows.
pub fn baseline_table(rows: &[BaselineRow]) -> String {
    let mut out = String::from("k\tmonte_carlo\tstandard_error\tanalytic\tz\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.2}\n",
            r.k,
            r.monte_carlo,
            r.standard_error,
            r.analytic,
            r.z_score()
        ));
    }
    out
}
