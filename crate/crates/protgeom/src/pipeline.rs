//! Per-layer, per-class analysis runs over a dataset manifest.

use std::path::PathBuf;

use protgeom_core::filtration::{
    default_ks, distance_profile, gaussian_cloud, protein_distances, protein_rng,
};
use protgeom_core::{
    expected_random_distance, flat_effective_dimension, frechet_radius, karcher_mean,
    knn_filtration, shape_of, tangent_pca, Adjacency, KarcherOptions, MomentCurve, MomentOptions,
    PointCloud, SrvShape,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::manifest::{DatasetManifest, ManifestEntry};
use crate::npy::{read_npy, NpyError};
use crate::pdb::{extract_point_cloud, parse_pdb, select_chain, PdbError};
use crate::report::{KarcherSummary, LayerReport, MomentReport};

/// Failure confined to one protein; the protein is skipped.
#[derive(Debug, Error)]
pub enum ProteinError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error(transparent)]
    Npy(#[from] NpyError),
    #[error("embedding has {embedding} rows but the structure has {structure} residues")]
    LengthMismatch { structure: usize, embedding: usize },
    #[error(transparent)]
    Geometry(#[from] protgeom_core::Error),
}

impl ProteinError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            ProteinError::Io { .. } => "io",
            ProteinError::Pdb(_) => "pdb",
            ProteinError::Npy(_) => "npy",
            ProteinError::LengthMismatch { .. } => "length_mismatch",
            ProteinError::Geometry(protgeom_core::Error::ZeroCurve) => "zero_curve",
            ProteinError::Geometry(_) => "geometry",
        }
    }
}

/// Failure that stops the whole run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("layer {layer}, class {class:?}: {source}")]
    Group {
        layer: String,
        class: String,
        source: protgeom_core::Error,
    },
    #[error("k = {k} exceeds L - 1 = {max} for the shortest structure")]
    KTooLarge { k: usize, max: usize },
    #[error("invalid level set: {0}")]
    BadLevels(String),
    #[error("no structure could be loaded")]
    NoStructures,
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProteinIssue {
    pub protein_id: String,
    /// `None` for problems with the structure itself.
    pub layer_index: Option<u32>,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reports: Vec<LayerReport>,
    pub issues: Vec<ProteinIssue>,
}

impl RunOutcome {
    /// JSON summary of the protein-level errors.
    pub fn error_summary(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            protein_errors: usize,
            issues: &'a [ProteinIssue],
        }
        serde_json::to_string(&Summary {
            protein_errors: self.issues.len(),
            issues: &self.issues,
        })
        .expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeConfig {
    pub samples: usize,
    pub karcher: KarcherOptions,
    /// Chain for entries that do not name one; the first chain when `None`.
    pub chain: Option<char>,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        ShapeConfig {
            samples: protgeom_core::curve::DEFAULT_SAMPLES,
            karcher: KarcherOptions::default(),
            chain: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationConfig {
    /// Explicit levels; when empty, `1..=min(k_max, L_min - 1)`.
    pub ks: Vec<usize>,
    pub k_max: Option<usize>,
    pub baseline_samples: usize,
    pub seed: u64,
    pub adjacency: Adjacency,
    pub chain: Option<char>,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        let moment = MomentOptions::default();
        FiltrationConfig {
            ks: Vec::new(),
            k_max: None,
            baseline_samples: moment.baseline_samples,
            seed: moment.seed,
            adjacency: moment.adjacency,
            chain: None,
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, RunError> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(f)),
        None => Ok(f()),
    }
}

/// Cα cloud of an entry's chain.
pub fn load_structure(
    entry: &ManifestEntry,
    default_chain: Option<char>,
) -> Result<PointCloud, ProteinError> {
    let text = std::fs::read(&entry.pdb_path).map_err(|source| ProteinError::Io {
        path: entry.pdb_path.clone(),
        source,
    })?;
    let chains = parse_pdb(text)?;
    let chain = select_chain(&chains, entry.chain.or(default_chain))?;
    Ok(extract_point_cloud(chain)?)
}

/// Embedding of `entry` at `layer`, checked against the structure length.
fn load_embedding(
    entry: &ManifestEntry,
    layer: u32,
    structure_len: usize,
) -> Option<Result<PointCloud, ProteinError>> {
    let file = entry.layers.iter().find(|l| l.layer_index == layer)?;
    Some(
        read_npy(&file.embedding_path)
            .map_err(ProteinError::from)
            .and_then(|cloud| {
                if cloud.len() == structure_len {
                    Ok(cloud)
                } else {
                    Err(ProteinError::LengthMismatch {
                        structure: structure_len,
                        embedding: cloud.len(),
                    })
                }
            }),
    )
}

fn issue(entry: &ManifestEntry, layer: Option<u32>, err: &ProteinError) -> ProteinIssue {
    let where_ = layer.map_or_else(|| "structure".to_string(), |l| format!("layer {l}"));
    log::warn!("skipping {} ({where_}): {err}", entry.protein_id);
    ProteinIssue {
        protein_id: entry.protein_id.clone(),
        layer_index: layer,
        kind: err.kind().to_string(),
        message: err.to_string(),
    }
}

struct Loaded {
    structures: Vec<Option<PointCloud>>,
    issues: Vec<ProteinIssue>,
}

fn load_all_structures(manifest: &DatasetManifest, chain: Option<char>) -> Loaded {
    let results: Vec<_> = manifest
        .entries
        .par_iter()
        .map(|e| load_structure(e, chain))
        .collect();
    let mut issues = Vec::new();
    let structures = results
        .into_iter()
        .zip(&manifest.entries)
        .map(|(r, e)| r.map_err(|err| issues.push(issue(e, None, &err))).ok())
        .collect();
    Loaded { structures, issues }
}

/// A group's members that could be loaded, in manifest order, plus the
/// number dropped.
struct Members {
    indices: Vec<usize>,
    clouds: Vec<PointCloud>,
    skipped: usize,
}

/// Embeddings of the proteins of `class` at `layer`, or their structures
/// when `layer` is `None`.
fn load_members(
    manifest: &DatasetManifest,
    loaded: &Loaded,
    layer: Option<u32>,
    class: &str,
    issues: &mut Vec<ProteinIssue>,
) -> Members {
    let candidates: Vec<usize> = (0..manifest.entries.len())
        .filter(|&i| {
            let e = &manifest.entries[i];
            e.class_label == class
                && layer.is_none_or(|l| e.layers.iter().any(|f| f.layer_index == l))
        })
        .collect();
    let results: Vec<Option<Result<PointCloud, ProteinError>>> = candidates
        .par_iter()
        .map(|&i| {
            let structure = loaded.structures[i].as_ref()?;
            match layer {
                None => Some(Ok(structure.clone())),
                Some(l) => load_embedding(&manifest.entries[i], l, structure.len()),
            }
        })
        .collect();

    let mut members = Members {
        indices: Vec::new(),
        clouds: Vec::new(),
        skipped: 0,
    };
    for (&i, result) in candidates.iter().zip(results) {
        match result {
            Some(Ok(cloud)) => {
                members.indices.push(i);
                members.clouds.push(cloud);
            }
            Some(Err(err)) => {
                issues.push(issue(&manifest.entries[i], layer, &err));
                members.skipped += 1;
            }
            // Structure failed to load; already reported once.
            None => members.skipped += 1,
        }
    }
    members
}

fn group_error(
    layer: Option<u32>,
    class: &str,
) -> impl FnOnce(protgeom_core::Error) -> RunError + '_ {
    move |source| RunError::Group {
        layer: layer.map_or_else(|| "structure".into(), |l| l.to_string()),
        class: class.to_string(),
        source,
    }
}

fn shape_group(
    manifest: &DatasetManifest,
    members: Members,
    layer: Option<u32>,
    class: &str,
    config: &ShapeConfig,
    issues: &mut Vec<ProteinIssue>,
) -> Result<Option<LayerReport>, RunError> {
    let results: Vec<_> = members
        .clouds
        .par_iter()
        .map(|c| shape_of(c, config.samples))
        .collect();
    let mut report = LayerReport::empty(layer, class);
    report.n_skipped = members.skipped;
    let mut shapes: Vec<SrvShape> = Vec::new();
    let mut clouds: Vec<PointCloud> = Vec::new();
    for ((&i, cloud), result) in members.indices.iter().zip(members.clouds).zip(results) {
        match result {
            Ok(shape) => {
                shapes.push(shape);
                clouds.push(cloud);
            }
            Err(err) => {
                issues.push(issue(&manifest.entries[i], layer, &err.into()));
                report.n_skipped += 1;
            }
        }
    }
    if shapes.is_empty() {
        log::warn!(
            "class {class:?} at layer {}: no usable proteins, no report",
            report.layer_label()
        );
        return Ok(None);
    }
    report.n_proteins = shapes.len();

    let karcher = karcher_mean(&shapes, &config.karcher).map_err(group_error(layer, class))?;
    if !karcher.converged {
        report.flags.push("karcher_not_converged".into());
    }
    let radius = frechet_radius(&shapes, &karcher.mean).map_err(group_error(layer, class))?;
    report.frechet_radius_geodesic = Some(radius.geodesic);
    report.frechet_radius_chordal = Some(radius.chordal);
    report.karcher = Some(KarcherSummary {
        iterations: karcher.iterations,
        converged: karcher.converged,
        final_gradient_norm: karcher.final_gradient_norm,
    });

    if shapes.len() < 2 {
        report.flags.push("single_protein".into());
        return Ok(Some(report));
    }
    let tangent = tangent_pca(&shapes, &karcher.mean).map_err(group_error(layer, class))?;
    drop(shapes);
    let flat =
        flat_effective_dimension(&clouds, config.samples).map_err(group_error(layer, class))?;
    if tangent.degenerate {
        report.flags.push("tangent_spectrum_degenerate".into());
    }
    if flat.degenerate {
        report.flags.push("flat_spectrum_degenerate".into());
    }
    report.effective_dimension_tangent = Some(tangent.effective_dimension);
    report.effective_dimension_flat = Some(flat.effective_dimension);
    Ok(Some(report))
}

/// Shape statistics of the structures and of every (layer, class) group.
pub fn shape_stats(
    manifest: &DatasetManifest,
    config: &ShapeConfig,
) -> Result<RunOutcome, RunError> {
    let loaded = load_all_structures(manifest, config.chain);
    let mut issues = loaded.issues.clone();
    let mut reports = Vec::new();
    let layers = std::iter::once(None).chain(manifest.layer_indices().into_iter().map(Some));
    for layer in layers {
        for class in manifest.class_labels() {
            let members = load_members(manifest, &loaded, layer, class, &mut issues);
            if let Some(report) = shape_group(manifest, members, layer, class, config, &mut issues)?
            {
                reports.push(report);
            }
        }
    }
    Ok(RunOutcome { reports, issues })
}

/// Levels for a run over structures whose shortest chain has `min_len` residues.
pub fn resolve_levels(config: &FiltrationConfig, min_len: usize) -> Result<Vec<usize>, RunError> {
    let max = min_len.saturating_sub(1);
    let ks = if config.ks.is_empty() {
        let mut ks = default_ks(min_len);
        if let Some(k_max) = config.k_max {
            if k_max > max {
                return Err(RunError::KTooLarge { k: k_max, max });
            }
            ks = (1..=k_max).collect();
        }
        ks
    } else {
        config.ks.clone()
    };
    if ks.is_empty() {
        return Err(RunError::BadLevels("no levels to evaluate".into()));
    }
    if ks.contains(&0) {
        return Err(RunError::BadLevels("k must be at least 1".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunError::BadLevels(
            "levels must be strictly increasing".into(),
        ));
    }
    match ks.iter().find(|&&k| k > max) {
        Some(&k) => Err(RunError::KTooLarge { k, max }),
        None => Ok(ks),
    }
}

/// Normalized filtration moments of every (layer, class) group.
pub fn filtration(
    manifest: &DatasetManifest,
    config: &FiltrationConfig,
) -> Result<RunOutcome, RunError> {
    let loaded = load_all_structures(manifest, config.chain);
    let mut issues = loaded.issues.clone();
    let min_len = loaded
        .structures
        .iter()
        .flatten()
        .map(PointCloud::len)
        .min()
        .ok_or(RunError::NoStructures)?;
    let ks = resolve_levels(config, min_len)?;
    let options = MomentOptions {
        ks: ks.clone(),
        baseline_samples: config.baseline_samples,
        seed: config.seed,
        adjacency: config.adjacency,
    };

    let mut reports = Vec::new();
    for layer in manifest.layer_indices() {
        for class in manifest.class_labels() {
            let members = load_members(manifest, &loaded, Some(layer), class, &mut issues);
            let results: Vec<_> = members
                .indices
                .par_iter()
                .zip(&members.clouds)
                .map(|(&i, embedding)| {
                    let structure = loaded.structures[i]
                        .as_ref()
                        .expect("members have structures");
                    protein_distances(structure, embedding, &ks, &options, i)
                })
                .collect();
            let mut report = LayerReport::empty(Some(layer), class);
            report.n_skipped = members.skipped;
            let mut distances = Vec::new();
            for (&i, result) in members.indices.iter().zip(results) {
                match result {
                    Ok(d) => distances.push(d),
                    Err(err) => {
                        issues.push(issue(&manifest.entries[i], Some(layer), &err.into()));
                        report.n_skipped += 1;
                    }
                }
            }
            if distances.is_empty() {
                log::warn!("class {class:?} at layer {layer}: no usable proteins, no report");
                continue;
            }
            report.n_proteins = distances.len();
            let curve = MomentCurve::from_distances(ks.clone(), &distances)
                .map_err(group_error(Some(layer), class))?;
            if curve.normalized.iter().any(Option::is_none) {
                report.flags.push("zero_baseline".into());
            }
            report.moment_curve = Some(MomentReport::from(&curve));
            reports.push(report);
        }
    }
    Ok(RunOutcome { reports, issues })
}

/// Monte Carlo estimate of the adjacency distance between independent
/// Gaussian clouds at one level, next to its closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub k: usize,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub analytic: f64,
}

impl BaselineRow {
    /// Gap to the closed form in standard errors; 0 when both agree exactly.
    pub fn z_score(&self) -> f64 {
        let gap = self.monte_carlo - self.analytic;
        if gap == 0.0 {
            0.0
        } else {
            gap / self.standard_error
        }
    }
}

/// Compares sampled and closed-form random-pair distances for `k = 1..=k_max`.
pub fn baseline_check(
    len: usize,
    dim: usize,
    k_max: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<BaselineRow>, protgeom_core::Error> {
    if samples == 0 {
        return Err(protgeom_core::Error::NoSamples);
    }
    let profiles: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = protein_rng(seed, s as u64);
            let a = knn_filtration(&gaussian_cloud(len, dim, &mut rng), k_max)?;
            let b = knn_filtration(&gaussian_cloud(len, dim, &mut rng), k_max)?;
            distance_profile(&a, &b, Adjacency::Directed)
        })
        .collect::<Result<_, _>>()?;
    let n = samples as f64;
    Ok((1..=k_max)
        .map(|k| {
            let mean = profiles.iter().map(|p| p[k] as f64).sum::<f64>() / n;
            let var = if samples > 1 {
                profiles
                    .iter()
                    .map(|p| (p[k] as f64 - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0)
            } else {
                0.0
            };
            BaselineRow {
                k,
                monte_carlo: mean,
                standard_error: (var / n).sqrt(),
                analytic: expected_random_distance(len, k),
            }
        })
        .collect())
}
