//! Per-layer, per-class results and their CSV and JSON renderings.

use std::path::{Path, PathBuf};

use protgeom_core::MomentCurve;
use serde::{Deserialize, Serialize};

/// Label used in CSV output for statistics of the 3D structures themselves.
pub const STRUCTURE_LAYER: &str = "structure";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KarcherSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub ks: Vec<usize>,
    pub raw_mean: Vec<f64>,
    pub baseline_mean: Vec<f64>,
    /// `None` where the random baseline is zero.
    pub normalized: Vec<Option<f64>>,
    pub normalized_se: Vec<Option<f64>>,
    pub argmin_k: Option<usize>,
    pub min_value: Option<f64>,
}

impl From<&MomentCurve> for MomentReport {
    fn from(curve: &MomentCurve) -> Self {
        let minimum = curve.minimum();
        MomentReport {
            ks: curve.ks.clone(),
            raw_mean: curve.raw_mean.clone(),
            baseline_mean: curve.baseline_mean.clone(),
            normalized: curve.normalized.clone(),
            normalized_se: curve.normalized_se.clone(),
            argmin_k: minimum.map(|m| m.0),
            min_value: minimum.map(|m| m.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    /// `None` for the 3D structures.
    pub layer_index: Option<u32>,
    pub class_label: String,
    pub n_proteins: usize,
    /// Proteins of the class dropped because of errors.
    pub n_skipped: usize,
    pub frechet_radius_geodesic: Option<f64>,
    pub frechet_radius_chordal: Option<f64>,
    pub effective_dimension_tangent: Option<f64>,
    pub effective_dimension_flat: Option<f64>,
    pub karcher: Option<KarcherSummary>,
    pub moment_curve: Option<MomentReport>,
    /// Degenerate or otherwise noteworthy conditions, e.g. `tangent_spectrum_degenerate`.
    pub flags: Vec<String>,
}

impl LayerReport {
    pub fn empty(layer_index: Option<u32>, class_label: &str) -> Self {
        LayerReport {
            layer_index,
            class_label: class_label.to_string(),
            n_proteins: 0,
            n_skipped: 0,
            frechet_radius_geodesic: None,
            frechet_radius_chordal: None,
            effective_dimension_tangent: None,
            effective_dimension_flat: None,
            karcher: None,
            moment_curve: None,
            flags: Vec::new(),
        }
    }

    pub fn layer_label(&self) -> String {
        self.layer_index
            .map_or_else(|| STRUCTURE_LAYER.to_string(), |i| i.to_string())
    }
}

pub const MOMENT_HEADER: [&str; 7] = [
    "layer",
    "class_label",
    "k",
    "raw_mean",
    "baseline_mean",
    "normalized",
    "normalized_se",
];

pub const SCALAR_HEADER: [&str; 13] = [
    "layer",
    "class_label",
    "n_proteins",
    "n_skipped",
    "frechet_radius_geodesic",
    "frechet_radius_chordal",
    "effective_dimension_tangent",
    "effective_dimension_flat",
    "karcher_iterations",
    "karcher_converged",
    "moment_argmin_k",
    "moment_min",
    "flags",
];

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn int(v: Option<usize>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("CSV of UTF-8 fields")
}

/// Moment rows, one per (layer, class, k).
pub fn moments_csv(reports: &[LayerReport]) -> String {
    let mut w = csv_writer();
    w.write_record(MOMENT_HEADER).expect("in-memory writer");
    for r in reports {
        let Some(m) = &r.moment_curve else { continue };
        for (i, k) in m.ks.iter().enumerate() {
            w.write_record([
                r.layer_label(),
                r.class_label.clone(),
                k.to_string(),
                m.raw_mean[i].to_string(),
                m.baseline_mean[i].to_string(),
                num(m.normalized[i]),
                num(m.normalized_se[i]),
            ])
            .expect("in-memory writer");
        }
    }
    finish(w)
}

/// Scalar rows, one per (layer, class).
pub fn scalars_csv(reports: &[LayerReport]) -> String {
    let mut w = csv_writer();
    w.write_record(SCALAR_HEADER).expect("in-memory writer");
    for r in reports {
        let moment = r.moment_curve.as_ref();
        w.write_record([
            r.layer_label(),
            r.class_label.clone(),
            r.n_proteins.to_string(),
            r.n_skipped.to_string(),
            num(r.frechet_radius_geodesic),
            num(r.frechet_radius_chordal),
            num(r.effective_dimension_tangent),
            num(r.effective_dimension_flat),
            int(r.karcher.as_ref().map(|k| k.iterations)),
            r.karcher
                .as_ref()
                .map_or_else(String::new, |k| k.converged.to_string()),
            int(moment.and_then(|m| m.argmin_k)),
            num(moment.and_then(|m| m.min_value)),
            r.flags.join(";"),
        ])
        .expect("in-memory writer");
    }
    finish(w)
}

pub fn to_json(reports: &[LayerReport]) -> String {
    let mut text = serde_json::to_string_pretty(reports).expect("reports serialize");
    text.push('\n');
    text
}

pub fn from_json(text: &str) -> serde_json::Result<Vec<LayerReport>> {
    serde_json::from_str(text)
}

/// Path of the scalar table written next to a CSV moment table.
pub fn companion_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.scalars.csv"))
}

/// Writes `reports` to `path`. CSV output also writes the scalar table to
/// [`companion_path`]. Returns every path written.
pub fn write_report(
    reports: &[LayerReport],
    path: &Path,
    format: ReportFormat,
) -> std::io::Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            std::fs::write(path, to_json(reports))?;
            Ok(vec![path.to_owned()])
        }
        ReportFormat::Csv => {
            let scalars = companion_path(path);
            std::fs::write(path, moments_csv(reports))?;
            std::fs::write(&scalars, scalars_csv(reports))?;
            Ok(vec![path.to_owned(), scalars])
        }
    }
}
