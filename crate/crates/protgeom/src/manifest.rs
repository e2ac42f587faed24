//! Dataset manifests: proteins, their class labels, structures and per-layer embeddings.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest schema: {0}")]
    SchemaError(String),
    #[error("entry {protein_id:?} references a missing file: {path}")]
    MissingFile { protein_id: String, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub layer_index: u32,
    pub embedding_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub protein_id: String,
    pub class_label: String,
    pub pdb_path: PathBuf,
    /// Chain to read; the first chain in the file when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<char>,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Checks the schema invariants that serde cannot express.
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.entries.is_empty() {
            return Err(ManifestError::SchemaError("entries list is empty".into()));
        }
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.protein_id.as_str()) {
                return Err(ManifestError::SchemaError(format!(
                    "duplicate protein_id {:?}",
                    entry.protein_id
                )));
            }
            if let Some(pair) = entry
                .layers
                .windows(2)
                .find(|w| w[1].layer_index <= w[0].layer_index)
            {
                return Err(ManifestError::SchemaError(format!(
                    "entry {:?}: layer_index {} follows {}, indices must strictly increase",
                    entry.protein_id, pair[1].layer_index, pair[0].layer_index
                )));
            }
        }
        Ok(())
    }

    /// Sorted union of the layer indices of all entries.
    pub fn layer_indices(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self
            .entries
            .iter()
            .flat_map(|e| e.layers.iter().map(|l| l.layer_index))
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Class labels in order of first appearance.
    pub fn class_labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = Vec::new();
        for entry in &self.entries {
            if !labels.contains(&entry.class_label.as_str()) {
                labels.push(&entry.class_label);
            }
        }
        labels
    }

    /// Rewrites relative paths as paths under `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for entry in &mut self.entries {
            entry.pdb_path = base.join(&entry.pdb_path);
            for layer in &mut entry.layers {
                layer.embedding_path = base.join(&layer.embedding_path);
            }
        }
    }

    fn check_files(&self) -> Result<(), ManifestError> {
        for entry in &self.entries {
            let paths = std::iter::once(&entry.pdb_path)
                .chain(entry.layers.iter().map(|l| &l.embedding_path));
            for path in paths {
                if !path.is_file() {
                    return Err(ManifestError::MissingFile {
                        protein_id: entry.protein_id.clone(),
                        path: path.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a manifest without touching the filesystem.
pub fn parse_manifest(json: &str) -> Result<DatasetManifest, ManifestError> {
    let manifest: DatasetManifest =
        serde_json::from_str(json).map_err(|e| ManifestError::SchemaError(e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}

/// Reads a manifest, resolving relative paths against its directory and
/// checking that every referenced file exists.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, ManifestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut manifest = parse_manifest(&text)?;
    manifest.resolve_paths(path.parent().unwrap_or(Path::new("")));
    manifest.check_files()?;
    Ok(manifest)
}

/// Writes `manifest` as pretty-printed JSON.
pub fn write_manifest(
    path: impl AsRef<Path>,
    manifest: &DatasetManifest,
) -> Result<(), ManifestError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ManifestError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, layers: &[u32]) -> ManifestEntry {
        ManifestEntry {
            protein_id: id.into(),
            class_label: "a".into(),
            pdb_path: "x.pdb".into(),
            chain: None,
            layers: layers
                .iter()
                .map(|&i| LayerFile {
                    layer_index: i,
                    embedding_path: format!("{id}/layer_{i}.npy").into(),
                })
                .collect(),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            parse_manifest(r#"{"entries": []}"#),
            Err(ManifestError::SchemaError(_))
        ));
        assert!(matches!(
            parse_manifest(r#"{"entries": 3}"#),
            Err(ManifestError::SchemaError(_))
        ));
        let dup = DatasetManifest {
            entries: vec![entry("p", &[0]), entry("p", &[0])],
        };
        assert!(
            matches!(dup.validate(), Err(ManifestError::SchemaError(m)) if m.contains("\"p\""))
        );
        let order = DatasetManifest {
            entries: vec![entry("p", &[0, 2, 2])],
        };
        assert!(
            matches!(order.validate(), Err(ManifestError::SchemaError(m)) if m.contains("\"p\""))
        );
    }

    #[test]
    fn chain_is_a_single_character() {
        let json = r#"{"entries": [{"protein_id": "p", "class_label": "c", "pdb_path": "p.pdb",
            "chain": "AB", "layers": []}]}"#;
        assert!(matches!(
            parse_manifest(json),
            Err(ManifestError::SchemaError(_))
        ));
        let json = json.replace("\"AB\"", "\"B\"");
        assert_eq!(parse_manifest(&json).unwrap().entries[0].chain, Some('B'));
    }

    #[test]
    fn layers_and_classes() {
        let mut b = entry("q", &[1, 3]);
        b.class_label = "b".into();
        let m = DatasetManifest {
            entries: vec![entry("p", &[0, 3]), b, entry("r", &[])],
        };
        assert_eq!(m.layer_indices(), vec![0, 1, 3]);
        assert_eq!(m.class_labels(), vec!["a", "b"]);
    }
}
