#![allow(dead_code)]

use std::path::{Path, PathBuf};

use protgeom::manifest::{write_manifest, DatasetManifest, LayerFile, ManifestEntry};
use protgeom::npy::{write_npy, Precision};
use protgeom::pdb::{write_ca_records, Chain, Residue};
use protgeom_core::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// A backbone-like chain: 3.8 Å steps whose direction turns smoothly.
pub fn backbone(len: usize, rng: &mut impl Rng) -> PointCloud {
    let mut dir = [1.0, 0.0, 0.0];
    let mut p = [0.0; 3];
    let mut rows = Vec::with_capacity(len);
    for _ in 0..len {
        rows.push(p);
        for d in &mut dir {
            *d += 0.6 * gaussian(rng);
        }
        let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        for (x, d) in p.iter_mut().zip(&mut dir) {
            *d /= n;
            *x += 3.8 * *d;
        }
    }
    PointCloud::from_rows(&rows).unwrap()
}

pub fn add_noise(cloud: &PointCloud, sigma: f64, rng: &mut impl Rng) -> PointCloud {
    let data = cloud
        .as_slice()
        .iter()
        .map(|x| x + sigma * gaussian(rng))
        .collect();
    PointCloud::from_row_major(cloud.len(), cloud.dim(), data).unwrap()
}

pub fn gaussian_cloud(len: usize, dim: usize, rng: &mut impl Rng) -> PointCloud {
    PointCloud::from_row_major(len, dim, (0..len * dim).map(|_| gaussian(rng)).collect()).unwrap()
}

/// PDB text with one chain 'A' of ALA residues at the rows of `cloud`.
pub fn pdb_text(cloud: &PointCloud) -> String {
    let residues = cloud
        .points()
        .enumerate()
        .map(|(i, p)| Residue {
            seq_number: i as i32 + 1,
            insertion_code: None,
            name: "ALA".into(),
            ca_position: [p[0], p[1], p[2]],
        })
        .collect();
    write_ca_records(&[Chain {
        chain_id: 'A',
        residues,
    }])
}

/// Rounds coordinates to the 3 decimals a PDB file keeps.
pub fn pdb_rounded(cloud: &PointCloud) -> PointCloud {
    let data = cloud
        .as_slice()
        .iter()
        .map(|x| (x * 1000.0).round() / 1000.0)
        .collect();
    PointCloud::from_row_major(cloud.len(), cloud.dim(), data).unwrap()
}

pub struct Protein {
    pub id: String,
    pub class: String,
    pub structure: PointCloud,
    /// Embedding per layer, layer index = position.
    pub layers: Vec<PointCloud>,
}

/// Writes PDB and NPY files plus `manifest.json` under `dir`; returns the
/// manifest path.
pub fn write_dataset(dir: &Path, proteins: &[Protein]) -> PathBuf {
    let mut entries = Vec::new();
    for p in proteins {
        let pdb = format!("{}.pdb", p.id);
        std::fs::write(dir.join(&pdb), pdb_text(&p.structure)).unwrap();
        std::fs::create_dir_all(dir.join(&p.id)).unwrap();
        let mut layers = Vec::new();
        for (i, cloud) in p.layers.iter().enumerate() {
            let rel = format!("{}/layer_{i}.npy", p.id);
            write_npy(dir.join(&rel), cloud, Precision::F64).unwrap();
            layers.push(LayerFile {
                layer_index: i as u32,
                embedding_path: rel.into(),
            });
        }
        entries.push(ManifestEntry {
            protein_id: p.id.clone(),
            class_label: p.class.clone(),
            pdb_path: pdb.into(),
            chain: None,
            layers,
        });
    }
    let path = dir.join("manifest.json");
    write_manifest(&path, &DatasetManifest { entries }).unwrap();
    path
}
