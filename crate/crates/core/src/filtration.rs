//! k-nearest-neighbor graph filtrations and the normalized filtration moment.
//!
//! The graph at level `k` links every point to its `k` nearest other points
//! (directed: row `i` marks the neighbors of `i`). Levels are nested because
//! each neighbor list is sorted, so the level-`k` graph is the prefix of
//! length `k`. Two filtrations of the same `L` points are compared level by
//! level through the entrywise 1-norm of their adjacency difference.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::{squared_distance, PointCloud};
use crate::error::{Error, Result};
use crate::par;

const ABSENT: u32 = u32::MAX;

/// Largest `k` in the default level range.
pub const DEFAULT_MAX_K: usize = 64;
/// Random clouds drawn per protein for the baseline.
pub const DEFAULT_BASELINE_SAMPLES: usize = 8;

/// Whether adjacency matrices are compared as directed kNN graphs or after
/// OR-symmetrization (`A ∨ Aᵀ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjacency {
    #[default]
    Directed,
    Symmetrized,
}

/// Nearest-neighbor lists of every point, up to `k_max` neighbors each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnnFiltration {
    len: usize,
    k_max: usize,
    neighbors: Vec<u32>,
}

impl KnnFiltration {
    /// Builds a filtration from explicit neighbor lists, one per point, all
    /// of the same nonzero length, excluding the point itself and free of
    /// duplicates. Returns `None` otherwise.
    pub fn from_lists(lists: &[Vec<u32>]) -> Option<Self> {
        let len = lists.len();
        let k_max = lists.first()?.len();
        if k_max == 0 || k_max >= len {
            return None;
        }
        let mut neighbors = Vec::with_capacity(len * k_max);
        let mut seen = vec![usize::MAX; len];
        for (i, list) in lists.iter().enumerate() {
            if list.len() != k_max {
                return None;
            }
            for &j in list {
                let j = j as usize;
                if j >= len || j == i || seen[j] == i {
                    return None;
                }
                seen[j] = i;
            }
            neighbors.extend_from_slice(list);
        }
        Some(Self {
            len,
            k_max,
            neighbors,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Neighbors of `point` in ascending distance (ties by lower index).
    pub fn neighbors(&self, point: usize) -> &[u32] {
        &self.neighbors[point * self.k_max..(point + 1) * self.k_max]
    }

    /// The level-`k` neighbor set of `point`.
    pub fn neighbors_at(&self, point: usize, k: usize) -> &[u32] {
        &self.neighbors(point)[..k]
    }

    /// Dense `L x L` adjacency at level `k` (row `i` marks the neighbors of `i`).
    pub fn adjacency(&self, k: usize, mode: Adjacency) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; self.len]; self.len];
        for i in 0..self.len {
            for &j in self.neighbors_at(i, k.min(self.k_max)) {
                a[i][j as usize] = true;
                if mode == Adjacency::Symmetrized {
                    a[j as usize][i] = true;
                }
            }
        }
        a
    }
}

/// Builds the kNN filtration of `cloud` under the Euclidean metric.
pub fn knn_filtration(cloud: &PointCloud, k_max: usize) -> Result<KnnFiltration> {
    let len = cloud.len();
    if k_max == 0 {
        return Err(Error::ZeroK);
    }
    if k_max > len - 1 {
        return Err(Error::KTooLarge {
            k: k_max,
            max: len - 1,
        });
    }
    let points: Vec<usize> = (0..len).collect();
    let lists = par::map(&points, |&i| {
        let here = cloud.point(i);
        let mut candidates: Vec<(f64, u32)> = (0..len)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(here, cloud.point(j)), j as u32))
            .collect();
        let order = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k_max < candidates.len() {
            candidates.select_nth_unstable_by(k_max - 1, order);
            candidates.truncate(k_max);
        }
        candidates.sort_unstable_by(order);
        candidates
    });
    let mut neighbors = Vec::with_capacity(len * k_max);
    for list in lists {
        neighbors.extend(list.into_iter().map(|(_, j)| j));
    }
    Ok(KnnFiltration {
        len,
        k_max,
        neighbors,
    })
}

/// Adjacency distance at every level: entry `k` of the result is the
/// distance at level `k`, for `k` in `0..=min(k_max)`.
pub fn distance_profile(a: &KnnFiltration, b: &KnnFiltration, mode: Adjacency) -> Result<Vec<u64>> {
    if a.len != b.len {
        return Err(Error::SizeMismatch {
            left: a.len,
            right: b.len,
        });
    }
    let top = a.k_max.min(b.k_max);
    // An edge present from level e1 + 1 in one graph and e2 + 1 in the other
    // contributes to every level k with min(e1, e2) < k <= max(e1, e2).
    let mut delta = vec![0i64; top + 2];
    let mut record = |e1: u32, e2: u32| {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let lo = lo as usize;
        if lo >= top {
            return;
        }
        let hi = if hi == ABSENT {
            top
        } else {
            (hi as usize).min(top)
        };
        delta[lo + 1] += 1;
        delta[hi + 1] -= 1;
    };
    match mode {
        Adjacency::Directed => {
            let mut rank_a = vec![ABSENT; a.len];
            let mut rank_b = vec![ABSENT; a.len];
            for i in 0..a.len {
                let (na, nb) = (&a.neighbors(i)[..top], &b.neighbors(i)[..top]);
                for (r, &j) in na.iter().enumerate() {
                    rank_a[j as usize] = r as u32;
                }
                for (r, &j) in nb.iter().enumerate() {
                    rank_b[j as usize] = r as u32;
                }
                for &j in na {
                    record(rank_a[j as usize], rank_b[j as usize]);
                }
                for &j in nb {
                    if rank_a[j as usize] == ABSENT {
                        record(ABSENT, rank_b[j as usize]);
                    }
                }
                for &j in na.iter().chain(nb) {
                    rank_a[j as usize] = ABSENT;
                    rank_b[j as usize] = ABSENT;
                }
            }
        }
        Adjacency::Symmetrized => {
            let entry_a = symmetric_entry_levels(a, top);
            let entry_b = symmetric_entry_levels(b, top);
            for i in 0..a.len {
                for j in 0..a.len {
                    let (e1, e2) = (entry_a[i * a.len + j], entry_b[i * a.len + j]);
                    if e1 != e2 {
                        record(e1, e2);
                    }
                }
            }
        }
    }
    let mut profile = Vec::with_capacity(top + 1);
    let mut running = 0i64;
    for d in &delta[..=top] {
        running += d;
        profile.push(running as u64);
    }
    Ok(profile)
}

/// `min(rank_i(j), rank_j(i))` for every ordered pair, `ABSENT` if neither.
fn symmetric_entry_levels(f: &KnnFiltration, top: usize) -> Vec<u32> {
    let mut entry = vec![ABSENT; f.len * f.len];
    for i in 0..f.len {
        for (r, &j) in f.neighbors(i)[..top].iter().enumerate() {
            let j = j as usize;
            let r = r as u32;
            entry[i * f.len + j] = entry[i * f.len + j].min(r);
            entry[j * f.len + i] = entry[j * f.len + i].min(r);
        }
    }
    entry
}

/// `Σ_i |S_a(i, k) Δ S_b(i, k)|`, the entrywise 1-norm of the difference of
/// the level-`k` adjacency matrices.
pub fn adjacency_distance(a: &KnnFiltration, b: &KnnFiltration, k: usize) -> Result<u64> {
    adjacency_distance_with(a, b, k, Adjacency::Directed)
}

pub fn adjacency_distance_with(
    a: &KnnFiltration,
    b: &KnnFiltration,
    k: usize,
    mode: Adjacency,
) -> Result<u64> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    let top = a.k_max.min(b.k_max);
    if k > top {
        return Err(Error::KTooLarge { k, max: top });
    }
    Ok(distance_profile(a, b, mode)?[k])
}

/// Expected directed adjacency distance between two independent uniformly
/// random neighbor structures on `len` points: `2 L k (1 - k / (L - 1))`.
///
/// Each point contributes the expected symmetric difference of two uniform
/// `k`-subsets of its `L - 1` candidates, `2k - 2k² / (L - 1)`.
pub fn expected_random_distance(len: usize, k: usize) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let (l, k) = (len as f64, k as f64);
    2.0 * l * k * (1.0 - k / (l - 1.0))
}

/// An i.i.d. standard Gaussian cloud of `len` points in `R^dim`.
pub fn gaussian_cloud<R: Rng + ?Sized>(len: usize, dim: usize, rng: &mut R) -> PointCloud {
    let data: Vec<f64> = (0..len * dim).map(|_| rng.sample(StandardNormal)).collect();
    PointCloud::from_row_major(len, dim, data).expect("finite Gaussian samples")
}

/// Random source for protein `index` under `seed`: one ChaCha stream per
/// protein, so results do not depend on scheduling.
pub fn protein_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean adjacency-distance profile between `reference` and the filtrations
/// of `samples` Gaussian clouds in `R^dim`.
pub fn baseline_profile<R: Rng + ?Sized>(
    reference: &KnnFiltration,
    dim: usize,
    samples: usize,
    mode: Adjacency,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let mut total = vec![0u64; reference.k_max + 1];
    for _ in 0..samples {
        let cloud = gaussian_cloud(reference.len, dim, rng);
        let random = knn_filtration(&cloud, reference.k_max)?;
        for (acc, d) in total
            .iter_mut()
            .zip(distance_profile(reference, &random, mode)?)
        {
            *acc += d;
        }
    }
    Ok(total
        .into_iter()
        .map(|t| t as f64 / samples as f64)
        .collect())
}

/// Mean adjacency distance at level `k` between `cloud` and `samples`
/// Gaussian clouds of the same size in `R^dim`, seeded by `seed`.
pub fn baseline_distance(
    cloud: &PointCloud,
    dim: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::NoSamples);
    }
    let reference = knn_filtration(cloud, k)?;
    let mut rng = protein_rng(seed, 0);
    Ok(baseline_profile(&reference, dim, samples, Adjacency::Directed, &mut rng)?[k])
}

/// Settings for [`filtration_moment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentOptions {
    /// Levels to evaluate; empty means `1..=min(64, L_min - 1)`.
    pub ks: Vec<usize>,
    pub baseline_samples: usize,
    pub seed: u64,
    pub adjacency: Adjacency,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            ks: Vec::new(),
            baseline_samples: DEFAULT_BASELINE_SAMPLES,
            seed: 0,
            adjacency: Adjacency::Directed,
        }
    }
}

/// Default level range for proteins whose shortest chain has `min_len` points.
pub fn default_ks(min_len: usize) -> Vec<usize> {
    (1..=DEFAULT_MAX_K.min(min_len.saturating_sub(1))).collect()
}

/// Per-protein adjacency distances behind a [`MomentCurve`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinDistances {
    /// Structure vs. embedding, one value per requested level.
    pub raw: Vec<u64>,
    /// Structure vs. random clouds (mean over samples), one value per level.
    pub baseline: Vec<f64>,
}

/// Filtration moments over a protein family, per level.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCurve {
    pub ks: Vec<usize>,
    pub raw_mean: Vec<f64>,
    pub baseline_mean: Vec<f64>,
    /// `raw_mean / baseline_mean`; `None` where the baseline is zero.
    pub normalized: Vec<Option<f64>>,
    /// Delta-method standard error of the ratio; `None` for fewer than two
    /// proteins or a zero baseline.
    pub normalized_se: Vec<Option<f64>>,
}

impl MomentCurve {
    /// Smallest normalized moment and its level; ties go to the smaller `k`.
    pub fn minimum(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (&k, v) in self.ks.iter().zip(&self.normalized) {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((k, v));
                }
            }
        }
        best
    }

    /// Standard error at level `k`, if defined.
    pub fn se_at(&self, k: usize) -> Option<f64> {
        let pos = self.ks.iter().position(|&x| x == k)?;
        self.normalized_se[pos]
    }

    /// Combines per-protein distances into per-level means and ratios.
    pub fn from_distances(ks: Vec<usize>, proteins: &[ProteinDistances]) -> Result<Self> {
        if proteins.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = proteins.len() as f64;
        let mut raw_mean = Vec::with_capacity(ks.len());
        let mut baseline_mean = Vec::with_capacity(ks.len());
        let mut normalized = Vec::with_capacity(ks.len());
        let mut normalized_se = Vec::with_capacity(ks.len());
        for idx in 0..ks.len() {
            let raw = proteins.iter().map(|p| p.raw[idx] as f64).sum::<f64>() / n;
            let base = proteins.iter().map(|p| p.baseline[idx]).sum::<f64>() / n;
            raw_mean.push(raw);
            baseline_mean.push(base);
            if base > 0.0 {
                let ratio = raw / base;
                normalized.push(Some(ratio));
                normalized_se.push((proteins.len() > 1).then(|| {
                    let var = proteins
                        .iter()
                        .map(|p| {
                            let d = p.raw[idx] as f64 - ratio * p.baseline[idx];
                            d * d
                        })
                        .sum::<f64>()
                        / (n - 1.0);
                    libm::sqrt(var / n) / base
                }));
            } else {
                normalized.push(None);
                normalized_se.push(None);
            }
        }
        Ok(Self {
            ks,
            raw_mean,
            baseline_mean,
            normalized,
            normalized_se,
        })
    }
}

/// Adjacency distances of one structure/embedding pair and its random baseline.
pub fn protein_distances(
    structure: &PointCloud,
    embedding: &PointCloud,
    ks: &[usize],
    options: &MomentOptions,
    index: usize,
) -> Result<ProteinDistances> {
    if structure.len() != embedding.len() {
        return Err(Error::LengthMismatch {
            index,
            structure: structure.len(),
            embedding: embedding.len(),
        });
    }
    let k_max = ks.iter().copied().max().ok_or(Error::EmptyInput)?;
    let reference = knn_filtration(structure, k_max)?;
    let represented = knn_filtration(embedding, k_max)?;
    let profile = distance_profile(&reference, &represented, options.adjacency)?;
    let mut rng = protein_rng(options.seed, index as u64);
    let baseline = baseline_profile(
        &reference,
        embedding.dim(),
        options.baseline_samples,
        options.adjacency,
        &mut rng,
    )?;
    Ok(ProteinDistances {
        raw: ks.iter().map(|&k| profile[k]).collect(),
        baseline: ks.iter().map(|&k| baseline[k]).collect(),
    })
}

/// Normalized filtration moment of a protein family: per level, the mean
/// structure-vs-embedding adjacency distance over the mean
/// structure-vs-random distance.
pub fn filtration_moment(
    structures: &[PointCloud],
    embeddings: &[PointCloud],
    options: &MomentOptions,
) -> Result<MomentCurve> {
    if structures.is_empty() {
        return Err(Error::EmptyInput);
    }
    if structures.len() != embeddings.len() {
        return Err(Error::SizeMismatch {
            left: structures.len(),
            right: embeddings.len(),
        });
    }
    if options.baseline_samples == 0 {
        return Err(Error::NoSamples);
    }
    let min_len = structures.iter().map(PointCloud::len).min().unwrap_or(0);
    let ks = if options.ks.is_empty() {
        default_ks(min_len)
    } else {
        options.ks.clone()
    };
    for &k in &ks {
        if k == 0 {
            return Err(Error::ZeroK);
        }
        if k > min_len - 1 {
            return Err(Error::KTooLarge {
                k,
                max: min_len - 1,
            });
        }
    }
    let indices: Vec<usize> = (0..structures.len()).collect();
    let proteins = par::try_map(&indices, |&i| {
        protein_distances(&structures[i], &embeddings[i], &ks, options, i)
    })?;
    MomentCurve::from_distances(ks, &proteins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> PointCloud {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn collinear_neighbors_by_hand() {
        let f = knn_filtration(&line(4), 2).unwrap();
        assert_eq!(f.neighbors(0), &[1, 2]);
        assert_eq!(f.neighbors(1), &[0, 2]);
        assert_eq!(f.neighbors(2), &[1, 3]);
        assert_eq!(f.neighbors(3), &[2, 1]);
    }

    #[test]
    fn k_bounds_are_enforced() {
        assert_eq!(
            knn_filtration(&line(4), 4).unwrap_err(),
            Error::KTooLarge { k: 4, max: 3 }
        );
        assert_eq!(knn_filtration(&line(4), 0).unwrap_err(), Error::ZeroK);
        let f = knn_filtration(&line(4), 2).unwrap();
        assert_eq!(
            adjacency_distance(&f, &f, 3).unwrap_err(),
            Error::KTooLarge { k: 3, max: 2 }
        );
        let g = knn_filtration(&line(5), 2).unwrap();
        assert_eq!(
            adjacency_distance(&f, &g, 1).unwrap_err(),
            Error::SizeMismatch { left: 4, right: 5 }
        );
    }

    #[test]
    fn complete_graphs_coincide() {
        let a = knn_filtration(&line(6), 5).unwrap();
        let rows = [
            [0.0, 1.0],
            [3.0, -1.0],
            [0.5, 0.5],
            [2.0, 2.0],
            [-1.0, 0.0],
            [1.0, 1.0],
        ];
        let b = knn_filtration(&PointCloud::from_rows(&rows).unwrap(), 5).unwrap();
        assert_eq!(adjacency_distance(&a, &b, 5).unwrap(), 0);
        assert_eq!(
            adjacency_distance_with(&a, &b, 5, Adjacency::Symmetrized).unwrap(),
            0
        );
        assert!(adjacency_distance(&a, &b, 1).unwrap() > 0);
    }

    #[test]
    fn expected_distance_small_cases() {
        assert_eq!(expected_random_distance(3, 1), 3.0);
        assert_eq!(expected_random_distance(10, 9), 0.0);
        assert_eq!(expected_random_distance(1, 1), 0.0);
    }

    #[test]
    fn baseline_requires_samples_and_is_deterministic() {
        let rows: Vec<[f64; 3]> = (0..12)
            .map(|i| [i as f64, (i * i % 7) as f64, 0.5])
            .collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        assert_eq!(
            baseline_distance(&cloud, 3, 2, 0, 1).unwrap_err(),
            Error::NoSamples
        );
        let a = baseline_distance(&cloud, 3, 2, 5, 42).unwrap();
        let b = baseline_distance(&cloud, 3, 2, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(baseline_distance(&cloud, 3, 11, 3, 42).unwrap(), 0.0);
    }

    #[test]
    fn moment_of_identical_families_is_zero() {
        let clouds: Vec<PointCloud> = (0..3)
            .map(|s| {
                let rows: Vec<[f64; 2]> = (0..10)
                    .map(|i| [i as f64, ((i * (s + 3)) % 5) as f64 * 0.3])
                    .collect();
                PointCloud::from_rows(&rows).unwrap()
            })
            .collect();
        let curve = filtration_moment(&clouds, &clouds, &MomentOptions::default()).unwrap();
        assert_eq!(curve.ks, (1..=9).collect::<Vec<_>>());
        for (k, v) in curve.ks.iter().zip(&curve.normalized) {
            if *k < 9 {
                assert_eq!(*v, Some(0.0));
            }
        }
        assert_eq!(curve.normalized[8], None);
        assert_eq!(curve.minimum(), Some((1, 0.0)));
    }

    #[test]
    fn moment_reports_length_mismatch_with_index() {
        let a = vec![line(5), line(6)];
        let b = vec![line(5), line(7)];
        let err = filtration_moment(&a, &b, &MomentOptions::default()).unwrap_err();
        assert_eq!(
            err,
            Error::LengthMismatch {
                index: 1,
                structure: 6,
                embedding: 7
            }
        );
    }
}
