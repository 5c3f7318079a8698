//! Cluster consolidation: Top-M kMeans++ seeding in Hamming space followed by
//! a few Lloyd-style refinement passes whose centroid update is a majority
//! vote instead of an arithmetic mean.
//!
//! Seeding keeps a running min-distance buffer that is only refreshed against
//! the most recently selected centroid, so it costs `O(K * K')` distance
//! evaluations. Each refinement pass costs another `O(K * K')`.

use rayon::prelude::*;

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hv::{PackedHv, VoteAccumulator};
use crate::lfsr::Lfsr32;

/// Below this many hypervectors the distance loops stay sequential.
const PAR_THRESHOLD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeParams {
    pub k_prime: usize,
    pub top_m: usize,
    pub refine_iters: usize,
}

impl MergeParams {
    pub fn new(k_prime: usize, top_m: usize, refine_iters: usize) -> Result<Self> {
        if k_prime == 0 {
            return Err(Error::Config("merge target must be at least 1".into()));
        }
        if top_m == 0 {
            return Err(Error::Config("top_m must be at least 1".into()));
        }
        Ok(Self {
            k_prime,
            top_m,
            refine_iters,
        })
    }
}

/// `dists[i]` is the minimum Hamming distance from `hvs[i]` to any centroid
/// selected so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinDistBuffer {
    dists: Vec<usize>,
}

impl MinDistBuffer {
    pub fn new(hvs: &[PackedHv], first: &PackedHv) -> Self {
        Self {
            dists: distances_to(hvs, first),
        }
    }

    pub fn update(&mut self, hvs: &[PackedHv], centroid: &PackedHv) {
        let fresh = distances_to(hvs, centroid);
        for (d, f) in self.dists.iter_mut().zip(fresh) {
            *d = (*d).min(f);
        }
    }

    pub fn dists(&self) -> &[usize] {
        &self.dists
    }
}

fn distances_to(hvs: &[PackedHv], target: &PackedHv) -> Vec<usize> {
    if hvs.len() >= PAR_THRESHOLD {
        hvs.par_iter().map(|h| h.hamming_unchecked(target)).collect()
    } else {
        hvs.iter().map(|h| h.hamming_unchecked(target)).collect()
    }
}

/// Indices of the `m` largest distances, largest first, ties to the lower
/// index. Single pass with a sorted insertion buffer of length `m`.
pub fn select_top_m(dists: &[usize], m: usize) -> Vec<usize> {
    let m = m.min(dists.len());
    if m == 0 {
        return Vec::new();
    }
    let mut buf: Vec<(usize, usize)> = Vec::with_capacity(m + 1);
    for (i, &d) in dists.iter().enumerate() {
        if buf.len() == m && d <= buf[m - 1].0 {
            continue;
        }
        // earlier indices with equal distance stay ahead
        let pos = buf.partition_point(|&(bd, _)| bd >= d);
        buf.insert(pos, (d, i));
        buf.truncate(m);
    }
    buf.into_iter().map(|(_, i)| i).collect()
}

/// Picks `k_prime` seed indices into `hvs`. The first is uniform over all
/// inputs; each later one is uniform over the Top-M entries of the running
/// min-distance buffer, skipping entries at distance zero while any positive
/// distance remains. `observe` sees the selected indices and the buffer
/// after every refresh.
pub fn seed_indices_with<F>(
    hvs: &[PackedHv],
    k_prime: usize,
    top_m: usize,
    rng: &mut Lfsr32,
    mut observe: F,
) -> Result<Vec<usize>>
where
    F: FnMut(&[usize], &MinDistBuffer),
{
    if hvs.is_empty() {
        return Err(Error::EmptyInput("no hypervectors to seed from"));
    }
    if k_prime == 0 || k_prime > hvs.len() {
        return Err(Error::Config(format!(
            "cannot select {k_prime} seeds from {} hypervectors",
            hvs.len()
        )));
    }
    check_same_dim(hvs)?;
    let mut selected = Vec::with_capacity(k_prime);
    let first = rng.uniform(hvs.len() as u32)? as usize;
    selected.push(first);
    let mut buffer = MinDistBuffer::new(hvs, &hvs[first]);
    observe(&selected, &buffer);
    while selected.len() < k_prime {
        let mut candidates = select_top_m(buffer.dists(), top_m);
        // zero-distance entries coincide with a selected centroid
        if buffer.dists()[candidates[0]] > 0 {
            candidates.retain(|&i| buffer.dists()[i] > 0);
        }
        let pick = candidates[rng.uniform(candidates.len() as u32)? as usize];
        selected.push(pick);
        buffer.update(hvs, &hvs[pick]);
        observe(&selected, &buffer);
    }
    Ok(selected)
}

pub fn seed_centroids(
    hvs: &[PackedHv],
    k_prime: usize,
    top_m: usize,
    rng: &mut Lfsr32,
) -> Result<Vec<PackedHv>> {
    let idx = seed_indices_with(hvs, k_prime, top_m, rng, |_, _| {})?;
    Ok(idx.into_iter().map(|i| hvs[i].clone()).collect())
}

fn check_same_dim(hvs: &[PackedHv]) -> Result<()> {
    let d = hvs[0].dim();
    if let Some(h) = hvs.iter().find(|h| h.dim() != d) {
        return Err(Error::DimensionMismatch {
            left: d,
            right: h.dim(),
        });
    }
    Ok(())
}

/// Nearest centroid per hypervector as `(centroid index, distance)`; ties go
/// to the lower centroid index.
pub fn assign_nearest(hvs: &[PackedHv], centroids: &[PackedHv]) -> Vec<(usize, usize)> {
    let nearest = |h: &PackedHv| {
        let mut best = (0, usize::MAX);
        for (j, c) in centroids.iter().enumerate() {
            let d = h.hamming_unchecked(c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    };
    if hvs.len() >= PAR_THRESHOLD {
        hvs.par_iter().map(nearest).collect()
    } else {
        hvs.iter().map(nearest).collect()
    }
}

/// `iters` rounds of assign-then-rebundle. A centroid that loses all its
/// members is moved onto the hypervector farthest from its own centroid,
/// taken from a cluster that can spare it.
pub fn hv_refine(hvs: &[PackedHv], centroids: &[PackedHv], iters: usize) -> Result<Vec<PackedHv>> {
    let mut centroids = centroids.to_vec();
    if iters == 0 || centroids.is_empty() {
        return Ok(centroids);
    }
    if centroids.len() > hvs.len() {
        return Err(Error::Config(format!(
            "{} centroids for {} hypervectors",
            centroids.len(),
            hvs.len()
        )));
    }
    check_same_dim(hvs)?;
    if let Some(c) = centroids.iter().find(|c| c.dim() != hvs[0].dim()) {
        return Err(Error::DimensionMismatch {
            left: hvs[0].dim(),
            right: c.dim(),
        });
    }
    let k = centroids.len();
    for _ in 0..iters {
        let mut assign = assign_nearest(hvs, &centroids);
        let mut sizes = vec![0usize; k];
        for &(j, _) in &assign {
            sizes[j] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let donor = assign
                .iter()
                .enumerate()
                .filter(|(_, &(j, _))| sizes[j] > 1)
                .max_by(|(ia, (_, da)), (ib, (_, db))| da.cmp(db).then(ib.cmp(ia)))
                .map(|(i, _)| i);
            if let Some(i) = donor {
                sizes[assign[i].0] -= 1;
                sizes[empty] = 1;
                assign[i] = (empty, 0);
                centroids[empty] = hvs[i].clone();
            }
        }
        let dim = hvs[0].dim();
        let mut accs: Vec<Option<VoteAccumulator>> = vec![None; k];
        for (h, &(j, _)) in hvs.iter().zip(&assign) {
            match &mut accs[j] {
                Some(acc) => acc.accumulate(h)?,
                slot @ None => {
                    let mut acc = VoteAccumulator::new(dim)?;
                    acc.accumulate(h)?;
                    *slot = Some(acc);
                }
            }
        }
        for (c, acc) in centroids.iter_mut().zip(accs) {
            if let Some(acc) = acc {
                *c = acc.threshold()?;
            }
        }
    }
    Ok(centroids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome {
    pub clusters: Vec<Cluster>,
    /// `(old id, new id)` for every input cluster, in input order. Empty when
    /// no merge was needed.
    pub mapping: Vec<(u64, u64)>,
}

/// Consolidates `clusters` into at most `params.k_prime` clusters. Member
/// vote accumulators are summed; statistics become count-weighted means and
/// merged clusters take fresh ids starting at `*next_id`.
pub fn merge_clusters(
    clusters: Vec<Cluster>,
    params: &MergeParams,
    rng: &mut Lfsr32,
    next_id: &mut u64,
) -> Result<MergeOutcome> {
    if clusters.len() <= params.k_prime {
        return Ok(MergeOutcome {
            clusters,
            mapping: Vec::new(),
        });
    }
    let protos: Vec<PackedHv> = clusters.iter().map(|c| c.prototype().clone()).collect();
    let top_m = params.top_m.min(protos.len());
    let seeds = seed_centroids(&protos, params.k_prime, top_m, rng)?;
    let centroids = hv_refine(&protos, &seeds, params.refine_iters)?;
    let assign = assign_nearest(&protos, &centroids);

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); centroids.len()];
    for (i, &(j, _)) in assign.iter().enumerate() {
        groups[j].push(i);
    }

    let mut merged = Vec::new();
    let mut mapping = vec![(0u64, 0u64); clusters.len()];
    for members in groups.into_iter().filter(|g| !g.is_empty()) {
        let mut votes = clusters[members[0]].votes().clone();
        for &i in &members[1..] {
            votes.merge(clusters[i].votes())?;
        }
        let total = votes.total() as f64;
        let weighted = |f: fn(&Cluster) -> f64| {
            members
                .iter()
                .map(|&i| clusters[i].count() as f64 * f(&clusters[i]))
                .sum::<f64>()
                / total
        };
        let mu = weighted(Cluster::mu);
        let sigma = weighted(Cluster::sigma);
        let id = *next_id;
        *next_id += 1;
        for &i in &members {
            mapping[i] = (clusters[i].id(), id);
        }
        merged.push(Cluster::from_votes(id, votes, mu, sigma)?);
    }
    Ok(MergeOutcome {
        clusters: merged,
        mapping,
    })
}
