//! Unsupervised clustering quality: optimal-matching accuracy, purity and
//! normalized mutual information over a cluster-by-class contingency table.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyMatrix {
    n_clusters: usize,
    n_classes: usize,
    /// Row-major, `n_clusters x n_classes`.
    counts: Vec<u64>,
    total: u64,
}

fn densify<T: Copy + Eq + Hash>(ids: &[T]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = ids
        .iter()
        .map(|id| {
            let next = map.len();
            *map.entry(*id).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

impl ContingencyMatrix {
    /// Counts `(cluster, label)` co-occurrences. Both id spaces are densified
    /// in order of first appearance.
    pub fn build<A, L>(assignments: &[A], labels: &[L]) -> Result<Self>
    where
        A: Copy + Eq + Hash,
        L: Copy + Eq + Hash,
    {
        if assignments.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "assignments vs labels",
                left: assignments.len(),
                right: labels.len(),
            });
        }
        if assignments.is_empty() {
            return Err(Error::EmptyInput("no samples to evaluate"));
        }
        let (rows, n_clusters) = densify(assignments);
        let (cols, n_classes) = densify(labels);
        let mut counts = vec![0u64; n_clusters * n_classes];
        for (&r, &c) in rows.iter().zip(&cols) {
            counts[r * n_classes + c] += 1;
        }
        Ok(Self {
            n_clusters,
            n_classes,
            counts,
            total: assignments.len() as u64,
        })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n_clusters = rows.len();
        let n_classes = rows.first().map_or(0, |r| r.len());
        if n_clusters == 0 || n_classes == 0 {
            return Err(Error::EmptyInput("contingency matrix has no cells"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n_classes) {
            return Err(Error::LengthMismatch {
                what: "contingency row",
                left: r.len(),
                right: n_classes,
            });
        }
        let counts: Vec<u64> = rows.iter().flatten().copied().collect();
        let total = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("contingency matrix is all zero"));
        }
        Ok(Self {
            n_clusters,
            n_classes,
            counts,
            total,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.n_classes + c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.counts.chunks(self.n_classes)
    }

    fn row_sums(&self) -> Vec<u64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let mut s = vec![0; self.n_classes];
        for row in self.rows() {
            for (acc, v) in s.iter_mut().zip(row) {
                *acc += v;
            }
        }
        s
    }

    /// Largest total count over one-to-one cluster/class matchings, divided
    /// by the sample count.
    pub fn accuracy(&self) -> f64 {
        let n = self.n_clusters.max(self.n_classes);
        let mut cost = vec![vec![0i64; n]; n];
        for (row, counts) in cost.iter_mut().zip(self.rows()) {
            for (cell, &x) in row.iter_mut().zip(counts) {
                *cell = -(x as i64);
            }
        }
        let assignment = min_cost_assignment(&cost);
        let matched: u64 = assignment
            .iter()
            .enumerate()
            .filter(|&(r, &c)| r < self.n_clusters && c < self.n_classes)
            .map(|(r, &c)| self.get(r, c))
            .sum();
        matched as f64 / self.total as f64
    }

    pub fn purity(&self) -> f64 {
        let hits: u64 = self
            .rows()
            .map(|r| r.iter().copied().max().unwrap_or(0))
            .sum();
        hits as f64 / self.total as f64
    }

    /// `I(U; V) / sqrt(H(U) H(V))` with natural logs. Zero when exactly one
    /// side has zero entropy; one when both partitions are a single block.
    pub fn nmi(&self) -> f64 {
        let n = self.total as f64;
        let entropy = |sums: &[u64]| -> f64 {
            sums.iter()
                .filter(|&&s| s > 0)
                .map(|&s| {
                    let p = s as f64 / n;
                    -p * p.ln()
                })
                .sum()
        };
        let rows = self.row_sums();
        let cols = self.col_sums();
        let hu = entropy(&rows);
        let hv = entropy(&cols);
        let single_rows = rows.iter().filter(|&&s| s > 0).count() <= 1;
        let single_cols = cols.iter().filter(|&&s| s > 0).count() <= 1;
        if single_rows && single_cols {
            return 1.0;
        }
        if single_rows || single_cols || hu <= 0.0 || hv <= 0.0 {
            return 0.0;
        }
        let mut mi = 0.0;
        for (r, row) in self.rows().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                let pij = v as f64 / n;
                mi += pij * (v as f64 * n / (rows[r] as f64 * cols[c] as f64)).ln();
            }
        }
        (mi / (hu * hv).sqrt()).clamp(0.0, 1.0)
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            n_samples: self.total,
            n_clusters: self.n_clusters,
            n_classes: self.n_classes,
            acc: self.accuracy(),
            purity: self.purity(),
            nmi: self.nmi(),
        }
    }
}

/// Square-matrix minimum-cost perfect matching (Hungarian method with
/// potentials). Returns `assignment[row] = column`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based; column 0 is a virtual start
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n_samples: u64,
    pub n_clusters: usize,
    pub n_classes: usize,
    pub acc: f64,
    pub purity: f64,
    pub nmi: f64,
}

impl MetricsReport {
    /// JSON object body with 6-decimal fixed formatting for the scores,
    /// without the surrounding braces so callers can append fields.
    pub fn json_fields(&self) -> String {
        format!(
            "\"n_samples\":{},\"n_clusters\":{},\"n_classes\":{},\"acc\":{:.6},\"purity\":{:.6},\"nmi\":{:.6}",
            self.n_samples, self.n_clusters, self.n_classes, self.acc, self.purity, self.nmi
        )
    }

    pub fn to_json(&self) -> String {
        format!("{{{}}}", self.json_fields())
    }
}
