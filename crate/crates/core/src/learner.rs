//! Single-pass streaming learner over a bounded, single-tier cluster memory.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::cluster::Cluster;
use crate::consolidate::{merge_clusters, MergeParams};
use crate::error::{Error, Result};
use crate::hv::{PackedHv, VoteAccumulator};
use crate::item_memory::{ByteReader, FeatureVector, ItemMemory};
use crate::lfsr::Lfsr32;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"IHST";
pub const SNAPSHOT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// Novelty parameter: a sample is novel when `s < mu - beta * sigma`.
    pub beta: f64,
    /// EMA rate for the per-cluster similarity statistics.
    pub alpha: f64,
    pub t_merge: u64,
    pub t0: u64,
    pub c_max: usize,
    pub mu_init: f64,
    pub sigma_init: f64,
    pub top_m: usize,
    pub refine_iters: usize,
    pub seed: u32,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            alpha: 0.1,
            t_merge: 64,
            t0: 256,
            c_max: 16,
            mu_init: 0.7,
            sigma_init: 0.1,
            top_m: 4,
            refine_iters: 2,
            seed: 1,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be a non-negative real, got {}", self.beta));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if self.t_merge == 0 {
            return bad("t_merge must be positive".into());
        }
        if self.c_max == 0 {
            return bad("c_max must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mu_init) {
            return bad(format!("mu_init must be in [0, 1], got {}", self.mu_init));
        }
        if !(self.sigma_init.is_finite() && self.sigma_init >= 0.0) {
            return bad(format!("sigma_init must be non-negative, got {}", self.sigma_init));
        }
        if self.top_m == 0 {
            return bad("top_m must be positive".into());
        }
        if self.seed == 0 {
            return bad("seed must be nonzero".into());
        }
        Ok(())
    }

    pub fn merge_params(&self) -> MergeParams {
        MergeParams {
            k_prime: self.c_max,
            top_m: self.top_m,
            refine_iters: self.refine_iters,
        }
    }
}

/// Outcome of one sample. `t` is the zero-based stream index.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentEvent {
    pub t: u64,
    pub cluster_id: u64,
    pub similarity: f64,
    pub created: bool,
    pub threshold: f64,
}

/// A consolidation that ran right after the sample at stream index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub t: u64,
    pub k_before: usize,
    pub k_after: usize,
    /// LFSR state when the merge started.
    pub seed_state: u32,
    /// `(old id, new id)` for every cluster that existed before the merge.
    pub mapping: Vec<(u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    config: LearnerConfig,
    clusters: Vec<Cluster>,
    t: u64,
    next_id: u64,
    rng: Lfsr32,
    events: Vec<AssignmentEvent>,
    merges: Vec<MergeEvent>,
}

impl LearnerState {
    pub fn new(config: LearnerConfig) -> Result<Self> {
        config.validate()?;
        let rng = Lfsr32::new(config.seed)?;
        Ok(Self::with_rng(config, rng))
    }

    /// Continues an existing generator, e.g. one that already built the item
    /// memory.
    pub fn with_rng(config: LearnerConfig, rng: Lfsr32) -> Self {
        Self {
            config,
            clusters: Vec::new(),
            t: 0,
            next_id: 0,
            rng,
            events: Vec::new(),
            merges: Vec::new(),
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Samples consumed so far.
    pub fn position(&self) -> u64 {
        self.t
    }

    pub fn rng_state(&self) -> u32 {
        self.rng.state()
    }

    pub fn events(&self) -> &[AssignmentEvent] {
        &self.events
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    /// Best `(similarity, cluster id)` with ties to the lowest id, or `None`
    /// when the memory is empty.
    pub fn similarity_search(&self, q: &PackedHv) -> Result<Option<(f64, u64)>> {
        Ok(self.best_match(q)?.map(|(i, s)| (s, self.clusters[i].id())))
    }

    fn best_match(&self, q: &PackedHv) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, usize)> = None;
        for (i, c) in self.clusters.iter().enumerate() {
            let d = q.hamming(c.prototype())?;
            let better = match best {
                None => true,
                Some((bi, bd)) => d < bd || (d == bd && c.id() < self.clusters[bi].id()),
            };
            if better {
                best = Some((i, d));
            }
        }
        Ok(best.map(|(i, d)| (i, 1.0 - d as f64 / q.dim() as f64)))
    }

    fn create(&mut self, q: PackedHv) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.clusters.push(Cluster::seeded(
            id,
            q,
            self.config.mu_init,
            self.config.sigma_init,
        ));
        id
    }

    /// Encodes `z`, admits it into the best-matching cluster or opens a new
    /// one, then runs the periodic merge check.
    pub fn process_sample(&mut self, mem: &ItemMemory, z: &[f64]) -> Result<AssignmentEvent> {
        let q = mem.encode(z)?;
        let index = self.t;
        let event = match self.best_match(&q)? {
            None => {
                let id = self.create(q);
                AssignmentEvent {
                    t: index,
                    cluster_id: id,
                    similarity: 0.0,
                    created: true,
                    threshold: 1.0,
                }
            }
            Some((i, s)) => {
                let theta = self.clusters[i].admission_threshold(self.config.beta);
                if s < theta {
                    let id = self.create(q);
                    AssignmentEvent {
                        t: index,
                        cluster_id: id,
                        similarity: s,
                        created: true,
                        threshold: theta,
                    }
                } else {
                    let c = &mut self.clusters[i];
                    c.absorb(&q, s, self.config.alpha)?;
                    AssignmentEvent {
                        t: index,
                        cluster_id: c.id(),
                        similarity: s,
                        created: false,
                        threshold: theta,
                    }
                }
            }
        };
        self.t += 1;
        self.events.push(event.clone());

        let cfg = &self.config;
        if self.t >= cfg.t0 && self.t.is_multiple_of(cfg.t_merge) && self.clusters.len() > cfg.c_max {
            self.merge(index)?;
        }
        Ok(event)
    }

    fn merge(&mut self, index: u64) -> Result<()> {
        let seed_state = self.rng.state();
        let k_before = self.clusters.len();
        let params = self.config.merge_params();
        let clusters = std::mem::take(&mut self.clusters);
        let outcome = merge_clusters(clusters, &params, &mut self.rng, &mut self.next_id)?;
        self.clusters = outcome.clusters;
        self.merges.push(MergeEvent {
            t: index,
            k_before,
            k_after: self.clusters.len(),
            seed_state,
            mapping: outcome.mapping,
        });
        Ok(())
    }

    /// Closing consolidation: merges down to `c_max` if clusters opened after
    /// the last periodic merge left the memory over capacity. Returns whether
    /// a merge ran.
    pub fn finish(&mut self) -> Result<bool> {
        if self.clusters.len() <= self.config.c_max || self.t == 0 {
            return Ok(false);
        }
        self.merge(self.t - 1)?;
        Ok(true)
    }

    /// Feeds every vector in order. The first failure aborts with its stream
    /// index attached.
    pub fn run(&mut self, mem: &ItemMemory, features: &[FeatureVector]) -> Result<()> {
        for (i, z) in features.iter().enumerate() {
            self.process_sample(mem, z).map_err(|e| Error::Stream {
                index: i,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// Checks the structural invariants of the memory.
    pub fn audit(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for c in &self.clusters {
            if !ids.insert(c.id()) {
                return Err(Error::Config(format!("duplicate cluster id {}", c.id())));
            }
            if c.id() >= self.next_id {
                return Err(Error::Config(format!("cluster id {} not yet issued", c.id())));
            }
            if !c.is_coherent() {
                return Err(Error::Config(format!(
                    "cluster {} prototype differs from its thresholded votes",
                    c.id()
                )));
            }
            if !(0.0..=1.0).contains(&c.mu()) || c.sigma() < 0.0 {
                return Err(Error::Config(format!(
                    "cluster {} statistics out of range (mu {}, sigma {})",
                    c.id(),
                    c.mu(),
                    c.sigma()
                )));
            }
        }
        if self.events.len() as u64 > self.t {
            return Err(Error::Config("more events than samples".into()));
        }
        Ok(())
    }

    /// Writes the exact-resume snapshot. The event log is not part of it.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let c = &self.config;
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&c.beta.to_le_bytes())?;
        w.write_all(&c.alpha.to_le_bytes())?;
        w.write_all(&c.t_merge.to_le_bytes())?;
        w.write_all(&c.t0.to_le_bytes())?;
        w.write_all(&(c.c_max as u32).to_le_bytes())?;
        w.write_all(&c.mu_init.to_le_bytes())?;
        w.write_all(&c.sigma_init.to_le_bytes())?;
        w.write_all(&(c.top_m as u32).to_le_bytes())?;
        w.write_all(&(c.refine_iters as u32).to_le_bytes())?;
        w.write_all(&c.seed.to_le_bytes())?;

        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&self.next_id.to_le_bytes())?;
        w.write_all(&self.rng.state().to_le_bytes())?;
        let dim = self.clusters.first().map_or(0, |c| c.prototype().dim());
        w.write_all(&(dim as u32).to_le_bytes())?;
        w.write_all(&(self.clusters.len() as u32).to_le_bytes())?;
        for cl in &self.clusters {
            w.write_all(&cl.id().to_le_bytes())?;
            w.write_all(&(cl.count() as u64).to_le_bytes())?;
            w.write_all(&cl.mu().to_le_bytes())?;
            w.write_all(&cl.sigma().to_le_bytes())?;
            for v in cl.votes().counts() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: R) -> Result<Self> {
        let mut r = ByteReader::new(r);
        let mut magic = [0u8; 4];
        r.fill(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::format(0, "bad learner snapshot magic"));
        }
        let version = r.u16()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let config = LearnerConfig {
            beta: r.f64()?,
            alpha: r.f64()?,
            t_merge: r.u64()?,
            t0: r.u64()?,
            c_max: r.u32()? as usize,
            mu_init: r.f64()?,
            sigma_init: r.f64()?,
            top_m: r.u32()? as usize,
            refine_iters: r.u32()? as usize,
            seed: r.u32()?,
        };
        config
            .validate()
            .map_err(|e| Error::format(6, e.to_string()))?;
        let t = r.u64()?;
        let next_id = r.u64()?;
        let rng = Lfsr32::new(r.u32()?).map_err(|e| Error::format(r.offset - 4, e.to_string()))?;
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        if n > 0 && dim == 0 {
            return Err(Error::format(r.offset - 8, "clusters present with zero dimension"));
        }
        let mut clusters = Vec::with_capacity(n);
        for _ in 0..n {
            let offset = r.offset;
            let id = r.u64()?;
            let count = r.u64()?;
            let mu = r.f64()?;
            let sigma = r.f64()?;
            let counts = (0..dim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let total = u32::try_from(count)
                .map_err(|_| Error::format(offset + 8, "cluster count overflows u32"))?;
            let votes = VoteAccumulator::from_counts(counts, total)
                .map_err(|e| Error::format(offset, e.to_string()))?;
            let cluster = Cluster::from_votes(id, votes, mu, sigma)
                .map_err(|e| Error::format(offset, e.to_string()))?;
            clusters.push(cluster);
        }
        let state = Self {
            config,
            clusters,
            t,
            next_id,
            rng,
            events: Vec::new(),
            merges: Vec::new(),
        };
        state
            .audit()
            .map_err(|e| Error::format(0, e.to_string()))?;
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_snapshot(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot(std::io::BufReader::new(f))
    }
}

/// Runs a fresh learner over `features` and applies the closing
/// consolidation. The learner's generator starts from `config.seed`.
pub fn run_stream(
    config: LearnerConfig,
    mem: &ItemMemory,
    features: &[FeatureVector],
) -> Result<LearnerState> {
    let mut state = LearnerState::new(config)?;
    state.run(mem, features)?;
    state.finish()?;
    Ok(state)
}
