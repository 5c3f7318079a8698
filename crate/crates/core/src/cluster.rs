use crate::error::Result;
use crate::hv::{PackedHv, VoteAccumulator};

/// One prototype in the bounded cluster memory.
///
/// The prototype is always `threshold(votes)`; it is cached because every
/// similarity search reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    id: u64,
    prototype: PackedHv,
    votes: VoteAccumulator,
    mu: f64,
    sigma: f64,
}

impl Cluster {
    pub fn seeded(id: u64, hv: PackedHv, mu: f64, sigma: f64) -> Self {
        Self {
            id,
            votes: VoteAccumulator::from_hv(&hv),
            prototype: hv,
            mu,
            sigma,
        }
    }

    /// Rebuilds a cluster from its accumulator; the prototype is re-derived.
    pub fn from_votes(id: u64, votes: VoteAccumulator, mu: f64, sigma: f64) -> Result<Self> {
        let prototype = votes.threshold()?;
        Ok(Self {
            id,
            prototype,
            votes,
            mu,
            sigma,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn prototype(&self) -> &PackedHv {
        &self.prototype
    }

    pub fn votes(&self) -> &VoteAccumulator {
        &self.votes
    }

    pub fn count(&self) -> u32 {
        self.votes.total()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Novelty threshold `mu - beta * sigma`.
    pub fn admission_threshold(&self, beta: f64) -> f64 {
        self.mu - beta * self.sigma
    }

    /// Bundles `q` into the prototype and moves the running statistics
    /// toward the observed similarity. The deviation update uses the mean
    /// from before this sample.
    pub fn absorb(&mut self, q: &PackedHv, similarity: f64, alpha: f64) -> Result<()> {
        self.votes.accumulate(q)?;
        self.prototype = self.votes.threshold()?;
        let mu_old = self.mu;
        self.mu = (1.0 - alpha) * mu_old + alpha * similarity;
        self.sigma = (1.0 - alpha) * self.sigma + alpha * (similarity - mu_old).abs();
        Ok(())
    }

    pub fn is_coherent(&self) -> bool {
        self.votes.threshold().map(|p| p == self.prototype).unwrap_or(false)
    }
}
