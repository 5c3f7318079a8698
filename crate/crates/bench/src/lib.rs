//! Shared fixtures for the criterion benchmarks.

use hdstream_core::{Cluster, Lfsr32, PackedHv};

pub fn random_hvs(n: usize, dim: usize, seed: u32) -> Vec<PackedHv> {
    let mut rng = Lfsr32::new(seed).expect("nonzero seed");
    (0..n)
        .map(|_| PackedHv::random(&mut rng, dim).expect("positive dimension"))
        .collect()
}

pub fn random_clusters(n: usize, dim: usize, seed: u32) -> Vec<Cluster> {
    random_hvs(n, dim, seed)
        .into_iter()
        .enumerate()
        .map(|(i, h)| Cluster::seeded(i as u64, h, 0.7, 0.1))
        .collect()
}
