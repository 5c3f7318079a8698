use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use hdstream_core::dataio::{gen_synthetic, read_features, write_features, SyntheticSpec};
use hdstream_core::eventlog::{final_assignments, parse_event_log, write_event_log};
use hdstream_core::{
    merge_clusters, Cluster, ContingencyMatrix, Error, ItemMemory, LearnerState, Lfsr32, MergeParams,
    MetricsReport, PackedHv,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::{EvalArgs, GenArgs, MergeBenchArgs, RunArgs};

/// Growth allowed when K doubles; larger jumps in the K list scale it
/// geometrically.
pub const DOUBLING_RATIO_LIMIT: f64 = 3.0;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidGenerator => Self::usage(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())
                .and_then(|()| w.flush())
                .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

pub fn gen(a: &GenArgs) -> Result<(), Failure> {
    if a.seed == 0 {
        return Err(Failure::usage("seed must be nonzero"));
    }
    let spec = SyntheticSpec {
        n_classes: a.classes,
        per_class: a.per_class,
        dim: a.dim,
        spread: a.spread,
        seed: a.seed,
        order: a.order.parse()?,
    };
    let syn = gen_synthetic(&spec)?;
    write_features(&a.out, &syn.vectors, Some(&syn.labels))?;
    eprintln!(
        "wrote {} samples x {} features to {}",
        syn.vectors.len(),
        a.dim,
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    features: String,
    events: String,
    metrics: Option<String>,
    snapshot: Option<String>,
    item_memory: Option<String>,
    config: &'a RunConfig,
}

fn metrics_json(manifest: &str, report: &MetricsReport) -> String {
    format!("{{\"manifest\":{manifest},{}}}\n", report.json_fields())
}

pub fn run(a: &RunArgs) -> Result<(), Failure> {
    let cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?;
            RunConfig::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    let learner_cfg = cfg.learner();
    learner_cfg.validate()?;

    let features = read_features(&a.features)?;
    if features.is_empty() {
        return Err(Failure::runtime(format!("{}: no samples", a.features.display())));
    }
    if a.metrics.is_some() && features.labels.is_none() {
        return Err(Failure::usage("labels required for metrics"));
    }

    let started = Instant::now();
    let mut rng = Lfsr32::new(cfg.seed)?;
    let mut mem = ItemMemory::build(&mut rng, cfg.dim, cfg.levels, features.dim())?;
    let warm = cfg.calib_samples.min(features.len());
    mem.calibrate(&features.vectors[..warm])?;
    let mut state = LearnerState::with_rng(learner_cfg, rng);
    state.run(&mem, &features.vectors)?;
    state.finish()?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "run",
        features: show(&a.features),
        events: show(&a.events),
        metrics: a.metrics.as_deref().map(show),
        snapshot: a.snapshot.as_deref().map(show),
        item_memory: a.item_memory.as_deref().map(show),
        config: &cfg,
    };
    let manifest = serde_json::to_string(&manifest).map_err(|e| Failure::runtime(e.to_string()))?;

    let mut w = create(&a.events)?;
    write_event_log(&mut w, Some(&manifest), state.events(), state.merges())
        .and_then(|()| w.flush())
        .map_err(|e| Failure::runtime(format!("{}: {e}", a.events.display())))?;

    let mut summary = String::new();
    if let (Some(path), Some(labels)) = (&a.metrics, &features.labels) {
        let assigned = final_assignments(state.events(), state.merges());
        let report = ContingencyMatrix::build(&assigned, labels)?.report();
        write_text(Some(path), &metrics_json(&manifest, &report))?;
        summary = format!(", acc {:.4}, purity {:.4}, nmi {:.4}", report.acc, report.purity, report.nmi);
    }
    if let Some(p) = &a.snapshot {
        state.save(p)?;
    }
    if let Some(p) = &a.item_memory {
        mem.save(p)?;
    }
    eprintln!(
        "{} samples, {} clusters, {} merges in {:.3}s{summary}",
        features.len(),
        state.clusters().len(),
        state.merges().len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub k: usize,
    pub median_ns: u128,
}

fn median(mut xs: Vec<u128>) -> u128 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn bench_clusters(k: usize, dim: usize, seed: u32) -> Result<Vec<Cluster>, Failure> {
    let mut rng = Lfsr32::new(seed)?;
    (0..k)
        .map(|i| Ok(Cluster::seeded(i as u64, PackedHv::random(&mut rng, dim)?, 0.7, 0.1)))
        .collect()
}

fn time_merge(clusters: &[Cluster], params: &MergeParams, seed: u32, reps: usize) -> Result<u128, Failure> {
    let mut samples = Vec::with_capacity(reps);
    // one untimed pass to fault in pages and spin up the pool
    for rep in 0..=reps {
        let input = clusters.to_vec();
        let mut rng = Lfsr32::new(seed)?;
        let mut next_id = clusters.len() as u64;
        let start = Instant::now();
        let out = merge_clusters(input, params, &mut rng, &mut next_id)?;
        let ns = start.elapsed().as_nanos();
        std::hint::black_box(out);
        if rep > 0 {
            samples.push(ns);
        }
    }
    Ok(median(samples))
}

/// Adjacent pairs whose growth exceeds the near-linear budget.
pub fn scaling_violations(points: &[BenchPoint]) -> Vec<(usize, usize, f64)> {
    points
        .windows(2)
        .filter_map(|w| {
            let ratio = w[1].median_ns as f64 / w[0].median_ns.max(1) as f64;
            let limit = DOUBLING_RATIO_LIMIT.powf((w[1].k as f64 / w[0].k as f64).log2());
            (ratio > limit).then_some((w[0].k, w[1].k, ratio))
        })
        .collect()
}

pub fn merge_bench(a: &MergeBenchArgs) -> Result<(), Failure> {
    if a.seed == 0 {
        return Err(Failure::usage("seed must be nonzero"));
    }
    if a.k_list.is_empty() || a.k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Failure::usage("k-list must be nonempty and strictly ascending"));
    }
    if a.k_prime == 0 || a.k_prime > a.k_list[0] {
        return Err(Failure::usage(format!(
            "k-prime must be in 1..={} (the smallest K)",
            a.k_list[0]
        )));
    }
    if a.reps < 5 {
        return Err(Failure::usage("reps must be at least 5"));
    }
    if a.dim == 0 {
        return Err(Failure::usage("dim must be positive"));
    }
    let params = MergeParams::new(a.k_prime, a.top_m, a.iters)?;

    let mut points = Vec::with_capacity(a.k_list.len());
    for &k in &a.k_list {
        let clusters = bench_clusters(k, a.dim, a.seed)?;
        let median_ns = time_merge(&clusters, &params, a.seed, a.reps)?;
        eprintln!("k = {k}: median {:.3} ms", median_ns as f64 / 1e6);
        points.push(BenchPoint { k, median_ns });
    }
    let json = serde_json::to_string(&points).map_err(|e| Failure::runtime(e.to_string()))?;
    write_text(a.out.as_deref(), &format!("{json}\n"))?;

    let bad = scaling_violations(&points);
    if bad.is_empty() {
        return Ok(());
    }
    let detail: Vec<String> = bad
        .iter()
        .map(|(k1, k2, r)| format!("time({k2})/time({k1}) = {r:.2}"))
        .collect();
    Err(Failure::runtime(format!("scaling regression: {}", detail.join(", "))))
}

#[derive(Serialize)]
struct EvalManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    events: String,
    labels_from: String,
    run: Option<&'a Value>,
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.events).map_err(|e| Failure::runtime(format!("{}: {e}", a.events.display())))?;
    let log = parse_event_log(&text)?;
    let features = read_features(&a.labels_from)?;
    let Some(labels) = &features.labels else {
        return Err(Failure::usage(format!("{}: file carries no labels", a.labels_from.display())));
    };
    let assigned = log.final_assignments();
    if assigned.len() != labels.len() {
        return Err(Failure::runtime(format!(
            "event log has {} samples but {} has {} labels",
            assigned.len(),
            a.labels_from.display(),
            labels.len()
        )));
    }
    let report = ContingencyMatrix::build(&assigned, labels)?.report();
    let manifest = EvalManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "eval",
        events: show(&a.events),
        labels_from: show(&a.labels_from),
        run: log.manifest.as_ref(),
    };
    let manifest = serde_json::to_string(&manifest).map_err(|e| Failure::runtime(e.to_string()))?;
    write_text(a.out.as_deref(), &metrics_json(&manifest, &report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(vec![5, 1, 3]), 3);
        assert_eq!(median(vec![4, 1, 3, 2]), 2);
    }

    #[test]
    fn scaling_gate() {
        let p = |k, median_ns| BenchPoint { k, median_ns };
        assert!(scaling_violations(&[p(128, 100)]).is_empty());
        assert!(scaling_violations(&[p(128, 100), p(256, 300), p(512, 850)]).is_empty());
        assert_eq!(scaling_violations(&[p(128, 100), p(256, 301)]).len(), 1);
        // quadrupling K allows 3^2
        assert!(scaling_violations(&[p(128, 100), p(512, 900)]).is_empty());
        assert_eq!(scaling_violations(&[p(128, 100), p(512, 901)]).len(), 1);
    }
}
