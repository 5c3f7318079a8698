use hdstream_core::dataio::{gen_synthetic, StreamOrder, SyntheticSpec, Synthetic};
use hdstream_core::eventlog::{parse_event_log, write_event_log};
use hdstream_core::{ItemMemory, LearnerConfig, LearnerState, Lfsr32};

fn fixture(classes: usize, per_class: usize, order: StreamOrder) -> Synthetic {
    gen_synthetic(&SyntheticSpec {
        n_classes: classes,
        per_class,
        dim: 32,
        spread: 0.05,
        seed: 3,
        order,
    })
    .unwrap()
}

fn memory(rng: &mut Lfsr32, warmup: &[Vec<f64>]) -> ItemMemory {
    let mut mem = ItemMemory::build(rng, 4096, 16, 32).unwrap();
    mem.calibrate(warmup).unwrap();
    mem
}

#[test]
fn encoding_preserves_locality() {
    let syn = fixture(2, 500, StreamOrder::Sequential);
    let mut rng = Lfsr32::new(17).unwrap();
    let mem = memory(&mut rng, &syn.vectors);
    let mut closer = 0;
    for _ in 0..500 {
        let a = rng.uniform(500).unwrap() as usize;
        let b = rng.uniform(500).unwrap() as usize;
        let c = 500 + rng.uniform(500).unwrap() as usize;
        let ea = mem.encode(&syn.vectors[a]).unwrap();
        let eb = mem.encode(&syn.vectors[b]).unwrap();
        let ec = mem.encode(&syn.vectors[c]).unwrap();
        closer += (ea.hamming(&eb).unwrap() < ea.hamming(&ec).unwrap()) as u32;
    }
    assert!(closer >= 475, "locality held in {closer}/500 trials");
}

#[test]
fn invariants_hold_after_every_sample() {
    let syn = fixture(4, 150, StreamOrder::Interleaved);
    let config = LearnerConfig {
        c_max: 6,
        ..LearnerConfig::default()
    };
    let mut rng = Lfsr32::new(config.seed).unwrap();
    let mem = memory(&mut rng, &syn.vectors[..128]);
    let mut state = LearnerState::with_rng(config.clone(), rng);
    for (t, z) in syn.vectors.iter().enumerate() {
        let merges = state.merges().len();
        let e = state.process_sample(&mem, z).unwrap();
        assert_eq!(e.t, t as u64);
        assert_eq!(state.position(), t as u64 + 1);
        assert_eq!(state.events().len(), t + 1);
        state.audit().unwrap();
        for c in state.clusters() {
            assert!((0.0..=1.0).contains(&c.mu()), "mu {} at t = {t}", c.mu());
            assert!(c.sigma() >= 0.0);
        }
        if state.merges().len() > merges {
            assert!(state.clusters().len() <= config.c_max, "t = {t}");
        }
    }
    assert!(!state.merges().is_empty());
    let total: u64 = state.clusters().iter().map(|c| c.count() as u64).sum();
    assert_eq!(total, syn.vectors.len() as u64);
}

#[test]
fn event_log_round_trips_and_resolves_merges() {
    let syn = fixture(3, 120, StreamOrder::Interleaved);
    let config = LearnerConfig {
        c_max: 4,
        t0: 64,
        t_merge: 32,
        ..LearnerConfig::default()
    };
    let mut rng = Lfsr32::new(config.seed).unwrap();
    let mem = memory(&mut rng, &syn.vectors[..64]);
    let mut state = LearnerState::with_rng(config, rng);
    state.run(&mem, &syn.vectors).unwrap();
    state.finish().unwrap();

    let mut buf = Vec::new();
    write_event_log(&mut buf, Some("{\"k\":1}"), state.events(), state.merges()).unwrap();
    let log = parse_event_log(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(log.events.len(), state.events().len());
    for (a, b) in log.events.iter().zip(state.events()) {
        assert_eq!((a.t, a.cluster_id, a.created), (b.t, b.cluster_id, b.created));
        // six decimals on disk
        assert!((a.similarity - b.similarity).abs() <= 5e-7);
        assert!((a.threshold - b.threshold).abs() <= 5e-7);
    }
    assert_eq!(log.merges.len(), state.merges().len());

    // every resolved id is a live cluster
    let live: Vec<u64> = state.clusters().iter().map(|c| c.id()).collect();
    let resolved = log.final_assignments();
    assert_eq!(resolved.len(), syn.vectors.len());
    assert!(resolved.iter().all(|id| live.contains(id)));
    for c in state.clusters() {
        let n = resolved.iter().filter(|&&id| id == c.id()).count();
        assert_eq!(n as u32, c.count(), "cluster {}", c.id());
    }
}
