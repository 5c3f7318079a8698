use std::path::Path;
use std::process::{Command, Output};

use hdstream_core::dataio::{read_features, write_features};
use serde_json::Value;
use tempfile::TempDir;

fn hdstream(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdstream"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen(dir: &Path, per_class: &str, out: &str) {
    let o = hdstream(
        dir,
        &["gen", "--classes", "3", "--per-class", per_class, "--dim", "8", "--seed", "7", "--out", out],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn gen_writes_labelled_file() {
    let dir = TempDir::new().unwrap();
    let o = hdstream(
        dir.path(),
        &["gen", "--classes", "3", "--per-class", "10", "--dim", "4", "--spread", "0.05", "--seed", "7", "--out", "s.ihdf"],
    );
    assert_eq!(code(&o), 0);
    let f = read_features(&dir.path().join("s.ihdf")).unwrap();
    assert_eq!((f.len(), f.dim()), (30, 4));
    assert_eq!(f.labels.unwrap().len(), 30);
}

#[test]
fn gen_usage_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(code(&hdstream(d, &["gen", "--classes", "3", "--per-class", "10", "--dim", "4"])), 2);
    let o = hdstream(d, &["gen", "--classes", "3", "--per-class", "10", "--dim", "4", "--seed", "0", "--out", "x"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed must be nonzero"));
    let o = hdstream(d, &["gen", "--classes", "3", "--per-class", "1", "--dim", "4", "--order", "zigzag", "--out", "x"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&hdstream(d, &["frobnicate"])), 2);
}

#[test]
fn run_then_eval_agree() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    gen(d, "60", "s.csv");
    std::fs::write(d.join("c.cfg"), "D=1024\nc_max=6\nt0=64\nt_merge=32\ncalib_samples=50\n").unwrap();
    let o = hdstream(
        d,
        &["run", "--features", "s.csv", "--config", "c.cfg", "--events", "e.jsonl", "--metrics", "m.json", "--snapshot", "s.ihst", "--item-memory", "m.ihim"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = hdstream(d, &["eval", "--events", "e.jsonl", "--labels-from", "s.csv", "--out", "m2.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let (inline, offline) = (json(&d.join("m.json")), json(&d.join("m2.json")));
    for k in ["n_samples", "n_clusters", "n_classes", "acc", "purity", "nmi"] {
        assert_eq!(inline[k], offline[k], "{k}");
    }
    assert_eq!(inline["manifest"]["config"]["D"], 1024);
    assert_eq!(offline["manifest"]["run"], inline["manifest"]);
    assert!(d.join("s.ihst").exists() && d.join("m.ihim").exists());
}

#[test]
fn eval_of_perfect_log_scores_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let vectors = vec![vec![0.0]; 6];
    let labels = [0u32, 1, 2, 0, 1, 2];
    write_features(&d.join("l.ihdf"), &vectors, Some(&labels)).unwrap();
    let log: String = labels
        .iter()
        .enumerate()
        .map(|(t, &l)| {
            format!("{{\"t\":{t},\"cluster_id\":{},\"similarity\":1.000000,\"created\":{},\"threshold\":0.500000}}\n", l + 10, t < 3)
        })
        .collect();
    std::fs::write(d.join("e.jsonl"), log).unwrap();
    let o = hdstream(d, &["eval", "--events", "e.jsonl", "--labels-from", "l.ihdf"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((m["acc"].as_f64(), m["purity"].as_f64(), m["nmi"].as_f64()), (Some(1.0), Some(1.0), Some(1.0)));

    write_features(&d.join("short.ihdf"), &vectors[..5], Some(&labels[..5])).unwrap();
    assert_eq!(code(&hdstream(d, &["eval", "--events", "e.jsonl", "--labels-from", "short.ihdf"])), 1);
}

#[test]
fn run_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    gen(d, "5", "s.ihdf");

    std::fs::write(d.join("bad.cfg"), "D=64\ngamma=0.3\n").unwrap();
    let o = hdstream(d, &["run", "--features", "s.ihdf", "--config", "bad.cfg", "--events", "e.jsonl"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("gamma") && stderr(&o).contains("refine_iters"));

    std::fs::write(d.join("zero.cfg"), "seed=0\n").unwrap();
    assert_eq!(code(&hdstream(d, &["run", "--features", "s.ihdf", "--config", "zero.cfg", "--events", "e.jsonl"])), 2);

    write_features(&d.join("plain.ihdf"), &[vec![1.0, 2.0]], None).unwrap();
    let o = hdstream(d, &["run", "--features", "plain.ihdf", "--events", "e.jsonl", "--metrics", "m.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("labels required for metrics"));

    std::fs::write(d.join("nan.csv"), "1,2\n3,4\n5,nan\n").unwrap();
    let o = hdstream(d, &["run", "--features", "nan.csv", "--events", "e.jsonl"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    assert_eq!(code(&hdstream(d, &["run", "--features", "missing.ihdf", "--events", "e.jsonl"])), 1);
}

#[test]
fn thread_cap_is_validated() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    gen(d, "5", "s.ihdf");
    for bad in ["0", "-2", "many"] {
        let o = Command::new(env!("CARGO_BIN_EXE_hdstream"))
            .current_dir(d)
            .env("IMAGEHD_THREADS", bad)
            .args(["run", "--features", "s.ihdf", "--events", "e.jsonl"])
            .output()
            .unwrap();
        assert_eq!(code(&o), 2, "{bad}");
    }
}

#[test]
fn merge_bench_report_and_guards() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = hdstream(d, &["merge-bench", "--k-list", "32", "--dim", "256", "--k-prime", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["k"], 32);
    assert!(v[0]["median_ns"].as_u64().unwrap() > 0);

    assert_eq!(code(&hdstream(d, &["merge-bench", "--k-list", "8,16", "--k-prime", "16"])), 2);
    assert_eq!(code(&hdstream(d, &["merge-bench", "--k-list", "64,32"])), 2);
}
