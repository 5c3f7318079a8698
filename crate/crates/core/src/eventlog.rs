//! JSON-lines event log.
//!
//! One object per line. Assignment lines carry
//! `t, cluster_id, similarity, created, threshold`; merge lines carry
//! `t` and a `merge` object with `k_before, k_after, seed_state, map`, where
//! `map` lists `[old_id, new_id]` pairs. A merge line follows the assignment
//! line of the sample that triggered it. An optional leading
//! `{"manifest": ...}` line describes the run.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::learner::{AssignmentEvent, MergeEvent};

pub fn format_assignment(e: &AssignmentEvent) -> String {
    format!(
        "{{\"t\":{},\"cluster_id\":{},\"similarity\":{:.6},\"created\":{},\"threshold\":{:.6}}}",
        e.t, e.cluster_id, e.similarity, e.created, e.threshold
    )
}

pub fn format_merge(m: &MergeEvent) -> String {
    let mut map = String::new();
    for (i, (old, new)) in m.mapping.iter().enumerate() {
        if i > 0 {
            map.push(',');
        }
        let _ = write!(map, "[{old},{new}]");
    }
    format!(
        "{{\"t\":{},\"merge\":{{\"k_before\":{},\"k_after\":{},\"seed_state\":{},\"map\":[{}]}}}}",
        m.t, m.k_before, m.k_after, m.seed_state, map
    )
}

/// Writes the manifest line (if any), then assignments and merges interleaved
/// by stream index.
pub fn write_event_log<W: Write>(
    mut w: W,
    manifest_json: Option<&str>,
    events: &[AssignmentEvent],
    merges: &[MergeEvent],
) -> std::io::Result<()> {
    if let Some(m) = manifest_json {
        writeln!(w, "{{\"manifest\":{m}}}")?;
    }
    let mut pending = merges.iter().peekable();
    for e in events {
        writeln!(w, "{}", format_assignment(e))?;
        while let Some(m) = pending.next_if(|m| m.t <= e.t) {
            writeln!(w, "{}", format_merge(m))?;
        }
    }
    for m in pending {
        writeln!(w, "{}", format_merge(m))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub manifest: Option<Value>,
    pub events: Vec<AssignmentEvent>,
    pub merges: Vec<MergeEvent>,
}

impl EventLog {
    /// Cluster each sample belongs to after every later merge has been applied.
    pub fn final_assignments(&self) -> Vec<u64> {
        final_assignments(&self.events, &self.merges)
    }
}

pub fn parse_event_log(text: &str) -> Result<EventLog> {
    let mut log = EventLog::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| err("expected a JSON object".into()))?;
        if let Some(m) = obj.get("manifest") {
            log.manifest = Some(m.clone());
            continue;
        }
        let u = |o: &serde_json::Map<String, Value>, k: &str| {
            o.get(k)
                .and_then(Value::as_u64)
                .ok_or_else(|| err(format!("missing or invalid {k:?}")))
        };
        let f = |o: &serde_json::Map<String, Value>, k: &str| {
            o.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| err(format!("missing or invalid {k:?}")))
        };
        let t = u(obj, "t")?;
        if let Some(m) = obj.get("merge") {
            let m = m.as_object().ok_or_else(|| err("merge must be an object".into()))?;
            let mapping = m
                .get("map")
                .and_then(Value::as_array)
                .ok_or_else(|| err("merge.map missing".into()))?
                .iter()
                .map(|p| {
                    let pair = p.as_array().filter(|a| a.len() == 2);
                    match pair.map(|a| (a[0].as_u64(), a[1].as_u64())) {
                        Some((Some(a), Some(b))) => Ok((a, b)),
                        _ => Err(err("merge.map entries must be [old, new]".into())),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            log.merges.push(MergeEvent {
                t,
                k_before: u(m, "k_before")? as usize,
                k_after: u(m, "k_after")? as usize,
                seed_state: u(m, "seed_state")? as u32,
                mapping,
            });
        } else {
            let created = obj
                .get("created")
                .and_then(Value::as_bool)
                .ok_or_else(|| err("missing or invalid \"created\"".into()))?;
            log.events.push(AssignmentEvent {
                t,
                cluster_id: u(obj, "cluster_id")?,
                similarity: f(obj, "similarity")?,
                created,
                threshold: f(obj, "threshold")?,
            });
        }
    }
    Ok(log)
}

/// Forwards each event's cluster id through all later merges.
pub fn final_assignments(events: &[AssignmentEvent], merges: &[MergeEvent]) -> Vec<u64> {
    let forward: HashMap<u64, u64> = merges
        .iter()
        .flat_map(|m| m.mapping.iter().copied())
        .filter(|(old, new)| old != new)
        .collect();
    let mut memo: HashMap<u64, u64> = HashMap::new();
    events
        .iter()
        .map(|e| {
            if let Some(&r) = memo.get(&e.cluster_id) {
                return r;
            }
            let mut id = e.cluster_id;
            // fresh ids are strictly larger, so the chain terminates
            while let Some(&next) = forward.get(&id) {
                id = next;
            }
            memo.insert(e.cluster_id, id);
            id
        })
        .collect()
}
