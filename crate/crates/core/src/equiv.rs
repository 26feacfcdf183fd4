//! Sink-schedule comparison between a delayed system and a delay-free candidate.
//!
//! The candidate simulates the original when every sink's arrivals are the
//! original arrivals shifted by one constant `k`, with each original spike
//! replaced by `f` candidate spikes. Spikes are compared in arrival order;
//! with `f > 1` consecutive candidate spikes are grouped into blocks of `f`
//! and a block arrives when its first spike does. `f` is 1 or `1 + d` for a
//! delay `d` of the original.
//!
//! When either run does not halt within the horizon, only the window that
//! both runs fully cover is compared: the last `max delay + |k|` steps are
//! dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EquivError;
use crate::model::SystemDescription;
use crate::rewrite::TransformOutput;
use crate::sim::run;

/// Per-sink `(step, count)` arrivals, in sink order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkSchedule {
    pub sinks: Vec<(String, Vec<(u64, u64)>)>,
    pub halted: bool,
}

impl SinkSchedule {
    pub fn for_sink(&self, id: &str) -> Option<&[(u64, u64)]> {
        self.sinks.iter().find(|(s, _)| s == id).map(|(_, a)| a.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.sinks.iter().all(|(_, a)| a.is_empty())
    }
}

pub fn sink_schedule(system: &SystemDescription, horizon: u64) -> Result<SinkSchedule, EquivError> {
    let outcome = run(system, horizon)?;
    Ok(SinkSchedule { sinks: outcome.sinks.arrivals, halted: outcome.halted })
}

/// Offsets and factors a candidate is expected to exhibit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    /// Common offset for sinks without an entry in `sink_offsets`.
    pub offset: Option<i64>,
    #[serde(default)]
    pub sink_offsets: BTreeMap<String, i64>,
    #[serde(default)]
    pub factors: BTreeMap<String, u64>,
}

impl Expectation {
    pub fn offset(k: i64) -> Self {
        Self { offset: Some(k), ..Self::default() }
    }

    pub fn from_transform(out: &TransformOutput) -> Self {
        match out.uniform_offset() {
            Some(k) => Self { offset: Some(k), sink_offsets: BTreeMap::new(), factors: out.sink_factors.clone() },
            None => Self { offset: None, sink_offsets: out.sink_offsets.clone(), factors: out.sink_factors.clone() },
        }
    }

    fn offset_for(&self, sink: &str) -> Option<i64> {
        self.sink_offsets.get(sink).copied().or(self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub step: u64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub accepted: bool,
    /// The offset shared by all sinks, when there is one.
    pub offset: Option<i64>,
    pub sink_offsets: BTreeMap<String, i64>,
    pub count_factors: BTreeMap<String, u64>,
    pub first_divergence: Option<Divergence>,
    pub compared_horizon: u64,
    /// True when a run did not halt and only a window was compared.
    pub truncated: bool,
    pub notes: Vec<String>,
    pub original: SinkSchedule,
    pub candidate: SinkSchedule,
}

impl fmt::Display for EquivalenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.accepted {
            match self.offset {
                Some(k) => writeln!(f, "ACCEPT k={k}")?,
                None => writeln!(f, "ACCEPT k=per-sink")?,
            }
        } else {
            writeln!(f, "REJECT")?;
        }
        for (sink, k) in &self.sink_offsets {
            let fac = self.count_factors.get(sink).copied().unwrap_or(1);
            writeln!(f, "sink {sink} offset={k} factor={fac}")?;
        }
        write!(f, "horizon {}", self.compared_horizon)?;
        if self.truncated {
            write!(f, " (non-halting: compared truncated schedule)")?;
        }
        writeln!(f)?;
        for n in &self.notes {
            writeln!(f, "note {n}")?;
        }
        if let Some(d) = &self.first_divergence {
            writeln!(f, "first divergence at step {}: {}", d.step, d.description)?;
            write_diff(f, &self.original, &self.candidate)?;
        }
        Ok(())
    }
}

fn write_diff(f: &mut fmt::Formatter<'_>, original: &SinkSchedule, candidate: &SinkSchedule) -> fmt::Result {
    let names: Vec<&String> =
        original.sinks.iter().map(|(s, _)| s).chain(candidate.sinks.iter().map(|(s, _)| s)).collect();
    let mut seen = BTreeSet::new();
    for sink in names {
        if !seen.insert(sink) {
            continue;
        }
        let o = original.for_sink(sink).unwrap_or(&[]);
        let c = candidate.for_sink(sink).unwrap_or(&[]);
        writeln!(f, "sink {sink}")?;
        writeln!(f, "  {:>6}  {:>8}  {:>9}", "step", "original", "candidate")?;
        let steps: BTreeSet<u64> = o.iter().chain(c).map(|(t, _)| *t).collect();
        let at = |a: &[(u64, u64)], t: u64| a.iter().find(|(s, _)| *s == t).map(|(_, n)| *n).unwrap_or(0);
        for t in steps {
            writeln!(f, "  {:>6}  {:>8}  {:>9}", t, at(o, t), at(c, t))?;
        }
    }
    Ok(())
}

fn spike_times(arrivals: &[(u64, u64)]) -> Vec<u64> {
    arrivals.iter().flat_map(|&(t, n)| std::iter::repeat_n(t, n as usize)).collect()
}

/// Result of matching one sink under a given `k` and `f`.
enum SinkMatch {
    Ok,
    Diverges(Divergence),
}

struct Window {
    /// Original spikes later than this are not compared; `None` compares all.
    limit: Option<u64>,
}

fn match_sink(sink: &str, orig: &[u64], cand: &[u64], k: i64, f: u64, window: &Window) -> SinkMatch {
    let blocks: Vec<&[u64]> = cand.chunks(f as usize).collect();
    let in_window = |t: i64| window.limit.is_none_or(|l| t <= l as i64);
    let orig: Vec<u64> = orig.iter().copied().filter(|&t| in_window(t as i64)).collect();
    let blocks: Vec<&[u64]> = blocks.into_iter().filter(|b| in_window(b[0] as i64 - k)).collect();
    for i in 0..orig.len().max(blocks.len()) {
        match (orig.get(i), blocks.get(i)) {
            (Some(&o), Some(b)) => {
                if b[0] as i64 != o as i64 + k {
                    return SinkMatch::Diverges(Divergence {
                        step: o.min(b[0]),
                        description: format!(
                            "sink {sink}: original spike {} at step {o}, candidate block at step {} (expected {})",
                            i + 1,
                            b[0],
                            o as i64 + k
                        ),
                    });
                }
                if b.len() as u64 != f {
                    return SinkMatch::Diverges(Divergence {
                        step: b[0],
                        description: format!(
                            "sink {sink}: candidate block at step {} has {} of {f} spikes",
                            b[0],
                            b.len()
                        ),
                    });
                }
            }
            (Some(&o), None) => {
                return SinkMatch::Diverges(Divergence {
                    step: o,
                    description: format!(
                        "sink {sink}: original spike {} at step {o} has no candidate counterpart",
                        i + 1
                    ),
                })
            }
            (None, Some(b)) => {
                return SinkMatch::Diverges(Divergence {
                    step: b[0],
                    description: format!("sink {sink}: extra candidate spikes from step {}", b[0]),
                })
            }
            (None, None) => unreachable!(),
        }
    }
    SinkMatch::Ok
}

/// Pairs original sinks with candidate sinks: by id when every original sink
/// id is a candidate sink, otherwise by position.
type SinkPair<'a> = (&'a str, &'a [(u64, u64)], &'a [(u64, u64)]);

fn pair_sinks<'a>(original: &'a SinkSchedule, candidate: &'a SinkSchedule) -> Option<Vec<SinkPair<'a>>> {
    let by_id: Option<Vec<_>> =
        original.sinks.iter().map(|(s, a)| candidate.for_sink(s).map(|c| (s.as_str(), a.as_slice(), c))).collect();
    if let Some(p) = by_id {
        if original.sinks.len() == candidate.sinks.len() {
            return Some(p);
        }
    }
    (original.sinks.len() == candidate.sinks.len()).then(|| {
        original
            .sinks
            .iter()
            .zip(&candidate.sinks)
            .map(|((s, a), (_, c))| (s.as_str(), a.as_slice(), c.as_slice()))
            .collect()
    })
}

pub fn compare(
    original: &SystemDescription,
    candidate: &SystemDescription,
    horizon: u64,
    expected: Option<&Expectation>,
) -> Result<EquivalenceVerdict, EquivError> {
    if let Some(n) = candidate.neurons.iter().find(|n| n.max_delay() > 0) {
        return Err(EquivError::CandidateDelayed(n.id.clone()));
    }
    let orig = sink_schedule(original, horizon)?;
    let cand = sink_schedule(candidate, horizon)?;
    if orig.is_empty() && cand.is_empty() {
        return Err(EquivError::NothingObserved(horizon));
    }
    let margin = original.max_delay();
    let truncated = !(orig.halted && cand.halted);
    let mut factors: Vec<u64> =
        std::iter::once(1).chain(original.delays().into_iter().filter(|d| *d > 0).map(|d| 1 + d)).collect();
    factors.dedup();

    let mut verdict = EquivalenceVerdict {
        accepted: false,
        offset: None,
        sink_offsets: BTreeMap::new(),
        count_factors: BTreeMap::new(),
        first_divergence: None,
        compared_horizon: horizon,
        truncated,
        notes: Vec::new(),
        original: orig.clone(),
        candidate: cand.clone(),
    };
    if truncated {
        verdict.notes.push(format!("last {margin} steps plus the offset excluded from the comparison"));
    }

    let Some(pairs) = pair_sinks(&orig, &cand) else {
        verdict.first_divergence = Some(Divergence {
            step: 0,
            description: format!("original has {} sinks, candidate {}", orig.sinks.len(), cand.sinks.len()),
        });
        return Ok(verdict);
    };
    let pairs: Vec<(&str, Vec<u64>, Vec<u64>)> =
        pairs.into_iter().map(|(s, o, c)| (s, spike_times(o), spike_times(c))).collect();

    let window_for =
        |k: i64| Window { limit: truncated.then(|| horizon.saturating_sub(margin).saturating_sub(k.unsigned_abs())) };

    let factors_for = |sink: &str| -> Vec<u64> {
        match expected.and_then(|e| e.factors.get(sink)) {
            Some(f) => vec![*f],
            None => factors.clone(),
        }
    };

    // Offsets to try per sink: the expected one, or those implied by aligning
    // the first spikes under each admissible factor.
    let per_sink_given = expected.is_some_and(|e| !e.sink_offsets.is_empty());
    let candidates_k: BTreeSet<i64> = match expected.and_then(|e| e.offset) {
        Some(k) if !per_sink_given => BTreeSet::from([k]),
        _ => pairs.iter().filter_map(|(_, o, c)| Some(*c.first()? as i64 - *o.first()? as i64)).collect(),
    };

    let try_sink = |sink: &str, o: &[u64], c: &[u64], k: i64| -> Result<u64, Divergence> {
        let mut first_err = None;
        for f in factors_for(sink) {
            match match_sink(sink, o, c, k, f, &window_for(k)) {
                SinkMatch::Ok => return Ok(f),
                SinkMatch::Diverges(d) => {
                    first_err.get_or_insert(d);
                }
            }
        }
        Err(first_err.unwrap_or(Divergence { step: 0, description: format!("sink {sink}: no admissible factor") }))
    };

    let mut best: Option<(usize, Divergence)> = None;
    if per_sink_given {
        let e = expected.expect("checked above");
        let mut ok = true;
        for (sink, o, c) in &pairs {
            let Some(k) = e.offset_for(sink) else {
                verdict.notes.push(format!("no expected offset for sink {sink}"));
                ok = false;
                continue;
            };
            match try_sink(sink, o, c, k) {
                Ok(f) => {
                    verdict.sink_offsets.insert(sink.to_string(), k);
                    verdict.count_factors.insert(sink.to_string(), f);
                }
                Err(d) => {
                    ok = false;
                    best.get_or_insert((0, d));
                }
            }
        }
        if ok && best.is_none() {
            verdict.accepted = true;
            verdict.offset = uniform(&verdict.sink_offsets);
            return Ok(verdict);
        }
    } else {
        let mut ks: Vec<i64> = candidates_k.into_iter().collect();
        ks.sort_by_key(|k| (k.unsigned_abs(), *k));
        for k in ks {
            let mut offsets = BTreeMap::new();
            let mut facs = BTreeMap::new();
            let mut failed = None;
            for (i, (sink, o, c)) in pairs.iter().enumerate() {
                match try_sink(sink, o, c, k) {
                    Ok(f) => {
                        offsets.insert(sink.to_string(), k);
                        facs.insert(sink.to_string(), f);
                    }
                    Err(d) => {
                        failed = Some((i, d));
                        break;
                    }
                }
            }
            match failed {
                None => {
                    verdict.accepted = true;
                    verdict.offset = Some(k);
                    verdict.sink_offsets = offsets;
                    verdict.count_factors = facs;
                    return Ok(verdict);
                }
                Some((i, d)) => {
                    if best.as_ref().is_none_or(|(j, _)| i > *j) {
                        best = Some((i, d));
                    }
                }
            }
        }
    }
    verdict.sink_offsets.clear();
    verdict.count_factors.clear();
    verdict.offset = None;
    verdict.first_divergence = Some(
        best.map(|(_, d)| d)
            .unwrap_or(Divergence { step: 0, description: "no constant offset aligns the sink schedules".into() }),
    );
    Ok(verdict)
}

fn uniform(offsets: &BTreeMap<String, i64>) -> Option<i64> {
    let mut it = offsets.values();
    let first = *it.next()?;
    it.all(|v| *v == first).then_some(first)
}
