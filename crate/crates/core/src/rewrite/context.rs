use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::classify::Construct;
use crate::error::TransformError;
use crate::guard::UnaryGuard;
use crate::model::{Neuron, Rule, SystemDescription};

use super::{Construction, RewriteResult, TransformOutput};

/// Working state shared by the rewriters of one transform.
#[derive(Debug, Clone)]
pub struct RewriteContext {
    original: SystemDescription,
    system: SystemDescription,
    source: String,
    stream_len: u64,
    /// Neuron that starts the stream, once the source has been rewritten.
    emitter: Option<String>,
    gates: BTreeSet<String>,
    delayed_junctions: BTreeSet<String>,
    declared: BTreeMap<String, i64>,
    log: Vec<String>,
    touched: BTreeSet<String>,
    added: Vec<(String, String)>,
}

impl RewriteContext {
    pub fn new(system: &SystemDescription, stream_len: u64) -> Result<Self, TransformError> {
        let source = system.resolved_source().ok_or_else(|| TransformError::OutOfScope("no source neuron".into()))?;
        Ok(Self {
            original: system.clone(),
            system: system.clone(),
            source,
            stream_len,
            emitter: None,
            gates: BTreeSet::new(),
            delayed_junctions: BTreeSet::new(),
            declared: BTreeMap::new(),
            log: Vec::new(),
            touched: BTreeSet::new(),
            added: Vec::new(),
        })
    }

    pub fn original(&self) -> &SystemDescription {
        &self.original
    }

    pub fn system(&self) -> &SystemDescription {
        &self.system
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn stream_len(&self) -> u64 {
        self.stream_len
    }

    pub fn set_stream_len(&mut self, len: u64) {
        self.stream_len = len;
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }

    /// Starts a new journal for the next rewrite's fragment.
    pub fn begin(&mut self) {
        self.touched.clear();
        self.added.clear();
    }

    pub(crate) fn fresh_id(&self, base: &str) -> String {
        let mut id = base.to_string();
        let mut n = 2;
        while self.system.index_of(&id).is_some() {
            id = format!("{base}{n}");
            n += 1;
        }
        id
    }

    fn neuron_mut(&mut self, id: &str) -> Result<&mut Neuron, TransformError> {
        self.touched.insert(id.to_string());
        self.system.neuron_mut(id).ok_or_else(|| TransformError::OutOfScope(format!("unknown neuron {id}")))
    }

    pub(crate) fn single_rule(&self, id: &str) -> Result<Rule, TransformError> {
        let n = self.system.neuron(id).ok_or_else(|| TransformError::OutOfScope(format!("unknown neuron {id}")))?;
        n.rule().cloned().ok_or_else(|| TransformError::OutOfScope(format!("neuron {id} must have exactly one rule")))
    }

    pub fn replace_rule(&mut self, id: &str, rule: Rule) -> Result<(), TransformError> {
        self.neuron_mut(id)?.rules = vec![rule];
        Ok(())
    }

    pub fn set_initial_spikes(&mut self, id: &str, spikes: u64) -> Result<(), TransformError> {
        self.neuron_mut(id)?.initial_spikes = spikes;
        Ok(())
    }

    pub fn add_synapse(&mut self, from: &str, to: &str) {
        let s = (from.to_string(), to.to_string());
        if !self.system.synapses.contains(&s) {
            self.system.synapses.push(s.clone());
            self.added.push(s);
        }
    }

    pub fn remove_synapse(&mut self, from: &str, to: &str) {
        self.system.synapses.retain(|(f, t)| !(f == from && t == to));
    }

    /// Adds `neuron` right after `anchor` in declaration order.
    pub fn insert_neuron_after(&mut self, anchor: &str, neuron: Neuron) {
        let pos = self.system.index_of(anchor).map(|i| i + 1).unwrap_or(self.system.len());
        self.touched.insert(neuron.id.clone());
        self.system.neurons.insert(pos, neuron);
    }

    /// Adds `neuron` right before `anchor` in declaration order.
    pub fn insert_neuron_before(&mut self, anchor: &str, neuron: Neuron) {
        let pos = self.system.index_of(anchor).unwrap_or(0);
        self.touched.insert(neuron.id.clone());
        self.system.neurons.insert(pos, neuron);
    }

    pub fn strip_delay(&mut self, id: &str) -> Result<(), TransformError> {
        let rule = self.single_rule(id)?;
        self.replace_rule(id, rule.with_delay(0))
    }

    pub fn mark_delayed_junction(&mut self, id: &str) {
        self.delayed_junctions.insert(id.to_string());
    }

    pub fn is_gate(&self, id: &str) -> bool {
        self.gates.contains(id)
    }

    fn gate_rule(&self, produced: u64) -> Rule {
        Rule::new(UnaryGuard::exact(self.stream_len), self.stream_len, produced, 0)
    }

    /// Turns `id` into a gate `a^L -> a^b`. A delayed source gets a reservoir
    /// placed in front of it, which becomes the stream emitter. Returns the ids
    /// standing in for `id`.
    pub fn gate(&mut self, id: &str) -> Result<Vec<String>, TransformError> {
        let rule = self.single_rule(id)?;
        if rule.consumed != 1 || rule.guard.singleton() != Some(1) {
            return Err(TransformError::OutOfScope(format!(
                "delayed neuron {id} has rule {rule}; only single-spike relays can be gated"
            )));
        }
        let gate = self.gate_rule(rule.produced);
        self.replace_rule(id, gate)?;
        self.gates.insert(id.to_string());
        if id == self.source {
            let res = self.fresh_id(&format!("{id}_res"));
            self.insert_neuron_before(id, Neuron::new(res.clone(), self.stream_len, vec![Rule::reservoir()]));
            self.set_initial_spikes(id, 0)?;
            self.add_synapse(&res, id);
            self.emitter = Some(res.clone());
            self.note(format!("reservoir {res} with {} spikes placed before delayed source {id}", self.stream_len));
            return Ok(vec![res, id.to_string()]);
        }
        Ok(vec![id.to_string()])
    }

    /// Routes `from -> to` through a fresh gate and returns its id.
    pub fn insert_gate_on_edge(&mut self, from: &str, to: &str) -> String {
        let id = self.fresh_id(&format!("{from}_{to}_gate"));
        let gate = Neuron::new(id.clone(), 0, vec![self.gate_rule(1)]);
        self.insert_neuron_after(from, gate);
        self.remove_synapse(from, to);
        self.add_synapse(from, &id);
        self.add_synapse(&id, to);
        self.gates.insert(id.clone());
        id
    }

    /// Fixes the expected offset of a sink, for rewrites outside the stream mechanism.
    pub fn declare_offset(&mut self, sink: &str, offset: i64) {
        self.declared.insert(sink.to_string(), offset);
    }

    /// Packages the journal since [`RewriteContext::begin`] into a result.
    #[allow(clippy::too_many_arguments)]
    pub fn result(
        &self,
        construct: &Construct,
        construction: Construction,
        boundary_map: BTreeMap<String, Vec<String>>,
        expected_offset: i64,
        expected_count_factor: u64,
        needs_normalizer: bool,
        notes: Vec<String>,
    ) -> RewriteResult {
        let neurons = self.system.neurons.iter().filter(|n| self.touched.contains(&n.id)).cloned().collect();
        RewriteResult {
            construct: construct.clone(),
            construction,
            fragment: SystemDescription::new(neurons, self.added.clone()),
            boundary_map,
            expected_offset,
            expected_count_factor,
            needs_normalizer,
            notes,
        }
    }

    /// Completes a stream-based rewrite: turns the source into the emitter if
    /// no rewriter did, closes streams that reach non-relay neurons, and
    /// derives per-sink offsets and factors.
    pub fn finish(&mut self) -> Result<TransformOutput, TransformError> {
        self.begin();
        let emitter = match self.emitter.clone() {
            Some(e) => e,
            None => {
                let src = self.source.clone();
                let rule = self.single_rule(&src)?;
                if rule.consumed != 1 || rule.guard.singleton() != Some(1) || rule.delay != 0 {
                    return Err(TransformError::OutOfScope(format!(
                        "source {src} has rule {rule}; only single-spike relays can become reservoirs"
                    )));
                }
                self.replace_rule(&src, Rule { produced: rule.produced, ..Rule::reservoir() })?;
                self.set_initial_spikes(&src, self.stream_len)?;
                self.note(format!("source {src} turned into a reservoir with {} spikes", self.stream_len));
                self.emitter = Some(src.clone());
                src
            }
        };
        self.close_streams(&emitter)?;
        self.check_delayed_junctions()?;

        let original = timing_original(&self.original)?;
        let rewritten = timing_rewritten(&self.system, &emitter, self.stream_len)?;
        let mut sink_offsets = BTreeMap::new();
        let mut sink_factors = BTreeMap::new();
        for sink in self.original.resolved_sinks() {
            let before = original.get(&sink).copied();
            let after = rewritten.get(&sink).copied();
            if let (Some(b), Some((start, len))) = (before, after) {
                sink_offsets.insert(sink.clone(), start as i64 - b as i64);
                sink_factors.insert(sink.clone(), len);
            }
        }
        Ok(TransformOutput {
            system: self.system.clone(),
            results: Vec::new(),
            sink_offsets,
            sink_factors,
            stream_len: self.stream_len,
            log: self.log.clone(),
        })
    }

    /// Completes a rewrite that declared its sink offsets itself.
    pub fn finish_without_streams(&mut self) -> TransformOutput {
        let sinks = self.original.resolved_sinks();
        TransformOutput {
            system: self.system.clone(),
            results: Vec::new(),
            sink_offsets: sinks.iter().map(|s| (s.clone(), self.declared.get(s).copied().unwrap_or(0))).collect(),
            sink_factors: sinks.iter().map(|s| (s.clone(), 1)).collect(),
            stream_len: self.stream_len,
            log: self.log.clone(),
        }
    }

    fn is_stream_relay(&self, id: &str) -> bool {
        if self.gates.contains(id) || self.delayed_junctions.contains(id) || self.system.in_degree(id) != 1 {
            return false;
        }
        matches!(self.system.neuron(id).and_then(Neuron::rule),
            Some(r) if r.consumed == 1 && r.delay == 0 && r.guard.singleton() == Some(1))
    }

    fn close_streams(&mut self, emitter: &str) -> Result<(), TransformError> {
        let mut queue = VecDeque::from([emitter.to_string()]);
        let mut seen = BTreeSet::from([emitter.to_string()]);
        while let Some(u) = queue.pop_front() {
            let children: Vec<String> = self.system.out_neighbors(&u).map(str::to_string).collect();
            for v in children {
                if self.gates.contains(&v) || self.system.out_degree(&v) == 0 {
                    continue;
                }
                if self.is_stream_relay(&v) {
                    if seen.insert(v.clone()) {
                        queue.push_back(v);
                    }
                    continue;
                }
                let mergeable = u != emitter && self.is_stream_relay(&u) && self.system.out_degree(&u) == 1;
                if mergeable {
                    let rule = self.single_rule(&u)?;
                    let gate = self.gate_rule(rule.produced);
                    self.replace_rule(&u, gate)?;
                    self.gates.insert(u.clone());
                    self.note(format!("relay {u} closes the stream before {v}"));
                } else {
                    let g = self.insert_gate_on_edge(&u, &v);
                    self.note(format!("gate {g} closes the stream on {u} -> {v}"));
                }
            }
        }
        Ok(())
    }

    fn check_delayed_junctions(&self) -> Result<(), TransformError> {
        for j in &self.delayed_junctions {
            if let Some(p) = self.system.in_neighbors(j).find(|p| !self.gates.contains(*p)) {
                return Err(TransformError::OutOfScope(format!(
                    "delayed junction {j} has input {p} that does not carry the source stream"
                )));
            }
        }
        Ok(())
    }
}

fn topological(system: &SystemDescription) -> Result<Vec<String>, TransformError> {
    let mut indeg: BTreeMap<&str, usize> = system.neurons.iter().map(|n| (n.id.as_str(), 0)).collect();
    for (_, t) in &system.synapses {
        *indeg.get_mut(t.as_str()).expect("synapse endpoints exist") += 1;
    }
    let mut ready: VecDeque<&str> = system.neurons.iter().map(|n| n.id.as_str()).filter(|id| indeg[id] == 0).collect();
    let mut out = Vec::new();
    while let Some(u) = ready.pop_front() {
        out.push(u.to_string());
        for v in system.out_neighbors(u) {
            let d = indeg.get_mut(v).expect("synapse endpoints exist");
            *d -= 1;
            if *d == 0 {
                ready.push_back(v);
            }
        }
    }
    if out.len() != system.len() {
        return Err(TransformError::OutOfScope("timing analysis needs an acyclic system".into()));
    }
    Ok(out)
}

/// First arrival step at each sink of a delayed acyclic system. A neuron
/// fires the step after its last input arrives, and its spikes arrive at the
/// end of the step its delay elapses.
fn timing_original(system: &SystemDescription) -> Result<BTreeMap<String, u64>, TransformError> {
    let mut fire: BTreeMap<String, u64> = BTreeMap::new();
    let mut sinks = BTreeMap::new();
    for id in topological(system)? {
        let arrivals: Vec<u64> = system
            .in_neighbors(&id)
            .filter_map(|p| fire.get(p).map(|f| f + system.neuron(p).map(Neuron::max_delay).unwrap_or(0)))
            .collect();
        if system.out_degree(&id) == 0 {
            if let Some(first) = arrivals.iter().min() {
                sinks.insert(id.clone(), *first);
            }
            continue;
        }
        let t = if system.in_degree(&id) == 0 { Some(1) } else { arrivals.iter().max().map(|a| a + 1) };
        if let Some(t) = t {
            fire.insert(id, t);
        }
    }
    Ok(sinks)
}

/// First arrival step and stream length at each sink of a rewritten system.
fn timing_rewritten(
    system: &SystemDescription,
    emitter: &str,
    stream_len: u64,
) -> Result<BTreeMap<String, (u64, u64)>, TransformError> {
    let mut emit: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    let mut sinks = BTreeMap::new();
    for id in topological(system)? {
        let inputs: Vec<(u64, u64)> = system.in_neighbors(&id).filter_map(|p| emit.get(p).copied()).collect();
        if system.out_degree(&id) == 0 {
            if let Some(start) = inputs.iter().map(|i| i.0).min() {
                let len = inputs.iter().map(|i| i.1).max().unwrap_or(1);
                sinks.insert(id.clone(), (start, len));
            }
            continue;
        }
        if id == emitter {
            emit.insert(id, (1, stream_len));
            continue;
        }
        let relay = matches!(system.neuron(&id).and_then(Neuron::rule),
            Some(r) if r.consumed == 1 && r.guard.singleton() == Some(1));
        let e = match inputs.as_slice() {
            [] => None,
            [(s, l)] if relay => Some((s + 1, *l)),
            _ => inputs.iter().map(|(s, l)| s + l - 1).max().map(|last| (last + 1, 1)),
        };
        if let Some(e) = e {
            emit.insert(id, e);
        }
    }
    Ok(sinks)
}
