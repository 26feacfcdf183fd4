//! Static description of a spiking neural P system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::guard::UnaryGuard;

/// `E/a^c -> a^b; d`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub guard: UnaryGuard,
    pub consumed: u64,
    pub produced: u64,
    pub delay: u64,
}

impl Rule {
    pub fn new(guard: UnaryGuard, consumed: u64, produced: u64, delay: u64) -> Self {
        Self { guard, consumed, produced, delay }
    }

    /// `a^c -> a^b` with an exact guard.
    pub fn exact(consumed: u64, produced: u64, delay: u64) -> Self {
        Self::new(UnaryGuard::exact(consumed), consumed, produced, delay)
    }

    /// `a -> a`
    pub fn relay() -> Self {
        Self::exact(1, 1, 0)
    }

    /// `a^+/a -> a`, fires once per step while any spike is stored.
    pub fn reservoir() -> Self {
        Self::new(UnaryGuard::positive(), 1, 1, 0)
    }

    pub fn is_forgetting(&self) -> bool {
        self.produced == 0
    }

    /// True for the plain relay `a -> a` without delay.
    pub fn is_relay(&self) -> bool {
        self.consumed == 1 && self.produced == 1 && self.delay == 0 && self.guard.singleton() == Some(1)
    }

    pub fn with_delay(&self, delay: u64) -> Self {
        Self { delay, ..self.clone() }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.guard == UnaryGuard::exact(self.consumed) {
            match self.consumed {
                1 => write!(f, "a")?,
                c => write!(f, "a^{c}")?,
            }
        } else {
            write!(f, "{}/", self.guard)?;
            match self.consumed {
                1 => write!(f, "a")?,
                c => write!(f, "a^{c}")?,
            }
        }
        write!(f, " -> ")?;
        match self.produced {
            0 => write!(f, "lambda")?,
            1 => write!(f, "a")?,
            b => write!(f, "a^{b}")?,
        }
        if self.delay > 0 {
            write!(f, "; {}", self.delay)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: String,
    pub initial_spikes: u64,
    pub rules: Vec<Rule>,
}

impl Neuron {
    pub fn new(id: impl Into<String>, initial_spikes: u64, rules: Vec<Rule>) -> Self {
        Self { id: id.into(), initial_spikes, rules }
    }

    /// A neuron without rules, typically a sink.
    pub fn empty(id: impl Into<String>) -> Self {
        Self::new(id, 0, Vec::new())
    }

    pub fn max_delay(&self) -> u64 {
        self.rules.iter().map(|r| r.delay).max().unwrap_or(0)
    }

    /// The rule of a single-rule neuron.
    pub fn rule(&self) -> Option<&Rule> {
        match self.rules.as_slice() {
            [r] => Some(r),
            _ => None,
        }
    }
}

/// Neurons, synapses and the designated source and sinks.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SystemDescription {
    pub neurons: Vec<Neuron>,
    pub synapses: Vec<(String, String)>,
    pub source: Option<String>,
    pub sinks: Vec<String>,
}

impl SystemDescription {
    pub fn new(neurons: Vec<Neuron>, synapses: Vec<(String, String)>) -> Self {
        Self { neurons, synapses, source: None, sinks: Vec::new() }
    }

    pub fn with_source(mut self, id: impl Into<String>) -> Self {
        self.source = Some(id.into());
        self
    }

    pub fn with_sink(mut self, id: impl Into<String>) -> Self {
        self.sinks.push(id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.neurons.iter().position(|n| n.id == id)
    }

    pub fn neuron(&self, id: &str) -> Option<&Neuron> {
        self.neurons.iter().find(|n| n.id == id)
    }

    pub fn neuron_mut(&mut self, id: &str) -> Option<&mut Neuron> {
        self.neurons.iter_mut().find(|n| n.id == id)
    }

    pub fn has_synapse(&self, from: &str, to: &str) -> bool {
        self.synapses.iter().any(|(f, t)| f == from && t == to)
    }

    pub fn out_neighbors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.synapses.iter().filter(move |(f, _)| f == id).map(|(_, t)| t.as_str())
    }

    pub fn in_neighbors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.synapses.iter().filter(move |(_, t)| t == id).map(|(f, _)| f.as_str())
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.out_neighbors(id).count()
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.in_neighbors(id).count()
    }

    /// Declared source, else the unique neuron without incoming synapses,
    /// else the unique neuron holding initial spikes.
    pub fn resolved_source(&self) -> Option<String> {
        if let Some(s) = &self.source {
            return Some(s.clone());
        }
        let roots: Vec<_> = self.neurons.iter().filter(|n| self.in_degree(&n.id) == 0).collect();
        if let [only] = roots.as_slice() {
            return Some(only.id.clone());
        }
        let loaded: Vec<_> = self.neurons.iter().filter(|n| n.initial_spikes > 0).collect();
        match loaded.as_slice() {
            [only] => Some(only.id.clone()),
            _ => None,
        }
    }

    /// Declared sinks, else every neuron without outgoing synapses, in declaration order.
    pub fn resolved_sinks(&self) -> Vec<String> {
        if !self.sinks.is_empty() {
            return self.sinks.clone();
        }
        self.neurons.iter().filter(|n| self.out_degree(&n.id) == 0).map(|n| n.id.clone()).collect()
    }

    pub fn max_delay(&self) -> u64 {
        self.neurons.iter().map(Neuron::max_delay).max().unwrap_or(0)
    }

    pub fn delay_sum(&self) -> u64 {
        self.neurons.iter().flat_map(|n| &n.rules).map(|r| r.delay).sum()
    }

    pub fn is_delay_free(&self) -> bool {
        self.max_delay() == 0
    }

    /// Delays of all delayed rules, deduplicated.
    pub fn delays(&self) -> BTreeSet<u64> {
        self.neurons.iter().flat_map(|n| &n.rules).map(|r| r.delay).filter(|d| *d > 0).collect()
    }

    /// Step budget used when a caller does not give a horizon.
    pub fn default_horizon(&self) -> u64 {
        (10 * (1 + self.delay_sum()) * self.len().max(1) as u64).max(1)
    }

    /// Neurons reachable from `id` along synapses, including `id`.
    pub fn reachable_from(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                stack.extend(self.out_neighbors(&n).map(str::to_string));
            }
        }
        seen
    }

    /// Renames neurons; ids missing from the map are kept.
    pub fn renamed(&self, map: &BTreeMap<String, String>) -> Self {
        let r = |id: &String| map.get(id).cloned().unwrap_or_else(|| id.clone());
        Self {
            neurons: self.neurons.iter().map(|n| Neuron { id: r(&n.id), ..n.clone() }).collect(),
            synapses: self.synapses.iter().map(|(f, t)| (r(f), r(t))).collect(),
            source: self.source.as_ref().map(r),
            sinks: self.sinks.iter().map(r).collect(),
        }
    }

    /// Routes every synapse entering `sink` through a fresh relay neuron `relay_id`.
    pub fn with_relay_before(&self, sink: &str, relay_id: &str) -> Self {
        self.with_neuron_before(sink, Neuron::new(relay_id, 0, vec![Rule::relay()]))
    }

    /// Routes every synapse entering `target` through `inserted`.
    pub fn with_neuron_before(&self, target: &str, inserted: Neuron) -> Self {
        let mut out = self.clone();
        let id = inserted.id.clone();
        for (_, t) in out.synapses.iter_mut() {
            if t == target {
                *t = id.clone();
            }
        }
        out.synapses.push((id.clone(), target.to_string()));
        let pos = out.index_of(target).unwrap_or(out.neurons.len());
        out.neurons.insert(pos, inserted);
        out
    }
}
