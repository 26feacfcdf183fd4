//! Checks against the restricted class handled by the delay eliminator:
//! one rule per neuron, a single source holding the only spike, sinks
//! without outgoing synapses, and no delay increase along a path whose
//! upstream neuron may fire more than once.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classify::cyclic_components;
use crate::model::SystemDescription;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MultiRule { neuron: String, rules: usize },
    NoSource,
    SourceHasIncoming { neuron: String },
    NoSink,
    SinkHasOutgoing { neuron: String },
    InitialSpikes { neuron: String, spikes: u64, expected: u64 },
    LostSpikeRisk { from: String, to: String, from_delay: u64, to_delay: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultiRule { neuron, rules } => write!(f, "multi-rule: neuron {neuron} has {rules} rules"),
            Violation::NoSource => write!(f, "source: no source neuron can be identified"),
            Violation::SourceHasIncoming { neuron } => {
                write!(f, "source: {neuron} has incoming synapses outside an iteration")
            }
            Violation::NoSink => write!(f, "sink: no neuron without outgoing synapses"),
            Violation::SinkHasOutgoing { neuron } => write!(f, "sink: {neuron} has outgoing synapses"),
            Violation::InitialSpikes { neuron, spikes, expected } => {
                write!(f, "initial-spikes: {neuron} holds {spikes}, expected {expected}")
            }
            Violation::LostSpikeRisk { from, to, from_delay, to_delay } => write!(
                f,
                "lost-spike-risk: {from} (delay {from_delay}) -> {to} (delay {to_delay}); spikes may reach a closed neuron"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_lost_spike_risk(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::LostSpikeRisk { .. }))
    }

    /// Violations other than lost-spike risks.
    pub fn structural(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !matches!(v, Violation::LostSpikeRisk { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_restricted(system: &SystemDescription) -> ValidationReport {
    let mut violations = Vec::new();
    let cycles = cyclic_components(system);
    let on_cycle: BTreeSet<&str> = cycles.iter().flatten().map(String::as_str).collect();
    let same_cycle = |a: &str, b: &str| cycles.iter().any(|c| c.iter().any(|x| x == a) && c.iter().any(|x| x == b));

    for n in &system.neurons {
        if n.rules.len() > 1 {
            violations.push(Violation::MultiRule { neuron: n.id.clone(), rules: n.rules.len() });
        }
    }

    let source = system.resolved_source();
    match &source {
        None => violations.push(Violation::NoSource),
        Some(s) => {
            if system.in_degree(s) > 0 && !on_cycle.contains(s.as_str()) {
                violations.push(Violation::SourceHasIncoming { neuron: s.clone() });
            }
        }
    }

    let sinks = system.resolved_sinks();
    if sinks.is_empty() {
        violations.push(Violation::NoSink);
    }
    for s in &sinks {
        if system.out_degree(s) > 0 {
            violations.push(Violation::SinkHasOutgoing { neuron: s.clone() });
        }
    }

    for n in &system.neurons {
        let expected = u64::from(source.as_deref() == Some(n.id.as_str()));
        if n.initial_spikes != expected {
            violations.push(Violation::InitialSpikes { neuron: n.id.clone(), spikes: n.initial_spikes, expected });
        }
    }

    let repeaters = may_fire_repeatedly(system, &on_cycle);
    for (from, to) in &system.synapses {
        let (Some(u), Some(v)) = (system.neuron(from), system.neuron(to)) else { continue };
        let (du, dv) = (u.max_delay(), v.max_delay());
        if du < dv && (du > 0 || repeaters.contains(from.as_str())) && !same_cycle(from, to) {
            violations.push(Violation::LostSpikeRisk {
                from: from.clone(),
                to: to.clone(),
                from_delay: du,
                to_delay: dv,
            });
        }
    }

    ValidationReport { violations }
}

/// Conservative over-approximation of neurons that can fire more than once.
fn may_fire_repeatedly<'a>(system: &'a SystemDescription, on_cycle: &BTreeSet<&'a str>) -> BTreeSet<&'a str> {
    let mut seeds: Vec<&str> = Vec::new();
    for n in &system.neurons {
        let indeg = system.in_degree(&n.id) as u64;
        let splits_input = n.rule().is_some_and(|r| indeg >= 2 && r.consumed < indeg);
        if n.initial_spikes >= 2 || on_cycle.contains(n.id.as_str()) || splits_input {
            seeds.push(&n.id);
        }
    }
    let mut out = BTreeSet::new();
    while let Some(id) = seeds.pop() {
        if out.insert(id) {
            seeds.extend(system.out_neighbors(id));
        }
    }
    out
}
