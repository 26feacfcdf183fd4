//! Reference executor for the synchronous semantics with delays.
//!
//! One global step `t` runs in three phases:
//!
//! 1. closed neurons count down; a neuron whose counter reaches zero is open
//!    again and releases its held emission in this step,
//! 2. every open neuron without a held emission applies its enabled rule
//!    against the spikes it held at the start of the step; a delayed rule
//!    closes the neuron for `d` steps and holds the emission,
//! 3. releasing neurons and neurons that applied an undelayed rule send
//!    their spikes; a batch aimed at a closed neuron is lost.
//!
//! Spikes delivered in step `t` are usable from step `t + 1`, and a neuron
//! releasing in step `t` can apply its next rule in step `t + 1`.

use std::fmt;

use serde::Serialize;

use crate::error::SimError;
use crate::model::{Neuron, SystemDescription};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct NeuronState {
    pub spikes: u64,
    pub remaining_closed: u64,
    pub pending_emission: Option<u64>,
}

impl NeuronState {
    pub fn is_open(&self) -> bool {
        self.remaining_closed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub states: Vec<NeuronState>,
    pub clock: u64,
}

impl Configuration {
    pub fn spike_vector(&self) -> Vec<u64> {
        self.states.iter().map(|s| s.spikes).collect()
    }

    pub fn total_spikes(&self) -> u64 {
        self.states.iter().map(|s| s.spikes).sum()
    }
}

/// Renders `n1/t1 n2/t2 ...`.
impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}/{}", s.spikes, s.remaining_closed)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    RuleApplied { neuron: String, rule: usize },
    SpikesDelivered { from: String, to: String, count: u64 },
    SpikesLost { from: String, to: String, count: u64 },
    NeuronOpened { neuron: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::RuleApplied { .. } => "rule-applied",
            EventKind::SpikesDelivered { .. } => "spikes-delivered",
            EventKind::SpikesLost { .. } => "spikes-lost",
            EventKind::NeuronOpened { .. } => "neuron-opened",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} {}", self.step, self.kind.name())?;
        match &self.kind {
            EventKind::RuleApplied { neuron, rule } => write!(f, " neuron={neuron} rule={rule}"),
            EventKind::SpikesDelivered { from, to, count } | EventKind::SpikesLost { from, to, count } => {
                write!(f, " from={from} to={to} count={count}")
            }
            EventKind::NeuronOpened { neuron } => write!(f, " neuron={neuron}"),
        }
    }
}

/// Flat record used for the line-delimited JSON trace.
#[derive(Debug, Clone, Serialize)]
pub struct EventRecord<'a> {
    pub step: u64,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neuron: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<usize>,
}

impl TraceEvent {
    pub fn record(&self) -> EventRecord<'_> {
        let mut r = EventRecord {
            step: self.step,
            kind: self.kind.name(),
            from: None,
            to: None,
            count: None,
            neuron: None,
            rule: None,
        };
        match &self.kind {
            EventKind::RuleApplied { neuron, rule } => {
                r.neuron = Some(neuron);
                r.rule = Some(*rule);
            }
            EventKind::SpikesDelivered { from, to, count } | EventKind::SpikesLost { from, to, count } => {
                r.from = Some(from);
                r.to = Some(to);
                r.count = Some(*count);
            }
            EventKind::NeuronOpened { neuron } => r.neuron = Some(neuron),
        }
        r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    /// Configuration after every step, starting with the initial one.
    pub configurations: Vec<Configuration>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SinkRecord {
    /// Per sink, in sink order: `(arrival step, count)`.
    pub arrivals: Vec<(String, Vec<(u64, u64)>)>,
    pub total_spikes: u64,
    pub first_arrival: Option<u64>,
    pub total_runtime: Option<u64>,
}

impl SinkRecord {
    pub fn for_sink(&self, id: &str) -> Option<&[(u64, u64)]> {
        self.arrivals.iter().find(|(s, _)| s == id).map(|(_, a)| a.as_slice())
    }

    pub fn count_at(&self, id: &str) -> u64 {
        self.for_sink(id).map(|a| a.iter().map(|(_, c)| c).sum()).unwrap_or(0)
    }

    pub fn first_arrival_at(&self, id: &str) -> Option<u64> {
        self.for_sink(id).and_then(|a| a.first().map(|(t, _)| *t))
    }

    pub fn last_arrival_at(&self, id: &str) -> Option<u64> {
        self.for_sink(id).and_then(|a| a.last().map(|(t, _)| *t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub trace: Trace,
    pub sinks: SinkRecord,
    pub halted: bool,
}

pub fn initial_configuration(system: &SystemDescription) -> Configuration {
    Configuration {
        states: system
            .neurons
            .iter()
            .map(|n| NeuronState { spikes: n.initial_spikes, ..NeuronState::default() })
            .collect(),
        clock: 0,
    }
}

/// Index of the rule the neuron applies now, if any.
pub fn enabled_rule(neuron: &Neuron, state: &NeuronState) -> Result<Option<usize>, SimError> {
    if !state.is_open() || state.pending_emission.is_some() {
        return Ok(None);
    }
    let enabled: Vec<usize> = neuron
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| state.spikes >= r.consumed && r.guard.matches(state.spikes))
        .map(|(i, _)| i)
        .collect();
    match enabled.as_slice() {
        [] => Ok(None),
        [i] => Ok(Some(*i)),
        _ => Err(SimError::Nondeterministic { neuron: neuron.id.clone(), rules: enabled }),
    }
}

/// A system compiled to index-based adjacency.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    system: &'a SystemDescription,
    targets: Vec<Vec<usize>>,
    sinks: Vec<usize>,
}

impl<'a> Simulator<'a> {
    pub fn new(system: &'a SystemDescription) -> Self {
        let mut targets = vec![Vec::new(); system.len()];
        for (f, t) in &system.synapses {
            if let (Some(a), Some(b)) = (system.index_of(f), system.index_of(t)) {
                targets[a].push(b);
            }
        }
        let sinks = system.resolved_sinks().iter().filter_map(|s| system.index_of(s)).collect();
        Self { system, targets, sinks }
    }

    pub fn system(&self) -> &SystemDescription {
        self.system
    }

    fn check_shape(&self, config: &Configuration) -> Result<(), SimError> {
        if config.states.len() != self.system.len() {
            return Err(SimError::ShapeMismatch { expected: self.system.len(), found: config.states.len() });
        }
        Ok(())
    }

    pub fn step(&self, config: &Configuration) -> Result<(Configuration, Vec<TraceEvent>), SimError> {
        self.check_shape(config)?;
        let neurons = &self.system.neurons;
        let mut next = config.clone();
        next.clock += 1;
        let t = next.clock;
        let mut events = Vec::new();
        // (neuron index, spikes per synapse)
        let mut emitters: Vec<(usize, u64)> = Vec::new();

        for (i, st) in next.states.iter_mut().enumerate() {
            if st.remaining_closed > 0 {
                st.remaining_closed -= 1;
                if st.remaining_closed == 0 {
                    events
                        .push(TraceEvent { step: t, kind: EventKind::NeuronOpened { neuron: neurons[i].id.clone() } });
                    if let Some(b) = st.pending_emission.take() {
                        emitters.push((i, b));
                    }
                }
            }
        }
        let releasing: Vec<usize> = emitters.iter().map(|(i, _)| *i).collect();

        for (i, neuron) in neurons.iter().enumerate() {
            if releasing.contains(&i) {
                continue;
            }
            let st = &mut next.states[i];
            if let Some(r) = enabled_rule(neuron, st)? {
                let rule = &neuron.rules[r];
                st.spikes -= rule.consumed;
                events
                    .push(TraceEvent { step: t, kind: EventKind::RuleApplied { neuron: neuron.id.clone(), rule: r } });
                if rule.delay == 0 {
                    emitters.push((i, rule.produced));
                } else {
                    st.remaining_closed = rule.delay;
                    st.pending_emission = Some(rule.produced);
                }
            }
        }

        emitters.sort_by_key(|(i, _)| *i);
        for (i, b) in emitters {
            if b == 0 {
                continue;
            }
            for &j in &self.targets[i] {
                let (from, to) = (neurons[i].id.clone(), neurons[j].id.clone());
                if next.states[j].is_open() {
                    next.states[j].spikes += b;
                    events.push(TraceEvent { step: t, kind: EventKind::SpikesDelivered { from, to, count: b } });
                } else {
                    events.push(TraceEvent { step: t, kind: EventKind::SpikesLost { from, to, count: b } });
                }
            }
        }
        Ok((next, events))
    }

    /// No held emission, no closed neuron and no enabled rule.
    pub fn is_quiescent(&self, config: &Configuration) -> Result<bool, SimError> {
        self.check_shape(config)?;
        for (n, st) in self.system.neurons.iter().zip(&config.states) {
            if st.pending_emission.is_some() || !st.is_open() || enabled_rule(n, st)?.is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn run(&self, horizon: u64) -> Result<RunOutcome, SimError> {
        self.run_from(initial_configuration(self.system), horizon)
    }

    pub fn run_from(&self, start: Configuration, horizon: u64) -> Result<RunOutcome, SimError> {
        if horizon == 0 {
            return Err(SimError::ZeroHorizon);
        }
        let mut config = start;
        let mut trace = Trace { events: Vec::new(), configurations: vec![config.clone()] };
        let mut arrivals: Vec<Vec<(u64, u64)>> = vec![Vec::new(); self.sinks.len()];
        let mut halted = false;
        loop {
            if self.is_quiescent(&config)? {
                halted = true;
                break;
            }
            if config.clock >= horizon {
                break;
            }
            let (next, events) = self.step(&config)?;
            for (k, &s) in self.sinks.iter().enumerate() {
                let sink_id = &self.system.neurons[s].id;
                let got: u64 = events
                    .iter()
                    .filter_map(|e| match &e.kind {
                        EventKind::SpikesDelivered { to, count, .. } if to == sink_id => Some(*count),
                        _ => None,
                    })
                    .sum();
                if got > 0 {
                    arrivals[k].push((next.clock, got));
                }
            }
            trace.events.extend(events);
            trace.configurations.push(next.clone());
            config = next;
        }

        let sink_ids: Vec<String> = self.sinks.iter().map(|&s| self.system.neurons[s].id.clone()).collect();
        let total_spikes = arrivals.iter().flatten().map(|(_, c)| c).sum();
        let first_arrival = arrivals.iter().filter_map(|a| a.first().map(|(t, _)| *t)).min();
        let total_runtime = arrivals.iter().filter_map(|a| a.last().map(|(t, _)| *t)).max();
        Ok(RunOutcome {
            trace,
            sinks: SinkRecord {
                arrivals: sink_ids.into_iter().zip(arrivals).collect(),
                total_spikes,
                first_arrival,
                total_runtime,
            },
            halted,
        })
    }
}

pub fn step(system: &SystemDescription, config: &Configuration) -> Result<(Configuration, Vec<TraceEvent>), SimError> {
    Simulator::new(system).step(config)
}

pub fn run(system: &SystemDescription, horizon: u64) -> Result<RunOutcome, SimError> {
    Simulator::new(system).run(horizon)
}

pub fn lost_spike_count(trace: &Trace) -> u64 {
    trace
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::SpikesLost { count, .. } => Some(count),
            _ => None,
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;
    use crate::UnaryGuard;

    fn walkthrough(x: u64) -> SystemDescription {
        SystemDescription::new(
            vec![
                Neuron::new("s1", x, vec![Rule::new(UnaryGuard::positive(), 1, 1, 2)]),
                Neuron::new("s2", 0, vec![Rule::relay()]),
                Neuron::empty("s3"),
            ],
            vec![("s1".into(), "s2".into()), ("s2".into(), "s3".into())],
        )
    }

    fn cfg(pairs: &[(u64, u64)]) -> String {
        pairs.iter().map(|(n, t)| format!("{n}/{t}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn walkthrough_steps() {
        let x = 7;
        let sys = walkthrough(x);
        let sim = Simulator::new(&sys);
        let mut c = initial_configuration(&sys);
        assert_eq!(c.to_string(), cfg(&[(x, 0), (0, 0), (0, 0)]));
        let expected = [
            [(x - 1, 2), (0, 0), (0, 0)],
            [(x - 1, 1), (0, 0), (0, 0)],
            [(x - 1, 0), (1, 0), (0, 0)],
            [(x - 2, 2), (0, 0), (1, 0)],
        ];
        for e in expected {
            c = sim.step(&c).unwrap().0;
            assert_eq!(c.to_string(), cfg(&e));
        }
    }

    #[test]
    fn closed_neuron_has_no_enabled_rule() {
        let n = Neuron::new("s1", 5, vec![Rule::new(UnaryGuard::positive(), 1, 1, 2)]);
        let open = NeuronState { spikes: 5, ..Default::default() };
        assert_eq!(enabled_rule(&n, &open).unwrap(), Some(0));
        let closed = NeuronState { spikes: 5, remaining_closed: 1, pending_emission: Some(1) };
        assert_eq!(enabled_rule(&n, &closed).unwrap(), None);
        let two = Neuron::new("s2", 0, vec![Rule::exact(2, 1, 0)]);
        assert_eq!(enabled_rule(&two, &NeuronState { spikes: 1, ..Default::default() }).unwrap(), None);
    }

    #[test]
    fn two_enabled_rules_is_an_error() {
        let n = Neuron::new("s1", 1, vec![Rule::relay(), Rule::new(UnaryGuard::positive(), 1, 0, 0)]);
        let err = enabled_rule(&n, &NeuronState { spikes: 1, ..Default::default() }).unwrap_err();
        assert!(matches!(err, SimError::Nondeterministic { .. }));
    }

    #[test]
    fn empty_system_is_a_fixpoint() {
        let sys = walkthrough(0);
        let c = initial_configuration(&sys);
        let (next, events) = step(&sys, &c).unwrap();
        assert_eq!(next.states, c.states);
        assert!(events.is_empty());
        let out = run(&sys, 5).unwrap();
        assert!(out.halted);
        assert_eq!(out.sinks.total_spikes, 0);
    }

    #[test]
    fn increasing_delay_loses_spikes() {
        let sys = SystemDescription::new(
            vec![
                Neuron::new("s1", 2, vec![Rule::new(UnaryGuard::positive(), 1, 1, 1)]),
                Neuron::new("s2", 0, vec![Rule::exact(1, 1, 3)]),
                Neuron::empty("s3"),
            ],
            vec![("s1".into(), "s2".into()), ("s2".into(), "s3".into())],
        );
        let out = run(&sys, 8).unwrap();
        assert_eq!(lost_spike_count(&out.trace), 1);
        let lost: Vec<_> = out.trace.events.iter().filter(|e| matches!(e.kind, EventKind::SpikesLost { .. })).collect();
        assert_eq!(lost[0].step, 4);
    }

    #[test]
    fn zero_horizon_rejected() {
        assert_eq!(run(&walkthrough(1), 0).unwrap_err(), SimError::ZeroHorizon);
    }

    #[test]
    fn event_text_and_record() {
        let e =
            TraceEvent { step: 3, kind: EventKind::SpikesDelivered { from: "s1".into(), to: "s2".into(), count: 1 } };
        assert_eq!(e.to_string(), "t=3 spikes-delivered from=s1 to=s2 count=1");
        let json = serde_json::to_string(&e.record()).unwrap();
        assert_eq!(json, r#"{"step":3,"kind":"spikes-delivered","from":"s1","to":"s2","count":1}"#);
    }
}
