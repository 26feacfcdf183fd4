//! The canonical single-construct systems, built from ids and delays and
//! passed through [`transform`](super::transform).

use crate::error::TransformError;
use crate::guard::UnaryGuard;
use crate::model::{Neuron, Rule, SystemDescription};

use super::{transform, RewriteResult, TransformOutput};

/// A construct system together with its delay-free rewrite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentRewrite {
    pub original: SystemDescription,
    pub output: TransformOutput,
}

impl FragmentRewrite {
    /// The rewrite applied to the construct, if there was a delay to remove.
    pub fn result(&self) -> Option<&RewriteResult> {
        self.output.results.first()
    }

    pub fn system(&self) -> &SystemDescription {
        &self.output.system
    }

    fn build(original: SystemDescription) -> Result<Self, TransformError> {
        let output = transform(&original)?;
        Ok(Self { original, output })
    }
}

fn relay(id: &str, spikes: u64, d: u64) -> Neuron {
    Neuron::new(id, spikes, vec![Rule::exact(1, 1, d)])
}

fn delay_at(delays: &[u64], i: usize) -> u64 {
    delays.get(i).copied().unwrap_or(0)
}

fn edge(a: &str, b: &str) -> (String, String) {
    (a.to_string(), b.to_string())
}

/// Chain `path[0] -> ... -> path[n-1]`; the last neuron is the sink and
/// `delays[i]` belongs to `path[i]`.
pub fn eliminate_sequential<S: AsRef<str>>(path: &[S], delays: &[u64]) -> Result<FragmentRewrite, TransformError> {
    let ids: Vec<&str> = path.iter().map(AsRef::as_ref).collect();
    if ids.len() < 2 {
        return Err(TransformError::OutOfScope("a chain needs at least two neurons".into()));
    }
    let last = ids.len() - 1;
    let neurons = ids
        .iter()
        .enumerate()
        .map(|(i, id)| if i == last { Neuron::empty(*id) } else { relay(id, u64::from(i == 0), delay_at(delays, i)) })
        .collect();
    let synapses = ids.windows(2).map(|w| edge(w[0], w[1])).collect();
    FragmentRewrite::build(SystemDescription::new(neurons, synapses))
}

/// Two-neuron cycle starting at `cycle[0]` (the source), with `cycle[1]`
/// feeding every tap. `delays` are aligned with `cycle`.
pub fn eliminate_iteration<S: AsRef<str>>(
    cycle: &[S],
    taps: &[S],
    delays: &[u64],
) -> Result<FragmentRewrite, TransformError> {
    let ids: Vec<&str> = cycle.iter().map(AsRef::as_ref).collect();
    let [s, w] = ids.as_slice() else {
        return Err(TransformError::OutOfScope(format!(
            "iteration over {} neurons; only two-neuron cycles are supported",
            ids.len()
        )));
    };
    let mut neurons = vec![relay(s, 1, delay_at(delays, 0)), relay(w, 0, delay_at(delays, 1))];
    let mut synapses = vec![edge(s, w), edge(w, s)];
    for t in taps {
        neurons.push(Neuron::empty(t.as_ref()));
        synapses.push(edge(w, t.as_ref()));
    }
    FragmentRewrite::build(SystemDescription::new(neurons, synapses).with_source(*s))
}

/// `parent` splitting into `children`, each child feeding its own sink
/// `<child>_out`. A delayed parent is fed by a fresh source `<parent>_in`.
/// `delays` are aligned with `[parent, children..]`.
pub fn eliminate_split<S: AsRef<str>>(
    parent: &str,
    children: &[S],
    delays: &[u64],
) -> Result<FragmentRewrite, TransformError> {
    let mut neurons = Vec::new();
    let mut synapses = Vec::new();
    let dp = delay_at(delays, 0);
    if dp > 0 {
        let feeder = format!("{parent}_in");
        neurons.push(relay(&feeder, 1, 0));
        neurons.push(relay(parent, 0, dp));
        synapses.push(edge(&feeder, parent));
    } else {
        neurons.push(relay(parent, 1, 0));
    }
    for (i, c) in children.iter().enumerate() {
        let c = c.as_ref();
        neurons.push(relay(c, 0, delay_at(delays, i + 1)));
        synapses.push(edge(parent, c));
    }
    for c in children {
        let out = format!("{}_out", c.as_ref());
        neurons.push(Neuron::empty(out.clone()));
        synapses.push(edge(c.as_ref(), &out));
    }
    FragmentRewrite::build(SystemDescription::new(neurons, synapses))
}

/// `parents` joining at `junction` (rule `a^p -> a`), which feeds the sink
/// `child`. `parents[0]` is the source and also feeds the other parents.
/// `delays` are aligned with `[parents.., junction]`.
pub fn eliminate_join<S: AsRef<str>>(
    parents: &[S],
    junction: &str,
    child: &str,
    delays: &[u64],
) -> Result<FragmentRewrite, TransformError> {
    let ids: Vec<&str> = parents.iter().map(AsRef::as_ref).collect();
    if ids.len() < 2 {
        return Err(TransformError::OutOfScope("a join needs at least two parents".into()));
    }
    let p = ids.len() as u64;
    let mut neurons: Vec<Neuron> =
        ids.iter().enumerate().map(|(i, id)| relay(id, u64::from(i == 0), delay_at(delays, i))).collect();
    neurons.push(Neuron::new(junction, 0, vec![Rule::new(UnaryGuard::exact(p), p, 1, delay_at(delays, ids.len()))]));
    neurons.push(Neuron::empty(child));
    let mut synapses: Vec<_> = ids[1..].iter().map(|id| edge(ids[0], id)).collect();
    synapses.extend(ids.iter().map(|id| edge(id, junction)));
    synapses.push(edge(junction, child));
    FragmentRewrite::build(SystemDescription::new(neurons, synapses))
}
