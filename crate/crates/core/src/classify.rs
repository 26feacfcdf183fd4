//! Decomposition of a system's synapses into the four routing constructs.
//!
//! Cycles are found first so that branch points caused by an iteration
//! (a cycle neuron with taps, or a cycle neuron with an entry edge) are not
//! reported as splits or joins. Remaining branch points become splits and
//! joins, and every synapse still uncovered is grouped into maximal chains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ClassifyError;
use crate::model::SystemDescription;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstructKind {
    Sequential,
    Iteration,
    Split,
    Join,
}

impl ConstructKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstructKind::Sequential => "sequential",
            ConstructKind::Iteration => "iteration",
            ConstructKind::Split => "split",
            ConstructKind::Join => "join",
        }
    }
}

impl fmt::Display for ConstructKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construct {
    Sequential { path: Vec<String> },
    Iteration { cycle: Vec<String>, taps: Vec<String> },
    Split { parent: String, children: Vec<String> },
    Join { parents: Vec<String>, junction: String, child: Option<String> },
}

impl Construct {
    pub fn kind(&self) -> ConstructKind {
        match self {
            Construct::Sequential { .. } => ConstructKind::Sequential,
            Construct::Iteration { .. } => ConstructKind::Iteration,
            Construct::Split { .. } => ConstructKind::Split,
            Construct::Join { .. } => ConstructKind::Join,
        }
    }

    pub fn neurons(&self) -> Vec<&str> {
        match self {
            Construct::Sequential { path } => path.iter().map(String::as_str).collect(),
            Construct::Iteration { cycle, taps } => cycle.iter().chain(taps).map(String::as_str).collect(),
            Construct::Split { parent, children } => {
                std::iter::once(parent).chain(children).map(String::as_str).collect()
            }
            Construct::Join { parents, junction, child } => {
                parents.iter().chain(std::iter::once(junction)).chain(child.iter()).map(String::as_str).collect()
            }
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.neurons().contains(&id)
    }

    /// Synapses this construct accounts for.
    pub fn synapses(&self, system: &SystemDescription) -> Vec<(String, String)> {
        let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
        match self {
            Construct::Sequential { path } => path.windows(2).map(|w| pair(&w[0], &w[1])).collect(),
            Construct::Iteration { cycle, taps } => {
                let mut out: Vec<_> =
                    (0..cycle.len()).map(|i| pair(&cycle[i], &cycle[(i + 1) % cycle.len()])).collect();
                for c in cycle {
                    for t in taps {
                        if system.has_synapse(c, t) {
                            out.push(pair(c, t));
                        }
                    }
                }
                out
            }
            Construct::Split { parent, children } => children.iter().map(|c| pair(parent, c)).collect(),
            Construct::Join { parents, junction, child } => {
                let mut out: Vec<_> = parents.iter().map(|p| pair(p, junction)).collect();
                if let Some(c) = child {
                    out.push(pair(junction, c));
                }
                out
            }
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Construct::Sequential { path } => write!(f, "Sequential([{}])", path.join(", ")),
            Construct::Iteration { cycle, taps } => {
                write!(f, "Iteration(cycle [{}], taps [{}])", cycle.join(", "), taps.join(", "))
            }
            Construct::Split { parent, children } => write!(f, "Split({parent}; {{{}}})", children.join(", ")),
            Construct::Join { parents, junction, child } => {
                write!(f, "Join({{{}}}; {junction}", parents.join(", "))?;
                if let Some(c) = child {
                    write!(f, "; {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A routing of a system: the selected synapses, their endpoints and the
/// constructs covering them.
#[derive(Debug, Clone)]
pub struct RoutingGraph<'a> {
    pub base: &'a SystemDescription,
    pub selected_synapses: Vec<(String, String)>,
    pub selected_neurons: Vec<String>,
    pub constructs: Vec<Construct>,
}

impl RoutingGraph<'_> {
    pub fn constructs_of(&self, kind: ConstructKind) -> impl Iterator<Item = &Construct> {
        self.constructs.iter().filter(move |c| c.kind() == kind)
    }

    pub fn containing<'c>(&'c self, id: &'c str) -> impl Iterator<Item = &'c Construct> + 'c {
        self.constructs.iter().filter(move |c| c.contains(id))
    }
}

/// Strongly connected components with at least two neurons, in declaration order.
pub fn cyclic_components(system: &SystemDescription) -> Vec<Vec<String>> {
    let n = system.len();
    let index: BTreeMap<&str, usize> = system.neurons.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let mut adj = vec![Vec::new(); n];
    for (f, t) in &system.synapses {
        if let (Some(&a), Some(&b)) = (index.get(f.as_str()), index.get(t.as_str())) {
            adj[a].push(b);
        }
    }

    // Iterative Tarjan.
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for root in 0..n {
        if idx[root] != usize::MAX {
            continue;
        }
        let mut work = vec![(root, 0usize)];
        idx[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut next)) = work.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == idx[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 {
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps.sort();
    comps.into_iter().map(|c| c.into_iter().map(|i| system.neurons[i].id.clone()).collect()).collect()
}

pub fn classify_constructs(system: &SystemDescription) -> Result<RoutingGraph<'_>, ClassifyError> {
    let mut constructs = Vec::new();
    let mut covered: BTreeSet<(String, String)> = BTreeSet::new();
    let cycles = cyclic_components(system);
    let on_cycle: BTreeSet<&str> = cycles.iter().flatten().map(String::as_str).collect();
    let source = system.resolved_source();

    let mut iterations = Vec::new();
    for comp in &cycles {
        let members: BTreeSet<&str> = comp.iter().map(String::as_str).collect();
        let internal: Vec<(String, String)> = system
            .synapses
            .iter()
            .filter(|(f, t)| members.contains(f.as_str()) && members.contains(t.as_str()))
            .cloned()
            .collect();
        let simple =
            internal.len() == comp.len() && comp.iter().all(|c| internal.iter().filter(|(f, _)| f == c).count() == 1);
        if !simple {
            return Err(ClassifyError::Unclassifiable {
                synapses: internal,
                reason: "strongly connected region is not a single simple cycle".into(),
            });
        }
        let start = source.as_deref().filter(|s| members.contains(s)).unwrap_or(comp[0].as_str()).to_string();
        let mut cycle = vec![start.clone()];
        loop {
            let last = cycle.last().expect("non-empty");
            let next = internal.iter().find(|(f, _)| f == last).map(|(_, t)| t.clone()).expect("simple cycle");
            if next == start {
                break;
            }
            cycle.push(next);
        }
        let mut taps: Vec<String> = Vec::new();
        for (f, t) in &system.synapses {
            if members.contains(f.as_str()) && !members.contains(t.as_str()) && !taps.contains(t) {
                taps.push(t.clone());
            }
        }
        let c = Construct::Iteration { cycle, taps };
        covered.extend(c.synapses(system));
        iterations.push(c);
    }

    for n in &system.neurons {
        if on_cycle.contains(n.id.as_str()) {
            continue;
        }
        let children: Vec<String> = system.out_neighbors(&n.id).map(str::to_string).collect();
        if children.len() >= 2 {
            let c = Construct::Split { parent: n.id.clone(), children };
            covered.extend(c.synapses(system));
            constructs.push(c);
        }
    }
    for n in &system.neurons {
        if on_cycle.contains(n.id.as_str()) {
            continue;
        }
        let parents: Vec<String> =
            system.neurons.iter().filter(|p| system.has_synapse(&p.id, &n.id)).map(|p| p.id.clone()).collect();
        if parents.len() >= 2 {
            let outs: Vec<&str> = system.out_neighbors(&n.id).collect();
            let child = match outs.as_slice() {
                [only] => Some(only.to_string()),
                _ => None,
            };
            let c = Construct::Join { parents, junction: n.id.clone(), child };
            covered.extend(c.synapses(system));
            constructs.push(c);
        }
    }
    constructs.extend(iterations);

    // Residual chains: an uncovered edge continues through a neuron with
    // exactly one incoming and one outgoing synapse.
    let uncovered: Vec<(String, String)> = system.synapses.iter().filter(|s| !covered.contains(*s)).cloned().collect();
    let passes = |v: &str| system.in_degree(v) == 1 && system.out_degree(v) == 1;
    let mut used: BTreeSet<(String, String)> = BTreeSet::new();
    for (f, t) in &uncovered {
        let continues_from_before =
            passes(f) && system.in_neighbors(f).any(|p| uncovered.contains(&(p.to_string(), f.clone())));
        if continues_from_before || used.contains(&(f.clone(), t.clone())) {
            continue;
        }
        let mut path = vec![f.clone(), t.clone()];
        used.insert((f.clone(), t.clone()));
        loop {
            let last = path.last().expect("non-empty").clone();
            if !passes(&last) {
                break;
            }
            let next = system.out_neighbors(&last).next().expect("out-degree 1").to_string();
            let edge = (last, next.clone());
            if !uncovered.contains(&edge) || used.contains(&edge) {
                break;
            }
            used.insert(edge);
            path.push(next);
        }
        constructs.push(Construct::Sequential { path });
    }
    let leftover: Vec<_> = uncovered.into_iter().filter(|e| !used.contains(e)).collect();
    if !leftover.is_empty() {
        return Err(ClassifyError::Unclassifiable {
            synapses: leftover,
            reason: "synapses outside every construct".into(),
        });
    }

    let selected_synapses = system.synapses.clone();
    let mut selected_neurons = Vec::new();
    for n in &system.neurons {
        if selected_synapses.iter().any(|(f, t)| *f == n.id || *t == n.id) {
            selected_neurons.push(n.id.clone());
        }
    }
    Ok(RoutingGraph { base: system, selected_synapses, selected_neurons, constructs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Neuron, Rule};

    fn system(ids: &[&str], edges: &[(&str, &str)]) -> SystemDescription {
        let neurons =
            ids.iter().enumerate().map(|(i, id)| Neuron::new(*id, u64::from(i == 0), vec![Rule::relay()])).collect();
        let synapses = edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        SystemDescription::new(neurons, synapses)
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn split_feeding_join() {
        let sys = system(
            &["s1", "s2", "s3", "s4", "s5"],
            &[("s1", "s2"), ("s1", "s3"), ("s2", "s4"), ("s3", "s4"), ("s4", "s5")],
        );
        let g = classify_constructs(&sys).unwrap();
        assert_eq!(
            g.constructs,
            vec![
                Construct::Split { parent: "s1".into(), children: strs(&["s2", "s3"]) },
                Construct::Join { parents: strs(&["s2", "s3"]), junction: "s4".into(), child: Some("s5".into()) },
            ]
        );
        assert_eq!(g.selected_neurons.len(), 5);
    }

    #[test]
    fn two_neuron_chain() {
        let sys = system(&["s1", "s2"], &[("s1", "s2")]);
        let g = classify_constructs(&sys).unwrap();
        assert_eq!(g.constructs, vec![Construct::Sequential { path: strs(&["s1", "s2"]) }]);
    }

    #[test]
    fn loop_with_tap() {
        let sys = system(&["s1", "s2", "s3"], &[("s1", "s2"), ("s2", "s1"), ("s1", "s3")]);
        let g = classify_constructs(&sys).unwrap();
        assert_eq!(g.constructs, vec![Construct::Iteration { cycle: strs(&["s1", "s2"]), taps: strs(&["s3"]) }]);
    }

    #[test]
    fn long_chain_is_one_sequential() {
        let sys = system(&["a1", "a2", "a3", "a4"], &[("a1", "a2"), ("a2", "a3"), ("a3", "a4")]);
        let g = classify_constructs(&sys).unwrap();
        assert_eq!(g.constructs, vec![Construct::Sequential { path: strs(&["a1", "a2", "a3", "a4"]) }]);
    }

    #[test]
    fn overlapping_cycles_are_unclassifiable() {
        let sys = system(&["s1", "s2", "s3"], &[("s1", "s2"), ("s2", "s1"), ("s2", "s3"), ("s3", "s2")]);
        let err = classify_constructs(&sys).unwrap_err();
        let ClassifyError::Unclassifiable { synapses, .. } = err;
        assert_eq!(synapses.len(), 4);
    }

    #[test]
    fn chain_after_join_and_split_children_chains() {
        // s1 splits, child s3 continues through s5 to s6.
        let sys = system(
            &["s1", "s2", "s3", "s4", "s5", "s6"],
            &[("s1", "s2"), ("s1", "s3"), ("s2", "s4"), ("s3", "s5"), ("s5", "s6")],
        );
        let g = classify_constructs(&sys).unwrap();
        assert!(g.constructs.contains(&Construct::Sequential { path: strs(&["s2", "s4"]) }));
        assert!(g.constructs.contains(&Construct::Sequential { path: strs(&["s3", "s5", "s6"]) }));
        let total: usize = g.constructs.iter().map(|c| c.synapses(&sys).len()).sum();
        assert_eq!(total, 5);
    }
}
