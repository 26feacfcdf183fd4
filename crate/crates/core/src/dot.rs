//! Graphviz export.

use std::fmt::Write as _;

use crate::model::SystemDescription;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// A `digraph` with one node per neuron, labeled with its id, initial spikes
/// and rules, and one edge per synapse.
pub fn to_dot(system: &SystemDescription) -> String {
    let mut out = String::from("digraph snp {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n");
    for n in &system.neurons {
        let mut label = n.id.clone();
        if n.initial_spikes > 0 {
            let _ = write!(label, "\\nspikes={}", n.initial_spikes);
        }
        for r in &n.rules {
            let _ = write!(label, "\\n{}", escape(&r.to_string()));
        }
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", escape(&n.id), label);
    }
    for (a, b) in &system.synapses {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", escape(a), escape(b));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Neuron, Rule};

    #[test]
    fn single_neuron() {
        let sys = SystemDescription::new(vec![Neuron::new("s1", 2, vec![Rule::relay()])], vec![]);
        let dot = to_dot(&sys);
        assert_eq!(dot.matches("[label=").count(), 1);
        assert_eq!(dot.matches("\" -> \"").count(), 0);
        assert!(dot.contains("spikes=2"));
    }
}
