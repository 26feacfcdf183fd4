use crate::guard::UnaryGuard;
use crate::model::{Neuron, Rule, SystemDescription};

/// `a^{1+d} -> a`: folds a stream of `1 + d` spikes back into one spike,
/// emitted the step after the last one arrives.
pub fn make_normalizer(id: impl Into<String>, d: u64) -> Neuron {
    Neuron::new(id, 0, vec![Rule::new(UnaryGuard::exact(1 + d), 1 + d, 1, 0)])
}

/// Routes every synapse entering `target` through a normalizer for delay `d`.
pub fn insert_normalizer(system: &SystemDescription, target: &str, d: u64) -> SystemDescription {
    let mut id = format!("{target}_norm");
    let mut n = 2;
    while system.index_of(&id).is_some() {
        id = format!("{target}_norm{n}");
        n += 1;
    }
    system.with_neuron_before(target, make_normalizer(id, d))
}
