#![allow(dead_code)]

use rand::Rng;
use regex::Regex;

use snp_core::{run, GuardExpr, SystemDescription};

/// Random guard with `depth() <= depth`.
pub fn random_guard<R: Rng>(rng: &mut R, depth: usize) -> GuardExpr {
    if depth <= 1 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.85) { GuardExpr::Literal } else { GuardExpr::Empty };
    }
    match rng.gen_range(0..3) {
        0 => GuardExpr::union(random_guard(rng, depth - 1), random_guard(rng, depth - 1)),
        1 => GuardExpr::concat(random_guard(rng, depth - 1), random_guard(rng, depth - 1)),
        _ => GuardExpr::plus(random_guard(rng, depth - 1)),
    }
}

fn regex_body(e: &GuardExpr) -> String {
    match e {
        GuardExpr::Empty => "(?:)".into(),
        GuardExpr::Literal => "a".into(),
        GuardExpr::Union(l, r) => format!("(?:{}|{})", regex_body(l), regex_body(r)),
        GuardExpr::Concat(l, r) => format!("(?:{}{})", regex_body(l), regex_body(r)),
        GuardExpr::Plus(x) => format!("(?:{})+", regex_body(x)),
    }
}

/// Brute-force membership: does `a^k` match the expression as a string regex?
pub struct RegexOracle(Regex);

impl RegexOracle {
    pub fn new(e: &GuardExpr) -> Self {
        Self(Regex::new(&format!("^{}$", regex_body(e))).expect("generated regex compiles"))
    }

    pub fn contains(&self, k: u64) -> bool {
        self.0.is_match(&"a".repeat(k as usize))
    }
}

/// Spike vectors of every configuration the simulator visits.
pub fn sim_vectors(system: &SystemDescription, horizon: u64) -> Vec<Vec<u64>> {
    run(system, horizon).expect("simulation runs").trace.configurations.iter().map(|c| c.spike_vector()).collect()
}

/// Total spikes that reached `sink`.
pub fn sink_total(system: &SystemDescription, sink: &str, horizon: u64) -> u64 {
    run(system, horizon).expect("simulation runs").sinks.count_at(sink)
}
