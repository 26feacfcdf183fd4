//! Documents for the canonical construct systems, bundled with the crate.

use std::collections::BTreeMap;

use crate::error::ParseError;
use crate::format::parse_system_with;
use crate::model::SystemDescription;

/// `(name, document)` for every bundled fixture.
pub const ALL: &[(&str, &str)] = &[
    ("fig1", include_str!("../fixtures/fig1.snp")),
    ("fig1_junction", include_str!("../fixtures/fig1_junction.snp")),
    ("fig1_split_child", include_str!("../fixtures/fig1_split_child.snp")),
    ("iter1", include_str!("../fixtures/iter1.snp")),
    ("iter1_alt", include_str!("../fixtures/iter1_alt.snp")),
    ("iter2", include_str!("../fixtures/iter2.snp")),
    ("join_junction", include_str!("../fixtures/join_junction.snp")),
    ("join_parent", include_str!("../fixtures/join_parent.snp")),
    ("lost_spikes", include_str!("../fixtures/lost_spikes.snp")),
    ("seq1", include_str!("../fixtures/seq1.snp")),
    ("seq2", include_str!("../fixtures/seq2.snp")),
    ("split_child", include_str!("../fixtures/split_child.snp")),
    ("split_parent", include_str!("../fixtures/split_parent.snp")),
    ("walkthrough", include_str!("../fixtures/walkthrough.snp")),
];

pub fn document(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses a fixture with `params` overriding its defaults.
///
/// Panics on an unknown name; the bundled documents always parse.
pub fn load(name: &str, params: &[(&str, i64)]) -> Result<SystemDescription, ParseError> {
    let text = document(name).unwrap_or_else(|| panic!("no fixture named {name}"));
    let overrides: BTreeMap<String, i64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    parse_system_with(text, &overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_parse() {
        for (name, _) in ALL {
            load(name, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn params_override() {
        let sys = load("seq1", &[("d", 4)]).unwrap();
        assert_eq!(sys.neuron("s11").unwrap().rules[0].delay, 4);
    }
}
