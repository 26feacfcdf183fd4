//! Line-oriented system-description documents.
//!
//! ```text
//! # comment
//! param d = 2
//! neuron s1 spikes=1
//!   rule "a -> a; ${d}"
//! neuron s2
//! synapse s1 -> s2
//! source s1
//! sink s2
//! ```
//!
//! `param` lines declare defaults for `${name}` placeholders; callers may
//! override them. Placeholders are expanded before parsing.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind};
use crate::guard::UnaryGuard;
use crate::model::{Neuron, Rule, SystemDescription};

pub fn parse_system(text: &str) -> Result<SystemDescription, ParseError> {
    parse_system_with(text, &BTreeMap::new())
}

/// Parses after expanding `${name}` placeholders; `overrides` win over `param` defaults.
pub fn parse_system_with(text: &str, overrides: &BTreeMap<String, i64>) -> Result<SystemDescription, ParseError> {
    let mut params: BTreeMap<String, i64> = BTreeMap::new();
    let mut system = SystemDescription::default();
    let mut ids: HashSet<String> = HashSet::new();
    let mut pending_synapses: Vec<(usize, usize, String, String)> = Vec::new();
    let mut pending_ends: Vec<(usize, usize, String)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let stripped = strip_comment(raw);
        if stripped.trim().is_empty() {
            continue;
        }
        let trimmed = stripped.trim_start();
        let indent = stripped.len() - trimmed.len();

        if let Some(rest) = trimmed.strip_prefix("param") {
            if rest.starts_with(char::is_whitespace) {
                let (name, value) = parse_param(rest, line_no, indent)?;
                params.entry(name).or_insert(value);
                continue;
            }
        }

        let line = expand(trimmed, &params, overrides, line_no, indent)?;
        let syntax = |msg: &str| ParseError::new(line_no, indent + 1, ParseErrorKind::Syntax(msg.to_string()));
        let (keyword, rest) = split_word(&line);

        match keyword {
            "neuron" => {
                let mut words = rest.split_whitespace();
                let id = words.next().ok_or_else(|| syntax("neuron needs an id"))?;
                check_id(id, line_no, indent)?;
                let mut spikes = 0;
                for w in words {
                    let value = w.strip_prefix("spikes=").ok_or_else(|| syntax("expected spikes=<n>"))?;
                    spikes = value.parse().map_err(|_| syntax("spike count must be a non-negative integer"))?;
                }
                if !ids.insert(id.to_string()) {
                    return Err(ParseError::new(line_no, indent + 1, ParseErrorKind::DuplicateNeuron(id.into())));
                }
                system.neurons.push(Neuron::new(id, spikes, Vec::new()));
            }
            "rule" => {
                let body = rest.trim();
                let quoted = body
                    .strip_prefix('"')
                    .and_then(|b| b.strip_suffix('"'))
                    .ok_or_else(|| syntax("rule text must be quoted"))?;
                let col = indent + line.find('"').unwrap_or(0) + 2;
                let rule = parse_rule(quoted).map_err(|kind| ParseError::new(line_no, col, kind))?;
                let neuron = system
                    .neurons
                    .last_mut()
                    .ok_or_else(|| ParseError::new(line_no, indent + 1, ParseErrorKind::RuleOutsideNeuron))?;
                neuron.rules.push(rule);
            }
            "synapse" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                match parts.as_slice() {
                    [from, "->", to] => pending_synapses.push((line_no, indent, from.to_string(), to.to_string())),
                    _ => return Err(syntax("expected synapse <id> -> <id>")),
                }
            }
            "source" | "sink" => {
                let id = rest.trim();
                if id.is_empty() || id.contains(char::is_whitespace) {
                    return Err(syntax("expected a single neuron id"));
                }
                pending_ends.push((line_no, indent, id.to_string()));
                if keyword == "source" {
                    system.source = Some(id.to_string());
                } else {
                    system.sinks.push(id.to_string());
                }
            }
            other => return Err(syntax(&format!("unknown keyword '{other}'"))),
        }
    }

    for (line, indent, id) in pending_ends {
        if !ids.contains(&id) {
            return Err(ParseError::new(line, indent + 1, ParseErrorKind::UnknownNeuron(id)));
        }
    }
    for (line, indent, from, to) in pending_synapses {
        for id in [&from, &to] {
            if !ids.contains(id) {
                return Err(ParseError::new(line, indent + 1, ParseErrorKind::UnknownNeuron(id.clone())));
            }
        }
        if from == to {
            return Err(ParseError::new(line, indent + 1, ParseErrorKind::SelfLoop(from)));
        }
        if system.has_synapse(&from, &to) {
            return Err(ParseError::new(line, indent + 1, ParseErrorKind::DuplicateSynapse(from, to)));
        }
        system.synapses.push((from, to));
    }
    Ok(system)
}

/// Parses the quoted rule body `E[/a^c] -> a^b|lambda [; d]`.
pub fn parse_rule(text: &str) -> Result<Rule, ParseErrorKind> {
    let syntax = |m: &str| ParseErrorKind::Syntax(m.to_string());
    let (lhs, rhs) = text.split_once("->").ok_or_else(|| syntax("rule needs '->'"))?;
    let (produce, delay) = match rhs.split_once(';') {
        Some((p, d)) => (p.trim(), Some(d.trim())),
        None => (rhs.trim(), None),
    };
    let delay = match delay {
        Some(d) => d.parse::<u64>().map_err(|_| syntax("delay must be a non-negative integer"))?,
        None => 0,
    };
    let produced = match produce {
        "lambda" | "λ" => 0,
        p => parse_power(p).ok_or_else(|| syntax("produced spikes must be a, a^n or lambda"))?,
    };

    let (guard_text, consumed_text) = match lhs.rsplit_once('/') {
        Some((g, c)) => (g.trim(), Some(c.trim())),
        None => (lhs.trim(), None),
    };
    let guard = UnaryGuard::parse(guard_text).map_err(|e| ParseErrorKind::Guard(e.to_string()))?;
    let consumed = match consumed_text {
        Some(c) => parse_power(c).ok_or_else(|| syntax("consumed spikes must be a or a^n"))?,
        None => guard.singleton().ok_or_else(|| ParseErrorKind::AmbiguousConsumption(guard_text.to_string()))?,
    };

    if consumed == 0 {
        return Err(ParseErrorKind::ZeroConsumed);
    }
    if consumed < produced {
        return Err(ParseErrorKind::ConsumedLessThanProduced { consumed, produced });
    }
    if produced == 0 && delay > 0 {
        return Err(ParseErrorKind::DelayedForgetting(delay));
    }
    Ok(Rule::new(guard, consumed, produced, delay))
}

/// Emits the document for `system`, neurons in declaration order.
pub fn serialize_system(system: &SystemDescription) -> String {
    let mut out = String::new();
    for n in &system.neurons {
        if n.initial_spikes > 0 {
            let _ = writeln!(out, "neuron {} spikes={}", n.id, n.initial_spikes);
        } else {
            let _ = writeln!(out, "neuron {}", n.id);
        }
        for r in &n.rules {
            let _ = writeln!(out, "  rule \"{r}\"");
        }
    }
    for (f, t) in &system.synapses {
        let _ = writeln!(out, "synapse {f} -> {t}");
    }
    if let Some(s) = &system.source {
        let _ = writeln!(out, "source {s}");
    }
    for s in &system.sinks {
        let _ = writeln!(out, "sink {s}");
    }
    out
}

fn parse_power(text: &str) -> Option<u64> {
    match text {
        "a" => Some(1),
        t => t.strip_prefix("a^")?.trim().parse().ok(),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_word(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], &line[i..]),
        None => (line, ""),
    }
}

fn check_id(id: &str, line: usize, indent: usize) -> Result<(), ParseError> {
    if id == "->" || id.contains(['"', '=', '#', '$', '{', '}']) {
        return Err(ParseError::new(line, indent + 1, ParseErrorKind::Syntax(format!("invalid neuron id '{id}'"))));
    }
    Ok(())
}

fn parse_param(rest: &str, line: usize, indent: usize) -> Result<(String, i64), ParseError> {
    let err = || ParseError::new(line, indent + 1, ParseErrorKind::Syntax("expected param <name> = <int>".into()));
    let (name, value) = rest.split_once('=').ok_or_else(err)?;
    let name = name.trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(err());
    }
    let value = value.trim().parse().map_err(|_| err())?;
    Ok((name.to_string(), value))
}

fn expand(
    line: &str,
    params: &BTreeMap<String, i64>,
    overrides: &BTreeMap<String, i64>,
    line_no: usize,
    indent: usize,
) -> Result<String, ParseError> {
    let mut out = String::with_capacity(line.len());
    let mut rest = line;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or_else(|| {
            ParseError::new(line_no, indent + start + 1, ParseErrorKind::Syntax("unterminated ${".into()))
        })?;
        let name = &after[..end];
        let value = overrides
            .get(name)
            .or_else(|| params.get(name))
            .ok_or_else(|| ParseError::new(line_no, indent + start + 1, ParseErrorKind::UnsetParameter(name.into())))?;
        let _ = write!(out, "{value}");
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const WALKTHROUGH: &str = r#"
neuron s1 spikes=1
  rule "a^+/a -> a; 2"
neuron s2
  rule "a -> a"
neuron s3
synapse s1 -> s2
synapse s2 -> s3
"#;

    #[test]
    fn walkthrough_document() {
        let sys = parse_system(WALKTHROUGH).unwrap();
        assert_eq!(sys.len(), 3);
        let r = &sys.neurons[0].rules[0];
        assert_eq!((r.consumed, r.produced, r.delay), (1, 1, 2));
        assert_eq!(r.guard, UnaryGuard::positive());
        assert_eq!(sys.neurons[0].initial_spikes, 1);
        assert!(sys.neurons[2].rules.is_empty());
        assert_eq!(sys.synapses, vec![("s1".into(), "s2".into()), ("s2".into(), "s3".into())]);
    }

    #[test]
    fn self_loop_rejected() {
        let err = parse_system("neuron s1\nsynapse s1 -> s1\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::SelfLoop("s1".into()));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn produced_above_consumed_rejected() {
        let err = parse_system("neuron s1\n  rule \"a -> a^2\"\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ConsumedLessThanProduced { consumed: 1, produced: 2 });
    }

    #[test]
    fn unknown_and_duplicate_ids() {
        let err = parse_system("neuron s1\nsynapse s1 -> s9\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownNeuron("s9".into()));
        let err = parse_system("neuron s1\nneuron s1\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateNeuron("s1".into()));
    }

    #[test]
    fn delayed_forgetting_rejected() {
        let err = parse_system("neuron s1\n  rule \"a -> lambda; 2\"\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DelayedForgetting(2));
    }

    #[test]
    fn non_singleton_guard_needs_consumption() {
        let err = parse_rule("a^+ -> a").unwrap_err();
        assert!(matches!(err, ParseErrorKind::AmbiguousConsumption(_)));
        let rule = parse_rule("(a^2)^+/a^2 -> a").unwrap();
        assert_eq!(rule.consumed, 2);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_system("neuron s1\n  rule \"a -> \"\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column > 1);
        assert!(parse_system("bogus line\n").is_err());
    }

    #[test]
    fn parameters_and_overrides() {
        let doc = "param d = 2\nneuron s1 spikes=1\n  rule \"a -> a; ${d}\"\nneuron s2\nsynapse s1 -> s2\n";
        let sys = parse_system(doc).unwrap();
        assert_eq!(sys.neurons[0].rules[0].delay, 2);
        let sys = parse_system_with(doc, &BTreeMap::from([("d".to_string(), 5)])).unwrap();
        assert_eq!(sys.neurons[0].rules[0].delay, 5);
        let err = parse_system("neuron s1 spikes=${x}\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnsetParameter("x".into()));
    }

    #[test]
    fn comments_and_quotes() {
        let sys = parse_system("neuron s1 # trailing\n  rule \"a -> a\" # c\n").unwrap();
        assert_eq!(sys.neurons[0].rules.len(), 1);
    }

    #[test]
    fn serialization_round_trip() {
        let doc = "neuron s1 spikes=3\n  rule \"(a^2)^+|a^3/a^2 -> a; 1\"\n  rule \"a -> lambda\"\nneuron s2\nsynapse s1 -> s2\nsource s1\nsink s2\n";
        let sys = parse_system(doc).unwrap();
        let text = serialize_system(&sys);
        assert_eq!(parse_system(&text).unwrap(), sys);
        assert_eq!(serialize_system(&parse_system(&text).unwrap()), text);
    }
}
