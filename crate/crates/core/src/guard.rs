//! Regular expressions over the one-letter alphabet `{a}` used as rule guards.
//!
//! A guard denotes a set of spike counts. Membership is decided either on the
//! expression tree (dynamic programming over the count) or on the
//! normalized form, a finite union of arithmetic progressions obtained from
//! the lasso shape of the unary subset automaton.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::GuardParseError;

/// Expression tree of a unary guard.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuardExpr {
    /// The empty string, denoting `{0}`.
    Empty,
    /// The single symbol `a`, denoting `{1}`.
    Literal,
    Union(Box<GuardExpr>, Box<GuardExpr>),
    Concat(Box<GuardExpr>, Box<GuardExpr>),
    Plus(Box<GuardExpr>),
}

impl GuardExpr {
    pub fn union(l: GuardExpr, r: GuardExpr) -> Self {
        GuardExpr::Union(Box::new(l), Box::new(r))
    }

    pub fn concat(l: GuardExpr, r: GuardExpr) -> Self {
        GuardExpr::Concat(Box::new(l), Box::new(r))
    }

    pub fn plus(e: GuardExpr) -> Self {
        GuardExpr::Plus(Box::new(e))
    }

    /// `e*`, sugar for `e+ | λ`.
    pub fn star(e: GuardExpr) -> Self {
        GuardExpr::union(GuardExpr::plus(e), GuardExpr::Empty)
    }

    /// `e^n` as a left-associated n-fold concatenation; `e^0` is `λ`.
    pub fn power(e: GuardExpr, n: u64) -> Self {
        if n == 0 {
            return GuardExpr::Empty;
        }
        let mut acc = e.clone();
        for _ in 1..n {
            acc = GuardExpr::concat(acc, e.clone());
        }
        acc
    }

    pub fn depth(&self) -> usize {
        match self {
            GuardExpr::Empty | GuardExpr::Literal => 1,
            GuardExpr::Union(l, r) | GuardExpr::Concat(l, r) => 1 + l.depth().max(r.depth()),
            GuardExpr::Plus(e) => 1 + e.depth(),
        }
    }

    /// Length of a left-associated chain of literals (`a^n`), if this is one.
    fn literal_chain(&self) -> Option<u64> {
        match self {
            GuardExpr::Literal => Some(1),
            GuardExpr::Concat(l, r) if **r == GuardExpr::Literal => l.literal_chain().map(|n| n + 1),
            _ => None,
        }
    }

    /// Membership table for every count in `0..=k`.
    fn table(&self, k: usize, memo: &mut HashMap<*const GuardExpr, Vec<bool>>) -> Vec<bool> {
        let key = self as *const GuardExpr;
        if let Some(t) = memo.get(&key) {
            return t.clone();
        }
        let t = match self {
            GuardExpr::Empty => (0..=k).map(|n| n == 0).collect(),
            GuardExpr::Literal => (0..=k).map(|n| n == 1).collect(),
            GuardExpr::Union(l, r) => {
                let (a, b) = (l.table(k, memo), r.table(k, memo));
                a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
            }
            GuardExpr::Concat(l, r) => {
                let (a, b) = (l.table(k, memo), r.table(k, memo));
                (0..=k).map(|n| (0..=n).any(|j| a[j] && b[n - j])).collect()
            }
            GuardExpr::Plus(e) => {
                let a = e.table(k, memo);
                // Zero-length parts never change the sum, so only positive parts matter
                // beyond n = 0.
                let mut p = vec![false; k + 1];
                p[0] = a[0];
                for n in 1..=k {
                    p[n] = a[n] || (1..n).any(|j| a[j] && p[n - j]);
                }
                p
            }
        };
        memo.insert(key, t.clone());
        t
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // prec: 0 = top/union-left, 1 = union-right or concat-left, 2 = concat-right, 3 = postfix operand
        if let Some(n) = self.literal_chain() {
            if n == 1 {
                return write!(f, "a");
            }
            return if prec >= 3 { write!(f, "(a^{n})") } else { write!(f, "a^{n}") };
        }
        match self {
            GuardExpr::Empty => write!(f, "λ"),
            GuardExpr::Literal => write!(f, "a"),
            GuardExpr::Union(l, r) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                l.fmt_prec(f, 0)?;
                write!(f, "|")?;
                r.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            GuardExpr::Concat(l, r) => {
                if prec >= 2 {
                    write!(f, "(")?;
                }
                l.fmt_prec(f, 1)?;
                r.fmt_prec(f, 2)?;
                if prec >= 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            GuardExpr::Plus(e) => {
                e.fmt_prec(f, 3)?;
                write!(f, "^+")
            }
        }
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// The set `{offset + n·period : n ≥ 0}`; period 0 is the singleton `{offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Progression {
    pub offset: u64,
    pub period: u64,
}

impl Progression {
    pub fn new(offset: u64, period: u64) -> Self {
        Self { offset, period }
    }

    pub fn contains(&self, k: u64) -> bool {
        if self.period == 0 {
            k == self.offset
        } else {
            k >= self.offset && (k - self.offset).is_multiple_of(self.period)
        }
    }
}

/// A rule guard: expression tree plus a lazily computed normalized form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "GuardExpr", into = "GuardExpr")]
pub struct UnaryGuard {
    expr: GuardExpr,
    normal: OnceLock<Vec<Progression>>,
}

impl From<GuardExpr> for UnaryGuard {
    fn from(expr: GuardExpr) -> Self {
        Self { expr, normal: OnceLock::new() }
    }
}

impl From<UnaryGuard> for GuardExpr {
    fn from(g: UnaryGuard) -> Self {
        g.expr
    }
}

impl PartialEq for UnaryGuard {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl Eq for UnaryGuard {}

impl UnaryGuard {
    pub fn new(expr: GuardExpr) -> Self {
        expr.into()
    }

    /// `a^n`
    pub fn exact(n: u64) -> Self {
        GuardExpr::power(GuardExpr::Literal, n).into()
    }

    /// `a^+`
    pub fn positive() -> Self {
        GuardExpr::plus(GuardExpr::Literal).into()
    }

    pub fn parse(text: &str) -> Result<Self, GuardParseError> {
        GuardParser::new(text).parse_all().map(Into::into)
    }

    pub fn expr(&self) -> &GuardExpr {
        &self.expr
    }

    /// Decides membership of `k` on the expression tree.
    pub fn contains(&self, k: u64) -> bool {
        let k = usize::try_from(k).expect("spike count fits in usize");
        let mut memo = HashMap::new();
        self.expr.table(k, &mut memo)[k]
    }

    /// Membership table for `0..=k` from the expression tree.
    pub fn membership_table(&self, k: u64) -> Vec<bool> {
        let mut memo = HashMap::new();
        self.expr.table(k as usize, &mut memo)
    }

    /// Normalized form, computed once and cached.
    pub fn normalized(&self) -> &[Progression] {
        self.normal.get_or_init(|| normalize(&self.expr))
    }

    /// Membership through the normalized form.
    pub fn matches(&self, k: u64) -> bool {
        self.normalized().iter().any(|p| p.contains(k))
    }

    /// The single count denoted by the guard, if the denoted set is a singleton.
    pub fn singleton(&self) -> Option<u64> {
        match self.normalized() {
            [p] if p.period == 0 => Some(p.offset),
            _ => None,
        }
    }
}

impl fmt::Display for UnaryGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl FromStr for UnaryGuard {
    type Err = GuardParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UnaryGuard::parse(s)
    }
}

/// Returns progressions whose union is the set denoted by `expr`.
pub fn normalize_guard(guard: &UnaryGuard) -> Vec<Progression> {
    guard.normalized().to_vec()
}

// Thompson automaton over the single letter, with epsilon moves.
struct Nfa {
    eps: Vec<Vec<usize>>,
    step: Vec<Vec<usize>>,
}

impl Nfa {
    fn state(&mut self) -> usize {
        self.eps.push(Vec::new());
        self.step.push(Vec::new());
        self.eps.len() - 1
    }

    fn build(&mut self, e: &GuardExpr) -> (usize, usize) {
        match e {
            GuardExpr::Empty => {
                let (s, f) = (self.state(), self.state());
                self.eps[s].push(f);
                (s, f)
            }
            GuardExpr::Literal => {
                let (s, f) = (self.state(), self.state());
                self.step[s].push(f);
                (s, f)
            }
            GuardExpr::Union(l, r) => {
                let (s, f) = (self.state(), self.state());
                let (ls, lf) = self.build(l);
                let (rs, rf) = self.build(r);
                self.eps[s].extend([ls, rs]);
                self.eps[lf].push(f);
                self.eps[rf].push(f);
                (s, f)
            }
            GuardExpr::Concat(l, r) => {
                let (ls, lf) = self.build(l);
                let (rs, rf) = self.build(r);
                self.eps[lf].push(rs);
                (ls, rf)
            }
            GuardExpr::Plus(inner) => {
                let (s, f) = (self.state(), self.state());
                let (is, iff) = self.build(inner);
                self.eps[s].push(is);
                self.eps[iff].extend([is, f]);
                (s, f)
            }
        }
    }

    fn closure(&self, set: &mut [bool]) {
        let mut stack: Vec<usize> = set.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
        while let Some(s) = stack.pop() {
            for &t in &self.eps[s] {
                if !set[t] {
                    set[t] = true;
                    stack.push(t);
                }
            }
        }
    }
}

fn normalize(expr: &GuardExpr) -> Vec<Progression> {
    let mut nfa = Nfa { eps: Vec::new(), step: Vec::new() };
    let (start, accept) = nfa.build(expr);
    let n = nfa.eps.len();

    let mut current = vec![false; n];
    current[start] = true;
    nfa.closure(&mut current);

    // Unary subset construction always ends in a lasso: a tail followed by a cycle.
    let mut seen: HashMap<Vec<bool>, u64> = HashMap::new();
    let mut accepting = Vec::new();
    let mut count = 0u64;
    let tail = loop {
        if let Some(&first) = seen.get(&current) {
            break first;
        }
        seen.insert(current.clone(), count);
        accepting.push(current[accept]);
        let mut next = vec![false; n];
        for (s, on) in current.iter().enumerate() {
            if *on {
                for &t in &nfa.step[s] {
                    next[t] = true;
                }
            }
        }
        nfa.closure(&mut next);
        current = next;
        count += 1;
    };
    let period = count - tail;

    let mut out: Vec<Progression> = accepting
        .iter()
        .enumerate()
        .filter(|(_, acc)| **acc)
        .map(|(i, _)| {
            let i = i as u64;
            if i < tail {
                Progression::new(i, 0)
            } else {
                Progression::new(i, period)
            }
        })
        .collect();
    out.sort();
    out
}

struct GuardParser<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> GuardParser<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn err(&self, msg: impl Into<String>) -> GuardParseError {
        GuardParseError { column: self.pos + 1, message: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse_all(mut self) -> Result<GuardExpr, GuardParseError> {
        let e = self.parse_union()?;
        match self.peek() {
            None => Ok(e),
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
        }
    }

    fn parse_union(&mut self) -> Result<GuardExpr, GuardParseError> {
        let mut left = self.parse_concat()?;
        while matches!(self.peek(), Some('|') | Some('∪')) {
            self.pos += 1;
            let right = self.parse_concat()?;
            left = GuardExpr::union(left, right);
        }
        Ok(left)
    }

    fn parse_concat(&mut self) -> Result<GuardExpr, GuardParseError> {
        let mut left = self.parse_postfix()?;
        while matches!(self.peek(), Some(c) if c != '|' && c != '∪' && c != ')') {
            let right = self.parse_postfix()?;
            left = GuardExpr::concat(left, right);
        }
        Ok(left)
    }

    fn parse_postfix(&mut self) -> Result<GuardExpr, GuardParseError> {
        let mut e = self.parse_atom()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    e = GuardExpr::plus(e);
                }
                Some('*') => {
                    self.pos += 1;
                    e = GuardExpr::star(e);
                }
                Some('^') => {
                    self.pos += 1;
                    match self.peek() {
                        Some('+') => {
                            self.pos += 1;
                            e = GuardExpr::plus(e);
                        }
                        Some('*') => {
                            self.pos += 1;
                            e = GuardExpr::star(e);
                        }
                        Some(c) if c.is_ascii_digit() => {
                            let n = self.parse_number()?;
                            e = GuardExpr::power(e, n);
                        }
                        _ => return Err(self.err("expected '+', '*' or a number after '^'")),
                    }
                }
                _ => return Ok(e),
            }
        }
    }

    fn parse_number(&mut self) -> Result<u64, GuardParseError> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.err("exponent out of range"))
    }

    fn parse_atom(&mut self) -> Result<GuardExpr, GuardParseError> {
        match self.peek() {
            Some('a') => {
                self.pos += 1;
                Ok(GuardExpr::Literal)
            }
            Some('λ') => {
                self.pos += 1;
                Ok(GuardExpr::Empty)
            }
            Some('l') => {
                let rest: String = self.chars[self.pos..].iter().take(6).collect();
                if rest == "lambda" {
                    self.pos += 6;
                    Ok(GuardExpr::Empty)
                } else {
                    Err(self.err("unknown symbol"))
                }
            }
            Some('(') => {
                self.pos += 1;
                let e = self.parse_union()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end of guard")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> UnaryGuard {
        UnaryGuard::parse(s).unwrap()
    }

    #[test]
    fn positive_closure() {
        let a_plus = g("a^+");
        assert!(a_plus.contains(3));
        assert!(!a_plus.contains(0));
        assert_eq!(a_plus.normalized(), &[Progression::new(1, 1)]);
    }

    #[test]
    fn exact_count() {
        let a2 = g("a^2");
        assert!(a2.contains(2));
        assert!(!a2.contains(3));
        assert_eq!(g("a^5").normalized(), &[Progression::new(5, 0)]);
        assert_eq!(g("a^5").singleton(), Some(5));
    }

    #[test]
    fn union_of_multiples_and_singleton() {
        let guard = g("(a^3)^+ | a^2");
        assert_eq!(guard.normalized(), &[Progression::new(2, 0), Progression::new(3, 3)]);
    }

    #[test]
    fn star_includes_zero() {
        let guard = g("(aa)*");
        assert!(guard.contains(0));
        assert!(guard.contains(4));
        assert!(!guard.contains(3));
        assert_eq!(guard.expr(), &GuardExpr::star(GuardExpr::power(GuardExpr::Literal, 2)));
    }

    #[test]
    fn lambda_spellings() {
        assert_eq!(g("λ"), g("lambda"));
        assert!(g("λ").contains(0));
        assert!(!g("λ").contains(1));
        assert_eq!(g("a^0"), g("λ"));
    }

    #[test]
    fn parse_errors_carry_column() {
        let err = UnaryGuard::parse("a^").unwrap_err();
        assert_eq!(err.column, 3);
        assert!(UnaryGuard::parse("(a").is_err());
        assert!(UnaryGuard::parse("b").is_err());
        assert!(UnaryGuard::parse("").is_err());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for s in ["a^+", "a^2", "(a^3)^+|a^2", "a(a|λ)", "a^2a^+", "(a|a^2)^+", "a(aa)(a)", "λ^+"] {
            let guard = g(s);
            let again = g(&guard.to_string());
            assert_eq!(guard, again, "{s} printed as {guard}");
        }
    }

    #[test]
    fn empty_plus_is_zero_only() {
        let guard = g("λ^+");
        assert!(guard.contains(0));
        assert!(!guard.contains(1));
        assert_eq!(guard.normalized(), &[Progression::new(0, 0)]);
    }
}
