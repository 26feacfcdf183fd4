use thiserror::Error;

use crate::validate::ValidationReport;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("guard column {column}: {message}")]
pub struct GuardParseError {
    pub column: usize,
    pub message: String,
}

/// Failure to read a system-description document.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid guard: {0}")]
    Guard(String),
    #[error("unknown neuron '{0}'")]
    UnknownNeuron(String),
    #[error("duplicate neuron '{0}'")]
    DuplicateNeuron(String),
    #[error("duplicate synapse {0} -> {1}")]
    DuplicateSynapse(String, String),
    #[error("self-loop synapse on '{0}'")]
    SelfLoop(String),
    #[error("rule consumes {consumed} but produces {produced}; consumed must be at least produced")]
    ConsumedLessThanProduced { consumed: u64, produced: u64 },
    #[error("rule must consume at least one spike")]
    ZeroConsumed,
    #[error("forgetting rule with delay {0}; forgetting rules must not be delayed")]
    DelayedForgetting(u64),
    #[error("guard '{0}' does not denote a single count; write the rule as E/a^c -> ...")]
    AmbiguousConsumption(String),
    #[error("unset parameter '{0}'")]
    UnsetParameter(String),
    #[error("rule declared before any neuron")]
    RuleOutsideNeuron,
}

impl ParseError {
    pub fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        Self { line, column, kind }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("neuron '{neuron}' has several enabled rules {rules:?}; nondeterministic choice is not supported")]
    Nondeterministic { neuron: String, rules: Vec<usize> },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("configuration has {found} neuron states, system has {expected} neurons")]
    ShapeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("neuron '{neuron}' rule {rule} has delay {delay}; matrix form covers delay-free systems only")]
    DelayedRule { neuron: String, rule: usize, delay: u64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("configuration vector has {found} entries, system has {expected} neurons")]
    ShapeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("unclassifiable topology around synapses {synapses:?}: {reason}")]
    Unclassifiable { synapses: Vec<(String, String)>, reason: String },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("system violates the restricted class:\n{0}")]
    Validation(ValidationReport),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("no enabled rewriter handles construct {0}")]
    NoRewriter(String),
    #[error("unknown rewriter '{0}'")]
    UnknownRewriter(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EquivError {
    #[error("candidate neuron '{0}' has a delayed rule")]
    CandidateDelayed(String),
    #[error("no sink arrival observed in either system within horizon {0}")]
    NothingObserved(u64),
    #[error(transparent)]
    Sim(#[from] SimError),
}
