//! Spiking neural P systems with and without rule delays.
//!
//! The crate provides a reference simulator for the synchronous semantics
//! (delays, closed neurons, lost spikes), a linear-algebra engine for
//! delay-free systems, a rewriter that removes delays from systems built
//! from sequential, iteration, split and join routings, and a checker that
//! decides whether a delay-free system simulates a delayed one up to a
//! constant time offset and a spike-count factor.

pub mod classify;
pub mod dot;
pub mod equiv;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod guard;
pub mod matrix;
pub mod model;
pub mod rewrite;
pub mod sim;
pub mod validate;

pub use classify::{classify_constructs, Construct, ConstructKind, RoutingGraph};
pub use equiv::{compare, sink_schedule, EquivalenceVerdict, Expectation};
pub use error::{ClassifyError, EquivError, MatrixError, ParseError, SimError, TransformError};
pub use format::{parse_system, parse_system_with, serialize_system};
pub use guard::{normalize_guard, GuardExpr, Progression, UnaryGuard};
pub use matrix::{build_transition_matrix, matrix_run, matrix_step, TransitionMatrix};
pub use model::{Neuron, Rule, SystemDescription};
pub use rewrite::{transform, RewriteResult, RewriterRegistry, TransformOutput};
pub use sim::{initial_configuration, lost_spike_count, run, step, Configuration, RunOutcome, SinkRecord, TraceEvent};
pub use validate::{validate_restricted, ValidationReport, Violation};
