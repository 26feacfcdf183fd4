//! Delay elimination.
//!
//! Each routing construct has a rewriter registered by name. The transform
//! picks, for every delayed neuron, the construct that owns it and hands it
//! to the matching rewriter. All rewriters share one mechanism:
//!
//! * the source becomes a reservoir `a^+/a -> a` holding `L` spikes, so it
//!   emits a stream of `L` spikes on consecutive steps (when the source is
//!   itself delayed, a fresh reservoir is placed in front of it),
//! * relays pass a stream on unchanged, one step later,
//! * a delayed neuron becomes a gate `a^L -> a`: it fires one step after the
//!   last spike of the stream, which for `L = 1 + d` is exactly when the
//!   delayed neuron would have released its spike.
//!
//! Streams that reach a sink are left as they are (the sink receives `L`
//! spikes instead of one); streams that reach any other neuron are closed
//! by a gate first. Iterations are rewritten into a self-replenishing
//! two-neuron loop instead.

mod context;
mod fragments;
mod iteration;
mod join;
mod normalizer;
mod sequential;
mod split;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use context::RewriteContext;
pub use fragments::{eliminate_iteration, eliminate_join, eliminate_sequential, eliminate_split, FragmentRewrite};
pub use iteration::IterationRewriter;
pub use join::JoinRewriter;
pub use normalizer::{insert_normalizer, make_normalizer};
pub use sequential::SequentialRewriter;
pub use split::SplitRewriter;

use crate::classify::{classify_constructs, cyclic_components, Construct, ConstructKind, RoutingGraph};
use crate::error::TransformError;
use crate::model::SystemDescription;
use crate::validate::validate_restricted;

/// Which canonical construction produced a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Construction {
    /// Delayed neuron on a chain replaced by a gate.
    SequentialGate,
    /// Several delayed neurons on one chain folded into one gate over the product stream.
    SequentialProduct,
    IterationLoop,
    SplitParent,
    SplitChild,
    JoinParent,
    JoinJunction,
    Normalizer,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::SequentialGate => "sequential: delayed neuron replaced by a stream gate",
            Construction::SequentialProduct => "sequential: delayed chain folded into one product-stream gate",
            Construction::IterationLoop => "iteration: delayed cycle replaced by a replenishing loop and gate",
            Construction::SplitParent => "split: delayed parent replaced by a stream gate",
            Construction::SplitChild => "split: delayed child replaced by a stream gate, sibling keeps the stream",
            Construction::JoinParent => "join: delayed parent replaced by a stream gate",
            Construction::JoinJunction => "join: junction delay moved onto gated inputs",
            Construction::Normalizer => "normalizer: stream folded back to one spike",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewriteResult {
    pub construct: Construct,
    pub construction: Construction,
    /// Neurons created or changed by this rewrite, and the synapses it added.
    pub fragment: SystemDescription,
    /// Original neuron id to the ids standing in for it afterwards.
    pub boundary_map: BTreeMap<String, Vec<String>>,
    /// Time offset this rewrite adds to every sink downstream of it.
    pub expected_offset: i64,
    /// Spike-count factor at sinks fed by the construct's undelayed branches.
    pub expected_count_factor: u64,
    /// True when a stream leaves this construct towards a sink and would need a
    /// normalizer if the sink fed further constructs.
    pub needs_normalizer: bool,
    pub notes: Vec<String>,
}

/// A construct rewriting strategy.
pub trait ConstructRewriter: Send + Sync {
    fn name(&self) -> &'static str;

    fn handles(&self) -> ConstructKind;

    /// Rewrites `construct` in place within `ctx`; `delayed` lists the delayed
    /// neurons assigned to it.
    fn rewrite(
        &self,
        ctx: &mut RewriteContext,
        construct: &Construct,
        delayed: &[String],
    ) -> Result<RewriteResult, TransformError>;
}

#[derive(Clone, Default)]
pub struct RewriterRegistry {
    rewriters: Vec<Arc<dyn ConstructRewriter>>,
}

impl fmt::Debug for RewriterRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl RewriterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four built-in rewriters.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(SequentialRewriter));
        r.register(Arc::new(IterationRewriter));
        r.register(Arc::new(SplitRewriter));
        r.register(Arc::new(JoinRewriter));
        r
    }

    /// Registers a rewriter, replacing any previous one with the same name.
    pub fn register(&mut self, rewriter: Arc<dyn ConstructRewriter>) {
        self.rewriters.retain(|r| r.name() != rewriter.name());
        self.rewriters.push(rewriter);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ConstructRewriter>> {
        self.rewriters.iter().find(|r| r.name() == name)
    }

    pub fn for_kind(&self, kind: ConstructKind) -> Option<&Arc<dyn ConstructRewriter>> {
        self.rewriters.iter().find(|r| r.handles() == kind)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rewriters.iter().map(|r| r.name()).collect()
    }

    /// Keeps only the named rewriters.
    pub fn restricted_to<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, TransformError> {
        let mut out = Self::new();
        for n in names {
            let r = self.get(n.as_ref()).ok_or_else(|| TransformError::UnknownRewriter(n.as_ref().to_string()))?;
            out.register(r.clone());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransformOutput {
    pub system: SystemDescription,
    pub results: Vec<RewriteResult>,
    /// Expected arrival offset per sink of the original system.
    pub sink_offsets: BTreeMap<String, i64>,
    /// Expected spike-count factor per sink of the original system.
    pub sink_factors: BTreeMap<String, u64>,
    /// Length of the source stream, 1 when nothing was rewritten.
    pub stream_len: u64,
    pub log: Vec<String>,
}

impl TransformOutput {
    /// The common offset, when every sink shares one.
    pub fn uniform_offset(&self) -> Option<i64> {
        let mut it = self.sink_offsets.values();
        let first = *it.next()?;
        it.all(|v| *v == first).then_some(first)
    }

    /// Sidecar report listing expected offsets, factors and applied constructions.
    pub fn report(&self) -> String {
        let mut out = String::new();
        if self.results.is_empty() {
            out.push_str("no rewrites\n");
        }
        for (sink, k) in &self.sink_offsets {
            let f = self.sink_factors.get(sink).copied().unwrap_or(1);
            out.push_str(&format!("sink {sink} offset={k} factor={f}\n"));
        }
        for r in &self.results {
            out.push_str(&format!("rewrite {} :: {}\n", r.construct, r.construction));
        }
        for line in &self.log {
            out.push_str(&format!("note {line}\n"));
        }
        out
    }
}

/// Rewrites `system` into a delay-free system using the built-in rewriters.
pub fn transform(system: &SystemDescription) -> Result<TransformOutput, TransformError> {
    transform_with(system, &RewriterRegistry::builtin())
}

pub fn transform_with(
    system: &SystemDescription,
    registry: &RewriterRegistry,
) -> Result<TransformOutput, TransformError> {
    let report = validate_restricted(system);
    if report.structural().next().is_some() {
        return Err(TransformError::Validation(report));
    }
    if let Some(v) = report.violations.first() {
        return Err(TransformError::OutOfScope(format!(
            "{v}; delays increasing along a sequential path are an open problem with no known construction"
        )));
    }

    let routing = classify_constructs(system)?;
    let sinks = system.resolved_sinks();
    let delayed: Vec<String> = system.neurons.iter().filter(|n| n.max_delay() > 0).map(|n| n.id.clone()).collect();

    if delayed.is_empty() {
        return Ok(TransformOutput {
            system: system.clone(),
            results: Vec::new(),
            sink_offsets: sinks.iter().map(|s| (s.clone(), 0)).collect(),
            sink_factors: sinks.iter().map(|s| (s.clone(), 1)).collect(),
            stream_len: 1,
            log: Vec::new(),
        });
    }
    for id in &delayed {
        if system.out_degree(id) == 0 {
            return Err(TransformError::OutOfScope(format!("delayed rule in sink neuron {id}")));
        }
    }

    if !cyclic_components(system).is_empty() {
        return transform_iteration(system, &routing, &delayed, registry);
    }

    let plan = plan_acyclic(system, &routing, &delayed)?;
    let mut ctx = RewriteContext::new(system, plan.stream_len)?;
    let mut results = Vec::new();
    for (construct, group) in &plan.assignments {
        let rewriter =
            registry.for_kind(construct.kind()).ok_or_else(|| TransformError::NoRewriter(construct.to_string()))?;
        ctx.begin();
        let result = rewriter.rewrite(&mut ctx, construct, group)?;
        results.push(result);
    }
    let mut out = ctx.finish()?;
    out.results = results;
    Ok(out)
}

struct Plan {
    stream_len: u64,
    assignments: Vec<(Construct, Vec<String>)>,
}

fn delay_of(system: &SystemDescription, id: &str) -> u64 {
    system.neuron(id).map(|n| n.max_delay()).unwrap_or(0)
}

/// Delayed neurons forming one chain `x1 -> ... -> xn` through neurons with a
/// single incoming and a single outgoing synapse, in upstream order.
fn single_chain(system: &SystemDescription, delayed: &[String]) -> Option<Vec<String>> {
    let first = delayed.iter().find(|x| delayed.iter().all(|y| y == *x || !system.reachable_from(y).contains(*x)))?;
    let mut order = vec![first.clone()];
    let mut cur = first.clone();
    while order.len() < delayed.len() {
        if system.out_degree(&cur) != 1 {
            return None;
        }
        let next = system.out_neighbors(&cur).next()?.to_string();
        if system.in_degree(&next) != 1 {
            return None;
        }
        if delayed.contains(&next) {
            order.push(next.clone());
        }
        cur = next;
    }
    Some(order)
}

fn plan_acyclic(
    system: &SystemDescription,
    routing: &RoutingGraph<'_>,
    delayed: &[String],
) -> Result<Plan, TransformError> {
    if delayed.len() > 1 {
        if let Some(chain) = single_chain(system, delayed) {
            let stream_len = chain.iter().map(|x| 1 + delay_of(system, x)).product();
            let construct = routing
                .constructs_of(ConstructKind::Sequential)
                .find(|c| chain.iter().all(|x| c.contains(x)))
                .cloned()
                .unwrap_or_else(|| Construct::Sequential { path: chain.clone() });
            return Ok(Plan { stream_len, assignments: vec![(construct, chain)] });
        }
        let values: std::collections::BTreeSet<u64> = delayed.iter().map(|x| delay_of(system, x)).collect();
        if values.len() > 1 {
            return Err(TransformError::OutOfScope(distinct_delay_reason(routing, delayed, system)));
        }
    }
    let stream_len = 1 + delay_of(system, &delayed[0]);

    let mut assignments: Vec<(Construct, Vec<String>)> = Vec::new();
    for x in delayed {
        let construct = owning_construct(routing, x)
            .ok_or_else(|| TransformError::OutOfScope(format!("delayed neuron {x} is not part of any construct")))?;
        match assignments.iter_mut().find(|(c, _)| *c == construct) {
            Some((_, group)) => group.push(x.clone()),
            None => assignments.push((construct, vec![x.clone()])),
        }
    }
    Ok(Plan { stream_len, assignments })
}

/// Junction of a join, parent of a join, parent of a split, child of a split,
/// then any chain.
fn owning_construct(routing: &RoutingGraph<'_>, x: &str) -> Option<Construct> {
    let cs = &routing.constructs;
    cs.iter()
        .find(|c| matches!(c, Construct::Join { junction, .. } if junction == x))
        .or_else(|| cs.iter().find(|c| matches!(c, Construct::Join { parents, .. } if parents.iter().any(|p| p == x))))
        .or_else(|| cs.iter().find(|c| matches!(c, Construct::Split { parent, .. } if parent == x)))
        .or_else(|| {
            cs.iter().find(|c| matches!(c, Construct::Split { children, .. } if children.iter().any(|p| p == x)))
        })
        .or_else(|| cs.iter().find(|c| matches!(c, Construct::Sequential { path } if path.iter().any(|p| p == x))))
        .cloned()
}

fn distinct_delay_reason(routing: &RoutingGraph<'_>, delayed: &[String], system: &SystemDescription) -> String {
    for c in &routing.constructs {
        match c {
            Construct::Split { parent, children } => {
                let ds: std::collections::BTreeSet<u64> =
                    children.iter().filter(|x| delayed.contains(x)).map(|x| delay_of(system, x)).collect();
                if ds.len() > 1 {
                    return format!("split at {parent} whose children carry different delays {ds:?}");
                }
            }
            Construct::Join { parents, junction, .. } => {
                let ds: std::collections::BTreeSet<u64> =
                    parents.iter().filter(|x| delayed.contains(x)).map(|x| delay_of(system, x)).collect();
                if ds.len() > 1 {
                    return format!("join at {junction} whose parents carry different delays {ds:?}");
                }
            }
            _ => {}
        }
    }
    format!("delays {:?} on parallel branches with different values", delayed)
}

fn transform_iteration(
    system: &SystemDescription,
    routing: &RoutingGraph<'_>,
    delayed: &[String],
    registry: &RewriterRegistry,
) -> Result<TransformOutput, TransformError> {
    let iterations: Vec<&Construct> = routing.constructs_of(ConstructKind::Iteration).collect();
    let construct = match iterations.as_slice() {
        [only] => *only,
        _ => return Err(TransformError::OutOfScope("more than one iteration in one system".into())),
    };
    if let Some(x) =
        delayed.iter().find(|x| !matches!(construct, Construct::Iteration { cycle, .. } if cycle.contains(x)))
    {
        return Err(TransformError::OutOfScope(format!("delayed neuron {x} outside the iteration cycle")));
    }
    let rewriter =
        registry.for_kind(ConstructKind::Iteration).ok_or_else(|| TransformError::NoRewriter(construct.to_string()))?;
    let mut ctx = RewriteContext::new(system, 1)?;
    ctx.begin();
    let result = rewriter.rewrite(&mut ctx, construct, delayed)?;
    let mut out = ctx.finish_without_streams();
    out.stream_len = ctx.stream_len();
    out.results = vec![result];
    Ok(out)
}
