use std::collections::BTreeMap;

use crate::classify::{Construct, ConstructKind};
use crate::error::TransformError;
use crate::guard::UnaryGuard;
use crate::model::{Neuron, Rule};

use super::{ConstructRewriter, Construction, RewriteContext, RewriteResult};

/// Two-neuron cycles. With `D` the sum of the cycle's delays, the source
/// becomes a reservoir holding `1 + D` spikes and its partner fires
/// `a^{1+D} -> a^{1+D}`, handing the whole batch back. One round trip takes
/// `2 + D` steps, the period of the delayed cycle. A gate between the partner
/// and its taps turns each batch into one spike.
#[derive(Debug, Clone, Copy, Default)]
pub struct IterationRewriter;

impl ConstructRewriter for IterationRewriter {
    fn name(&self) -> &'static str {
        "iteration"
    }

    fn handles(&self) -> ConstructKind {
        ConstructKind::Iteration
    }

    fn rewrite(
        &self,
        ctx: &mut RewriteContext,
        construct: &Construct,
        delayed: &[String],
    ) -> Result<RewriteResult, TransformError> {
        let Construct::Iteration { cycle, taps } = construct else {
            return Err(TransformError::NoRewriter(construct.to_string()));
        };
        let [s, w] = cycle.as_slice() else {
            return Err(TransformError::OutOfScope(format!(
                "iteration over {} neurons; only two-neuron cycles are supported",
                cycle.len()
            )));
        };
        if s != ctx.source() {
            return Err(TransformError::OutOfScope(format!("iteration at {s} does not start at the source")));
        }
        if let Some(t) = taps.iter().find(|t| ctx.system().has_synapse(s, t)) {
            return Err(TransformError::OutOfScope(format!("tap {t} fed by the source {s} of the iteration")));
        }
        let mut total = 0;
        for id in [s, w] {
            let rule = ctx.single_rule(id)?;
            if rule.consumed != 1 || rule.produced != 1 || rule.guard.singleton() != Some(1) {
                return Err(TransformError::OutOfScope(format!("cycle neuron {id} has rule {rule}, expected a relay")));
            }
            total += rule.delay;
        }
        let batch = 1 + total;
        ctx.set_stream_len(batch);

        ctx.replace_rule(s, Rule::reservoir())?;
        ctx.set_initial_spikes(s, batch)?;
        ctx.replace_rule(w, Rule::new(UnaryGuard::exact(batch), batch, batch, 0))?;
        let gate = ctx.fresh_id(&format!("{w}_gate"));
        ctx.insert_neuron_after(
            w,
            Neuron::new(gate.clone(), 0, vec![Rule::new(UnaryGuard::exact(batch), batch, 1, 0)]),
        );
        ctx.add_synapse(w, &gate);
        for t in taps {
            ctx.remove_synapse(w, t);
            ctx.add_synapse(&gate, t);
        }
        for sink in ctx.original().resolved_sinks() {
            ctx.declare_offset(&sink, 1);
        }

        let mut boundary = BTreeMap::new();
        boundary.insert(s.clone(), vec![s.clone()]);
        boundary.insert(w.clone(), vec![w.clone(), gate.clone()]);
        let notes = vec![
            format!("loop period {} from delays on {}", 2 + total, delayed.join(", ")),
            format!("gate {gate} emits one spike per batch of {batch}"),
        ];
        Ok(ctx.result(construct, Construction::IterationLoop, boundary, 1, 1, false, notes))
    }
}
