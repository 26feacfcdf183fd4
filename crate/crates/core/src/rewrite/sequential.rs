use std::collections::BTreeMap;

use crate::classify::{Construct, ConstructKind};
use crate::error::TransformError;

use super::{ConstructRewriter, Construction, RewriteContext, RewriteResult};

/// Chains. A single delayed neuron becomes a gate; several delayed neurons on
/// one chain share a single gate over a stream whose length is the product of
/// their `1 + d` factors, and the remaining delays are dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialRewriter;

impl ConstructRewriter for SequentialRewriter {
    fn name(&self) -> &'static str {
        "sequential"
    }

    fn handles(&self) -> ConstructKind {
        ConstructKind::Sequential
    }

    fn rewrite(
        &self,
        ctx: &mut RewriteContext,
        construct: &Construct,
        delayed: &[String],
    ) -> Result<RewriteResult, TransformError> {
        let (first, rest) = delayed
            .split_first()
            .ok_or_else(|| TransformError::OutOfScope(format!("{construct} has no delayed neuron")))?;
        let mut boundary = BTreeMap::new();
        let is_source = first == ctx.source();
        boundary.insert(first.clone(), ctx.gate(first)?);
        for x in rest {
            ctx.strip_delay(x)?;
            boundary.insert(x.clone(), vec![x.clone()]);
        }
        let (construction, notes) = if rest.is_empty() {
            (Construction::SequentialGate, vec![format!("{first} gates a stream of {}", ctx.stream_len())])
        } else {
            let all: Vec<&str> = delayed.iter().map(String::as_str).collect();
            (
                Construction::SequentialProduct,
                vec![format!("delays of {} folded into one gate over {} spikes", all.join(", "), ctx.stream_len())],
            )
        };
        Ok(ctx.result(construct, construction, boundary, i64::from(is_source), 1, false, notes))
    }
}
