use std::collections::BTreeMap;

use crate::classify::{Construct, ConstructKind};
use crate::error::TransformError;

use super::{ConstructRewriter, Construction, RewriteContext, RewriteResult};

/// Joins. A delayed parent becomes a gate. A delayed junction loses its delay
/// and every input is gated instead, so the junction fires once all gated
/// inputs have arrived.
#[derive(Debug, Clone, Copy, Default)]
pub struct JoinRewriter;

impl ConstructRewriter for JoinRewriter {
    fn name(&self) -> &'static str {
        "join"
    }

    fn handles(&self) -> ConstructKind {
        ConstructKind::Join
    }

    fn rewrite(
        &self,
        ctx: &mut RewriteContext,
        construct: &Construct,
        delayed: &[String],
    ) -> Result<RewriteResult, TransformError> {
        let Construct::Join { junction, .. } = construct else {
            return Err(TransformError::NoRewriter(construct.to_string()));
        };
        let mut boundary = BTreeMap::new();
        if delayed.contains(junction) {
            if delayed.len() > 1 {
                return Err(TransformError::OutOfScope(format!(
                    "join at {junction} with delays on both the junction and a parent"
                )));
            }
            ctx.strip_delay(junction)?;
            ctx.mark_delayed_junction(junction);
            boundary.insert(junction.clone(), vec![junction.clone()]);
            let notes = vec![format!("inputs of {junction} are gated over {} spikes", ctx.stream_len())];
            return Ok(ctx.result(construct, Construction::JoinJunction, boundary, 0, 1, false, notes));
        }
        let mut offset = 0;
        for x in delayed {
            if x == ctx.source() {
                offset = 1;
            }
            boundary.insert(x.clone(), ctx.gate(x)?);
        }
        let notes = delayed.iter().map(|x| format!("parent {x} gates the stream")).collect();
        Ok(ctx.result(construct, Construction::JoinParent, boundary, offset, 1, false, notes))
    }
}
