use std::collections::BTreeMap;

use crate::classify::{Construct, ConstructKind};
use crate::error::TransformError;

use super::{ConstructRewriter, Construction, RewriteContext, RewriteResult};

/// Splits. A delayed parent or child becomes a gate. Undelayed siblings of a
/// delayed child keep relaying the stream, so their sinks receive `1 + d`
/// spikes.
#[derive(Debug, Clone, Copy, Default)]
pub struct SplitRewriter;

impl ConstructRewriter for SplitRewriter {
    fn name(&self) -> &'static str {
        "split"
    }

    fn handles(&self) -> ConstructKind {
        ConstructKind::Split
    }

    fn rewrite(
        &self,
        ctx: &mut RewriteContext,
        construct: &Construct,
        delayed: &[String],
    ) -> Result<RewriteResult, TransformError> {
        let Construct::Split { parent, children } = construct else {
            return Err(TransformError::NoRewriter(construct.to_string()));
        };
        let mut boundary = BTreeMap::new();
        let mut offset = 0;
        for x in delayed {
            if x == ctx.source() {
                offset = 1;
            }
            boundary.insert(x.clone(), ctx.gate(x)?);
        }
        let parent_delayed = delayed.contains(parent);
        let stream_siblings: Vec<&String> = children.iter().filter(|c| !delayed.contains(c)).collect();
        if parent_delayed {
            let notes = vec![format!("parent {parent} gates the stream; children see one spike")];
            return Ok(ctx.result(construct, Construction::SplitParent, boundary, offset, 1, false, notes));
        }
        let factor = ctx.stream_len();
        let needs_normalizer = !stream_siblings.is_empty();
        let notes = stream_siblings.iter().map(|c| format!("sibling {c} relays {factor} spikes")).collect();
        Ok(ctx.result(construct, Construction::SplitChild, boundary, offset, factor, needs_normalizer, notes))
    }
}
