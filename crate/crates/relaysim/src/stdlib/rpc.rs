//! The callee half of the RPC pattern.
//!
//! The caller half — private reply inbox, blocking receive, unregister —
//! is `send_message_batch` plus `with_replies` on the actor side.

use crate::actor::{HandlerBody, ProcessCtx, ProcessKind, RegistryHandle};
use crate::error::SimResult;
use crate::net::{Message, MessageType};
use crate::value::Value;
use std::rc::Rc;

/// Wrap a result-producing handler body so that, when the inbound message
/// carries a reply address, the body's value is sent back in an
/// `rpc-done` envelope. Body errors propagate before any reply is sent.
pub fn rpc_wrap(
    body: impl Fn(&mut ProcessCtx, &Message) -> SimResult<Value> + 'static,
) -> HandlerBody {
    Rc::new(move |ctx, message| {
        let result = body(ctx, &message)?;
        if let Some(reply) = &message.reply_channel {
            ctx.send_message(reply, Message::rpc_done(result))?;
        }
        Ok(())
    })
}

/// Register an RPC-wrapped message handler under `id`.
pub fn register_rpc_handler(
    registry: &RegistryHandle,
    id: &'static str,
    kind: ProcessKind,
    message_type: MessageType,
    body: impl Fn(&mut ProcessCtx, &Message) -> SimResult<Value> + 'static,
) {
    let wrapped = rpc_wrap(body);
    registry.register_handler(id, kind, message_type, move |ctx, message| {
        wrapped(ctx, message)
    });
}
