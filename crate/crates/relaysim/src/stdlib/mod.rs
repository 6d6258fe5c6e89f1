//! Protocol patterns atop the actor layer: remote procedure calls,
//! non-interrupting message subordinates, broadcast and convergecast over
//! graph structures, and the recursive broadcast lock.

mod broadcast;
mod lock;
mod rpc;

pub use broadcast::{register_broadcast_handler, register_convergecast_handler, TargetsFn};
pub use lock::{install_lockable, CMD_BROADCAST_LOCK, CMD_BROADCAST_UNLOCK};
pub use rpc::{register_rpc_handler, rpc_wrap};

use crate::actor::{Command, Frame, ProcessCtx, ProcessKind, RegistryHandle};
use crate::error::SimResult;
use crate::net::{Message, MessageType};
use std::rc::Rc;

/// Add a parallel strand executing `commands`, sharing the process's
/// state and public identity. The primary strand is not blocked.
pub fn spawn_subordinate(ctx: &mut ProcessCtx, commands: Vec<Command>) -> SimResult<()> {
    ctx.spawn_subordinate(commands.into_iter().map(Frame::Command).collect())
}

/// Register a non-interrupting message handler: instead of running inline
/// in the dispatch phase, the body is handed the message on a fresh
/// subordinate strand, where blocking constructs (`sync_receive`,
/// `with_replies`) are available.
pub fn register_subordinate_handler(
    registry: &RegistryHandle,
    id: &'static str,
    kind: ProcessKind,
    message_type: MessageType,
    body: impl Fn(&mut ProcessCtx, Message) -> SimResult<()> + 'static,
) {
    let body = Rc::new(body);
    registry.register_handler(id, kind, message_type, move |ctx, message| {
        let body = body.clone();
        ctx.spawn_subordinate(vec![Frame::thunk("SUBORDINATE", move |ctx| {
            body(ctx, message)
        })])
    });
}
