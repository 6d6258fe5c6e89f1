//! Broadcast and convergecast: recursive fan-out over a graph structure,
//! optionally gathering acknowledgements or combined results back toward
//! the originator.
//!
//! Cycle safety is the target-function author's responsibility — these
//! operators do no deduplication, matching their intended use on trees.

use std::rc::Rc;

use crate::actor::{Frame, ProcessCore, ProcessCtx, ProcessKind, RegistryHandle, ReplyOutcome};
use crate::error::{SimError, SimResult};
use crate::net::{Address, Message, MessageType};
use crate::value::Value;

/// Computes the next round of forwarding targets for a broadcast-style
/// message (e.g. all tree children, or all neighbors except the sender).
pub type TargetsFn = Rc<dyn Fn(&ProcessCore, &Message) -> Vec<Address>>;

/// Register a broadcast handler: on receipt it pushes a `BROADCAST` frame
/// (which forwards the message to the next targets and, when the message
/// carries a reply address, gathers their acknowledgements before acking
/// upstream) and then runs `body` as the node's local action.
pub fn register_broadcast_handler(
    registry: &RegistryHandle,
    id: &'static str,
    kind: ProcessKind,
    message_type: MessageType,
    body: impl Fn(&mut ProcessCtx, &Message) -> SimResult<()> + 'static,
    next_targets: TargetsFn,
) {
    registry.register_handler(id, kind, message_type, move |ctx, message| {
        let forward = message.clone();
        let targets = next_targets.clone();
        ctx.push_frames(vec![Frame::thunk("BROADCAST", move |ctx| {
            broadcast_step(ctx, forward, targets)
        })])?;
        body(ctx, &message)
    });
}

fn broadcast_step(ctx: &mut ProcessCtx, message: Message, next_targets: TargetsFn) -> SimResult<()> {
    let targets = next_targets(ctx.core(), &message);
    match message.reply_channel.clone() {
        None => {
            // Pure flood: forward without reply channels, no acks.
            for target in &targets {
                ctx.send_message(target, Message::new(message.message_type(), message.payload.clone()))?;
            }
            Ok(())
        }
        Some(upstream) => {
            if targets.is_empty() {
                return ctx.send_message(&upstream, Message::rpc_done(Value::Unit));
            }
            let message_type = message.message_type();
            let payload = message.payload.clone();
            let listeners = ctx.send_message_batch(
                &mut || Message::new(message_type, payload.clone()),
                &targets,
            )?;
            ctx.with_replies(listeners, move |ctx, _acks| {
                ctx.send_message(&upstream, Message::rpc_done(Value::Unit))
            })
        }
    }
}

/// Register a convergecast handler: each node forwards the message to its
/// next targets, gathers their results, and replies
/// `combine(local_value, child_values)` upstream. A child that answered
/// with return-to-sender contributes an absent slot (`None`).
pub fn register_convergecast_handler(
    registry: &RegistryHandle,
    id: &'static str,
    kind: ProcessKind,
    message_type: MessageType,
    local_value: impl Fn(&ProcessCore, &Message) -> Value + 'static,
    combine: impl Fn(Value, Vec<Option<Value>>) -> Value + 'static,
    next_targets: TargetsFn,
) {
    let local_value = Rc::new(local_value);
    let combine = Rc::new(combine);
    registry.register_handler(id, kind, message_type, move |ctx, message| {
        let local_value = local_value.clone();
        let combine = combine.clone();
        let targets_fn = next_targets.clone();
        ctx.push_frames(vec![Frame::thunk("CONVERGECAST", move |ctx| {
            let upstream = message.reply_channel.clone().ok_or({
                SimError::MissingReplyChannel {
                    message_type: message.message_type(),
                }
            })?;
            let local = local_value(ctx.core(), &message);
            let targets = targets_fn(ctx.core(), &message);
            if targets.is_empty() {
                return ctx.send_message(&upstream, Message::rpc_done(local));
            }
            let message_type = message.message_type();
            let payload = message.payload.clone();
            let listeners = ctx.send_message_batch(
                &mut || Message::new(message_type, payload.clone()),
                &targets,
            )?;
            ctx.with_replies(listeners, move |ctx, replies| {
                let child_values: Vec<Option<Value>> = replies
                    .into_iter()
                    .map(|r| match r {
                        ReplyOutcome::Value(v) => Some(v),
                        ReplyOutcome::Message(m) => Some(m.payload),
                        ReplyOutcome::Absent => None,
                    })
                    .collect();
                let combined = combine(local, child_values);
                ctx.send_message(&upstream, Message::rpc_done(combined))
            })
        })])
    });
}
