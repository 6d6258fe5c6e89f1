//! The broadcast lock: recursive lock acquisition over a client tree.
//!
//! A holder sends `lock-request` to each of its targets. A client that is
//! already locked replies failure immediately (requests are never
//! queued); otherwise it marks itself locked, recursively locks its own
//! `process-lockable-targets`, and on full success opens a private "done"
//! inbox whose address it sends back as its success signal. The holder
//! proceeds on success; on any failure it is flagged `aborting` so
//! subsequent frames skip the critical work. Unlocking sends a finish
//! message to every acquired done-address and awaits each client's
//! acknowledgement; clients unwind their own subtree the same way.
//!
//! Locked clients keep servicing every other message type — only the lock
//! protocol itself refuses concurrent acquisition.

use crate::actor::{DispatchClause, ProcessCtx, ProcessKind, RegistryHandle, ReplyOutcome};
use crate::error::{SimError, SimResult};
use crate::instrument::EntryKind;
use crate::net::message::{MSG_LOCK_FINISH, MSG_LOCK_REQUEST};
use crate::net::{Address, Message};
use crate::stdlib::register_subordinate_handler;
use crate::value::Value;

/// Initiates lock requests: args = one list of target addresses.
pub const CMD_BROADCAST_LOCK: &str = "BROADCAST-LOCK";
/// Unwinds whatever the preceding lock broadcast acquired.
pub const CMD_BROADCAST_UNLOCK: &str = "BROADCAST-UNLOCK";

type AcquireCont = Box<dyn FnOnce(&mut ProcessCtx, Vec<Address>, bool) -> SimResult<()>>;
type ReleaseCont = Box<dyn FnOnce(&mut ProcessCtx) -> SimResult<()>>;

/// Send lock requests to `targets` and continue with the addresses that
/// signalled success plus an all-succeeded flag. Empty target sets
/// succeed immediately.
fn acquire_locks(ctx: &mut ProcessCtx, targets: Vec<Address>, k: AcquireCont) -> SimResult<()> {
    if targets.is_empty() {
        return k(ctx, Vec::new(), true);
    }
    let listeners = ctx.send_message_batch(
        &mut || Message::new(MSG_LOCK_REQUEST, Value::Unit),
        &targets,
    )?;
    ctx.with_replies(listeners, move |ctx, replies| {
        let mut acquired = Vec::new();
        let mut all = true;
        for reply in replies {
            match reply {
                ReplyOutcome::Value(Value::Address(done)) => acquired.push(done),
                // Unit result (refusal) or a dead client's return-to-sender.
                _ => all = false,
            }
        }
        k(ctx, acquired, all)
    })
}

/// Send finish messages to every acquired done-address and continue once
/// each client has acknowledged its release.
fn release_locks(ctx: &mut ProcessCtx, acquired: Vec<Address>, k: ReleaseCont) -> SimResult<()> {
    if acquired.is_empty() {
        return k(ctx);
    }
    let listeners = ctx.send_message_batch(
        &mut || Message::new(MSG_LOCK_FINISH, Value::Unit),
        &acquired,
    )?;
    ctx.with_replies(listeners, move |ctx, _| k(ctx))
}

fn log_lock(ctx: &ProcessCtx, kind: EntryKind, role: &'static str) {
    let name = ctx.core().name().to_owned();
    ctx.world()
        .logger
        .log_with(&name, kind, || vec![("role", role.to_owned())]);
}

/// Wire a process kind into the lock protocol: registers the
/// `BROADCAST-LOCK` / `BROADCAST-UNLOCK` commands and the lock-request
/// service. Returns the dispatch clause to include in the kind's table.
pub fn install_lockable(registry: &RegistryHandle, kind: ProcessKind) -> DispatchClause {
    registry.register_command(kind, CMD_BROADCAST_LOCK, |ctx, args| {
        let targets = parse_targets(args)?;
        if !ctx.core().lockable.holder_done_addresses.is_empty() {
            return Err(SimError::InvariantViolation(format!(
                "process `{}` already holds a lock",
                ctx.core().name()
            )));
        }
        ctx.core_mut().lockable.aborting = false;
        acquire_locks(
            ctx,
            targets,
            Box::new(|ctx, acquired, all| {
                ctx.core_mut().lockable.holder_done_addresses = acquired;
                if all {
                    log_lock(ctx, EntryKind::LockAcquired, "holder");
                } else {
                    ctx.core_mut().lockable.aborting = true;
                    log_lock(ctx, EntryKind::LockAborted, "holder");
                }
                Ok(())
            }),
        )
    });

    registry.register_command(kind, CMD_BROADCAST_UNLOCK, |ctx, _args| {
        let acquired = std::mem::take(&mut ctx.core_mut().lockable.holder_done_addresses);
        release_locks(
            ctx,
            acquired,
            Box::new(|ctx, | {
                ctx.core_mut().lockable.aborting = false;
                log_lock(ctx, EntryKind::LockReleased, "holder");
                Ok(())
            }),
        )
    });

    // The lock service takes simulation time (its own sub-acquisitions),
    // so it runs as a message subordinate rather than an interrupt.
    let handler_id: &'static str =
        Box::leak(format!("handle-lock-request[{kind}]").into_boxed_str());
    register_subordinate_handler(
        registry,
        handler_id,
        kind,
        MSG_LOCK_REQUEST,
        |ctx, message| {
            let reply = message
                .reply_channel
                .clone()
                .ok_or(SimError::MissingReplyChannel {
                    message_type: MSG_LOCK_REQUEST,
                })?;
            if ctx.core().lockable.locked {
                // Refuse immediately; never queue the request.
                return ctx.send_message(&reply, Message::rpc_done(Value::Unit));
            }
            ctx.core_mut().lockable.locked = true;
            let sub_targets = ctx.world().registry.lock_targets(ctx.core());
            acquire_locks(
                ctx,
                sub_targets,
                Box::new(move |ctx, acquired, all| {
                    if all {
                        client_hold(ctx, reply, acquired)
                    } else {
                        release_locks(
                            ctx,
                            acquired,
                            Box::new(move |ctx| {
                                ctx.core_mut().lockable.locked = false;
                                log_lock(ctx, EntryKind::LockAborted, "client");
                                ctx.send_message(&reply, Message::rpc_done(Value::Unit))
                            }),
                        )
                    }
                }),
            )
        },
    );

    DispatchClause::new(MSG_LOCK_REQUEST, handler_id)
}

/// Fully acquired: open the private done inbox, signal success, and hold
/// until the finish message arrives, then unwind downstream and
/// acknowledge.
fn client_hold(ctx: &mut ProcessCtx, reply: Address, acquired: Vec<Address>) -> SimResult<()> {
    let done = ctx.register_inbox()?;
    ctx.send_message(&reply, Message::rpc_done(Value::Address(done.clone())))?;
    log_lock(ctx, EntryKind::LockAcquired, "client");
    ctx.sync_receive(
        done.clone(),
        vec![(
            MSG_LOCK_FINISH,
            Box::new(move |ctx: &mut ProcessCtx, finish: Message| {
                let ack_to = finish
                    .reply_channel
                    .clone()
                    .ok_or(SimError::MissingReplyChannel {
                        message_type: MSG_LOCK_FINISH,
                    })?;
                release_locks(
                    ctx,
                    acquired,
                    Box::new(move |ctx| {
                        ctx.core_mut().lockable.locked = false;
                        ctx.unregister(&done)?;
                        log_lock(ctx, EntryKind::LockReleased, "client");
                        ctx.send_message(&ack_to, Message::rpc_done(Value::Unit))
                    }),
                )
            }),
        )],
    )
}

fn parse_targets(args: &[Value]) -> SimResult<Vec<Address>> {
    let list = args
        .first()
        .and_then(Value::as_list)
        .ok_or_else(|| SimError::InvariantViolation(
            "BROADCAST-LOCK expects a list of target addresses".to_owned(),
        ))?;
    list.iter()
        .map(|v| {
            v.as_address().cloned().ok_or_else(|| {
                SimError::InvariantViolation(
                    "BROADCAST-LOCK targets must be addresses".to_owned(),
                )
            })
        })
        .collect()
}
