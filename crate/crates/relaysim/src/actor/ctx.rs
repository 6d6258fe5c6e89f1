//! The execution context handed to command bodies and message handlers.

use std::any::Any;

use crate::actor::command::{
    AwaitRepliesFrame, ClauseBody, Command, Frame, ReplyOutcome, SyncReceiveFrame, REPLY_TYPES,
};
use crate::actor::{ProcessCore, ProcessHandle, SpawnSpec};
use crate::error::{SimError, SimResult};
use crate::instrument::EntryKind;
use crate::net::{Address, Message, MessageType};
use crate::sim::{RngHandle, SchedulingContext};
use crate::time::Time;
use crate::value::Value;
use crate::world::World;

/// Everything a command or handler body may touch: the owning process's
/// state, the network (bound to the process's local courier), the shared
/// RNG, and the scheduler of the tick being executed. Inter-process
/// effects flow only through addresses.
pub struct ProcessCtx<'a> {
    pub(crate) core: &'a mut ProcessCore,
    pub(crate) world: &'a World,
    pub(crate) now: Time,
    pub(crate) sched: &'a mut SchedulingContext,
    /// Index of the strand whose frame is executing; pushes land here.
    pub(crate) strand: usize,
}

impl<'a> ProcessCtx<'a> {
    pub fn now(&self) -> &Time {
        &self.now
    }

    pub fn core(&self) -> &ProcessCore {
        self.core
    }

    pub fn core_mut(&mut self) -> &mut ProcessCore {
        self.core
    }

    /// Kind-specific process state.
    pub fn state<T: Any>(&self) -> &T {
        self.core.state()
    }

    pub fn state_mut<T: Any>(&mut self) -> &mut T {
        self.core.state_mut()
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn rng(&self) -> &RngHandle {
        &self.world.rng
    }

    pub fn public_address(&self) -> Address {
        self.core.public_address().clone()
    }

    // -- network -----------------------------------------------------------

    pub fn send_message(&self, destination: &Address, message: Message) -> SimResult<()> {
        self.world.net.send_message(destination, message)
    }

    pub fn send_message_batch(
        &self,
        constructor: &mut dyn FnMut() -> Message,
        destinations: &[Address],
    ) -> SimResult<Vec<Address>> {
        self.world.net.send_message_batch(constructor, destinations)
    }

    /// Open a private inbox on the local courier.
    pub fn register_inbox(&self) -> SimResult<Address> {
        self.world.net.register()
    }

    pub fn unregister(&self, address: &Address) -> SimResult<()> {
        self.world.net.unregister(address)
    }

    /// Non-blocking receive; see `NetworkHandle::receive_match`.
    pub fn receive_match(
        &self,
        address: &Address,
        types: &[MessageType],
        peruse: bool,
    ) -> SimResult<Option<(usize, Message)>> {
        self.world.net.receive_match(address, types, peruse)
    }

    // -- command stack ------------------------------------------------------

    /// Push commands onto the active strand so that the first listed
    /// command executes next, ahead of all pre-existing frames.
    pub fn process_continuation(&mut self, commands: Vec<Command>) -> SimResult<()> {
        self.push_frames(commands.into_iter().map(Frame::Command).collect())
    }

    /// Frame-level variant of [`ProcessCtx::process_continuation`].
    pub fn push_frames(&mut self, frames: Vec<Frame>) -> SimResult<()> {
        self.ensure_alive()?;
        let strand = &mut self.core.strands[self.strand];
        for frame in frames.into_iter().rev() {
            strand.push_front(frame);
        }
        Ok(())
    }

    pub(crate) fn push_frame_front(&mut self, frame: Frame) {
        self.core.strands[self.strand].push_front(frame);
    }

    /// Add a parallel strand that shares this process's state and public
    /// identity; it advances one frame per tick alongside the others and
    /// disappears when empty.
    pub fn spawn_subordinate(&mut self, frames: Vec<Frame>) -> SimResult<()> {
        self.ensure_alive()?;
        self.core.strands.push(frames.into());
        Ok(())
    }

    /// Kill this process: unregister its public address, discard all
    /// remaining frames, never tick again.
    pub fn process_die(&mut self) -> SimResult<()> {
        self.ensure_alive()?;
        self.core.alive = false;
        self.world.net.unregister(self.core.public_address())?;
        self.world.deref.remove(self.core.public_address());
        for strand in &mut self.core.strands {
            strand.clear();
        }
        let name = self.core.name().to_owned();
        self.world
            .logger
            .log_with(&name, EntryKind::ProcessDied, Vec::new);
        Ok(())
    }

    /// Blocking receive: tries the clauses now and, on a miss, re-pushes
    /// itself to retry next tick, blocking the frames beneath it on this
    /// strand.
    pub fn sync_receive(
        &mut self,
        address: Address,
        clauses: Vec<(MessageType, ClauseBody)>,
    ) -> SimResult<()> {
        self.ensure_alive()?;
        let frame = SyncReceiveFrame {
            address,
            clauses,
            peruse: true,
        };
        try_sync_receive(self, frame)
    }

    /// Busy-wait until every reply address holds an `rpc-done` or a
    /// return-to-sender, then run `body` over the results in address
    /// order (unboxed to the carried values; failed slots are absent).
    /// All reply inboxes are unregistered before the body runs.
    pub fn with_replies(
        &mut self,
        addresses: Vec<Address>,
        body: impl FnOnce(&mut ProcessCtx, Vec<ReplyOutcome>) -> SimResult<()> + 'static,
    ) -> SimResult<()> {
        self.with_replies_opt(addresses, true, body)
    }

    /// As [`ProcessCtx::with_replies`], with control over unboxing: when
    /// `unbox` is false the outcome slots carry whole reply messages.
    pub fn with_replies_opt(
        &mut self,
        addresses: Vec<Address>,
        unbox: bool,
        body: impl FnOnce(&mut ProcessCtx, Vec<ReplyOutcome>) -> SimResult<()> + 'static,
    ) -> SimResult<()> {
        self.ensure_alive()?;
        let frame = AwaitRepliesFrame {
            addresses,
            unbox,
            started_at: self.now.clone(),
            body: Box::new(body),
        };
        try_await_replies(self, frame)
    }

    // -- data stack ----------------------------------------------------------

    pub fn push_data(&mut self, value: Value) {
        self.core.data_stack.push(value);
    }

    pub fn pop_data(&mut self) -> SimResult<Value> {
        self.core.data_stack.pop().ok_or_else(|| {
            SimError::InvariantViolation(format!(
                "data stack underflow in process `{}`",
                self.core.name()
            ))
        })
    }

    // -- misc ----------------------------------------------------------------

    /// Emit a user-defined log entry attributed to this process.
    pub fn log_user(&self, attrs: Vec<(&'static str, String)>) {
        self.world.logger.log_user(self.core.name(), attrs);
    }

    /// Spawn a subprocess; its first tick is scheduled through the current
    /// event's context and its public address is returned for recording.
    pub fn spawn(&mut self, spec: SpawnSpec) -> SimResult<ProcessHandle> {
        let start = spec.start.clone().max(self.now.clone());
        let (handle, event) =
            crate::actor::create_process(self.world, SpawnSpec { start, ..spec })?;
        self.sched.schedule_event(event)?;
        Ok(handle)
    }

    /// Direct access to the scheduling context of the executing tick.
    pub fn scheduler(&mut self) -> &mut SchedulingContext {
        self.sched
    }

    fn ensure_alive(&self) -> SimResult<()> {
        if self.core.is_alive() {
            Ok(())
        } else {
            Err(SimError::DeadProcess {
                name: self.core.name().to_owned(),
            })
        }
    }
}

/// Attempt a sync-receive now; push the retry frame on a miss.
pub(crate) fn try_sync_receive(ctx: &mut ProcessCtx, frame: SyncReceiveFrame) -> SimResult<()> {
    let types: Vec<MessageType> = frame.clauses.iter().map(|(t, _)| *t).collect();
    match ctx
        .world
        .net
        .receive_match(&frame.address, &types, frame.peruse)?
    {
        Some((idx, message)) => {
            let (_, body) = frame
                .clauses
                .into_iter()
                .nth(idx)
                .expect("matched clause exists");
            body(ctx, message)
        }
        None => {
            ctx.push_frame_front(Frame::SyncReceive(frame));
            Ok(())
        }
    }
}

/// Attempt to resolve a reply-gathering wait now; push the retry frame if
/// any slot is still empty.
pub(crate) fn try_await_replies(ctx: &mut ProcessCtx, frame: AwaitRepliesFrame) -> SimResult<()> {
    for address in &frame.addresses {
        if !ctx.world.net.peek_one_of(address, &REPLY_TYPES)? {
            ctx.push_frame_front(Frame::AwaitReplies(frame));
            return Ok(());
        }
    }
    let AwaitRepliesFrame {
        addresses,
        unbox,
        started_at,
        body,
    } = frame;
    let mut outcomes = Vec::with_capacity(addresses.len());
    for address in &addresses {
        let message = ctx
            .world
            .net
            .pop_one_of(address, &REPLY_TYPES)?
            .expect("peeked above");
        outcomes.push(if message.is_return_to_sender() {
            ReplyOutcome::Absent
        } else if unbox {
            ReplyOutcome::Value(message.payload)
        } else {
            ReplyOutcome::Message(message)
        });
        ctx.world.net.unregister(address)?;
    }
    let waited = &ctx.now - &started_at;
    ctx.world
        .tracer
        .record_rpc_wait(ctx.core.name(), addresses.len(), waited);
    body(ctx, outcomes)
}
