//! Command-stack frames.
//!
//! A process's computation lives on stacks of frames. Most frames are
//! plain data commands — a name plus arguments, looked up in the command
//! registry at pop time — so the stack doubles as call stack, program
//! counter, and executable memory. The remaining variants are the
//! blocking constructs (busy-wait receives and reply gathering) and
//! internal continuation thunks.

use std::fmt;

use crate::actor::ProcessCtx;
use crate::error::SimResult;
use crate::net::message::{MSG_RETURN_TO_SENDER, MSG_RPC_DONE};
use crate::net::{Address, Message, MessageType};
use crate::time::Time;
use crate::value::Value;

/// A `(COMMAND-NAME . ARGS)` cell.
#[derive(Clone, Debug)]
pub struct Command {
    pub name: &'static str,
    pub args: Vec<Value>,
}

impl Command {
    pub fn new(name: &'static str, args: Vec<Value>) -> Command {
        Command { name, args }
    }

    pub fn nullary(name: &'static str) -> Command {
        Command {
            name,
            args: Vec::new(),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for arg in &self.args {
            write!(f, " {}", arg)?;
        }
        write!(f, ")")
    }
}

/// Body run when a receive clause matches.
pub type ClauseBody = Box<dyn FnOnce(&mut ProcessCtx, Message) -> SimResult<()>>;

/// One gathered reply slot.
#[derive(Debug)]
pub enum ReplyOutcome {
    /// The unboxed result carried by the `rpc-done` envelope.
    Value(Value),
    /// The whole reply message (when unboxing is off).
    Message(Message),
    /// The peer could not answer: a return-to-sender arrived instead.
    Absent,
}

impl ReplyOutcome {
    pub fn value(&self) -> Option<&Value> {
        match self {
            ReplyOutcome::Value(v) => Some(v),
            ReplyOutcome::Message(m) => Some(&m.payload),
            ReplyOutcome::Absent => None,
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, ReplyOutcome::Absent)
    }
}

/// Message types that resolve a reply slot.
pub(crate) const REPLY_TYPES: [MessageType; 2] = [MSG_RPC_DONE, MSG_RETURN_TO_SENDER];

pub struct SyncReceiveFrame {
    pub(crate) address: Address,
    pub(crate) clauses: Vec<(MessageType, ClauseBody)>,
    pub(crate) peruse: bool,
}

pub struct AwaitRepliesFrame {
    pub(crate) addresses: Vec<Address>,
    pub(crate) unbox: bool,
    pub(crate) started_at: Time,
    pub(crate) body: Box<dyn FnOnce(&mut ProcessCtx, Vec<ReplyOutcome>) -> SimResult<()>>,
}

/// One stack entry. Exactly one frame per strand pops per tick.
pub enum Frame {
    /// Named command; its body is looked up in the registry at pop time.
    Command(Command),
    /// Internal continuation step (broadcast forwarding, lock phases…).
    Thunk {
        label: &'static str,
        run: Box<dyn FnOnce(&mut ProcessCtx) -> SimResult<()>>,
    },
    /// Busy-wait receive: retries every tick until a clause matches,
    /// blocking the frames beneath it on this strand.
    SyncReceive(SyncReceiveFrame),
    /// Busy-wait until every listed reply inbox holds an `rpc-done` or a
    /// return-to-sender, then run the body over the gathered values.
    AwaitReplies(AwaitRepliesFrame),
}

impl Frame {
    pub fn thunk(
        label: &'static str,
        run: impl FnOnce(&mut ProcessCtx) -> SimResult<()> + 'static,
    ) -> Frame {
        Frame::Thunk {
            label,
            run: Box::new(run),
        }
    }

    /// Name recorded in command-executed log entries.
    pub fn label(&self) -> String {
        match self {
            Frame::Command(c) => c.to_string(),
            Frame::Thunk { label, .. } => format!("({})", label),
            Frame::SyncReceive(_) => "(SYNC-RECEIVE)".to_owned(),
            Frame::AwaitReplies(_) => "(AWAIT-REPLIES)".to_owned(),
        }
    }
}
