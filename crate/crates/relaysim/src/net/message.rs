//! Messages and the well-known wire-level type tags.

use std::fmt;

use super::Address;
use crate::value::Value;

/// Discriminant tag for message dispatch. Fixed at construction.
///
/// Receive clauses may name a *family* of types with a trailing `*`:
/// `"msg-mst-*"` matches every type starting with `msg-mst-`. This is the
/// lightweight stand-in for subtype relationships between message types —
/// a family clause scans the inbox oldest-first across all its members,
/// which is how a protocol opts into strict arrival-order servicing.
pub type MessageType = &'static str;

/// Does a clause pattern accept a concrete message type?
pub fn type_matches(pattern: &str, actual: &str) -> bool {
    match pattern.strip_suffix('*') {
        Some(prefix) => actual.starts_with(prefix),
        None => pattern == actual,
    }
}

/// Courier-generated failure notice for undeliverable messages.
pub const MSG_RETURN_TO_SENDER: MessageType = "return-to-sender";
/// Envelope carrying the result of a serviced RPC back to a private inbox.
pub const MSG_RPC_DONE: MessageType = "rpc-done";
/// Requests a recursive lock on the receiver.
pub const MSG_LOCK_REQUEST: MessageType = "lock-request";
/// Tells a locked client to unwind and release.
pub const MSG_LOCK_FINISH: MessageType = "lock-finish";

#[derive(Clone, Debug)]
pub struct Message {
    message_type: MessageType,
    /// Optional return address: used for RPC replies, and by couriers to
    /// signal delivery failure back to the sender.
    pub reply_channel: Option<Address>,
    pub payload: Value,
}

impl Message {
    pub fn new(message_type: MessageType, payload: Value) -> Message {
        Message {
            message_type,
            reply_channel: None,
            payload,
        }
    }

    pub fn with_reply(mut self, reply: Address) -> Message {
        self.reply_channel = Some(reply);
        self
    }

    pub fn message_type(&self) -> MessageType {
        self.message_type
    }

    /// The envelope a remote process sends back once an RPC completes.
    pub fn rpc_done(result: Value) -> Message {
        Message::new(MSG_RPC_DONE, result)
    }

    /// Generated only by couriers: records the type of the message that
    /// could not be delivered.
    pub fn return_to_sender(original: MessageType) -> Message {
        Message::new(MSG_RETURN_TO_SENDER, Value::Str(original.to_owned()))
    }

    pub fn is_return_to_sender(&self) -> bool {
        self.message_type == MSG_RETURN_TO_SENDER
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.message_type, self.payload)
    }
}
