//! Courier identities and inbox addresses.

use std::fmt;

/// Identifies a courier on the network. Opaque token for all-to-all
/// topologies; a coordinate pair on a grid.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CourierId {
    Node(u64),
    Grid { x: i64, y: i64 },
}

impl fmt::Display for CourierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CourierId::Node(n) => write!(f, "c{}", n),
            CourierId::Grid { x, y } => write!(f, "({},{})", x, y),
        }
    }
}

/// The key to one inbox: the courier that stores it plus the inbox slot
/// registered there. Possession of an `Address` is the capability to
/// receive from that inbox. Equality is structural, and an address stays
/// comparable and sendable after its inbox closes — only delivery fails.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Address {
    courier: CourierId,
    inbox_key: u64,
}

impl Address {
    /// Assemble an address from raw parts. Normally addresses come from
    /// `register`; fabricated keys can never be received from.
    pub fn new(courier: CourierId, inbox_key: u64) -> Address {
        Address { courier, inbox_key }
    }

    pub fn courier(&self) -> CourierId {
        self.courier
    }

    pub fn inbox_key(&self) -> u64 {
        self.inbox_key
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.courier, self.inbox_key)
    }
}
