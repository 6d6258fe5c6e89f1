//! Deterministic discrete-event emulation of real-time distributed
//! algorithms over configurable hardware.
//!
//! The crate is layered:
//!
//! - [`sim`] — the event kernel: exact rational [`time`], a bucketed event
//!   queue with a monotone horizon, scheduling contexts, and default
//!   handlers for simulated entities.
//! - [`net`] — the "physical" layer: couriers holding inboxes and
//!   transmission queues, all-to-all and grid topologies with procedural
//!   routing, and the messaging primitives with delivery guarantees.
//! - [`actor`] — processes: per-tick message dispatch through guarded
//!   handler tables and computation driven by command stacks in
//!   continuation-passing style.
//! - [`stdlib`] — protocol patterns over the actor layer: RPC, message
//!   subordinates, broadcast, convergecast, and the recursive broadcast
//!   lock.
//! - [`instrument`] — structured logging, message-complexity reports,
//!   opt-in address dereferencing, and RPC call tracing.
//! - [`scenarios`] — executable reference scenarios (self-scheduling
//!   callbacks, toy processors, a factorial server, randomized
//!   3-coloring, writers/reader mutual exclusion, and minimum-spanning-tree
//!   construction), which double as the integration corpus.
//!
//! Everything is single-threaded: a simulation advances one event at a
//! time and all concurrency is expressed through event interleaving. Runs
//! are reproducible — a seed plus a scenario configuration fully
//! determines the transcript.

pub mod actor;
pub mod error;
pub mod instrument;
pub mod net;
pub mod scenarios;
pub mod sim;
pub mod stdlib;
pub mod time;
pub mod value;

mod world;

pub use error::{SimError, SimResult};
pub use sim::{canary_until, Event, SchedulingContext, Simulation};
pub use time::{Rate, Time};
pub use value::Value;
pub use world::World;
