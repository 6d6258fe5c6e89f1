//! Error types shared across the emulation layers.

use thiserror::Error;

use crate::time::Time;

/// Convenience alias used throughout the crate.
pub type SimResult<T> = Result<T, SimError>;

/// Everything that can go wrong inside a simulation run.
///
/// Most of these signal bugs in user code (scheduling into the past,
/// popping an unregistered command) rather than recoverable conditions;
/// the run loop propagates them out of `Simulation::run` annotated with
/// the horizon at which they fired.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled at {requested} which is before the horizon {horizon}")]
    SchedulingInThePast { requested: Time, horizon: Time },

    #[error("scheduling context used after finish was invoked")]
    UseAfterFinish,

    #[error("no default handler registered for entity kind `{kind}`")]
    MissingHandler { kind: &'static str },

    #[error("inbox {address} is closed or was never registered")]
    ClosedInbox { address: String },

    #[error("inbox {address} unregistered twice")]
    DoubleUnregister { address: String },

    #[error("no local courier bound around this network operation")]
    NoLocalCourier,

    #[error("courier {courier} does not exist in this topology")]
    UnknownCourier { courier: String },

    #[error("router on {courier} chose {chosen}, which is not a neighbor")]
    RoutingFailure { courier: String, chosen: String },

    #[error("no route from {courier} toward {destination}")]
    UnreachableDestination { courier: String, destination: String },

    #[error("process kind `{kind}` has no command named `{name}`")]
    UnknownCommand { kind: &'static str, name: String },

    #[error("unknown message handler id `{id}`")]
    UnknownHandler { id: &'static str },

    #[error("operation on dead process `{name}`")]
    DeadProcess { name: String },

    #[error("dereference registry is disabled")]
    DisabledRegistry,

    #[error("address {address} is not owned by any live process")]
    UnknownAddress { address: String },

    #[error("message of type `{message_type}` requires a reply channel")]
    MissingReplyChannel { message_type: &'static str },

    #[error("scenario construction failed: {0}")]
    ScenarioConstruction(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("in process `{name}`: {source}")]
    InProcess {
        name: String,
        #[source]
        source: Box<SimError>,
    },

    #[error("at simulation time {time}: {source}")]
    At {
        time: Time,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    /// Annotate an error with the horizon at which it surfaced.
    pub fn at(self, time: Time) -> SimError {
        match self {
            SimError::At { .. } => self,
            other => SimError::At {
                time,
                source: Box::new(other),
            },
        }
    }

    /// Strip time and process annotations, for matching in tests.
    pub fn root(&self) -> &SimError {
        match self {
            SimError::At { source, .. } => source.root(),
            SimError::InProcess { source, .. } => source.root(),
            other => other,
        }
    }
}
