//! Executable reference scenarios, doubling as the integration corpus.

pub mod coloring;
pub mod cpu;
pub mod delay;
pub mod ghs;
pub mod graph;
pub mod writers;

use crate::error::{SimError, SimResult};
use crate::net::TopologySpec;
use crate::sim::{canary_until, Simulation};
use crate::time::Time;
use crate::world::World;

/// Common knobs for a scenario run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Hard time bound; scenarios with their own completion detection use
    /// it as a safety net.
    pub canary: Option<Time>,
    /// Switch the logger and tracer on.
    pub instrumented: bool,
    /// Keep the kernel's `(time, label)` execution transcript.
    pub record_transcript: bool,
    /// Courier layout; processes are placed round-robin across it.
    pub topology: TopologySpec,
}

impl RunOptions {
    pub fn seeded(seed: u64) -> RunOptions {
        RunOptions {
            seed,
            canary: None,
            instrumented: true,
            record_transcript: false,
            topology: default_topology(),
        }
    }

    pub fn with_canary(mut self, t: Time) -> RunOptions {
        self.canary = Some(t);
        self
    }

    pub fn bare(mut self) -> RunOptions {
        self.instrumented = false;
        self
    }

    pub fn transcribed(mut self) -> RunOptions {
        self.record_transcript = true;
        self
    }

    pub fn on_topology(mut self, topology: TopologySpec) -> RunOptions {
        self.topology = topology;
        self
    }
}

/// Owned copy of the kernel transcript.
pub type Transcript = Vec<(Time, String)>;

pub(crate) fn take_transcript(sim: &Simulation) -> Option<Transcript> {
    sim.transcript().map(|t| {
        t.iter()
            .map(|(time, label)| (time.clone(), label.to_string()))
            .collect()
    })
}

/// How a bounded run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Completion {
    /// The completion predicate held at this time.
    Done(Time),
    /// The canary expired first.
    TimedOut(Time),
}

impl Completion {
    pub fn is_done(&self) -> bool {
        matches!(self, Completion::Done(_))
    }

    pub fn time(&self) -> &Time {
        match self {
            Completion::Done(t) | Completion::TimedOut(t) => t,
        }
    }
}

/// Run in fixed-size time chunks until `done` holds (checked between
/// chunks, when no event is mid-flight) or the deadline passes. Processes
/// re-tick forever by design, so every networked scenario terminates this
/// way rather than by queue exhaustion.
pub fn run_until(
    sim: &mut Simulation,
    world: &World,
    deadline: Time,
    chunk: Time,
    mut done: impl FnMut(&World) -> bool,
) -> SimResult<Completion> {
    let mut bound = chunk.clone();
    loop {
        if done(world) {
            return Ok(Completion::Done(sim.horizon().clone()));
        }
        let upto = bound.clone().min(deadline.clone());
        sim.run(Some(canary_until(upto.clone())))?;
        if done(world) {
            return Ok(Completion::Done(sim.horizon().clone()));
        }
        if upto == deadline {
            return Ok(Completion::TimedOut(sim.horizon().clone()));
        }
        bound = bound + chunk.clone();
    }
}

/// Construction-time validation helper.
pub(crate) fn construction_error(msg: impl Into<String>) -> SimError {
    SimError::ScenarioConstruction(msg.into())
}

/// Default topology when a scenario doesn't care about network shape: a
/// single courier serving every process.
pub fn default_topology() -> TopologySpec {
    TopologySpec::all_to_all(1)
}
