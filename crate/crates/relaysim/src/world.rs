//! Bundle of the shared services a running scenario needs.

use crate::actor;
use crate::error::SimResult;
use crate::instrument::{DerefRegistry, Logger, Tracer};
use crate::net::{NetworkHandle, TopologySpec};
use crate::actor::RegistryHandle;
use crate::sim::{RngHandle, Simulation};

/// Cheap-to-clone handles to the network, protocol registry, RNG, and
/// instrumentation of one simulation. Built alongside the [`Simulation`]
/// that drives it; the network reads the current time from the logger the
/// kernel stamps, so the pair must stay together.
#[derive(Clone)]
pub struct World {
    pub net: NetworkHandle,
    pub registry: RegistryHandle,
    pub rng: RngHandle,
    pub logger: Logger,
    pub tracer: Tracer,
    pub deref: DerefRegistry,
}

impl World {
    /// Build a simulation plus its world: logger attached, couriers wired
    /// and ticking from t=0, process handler installed. `instrumented`
    /// switches the logger and tracer on.
    pub fn build(
        seed: u64,
        spec: &TopologySpec,
        instrumented: bool,
    ) -> SimResult<(Simulation, World)> {
        let mut sim = Simulation::new(seed);
        let logger = Logger::new(instrumented);
        sim.attach_logger(logger.clone());
        let tracer = Tracer::new(instrumented);
        let net = NetworkHandle::build(&mut sim, spec, logger.clone(), tracer.clone())?;
        actor::install(&mut sim);
        let world = World {
            net,
            registry: RegistryHandle::new(),
            rng: sim.rng(),
            logger,
            tracer,
            deref: DerefRegistry::new(),
        };
        Ok((sim, world))
    }
}
