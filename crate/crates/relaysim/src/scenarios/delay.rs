//! The delay-callback scenario: a callback `f` retriggers itself after a
//! fixed unit delay and schedules a second callback `g` after a random
//! rational delay drawn from the simulation RNG.

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::SimResult;
use crate::instrument::Logger;
use crate::scenarios::RunOptions;
use crate::sim::{canary_until, RngHandle, SchedulingContext, Simulation};
use crate::time::Time;

#[derive(Clone, Debug)]
pub struct DelayOutcome {
    /// `(callback name, firing time)` in execution order.
    pub firings: Vec<(&'static str, Time)>,
}

impl DelayOutcome {
    pub fn times_of(&self, name: &str) -> Vec<Time> {
        self.firings
            .iter()
            .filter(|(n, _)| *n == name)
            .map(|(_, t)| t.clone())
            .collect()
    }

    /// Render as `name: time` transcript lines.
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for (name, t) in &self.firings {
            out.push_str(&format!("{}: {}\n", name, t));
        }
        out
    }
}

type FiringLog = Rc<RefCell<Vec<(&'static str, Time)>>>;

fn fire_g(
    log: FiringLog,
    logger: Logger,
) -> impl FnOnce(&mut SchedulingContext, Time) -> SimResult<()> {
    move |_ctx, now| {
        logger.log_user("g", vec![("fired", now.to_string())]);
        log.borrow_mut().push(("g", now));
        Ok(())
    }
}

fn fire_f(
    log: FiringLog,
    logger: Logger,
    rng: RngHandle,
) -> impl FnOnce(&mut SchedulingContext, Time) -> SimResult<()> {
    move |ctx, now| {
        logger.log_user("f", vec![("fired", now.to_string())]);
        log.borrow_mut().push(("f", now.clone()));
        let num = rng.int_below(4) as i64;
        let den = rng.int_below(4) as i64 + 1;
        ctx.schedule_callback(
            "g",
            fire_g(log.clone(), logger.clone()),
            &now + &Time::ratio(num, den),
        )?;
        ctx.schedule_callback(
            "f",
            fire_f(log.clone(), logger.clone(), rng.clone()),
            now + Time::from_int(1),
        )
    }
}

/// Run the scenario to the canary (default 2) and return the firing
/// transcript. No network is involved.
pub fn run(options: &RunOptions) -> SimResult<(DelayOutcome, Logger)> {
    let mut sim = Simulation::new(options.seed);
    let logger = Logger::new(options.instrumented);
    sim.attach_logger(logger.clone());

    let log: FiringLog = Rc::new(RefCell::new(Vec::new()));
    let f = fire_f(log.clone(), logger.clone(), sim.rng());
    sim.add_event(crate::sim::Event::callback(f).with_label("f"))?;

    let bound = options.canary.clone().unwrap_or_else(|| Time::from_int(2));
    sim.run(Some(canary_until(bound)))?;

    let firings = log.borrow().clone();
    Ok((DelayOutcome { firings }, logger))
}
