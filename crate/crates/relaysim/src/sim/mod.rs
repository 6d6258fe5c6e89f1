//! The simulation kernel: a time-ordered event store with a monotone
//! horizon, plus the registry of default handlers for simulated entities.
//!
//! Single-threaded by design. The whole simulation advances one event at a
//! time; simulated concurrency is purely event interleaving.

mod context;
mod event;
mod queue;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use context::SchedulingContext;
pub use event::{Callback, Entity, EntityRef, Event, EventList};
pub use queue::BucketQueue;

use crate::error::{SimError, SimResult};
use crate::instrument::Logger;
use crate::time::Time;

/// Default handler for an entity kind, invoked when the run loop dequeues
/// an event whose action is an entity of that kind.
pub type EntityHandler = Rc<dyn Fn(&EntityRef, Time, &mut SchedulingContext) -> SimResult<()>>;

/// Decides when a run should stop: given the trigger time of the next
/// pending event, return `true` to stop before executing it.
pub type StopCondition = Box<dyn FnMut(&Time) -> bool>;

/// Permutation policy over same-time events: given the size of the current
/// bucket, return the index of the event to execute next. Without a hook,
/// same-time events run in insertion order.
pub type TieBreakHook = Box<dyn FnMut(usize) -> usize>;

/// Stop the run loop before executing any event triggering after `t`;
/// events at exactly `t` still run.
pub fn canary_until(t: Time) -> StopCondition {
    Box::new(move |next: &Time| *next > t)
}

/// Shared handle to the simulation's seedable RNG. All randomness in a run
/// draws from this single stream, so a seed fully determines a transcript.
#[derive(Clone)]
pub struct RngHandle(Rc<RefCell<ChaCha8Rng>>);

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        RngHandle(Rc::new(RefCell::new(ChaCha8Rng::seed_from_u64(seed))))
    }

    pub fn with<R>(&self, f: impl FnOnce(&mut ChaCha8Rng) -> R) -> R {
        f(&mut self.0.borrow_mut())
    }

    /// Uniform draw from `0..n`.
    pub fn int_below(&self, n: u64) -> u64 {
        self.0.borrow_mut().gen_range(0..n)
    }
}

/// The time-ordered event store and the single source of truth for "now".
pub struct Simulation {
    pending: BucketQueue<Event>,
    horizon: Time,
    handlers: BTreeMap<&'static str, EntityHandler>,
    tie_break: Option<TieBreakHook>,
    rng: RngHandle,
    logger: Option<Logger>,
    transcript: Option<Vec<(Time, Rc<str>)>>,
}

impl Simulation {
    /// Empty simulation: no pending events, horizon at zero.
    pub fn new(seed: u64) -> Self {
        Simulation {
            pending: BucketQueue::new(),
            horizon: Time::zero(),
            handlers: BTreeMap::new(),
            tie_break: None,
            rng: RngHandle::new(seed),
            logger: None,
            transcript: None,
        }
    }

    /// The time before which history has been fully fixed. Non-decreasing
    /// over the simulation's lifetime.
    pub fn horizon(&self) -> &Time {
        &self.horizon
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Distinct trigger times currently pending.
    pub fn pending_key_count(&self) -> usize {
        self.pending.key_count()
    }

    /// The simulation-owned RNG, available to user code on request.
    pub fn rng(&self) -> RngHandle {
        self.rng.clone()
    }

    /// Attach a structured logger; the kernel stamps it with the horizon on
    /// every pop so entries carry the current time.
    pub fn attach_logger(&mut self, logger: Logger) {
        self.logger = Some(logger);
    }

    pub fn logger(&self) -> Option<&Logger> {
        self.logger.as_ref()
    }

    /// Record a `(time, label)` pair per executed event. Off by default.
    pub fn record_transcript(&mut self, on: bool) {
        self.transcript = if on { Some(Vec::new()) } else { None };
    }

    pub fn transcript(&self) -> Option<&[(Time, Rc<str>)]> {
        self.transcript.as_deref()
    }

    /// Install a permutation policy over same-time events.
    pub fn set_tie_break(&mut self, hook: Option<TieBreakHook>) {
        self.tie_break = hook;
    }

    /// Register the default handler for an entity kind. Latest registration
    /// wins.
    pub fn register_entity_handler(&mut self, kind: &'static str, handler: EntityHandler) {
        self.handlers.insert(kind, handler);
    }

    pub fn has_entity_handler(&self, kind: &'static str) -> bool {
        self.handlers.contains_key(kind)
    }

    /// Add an event to the pending set; used to set up the initial contents
    /// of a simulation. Trigger times before the horizon are rejected — such
    /// a schedule signals a causality bug in the caller.
    pub fn add_event(&mut self, event: Event) -> SimResult<()> {
        if *event.time() < self.horizon {
            return Err(SimError::SchedulingInThePast {
                requested: event.time().clone(),
                horizon: self.horizon.clone(),
            });
        }
        self.pending.push(event.time().clone(), event);
        Ok(())
    }

    /// Process pending events in time order until exhaustion or until the
    /// stop condition fires. Same-time events run serially in insertion
    /// order unless a tie-break hook is installed. Errors raised by user
    /// callbacks propagate, annotated with the current horizon.
    pub fn run(&mut self, mut canary: Option<StopCondition>) -> SimResult<()> {
        while let Some(next_time) = self.pending.peek_key().cloned() {
            if let Some(c) = canary.as_mut() {
                if c(&next_time) {
                    break;
                }
            }
            let index = match (&mut self.tie_break, self.pending.front_len()) {
                (Some(hook), n) if n > 1 => hook(n),
                _ => 0,
            };
            let (time, event) = self.pending.pop_at(index).expect("queue non-empty");
            debug_assert!(time >= self.horizon, "horizon monotonicity");
            self.horizon = time.clone();
            if let Some(logger) = &self.logger {
                logger.set_now(time.clone());
            }
            if let Some(transcript) = &mut self.transcript {
                transcript.push((time.clone(), event.label.clone()));
            }

            let mut ctx = SchedulingContext::new(time.clone());
            let outcome = match event.action {
                event::EventAction::Callback(f) => f(&mut ctx, time),
                event::EventAction::Entity(entity) => {
                    let kind = entity.borrow().kind();
                    let handler = self
                        .handlers
                        .get(kind)
                        .cloned()
                        .ok_or(SimError::MissingHandler { kind })?;
                    handler(&entity, time, &mut ctx)
                }
            };
            outcome.map_err(|e| e.at(self.horizon.clone()))?;
            for produced in ctx.take_events() {
                self.add_event(produced)
                    .map_err(|e| e.at(self.horizon.clone()))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::rc::Rc;

    fn recorder() -> (Rc<RefCell<Vec<(String, Time)>>>, impl Fn(&str, &Time) + Clone) {
        let log = Rc::new(RefCell::new(Vec::new()));
        let sink = {
            let log = log.clone();
            move |name: &str, t: &Time| log.borrow_mut().push((name.to_owned(), t.clone()))
        };
        (log, sink)
    }

    #[test]
    fn fresh_simulation_is_empty() {
        let sim = Simulation::new(0);
        assert_eq!(sim.horizon(), &Time::zero());
        assert_eq!(sim.pending_len(), 0);
    }

    #[test]
    fn run_on_empty_simulation_returns_immediately() {
        let mut sim = Simulation::new(0);
        sim.run(None).unwrap();
        assert_eq!(sim.horizon(), &Time::zero());
    }

    #[test]
    fn callback_event_defaults_to_time_zero() {
        let mut sim = Simulation::new(0);
        sim.add_event(Event::callback(|_, _| Ok(()))).unwrap();
        assert_eq!(sim.pending_len(), 1);
        assert_eq!(sim.pending_key_count(), 1);
    }

    #[test]
    fn add_event_before_horizon_is_rejected() {
        let mut sim = Simulation::new(0);
        sim.add_event(
            Event::callback(|ctx, now| ctx.schedule_callback("noop", |_, _| Ok(()), now))
                .at(Time::from_int(7)),
        )
        .unwrap();
        sim.run(None).unwrap();
        assert_eq!(sim.horizon(), &Time::from_int(7));
        let err = sim
            .add_event(Event::callback(|_, _| Ok(())).at(Time::from_int(5)))
            .unwrap_err();
        assert!(matches!(err, SimError::SchedulingInThePast { .. }));
    }

    /// A callback that re-triggers itself after a fixed unit delay fires at
    /// 0, 1, 2 under a canary at 2 — and not after.
    #[test]
    fn self_scheduling_with_canary() {
        let (log, sink) = recorder();
        fn fire(
            sink: impl Fn(&str, &Time) + Clone + 'static,
        ) -> impl FnOnce(&mut SchedulingContext, Time) -> SimResult<()> {
            move |ctx, now| {
                sink("f", &now);
                ctx.schedule_callback("f", fire(sink.clone()), now + Time::from_int(1))
            }
        }
        let mut sim = Simulation::new(0);
        sim.add_event(Event::callback(fire(sink)).with_label("f"))
            .unwrap();
        sim.run(Some(canary_until(Time::from_int(2)))).unwrap();
        let fired: Vec<Time> = log.borrow().iter().map(|(_, t)| t.clone()).collect();
        assert_eq!(
            fired,
            vec![Time::from_int(0), Time::from_int(1), Time::from_int(2)]
        );
        // The t=3 re-fire is pending but unexecuted.
        assert_eq!(sim.pending_len(), 1);
        assert_eq!(sim.horizon(), &Time::from_int(2));
    }

    #[test]
    fn canary_strictly_before_everything_runs_nothing() {
        let (log, sink) = recorder();
        let mut sim = Simulation::new(0);
        sim.add_event(Event::callback(move |_, now| {
            sink("x", &now);
            Ok(())
        }))
        .unwrap();
        sim.run(Some(canary_until(Time::from_int(-1)))).unwrap();
        assert!(log.borrow().is_empty());
        assert_eq!(sim.pending_len(), 1);
    }

    #[test]
    fn canary_boundary_is_inclusive() {
        let (log, sink) = recorder();
        let mut sim = Simulation::new(0);
        sim.add_event(Event::callback(move |_, now| {
            sink("x", &now);
            Ok(())
        }))
        .unwrap();
        sim.run(Some(canary_until(Time::zero()))).unwrap();
        assert_eq!(log.borrow().len(), 1);
    }

    #[test]
    fn same_time_events_run_in_insertion_order() {
        let (log, sink) = recorder();
        let mut sim = Simulation::new(0);
        for name in ["a", "b"] {
            let sink = sink.clone();
            sim.add_event(
                Event::callback(move |_, now| {
                    sink(name, &now);
                    Ok(())
                })
                .at(Time::from_int(1)),
            )
            .unwrap();
        }
        sim.run(None).unwrap();
        let names: Vec<String> = log.borrow().iter().map(|(n, _)| n.clone()).collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn tie_break_hook_permutes_same_time_events() {
        let (log, sink) = recorder();
        let mut sim = Simulation::new(0);
        // Always pick the last entry of the bucket.
        sim.set_tie_break(Some(Box::new(|n| n - 1)));
        for name in ["a", "b", "c"] {
            let sink = sink.clone();
            sim.add_event(
                Event::callback(move |_, now| {
                    sink(name, &now);
                    Ok(())
                })
                .at(Time::from_int(1)),
            )
            .unwrap();
        }
        sim.run(None).unwrap();
        let names: Vec<String> = log.borrow().iter().map(|(n, _)| n.clone()).collect();
        assert_eq!(names, vec!["c", "b", "a"]);
    }

    #[test]
    fn hundred_events_one_key() {
        let mut sim = Simulation::new(0);
        for _ in 0..100 {
            sim.add_event(Event::callback(|_, _| Ok(())).at(Time::from_int(3)))
                .unwrap();
        }
        assert_eq!(sim.pending_key_count(), 1);
        assert_eq!(sim.pending_len(), 100);
    }

    #[test]
    fn missing_entity_handler_errors_at_dispatch() {
        struct Ghost;
        impl Entity for Ghost {
            fn kind(&self) -> &'static str {
                "ghost"
            }
            fn label(&self) -> Rc<str> {
                Rc::from("ghost")
            }
            fn as_any(&self) -> &dyn std::any::Any {
                self
            }
            fn as_any_mut(&mut self) -> &mut dyn std::any::Any {
                self
            }
        }
        let mut sim = Simulation::new(0);
        sim.add_event(Event::entity(Rc::new(RefCell::new(Ghost))))
            .unwrap();
        let err = sim.run(None).unwrap_err();
        assert!(matches!(err.root(), SimError::MissingHandler { kind: "ghost" }));
    }

    #[test]
    fn callback_errors_carry_the_horizon() {
        let mut sim = Simulation::new(0);
        sim.add_event(
            Event::callback(|_, _| Err(SimError::InvariantViolation("boom".into())))
                .at(Time::ratio(3, 2)),
        )
        .unwrap();
        let err = sim.run(None).unwrap_err();
        match err {
            SimError::At { time, .. } => assert_eq!(time, Time::ratio(3, 2)),
            other => panic!("expected annotated error, got {other:?}"),
        }
    }

    #[test]
    fn entity_without_reschedule_fires_once() {
        struct OneShot {
            fired: u32,
        }
        impl Entity for OneShot {
            fn kind(&self) -> &'static str {
                "one-shot"
            }
            fn label(&self) -> Rc<str> {
                Rc::from("one-shot")
            }
            fn as_any(&self) -> &dyn std::any::Any {
                self
            }
            fn as_any_mut(&mut self) -> &mut dyn std::any::Any {
                self
            }
        }
        let entity = Rc::new(RefCell::new(OneShot { fired: 0 }));
        let mut sim = Simulation::new(0);
        sim.register_entity_handler(
            "one-shot",
            Rc::new(|entity, _, _| {
                let mut e = entity.borrow_mut();
                e.as_any_mut().downcast_mut::<OneShot>().unwrap().fired += 1;
                Ok(())
            }),
        );
        sim.add_event(Event::entity(entity.clone())).unwrap();
        sim.run(None).unwrap();
        assert_eq!(entity.borrow().fired, 1);
        assert_eq!(sim.pending_len(), 0);
    }

    /// Two runs with identical seeds, events, and hooks produce identical
    /// transcripts.
    #[test]
    fn determinism_of_transcripts() {
        fn run_once(seed: u64) -> Vec<(Time, Rc<str>)> {
            let mut sim = Simulation::new(seed);
            sim.record_transcript(true);
            let rng = sim.rng();
            sim.set_tie_break(Some(Box::new(move |n| rng.int_below(n as u64) as usize)));
            for i in 0..20 {
                let t = Time::from_int(i % 4);
                sim.add_event(
                    Event::callback(move |ctx, now| {
                        ctx.schedule_callback("spawn", |_, _| Ok(()), now + Time::from_int(1))
                    })
                    .at(t)
                    .with_label(format!("e{i}")),
                )
                .unwrap();
            }
            sim.run(None).unwrap();
            sim.transcript().unwrap().to_vec()
        }
        assert_eq!(run_once(99), run_once(99));
    }
}
