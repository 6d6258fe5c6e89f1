//! Scheduling contexts for callback authoring.
//!
//! Every callback and entity handler runs inside a context that collects
//! the events it wants reinjected. Scheduling into the past raises
//! immediately, so causality bugs surface at their source rather than at
//! queue insertion.

use std::rc::Rc;

use crate::error::{SimError, SimResult};
use crate::sim::event::{EntityRef, Event, EventList};
use crate::time::Time;

pub struct SchedulingContext {
    now: Time,
    accumulated: Vec<Event>,
    finished: bool,
    override_events: Option<EventList>,
}

impl SchedulingContext {
    pub(crate) fn new(now: Time) -> Self {
        SchedulingContext {
            now,
            accumulated: Vec::new(),
            finished: false,
            override_events: None,
        }
    }

    /// The trigger time of the event currently executing.
    pub fn now(&self) -> &Time {
        &self.now
    }

    /// Stash an event for return at the close of this context.
    pub fn schedule_event(&mut self, event: Event) -> SimResult<()> {
        if self.finished {
            return Err(SimError::UseAfterFinish);
        }
        if *event.time() < self.now {
            return Err(SimError::SchedulingInThePast {
                requested: event.time().clone(),
                horizon: self.now.clone(),
            });
        }
        self.accumulated.push(event);
        Ok(())
    }

    /// Schedule a raw callback at time `t`.
    pub fn schedule_callback(
        &mut self,
        label: impl Into<Rc<str>>,
        f: impl FnOnce(&mut SchedulingContext, Time) -> SimResult<()> + 'static,
        t: Time,
    ) -> SimResult<()> {
        self.schedule_event(Event::callback(f).at(t).with_label(label))
    }

    /// Schedule an entity's default handler at time `t`.
    pub fn schedule_entity(&mut self, entity: EntityRef, t: Time) -> SimResult<()> {
        self.schedule_event(Event::entity(entity).at(t))
    }

    /// Adjoin the results of another callback, in order.
    pub fn absorb(&mut self, events: EventList) -> SimResult<()> {
        for event in events {
            self.schedule_event(event)?;
        }
        Ok(())
    }

    /// Close the context, returning the events collected thus far.
    /// Subsequent scheduling calls are rejected.
    pub fn finish(&mut self) -> SimResult<()> {
        self.finished = true;
        Ok(())
    }

    /// Close the context with an explicit return value, discarding any
    /// events collected thus far.
    pub fn finish_with(&mut self, events: EventList) -> SimResult<()> {
        if !self.finished {
            self.override_events = Some(events);
            self.finished = true;
        }
        Ok(())
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub(crate) fn take_events(self) -> EventList {
        match self.override_events {
            Some(events) => events,
            None => self.accumulated,
        }
    }
}
