//! Events and the entities they can point at.

use std::any::Any;
use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use crate::error::SimResult;
use crate::sim::SchedulingContext;
use crate::time::Time;

/// Events returned by a callback for reinjection into the simulation.
pub type EventList = Vec<Event>;

/// A raw event callback. Runs inside a fresh [`SchedulingContext`] that
/// collects the events to reinject; the current simulation time is passed
/// alongside.
pub type Callback = Box<dyn FnOnce(&mut SchedulingContext, Time) -> SimResult<()>>;

/// A simulated object with a registered default handler. When an event's
/// action is an entity rather than a raw callback, the simulation looks up
/// the handler registered for `kind()` and runs that instead.
pub trait Entity: Any {
    /// Registry key for the default handler.
    fn kind(&self) -> &'static str;

    /// Short identifier used in transcripts and logs.
    fn label(&self) -> Rc<str>;

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

/// Shared handle to a simulated entity. The simulation is single-threaded;
/// entities are mutated only inside event execution.
pub type EntityRef = Rc<RefCell<dyn Entity>>;

pub(crate) enum EventAction {
    Callback(Callback),
    Entity(EntityRef),
}

/// A trigger time plus an action. Once executed an event is spent;
/// re-occurrence requires returning a fresh event.
pub struct Event {
    pub(crate) trigger_time: Time,
    pub(crate) action: EventAction,
    pub(crate) label: Rc<str>,
}

impl Event {
    /// A raw-callback event, triggering at time zero unless moved with
    /// [`Event::at`].
    pub fn callback(
        f: impl FnOnce(&mut SchedulingContext, Time) -> SimResult<()> + 'static,
    ) -> Event {
        Event {
            trigger_time: Time::zero(),
            action: EventAction::Callback(Box::new(f)),
            label: Rc::from("callback"),
        }
    }

    /// An entity event: the entity's registered default handler runs.
    pub fn entity(entity: EntityRef) -> Event {
        let label = entity.borrow().label();
        Event {
            trigger_time: Time::zero(),
            action: EventAction::Entity(entity),
            label,
        }
    }

    pub fn at(mut self, t: Time) -> Event {
        self.trigger_time = t;
        self
    }

    pub fn with_label(mut self, label: impl Into<Rc<str>>) -> Event {
        self.label = label.into();
        self
    }

    pub fn time(&self) -> &Time {
        &self.trigger_time
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Event({} @ {})", self.label, self.trigger_time)
    }
}
