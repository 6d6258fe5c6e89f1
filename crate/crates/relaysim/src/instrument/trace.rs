//! Call tracing: aggregate performance statistics for interprocess
//! queries, distinct from behavioral logging.

use std::cell::RefCell;
use std::rc::Rc;

use crate::time::Time;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TraceKind {
    /// One record per batched send.
    BatchSend,
    /// One record per resolved reply-gathering wait.
    RpcWait,
}

#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub kind: TraceKind,
    pub target_count: usize,
    pub wait_duration: Time,
    pub initiator: String,
}

struct TraceInner {
    enabled: bool,
    records: Vec<TraceRecord>,
}

/// Shared handle to the trace collector. Opt-in: disabled collectors
/// record nothing.
#[derive(Clone)]
pub struct Tracer(Rc<RefCell<TraceInner>>);

impl Tracer {
    pub fn new(enabled: bool) -> Self {
        Tracer(Rc::new(RefCell::new(TraceInner {
            enabled,
            records: Vec::new(),
        })))
    }

    pub fn enabled(&self) -> bool {
        self.0.borrow().enabled
    }

    pub fn set_enabled(&self, enabled: bool) {
        self.0.borrow_mut().enabled = enabled;
    }

    pub fn record_batch_send(&self, initiator: &str, target_count: usize) {
        let mut inner = self.0.borrow_mut();
        if !inner.enabled {
            return;
        }
        inner.records.push(TraceRecord {
            kind: TraceKind::BatchSend,
            target_count,
            wait_duration: Time::zero(),
            initiator: initiator.to_owned(),
        });
    }

    pub fn record_rpc_wait(&self, initiator: &str, target_count: usize, wait_duration: Time) {
        let mut inner = self.0.borrow_mut();
        if !inner.enabled {
            return;
        }
        inner.records.push(TraceRecord {
            kind: TraceKind::RpcWait,
            target_count,
            wait_duration,
            initiator: initiator.to_owned(),
        });
    }

    pub fn records(&self) -> Vec<TraceRecord> {
        self.0.borrow().records.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_tracer_collects_nothing() {
        let tracer = Tracer::new(false);
        tracer.record_batch_send("p", 2);
        tracer.record_rpc_wait("p", 2, Time::from_int(1));
        assert!(tracer.records().is_empty());
    }

    #[test]
    fn records_carry_counts_and_durations() {
        let tracer = Tracer::new(true);
        tracer.record_batch_send("p", 2);
        tracer.record_rpc_wait("p", 2, Time::ratio(3, 2));
        let records = tracer.records();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].kind, TraceKind::BatchSend);
        assert_eq!(records[0].target_count, 2);
        assert_eq!(records[0].wait_duration, Time::zero());
        assert_eq!(records[1].kind, TraceKind::RpcWait);
        assert_eq!(records[1].wait_duration, Time::ratio(3, 2));
        assert_eq!(records[1].initiator, "p");
    }
}
