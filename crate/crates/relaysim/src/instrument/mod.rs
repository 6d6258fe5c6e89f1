//! Structured logging, message-complexity reporting, opt-in address
//! dereferencing, and RPC call tracing.
//!
//! None of these observe-only facilities may change a run: enabling or
//! disabling them leaves the event transcript, message order, and final
//! states untouched.

mod deref;
mod report;
mod trace;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use serde::Serialize;

pub use deref::DerefRegistry;
pub use report::{report_render, MessageReport, ReportConfig};
pub use trace::{TraceKind, TraceRecord, Tracer};

use crate::time::Time;

/// Tag classifying a simulation-internal occurrence.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EntryKind {
    MessageSent,
    MessageDelivered,
    MessageReceived,
    MessageDropped,
    HandlerFired,
    CommandExecuted,
    ProcessSpawned,
    ProcessDied,
    LockAcquired,
    LockAborted,
    LockReleased,
    User,
}

impl EntryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntryKind::MessageSent => "message-sent",
            EntryKind::MessageDelivered => "message-delivered",
            EntryKind::MessageReceived => "message-received",
            EntryKind::MessageDropped => "message-dropped",
            EntryKind::HandlerFired => "handler-fired",
            EntryKind::CommandExecuted => "command-executed",
            EntryKind::ProcessSpawned => "process-spawned",
            EntryKind::ProcessDied => "process-died",
            EntryKind::LockAcquired => "lock-acquired",
            EntryKind::LockAborted => "lock-aborted",
            EntryKind::LockReleased => "lock-released",
            EntryKind::User => "user",
        }
    }
}

/// One queryable record of something that happened inside the simulation.
#[derive(Clone, Debug)]
pub struct LogEntry {
    pub time: Time,
    pub source: String,
    pub kind: EntryKind,
    pub attrs: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct JsonLine<'a> {
    t: String,
    src: &'a str,
    kind: &'a str,
    attrs: &'a BTreeMap<String, String>,
}

struct LogInner {
    enabled: bool,
    now: Time,
    entries: Vec<LogEntry>,
}

/// Shared handle to the append-only in-memory log. The kernel stamps it
/// with the horizon on every event pop, so entries appear in non-decreasing
/// time order.
#[derive(Clone)]
pub struct Logger(Rc<RefCell<LogInner>>);

impl Logger {
    pub fn new(enabled: bool) -> Self {
        Logger(Rc::new(RefCell::new(LogInner {
            enabled,
            now: Time::zero(),
            entries: Vec::new(),
        })))
    }

    pub fn enabled(&self) -> bool {
        self.0.borrow().enabled
    }

    pub fn set_enabled(&self, enabled: bool) {
        self.0.borrow_mut().enabled = enabled;
    }

    pub(crate) fn set_now(&self, t: Time) {
        self.0.borrow_mut().now = t;
    }

    pub fn now(&self) -> Time {
        self.0.borrow().now.clone()
    }

    /// Append an entry stamped with the current horizon. The attribute
    /// builder only runs when logging is enabled.
    pub fn log_with(
        &self,
        source: &str,
        kind: EntryKind,
        attrs: impl FnOnce() -> Vec<(&'static str, String)>,
    ) {
        let mut inner = self.0.borrow_mut();
        if !inner.enabled {
            return;
        }
        let attrs = attrs()
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect();
        let time = inner.now.clone();
        inner.entries.push(LogEntry {
            time,
            source: source.to_owned(),
            kind,
            attrs,
        });
    }

    /// Emit a user-defined entry.
    pub fn log_user(&self, source: &str, attrs: Vec<(&'static str, String)>) {
        self.log_with(source, EntryKind::User, || attrs);
    }

    pub fn len(&self) -> usize {
        self.0.borrow().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries matching `predicate`, in original order.
    pub fn query(&self, predicate: impl Fn(&LogEntry) -> bool) -> Vec<LogEntry> {
        self.0
            .borrow()
            .entries
            .iter()
            .filter(|e| predicate(e))
            .cloned()
            .collect()
    }

    /// Visit every entry without cloning.
    pub fn for_each(&self, mut f: impl FnMut(&LogEntry)) {
        for entry in &self.0.borrow().entries {
            f(entry);
        }
    }

    /// One JSON object per line: `{"t":"num/den","src":…,"kind":…,"attrs":{…}}`.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.0.borrow().entries {
            let line = JsonLine {
                t: entry.time.fraction_string(),
                src: &entry.source,
                kind: entry.kind.as_str(),
                attrs: &entry.attrs,
            };
            out.push_str(&serde_json::to_string(&line).expect("log entries serialize"));
            out.push('\n');
        }
        out
    }
}
