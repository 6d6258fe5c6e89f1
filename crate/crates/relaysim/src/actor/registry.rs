//! Late-bound registries for commands, message handlers, and dispatch
//! tables.
//!
//! Command bodies are looked up by (process kind, command name) when the
//! frame pops — there is deliberately no compile-time check that a pushed
//! command exists. Dispatch tables are ordered clause lists; each clause
//! may carry a guard predicate over the process state that enables or
//! disables the service for the current tick.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use crate::actor::{ProcessCore, ProcessCtx};
use crate::error::{SimError, SimResult};
use crate::net::{Address, Message, MessageType};
use crate::value::Value;

/// Process kinds are symbolic, like command names.
pub type ProcessKind = &'static str;

pub type CommandBody = Rc<dyn Fn(&mut ProcessCtx, &[Value]) -> SimResult<()>>;
pub type HandlerBody = Rc<dyn Fn(&mut ProcessCtx, Message) -> SimResult<()>>;
pub type Guard = Rc<dyn Fn(&ProcessCore) -> bool>;
pub type LockTargetsFn = Rc<dyn Fn(&ProcessCore) -> Vec<Address>>;

/// One dispatch clause: earlier clauses shadow later ones for matching
/// messages; a false guard skips the clause for this tick only.
#[derive(Clone)]
pub struct DispatchClause {
    pub message_type: MessageType,
    pub handler: &'static str,
    pub guard: Option<Guard>,
}

impl DispatchClause {
    pub fn new(message_type: MessageType, handler: &'static str) -> DispatchClause {
        DispatchClause {
            message_type,
            handler,
            guard: None,
        }
    }

    pub fn guarded(
        message_type: MessageType,
        handler: &'static str,
        guard: impl Fn(&ProcessCore) -> bool + 'static,
    ) -> DispatchClause {
        DispatchClause {
            message_type,
            handler,
            guard: Some(Rc::new(guard)),
        }
    }
}

struct HandlerEntry {
    #[allow(dead_code)]
    kind: ProcessKind,
    #[allow(dead_code)]
    message_type: MessageType,
    body: HandlerBody,
}

#[derive(Default)]
struct RegistryInner {
    commands: BTreeMap<(ProcessKind, &'static str), CommandBody>,
    handlers: BTreeMap<&'static str, HandlerEntry>,
    dispatch: BTreeMap<ProcessKind, Rc<Vec<DispatchClause>>>,
    lock_targets: BTreeMap<ProcessKind, LockTargetsFn>,
}

/// Shared handle to the protocol registry.
#[derive(Clone)]
pub struct RegistryHandle(Rc<RefCell<RegistryInner>>);

impl RegistryHandle {
    pub fn new() -> RegistryHandle {
        RegistryHandle(Rc::new(RefCell::new(RegistryInner::default())))
    }

    /// Define the behavior of one command for one process kind.
    pub fn register_command(
        &self,
        kind: ProcessKind,
        name: &'static str,
        body: impl Fn(&mut ProcessCtx, &[Value]) -> SimResult<()> + 'static,
    ) {
        self.0
            .borrow_mut()
            .commands
            .insert((kind, name), Rc::new(body));
    }

    /// Define a message handler under a symbolic id, later referenced by
    /// dispatch clauses.
    pub fn register_handler(
        &self,
        id: &'static str,
        kind: ProcessKind,
        message_type: MessageType,
        body: impl Fn(&mut ProcessCtx, Message) -> SimResult<()> + 'static,
    ) {
        self.0.borrow_mut().handlers.insert(
            id,
            HandlerEntry {
                kind,
                message_type,
                body: Rc::new(body),
            },
        );
    }

    /// Install the ordered service table for a process kind. An empty
    /// table is legal.
    pub fn set_dispatch(&self, kind: ProcessKind, clauses: Vec<DispatchClause>) {
        self.0
            .borrow_mut()
            .dispatch
            .insert(kind, Rc::new(clauses));
    }

    /// Override the recursive-lock client set for a process kind.
    pub fn set_lockable_targets(
        &self,
        kind: ProcessKind,
        f: impl Fn(&ProcessCore) -> Vec<Address> + 'static,
    ) {
        self.0.borrow_mut().lock_targets.insert(kind, Rc::new(f));
    }

    /// Clients on which this process acquires recursive locks; empty
    /// unless overridden.
    pub fn lock_targets(&self, core: &ProcessCore) -> Vec<Address> {
        let f = self.0.borrow().lock_targets.get(core.kind()).cloned();
        f.map(|f| f(core)).unwrap_or_default()
    }

    pub(crate) fn command(&self, kind: ProcessKind, name: &'static str) -> SimResult<CommandBody> {
        self.0
            .borrow()
            .commands
            .get(&(kind, name))
            .cloned()
            .ok_or_else(|| SimError::UnknownCommand {
                kind,
                name: name.to_owned(),
            })
    }

    pub(crate) fn handler(&self, id: &'static str) -> SimResult<HandlerBody> {
        self.0
            .borrow()
            .handlers
            .get(id)
            .map(|e| e.body.clone())
            .ok_or(SimError::UnknownHandler { id })
    }

    pub(crate) fn dispatch_for(&self, kind: ProcessKind) -> Rc<Vec<DispatchClause>> {
        self.0
            .borrow()
            .dispatch
            .get(kind)
            .cloned()
            .unwrap_or_else(|| Rc::new(Vec::new()))
    }
}

impl Default for RegistryHandle {
    fn default() -> Self {
        RegistryHandle::new()
    }
}
