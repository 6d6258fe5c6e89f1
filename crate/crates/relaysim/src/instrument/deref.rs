//! Opt-in registry marrying public addresses to their owning processes.
//!
//! Production semantics never consult this: processes interact only
//! through addresses. The registry exists so a debugger can trace state
//! across several processes at runtime; it is populated as processes
//! spawn but lookups fail unless explicitly enabled.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use crate::actor::ProcessCore;
use crate::error::{SimError, SimResult};
use crate::net::Address;

struct DerefInner {
    enabled: bool,
    owners: BTreeMap<Address, Rc<RefCell<ProcessCore>>>,
}

#[derive(Clone)]
pub struct DerefRegistry(Rc<RefCell<DerefInner>>);

impl DerefRegistry {
    /// Disabled by default.
    pub fn new() -> Self {
        DerefRegistry(Rc::new(RefCell::new(DerefInner {
            enabled: false,
            owners: BTreeMap::new(),
        })))
    }

    pub fn enabled(&self) -> bool {
        self.0.borrow().enabled
    }

    pub fn set_enabled(&self, enabled: bool) {
        self.0.borrow_mut().enabled = enabled;
    }

    pub(crate) fn insert(&self, address: Address, owner: Rc<RefCell<ProcessCore>>) {
        self.0.borrow_mut().owners.insert(address, owner);
    }

    pub(crate) fn remove(&self, address: &Address) {
        self.0.borrow_mut().owners.remove(address);
    }

    /// Look up the live owner of a public address, for inspection only.
    pub fn dereference(&self, address: &Address) -> SimResult<Rc<RefCell<ProcessCore>>> {
        let inner = self.0.borrow();
        if !inner.enabled {
            return Err(SimError::DisabledRegistry);
        }
        inner
            .owners
            .get(address)
            .cloned()
            .ok_or_else(|| SimError::UnknownAddress {
                address: address.to_string(),
            })
    }
}

impl Default for DerefRegistry {
    fn default() -> Self {
        DerefRegistry::new()
    }
}
