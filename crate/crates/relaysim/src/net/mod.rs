//! The "physical" network layer.
//!
//! Couriers hold inboxes (keyed by unguessable-by-convention tokens) and a
//! FIFO transmission queue of outbound packets. On each tick a courier
//! drains its queue up to its bandwidth: packets addressed to a local
//! inbox are stashed there, everything else is forwarded one hop along the
//! procedurally generated route. A packet becomes receivable only on a
//! tick after the one on which it was enqueued, so send/receive causality
//! is uniform regardless of same-time event ordering.
//!
//! Messages are always delivered while their destination inbox is open,
//! and messages from one source to one target arrive in send order. A
//! message reaching a closed inbox turns into a courier-generated
//! return-to-sender notice when it carries a reply channel, and is dropped
//! (and logged) otherwise.

pub mod message;

mod address;
mod topology;

use std::cell::RefCell;
use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;

pub use address::{Address, CourierId};
pub use message::{Message, MessageType};
pub use topology::{CourierOverride, TopologyKind, TopologySpec};

use crate::error::{SimError, SimResult};
use crate::instrument::{EntryKind, Logger, Tracer};
use crate::sim::{Entity, Event, Simulation};
use crate::time::{Rate, Time};

/// Entity-kind key under which courier ticks are registered.
pub const COURIER_ENTITY_KIND: &str = "courier";

/// Pluggable routing policy: `(from, destination-courier)` to the next
/// hop, or `None` when unreachable.
pub type Router = Rc<dyn Fn(CourierId, CourierId) -> Option<CourierId>>;

/// Packet-conservation counters. `sent` covers every packet entering a
/// transmit queue (including courier-generated return-to-sender notices);
/// the gauges and terminal counters partition where packets are now.
#[derive(Clone, Copy, Default, Debug, PartialEq, Eq)]
pub struct Conservation {
    pub sent: u64,
    pub consumed: u64,
    pub returned: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub in_inboxes: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.sent == self.in_flight + self.in_inboxes + self.consumed + self.returned + self.dropped
    }
}

struct Packet {
    dest: Address,
    message: Message,
    enqueued_at: Time,
}

struct CourierState {
    label: String,
    inboxes: BTreeMap<u64, VecDeque<Message>>,
    next_key: u64,
    transmit: VecDeque<Packet>,
    period: Time,
    bandwidth: Option<usize>,
    router: Option<Router>,
}

struct NetworkInner {
    kind: TopologyKind,
    couriers: BTreeMap<CourierId, CourierState>,
    /// Stack of (courier, source label) bindings; the top is the courier
    /// servicing the currently executing block of code.
    ambient: Vec<(CourierId, String)>,
    logger: Logger,
    tracer: Tracer,
    counters: Conservation,
}

/// Shared handle to the network. All mutation happens inside event
/// execution on the single simulation thread.
#[derive(Clone)]
pub struct NetworkHandle(Rc<RefCell<NetworkInner>>);

struct CourierEntity {
    net: NetworkHandle,
    id: CourierId,
    label: Rc<str>,
}

impl Entity for CourierEntity {
    fn kind(&self) -> &'static str {
        COURIER_ENTITY_KIND
    }
    fn label(&self) -> Rc<str> {
        self.label.clone()
    }
    fn as_any(&self) -> &dyn std::any::Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn std::any::Any {
        self
    }
}

/// Indicates how a clause-style receive resolved.
#[derive(Debug, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// The clause at this index matched and its body ran.
    Matched(usize),
    /// No clause matched; the `otherwise` body ran.
    Otherwise,
    /// No clause matched and there was no `otherwise`.
    NoMatch,
}

impl NetworkHandle {
    /// Build the couriers described by `spec`. The network reads the
    /// current time from `logger`, so the same logger must be attached to
    /// the simulation that drives the couriers.
    pub fn new(spec: &TopologySpec, logger: Logger, tracer: Tracer) -> NetworkHandle {
        let mut couriers = BTreeMap::new();
        for id in spec.kind.courier_ids() {
            couriers.insert(
                id,
                CourierState {
                    label: format!("courier:{id}"),
                    inboxes: BTreeMap::new(),
                    next_key: 0,
                    transmit: VecDeque::new(),
                    period: Rate::per_unit(1).period(),
                    bandwidth: None,
                    router: None,
                },
            );
        }
        let net = NetworkHandle(Rc::new(RefCell::new(NetworkInner {
            kind: spec.kind,
            couriers,
            ambient: Vec::new(),
            logger,
            tracer,
            counters: Conservation::default(),
        })));
        for o in &spec.overrides {
            if let Some(rate) = &o.clock_rate {
                net.set_clock_rate(o.courier, rate.clone());
            }
            if let Some(bandwidth) = o.bandwidth {
                net.set_bandwidth(o.courier, bandwidth);
            }
        }
        net
    }

    /// Build the network and wire its couriers into the simulation: the
    /// courier handler is registered and every courier's first tick lands
    /// at t=0, ahead of any process spawned afterwards.
    pub fn build(
        sim: &mut Simulation,
        spec: &TopologySpec,
        logger: Logger,
        tracer: Tracer,
    ) -> SimResult<NetworkHandle> {
        let net = NetworkHandle::new(spec, logger, tracer);
        net.install(sim)?;
        Ok(net)
    }

    /// Register the courier entity handler and schedule first ticks.
    pub fn install(&self, sim: &mut Simulation) -> SimResult<()> {
        sim.register_entity_handler(
            COURIER_ENTITY_KIND,
            Rc::new(|entity, now, ctx| {
                let (net, id) = {
                    let e = entity.borrow();
                    let c = e
                        .as_any()
                        .downcast_ref::<CourierEntity>()
                        .expect("courier entity");
                    (c.net.clone(), c.id)
                };
                net.courier_tick(id, &now)?;
                let period = net.courier_period(id)?;
                ctx.schedule_entity(entity.clone(), now + period)
            }),
        );
        for id in self.courier_ids() {
            let label: Rc<str> = Rc::from(format!("courier:{id}"));
            let entity = Rc::new(RefCell::new(CourierEntity {
                net: self.clone(),
                id,
                label,
            }));
            sim.add_event(Event::entity(entity))?;
        }
        Ok(())
    }

    pub fn kind(&self) -> TopologyKind {
        self.0.borrow().kind
    }

    pub fn courier_ids(&self) -> Vec<CourierId> {
        self.0.borrow().couriers.keys().copied().collect()
    }

    pub fn logger(&self) -> Logger {
        self.0.borrow().logger.clone()
    }

    pub fn tracer(&self) -> Tracer {
        self.0.borrow().tracer.clone()
    }

    pub fn counters(&self) -> Conservation {
        self.0.borrow().counters
    }

    /// No packets in transit and no messages sitting in inboxes.
    pub fn quiescent(&self) -> bool {
        let c = self.counters();
        c.in_flight == 0 && c.in_inboxes == 0
    }

    pub fn set_clock_rate(&self, id: CourierId, rate: Rate) {
        if let Some(c) = self.0.borrow_mut().couriers.get_mut(&id) {
            c.period = rate.period();
        }
    }

    pub fn set_bandwidth(&self, id: CourierId, bandwidth: Option<usize>) {
        if let Some(c) = self.0.borrow_mut().couriers.get_mut(&id) {
            c.bandwidth = bandwidth;
        }
    }

    /// Replace a courier's routing policy.
    pub fn set_router(&self, id: CourierId, router: Router) {
        if let Some(c) = self.0.borrow_mut().couriers.get_mut(&id) {
            c.router = Some(router);
        }
    }

    pub fn courier_period(&self, id: CourierId) -> SimResult<Time> {
        self.0
            .borrow()
            .couriers
            .get(&id)
            .map(|c| c.period.clone())
            .ok_or_else(|| SimError::UnknownCourier {
                courier: id.to_string(),
            })
    }

    /// Run `f` with the given courier bound as the local courier. Process
    /// and courier execution installs this binding automatically; this
    /// scoped override exists for setup code and tests.
    pub fn with_courier<R>(
        &self,
        id: CourierId,
        label: &str,
        f: impl FnOnce() -> R,
    ) -> SimResult<R> {
        {
            let mut inner = self.0.borrow_mut();
            if !inner.couriers.contains_key(&id) {
                return Err(SimError::UnknownCourier {
                    courier: id.to_string(),
                });
            }
            inner.ambient.push((id, label.to_owned()));
        }
        let result = f();
        self.0.borrow_mut().ambient.pop();
        Ok(result)
    }

    pub(crate) fn bind_ambient(&self, id: CourierId, label: &str) {
        self.0.borrow_mut().ambient.push((id, label.to_owned()));
    }

    pub(crate) fn unbind_ambient(&self) {
        self.0.borrow_mut().ambient.pop();
    }

    fn ambient(&self) -> SimResult<(CourierId, String)> {
        self.0
            .borrow()
            .ambient
            .last()
            .cloned()
            .ok_or(SimError::NoLocalCourier)
    }

    /// Open a new inbox at the local courier and return its key.
    pub fn register(&self) -> SimResult<Address> {
        let (id, _) = self.ambient()?;
        self.register_at(id)
    }

    /// Open a new inbox at an explicit courier (setup-time plumbing).
    pub fn register_at(&self, id: CourierId) -> SimResult<Address> {
        let mut inner = self.0.borrow_mut();
        let courier = inner
            .couriers
            .get_mut(&id)
            .ok_or_else(|| SimError::UnknownCourier {
                courier: id.to_string(),
            })?;
        let key = courier.next_key;
        courier.next_key += 1;
        courier.inboxes.insert(key, VecDeque::new());
        Ok(Address::new(id, key))
    }

    /// Release an inbox. Its address can never again be used to retrieve
    /// messages; anything still queued inside is discarded.
    pub fn unregister(&self, address: &Address) -> SimResult<()> {
        let mut inner = self.0.borrow_mut();
        let courier = inner
            .couriers
            .get_mut(&address.courier())
            .ok_or_else(|| SimError::UnknownCourier {
                courier: address.courier().to_string(),
            })?;
        match courier.inboxes.remove(&address.inbox_key()) {
            Some(residue) => {
                let n = residue.len() as u64;
                inner.counters.in_inboxes -= n;
                inner.counters.dropped += n;
                Ok(())
            }
            None if address.inbox_key() < courier.next_key => Err(SimError::DoubleUnregister {
                address: address.to_string(),
            }),
            None => Err(SimError::ClosedInbox {
                address: address.to_string(),
            }),
        }
    }

    pub fn has_inbox(&self, address: &Address) -> bool {
        self.0
            .borrow()
            .couriers
            .get(&address.courier())
            .map(|c| c.inboxes.contains_key(&address.inbox_key()))
            .unwrap_or(false)
    }

    pub fn inbox_len(&self, address: &Address) -> SimResult<usize> {
        let inner = self.0.borrow();
        inner
            .couriers
            .get(&address.courier())
            .and_then(|c| c.inboxes.get(&address.inbox_key()))
            .map(|inbox| inbox.len())
            .ok_or_else(|| SimError::ClosedInbox {
                address: address.to_string(),
            })
    }

    /// Send a payload to an address: the packet joins the local courier's
    /// transmission queue for delivery on subsequent courier ticks.
    pub fn send_message(&self, destination: &Address, message: Message) -> SimResult<()> {
        let mut inner = self.0.borrow_mut();
        let (courier_id, label) = inner
            .ambient
            .last()
            .cloned()
            .ok_or(SimError::NoLocalCourier)?;
        let now = inner.logger.now();
        let message_type = message.message_type();
        inner.counters.sent += 1;
        inner.counters.in_flight += 1;
        inner.logger.log_with(&label, EntryKind::MessageSent, || {
            vec![
                ("message-type", message_type.to_owned()),
                ("to", destination.to_string()),
            ]
        });
        inner
            .couriers
            .get_mut(&courier_id)
            .expect("ambient courier exists")
            .transmit
            .push_back(Packet {
                dest: destination.clone(),
                message,
                enqueued_at: now,
            });
        Ok(())
    }

    /// Send one constructed message to each destination, each tagged with
    /// a fresh private reply inbox on the local courier. Returns the reply
    /// addresses in destination order.
    pub fn send_message_batch(
        &self,
        constructor: &mut dyn FnMut() -> Message,
        destinations: &[Address],
    ) -> SimResult<Vec<Address>> {
        let (_, label) = self.ambient()?;
        let mut replies = Vec::with_capacity(destinations.len());
        for dest in destinations {
            let reply = self.register()?;
            let message = constructor().with_reply(reply.clone());
            self.send_message(dest, message)?;
            replies.push(reply);
        }
        self.0
            .borrow()
            .tracer
            .record_batch_send(&label, destinations.len());
        Ok(replies)
    }

    /// Core receive primitive: try each message type in clause order
    /// against the inbox. With `peruse` the whole inbox is scanned
    /// oldest-first per clause; without it only the head message is
    /// examined. On a match the message is removed and returned along with
    /// the index of the clause that matched. Never blocks.
    pub fn receive_match(
        &self,
        address: &Address,
        types: &[MessageType],
        peruse: bool,
    ) -> SimResult<Option<(usize, Message)>> {
        let mut guard = self.0.borrow_mut();
        let inner = &mut *guard;
        let inbox = inner
            .couriers
            .get_mut(&address.courier())
            .and_then(|c| c.inboxes.get_mut(&address.inbox_key()))
            .ok_or_else(|| SimError::ClosedInbox {
                address: address.to_string(),
            })?;
        for (clause_idx, wanted) in types.iter().enumerate() {
            let position = if peruse {
                inbox
                    .iter()
                    .position(|m| message::type_matches(wanted, m.message_type()))
            } else {
                inbox
                    .front()
                    .and_then(|m| message::type_matches(wanted, m.message_type()).then_some(0))
            };
            if let Some(pos) = position {
                let message = inbox.remove(pos).expect("position in range");
                inner.counters.consumed += 1;
                inner.counters.in_inboxes -= 1;
                let source = inner
                    .ambient
                    .last()
                    .map(|(_, l)| l.clone())
                    .unwrap_or_else(|| "external".to_owned());
                let message_type = message.message_type();
                inner
                    .logger
                    .log_with(&source, EntryKind::MessageReceived, || {
                        vec![("message-type", message_type.to_owned())]
                    });
                return Ok(Some((clause_idx, message)));
            }
        }
        Ok(None)
    }

    /// Clause-style receive: on the first match (per `receive_match`) the
    /// clause body runs with the message bound; if every clause misses the
    /// `otherwise` body runs when present. Control always returns.
    pub fn receive_message<'a>(
        &self,
        address: &Address,
        clauses: Vec<(MessageType, Box<dyn FnOnce(Message) + 'a>)>,
        otherwise: Option<Box<dyn FnOnce() + 'a>>,
        peruse: bool,
    ) -> SimResult<ReceiveOutcome> {
        let types: Vec<MessageType> = clauses.iter().map(|(t, _)| *t).collect();
        match self.receive_match(address, &types, peruse)? {
            Some((idx, message)) => {
                let mut bodies: Vec<Box<dyn FnOnce(Message) + 'a>> =
                    clauses.into_iter().map(|(_, b)| b).collect();
                bodies.swap_remove(idx)(message);
                Ok(ReceiveOutcome::Matched(idx))
            }
            None => match otherwise {
                Some(body) => {
                    body();
                    Ok(ReceiveOutcome::Otherwise)
                }
                None => Ok(ReceiveOutcome::NoMatch),
            },
        }
    }

    /// Is there a message of one of these types waiting? (Does not consume.)
    pub fn peek_one_of(&self, address: &Address, types: &[MessageType]) -> SimResult<bool> {
        let inner = self.0.borrow();
        let inbox = inner
            .couriers
            .get(&address.courier())
            .and_then(|c| c.inboxes.get(&address.inbox_key()))
            .ok_or_else(|| SimError::ClosedInbox {
                address: address.to_string(),
            })?;
        Ok(inbox.iter().any(|m| types.contains(&m.message_type())))
    }

    /// Remove and return the oldest message whose type is one of `types`.
    pub fn pop_one_of(
        &self,
        address: &Address,
        types: &[MessageType],
    ) -> SimResult<Option<Message>> {
        let mut guard = self.0.borrow_mut();
        let inner = &mut *guard;
        let inbox = inner
            .couriers
            .get_mut(&address.courier())
            .and_then(|c| c.inboxes.get_mut(&address.inbox_key()))
            .ok_or_else(|| SimError::ClosedInbox {
                address: address.to_string(),
            })?;
        match inbox.iter().position(|m| types.contains(&m.message_type())) {
            Some(pos) => {
                let message = inbox.remove(pos).expect("position in range");
                inner.counters.consumed += 1;
                inner.counters.in_inboxes -= 1;
                Ok(Some(message))
            }
            None => Ok(None),
        }
    }

    /// The next hop a packet at `courier` takes toward `destination`.
    pub fn route(&self, courier: CourierId, destination: &Address) -> SimResult<CourierId> {
        let inner = self.0.borrow();
        route_from(&inner, courier, destination.courier())
    }

    /// One courier tick: drain up to `bandwidth` packets that were already
    /// queued before this tick. Local packets land in their inbox (or take
    /// the return-to-sender path); remote packets move one hop. The
    /// caller (normally the registered courier handler) reschedules.
    pub fn courier_tick(&self, id: CourierId, now: &Time) -> SimResult<()> {
        let mut guard = self.0.borrow_mut();
        let inner = &mut *guard;
        let cap = inner
            .couriers
            .get(&id)
            .ok_or_else(|| SimError::UnknownCourier {
                courier: id.to_string(),
            })?
            .bandwidth
            .unwrap_or(usize::MAX);

        let mut processed = 0;
        while processed < cap {
            let courier = inner.couriers.get_mut(&id).expect("courier exists");
            let ready = courier
                .transmit
                .front()
                .map_or(false, |p| p.enqueued_at < *now);
            if !ready {
                break;
            }
            let packet = courier.transmit.pop_front().expect("front exists");
            if packet.dest.courier() == id {
                deliver_local(inner, id, packet, now);
            } else {
                let next = route_from(inner, id, packet.dest.courier())?;
                inner
                    .couriers
                    .get_mut(&next)
                    .expect("validated neighbor")
                    .transmit
                    .push_back(Packet {
                        enqueued_at: now.clone(),
                        ..packet
                    });
            }
            processed += 1;
        }
        Ok(())
    }
}

fn route_from(inner: &NetworkInner, id: CourierId, dest: CourierId) -> SimResult<CourierId> {
    let courier = inner
        .couriers
        .get(&id)
        .ok_or_else(|| SimError::UnknownCourier {
            courier: id.to_string(),
        })?;
    let next = match &courier.router {
        Some(router) => router(id, dest),
        None => inner.kind.route_step(id, dest),
    }
    .ok_or_else(|| SimError::UnreachableDestination {
        courier: id.to_string(),
        destination: dest.to_string(),
    })?;
    if !inner.kind.is_neighbor(id, next) || !inner.couriers.contains_key(&next) {
        return Err(SimError::RoutingFailure {
            courier: id.to_string(),
            chosen: next.to_string(),
        });
    }
    Ok(next)
}

fn deliver_local(inner: &mut NetworkInner, id: CourierId, packet: Packet, now: &Time) {
    let label = inner.couriers[&id].label.clone();
    let message_type = packet.message.message_type();
    let dest = packet.dest;
    let courier = inner.couriers.get_mut(&id).expect("courier exists");
    match courier.inboxes.get_mut(&dest.inbox_key()) {
        Some(inbox) => {
            inbox.push_back(packet.message);
            inner.counters.in_flight -= 1;
            inner.counters.in_inboxes += 1;
            inner
                .logger
                .log_with(&label, EntryKind::MessageDelivered, || {
                    vec![
                        ("message-type", message_type.to_owned()),
                        ("inbox", dest.to_string()),
                    ]
                });
        }
        None => {
            inner.counters.in_flight -= 1;
            match packet.message.reply_channel {
                Some(reply) => {
                    // The destination no longer exists; signal the failure
                    // back to the reply address.
                    inner.counters.returned += 1;
                    inner.counters.sent += 1;
                    inner.counters.in_flight += 1;
                    inner.logger.log_with(&label, EntryKind::MessageSent, || {
                        vec![
                            (
                                "message-type",
                                message::MSG_RETURN_TO_SENDER.to_owned(),
                            ),
                            ("original-type", message_type.to_owned()),
                            ("to", reply.to_string()),
                        ]
                    });
                    courier.transmit.push_back(Packet {
                        dest: reply,
                        message: Message::return_to_sender(message_type),
                        enqueued_at: now.clone(),
                    });
                }
                None => {
                    inner.counters.dropped += 1;
                    inner
                        .logger
                        .log_with(&label, EntryKind::MessageDropped, || {
                            vec![
                                ("message-type", message_type.to_owned()),
                                ("inbox", dest.to_string()),
                            ]
                        });
                }
            }
        }
    }
}
