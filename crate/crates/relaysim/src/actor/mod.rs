//! Processes: actors ticked by the simulation kernel.
//!
//! Each process owns a public inbox on its home courier, a clock rate, a
//! guarded dispatch table for servicing inbound messages, and one or more
//! command stacks. On every tick it services at most a budgeted number of
//! inbound messages (handlers act as interrupts: one tick to run), then
//! pops and executes one frame per strand, then reschedules itself one
//! clock period ahead.
//!
//! Processes never touch each other's state directly; everything flows
//! through addresses.

mod command;
mod ctx;
mod registry;

use std::any::Any;
use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;

pub use command::{ClauseBody, Command, Frame, ReplyOutcome};
pub use ctx::ProcessCtx;
pub use registry::{
    CommandBody, DispatchClause, Guard, HandlerBody, LockTargetsFn, ProcessKind, RegistryHandle,
};

use crate::error::{SimError, SimResult};
use crate::instrument::EntryKind;
use crate::net::{Address, CourierId};
use crate::sim::{Entity, EntityRef, Event, SchedulingContext, Simulation};
use crate::time::{Rate, Time};
use crate::value::Value;
use crate::world::World;

/// Entity-kind key under which process ticks are registered.
pub const PROCESS_ENTITY_KIND: &str = "process";

/// Name of the command every fresh process starts with.
pub const CMD_START: &str = "START";

/// Lock-protocol bookkeeping carried by every process (used only when the
/// process kind participates in locking).
#[derive(Default)]
pub struct LockableState {
    /// Held or mid-acquisition as somebody's lock client.
    pub locked: bool,
    /// The most recent lock broadcast failed and has not been unwound.
    pub aborting: bool,
    /// Private done-addresses of clients acquired while holding a lock.
    pub(crate) holder_done_addresses: Vec<Address>,
}

/// The state shared by all strands of one actor.
pub struct ProcessCore {
    name: String,
    kind: ProcessKind,
    public_address: Address,
    courier: CourierId,
    clock_period: Time,
    message_budget: usize,
    alive: bool,
    /// Head strand is the primary; the rest are subordinates in creation
    /// order.
    pub(crate) strands: Vec<VecDeque<Frame>>,
    /// General value stack used by the processor-style examples.
    pub data_stack: Vec<Value>,
    pub lockable: LockableState,
    state: Box<dyn Any>,
}

impl ProcessCore {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    pub fn public_address(&self) -> &Address {
        &self.public_address
    }

    pub fn courier(&self) -> CourierId {
        self.courier
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn clock_period(&self) -> &Time {
        &self.clock_period
    }

    /// Kind-specific state fields.
    pub fn state<T: Any>(&self) -> &T {
        self.state
            .downcast_ref()
            .unwrap_or_else(|| panic!("process `{}` holds a different state type", self.name))
    }

    pub fn state_mut<T: Any>(&mut self) -> &mut T {
        self.state
            .downcast_mut()
            .unwrap_or_else(|| panic!("process `{}` holds a different state type", self.name))
    }

    pub fn strand_count(&self) -> usize {
        self.strands.len()
    }

    /// Prepend commands to the primary strand, first listed first — the
    /// outside-the-simulation way to hand a process work (the command
    /// stack is its executable memory).
    pub fn push_commands(&mut self, commands: Vec<Command>) {
        for command in commands.into_iter().rev() {
            self.strands[0].push_front(Frame::Command(command));
        }
    }

    /// Replace the primary strand outright with a fixed program.
    pub fn set_program(&mut self, commands: Vec<Command>) {
        self.strands[0] = commands.into_iter().map(Frame::Command).collect();
    }

    /// Frame labels of the primary strand, top first (diagnostics).
    pub fn primary_stack(&self) -> Vec<String> {
        self.strands
            .first()
            .map(|s| s.iter().map(Frame::label).collect())
            .unwrap_or_default()
    }
}

impl std::fmt::Debug for ProcessCore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessCore")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("alive", &self.alive)
            .field("address", &self.public_address)
            .field("strands", &self.strands.len())
            .finish()
    }
}

/// Handle returned by spawning: the shared core (inspectable after the
/// run) and the public address other processes talk to.
#[derive(Clone)]
pub struct ProcessHandle {
    pub core: Rc<RefCell<ProcessCore>>,
    pub address: Address,
}

/// Description of a process to spawn.
pub struct SpawnSpec {
    pub kind: ProcessKind,
    pub name: String,
    pub state: Box<dyn Any>,
    pub clock_rate: Rate,
    pub courier: CourierId,
    pub start: Time,
    pub message_budget: usize,
}

impl SpawnSpec {
    pub fn new(kind: ProcessKind, name: impl Into<String>, state: impl Any) -> SpawnSpec {
        SpawnSpec {
            kind,
            name: name.into(),
            state: Box::new(state),
            clock_rate: Rate::per_unit(1),
            courier: CourierId::Node(0),
            start: Time::zero(),
            message_budget: 1,
        }
    }

    pub fn rate(mut self, rate: Rate) -> SpawnSpec {
        self.clock_rate = rate;
        self
    }

    pub fn courier(mut self, courier: CourierId) -> SpawnSpec {
        self.courier = courier;
        self
    }

    pub fn start(mut self, start: Time) -> SpawnSpec {
        self.start = start;
        self
    }

    /// Messages serviced per tick in the dispatch phase (default 1).
    pub fn message_budget(mut self, budget: usize) -> SpawnSpec {
        self.message_budget = budget.max(1);
        self
    }
}

struct ProcessEntity {
    core: Rc<RefCell<ProcessCore>>,
    world: World,
    label: Rc<str>,
}

impl Entity for ProcessEntity {
    fn kind(&self) -> &'static str {
        PROCESS_ENTITY_KIND
    }
    fn label(&self) -> Rc<str> {
        self.label.clone()
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Register the process entity handler on a simulation.
pub fn install(sim: &mut Simulation) {
    sim.register_entity_handler(
        PROCESS_ENTITY_KIND,
        Rc::new(|entity, now, sched| process_tick(entity, now, sched)),
    );
}

pub(crate) fn create_process(
    world: &World,
    spec: SpawnSpec,
) -> SimResult<(ProcessHandle, Event)> {
    let address = world.net.register_at(spec.courier)?;
    let core = Rc::new(RefCell::new(ProcessCore {
        name: spec.name,
        kind: spec.kind,
        public_address: address.clone(),
        courier: spec.courier,
        clock_period: spec.clock_rate.period(),
        message_budget: spec.message_budget,
        alive: true,
        strands: vec![VecDeque::from([Frame::Command(Command::nullary(CMD_START))])],
        data_stack: Vec::new(),
        lockable: LockableState::default(),
        state: spec.state,
    }));
    world.deref.insert(address.clone(), core.clone());
    {
        let c = core.borrow();
        world.logger.log_with(c.name(), EntryKind::ProcessSpawned, || {
            vec![("kind", c.kind.to_owned()), ("address", address.to_string())]
        });
    }
    let label: Rc<str> = Rc::from(format!("process:{}", core.borrow().name));
    let entity = Rc::new(RefCell::new(ProcessEntity {
        core: core.clone(),
        world: world.clone(),
        label,
    }));
    let event = Event::entity(entity).at(spec.start);
    Ok((ProcessHandle { core, address }, event))
}

/// Register the process's public inbox, seed its primary stack with
/// `(START)`, and schedule its first tick.
pub fn spawn_process(
    sim: &mut Simulation,
    world: &World,
    spec: SpawnSpec,
) -> SimResult<ProcessHandle> {
    let (handle, event) = create_process(world, spec)?;
    sim.add_event(event)?;
    Ok(handle)
}

fn process_tick(entity: &EntityRef, now: Time, sched: &mut SchedulingContext) -> SimResult<()> {
    let (core_rc, world) = {
        let e = entity.borrow();
        let p = e
            .as_any()
            .downcast_ref::<ProcessEntity>()
            .expect("process entity");
        (p.core.clone(), p.world.clone())
    };
    if !core_rc.borrow().alive {
        return Ok(());
    }

    let name = {
        let core = core_rc.borrow();
        world.net.bind_ambient(core.courier, &core.name);
        core.name.clone()
    };
    let outcome = tick_phases(&core_rc, &world, &now, sched);
    world.net.unbind_ambient();
    outcome.map_err(|e| SimError::InProcess {
        name,
        source: Box::new(e),
    })?;

    let core = core_rc.borrow();
    if core.alive {
        let next = &now + &core.clock_period;
        drop(core);
        sched.schedule_entity(entity.clone(), next)?;
    }
    Ok(())
}

fn tick_phases(
    core_rc: &Rc<RefCell<ProcessCore>>,
    world: &World,
    now: &Time,
    sched: &mut SchedulingContext,
) -> SimResult<()> {
    let mut core = core_rc.borrow_mut();

    // Dispatch phase: service inbound requests through the kind's guarded
    // clause table, at most `message_budget` per tick.
    for _ in 0..core.message_budget {
        if !dispatch_one(&mut core, world, now, sched)? {
            break;
        }
        if !core.alive {
            return Ok(());
        }
    }

    // Upkeep phase: one frame per strand, primary first, then subordinates
    // in creation order (including any spawned earlier in this tick).
    let mut strand = 0;
    while strand < core.strands.len() {
        if !core.alive {
            break;
        }
        if let Some(frame) = core.strands[strand].pop_front() {
            let mut ctx = ProcessCtx {
                core: &mut core,
                world,
                now: now.clone(),
                sched,
                strand,
            };
            execute_frame(&mut ctx, frame)?;
        }
        strand += 1;
    }

    // Spent subordinates disappear; the primary strand stays.
    let mut index = 0;
    core.strands.retain(|s| {
        let keep = index == 0 || !s.is_empty();
        index += 1;
        keep
    });
    Ok(())
}

/// Run the first matching (and unguarded-or-true-guarded) dispatch clause
/// against the public inbox. Returns whether a handler fired.
fn dispatch_one(
    core: &mut ProcessCore,
    world: &World,
    now: &Time,
    sched: &mut SchedulingContext,
) -> SimResult<bool> {
    let clauses = world.registry.dispatch_for(core.kind);
    if clauses.is_empty() {
        return Ok(false);
    }
    let candidates: Vec<(&'static str, &'static str)> = clauses
        .iter()
        .filter(|c| c.guard.as_ref().map_or(true, |g| g(core)))
        .map(|c| (c.message_type, c.handler))
        .collect();
    if candidates.is_empty() {
        return Ok(false);
    }
    let types: Vec<&'static str> = candidates.iter().map(|(t, _)| *t).collect();
    match world.net.receive_match(&core.public_address, &types, true)? {
        Some((idx, message)) => {
            let (message_type, handler_id) = candidates[idx];
            let handler = world.registry.handler(handler_id)?;
            world
                .logger
                .log_with(core.name(), EntryKind::HandlerFired, || {
                    vec![
                        ("handler", handler_id.to_owned()),
                        ("message-type", message_type.to_owned()),
                    ]
                });
            let mut ctx = ProcessCtx {
                core,
                world,
                now: now.clone(),
                sched,
                strand: 0,
            };
            handler(&mut ctx, message)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

fn execute_frame(ctx: &mut ProcessCtx, frame: Frame) -> SimResult<()> {
    {
        let label = frame.label();
        let name = ctx.core.name().to_owned();
        ctx.world
            .logger
            .log_with(&name, EntryKind::CommandExecuted, || {
                vec![("command", label)]
            });
    }
    match frame {
        Frame::Command(command) => {
            let body = ctx.world.registry.command(ctx.core.kind, command.name)?;
            body(ctx, &command.args)
        }
        Frame::Thunk { run, .. } => run(ctx),
        Frame::SyncReceive(frame) => ctx::try_sync_receive(ctx, frame),
        Frame::AwaitReplies(frame) => ctx::try_await_replies(ctx, frame),
    }
}
