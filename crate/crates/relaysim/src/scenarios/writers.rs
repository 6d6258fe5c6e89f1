//! Several writer processes transmit multi-part payloads to one reader,
//! each first acquiring a broadcast lock on it so the payloads arrive
//! without interleaving. A writer whose lock is denied backs off through
//! its unlock/START cycle and retries.

use crate::actor::{
    spawn_process, Command, DispatchClause, ProcessHandle, SpawnSpec, CMD_START,
};
use crate::error::SimResult;
use crate::net::{Address, Message};
use crate::scenarios::{construction_error, run_until, Completion, RunOptions};
use crate::stdlib::{install_lockable, register_rpc_handler, CMD_BROADCAST_LOCK, CMD_BROADCAST_UNLOCK};
use crate::time::Time;
use crate::value::Value;
use crate::world::World;

pub const KIND_WRITER: &str = "writer";
pub const KIND_READER: &str = "reader";
pub const MSG_WRITE: &str = "msg-write";

const CMD_TRANSMIT: &str = "TRANSMIT";

pub struct WriterState {
    pub transmit_list: Vec<Value>,
    pub target: Address,
}

pub struct ReaderState {
    /// Payloads in arrival order.
    pub receive_list: Vec<Value>,
}

/// Register both kinds and the lock protocol wiring.
pub fn install_writers_reader(world: &World) {
    // Reader: loops on START, serves lock requests and writes.
    let reader_lock_clause = install_lockable(&world.registry, KIND_READER);
    register_rpc_handler(
        &world.registry,
        "handle-message-write",
        KIND_READER,
        MSG_WRITE,
        |ctx, message| {
            let payload = message.payload.clone();
            ctx.state_mut::<ReaderState>()
                .receive_list
                .push(payload.clone());
            Ok(payload)
        },
    );
    world.registry.set_dispatch(
        KIND_READER,
        vec![
            reader_lock_clause,
            DispatchClause::new(MSG_WRITE, "handle-message-write"),
        ],
    );
    world
        .registry
        .register_command(KIND_READER, CMD_START, |ctx, _| {
            ctx.process_continuation(vec![Command::nullary(CMD_START)])
        });
    world
        .registry
        .set_lockable_targets(KIND_READER, |_| Vec::new());

    // Writer: lock, transmit, unlock, repeat until the list drains.
    let _writer_lock_clause = install_lockable(&world.registry, KIND_WRITER);
    world.registry.set_dispatch(KIND_WRITER, Vec::new());
    world
        .registry
        .register_command(KIND_WRITER, CMD_START, |ctx, _| {
            if ctx.state::<WriterState>().transmit_list.is_empty() {
                return Ok(());
            }
            let target = ctx.state::<WriterState>().target.clone();
            ctx.process_continuation(vec![
                Command::new(
                    CMD_BROADCAST_LOCK,
                    vec![Value::List(vec![Value::Address(target)])],
                ),
                Command::nullary(CMD_TRANSMIT),
                Command::nullary(CMD_BROADCAST_UNLOCK),
                Command::nullary(CMD_START),
            ])
        });
    world
        .registry
        .register_command(KIND_WRITER, CMD_TRANSMIT, |ctx, _| {
            // On an aborted lock the payload is left untouched for the
            // retry cycle.
            if ctx.core().lockable.aborting {
                return Ok(());
            }
            let state = ctx.state_mut::<WriterState>();
            if state.transmit_list.is_empty() {
                return Ok(());
            }
            let next = state.transmit_list.remove(0);
            let target = state.target.clone();
            ctx.send_message(&target, Message::new(MSG_WRITE, next))?;
            ctx.process_continuation(vec![Command::nullary(CMD_TRANSMIT)])
        });
}

#[derive(Debug)]
pub struct WritersOutcome {
    /// The reader's receive list in arrival order.
    pub received: Vec<Value>,
    pub completion: Completion,
    /// Present when the run options asked for the kernel transcript.
    pub transcript: Option<crate::scenarios::Transcript>,
}

impl WritersOutcome {
    pub fn received_ints(&self) -> Vec<i64> {
        self.received
            .iter()
            .filter_map(Value::as_int)
            .collect()
    }
}

/// Encode writer `w`'s `j`-th payload part distinguishably.
pub fn payload_value(writer: usize, part: usize) -> i64 {
    (writer as i64 + 1) * 1_000 + part as i64
}

/// Run `writers` writers with `parts`-long payloads against one reader.
pub fn run_writers_reader(
    options: &RunOptions,
    writers: usize,
    parts: usize,
) -> SimResult<(WritersOutcome, World)> {
    if writers == 0 {
        return Err(construction_error("need at least one writer"));
    }
    let (mut sim, world) = World::build(options.seed, &options.topology, options.instrumented)?;
    sim.record_transcript(options.record_transcript);
    install_writers_reader(&world);

    let couriers = world.net.courier_ids();
    let reader = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(
            KIND_READER,
            "reader",
            ReaderState {
                receive_list: Vec::new(),
            },
        )
        .courier(couriers[0]),
    )?;

    let writer_handles: Vec<ProcessHandle> = (0..writers)
        .map(|w| {
            spawn_process(
                &mut sim,
                &world,
                SpawnSpec::new(
                    KIND_WRITER,
                    format!("writer-{w}"),
                    WriterState {
                        transmit_list: (0..parts)
                            .map(|j| Value::Int(payload_value(w, j)))
                            .collect(),
                        target: reader.address.clone(),
                    },
                )
                .courier(couriers[(w + 1) % couriers.len()]),
            )
        })
        .collect::<SimResult<_>>()?;

    let deadline = options.canary.clone().unwrap_or_else(|| {
        Time::from_int(200 + 60 * (writers * (parts + 10)) as i64)
    });
    let completion = run_until(&mut sim, &world, deadline, Time::from_int(25), |world| {
        writer_handles.iter().all(|h| {
            let core = h.core.borrow();
            core.state::<WriterState>().transmit_list.is_empty()
                && !core.lockable.aborting
                && core.lockable.holder_done_addresses.is_empty()
        }) && !reader.core.borrow().lockable.locked
            && world.net.quiescent()
    })?;

    let received = reader
        .core
        .borrow()
        .state::<ReaderState>()
        .receive_list
        .clone();
    Ok((
        WritersOutcome {
            received,
            completion,
            transcript: crate::scenarios::take_transcript(&sim),
        },
        world,
    ))
}

/// Check that, for every writer, its parts appear as one contiguous
/// in-order block in the arrival sequence.
pub fn contiguous_per_writer(received: &[i64], writers: usize, parts: usize) -> bool {
    if received.len() != writers * parts {
        return false;
    }
    if parts == 0 {
        return true;
    }
    let mut i = 0;
    while i < received.len() {
        let writer = received[i] / 1_000 - 1;
        for j in 0..parts {
            let expected = (writer + 1) * 1_000 + j as i64;
            if received[i + j] != expected {
                return false;
            }
        }
        i += parts;
    }
    true
}
