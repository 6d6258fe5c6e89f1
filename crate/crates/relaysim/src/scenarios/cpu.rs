//! Toy microprocessors, in both kernel-dispatch flavors, plus an
//! arithmetic server that computes factorials over RPC.
//!
//! The entity-handler CPU keeps an instruction vector and a program
//! counter; the process-kind variant absorbs both into the command stack.

use std::any::Any;
use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;

use crate::actor::{spawn_process, Command, DispatchClause, ProcessKind, SpawnSpec};
use crate::error::{SimError, SimResult};
use crate::net::{Address, Message};
use crate::scenarios::{run_until, Completion, RunOptions};
use crate::sim::{Entity, Event, Simulation};
use crate::time::{Rate, Time};
use crate::value::Value;
use crate::world::World;

// ---------------------------------------------------------------------------
// Entity-handler variant
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpuInstruction {
    /// Halt execution (the entity stops rescheduling itself).
    Halt,
    /// Place a constant on the data stack.
    Push(i64),
    /// Multiply the top of stack by a constant.
    Muli(i64),
}

/// State of a simple CPU driven directly by an entity handler.
pub struct ToyCpu {
    pub data_stack: Vec<i64>,
    pub program_counter: usize,
    pub instructions: Vec<CpuInstruction>,
    pub rate: Rate,
}

pub const TOY_CPU_ENTITY_KIND: &str = "toy-cpu";

impl Entity for ToyCpu {
    fn kind(&self) -> &'static str {
        TOY_CPU_ENTITY_KIND
    }
    fn label(&self) -> Rc<str> {
        Rc::from("toy-cpu")
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

/// Register the CPU transition rule: fetch the instruction at the program
/// counter, advance, execute, and reschedule one period ahead — except on
/// halt, which returns no events at all.
pub fn install_toy_cpu(sim: &mut Simulation) {
    sim.register_entity_handler(
        TOY_CPU_ENTITY_KIND,
        Rc::new(|entity, now, ctx| {
            let mut guard = entity.borrow_mut();
            let cpu = guard
                .as_any_mut()
                .downcast_mut::<ToyCpu>()
                .expect("toy cpu entity");
            let instruction = cpu
                .instructions
                .get(cpu.program_counter)
                .copied()
                .ok_or_else(|| {
                    SimError::InvariantViolation("program counter ran off the end".into())
                })?;
            cpu.program_counter += 1;
            match instruction {
                CpuInstruction::Halt => {
                    return ctx.finish_with(Vec::new());
                }
                CpuInstruction::Push(value) => cpu.data_stack.push(value),
                CpuInstruction::Muli(value) => {
                    let top = cpu.data_stack.pop().ok_or_else(|| {
                        SimError::InvariantViolation("cpu data stack underflow".into())
                    })?;
                    cpu.data_stack.push(top * value);
                }
            }
            let period = cpu.rate.period();
            drop(guard);
            ctx.schedule_entity(entity.clone(), now + period)
        }),
    );
}

/// Run one program on the entity-handler CPU and return its final state.
pub fn run_toy_cpu(program: Vec<CpuInstruction>, rate: Rate) -> SimResult<(Vec<i64>, usize)> {
    let mut sim = Simulation::new(0);
    install_toy_cpu(&mut sim);
    let cpu = Rc::new(RefCell::new(ToyCpu {
        data_stack: Vec::new(),
        program_counter: 0,
        instructions: program,
        rate,
    }));
    sim.add_event(Event::entity(cpu.clone()))?;
    sim.run(None)?;
    let guard = cpu.borrow();
    let cpu_ref = guard.as_any().downcast_ref::<ToyCpu>().expect("toy cpu");
    Ok((cpu_ref.data_stack.clone(), cpu_ref.program_counter))
}

// ---------------------------------------------------------------------------
// Process-kind variant and the arithmetic server
// ---------------------------------------------------------------------------

pub const KIND_PROCESSOR: ProcessKind = "processor";
pub const KIND_ARITHMETIC_SERVER: ProcessKind = "arithmetic-server";

pub const CMD_HALT: &str = "HALT";
pub const CMD_PUSH: &str = "PUSH";
pub const CMD_MULI: &str = "MULI";
pub const CMD_EMIT: &str = "EMIT";
pub const CMD_FACTORIAL: &str = "FACTORIAL";

/// Message requesting a factorial computation.
pub const MSG_FACTORIAL: &str = "msg-factorial";

fn int_arg(args: &[Value], command: &str) -> SimResult<i64> {
    args.first()
        .and_then(Value::as_int)
        .ok_or_else(|| SimError::InvariantViolation(format!("{command} expects an integer")))
}

/// Register the bare processor commands (HALT, PUSH, MULI) for a kind.
pub fn install_processor_commands(world: &World, kind: ProcessKind) {
    world.registry.register_command(kind, CMD_HALT, |ctx, _| ctx.process_die());
    world.registry.register_command(kind, CMD_PUSH, |ctx, args| {
        let value = int_arg(args, CMD_PUSH)?;
        ctx.push_data(Value::Int(value));
        Ok(())
    });
    world.registry.register_command(kind, CMD_MULI, |ctx, args| {
        let value = int_arg(args, CMD_MULI)?;
        let top = ctx.pop_data()?.as_int().ok_or_else(|| {
            SimError::InvariantViolation("MULI expects an integer on the data stack".into())
        })?;
        ctx.push_data(Value::Int(top * value));
        Ok(())
    });
}

/// Register the processor kind: the three commands and an empty dispatch
/// table.
pub fn install_processor(world: &World) {
    install_processor_commands(world, KIND_PROCESSOR);
    world.registry.set_dispatch(KIND_PROCESSOR, Vec::new());
}

/// Register the arithmetic server: a processor that sits in a START loop
/// and serves factorial requests, leaving its data stack as it found it.
pub fn install_arithmetic_server(world: &World) {
    let kind = KIND_ARITHMETIC_SERVER;
    install_processor_commands(world, kind);

    world.registry.register_command(kind, crate::actor::CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(crate::actor::CMD_START)])
    });

    world.registry.register_command(kind, CMD_EMIT, |ctx, args| {
        let address = args
            .first()
            .and_then(Value::as_address)
            .cloned()
            .ok_or_else(|| SimError::InvariantViolation("EMIT expects an address".into()))?;
        let result = ctx.pop_data()?;
        ctx.send_message(&address, Message::rpc_done(result))
    });

    world.registry.register_command(kind, CMD_FACTORIAL, |ctx, args| {
        let n = int_arg(args, CMD_FACTORIAL)?;
        if n == 0 {
            ctx.process_continuation(vec![Command::new(CMD_PUSH, vec![Value::Int(1)])])
        } else {
            ctx.process_continuation(vec![
                Command::new(CMD_FACTORIAL, vec![Value::Int(n - 1)]),
                Command::new(CMD_MULI, vec![Value::Int(n)]),
            ])
        }
    });

    world.registry.register_handler(
        "handle-message-factorial",
        kind,
        MSG_FACTORIAL,
        |ctx, message| {
            let n = message.payload.as_int().ok_or_else(|| {
                SimError::InvariantViolation("factorial request payload must be an integer".into())
            })?;
            let mut continuation = vec![Command::new(CMD_FACTORIAL, vec![Value::Int(n)])];
            if let Some(reply) = &message.reply_channel {
                continuation.push(Command::new(CMD_EMIT, vec![Value::Address(reply.clone())]));
            }
            ctx.process_continuation(continuation)
        },
    );

    world.registry.set_dispatch(
        kind,
        vec![DispatchClause::new(MSG_FACTORIAL, "handle-message-factorial")],
    );
}

// ---------------------------------------------------------------------------
// Factorial driver: a client process exercising the full RPC path
// ---------------------------------------------------------------------------

const KIND_FACTORIAL_CLIENT: ProcessKind = "factorial-client";
const CMD_REQUEST: &str = "REQUEST";

struct ClientState {
    pending: VecDeque<i64>,
    server: Address,
    results: Vec<(i64, i64)>,
    done: bool,
}

fn install_factorial_client(world: &World) {
    let kind = KIND_FACTORIAL_CLIENT;
    world.registry.register_command(kind, crate::actor::CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(CMD_REQUEST)])
    });
    world.registry.register_command(kind, CMD_REQUEST, |ctx, _| {
        let next = ctx.state_mut::<ClientState>().pending.pop_front();
        let Some(n) = next else {
            ctx.state_mut::<ClientState>().done = true;
            return Ok(());
        };
        let server = ctx.state::<ClientState>().server.clone();
        let listeners = ctx.send_message_batch(
            &mut || Message::new(MSG_FACTORIAL, Value::Int(n)),
            &[server],
        )?;
        ctx.with_replies(listeners, move |ctx, replies| {
            let value = replies[0]
                .value()
                .and_then(Value::as_int)
                .ok_or_else(|| SimError::InvariantViolation("factorial reply missing".into()))?;
            ctx.state_mut::<ClientState>().results.push((n, value));
            ctx.process_continuation(vec![Command::nullary(CMD_REQUEST)])
        })
    });
    world.registry.set_dispatch(kind, Vec::new());
}

#[derive(Debug)]
pub struct FactorialOutcome {
    pub results: Vec<(i64, i64)>,
    pub server_stack_depth: usize,
    pub completion: Completion,
}

/// Compute `n!` for each requested `n` through the full RPC path:
/// register a private reply inbox, send, busy-wait, unbox the rpc-done,
/// unregister.
pub fn run_factorial(options: &RunOptions, requests: &[i64]) -> SimResult<(FactorialOutcome, World)> {
    let (mut sim, world) = World::build(options.seed, &options.topology, options.instrumented)?;
    install_arithmetic_server(&world);
    install_factorial_client(&world);

    let couriers = world.net.courier_ids();
    let server = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(KIND_ARITHMETIC_SERVER, "server", ()).courier(couriers[0]),
    )?;
    let client = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(
            KIND_FACTORIAL_CLIENT,
            "client",
            ClientState {
                pending: requests.iter().copied().collect(),
                server: server.address.clone(),
                results: Vec::new(),
                done: false,
            },
        )
        .courier(couriers[couriers.len() - 1]),
    )?;

    let deadline = options
        .canary
        .clone()
        .unwrap_or_else(|| Time::from_int(200 + 40 * requests.len() as i64));
    let completion = run_until(&mut sim, &world, deadline, Time::from_int(16), |_| {
        client.core.borrow().state::<ClientState>().done
    })?;

    let results = client.core.borrow().state::<ClientState>().results.clone();
    let server_stack_depth = server.core.borrow().data_stack.len();
    Ok((
        FactorialOutcome {
            results,
            server_stack_depth,
            completion,
        },
        world,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_cpu_runs_a_program_and_halts() {
        let (stack, pc) = run_toy_cpu(
            vec![
                CpuInstruction::Push(7),
                CpuInstruction::Muli(6),
                CpuInstruction::Halt,
            ],
            Rate::per_unit(1),
        )
        .unwrap();
        assert_eq!(stack, vec![42]);
        assert_eq!(pc, 3);
    }

    #[test]
    fn process_kind_processor_halts_and_dies() {
        let (mut sim, world) = World::build(0, &crate::scenarios::default_topology(), true).unwrap();
        install_processor(&world);
        let handle = spawn_process(
            &mut sim,
            &world,
            SpawnSpec::new(KIND_PROCESSOR, "cpu", ()),
        )
        .unwrap();
        // Seed the stack under START: START is unregistered for the bare
        // processor, so replace the primary strand wholesale.
        handle.core.borrow_mut().strands[0] = VecDeque::from([
            crate::actor::Frame::Command(Command::new(CMD_PUSH, vec![Value::Int(5)])),
            crate::actor::Frame::Command(Command::new(CMD_MULI, vec![Value::Int(8)])),
            crate::actor::Frame::Command(Command::nullary(CMD_HALT)),
        ]);
        sim.run(Some(crate::sim::canary_until(Time::from_int(10))))
            .unwrap();
        let core = handle.core.borrow();
        assert!(!core.is_alive());
        assert_eq!(core.data_stack, vec![Value::Int(40)]);
    }

    #[test]
    fn factorial_matches_iterative_product() {
        let ns: Vec<i64> = (0..=10).collect();
        let (outcome, _) = run_factorial(&RunOptions::seeded(1), &ns).unwrap();
        assert!(outcome.completion.is_done());
        assert_eq!(outcome.results.len(), ns.len());
        for (n, got) in &outcome.results {
            let expected: i64 = (1..=*n).product();
            assert_eq!(got, &expected, "{}!", n);
        }
        assert_eq!(outcome.server_stack_depth, 0);
    }
}
