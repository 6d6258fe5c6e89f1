//! Randomized 3-coloring of a line using only local network structure:
//! each round a node draws a fresh color, queries both neighbors' colors
//! over batched RPC, and stops once its color collides with neither.

use crate::actor::{spawn_process, Command, DispatchClause, ProcessHandle, SpawnSpec, CMD_START};
use crate::error::SimResult;
use crate::net::{Address, Message};
use crate::scenarios::{construction_error, run_until, Completion, RunOptions};
use crate::stdlib::register_rpc_handler;
use crate::time::Time;
use crate::value::Value;
use crate::world::World;

pub const KIND_COLORING: &str = "coloring";
pub const MSG_COLOR_QUERY: &str = "msg-color-query";

const CMD_QUERY: &str = "QUERY";
const CMD_IDLE: &str = "IDLE";

pub struct ColoringState {
    pub stopped: bool,
    pub color: i64,
    pub neighbors: Vec<Address>,
}

/// Register the coloring kind: the color-query RPC service plus the
/// START → QUERY → … → IDLE command loop.
pub fn install_coloring(world: &World) {
    let kind = KIND_COLORING;

    register_rpc_handler(
        &world.registry,
        "handle-message-color-query",
        kind,
        MSG_COLOR_QUERY,
        |ctx, _message| Ok(Value::Int(ctx.state::<ColoringState>().color)),
    );
    world.registry.set_dispatch(
        kind,
        vec![DispatchClause::new(
            MSG_COLOR_QUERY,
            "handle-message-color-query",
        )],
    );

    world.registry.register_command(kind, CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(CMD_QUERY)])
    });

    world.registry.register_command(kind, CMD_QUERY, |ctx, _| {
        if ctx.state::<ColoringState>().stopped {
            return ctx.process_continuation(vec![Command::nullary(CMD_IDLE)]);
        }
        ctx.process_continuation(vec![Command::nullary(CMD_QUERY)])?;
        let color = ctx.rng().int_below(3) as i64;
        ctx.state_mut::<ColoringState>().color = color;
        let neighbors = ctx.state::<ColoringState>().neighbors.clone();
        let listeners = ctx.send_message_batch(
            &mut || Message::new(MSG_COLOR_QUERY, Value::Unit),
            &neighbors,
        )?;
        ctx.with_replies(listeners, move |ctx, replies| {
            let collision = replies
                .iter()
                .any(|r| r.value() == Some(&Value::Int(color)));
            ctx.state_mut::<ColoringState>().stopped = !collision;
            Ok(())
        })
    });

    world.registry.register_command(kind, CMD_IDLE, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(CMD_IDLE)])
    });
}

#[derive(Debug)]
pub struct ColoringOutcome {
    pub colors: Vec<i64>,
    pub stopped: Vec<bool>,
    pub completion: Completion,
    /// Present when the run options asked for the kernel transcript.
    pub transcript: Option<crate::scenarios::Transcript>,
}

impl ColoringOutcome {
    /// Every adjacent pair differs.
    pub fn is_proper(&self) -> bool {
        self.colors.windows(2).all(|w| w[0] != w[1])
    }

    pub fn all_stopped(&self) -> bool {
        self.stopped.iter().all(|s| *s)
    }
}

/// Color a line of `n` nodes. Termination is probabilistic; the canary
/// (default `10·n` time units) bounds the run.
pub fn run_coloring(options: &RunOptions, n: usize) -> SimResult<(ColoringOutcome, World)> {
    if n < 2 {
        return Err(construction_error("coloring needs at least 2 nodes"));
    }
    let (mut sim, world) = World::build(options.seed, &options.topology, options.instrumented)?;
    sim.record_transcript(options.record_transcript);
    install_coloring(&world);

    let couriers = world.net.courier_ids();
    let handles: Vec<ProcessHandle> = (0..n)
        .map(|i| {
            spawn_process(
                &mut sim,
                &world,
                SpawnSpec::new(
                    KIND_COLORING,
                    format!("node-{i}"),
                    ColoringState {
                        stopped: false,
                        color: 0,
                        neighbors: Vec::new(),
                    },
                )
                .courier(couriers[i % couriers.len()]),
            )
        })
        .collect::<SimResult<_>>()?;

    // Pre-run intervention: write neighbor addresses into each node.
    for i in 0..n {
        let mut neighbors = Vec::new();
        if i > 0 {
            neighbors.push(handles[i - 1].address.clone());
        }
        if i + 1 < n {
            neighbors.push(handles[i + 1].address.clone());
        }
        handles[i]
            .core
            .borrow_mut()
            .state_mut::<ColoringState>()
            .neighbors = neighbors;
    }

    let deadline = options
        .canary
        .clone()
        .unwrap_or_else(|| Time::from_int(10 * n as i64));
    let completion = run_until(&mut sim, &world, deadline, Time::from_int(10), |_| {
        handles
            .iter()
            .all(|h| h.core.borrow().state::<ColoringState>().stopped)
    })?;

    let colors = handles
        .iter()
        .map(|h| h.core.borrow().state::<ColoringState>().color)
        .collect();
    let stopped = handles
        .iter()
        .map(|h| h.core.borrow().state::<ColoringState>().stopped)
        .collect();
    Ok((
        ColoringOutcome {
            colors,
            stopped,
            completion,
            transcript: crate::scenarios::take_transcript(&sim),
        },
        world,
    ))
}
