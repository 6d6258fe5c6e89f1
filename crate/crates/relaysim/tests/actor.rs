//! Actor-layer behavior: tick pacing, dispatch, blocking constructs,
//! strand discipline, and death semantics.

mod common;

use std::cell::RefCell;
use std::rc::Rc;

use relaysim::actor::{
    spawn_process, Command, DispatchClause, Frame, ProcessHandle, SpawnSpec, CMD_START,
};
use relaysim::error::SimError;
use relaysim::net::message::MSG_RETURN_TO_SENDER;
use relaysim::net::{Message, TopologySpec};
use relaysim::sim::canary_until;
use relaysim::value::Value;
use relaysim::{Simulation, Time, World};

fn build(seed: u64) -> (Simulation, World) {
    World::build(seed, &TopologySpec::all_to_all(1), true).unwrap()
}

fn courier0(world: &World) -> relaysim::net::CourierId {
    world.net.courier_ids()[0]
}

/// State that just records the times its commands ran.
struct Recorder {
    ticks: Vec<Time>,
}

fn install_ticker(world: &World, kind: &'static str) {
    world.registry.register_command(kind, CMD_START, |ctx, _| {
        let now = ctx.now().clone();
        ctx.state_mut::<Recorder>().ticks.push(now);
        ctx.process_continuation(vec![Command::nullary(CMD_START)])
    });
    world.registry.set_dispatch(kind, Vec::new());
}

#[test]
fn tick_pacing_follows_the_clock_rate() {
    let (mut sim, world) = build(0);
    install_ticker(&world, "ticker");
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("ticker", "t", Recorder { ticks: Vec::new() })
            .rate(relaysim::Rate::per_unit(2))
            .courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(1)))).unwrap();
    let core = handle.core.borrow();
    assert_eq!(
        core.state::<Recorder>().ticks,
        vec![
            Time::zero(),
            Time::ratio(1, 2),
            Time::from_int(1),
        ]
    );
}

#[test]
fn fresh_processes_start_with_the_start_command() {
    let (mut sim, world) = build(0);
    install_ticker(&world, "ticker");
    let a = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("ticker", "a", Recorder { ticks: Vec::new() }).courier(courier0(&world)),
    )
    .unwrap();
    let b = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("ticker", "b", Recorder { ticks: Vec::new() }).courier(courier0(&world)),
    )
    .unwrap();
    assert_eq!(a.core.borrow().primary_stack(), vec!["(START)".to_owned()]);
    assert_ne!(a.address, b.address);
}

/// The continuation puts its commands ahead of existing frames, first
/// listed first.
#[test]
fn continuation_order_matches_listing_order() {
    let (mut sim, world) = build(0);
    let order: Rc<RefCell<Vec<i64>>> = Rc::new(RefCell::new(Vec::new()));
    {
        let order = order.clone();
        world.registry.register_command("seq", "RECORD", move |ctx, args| {
            order.borrow_mut().push(args[0].as_int().unwrap());
            let _ = ctx;
            Ok(())
        });
    }
    world.registry.register_command("seq", CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::new("RECORD", vec![Value::Int(99)])])?;
        // Pushed afterwards, so these run first.
        ctx.process_continuation(vec![
            Command::new("RECORD", vec![Value::Int(1)]),
            Command::new("RECORD", vec![Value::Int(2)]),
        ])
    });
    world.registry.set_dispatch("seq", Vec::new());
    spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("seq", "s", ()).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(5)))).unwrap();
    assert_eq!(*order.borrow(), vec![1, 2, 99]);
}

#[test]
fn unknown_commands_error_with_their_name() {
    let (mut sim, world) = build(0);
    world.registry.set_dispatch("broken", Vec::new());
    spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("broken", "b", ()).courier(courier0(&world)),
    )
    .unwrap();
    let err = sim.run(None).unwrap_err();
    match err.root() {
        SimError::UnknownCommand { kind, name } => {
            assert_eq!(*kind, "broken");
            assert_eq!(name, "START");
        }
        other => panic!("unexpected error {other:?}"),
    }
}

/// Guards enable and disable dispatch clauses per tick.
#[test]
fn guarded_dispatch_skips_until_the_guard_opens() {
    struct Gate {
        open: bool,
        served: u32,
    }
    let (mut sim, world) = build(0);
    world
        .registry
        .register_handler("take", "gate", "msg-knock", |ctx, _| {
            ctx.state_mut::<Gate>().served += 1;
            Ok(())
        });
    world.registry.set_dispatch(
        "gate",
        vec![DispatchClause::guarded("msg-knock", "take", |core| {
            core.state::<Gate>().open
        })],
    );
    world.registry.register_command("gate", CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(CMD_START)])
    });
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(
            "gate",
            "g",
            Gate {
                open: false,
                served: 0,
            },
        )
        .courier(courier0(&world)),
    )
    .unwrap();
    // Knock once at t=0; open the gate at t=5.
    {
        let net = world.net.clone();
        let dest = handle.address.clone();
        sim.add_event(relaysim::Event::callback(move |_, _| {
            net.with_courier(dest.courier(), "test", || {
                net.send_message(&dest, Message::new("msg-knock", Value::Unit))
            })?
        }))
        .unwrap();
    }
    {
        let core = handle.core.clone();
        sim.add_event(
            relaysim::Event::callback(move |_, _| {
                core.borrow_mut().state_mut::<Gate>().open = true;
                Ok(())
            })
            .at(Time::from_int(5)),
        )
        .unwrap();
    }
    sim.run(Some(canary_until(Time::from_int(4)))).unwrap();
    assert_eq!(handle.core.borrow().state::<Gate>().served, 0);
    sim.run(Some(canary_until(Time::from_int(7)))).unwrap();
    assert_eq!(handle.core.borrow().state::<Gate>().served, 1);
}

/// With a budget of one, two queued messages take two ticks; a larger
/// budget drains them in one.
#[test]
fn message_budget_bounds_dispatch_per_tick() {
    struct Count {
        served: u32,
    }
    for (budget, after_one_tick) in [(1usize, 1u32), (4, 2)] {
        let (mut sim, world) = build(0);
        world
            .registry
            .register_handler("count", "svc", "msg-job", |ctx, _| {
                ctx.state_mut::<Count>().served += 1;
                Ok(())
            });
        world
            .registry
            .set_dispatch("svc", vec![DispatchClause::new("msg-job", "count")]);
        world.registry.register_command("svc", CMD_START, |ctx, _| {
            ctx.process_continuation(vec![Command::nullary(CMD_START)])
        });
        let handle = spawn_process(
            &mut sim,
            &world,
            SpawnSpec::new("svc", "s", Count { served: 0 })
                .courier(courier0(&world))
                .message_budget(budget),
        )
        .unwrap();
        let net = world.net.clone();
        let dest = handle.address.clone();
        sim.add_event(relaysim::Event::callback(move |_, _| {
            net.with_courier(dest.courier(), "test", || {
                net.send_message(&dest, Message::new("msg-job", Value::Int(1)))?;
                net.send_message(&dest, Message::new("msg-job", Value::Int(2)))
            })?
        }))
        .unwrap();
        sim.run(Some(canary_until(Time::from_int(1)))).unwrap();
        assert_eq!(handle.core.borrow().state::<Count>().served, after_one_tick);
    }
}

/// sync-receive runs its body the tick the message is already waiting,
/// and otherwise busy-waits while blocking the frames beneath it.
#[test]
fn sync_receive_busy_waits_until_the_message_lands() {
    struct Wait {
        got_at: Option<Time>,
        after_ran_at: Option<Time>,
        inbox: Option<relaysim::net::Address>,
    }
    let (mut sim, world) = build(0);
    world.registry.register_command("waiter", CMD_START, |ctx, _| {
        let inbox = ctx.register_inbox()?;
        ctx.state_mut::<Wait>().inbox = Some(inbox.clone());
        ctx.process_continuation(vec![Command::nullary("AFTER")])?;
        ctx.sync_receive(
            inbox,
            vec![(
                "msg-ping",
                Box::new(|ctx, _m| {
                    let now = ctx.now().clone();
                    ctx.state_mut::<Wait>().got_at = Some(now);
                    Ok(())
                }),
            )],
        )
    });
    world.registry.register_command("waiter", "AFTER", |ctx, _| {
        let now = ctx.now().clone();
        ctx.state_mut::<Wait>().after_ran_at = Some(now);
        Ok(())
    });
    world.registry.set_dispatch("waiter", Vec::new());
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(
            "waiter",
            "w",
            Wait {
                got_at: None,
                after_ran_at: None,
                inbox: None,
            },
        )
        .courier(courier0(&world)),
    )
    .unwrap();
    // The ping is sent at t=3; it lands in the inbox at t=4.
    {
        let net = world.net.clone();
        let core = handle.core.clone();
        sim.add_event(
            relaysim::Event::callback(move |_, _| {
                let inbox = core.borrow().state::<Wait>().inbox.clone().unwrap();
                net.with_courier(inbox.courier(), "test", || {
                    net.send_message(&inbox, Message::new("msg-ping", Value::Unit))
                })?
            })
            .at(Time::from_int(3)),
        )
        .unwrap();
    }
    sim.run(Some(canary_until(Time::from_int(6)))).unwrap();
    let core = handle.core.borrow();
    let state = core.state::<Wait>();
    assert_eq!(state.got_at, Some(Time::from_int(4)));
    // The frame beneath the busy-wait ran only after the receive resolved.
    assert_eq!(state.after_ran_at, Some(Time::from_int(5)));
}

/// with-replies gathers in address order and marks dead peers absent.
#[test]
fn with_replies_marks_dead_peers_absent() {
    struct Client {
        server: Option<relaysim::net::Address>,
        outcome: Option<(bool, bool)>,
    }
    let (mut sim, world) = build(0);

    // A server kind that dies immediately.
    world.registry.register_command("mayfly", CMD_START, |ctx, _| ctx.process_die());
    world.registry.set_dispatch("mayfly", Vec::new());

    world.registry.register_command("asker", CMD_START, |ctx, _| {
        let server = ctx.state::<Client>().server.clone().unwrap();
        let listeners = ctx.send_message_batch(
            &mut || Message::new("msg-query", Value::Unit),
            &[server],
        )?;
        ctx.with_replies(listeners, |ctx, replies| {
            let absent = replies[0].is_absent();
            ctx.state_mut::<Client>().outcome = Some((true, absent));
            Ok(())
        })
    });
    world.registry.set_dispatch("asker", Vec::new());

    let server = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("mayfly", "server", ()).courier(courier0(&world)),
    )
    .unwrap();
    let client = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new(
            "asker",
            "client",
            Client {
                server: Some(server.address.clone()),
                outcome: None,
            },
        )
        .courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(10)))).unwrap();
    let core = client.core.borrow();
    assert_eq!(core.state::<Client>().outcome, Some((true, true)));
    // The death produced exactly one return-to-sender.
    let rts = world.logger.query(|e| {
        e.kind == relaysim::instrument::EntryKind::MessageSent
            && e.attrs.get("message-type").map(String::as_str) == Some(MSG_RETURN_TO_SENDER)
    });
    assert_eq!(rts.len(), 1);
}

#[test]
fn with_replies_on_no_addresses_runs_immediately() {
    struct Flag {
        ran_at: Option<Time>,
    }
    let (mut sim, world) = build(0);
    world.registry.register_command("solo", CMD_START, |ctx, _| {
        ctx.with_replies(Vec::new(), |ctx, replies| {
            assert!(replies.is_empty());
            let now = ctx.now().clone();
            ctx.state_mut::<Flag>().ran_at = Some(now);
            Ok(())
        })
    });
    world.registry.set_dispatch("solo", Vec::new());
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("solo", "s", Flag { ran_at: None }).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(2)))).unwrap();
    assert_eq!(
        handle.core.borrow().state::<Flag>().ran_at,
        Some(Time::zero())
    );
}

/// Death discards queued frames, unregisters the public address, and a
/// second death is an error.
#[test]
fn death_semantics() {
    let ran: Rc<RefCell<bool>> = Rc::new(RefCell::new(false));
    let (mut sim, world) = build(0);
    {
        let ran = ran.clone();
        world.registry.register_command("doomed", "NEVER", move |_ctx, _| {
            *ran.borrow_mut() = true;
            Ok(())
        });
    }
    world.registry.register_command("doomed", CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary("NEVER")])?;
        ctx.process_die()
    });
    world.registry.set_dispatch("doomed", Vec::new());
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("doomed", "d", ()).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(3)))).unwrap();
    assert!(!handle.core.borrow().is_alive());
    assert!(!*ran.borrow());
    assert!(!world.net.has_inbox(&handle.address));
}

/// Dying twice surfaces as a dead-process error.
#[test]
fn double_death_is_an_error() {
    let saw_error: Rc<RefCell<bool>> = Rc::new(RefCell::new(false));
    let (mut sim, world) = build(0);
    {
        let saw_error = saw_error.clone();
        world
            .registry
            .register_command("doomed2", CMD_START, move |ctx, _| {
                ctx.process_die()?;
                match ctx.process_die() {
                    Err(SimError::DeadProcess { name }) if name == "d2" => {
                        *saw_error.borrow_mut() = true;
                        Ok(())
                    }
                    other => panic!("expected dead-process error, got {other:?}"),
                }
            });
    }
    world.registry.set_dispatch("doomed2", Vec::new());
    spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("doomed2", "d2", ()).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(2)))).unwrap();
    assert!(*saw_error.borrow());
}

/// Subprocesses spawned mid-run tick from their start time and the parent
/// can record their address.
#[test]
fn processes_can_spawn_subprocesses() {
    struct Parent {
        child: Option<relaysim::net::Address>,
    }
    let (mut sim, world) = build(0);
    install_ticker(&world, "ticker");
    world.registry.register_command("parent", CMD_START, |ctx, _| {
        let child = ctx.spawn(
            SpawnSpec::new("ticker", "child", Recorder { ticks: Vec::new() })
                .courier(ctx.core().courier()),
        )?;
        ctx.state_mut::<Parent>().child = Some(child.address.clone());
        Ok(())
    });
    world.registry.set_dispatch("parent", Vec::new());
    let parent = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("parent", "p", Parent { child: None }).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(2)))).unwrap();
    let addr = parent.core.borrow().state::<Parent>().child.clone().unwrap();
    assert!(world.net.has_inbox(&addr));
}

/// One frame per strand per tick: a three-frame subordinate takes three
/// ticks while the primary keeps pace.
#[test]
fn strand_discipline_one_frame_per_tick() {
    struct MultiState {
        spawned: bool,
    }
    let order: Rc<RefCell<Vec<(&'static str, Time)>>> = Rc::new(RefCell::new(Vec::new()));
    let (mut sim, world) = build(0);
    {
        let order = order.clone();
        world
            .registry
            .register_command("multi", CMD_START, move |ctx, _| {
                order.borrow_mut().push(("primary", ctx.now().clone()));
                if !ctx.state::<MultiState>().spawned {
                    ctx.state_mut::<MultiState>().spawned = true;
                    ctx.spawn_subordinate(
                        [1, 2]
                            .map(|i| Frame::Command(Command::new("STEP", vec![Value::Int(i)])))
                            .into(),
                    )?;
                    ctx.spawn_subordinate(vec![Frame::Command(Command::new(
                        "STEP",
                        vec![Value::Int(3)],
                    ))])?;
                }
                ctx.process_continuation(vec![Command::nullary(CMD_START)])
            });
    }
    {
        let order = order.clone();
        world.registry.register_command("multi", "STEP", move |ctx, args| {
            let _ = ctx;
            order
                .borrow_mut()
                .push(("sub", Time::from_int(args[0].as_int().unwrap())));
            Ok(())
        });
    }
    world.registry.set_dispatch("multi", Vec::new());
    let handle = spawn_process(
        &mut sim,
        &world,
        SpawnSpec::new("multi", "m", MultiState { spawned: false }).courier(courier0(&world)),
    )
    .unwrap();
    sim.run(Some(canary_until(Time::from_int(2)))).unwrap();
    let recorded = order.borrow().clone();
    // Tick 0: primary, sub1 step1, sub2 step3. Tick 1: primary, sub1
    // step2. Tick 2: primary only.
    let subs: Vec<Time> = recorded
        .iter()
        .filter(|(who, _)| *who == "sub")
        .map(|(_, t)| t.clone())
        .collect();
    assert_eq!(subs, vec![Time::from_int(1), Time::from_int(3), Time::from_int(2)]);
    assert_eq!(handle.core.borrow().strand_count(), 1, "spent strands removed");
    let primaries = recorded.iter().filter(|(who, _)| *who == "primary").count();
    assert_eq!(primaries, 3);
}
