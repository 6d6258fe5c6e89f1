//! Distributed minimum-spanning-tree construction (Gallager–Humblet–Spira)
//! on the actor framework.
//!
//! Nodes are processes; problem-graph edges are identified by the
//! neighbor's public address, with weights stored symmetrically at both
//! endpoints. Fragments grow by absorbing lower-level fragments and by
//! merging with equal-level fragments across their shared minimum-weight
//! outgoing edge. Undecidable requests are deferred by re-sending the
//! message to the node's own address.
//!
//! The algorithm's correctness argument assumes messages on one edge are
//! *processed* in arrival order (a merging neighbor's connect must be
//! seen before the initiate it triggers), so the dispatch table is a
//! single family clause servicing the whole inbox strictly oldest-first,
//! exactly like the single FIFO queue of the classical presentation;
//! deferred messages re-enter at the back, which keeps service fair.
//!
//! The algorithm assumes distinct edge weights; the scenario constructor
//! enforces that, along with connectivity and at least two nodes.

use std::collections::BTreeMap;

use crate::actor::{
    spawn_process, Command, DispatchClause, ProcessCtx, ProcessHandle, SpawnSpec, CMD_START,
};
use crate::error::{SimError, SimResult};
use crate::instrument::{MessageReport, ReportConfig};
use crate::net::{Address, Message};
use crate::scenarios::graph::GraphSpec;
use crate::scenarios::{run_until, Completion, RunOptions};
use crate::sim::canary_until;
use crate::time::Time;
use crate::value::Value;
use crate::world::World;

pub const KIND_FRAGMENT_NODE: &str = "fragment-node";

pub const MSG_CONNECT: &str = "msg-connect";
pub const MSG_INITIATE: &str = "msg-initiate";
pub const MSG_TEST: &str = "msg-test";
pub const MSG_ACCEPT: &str = "msg-accept";
pub const MSG_REJECT: &str = "msg-reject";
pub const MSG_REPORT: &str = "msg-report";
pub const MSG_CHANGE_ROOT: &str = "msg-change-root";

/// Every message type the algorithm sends, for complexity accounting.
pub const GHS_MESSAGE_TYPES: [&str; 7] = [
    MSG_CONNECT,
    MSG_INITIATE,
    MSG_TEST,
    MSG_ACCEPT,
    MSG_REJECT,
    MSG_REPORT,
    MSG_CHANGE_ROOT,
];

const CMD_WAKEUP: &str = "WAKEUP";
const CMD_TEST: &str = "TEST";
const CMD_REPORT: &str = "REPORT";
const CMD_CHANGE_ROOT: &str = "CHANGE-ROOT";
const CMD_HALT: &str = "HALT";

/// Stands in for "no outgoing edge anywhere": above every real weight.
pub const INFINITE_WEIGHT: i64 = i64::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeState {
    Sleeping,
    Find,
    Found,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EdgeState {
    Basic,
    Branch,
    Rejected,
}

#[derive(Clone, Debug)]
pub struct EdgeInfo {
    pub state: EdgeState,
    pub weight: i64,
}

pub struct FragmentState {
    pub node_state: NodeState,
    /// Keyed by the neighbor's public address.
    pub adjacent: BTreeMap<Address, EdgeInfo>,
    pub fragment_level: i64,
    /// The fragment is named by a distinguishing edge weight.
    pub fragment_weight: i64,
    pub find_count: i64,
    pub best_edge: Option<Address>,
    pub best_weight: i64,
    pub test_edge: Option<Address>,
    pub in_branch: Option<Address>,
    pub halted: bool,
}

impl FragmentState {
    fn fresh() -> FragmentState {
        FragmentState {
            node_state: NodeState::Sleeping,
            adjacent: BTreeMap::new(),
            fragment_level: 0,
            fragment_weight: 0,
            find_count: 0,
            best_edge: None,
            best_weight: INFINITE_WEIGHT,
            test_edge: None,
            in_branch: None,
            halted: false,
        }
    }

    /// Minimum-weight adjacent edge, optionally restricted to one state.
    /// Weight distinctness makes the minimum unique.
    fn minimum_weight_edge(&self, desired: Option<EdgeState>) -> Option<Address> {
        self.adjacent
            .iter()
            .filter(|(_, info)| desired.map_or(true, |d| info.state == d))
            .min_by_key(|(_, info)| info.weight)
            .map(|(addr, _)| addr.clone())
    }
}

fn protocol_violation(msg: String) -> SimError {
    SimError::InvariantViolation(msg)
}

fn edge_info<'a>(state: &'a FragmentState, edge: &Address) -> SimResult<&'a EdgeInfo> {
    state
        .adjacent
        .get(edge)
        .ok_or_else(|| protocol_violation(format!("message on unknown edge {edge}")))
}

/// Edge states move only BASIC→BRANCH or BASIC→REJECTED.
fn set_edge_state(state: &mut FragmentState, edge: &Address, to: EdgeState) -> SimResult<()> {
    let info = state
        .adjacent
        .get_mut(edge)
        .ok_or_else(|| protocol_violation(format!("unknown edge {edge}")))?;
    let legal = info.state == to || info.state == EdgeState::Basic;
    if !legal {
        return Err(protocol_violation(format!(
            "illegal edge transition {:?} -> {:?} on {edge}",
            info.state, to
        )));
    }
    info.state = to;
    Ok(())
}

/// Fragment levels never decrease at a node.
fn set_fragment_level(state: &mut FragmentState, level: i64) -> SimResult<()> {
    if level < state.fragment_level {
        return Err(protocol_violation(format!(
            "fragment level would drop {} -> {}",
            state.fragment_level, level
        )));
    }
    state.fragment_level = level;
    Ok(())
}

// -- message packing ---------------------------------------------------------

fn node_state_tag(s: NodeState) -> &'static str {
    match s {
        NodeState::Sleeping => "SLEEPING",
        NodeState::Find => "FIND",
        NodeState::Found => "FOUND",
    }
}

fn parse_node_state(v: &Value) -> SimResult<NodeState> {
    match v.as_str() {
        Some("SLEEPING") => Ok(NodeState::Sleeping),
        Some("FIND") => Ok(NodeState::Find),
        Some("FOUND") => Ok(NodeState::Found),
        _ => Err(protocol_violation(format!("bad node state payload {v}"))),
    }
}

fn msg_connect(sender: Address, level: i64) -> Message {
    Message::new(
        MSG_CONNECT,
        Value::List(vec![Value::Address(sender), Value::Int(level)]),
    )
}

fn msg_initiate(sender: Address, level: i64, weight: i64, state: NodeState) -> Message {
    Message::new(
        MSG_INITIATE,
        Value::List(vec![
            Value::Address(sender),
            Value::Int(level),
            Value::Int(weight),
            Value::Str(node_state_tag(state).to_owned()),
        ]),
    )
}

fn msg_test(sender: Address, level: i64, weight: i64) -> Message {
    Message::new(
        MSG_TEST,
        Value::List(vec![
            Value::Address(sender),
            Value::Int(level),
            Value::Int(weight),
        ]),
    )
}

fn msg_edge_only(message_type: &'static str, sender: Address) -> Message {
    Message::new(message_type, Value::Address(sender))
}

fn msg_report(sender: Address, weight: i64) -> Message {
    Message::new(
        MSG_REPORT,
        Value::List(vec![Value::Address(sender), Value::Int(weight)]),
    )
}

fn unpack_list<'a>(message: &'a Message, arity: usize) -> SimResult<&'a [Value]> {
    let items = message
        .payload
        .as_list()
        .ok_or_else(|| protocol_violation(format!("{} payload must be a list", message.message_type())))?;
    if items.len() != arity {
        return Err(protocol_violation(format!(
            "{} payload arity {} != {arity}",
            message.message_type(),
            items.len()
        )));
    }
    Ok(items)
}

fn unpack_edge(v: &Value) -> SimResult<Address> {
    v.as_address()
        .cloned()
        .ok_or_else(|| protocol_violation(format!("expected an edge address, got {v}")))
}

fn unpack_int(v: &Value) -> SimResult<i64> {
    v.as_int()
        .ok_or_else(|| protocol_violation(format!("expected an integer, got {v}")))
}

/// Defer an undecidable request by re-sending it to our own address; it
/// re-enters the public inbox after one delivery round.
fn defer(ctx: &ProcessCtx, message: Message) -> SimResult<()> {
    ctx.send_message(&ctx.public_address(), message)
}

// -- command and handler bodies ----------------------------------------------

/// Register the fragment-node kind.
pub fn install_fragment_node(world: &World) {
    let kind = KIND_FRAGMENT_NODE;
    let registry = &world.registry;

    // Response to spontaneous awakening: loop, and wake once while asleep.
    registry.register_command(kind, CMD_START, |ctx, _| {
        ctx.process_continuation(vec![Command::nullary(CMD_START)])?;
        if ctx.state::<FragmentState>().node_state == NodeState::Sleeping {
            ctx.process_continuation(vec![Command::nullary(CMD_WAKEUP)])?;
        }
        Ok(())
    });

    // Procedure WAKEUP: adopt the minimum-weight edge as a branch and try
    // to connect over it at level zero.
    registry.register_command(kind, CMD_WAKEUP, |ctx, _| {
        if ctx.state::<FragmentState>().node_state != NodeState::Sleeping {
            return Ok(());
        }
        let me = ctx.public_address();
        let minimum = ctx
            .state::<FragmentState>()
            .minimum_weight_edge(None)
            .ok_or_else(|| protocol_violation("woke with no adjacent edges".into()))?;
        {
            let state = ctx.state_mut::<FragmentState>();
            set_edge_state(state, &minimum, EdgeState::Branch)?;
            state.find_count = 0;
            state.fragment_level = 0;
            state.node_state = NodeState::Found;
        }
        ctx.send_message(&minimum, msg_connect(me, 0))
    });

    // Response to receipt of Connect(L) on edge j.
    registry.register_handler("ghs-handle-connect", kind, MSG_CONNECT, |ctx, message| {
        let items = unpack_list(&message, 2)?;
        let edge = unpack_edge(&items[0])?;
        let level = unpack_int(&items[1])?;
        let me = ctx.public_address();
        let (fragment_level, fragment_weight, node_state) = {
            let s = ctx.state::<FragmentState>();
            (s.fragment_level, s.fragment_weight, s.node_state)
        };
        let edge_state = edge_info(ctx.state::<FragmentState>(), &edge)?.state;
        let edge_weight = edge_info(ctx.state::<FragmentState>(), &edge)?.weight;
        if level < fragment_level {
            // Absorb the lower-level fragment.
            set_edge_state(ctx.state_mut::<FragmentState>(), &edge, EdgeState::Branch)?;
            ctx.send_message(
                &edge,
                msg_initiate(me, fragment_level, fragment_weight, node_state),
            )?;
            if node_state == NodeState::Find {
                ctx.state_mut::<FragmentState>().find_count += 1;
            }
            Ok(())
        } else if edge_state == EdgeState::Basic {
            // Undecidable until our own fragment catches up.
            defer(ctx, message)
        } else {
            // Equal-level merge across the shared minimum edge: the new
            // fragment is named by that edge's weight.
            ctx.send_message(
                &edge,
                msg_initiate(me, fragment_level + 1, edge_weight, NodeState::Find),
            )
        }
    });

    // Response to receipt of Initiate(L, F, S) on edge j.
    registry.register_handler("ghs-handle-initiate", kind, MSG_INITIATE, |ctx, message| {
        let items = unpack_list(&message, 4)?;
        let edge = unpack_edge(&items[0])?;
        let level = unpack_int(&items[1])?;
        let weight = unpack_int(&items[2])?;
        let state = parse_node_state(&items[3])?;
        let me = ctx.public_address();

        let branch_fanout: Vec<Address> = {
            let s = ctx.state_mut::<FragmentState>();
            s.best_edge = None;
            s.best_weight = INFINITE_WEIGHT;
            set_fragment_level(s, level)?;
            s.fragment_weight = weight;
            s.in_branch = Some(edge.clone());
            s.node_state = state;
            s.adjacent
                .iter()
                .filter(|(addr, info)| info.state == EdgeState::Branch && **addr != edge)
                .map(|(addr, _)| addr.clone())
                .collect()
        };
        ctx.send_message_batch(
            &mut || msg_initiate(me.clone(), level, weight, state),
            &branch_fanout,
        )?;
        if state == NodeState::Find {
            ctx.state_mut::<FragmentState>().find_count += branch_fanout.len() as i64;
            ctx.process_continuation(vec![Command::nullary(CMD_TEST)])?;
        }
        Ok(())
    });

    // Procedure TEST: probe the minimum-weight basic edge, or go straight
    // to reporting when none is left.
    registry.register_command(kind, CMD_TEST, |ctx, _| {
        let minimum = ctx
            .state::<FragmentState>()
            .minimum_weight_edge(Some(EdgeState::Basic));
        ctx.state_mut::<FragmentState>().test_edge = minimum.clone();
        match minimum {
            Some(edge) => {
                let me = ctx.public_address();
                let (level, weight) = {
                    let s = ctx.state::<FragmentState>();
                    (s.fragment_level, s.fragment_weight)
                };
                ctx.send_message(&edge, msg_test(me, level, weight))
            }
            None => ctx.process_continuation(vec![Command::nullary(CMD_REPORT)]),
        }
    });

    // Response to receipt of Test(L, F) on edge j.
    registry.register_handler("ghs-handle-test", kind, MSG_TEST, |ctx, message| {
        let items = unpack_list(&message, 3)?;
        let edge = unpack_edge(&items[0])?;
        let level = unpack_int(&items[1])?;
        let weight = unpack_int(&items[2])?;
        let me = ctx.public_address();
        let (fragment_level, fragment_weight, test_edge) = {
            let s = ctx.state::<FragmentState>();
            (s.fragment_level, s.fragment_weight, s.test_edge.clone())
        };
        if level > fragment_level {
            // Their fragment is ahead of us; answer once we catch up.
            defer(ctx, message)
        } else if weight != fragment_weight {
            ctx.send_message(&edge, msg_edge_only(MSG_ACCEPT, me))
        } else {
            // Same fragment: this edge can never be outgoing.
            if edge_info(ctx.state::<FragmentState>(), &edge)?.state == EdgeState::Basic {
                set_edge_state(ctx.state_mut::<FragmentState>(), &edge, EdgeState::Rejected)?;
            }
            if test_edge.as_ref() != Some(&edge) {
                ctx.send_message(&edge, msg_edge_only(MSG_REJECT, me))
            } else {
                // We were probing the same edge; move to the next one.
                ctx.process_continuation(vec![Command::nullary(CMD_TEST)])
            }
        }
    });

    // Response to receipt of Accept on edge j.
    registry.register_handler("ghs-handle-accept", kind, MSG_ACCEPT, |ctx, message| {
        let edge = unpack_edge(&message.payload)?;
        let edge_weight = edge_info(ctx.state::<FragmentState>(), &edge)?.weight;
        {
            let s = ctx.state_mut::<FragmentState>();
            s.test_edge = None;
            if edge_weight < s.best_weight {
                s.best_edge = Some(edge);
                s.best_weight = edge_weight;
            }
        }
        ctx.process_continuation(vec![Command::nullary(CMD_REPORT)])
    });

    // Response to receipt of Reject on edge j.
    registry.register_handler("ghs-handle-reject", kind, MSG_REJECT, |ctx, message| {
        let edge = unpack_edge(&message.payload)?;
        if edge_info(ctx.state::<FragmentState>(), &edge)?.state == EdgeState::Basic {
            set_edge_state(ctx.state_mut::<FragmentState>(), &edge, EdgeState::Rejected)?;
        }
        ctx.process_continuation(vec![Command::nullary(CMD_TEST)])
    });

    // Procedure REPORT: once the subtree and our own probe are resolved,
    // report the best outgoing weight toward the core. REPORT frames are
    // queued from several sites and re-checked at pop time, so the send
    // additionally requires the search to still be open (FIND): the first
    // successful send flips the node to FOUND, which disarms any stale
    // frames that pop later.
    registry.register_command(kind, CMD_REPORT, |ctx, _| {
        let ready = {
            let s = ctx.state::<FragmentState>();
            s.node_state == NodeState::Find && s.find_count == 0 && s.test_edge.is_none()
        };
        if !ready {
            return Ok(());
        }
        let me = ctx.public_address();
        let (in_branch, best_weight) = {
            let s = ctx.state_mut::<FragmentState>();
            s.node_state = NodeState::Found;
            (s.in_branch.clone(), s.best_weight)
        };
        let in_branch =
            in_branch.ok_or_else(|| protocol_violation("REPORT with no in-branch".into()))?;
        ctx.send_message(&in_branch, msg_report(me, best_weight))
    });

    // Response to receipt of Report(w) on edge j.
    registry.register_handler("ghs-handle-report", kind, MSG_REPORT, |ctx, message| {
        let items = unpack_list(&message, 2)?;
        let edge = unpack_edge(&items[0])?;
        let weight = unpack_int(&items[1])?;
        let (in_branch, node_state, best_weight) = {
            let s = ctx.state::<FragmentState>();
            (s.in_branch.clone(), s.node_state, s.best_weight)
        };
        if in_branch.as_ref() != Some(&edge) {
            // A child reports from the subtree.
            {
                let s = ctx.state_mut::<FragmentState>();
                s.find_count -= 1;
                if weight < s.best_weight {
                    s.best_weight = weight;
                    s.best_edge = Some(edge);
                }
            }
            ctx.process_continuation(vec![Command::nullary(CMD_REPORT)])
        } else if node_state == NodeState::Find {
            // The core report arrived while our own search is unfinished.
            defer(ctx, message)
        } else if weight > best_weight {
            ctx.process_continuation(vec![Command::nullary(CMD_CHANGE_ROOT)])
        } else if weight == best_weight && weight == INFINITE_WEIGHT {
            // Neither side of the core found an outgoing edge: done.
            ctx.process_continuation(vec![Command::nullary(CMD_HALT)])
        } else {
            Ok(())
        }
    });

    // Procedure CHANGE-ROOT: pass rootward along branches until the node
    // adjacent to the fragment's best edge connects over it.
    registry.register_command(kind, CMD_CHANGE_ROOT, |ctx, _| {
        let me = ctx.public_address();
        let best = ctx
            .state::<FragmentState>()
            .best_edge
            .clone()
            .ok_or_else(|| protocol_violation("CHANGE-ROOT with no best edge".into()))?;
        let (best_state, fragment_level) = {
            let s = ctx.state::<FragmentState>();
            (edge_info(s, &best)?.state, s.fragment_level)
        };
        if best_state == EdgeState::Branch {
            ctx.send_message(&best, msg_edge_only(MSG_CHANGE_ROOT, me))
        } else {
            ctx.send_message(&best, msg_connect(me, fragment_level))?;
            set_edge_state(ctx.state_mut::<FragmentState>(), &best, EdgeState::Branch)
        }
    });

    // Response to receipt of Change-root.
    registry.register_handler(
        "ghs-handle-change-root",
        kind,
        MSG_CHANGE_ROOT,
        |ctx, _message| ctx.process_continuation(vec![Command::nullary(CMD_CHANGE_ROOT)]),
    );

    registry.register_command(kind, CMD_HALT, |ctx, _| {
        ctx.state_mut::<FragmentState>().halted = true;
        ctx.process_die()
    });

    // The family clause drains the inbox strictly oldest-first across all
    // seven types; see the module docs for why arrival order matters.
    registry.register_handler("ghs-dispatch", kind, "msg-*", |ctx, message| {
        let id = match message.message_type() {
            MSG_CONNECT => "ghs-handle-connect",
            MSG_INITIATE => "ghs-handle-initiate",
            MSG_TEST => "ghs-handle-test",
            MSG_ACCEPT => "ghs-handle-accept",
            MSG_REJECT => "ghs-handle-reject",
            MSG_REPORT => "ghs-handle-report",
            MSG_CHANGE_ROOT => "ghs-handle-change-root",
            other => {
                return Err(protocol_violation(format!(
                    "unexpected message type {other} at a fragment node"
                )))
            }
        };
        let handler = ctx.world().registry.handler(id)?;
        handler(ctx, message)
    });
    registry.set_dispatch(kind, vec![DispatchClause::new("msg-*", "ghs-dispatch")]);
}

// -- scenario driver -----------------------------------------------------------

#[derive(Debug)]
pub struct GhsOutcome {
    /// Edges both endpoints marked BRANCH at halt, as `(u, v)` node
    /// indices with `u < v`.
    pub branch_edges: Vec<(usize, usize)>,
    /// Per-type counts of the algorithm's messages.
    pub report: MessageReport,
    /// Total messages across the algorithm's own types.
    pub app_messages: u64,
    /// The `5·N·log₂N + 2·E` complexity bound for this instance.
    pub bound: f64,
    /// Nodes that executed HALT.
    pub halted_nodes: usize,
    pub completion: Completion,
}

impl GhsOutcome {
    /// The bound as reported, rounded down to a whole message count.
    pub fn bound_floor(&self) -> u64 {
        self.bound.floor() as u64
    }

    pub fn within_bound(&self) -> bool {
        (self.app_messages as f64) <= self.bound
    }
}

/// The classical worst-case message bound for an `n`-node, `e`-edge run.
pub fn message_bound(n: usize, e: usize) -> f64 {
    5.0 * (n as f64) * (n as f64).log2() + 2.0 * (e as f64)
}

/// Run the algorithm on `graph` until the core detects completion and the
/// network drains. All nodes share one courier and wake spontaneously on
/// their first tick.
pub fn run_ghs(options: &RunOptions, graph: &GraphSpec) -> SimResult<(GhsOutcome, World)> {
    graph.validate()?;
    let (mut sim, world) = World::build(options.seed, &options.topology, options.instrumented)?;
    sim.record_transcript(options.record_transcript);
    install_fragment_node(&world);

    // Fragment nodes drain their whole inbox each tick (an unbounded
    // message budget): a deferred request parks for one delivery round
    // rather than one service round, which keeps the re-send traffic well
    // under the classical message bound.
    let couriers = world.net.courier_ids();
    let handles: Vec<ProcessHandle> = (0..graph.nodes)
        .map(|i| {
            spawn_process(
                &mut sim,
                &world,
                SpawnSpec::new(KIND_FRAGMENT_NODE, format!("node-{i}"), FragmentState::fresh())
                    .courier(couriers[i % couriers.len()])
                    .message_budget(usize::MAX),
            )
        })
        .collect::<SimResult<_>>()?;

    // Wire the weighted adjacency symmetrically, keyed by peer addresses.
    for &(u, v, w) in &graph.edges {
        let (au, av) = (handles[u].address.clone(), handles[v].address.clone());
        handles[u]
            .core
            .borrow_mut()
            .state_mut::<FragmentState>()
            .adjacent
            .insert(av, EdgeInfo { state: EdgeState::Basic, weight: w });
        handles[v]
            .core
            .borrow_mut()
            .state_mut::<FragmentState>()
            .adjacent
            .insert(au, EdgeInfo { state: EdgeState::Basic, weight: w });
    }

    let deadline = options.canary.clone().unwrap_or_else(|| {
        Time::from_int(400 + 60 * graph.nodes as i64 + 8 * graph.edge_count() as i64)
    });
    let completion = run_until(&mut sim, &world, deadline, Time::from_int(20), |world| {
        world.net.quiescent() && handles.iter().any(|h| !h.core.borrow().is_alive())
    })?;
    // Let the second core endpoint's pending HALT (if any) pop.
    let settle = sim.horizon().clone() + Time::from_int(3);
    sim.run(Some(canary_until(settle)))?;

    let mut branch_edges = Vec::new();
    for &(u, v, _) in &graph.edges {
        let state_u = handles[u].core.borrow();
        let state_v = handles[v].core.borrow();
        let su = state_u.state::<FragmentState>().adjacent[&handles[v].address].state;
        let sv = state_v.state::<FragmentState>().adjacent[&handles[u].address].state;
        let bu = su == EdgeState::Branch;
        let bv = sv == EdgeState::Branch;
        if completion.is_done() && bu != bv {
            return Err(protocol_violation(format!(
                "edge ({u},{v}) asymmetric at halt: {su:?} vs {sv:?}"
            )));
        }
        if bu && bv {
            branch_edges.push((u.min(v), u.max(v)));
        }
    }
    branch_edges.sort_unstable();

    let report = MessageReport::from_log(&world.logger, &ReportConfig::default());
    let app_messages = report.total_for(&GHS_MESSAGE_TYPES);
    let halted_nodes = handles
        .iter()
        .filter(|h| h.core.borrow().state::<FragmentState>().halted)
        .count();

    Ok((
        GhsOutcome {
            branch_edges,
            report,
            app_messages,
            bound: message_bound(graph.nodes, graph.edge_count()),
            halted_nodes,
            completion,
        },
        world,
    ))
}
