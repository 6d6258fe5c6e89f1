//! Batch scenario runner: configure topology, scenario, and seed; run to
//! a canary; emit result summaries, message reports, and JSON-lines logs.
//!
//! Exit status: 0 on success, 1 when the run fails or the canary expires
//! before the scenario terminates, 2 on configuration errors.

mod config;

use std::fs;
use std::process::ExitCode;

use clap::Parser;

use config::{Scenario, ScenarioConfig};
use relaysim::instrument::{report_render, MessageReport, ReportConfig};
use relaysim::net::TopologySpec;
use relaysim::scenarios::coloring::run_coloring;
use relaysim::scenarios::cpu::run_factorial;
use relaysim::scenarios::delay;
use relaysim::scenarios::ghs::{run_ghs, GhsOutcome};
use relaysim::scenarios::graph::random_connected_graph;
use relaysim::scenarios::writers::{contiguous_per_writer, run_writers_reader};
use relaysim::scenarios::RunOptions;
use relaysim::sim::RngHandle;
use relaysim::Time;

#[derive(Parser, Debug)]
#[command(
    name = "relaysim",
    about = "Deterministic emulation of distributed algorithms over configurable hardware",
    version
)]
struct Cli {
    /// Scenario to run: ghs-mst, coloring, writers-reader, factorial, or
    /// fig1-delay.
    #[arg(long)]
    scenario: Option<Scenario>,

    /// Courier layout: `all-to-all` or `grid` (see --grid).
    #[arg(long)]
    topology: Option<String>,

    /// Grid dimensions as WxH; implies --topology grid.
    #[arg(long, value_name = "WxH")]
    grid: Option<String>,

    /// Courier count for all-to-all topologies.
    #[arg(long)]
    couriers: Option<usize>,

    /// Node / process count for the scenario.
    #[arg(long)]
    nodes: Option<usize>,

    /// Edge count for generated graphs.
    #[arg(long)]
    edges: Option<usize>,

    /// Writer count for writers-reader.
    #[arg(long)]
    writers: Option<usize>,

    /// Payload parts per writer for writers-reader.
    #[arg(long)]
    payload: Option<usize>,

    /// RNG seed; a seed plus a config fully determines the run.
    #[arg(long)]
    seed: Option<u64>,

    /// Stop condition as an exact time (`20` or `5/2`).
    #[arg(long)]
    canary: Option<String>,

    /// Write the JSON-lines log here.
    #[arg(long, value_name = "PATH")]
    log_out: Option<String>,

    /// Write the rendered message report here.
    #[arg(long, value_name = "PATH")]
    report_out: Option<String>,

    /// Flat key=value config file; flags override its entries.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("config error: {message}");
            return ExitCode::from(2);
        }
    };
    match execute(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ relaysim::SimError::ScenarioConstruction(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config `{path}`: {e}"))?;
            ScenarioConfig::parse(&text)?
        }
        None => ScenarioConfig::default(),
    };

    if let Some(scenario) = cli.scenario {
        config.scenario = scenario;
    }
    match (&cli.topology, &cli.grid) {
        (_, Some(dims)) => {
            let (w, h) = dims
                .split_once('x')
                .ok_or_else(|| format!("bad grid dimensions `{dims}`"))?;
            let width: usize = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
            let height: usize = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
            if width == 0 || height == 0 {
                return Err("grid dimensions must be positive".to_owned());
            }
            config.topology = TopologySpec::grid(width, height);
        }
        (Some(kind), None) => match kind.as_str() {
            "all-to-all" => {
                config.topology = TopologySpec::all_to_all(cli.couriers.unwrap_or(1));
            }
            "grid" => return Err("grid topology needs --grid WxH".to_owned()),
            other => return Err(format!("unknown topology `{other}`")),
        },
        (None, None) => {
            if let Some(n) = cli.couriers {
                if let relaysim::net::TopologyKind::AllToAll { .. } = config.topology.kind {
                    config.topology.kind = relaysim::net::TopologyKind::AllToAll { couriers: n };
                }
            }
        }
    }
    if let Some(n) = cli.nodes {
        config.nodes = n;
    }
    if let Some(e) = cli.edges {
        config.edges = Some(e);
    }
    if let Some(w) = cli.writers {
        config.writers = w;
    }
    if let Some(p) = cli.payload {
        config.payload = p;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(c) = &cli.canary {
        config.canary = Some(c.parse::<Time>()?);
    }
    if let Some(p) = &cli.log_out {
        config.log_out = Some(p.clone());
    }
    if let Some(p) = &cli.report_out {
        config.report_out = Some(p.clone());
    }
    Ok(config)
}

fn options_from(config: &ScenarioConfig) -> RunOptions {
    let mut options = RunOptions::seeded(config.seed).on_topology(config.topology.clone());
    if let Some(canary) = &config.canary {
        options = options.with_canary(canary.clone());
    }
    options
}

/// Returns Ok(true) when the scenario terminated inside its canary.
fn execute(config: &ScenarioConfig) -> Result<bool, relaysim::SimError> {
    let options = options_from(config);
    match config.scenario {
        Scenario::Fig1Delay => {
            let (outcome, logger) = delay::run(&options)?;
            print!("{}", outcome.transcript());
            finish(config, &logger, true)
        }
        Scenario::Coloring => {
            let (outcome, world) = run_coloring(&options, config.nodes)?;
            let done = outcome.completion.is_done();
            println!(
                "coloring of {} nodes at t={}: {}",
                config.nodes,
                outcome.completion.time(),
                if done { "terminated" } else { "canary expired" }
            );
            println!(
                "colors: {}",
                outcome
                    .colors
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            if done && !outcome.is_proper() {
                return Err(relaysim::SimError::InvariantViolation(
                    "adjacent nodes share a color".into(),
                ));
            }
            println!("proper: {}", outcome.is_proper());
            finish(config, &world.logger, done)
        }
        Scenario::WritersReader => {
            let (outcome, world) =
                run_writers_reader(&options, config.writers, config.payload)?;
            let done = outcome.completion.is_done();
            let received = outcome.received_ints();
            println!(
                "writers-reader W={} k={} at t={}: {}",
                config.writers,
                config.payload,
                outcome.completion.time(),
                if done { "terminated" } else { "canary expired" }
            );
            println!(
                "received: {}",
                received
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            let contiguous = contiguous_per_writer(&received, config.writers, config.payload);
            if done && !contiguous {
                return Err(relaysim::SimError::InvariantViolation(
                    "payloads interleaved across writers".into(),
                ));
            }
            println!("contiguous per writer: {contiguous}");
            finish(config, &world.logger, done)
        }
        Scenario::Factorial => {
            let max_n = config.nodes.min(20) as i64;
            let requests: Vec<i64> = (0..=max_n).collect();
            let (outcome, world) = run_factorial(&options, &requests)?;
            let done = outcome.completion.is_done();
            for (n, result) in &outcome.results {
                println!("{n}! = {result}");
            }
            println!("server stack depth after serving: {}", outcome.server_stack_depth);
            finish(config, &world.logger, done)
        }
        Scenario::GhsMst => {
            let rng = RngHandle::new(config.seed);
            let edges = config.edges.unwrap_or(config.nodes.saturating_mul(2));
            let graph = random_connected_graph(config.nodes, edges, &rng)?;
            let (outcome, world) = run_ghs(&options, &graph)?;
            let done = outcome.completion.is_done();
            print_ghs(&graph, &outcome);
            if done && !outcome.within_bound() {
                return Err(relaysim::SimError::InvariantViolation(format!(
                    "message total {} exceeds the bound {}",
                    outcome.app_messages,
                    outcome.bound_floor()
                )));
            }
            finish(config, &world.logger, done)
        }
    }
}

fn print_ghs(graph: &relaysim::scenarios::graph::GraphSpec, outcome: &GhsOutcome) {
    println!(
        "spanning tree over {} nodes / {} edges (seeded weights 1..={}):",
        graph.nodes,
        graph.edge_count(),
        graph.edge_count()
    );
    let weight_of = |u: usize, v: usize| {
        graph
            .edges
            .iter()
            .find(|(a, b, _)| (*a, *b) == (u, v))
            .map(|(_, _, w)| *w)
            .unwrap_or(0)
    };
    let mut total = 0;
    for (u, v) in &outcome.branch_edges {
        let w = weight_of(*u, *v);
        total += w;
        println!("  {u} -- {v}  (weight {w})");
    }
    println!("tree weight: {total}");
    println!(
        "messages: {} (bound {})",
        outcome.app_messages,
        outcome.bound_floor()
    );
}

/// Render the report, write artifacts, and fold in the liveness verdict.
fn finish(
    config: &ScenarioConfig,
    logger: &relaysim::instrument::Logger,
    done: bool,
) -> Result<bool, relaysim::SimError> {
    let report = MessageReport::from_log(logger, &ReportConfig::default());
    let rendered = report_render(&report);
    if config.scenario != Scenario::Fig1Delay {
        print!("{rendered}");
    }
    if let Some(path) = &config.report_out {
        fs::write(path, &rendered).map_err(|e| {
            relaysim::SimError::ScenarioConstruction(format!("cannot write `{path}`: {e}"))
        })?;
    }
    if let Some(path) = &config.log_out {
        fs::write(path, logger.export_jsonl()).map_err(|e| {
            relaysim::SimError::ScenarioConstruction(format!("cannot write `{path}`: {e}"))
        })?;
    }
    if !done {
        eprintln!("canary expired before the scenario terminated");
    }
    Ok(done)
}
