//! Spanning-tree scenario against the Kruskal oracle, plus message-bound
//! and state-monotonicity checks over randomized graphs.

mod common;

use relaysim::scenarios::ghs::{run_ghs, GHS_MESSAGE_TYPES};
use relaysim::scenarios::graph::random_connected_graph;
use relaysim::scenarios::RunOptions;
use relaysim::sim::RngHandle;

#[test]
fn matches_kruskal_on_random_graphs() {
    let trials: u64 = std::env::var("GHS_TRIALS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(60);
    let rng = RngHandle::new(0xD15C);
    let mut slack = f64::INFINITY;
    for trial in 0..trials {
        let n = 2 + (rng.int_below(31) as usize);
        let extra = rng.int_below(1 + (n as u64)) as usize;
        let graph = random_connected_graph(n, n - 1 + extra, &rng).unwrap();
        let (outcome, _) = run_ghs(&RunOptions::seeded(1000 + trial), &graph).unwrap();

        assert!(
            outcome.completion.is_done(),
            "trial {trial}: timed out on n={n} e={}",
            graph.edge_count()
        );
        let oracle = common::kruskal_mst(graph.nodes, &graph.edges);
        assert_eq!(
            outcome.branch_edges, oracle,
            "trial {trial}: tree mismatch on n={n} e={}",
            graph.edge_count()
        );
        assert!(
            outcome.within_bound(),
            "trial {trial}: {} messages exceeds bound {}",
            outcome.app_messages,
            outcome.bound
        );
        // Exactly the two core endpoints observe the final infinite report.
        assert_eq!(outcome.halted_nodes, 2, "trial {trial}");
        slack = slack.min(outcome.bound - outcome.app_messages as f64);
    }
    eprintln!("minimum bound slack over {trials} trials: {slack:.1} messages");
}

#[test]
fn report_counts_cover_only_algorithm_types() {
    let rng = RngHandle::new(77);
    let graph = random_connected_graph(10, 17, &rng).unwrap();
    let (outcome, _) = run_ghs(&RunOptions::seeded(4), &graph).unwrap();
    assert!(outcome.completion.is_done());
    for t in outcome.report.counts.keys() {
        assert!(
            GHS_MESSAGE_TYPES.contains(&t.as_str()),
            "unexpected type {t}"
        );
    }
    assert_eq!(
        outcome.report.total,
        outcome.app_messages,
        "all counted messages belong to the algorithm"
    );
    assert_eq!(outcome.bound_floor(), 200);
}
