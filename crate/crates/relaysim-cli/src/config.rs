//! Scenario configuration: a flat key=value file merged with command-line
//! flag overrides (flags win). A config fully determines a run.

use std::fmt;
use std::str::FromStr;

use relaysim::net::TopologySpec;
use relaysim::Time;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scenario {
    GhsMst,
    Coloring,
    WritersReader,
    Factorial,
    Fig1Delay,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::GhsMst => "ghs-mst",
            Scenario::Coloring => "coloring",
            Scenario::WritersReader => "writers-reader",
            Scenario::Factorial => "factorial",
            Scenario::Fig1Delay => "fig1-delay",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Scenario, String> {
        match s {
            "ghs-mst" => Ok(Scenario::GhsMst),
            "coloring" => Ok(Scenario::Coloring),
            "writers-reader" => Ok(Scenario::WritersReader),
            "factorial" => Ok(Scenario::Factorial),
            "fig1-delay" => Ok(Scenario::Fig1Delay),
            other => Err(format!(
                "unknown scenario `{other}` (expected ghs-mst, coloring, writers-reader, factorial, or fig1-delay)"
            )),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that determines one run.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub topology: TopologySpec,
    pub nodes: usize,
    pub edges: Option<usize>,
    pub writers: usize,
    pub payload: usize,
    pub seed: u64,
    pub canary: Option<Time>,
    pub log_out: Option<String>,
    pub report_out: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Fig1Delay,
            topology: TopologySpec::all_to_all(1),
            nodes: 10,
            edges: None,
            writers: 2,
            payload: 3,
            seed: 0,
            canary: None,
            log_out: None,
            report_out: None,
        }
    }
}

impl ScenarioConfig {
    /// Parse a flat key=value file. Topology keys (`topology`, `couriers`,
    /// `courier.<id>.*`) share the network layer's plain-text format.
    pub fn parse(text: &str) -> Result<ScenarioConfig, String> {
        let mut config = ScenarioConfig::default();
        let mut topology_lines = String::new();
        let mut saw_topology = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("line {}: bad {what} `{value}`", lineno + 1);
            match key {
                "scenario" => config.scenario = value.parse()?,
                "topology" | "couriers" => {
                    saw_topology = true;
                    topology_lines.push_str(line);
                    topology_lines.push('\n');
                }
                k if k.starts_with("courier.") => {
                    topology_lines.push_str(line);
                    topology_lines.push('\n');
                }
                "nodes" => config.nodes = value.parse().map_err(|_| bad("node count"))?,
                "edges" => config.edges = Some(value.parse().map_err(|_| bad("edge count"))?),
                "writers" => config.writers = value.parse().map_err(|_| bad("writer count"))?,
                "payload" => config.payload = value.parse().map_err(|_| bad("payload length"))?,
                "seed" => config.seed = value.parse().map_err(|_| bad("seed"))?,
                "canary" => {
                    config.canary = Some(Time::from_str(value).map_err(|_| bad("canary time"))?)
                }
                "log-out" => config.log_out = Some(value.to_owned()),
                "report-out" => config.report_out = Some(value.to_owned()),
                other => return Err(format!("line {}: unknown key `{other}`", lineno + 1)),
            }
        }

        if saw_topology || !topology_lines.is_empty() {
            if !saw_topology {
                // Overrides without a topology line apply to the default.
                topology_lines.insert_str(0, "topology=all-to-all\n");
            }
            config.topology = TopologySpec::parse(&topology_lines)?;
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use relaysim::net::TopologyKind;

    #[test]
    fn parses_a_full_config() {
        let config = ScenarioConfig::parse(
            "# run description\n\
             scenario=ghs-mst\n\
             topology=all-to-all\n\
             couriers=2\n\
             courier.1.bandwidth=4\n\
             nodes=10\n\
             edges=17\n\
             seed=99\n\
             canary=5/2\n\
             log-out=run.jsonl\n",
        )
        .unwrap();
        assert_eq!(config.scenario, Scenario::GhsMst);
        assert_eq!(config.topology.kind, TopologyKind::AllToAll { couriers: 2 });
        assert_eq!(config.topology.overrides.len(), 1);
        assert_eq!(config.nodes, 10);
        assert_eq!(config.edges, Some(17));
        assert_eq!(config.seed, 99);
        assert_eq!(config.canary, Some(Time::ratio(5, 2)));
        assert_eq!(config.log_out.as_deref(), Some("run.jsonl"));
        assert_eq!(config.report_out, None);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(ScenarioConfig::parse("scenario=sorting\n").is_err());
        assert!(ScenarioConfig::parse("wat=1\n").is_err());
        assert!(ScenarioConfig::parse("nodes=ten\n").is_err());
        assert!(ScenarioConfig::parse("topology=grid axb\n").is_err());
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let config = ScenarioConfig::parse("scenario=coloring\n").unwrap();
        assert_eq!(config.nodes, 10);
        assert_eq!(config.seed, 0);
        assert!(config.canary.is_none());
    }
}
