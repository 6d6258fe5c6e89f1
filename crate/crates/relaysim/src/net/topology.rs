//! Network shapes, their neighbor relations, and procedurally generated
//! routing.

use std::str::FromStr;

use super::CourierId;
use crate::time::Rate;

/// The two built-in network shapes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TopologyKind {
    /// Every courier is one hop away from every other.
    AllToAll { couriers: usize },
    /// Couriers at integer coordinates; direct communication only between
    /// 4-adjacent nearest neighbors.
    Grid { width: usize, height: usize },
}

impl TopologyKind {
    pub fn courier_ids(&self) -> Vec<CourierId> {
        match self {
            TopologyKind::AllToAll { couriers } => {
                (0..*couriers as u64).map(CourierId::Node).collect()
            }
            TopologyKind::Grid { width, height } => {
                let mut ids = Vec::with_capacity(width * height);
                for y in 0..*height as i64 {
                    for x in 0..*width as i64 {
                        ids.push(CourierId::Grid { x, y });
                    }
                }
                ids
            }
        }
    }

    pub fn contains(&self, id: CourierId) -> bool {
        match (self, id) {
            (TopologyKind::AllToAll { couriers }, CourierId::Node(n)) => n < *couriers as u64,
            (TopologyKind::Grid { width, height }, CourierId::Grid { x, y }) => {
                x >= 0 && y >= 0 && (x as usize) < *width && (y as usize) < *height
            }
            _ => false,
        }
    }

    pub fn is_neighbor(&self, a: CourierId, b: CourierId) -> bool {
        if !self.contains(a) || !self.contains(b) || a == b {
            return false;
        }
        match (self, a, b) {
            (TopologyKind::AllToAll { .. }, _, _) => true,
            (TopologyKind::Grid { .. }, CourierId::Grid { x, y }, CourierId::Grid { x: bx, y: by }) => {
                (x - bx).abs() + (y - by).abs() == 1
            }
            _ => false,
        }
    }

    /// Default routing step from `from` toward `destination`. All-to-all
    /// reaches the destination directly; grids correct the x-coordinate
    /// first, then y, so each hop strictly decreases coordinate distance.
    pub fn route_step(&self, from: CourierId, destination: CourierId) -> Option<CourierId> {
        if !self.contains(destination) || from == destination {
            return None;
        }
        match (self, from, destination) {
            (TopologyKind::AllToAll { .. }, _, _) => Some(destination),
            (
                TopologyKind::Grid { .. },
                CourierId::Grid { x, y },
                CourierId::Grid { x: dx, y: dy },
            ) => {
                if x != dx {
                    Some(CourierId::Grid {
                        x: x + (dx - x).signum(),
                        y,
                    })
                } else {
                    Some(CourierId::Grid {
                        x,
                        y: y + (dy - y).signum(),
                    })
                }
            }
            _ => None,
        }
    }
}

/// Per-courier configuration override.
#[derive(Clone, Debug)]
pub struct CourierOverride {
    pub courier: CourierId,
    pub clock_rate: Option<Rate>,
    pub bandwidth: Option<Option<usize>>,
}

/// A topology plus per-courier overrides, as ingested from plain-text
/// configuration:
///
/// ```text
/// topology=grid 3x2
/// courier.(1,0).clock-rate=2
/// courier.(1,0).bandwidth=4
/// ```
///
/// All-to-all uses `topology=all-to-all` with an optional `couriers=N`
/// (default 1) and integer courier ids in overrides.
#[derive(Clone, Debug)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub overrides: Vec<CourierOverride>,
}

impl TopologySpec {
    pub fn all_to_all(couriers: usize) -> TopologySpec {
        TopologySpec {
            kind: TopologyKind::AllToAll { couriers },
            overrides: Vec::new(),
        }
    }

    pub fn grid(width: usize, height: usize) -> TopologySpec {
        TopologySpec {
            kind: TopologyKind::Grid { width, height },
            overrides: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<TopologySpec, String> {
        let mut kind: Option<TopologyKind> = None;
        let mut couriers: Option<usize> = None;
        let mut raw_overrides: Vec<(String, String, String)> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "topology" => kind = Some(parse_topology_kind(value)?),
                "couriers" => {
                    couriers =
                        Some(value.parse().map_err(|_| {
                            format!("line {}: bad courier count `{}`", lineno + 1, value)
                        })?)
                }
                other => {
                    let parts: Vec<&str> = other.splitn(3, '.').collect();
                    if parts.len() == 3 && parts[0] == "courier" {
                        raw_overrides.push((
                            parts[1].to_owned(),
                            parts[2].to_owned(),
                            value.to_owned(),
                        ));
                    } else {
                        return Err(format!("line {}: unknown key `{}`", lineno + 1, other));
                    }
                }
            }
        }

        let mut kind = kind.ok_or("missing `topology` line")?;
        if let (TopologyKind::AllToAll { couriers: n }, Some(count)) = (&mut kind, couriers) {
            *n = count;
        }

        let mut overrides: Vec<CourierOverride> = Vec::new();
        for (id_text, field, value) in raw_overrides {
            let courier = parse_courier_id(&id_text, &kind)?;
            if !kind.contains(courier) {
                return Err(format!("override names unknown courier `{id_text}`"));
            }
            let entry = match overrides.iter_mut().find(|o| o.courier == courier) {
                Some(entry) => entry,
                None => {
                    overrides.push(CourierOverride {
                        courier,
                        clock_rate: None,
                        bandwidth: None,
                    });
                    overrides.last_mut().unwrap()
                }
            };
            match field.as_str() {
                "clock-rate" => {
                    entry.clock_rate = Some(Rate::from_str(&value)?);
                }
                "bandwidth" => {
                    entry.bandwidth = Some(if value == "unlimited" {
                        None
                    } else {
                        Some(
                            value
                                .parse()
                                .map_err(|_| format!("bad bandwidth `{value}`"))?,
                        )
                    });
                }
                other => return Err(format!("unknown courier field `{other}`")),
            }
        }

        Ok(TopologySpec { kind, overrides })
    }
}

fn parse_topology_kind(value: &str) -> Result<TopologyKind, String> {
    if value == "all-to-all" {
        return Ok(TopologyKind::AllToAll { couriers: 1 });
    }
    if let Some(rest) = value.strip_prefix("grid") {
        let dims = rest.trim();
        let (w, h) = dims
            .split_once('x')
            .ok_or_else(|| format!("bad grid dimensions `{dims}`"))?;
        let width: usize = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
        let height: usize = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
        if width == 0 || height == 0 {
            return Err("grid dimensions must be positive".to_owned());
        }
        return Ok(TopologyKind::Grid { width, height });
    }
    Err(format!("unknown topology `{value}`"))
}

fn parse_courier_id(text: &str, kind: &TopologyKind) -> Result<CourierId, String> {
    match kind {
        TopologyKind::AllToAll { .. } => {
            let n: u64 = text
                .parse()
                .map_err(|_| format!("bad courier id `{text}`"))?;
            Ok(CourierId::Node(n))
        }
        TopologyKind::Grid { .. } => {
            let inner = text
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .unwrap_or(text);
            let (x, y) = inner
                .split_once(',')
                .ok_or_else(|| format!("bad grid courier id `{text}`"))?;
            Ok(CourierId::Grid {
                x: x.trim().parse().map_err(|_| format!("bad x in `{text}`"))?,
                y: y.trim().parse().map_err(|_| format!("bad y in `{text}`"))?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_routes_x_first() {
        let grid = TopologyKind::Grid {
            width: 3,
            height: 4,
        };
        let at = |x, y| CourierId::Grid { x, y };
        assert_eq!(grid.route_step(at(0, 0), at(2, 3)), Some(at(1, 0)));
        assert_eq!(grid.route_step(at(2, 3), at(2, 0)), Some(at(2, 2)));
        assert_eq!(grid.route_step(at(1, 1), at(0, 1)), Some(at(0, 1)));
    }

    #[test]
    fn all_to_all_routes_directly() {
        let net = TopologyKind::AllToAll { couriers: 4 };
        assert_eq!(
            net.route_step(CourierId::Node(0), CourierId::Node(3)),
            Some(CourierId::Node(3))
        );
        assert!(net.is_neighbor(CourierId::Node(0), CourierId::Node(3)));
        assert!(!net.is_neighbor(CourierId::Node(0), CourierId::Node(0)));
    }

    #[test]
    fn grid_neighbors_are_4_adjacent() {
        let grid = TopologyKind::Grid {
            width: 3,
            height: 3,
        };
        let at = |x, y| CourierId::Grid { x, y };
        assert!(grid.is_neighbor(at(1, 1), at(1, 2)));
        assert!(!grid.is_neighbor(at(1, 1), at(2, 2)));
        assert!(!grid.is_neighbor(at(0, 0), at(2, 0)));
        assert!(!grid.is_neighbor(at(0, 0), at(-1, 0)));
    }

    #[test]
    fn parse_grid_with_overrides() {
        let spec = TopologySpec::parse(
            "# comment\n\
             topology=grid 3x2\n\
             courier.(1,0).clock-rate=1/2\n\
             courier.(1,0).bandwidth=4\n\
             courier.(2,1).bandwidth=unlimited\n",
        )
        .unwrap();
        assert_eq!(
            spec.kind,
            TopologyKind::Grid {
                width: 3,
                height: 2
            }
        );
        assert_eq!(spec.overrides.len(), 2);
        let first = &spec.overrides[0];
        assert_eq!(first.courier, CourierId::Grid { x: 1, y: 0 });
        assert_eq!(first.clock_rate, Some(Rate::ratio(1, 2)));
        assert_eq!(first.bandwidth, Some(Some(4)));
        assert_eq!(spec.overrides[1].bandwidth, Some(None));
    }

    #[test]
    fn parse_all_to_all_with_courier_count() {
        let spec = TopologySpec::parse("topology=all-to-all\ncouriers=5\ncourier.2.bandwidth=1\n")
            .unwrap();
        assert_eq!(spec.kind, TopologyKind::AllToAll { couriers: 5 });
        assert_eq!(spec.overrides[0].courier, CourierId::Node(2));
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(TopologySpec::parse("topology=ring").is_err());
        assert!(TopologySpec::parse("topology=grid 0x3").is_err());
        assert!(TopologySpec::parse("nonsense\n").is_err());
        assert!(TopologySpec::parse("topology=grid 2x2\ncourier.(5,5).bandwidth=1\n").is_err());
    }
}
