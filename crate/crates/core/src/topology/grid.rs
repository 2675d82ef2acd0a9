//! Rectangular grid of four-way signalized junctions with bi-directional
//! roads of alternating lane counts.
//!
//! Naming: junction `J{r}_{c}` (row 0 at the north edge), internal directed
//! road `J{r}_{c}>J{r2}_{c2}`, boundary roads `{N|S}{c}_{in|out}` and
//! `{W|E}{r}_{in|out}`. Each junction carries four phases: `a` (straight and
//! right turns on the north-south axis), `b` (same on the east-west axis),
//! `c` (left turns north-south) and `d` (left turns east-west).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{JunctionSpec, LinkSpec, NetworkTopology, NodeSpec, PhaseSpec, ServiceRate};
use crate::error::{Error, Result};

/// Space taken by one queued vehicle: 5 m length plus 2.5 m gap.
pub const METERS_PER_VEHICLE: f64 = 7.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub rows: u32,
    pub cols: u32,
    /// Lane counts cycled over roads. Vertical road `c` uses `lane_pattern[c]`,
    /// horizontal road `r` uses `lane_pattern[r + 1]` (indices wrap).
    pub lane_pattern: Vec<u32>,
    pub road_length_m: f64,
    /// Straight-movement service per lane per slot.
    pub mu_straight: u32,
    /// Left-turn service per slot (one dedicated pocket lane).
    pub mu_left: u32,
    /// Right-turn service per slot (shares the outer lane).
    pub mu_right: u32,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            rows: 4,
            cols: 4,
            lane_pattern: vec![2, 1],
            road_length_m: 150.0,
            mu_straight: 5,
            mu_left: 3,
            mu_right: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Straight,
    Left,
    Right,
}

/// Compass direction of travel after a movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    East,
    South,
    West,
}

/// A generated grid together with the turn type and resulting heading of
/// every movement, which routing by turning ratios or headings needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNetwork {
    pub topology: NetworkTopology,
    pub turns: BTreeMap<(String, String), Turn>,
    pub headings: BTreeMap<(String, String), Heading>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

const SIDES: [Side; 4] = [Side::North, Side::East, Side::South, Side::West];

impl Side {
    fn rotate(self, quarter_turns: usize) -> Side {
        SIDES[(self as usize + quarter_turns) % 4]
    }

    fn north_south(self) -> bool {
        matches!(self, Side::North | Side::South)
    }

    /// Leaving the junction through this side means travelling this way.
    fn heading(self) -> Heading {
        match self {
            Side::North => Heading::North,
            Side::East => Heading::East,
            Side::South => Heading::South,
            Side::West => Heading::West,
        }
    }

    fn letter(self) -> char {
        match self {
            Side::North => 'N',
            Side::East => 'E',
            Side::South => 'S',
            Side::West => 'W',
        }
    }
}

fn junction_id(r: u32, c: u32) -> String {
    format!("J{r}_{c}")
}

pub fn generate_grid(p: &GridParams) -> Result<GridNetwork> {
    if p.rows == 0 || p.cols == 0 {
        return Err(Error::config(format!(
            "grid dimensions must be positive, got {}x{}",
            p.rows, p.cols
        )));
    }
    if !(p.road_length_m > 0.0) || !p.road_length_m.is_finite() {
        return Err(Error::config(format!(
            "road length must be positive, got {}",
            p.road_length_m
        )));
    }
    if p.lane_pattern.is_empty() || p.lane_pattern.contains(&0) {
        return Err(Error::config(
            "lane pattern must be non-empty with positive lane counts",
        ));
    }

    let lanes_vertical = |c: u32| p.lane_pattern[c as usize % p.lane_pattern.len()];
    let lanes_horizontal = |r: u32| p.lane_pattern[(r as usize + 1) % p.lane_pattern.len()];
    let capacity = |lanes: u32| -> Result<u32> {
        let c = (f64::from(lanes) * p.road_length_m / METERS_PER_VEHICLE + 1e-9).floor();
        if c < 1.0 {
            return Err(Error::config(format!(
                "road length {} m holds no vehicle",
                p.road_length_m
            )));
        }
        Ok(c as u32)
    };

    // Node attached to junction (r, c) on `side`, as (incoming id, outgoing id, lanes).
    let approach = |r: u32, c: u32, side: Side| -> (String, String, u32) {
        let here = junction_id(r, c);
        let lanes = if side.north_south() {
            lanes_vertical(c)
        } else {
            lanes_horizontal(r)
        };
        let neighbour = match side {
            Side::North if r > 0 => Some((r - 1, c)),
            Side::South if r + 1 < p.rows => Some((r + 1, c)),
            Side::West if c > 0 => Some((r, c - 1)),
            Side::East if c + 1 < p.cols => Some((r, c + 1)),
            _ => None,
        };
        match neighbour {
            Some((nr, nc)) => {
                let there = junction_id(nr, nc);
                (format!("{there}>{here}"), format!("{here}>{there}"), lanes)
            }
            None => {
                let pos = if side.north_south() { c } else { r };
                let l = side.letter();
                (format!("{l}{pos}_in"), format!("{l}{pos}_out"), lanes)
            }
        }
    };

    let mut nodes: BTreeMap<String, NodeSpec> = BTreeMap::new();
    let mut links = Vec::new();
    let mut junctions = Vec::new();
    let mut turns = BTreeMap::new();
    let mut headings = BTreeMap::new();

    for r in 0..p.rows {
        for c in 0..p.cols {
            let jid = junction_id(r, c);
            let sides: Vec<_> = SIDES.iter().map(|&s| (s, approach(r, c, s))).collect();

            for (_, (inc, outg, lanes)) in &sides {
                for (id, boundary) in [(inc, inc.ends_with("_in")), (outg, false)] {
                    nodes.entry(id.clone()).or_insert(NodeSpec {
                        id: id.clone(),
                        capacity: capacity(*lanes)?,
                        boundary,
                    });
                }
            }

            let mut phase_mu: [Vec<ServiceRate>; 4] = Default::default();
            for &(from_side, (ref inc, _, lanes)) in &sides {
                for (quarter, turn) in [(1, Turn::Left), (2, Turn::Straight), (3, Turn::Right)] {
                    let to_side = from_side.rotate(quarter);
                    let outg = &sides[to_side as usize].1 .1;
                    links.push(LinkSpec {
                        from: inc.clone(),
                        to: outg.clone(),
                        junction: jid.clone(),
                    });
                    turns.insert((inc.clone(), outg.clone()), turn);
                    headings.insert((inc.clone(), outg.clone()), to_side.heading());
                    let (phase, mu) = match (turn, from_side.north_south()) {
                        (Turn::Straight, ns) => (if ns { 0 } else { 1 }, p.mu_straight * lanes),
                        (Turn::Right, ns) => (if ns { 0 } else { 1 }, p.mu_right),
                        (Turn::Left, ns) => (if ns { 2 } else { 3 }, p.mu_left),
                    };
                    phase_mu[phase].push(ServiceRate {
                        from: inc.clone(),
                        to: outg.clone(),
                        mu,
                    });
                }
            }

            junctions.push(JunctionSpec {
                id: jid,
                inputs: sides.iter().map(|(_, (inc, _, _))| inc.clone()).collect(),
                outputs: [Side::West, Side::North, Side::East, Side::South]
                    .iter()
                    .map(|&s| sides[s as usize].1 .1.clone())
                    .collect(),
                phases: ["a", "b", "c", "d"]
                    .iter()
                    .zip(phase_mu)
                    .map(|(id, mu)| PhaseSpec { id: id.to_string(), mu })
                    .collect(),
            });
        }
    }

    Ok(GridNetwork {
        topology: NetworkTopology {
            nodes: nodes.into_values().collect(),
            links,
            junctions,
        },
        turns,
        headings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{validate_topology, Network};

    #[test]
    fn single_junction_capacities() {
        let g = generate_grid(&GridParams {
            rows: 1,
            cols: 1,
            lane_pattern: vec![1],
            road_length_m: 150.0,
            ..GridParams::default()
        })
        .unwrap();
        let t = &g.topology;
        assert_eq!(t.junctions.len(), 1);
        assert_eq!(t.nodes.len(), 8);
        assert!(t.nodes.iter().all(|n| n.capacity == 20));
        assert_eq!(t.nodes.iter().filter(|n| n.boundary).count(), 4);
        assert_eq!(t.links.len(), 12);
        assert!(validate_topology(t).is_empty());
    }

    #[test]
    fn two_by_two_has_directed_internal_roads() {
        let g = generate_grid(&GridParams {
            rows: 2,
            cols: 2,
            ..GridParams::default()
        })
        .unwrap();
        let t = &g.topology;
        assert_eq!(t.junctions.len(), 4);
        let ids: Vec<&str> = t.nodes.iter().map(|n| n.id.as_str()).collect();
        for (a, b) in [("J0_0", "J0_1"), ("J0_0", "J1_0"), ("J0_1", "J1_1"), ("J1_0", "J1_1")] {
            assert!(ids.contains(&format!("{a}>{b}").as_str()));
            assert!(ids.contains(&format!("{b}>{a}").as_str()));
        }
        // 4 internal roads x 2 directions + 8 boundary roads x 2 directions
        assert_eq!(t.nodes.len(), 24);
        assert!(validate_topology(t).is_empty());
    }

    #[test]
    fn alternating_lanes_set_capacity() {
        let g = generate_grid(&GridParams::default()).unwrap();
        let cap = |id: &str| g.topology.nodes.iter().find(|n| n.id == id).unwrap().capacity;
        // vertical road 0 has 2 lanes, vertical road 1 has 1 lane
        assert_eq!(cap("J1_0>J2_0"), 40);
        assert_eq!(cap("J1_1>J2_1"), 20);
        // horizontal road 0 has 1 lane, horizontal road 1 has 2
        assert_eq!(cap("J0_1>J0_2"), 20);
        assert_eq!(cap("J1_1>J1_2"), 40);
    }

    #[test]
    fn phases_follow_axes() {
        let g = generate_grid(&GridParams {
            rows: 1,
            cols: 1,
            ..GridParams::default()
        })
        .unwrap();
        let net = Network::new(&g.topology).unwrap();
        let j = &net.junctions[0];
        let phase = |id: &str| &j.phases[j.phase_index(id).unwrap().0];
        let served = |id: &str| -> Vec<(String, String, Turn)> {
            let ph = phase(id);
            j.links
                .iter()
                .zip(&ph.mu)
                .filter(|(_, &m)| m > 0)
                .map(|(l, _)| {
                    let from = net.nodes[net.links[l.0].from.0].id.clone();
                    let to = net.nodes[net.links[l.0].to.0].id.clone();
                    let t = g.turns[&(from.clone(), to.clone())];
                    (from, to, t)
                })
                .collect()
        };
        let a = served("a");
        assert_eq!(a.len(), 4);
        assert!(a
            .iter()
            .all(|(f, _, t)| (f.starts_with('N') || f.starts_with('S')) && *t != Turn::Left));
        let c = served("c");
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|(_, _, t)| *t == Turn::Left));
        // heading south from the north approach, a left turn exits east
        assert!(c.contains(&("N0_in".into(), "E0_out".into(), Turn::Left)));
        assert!(served("b")
            .iter()
            .any(|(f, to, t)| f == "W0_in" && to == "S0_out" && *t == Turn::Right));
        assert_eq!(served("d").len(), 2);
        assert_eq!(g.headings[&("N0_in".to_string(), "E0_out".to_string())], Heading::East);
        assert_eq!(g.headings[&("N0_in".to_string(), "S0_out".to_string())], Heading::South);
    }

    #[test]
    fn deterministic_and_rejects_bad_dimensions() {
        let p = GridParams::default();
        assert_eq!(generate_grid(&p).unwrap(), generate_grid(&p).unwrap());
        assert!(generate_grid(&GridParams { rows: 0, ..p.clone() }).is_err());
        assert!(generate_grid(&GridParams { cols: 0, ..p.clone() }).is_err());
        assert!(generate_grid(&GridParams {
            road_length_m: 0.0,
            ..p.clone()
        })
        .is_err());
        assert!(generate_grid(&GridParams {
            road_length_m: 5.0,
            ..p
        })
        .is_err());
    }
}
