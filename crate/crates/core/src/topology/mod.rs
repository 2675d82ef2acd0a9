//! Static network description: nodes (road segments holding queues), links
//! (movements between nodes), junctions (a partition of the links, each
//! controlled by one signal) and per-junction phase service tables.
//!
//! [`NetworkTopology`] is the declarative, id-keyed form used by scenario
//! files. [`Network`] is the compiled, index-based form the simulator runs on;
//! it can only be built from a topology that passes [`validate_topology`].

mod grid;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{generate_grid, GridNetwork, GridParams, Heading, Turn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Queue length at which the node stops accepting transfers.
    #[serde(rename = "C")]
    pub capacity: u32,
    /// Exogenous arrivals are allowed here by default.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub junction: String,
}

/// One entry of a phase's service table: at most `mu` vehicles per slot may
/// move from `from` to `to` while the phase is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceRate {
    pub from: String,
    pub to: String,
    pub mu: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub id: String,
    pub mu: Vec<ServiceRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionSpec {
    pub id: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub phases: Vec<PhaseSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkTopology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub junctions: Vec<JunctionSpec>,
}

/// A single broken structural invariant, carrying the offending identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode(String),
    DuplicateJunction(String),
    DuplicatePhase {
        junction: String,
        phase: String,
    },
    ZeroCapacity(String),
    CapacityAboveReference {
        node: String,
        capacity: u32,
        c_infinity: String,
    },
    UnknownNode {
        context: String,
        node: String,
    },
    UnknownJunction {
        from: String,
        to: String,
        junction: String,
    },
    /// The same movement is listed more than once, possibly under different junctions.
    PartitionViolated {
        from: String,
        to: String,
        junctions: Vec<String>,
    },
    InputsMismatch {
        junction: String,
        declared: Vec<String>,
        derived: Vec<String>,
    },
    OutputsMismatch {
        junction: String,
        declared: Vec<String>,
        derived: Vec<String>,
    },
    NoPhases(String),
    NoPositiveService(String),
    ServiceOutsideJunction {
        junction: String,
        phase: String,
        from: String,
        to: String,
    },
    ServiceWithoutLink {
        junction: String,
        phase: String,
        from: String,
        to: String,
    },
    DuplicateService {
        junction: String,
        phase: String,
        from: String,
        to: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateNode(id) => write!(f, "duplicate node id `{id}`"),
            DuplicateJunction(id) => write!(f, "duplicate junction id `{id}`"),
            DuplicatePhase { junction, phase } => {
                write!(f, "junction `{junction}`: duplicate phase id `{phase}`")
            }
            ZeroCapacity(id) => write!(f, "node `{id}`: capacity >= 1 violated"),
            CapacityAboveReference {
                node,
                capacity,
                c_infinity,
            } => write!(
                f,
                "node `{node}`: capacity {capacity} exceeds the reference capacity {c_infinity}"
            ),
            UnknownNode { context, node } => write!(f, "{context}: unknown node `{node}`"),
            UnknownJunction { from, to, junction } => {
                write!(f, "link {from}->{to}: unknown junction `{junction}`")
            }
            PartitionViolated { from, to, junctions } => write!(
                f,
                "partition violated: link {from}->{to} assigned {} times (junctions: {})",
                junctions.len(),
                junctions.join(", ")
            ),
            InputsMismatch {
                junction,
                declared,
                derived,
            } => write!(
                f,
                "junction `{junction}`: declared inputs [{}] differ from link-derived inputs [{}]",
                declared.join(", "),
                derived.join(", ")
            ),
            OutputsMismatch {
                junction,
                declared,
                derived,
            } => write!(
                f,
                "junction `{junction}`: declared outputs [{}] differ from link-derived outputs [{}]",
                declared.join(", "),
                derived.join(", ")
            ),
            NoPhases(j) => write!(f, "junction `{j}`: phase list is empty"),
            NoPositiveService(j) => write!(f, "junction `{j}`: no phase serves any movement"),
            ServiceOutsideJunction {
                junction,
                phase,
                from,
                to,
            } => write!(
                f,
                "junction `{junction}` phase `{phase}`: {from}->{to} is not an input/output pair"
            ),
            ServiceWithoutLink {
                junction,
                phase,
                from,
                to,
            } => write!(
                f,
                "junction `{junction}` phase `{phase}`: positive service on missing link {from}->{to}"
            ),
            DuplicateService {
                junction,
                phase,
                from,
                to,
            } => write!(f, "junction `{junction}` phase `{phase}`: {from}->{to} listed twice"),
        }
    }
}

/// Checks every structural invariant and returns all violations found.
/// An empty report means the topology can be compiled into a [`Network`].
pub fn validate_topology(t: &NetworkTopology) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut nodes = BTreeSet::new();
    for n in &t.nodes {
        if !nodes.insert(n.id.as_str()) {
            out.push(Violation::DuplicateNode(n.id.clone()));
        }
        if n.capacity < 1 {
            out.push(Violation::ZeroCapacity(n.id.clone()));
        }
    }

    let mut junctions = BTreeSet::new();
    for j in &t.junctions {
        if !junctions.insert(j.id.as_str()) {
            out.push(Violation::DuplicateJunction(j.id.clone()));
        }
    }

    // movement -> junctions it was assigned to, in declaration order
    let mut assignments: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for l in &t.links {
        let ctx = format!("link {}->{}", l.from, l.to);
        for end in [&l.from, &l.to] {
            if !nodes.contains(end.as_str()) {
                out.push(Violation::UnknownNode {
                    context: ctx.clone(),
                    node: end.clone(),
                });
            }
        }
        if !junctions.contains(l.junction.as_str()) {
            out.push(Violation::UnknownJunction {
                from: l.from.clone(),
                to: l.to.clone(),
                junction: l.junction.clone(),
            });
        }
        assignments
            .entry((l.from.as_str(), l.to.as_str()))
            .or_default()
            .push(l.junction.as_str());
    }
    for ((from, to), js) in &assignments {
        if js.len() > 1 {
            out.push(Violation::PartitionViolated {
                from: from.to_string(),
                to: to.to_string(),
                junctions: js.iter().map(|s| s.to_string()).collect(),
            });
        }
    }

    for j in &t.junctions {
        let links: BTreeSet<(&str, &str)> = t
            .links
            .iter()
            .filter(|l| l.junction == j.id)
            .map(|l| (l.from.as_str(), l.to.as_str()))
            .collect();
        let derived_in = ordered_unique(t.links.iter().filter(|l| l.junction == j.id).map(|l| &l.from));
        let derived_out = ordered_unique(t.links.iter().filter(|l| l.junction == j.id).map(|l| &l.to));
        let declared_in: BTreeSet<&str> = j.inputs.iter().map(String::as_str).collect();
        let declared_out: BTreeSet<&str> = j.outputs.iter().map(String::as_str).collect();

        for n in j.inputs.iter().chain(&j.outputs) {
            if !nodes.contains(n.as_str()) {
                out.push(Violation::UnknownNode {
                    context: format!("junction `{}`", j.id),
                    node: n.clone(),
                });
            }
        }
        if declared_in.len() != j.inputs.len() || declared_in != derived_in.iter().map(String::as_str).collect() {
            out.push(Violation::InputsMismatch {
                junction: j.id.clone(),
                declared: j.inputs.clone(),
                derived: derived_in,
            });
        }
        if declared_out.len() != j.outputs.len() || declared_out != derived_out.iter().map(String::as_str).collect() {
            out.push(Violation::OutputsMismatch {
                junction: j.id.clone(),
                declared: j.outputs.clone(),
                derived: derived_out,
            });
        }

        if j.phases.is_empty() {
            out.push(Violation::NoPhases(j.id.clone()));
            continue;
        }
        let mut phase_ids = BTreeSet::new();
        let mut any_positive = false;
        for p in &j.phases {
            if !phase_ids.insert(p.id.as_str()) {
                out.push(Violation::DuplicatePhase {
                    junction: j.id.clone(),
                    phase: p.id.clone(),
                });
            }
            let mut seen = BTreeSet::new();
            for s in &p.mu {
                let key = (s.from.as_str(), s.to.as_str());
                if !seen.insert(key) {
                    out.push(Violation::DuplicateService {
                        junction: j.id.clone(),
                        phase: p.id.clone(),
                        from: s.from.clone(),
                        to: s.to.clone(),
                    });
                }
                if !declared_in.contains(key.0) || !declared_out.contains(key.1) {
                    out.push(Violation::ServiceOutsideJunction {
                        junction: j.id.clone(),
                        phase: p.id.clone(),
                        from: s.from.clone(),
                        to: s.to.clone(),
                    });
                } else if s.mu > 0 && !links.contains(&key) {
                    out.push(Violation::ServiceWithoutLink {
                        junction: j.id.clone(),
                        phase: p.id.clone(),
                        from: s.from.clone(),
                        to: s.to.clone(),
                    });
                }
                any_positive |= s.mu > 0 && links.contains(&key);
            }
        }
        if !any_positive {
            out.push(Violation::NoPositiveService(j.id.clone()));
        }
    }

    out
}

/// Capacities must not exceed the normalized pressure's reference capacity.
pub fn validate_capacities(t: &NetworkTopology, c_infinity: f64) -> Vec<Violation> {
    t.nodes
        .iter()
        .filter(|n| f64::from(n.capacity) > c_infinity)
        .map(|n| Violation::CapacityAboveReference {
            node: n.id.clone(),
            capacity: n.capacity,
            c_infinity: c_infinity.to_string(),
        })
        .collect()
}

fn ordered_unique<'a>(it: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    it.filter(|s| seen.insert(s.as_str())).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JunctionIdx(pub usize);

/// Index of a phase within its junction's phase list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseIdx(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub capacity: u32,
    pub boundary: bool,
    /// Links leaving this node; one queue per entry.
    pub out_links: Vec<LinkIdx>,
    pub in_links: Vec<LinkIdx>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub junction: JunctionIdx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub id: String,
    /// Service rate per junction link, aligned with [`Junction::links`].
    pub mu: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    pub inputs: Vec<NodeIdx>,
    pub outputs: Vec<NodeIdx>,
    pub links: Vec<LinkIdx>,
    pub phases: Vec<Phase>,
}

impl Junction {
    pub fn phase_index(&self, id: &str) -> Option<PhaseIdx> {
        self.phases.iter().position(|p| p.id == id).map(PhaseIdx)
    }
}

/// Compiled, index-based network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub junctions: Vec<Junction>,
    node_index: HashMap<String, NodeIdx>,
    junction_index: HashMap<String, JunctionIdx>,
    link_index: HashMap<(NodeIdx, NodeIdx), LinkIdx>,
}

impl Network {
    pub fn new(t: &NetworkTopology) -> Result<Self> {
        let violations = validate_topology(t);
        if !violations.is_empty() {
            return Err(Error::InvalidTopology(violations));
        }

        let node_index: HashMap<String, NodeIdx> = t
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), NodeIdx(i)))
            .collect();
        let junction_index: HashMap<String, JunctionIdx> = t
            .junctions
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.clone(), JunctionIdx(i)))
            .collect();

        let mut nodes: Vec<Node> = t
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                capacity: n.capacity,
                boundary: n.boundary,
                out_links: Vec::new(),
                in_links: Vec::new(),
            })
            .collect();

        let mut links = Vec::with_capacity(t.links.len());
        let mut link_index = HashMap::new();
        for (i, l) in t.links.iter().enumerate() {
            let link = Link {
                from: node_index[&l.from],
                to: node_index[&l.to],
                junction: junction_index[&l.junction],
            };
            nodes[link.from.0].out_links.push(LinkIdx(i));
            nodes[link.to.0].in_links.push(LinkIdx(i));
            link_index.insert((link.from, link.to), LinkIdx(i));
            links.push(link);
        }

        let junctions = t
            .junctions
            .iter()
            .enumerate()
            .map(|(ji, j)| {
                let jlinks: Vec<LinkIdx> = (0..links.len())
                    .filter(|&i| links[i].junction.0 == ji)
                    .map(LinkIdx)
                    .collect();
                let phases = j
                    .phases
                    .iter()
                    .map(|p| {
                        let mut mu = vec![0; jlinks.len()];
                        for s in &p.mu {
                            let key = (node_index[&s.from], node_index[&s.to]);
                            if let Some(pos) = jlinks.iter().position(|&l| (links[l.0].from, links[l.0].to) == key) {
                                mu[pos] = s.mu;
                            }
                        }
                        Phase { id: p.id.clone(), mu }
                    })
                    .collect();
                Junction {
                    id: j.id.clone(),
                    inputs: j.inputs.iter().map(|n| node_index[n]).collect(),
                    outputs: j.outputs.iter().map(|n| node_index[n]).collect(),
                    links: jlinks,
                    phases,
                }
            })
            .collect();

        Ok(Network {
            nodes,
            links,
            junctions,
            node_index,
            junction_index,
            link_index,
        })
    }

    pub fn node(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn junction(&self, id: &str) -> Option<JunctionIdx> {
        self.junction_index.get(id).copied()
    }

    pub fn link(&self, from: NodeIdx, to: NodeIdx) -> Option<LinkIdx> {
        self.link_index.get(&(from, to)).copied()
    }

    pub fn link_by_ids(&self, from: &str, to: &str) -> Option<LinkIdx> {
        self.link(self.node(from)?, self.node(to)?)
    }

    pub fn capacity(&self, n: NodeIdx) -> u32 {
        self.nodes[n.0].capacity
    }

    pub fn max_capacity(&self) -> u32 {
        self.nodes.iter().map(|n| n.capacity).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, c: u32) -> NodeSpec {
        NodeSpec {
            id: id.into(),
            capacity: c,
            boundary: false,
        }
    }

    fn link(from: &str, to: &str, j: &str) -> LinkSpec {
        LinkSpec {
            from: from.into(),
            to: to.into(),
            junction: j.into(),
        }
    }

    fn rate(from: &str, to: &str, mu: u32) -> ServiceRate {
        ServiceRate {
            from: from.into(),
            to: to.into(),
            mu,
        }
    }

    /// Two inputs, two outputs, two phases, all capacities 50.
    fn cross() -> NetworkTopology {
        NetworkTopology {
            nodes: ["a", "b", "c", "d"].iter().map(|id| node(id, 50)).collect(),
            links: vec![link("a", "b", "J"), link("c", "d", "J")],
            junctions: vec![JunctionSpec {
                id: "J".into(),
                inputs: vec!["a".into(), "c".into()],
                outputs: vec!["b".into(), "d".into()],
                phases: vec![
                    PhaseSpec {
                        id: "p1".into(),
                        mu: vec![rate("a", "b", 2)],
                    },
                    PhaseSpec {
                        id: "p2".into(),
                        mu: vec![rate("c", "d", 2)],
                    },
                ],
            }],
        }
    }

    #[test]
    fn consistent_junction_is_valid() {
        assert!(validate_topology(&cross()).is_empty());
        let net = Network::new(&cross()).unwrap();
        assert_eq!(net.junctions[0].links.len(), 2);
        assert_eq!(net.junctions[0].phases[1].mu, vec![0, 2]);
    }

    #[test]
    fn link_in_two_junctions() {
        let mut t = cross();
        t.junctions.push(JunctionSpec {
            id: "K".into(),
            inputs: vec!["a".into()],
            outputs: vec!["b".into()],
            phases: vec![PhaseSpec {
                id: "q".into(),
                mu: vec![rate("a", "b", 1)],
            }],
        });
        t.links.push(link("a", "b", "K"));
        let report = validate_topology(&t);
        let partition: Vec<_> = report
            .iter()
            .filter(|v| matches!(v, Violation::PartitionViolated { .. }))
            .collect();
        assert_eq!(partition.len(), 1, "{report:?}");
        assert!(partition[0].to_string().starts_with("partition violated"));
    }

    #[test]
    fn zero_capacity() {
        let mut t = cross();
        t.nodes[1].capacity = 0;
        assert_eq!(validate_topology(&t), vec![Violation::ZeroCapacity("b".into())]);
    }

    #[test]
    fn service_on_missing_link_is_flagged() {
        let mut t = cross();
        t.junctions[0].phases[0].mu.push(rate("a", "d", 1));
        let report = validate_topology(&t);
        assert!(
            matches!(report[..], [Violation::ServiceWithoutLink { .. }]),
            "{report:?}"
        );

        // zero entries for absent links are fine
        t.junctions[0].phases[0].mu[1].mu = 0;
        assert!(validate_topology(&t).is_empty());
    }

    #[test]
    fn declared_io_must_match_links() {
        let mut t = cross();
        t.junctions[0].inputs.pop();
        let report = validate_topology(&t);
        assert!(report.iter().any(|v| matches!(v, Violation::InputsMismatch { .. })));
    }

    #[test]
    fn empty_phase_list_and_dangling_refs() {
        let mut t = cross();
        t.junctions[0].phases.clear();
        t.links.push(link("a", "zz", "nowhere"));
        let report = validate_topology(&t);
        assert!(report.contains(&Violation::NoPhases("J".into())));
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::UnknownNode { node, .. } if node == "zz")));
        assert!(report.iter().any(|v| matches!(v, Violation::UnknownJunction { .. })));
        assert!(Network::new(&t).is_err());
    }

    #[test]
    fn reference_capacity_check() {
        let t = cross();
        assert!(validate_capacities(&t, 50.0).is_empty());
        assert_eq!(validate_capacities(&t, 49.0).len(), 4);
    }
}
