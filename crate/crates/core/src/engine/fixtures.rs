//! Small hand-built scenarios with known controller behaviour.

use std::collections::BTreeMap;

use super::{ArrivalSpec, ControllerPlan, InitialQueue, JunctionOverride, RunSettings, Scenario};
use crate::control::{ControllerKind, CycleStep};
use crate::topology::{JunctionSpec, LinkSpec, NetworkTopology, NodeSpec, PhaseSpec, ServiceRate};

fn node(id: &str, capacity: u32, boundary: bool) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        capacity,
        boundary,
    }
}

fn link(from: &str, to: &str, junction: &str) -> LinkSpec {
    LinkSpec {
        from: from.into(),
        to: to.into(),
        junction: junction.into(),
    }
}

fn phase(id: &str, moves: &[(&str, &str)]) -> PhaseSpec {
    PhaseSpec {
        id: id.into(),
        mu: moves
            .iter()
            .map(|&(f, t)| ServiceRate {
                from: f.into(),
                to: t.into(),
                mu: 1,
            })
            .collect(),
    }
}

fn junction(id: &str, inputs: &[&str], outputs: &[&str], phases: Vec<PhaseSpec>) -> JunctionSpec {
    JunctionSpec {
        id: id.into(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        phases,
    }
}

fn queue(from: &str, to: &str, count: f64) -> InitialQueue {
    InitialQueue {
        from: from.into(),
        to: to.into(),
        count,
    }
}

fn routes(entries: &[(&str, &str, f64)]) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for &(a, b, r) in entries {
        out.entry(a.into()).or_default().insert(b.into(), r);
    }
    out
}

/// Junction `M` chooses between `a -> b` (60 waiting) and `c -> d` (10
/// waiting). Node `b` is full and can never drain because its only exit
/// leads to `x`, which is itself full and feeds back into `b`.
///
/// Linear back-pressure weighs `a -> b` at 10 against 0 for `c -> d`, picks
/// the blocked movement and serves nobody. The capacity-aware controller
/// sees `b` at full pressure, finds both objectives zero and falls back to
/// the workable `c -> d`.
pub fn fixture_theorem1() -> Scenario {
    let topology = NetworkTopology {
        nodes: vec![
            node("a", 200, false),
            node("b", 50, false),
            node("c", 200, false),
            node("d", 200, false),
            node("x", 50, false),
        ],
        links: vec![
            link("a", "b", "M"),
            link("c", "d", "M"),
            link("b", "x", "D"),
            link("d", "x", "D"),
            link("x", "b", "X"),
        ],
        junctions: vec![
            junction(
                "M",
                &["a", "c"],
                &["b", "d"],
                vec![phase("p_ab", &[("a", "b")]), phase("p_cd", &[("c", "d")])],
            ),
            junction("D", &["b", "d"], &["x"], vec![phase("go", &[("b", "x"), ("d", "x")])]),
            junction("X", &["x"], &["b"], vec![phase("go", &[("x", "b")])]),
        ],
    };
    let mut controllers = ControllerPlan::new(ControllerKind::BackPressure);
    controllers.junctions.insert(
        "M".into(),
        JunctionOverride {
            kind: None,
            cycle: Some(vec![
                CycleStep {
                    phase: "p_cd".into(),
                    slots: 1,
                },
                CycleStep {
                    phase: "p_ab".into(),
                    slots: 1,
                },
            ]),
        },
    );
    Scenario {
        name: "theorem1".into(),
        topology,
        arrivals: ArrivalSpec::default(),
        routing: routes(&[("b", "x", 1.0), ("d", "x", 1.0), ("x", "b", 1.0)]),
        controllers,
        initial: vec![
            queue("a", "b", 60.0),
            queue("c", "d", 10.0),
            queue("b", "x", 50.0),
            queue("d", "x", 20.0),
            queue("x", "b", 50.0),
        ],
        run: RunSettings::new(1),
    }
}

/// Three junctions around a ring of nodes `n0 -> n1 -> n2 -> n0`.
///
/// Junction `J{i}` has phase `A` feeding the ring (`e{i} -> n{i+1}` and
/// `n{i} -> n{i+1}`) and phase `B` draining `n{i}` into the sink `s{i}`.
/// Every ring node starts full (40 vehicles toward the next ring node, 10
/// toward its sink), every entry node holds 120 vehicles.
///
/// Linear back-pressure prefers `A` everywhere (objective 70 against 50),
/// whose movements are all blocked, so nothing ever moves. The
/// capacity-aware controller sees full downstream ring nodes at pressure 1
/// and picks `B`, draining the ring.
pub fn fixture_deadlock_ring() -> Scenario {
    const N: usize = 3;
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    let mut junctions = Vec::new();
    let mut initial = Vec::new();
    let mut routing = Vec::new();
    for i in 0..N {
        nodes.push(node(&format!("e{i}"), 200, true));
    }
    for i in 0..N {
        nodes.push(node(&format!("n{i}"), 50, false));
    }
    for i in 0..N {
        nodes.push(node(&format!("s{i}"), 200, false));
    }
    let names: Vec<(String, String, String, String)> = (0..N)
        .map(|i| {
            (
                format!("e{i}"),
                format!("n{i}"),
                format!("n{}", (i + 1) % N),
                format!("s{i}"),
            )
        })
        .collect();
    for (i, (e, n, next, s)) in names.iter().enumerate() {
        let j = format!("J{i}");
        links.push(link(e, next, &j));
        links.push(link(n, next, &j));
        links.push(link(n, s, &j));
        junctions.push(junction(
            &j,
            &[e, n],
            &[next, s],
            vec![phase("A", &[(e, next), (n, next)]), phase("B", &[(n, s)])],
        ));
        initial.push(queue(e, next, 120.0));
        initial.push(queue(n, next, 40.0));
        initial.push(queue(n, s, 10.0));
    }
    for (e, n, next, s) in &names {
        routing.push((e.as_str(), next.as_str(), 1.0));
        routing.push((n.as_str(), s.as_str(), 1.0));
    }
    Scenario {
        name: "deadlock_ring".into(),
        topology: NetworkTopology {
            nodes,
            links,
            junctions,
        },
        arrivals: ArrivalSpec::default(),
        routing: routes(&routing),
        controllers: ControllerPlan::new(ControllerKind::BackPressure),
        initial,
        run: RunSettings::new(200),
    }
}
