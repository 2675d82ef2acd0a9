//! Introspection of one controller decision: pressures, weights and phase
//! objectives at a given junction and slot.

use std::fmt;

use super::{run_compiled, Scenario};
use crate::control::{compute_weights, decide, phase_objectives, pressures, ControllerKind, JunctionObservation};
use crate::error::{Error, Result};
use crate::topology::PhaseIdx;

#[derive(Debug, Clone, PartialEq)]
pub struct NodePressure {
    pub node: String,
    pub queue: f64,
    pub capacity: f64,
    /// `Pi_a` under the configured pressure.
    pub pressure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovementWeight {
    pub from: String,
    pub to: String,
    pub queue: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjective {
    pub phase: String,
    pub objective: f64,
    /// The phase could move at least one vehicle.
    pub workable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub junction: String,
    pub slot: u64,
    pub controller: ControllerKind,
    pub inputs: Vec<NodePressure>,
    pub outputs: Vec<NodePressure>,
    pub movements: Vec<MovementWeight>,
    pub phases: Vec<PhaseObjective>,
    pub chosen: String,
    pub tied: Vec<String>,
}

/// Simulates up to the start of `slot` and explains the decision taken at
/// `junction` there.
pub fn explain(scenario: &Scenario, junction: &str, slot: u64) -> Result<Explanation> {
    if slot >= scenario.run.horizon {
        return Err(Error::config(format!(
            "slot {slot} lies beyond the horizon of {} slots",
            scenario.run.horizon
        )));
    }
    let compiled = scenario.compile()?;
    let net = &compiled.network;
    let j = net
        .junction(junction)
        .ok_or_else(|| Error::config(format!("unknown junction `{junction}`")))?;

    let mut captured = None;
    let prefix = scenario.clone().with_horizon(slot + 1);
    run_compiled(&prefix, &compiled, |k, state| {
        if k == slot {
            captured = Some(state.clone());
        }
    })?;
    let state = captured.expect("slot lies within the prefix run");

    let config = &compiled.configs[j.0];
    let obs = JunctionObservation::observe(&state, net, j);
    let decision = decide(&state, net, j, config, slot)?;
    let (pi_in, pi_out) = pressures(&obs, &config.pressure);
    let weights = compute_weights(&obs, &config.pressure);
    let objectives = phase_objectives(&obs, &weights);

    let name = |n: crate::topology::NodeIdx| net.nodes[n.0].id.clone();
    let node_rows = |nodes: &[crate::control::NodeObservation], pi: &[f64]| {
        nodes
            .iter()
            .zip(pi)
            .map(|(n, &p)| NodePressure {
                node: name(n.node),
                queue: n.queue,
                capacity: n.capacity,
                pressure: p,
            })
            .collect()
    };
    let junction_ref = &net.junctions[j.0];
    let phase_name = |p: PhaseIdx| junction_ref.phases[p.0].id.clone();
    Ok(Explanation {
        junction: junction.to_string(),
        slot,
        controller: config.kind,
        inputs: node_rows(&obs.inputs, &pi_in),
        outputs: node_rows(&obs.outputs, &pi_out),
        movements: obs
            .movements
            .iter()
            .zip(&weights)
            .map(|(m, &w)| {
                let link = net.links[m.link.0];
                MovementWeight {
                    from: name(link.from),
                    to: name(link.to),
                    queue: state.queue(m.link),
                    weight: w,
                }
            })
            .collect(),
        phases: objectives
            .iter()
            .enumerate()
            .map(|(p, &o)| PhaseObjective {
                phase: phase_name(PhaseIdx(p)),
                objective: o,
                workable: obs.can_work(PhaseIdx(p)),
            })
            .collect(),
        chosen: phase_name(decision.phase),
        tied: decision.tied.iter().map(|&p| phase_name(p)).collect(),
    })
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "junction {} at slot {} ({})",
            self.junction,
            self.slot,
            self.controller.short_name()
        )?;
        if self.controller == ControllerKind::FixedCycle {
            writeln!(f, "open-loop program; pressures shown for reference")?;
        }
        writeln!(f, "nodes:")?;
        for (role, rows) in [("in ", &self.inputs), ("out", &self.outputs)] {
            for n in rows {
                writeln!(
                    f,
                    "  {role} {:<16} Q={:<8} C={:<6} Pi={:.6}",
                    n.node, n.queue, n.capacity, n.pressure
                )?;
            }
        }
        writeln!(f, "movements:")?;
        for m in &self.movements {
            writeln!(f, "  {} -> {}  Q={}  W={:.6}", m.from, m.to, m.queue, m.weight)?;
        }
        writeln!(f, "phases:")?;
        for p in &self.phases {
            let mark = if p.phase == self.chosen { "*" } else { " " };
            let work = if p.workable { "workable" } else { "idle" };
            writeln!(f, " {mark} {:<8} objective={:.6} {work}", p.phase, p.objective)?;
        }
        write!(f, "chosen {} (tied: {})", self.chosen, self.tied.join(", "))
    }
}
