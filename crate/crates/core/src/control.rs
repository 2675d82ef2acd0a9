//! Per-junction signal controllers.
//!
//! Back-pressure control runs independently at each junction on a strictly
//! local observation:
//!
//! 1. `Pi_a = P(Q_a, C_a)` for every input and output node;
//! 2. `W_ab = d_ab * max(Pi_a - Pi_b, 0)` with `d_ab = [Q_ab > 0]`;
//! 3. pick the phase maximizing `sum_ab W_ab * mu_ab(phase)`.
//!
//! With linear pressures this is classic back-pressure. With normalized
//! pressures (capacity-aware back-pressure) a full output always has
//! `Pi_b = 1`, so blocked movements carry no weight; combined with the tie
//! preference for phases that can actually move a vehicle, the junction never
//! idles while some phase could serve someone.

use serde::{Deserialize, Serialize};

use crate::dynamics::{FlowRealization, QueueState};
use crate::error::{Error, Result};
use crate::pressure::{PressureFunction, PressureParams};
use crate::topology::{JunctionIdx, LinkIdx, Network, NodeIdx, Phase, PhaseIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    FixedCycle,
    BackPressure,
    CapacityAware,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::FixedCycle,
        ControllerKind::BackPressure,
        ControllerKind::CapacityAware,
    ];

    /// Short label used on the command line and in CSV output.
    pub fn short_name(self) -> &'static str {
        match self {
            ControllerKind::FixedCycle => "fc",
            ControllerKind::BackPressure => "bp",
            ControllerKind::CapacityAware => "bpc",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.short_name() == s)
    }
}

/// One entry of a fixed-cycle program: `phase` stays green for `slots` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleStep {
    pub phase: String,
    pub slots: u32,
}

/// Default objective-equality tolerance.
pub const DEFAULT_TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Used by the back-pressure kinds.
    pub pressure: PressureFunction,
    /// Used by the fixed-cycle kind.
    pub cycle: Vec<CycleStep>,
    pub tie_epsilon: f64,
    /// Among tied phases, prefer one that can move at least one vehicle.
    pub tie_break: bool,
}

impl ControllerConfig {
    pub fn fixed_cycle(cycle: Vec<CycleStep>) -> Self {
        ControllerConfig {
            kind: ControllerKind::FixedCycle,
            pressure: PressureFunction::Linear,
            cycle,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            tie_break: true,
        }
    }

    pub fn back_pressure() -> Self {
        ControllerConfig {
            kind: ControllerKind::BackPressure,
            pressure: PressureFunction::Linear,
            cycle: Vec::new(),
            tie_epsilon: DEFAULT_TIE_EPSILON,
            tie_break: true,
        }
    }

    pub fn capacity_aware(params: PressureParams) -> Self {
        ControllerConfig {
            kind: ControllerKind::CapacityAware,
            pressure: PressureFunction::Normalized(params),
            cycle: Vec::new(),
            tie_epsilon: DEFAULT_TIE_EPSILON,
            tie_break: true,
        }
    }

    /// Checks the configuration against the junctions it will drive.
    pub fn check(&self, net: &Network, junctions: &[JunctionIdx]) -> Result<()> {
        if !(self.tie_epsilon >= 0.0) {
            return Err(Error::config(format!(
                "tie_epsilon must be >= 0, got {}",
                self.tie_epsilon
            )));
        }
        match self.kind {
            ControllerKind::FixedCycle => {
                if self.cycle.is_empty() {
                    return Err(Error::config("fixed-cycle program is empty"));
                }
                for s in &self.cycle {
                    if s.slots < 1 {
                        return Err(Error::config(format!("cycle phase `{}` lasts 0 slots", s.phase)));
                    }
                    for &j in junctions {
                        let junction = &net.junctions[j.0];
                        if junction.phase_index(&s.phase).is_none() {
                            return Err(Error::config(format!(
                                "junction `{}` has no phase `{}`",
                                junction.id, s.phase
                            )));
                        }
                    }
                }
            }
            ControllerKind::CapacityAware => {
                let PressureFunction::Normalized(p) = self.pressure else {
                    return Err(Error::config("capacity-aware control needs a normalized pressure"));
                };
                check_reference_capacity(&p, net, junctions)?;
            }
            ControllerKind::BackPressure => {
                if let PressureFunction::Normalized(p) = self.pressure {
                    check_reference_capacity(&p, net, junctions)?;
                }
            }
        }
        Ok(())
    }
}

/// Every node seen by the junctions must fit under the reference capacity.
fn check_reference_capacity(p: &PressureParams, net: &Network, junctions: &[JunctionIdx]) -> Result<()> {
    p.check()?;
    for &j in junctions {
        let junction = &net.junctions[j.0];
        for &n in junction.inputs.iter().chain(&junction.outputs) {
            let node = &net.nodes[n.0];
            if f64::from(node.capacity) > p.c_infinity {
                return Err(Error::config(format!(
                    "node `{}`: capacity {} exceeds C_inf = {}",
                    node.id, node.capacity, p.c_infinity
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeObservation {
    pub node: NodeIdx,
    /// Aggregate queue `Q_a`.
    pub queue: f64,
    pub capacity: f64,
}

impl NodeObservation {
    pub fn has_room(&self) -> bool {
        self.queue < self.capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementObservation {
    pub link: LinkIdx,
    /// Position in [`JunctionObservation::inputs`].
    pub input: usize,
    /// Position in [`JunctionObservation::outputs`].
    pub output: usize,
    /// `d_ab`: vehicles are waiting for this movement.
    pub occupied: bool,
}

/// What a junction controller is allowed to see.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionObservation<'a> {
    pub junction: JunctionIdx,
    pub inputs: Vec<NodeObservation>,
    pub outputs: Vec<NodeObservation>,
    /// One entry per junction link, aligned with every phase's `mu`.
    pub movements: Vec<MovementObservation>,
    pub phases: &'a [Phase],
}

impl JunctionObservation<'_> {
    /// Builds the observation of junction `j` from the slot-start state.
    pub fn observe<'n>(state: &QueueState, net: &'n Network, j: JunctionIdx) -> JunctionObservation<'n> {
        let junction = &net.junctions[j.0];
        let node_obs = |n: NodeIdx| NodeObservation {
            node: n,
            queue: state.node_total(net, n),
            capacity: f64::from(net.capacity(n)),
        };
        let inputs: Vec<_> = junction.inputs.iter().map(|&n| node_obs(n)).collect();
        let outputs: Vec<_> = junction.outputs.iter().map(|&n| node_obs(n)).collect();
        let movements = junction
            .links
            .iter()
            .map(|&l| {
                let link = net.links[l.0];
                MovementObservation {
                    link: l,
                    input: junction
                        .inputs
                        .iter()
                        .position(|&n| n == link.from)
                        .expect("validated input"),
                    output: junction
                        .outputs
                        .iter()
                        .position(|&n| n == link.to)
                        .expect("validated output"),
                    occupied: state.queue(l) > 0.0,
                }
            })
            .collect();
        JunctionObservation {
            junction: j,
            inputs,
            outputs,
            movements,
            phases: &junction.phases,
        }
    }

    /// A phase can move at least one vehicle: some served movement has
    /// waiting vehicles and an output with room.
    pub fn can_work(&self, phase: PhaseIdx) -> bool {
        self.movements
            .iter()
            .zip(&self.phases[phase.0].mu)
            .any(|(m, &mu)| mu > 0 && m.occupied && self.outputs[m.output].has_room())
    }
}

/// Node pressures `(inputs, outputs)` for an observation.
pub fn pressures(obs: &JunctionObservation, pressure: &PressureFunction) -> (Vec<f64>, Vec<f64>) {
    let eval = |n: &NodeObservation| pressure.value(n.queue, n.capacity);
    (
        obs.inputs.iter().map(eval).collect(),
        obs.outputs.iter().map(eval).collect(),
    )
}

/// `W_ab` for every movement of the junction.
pub fn compute_weights(obs: &JunctionObservation, pressure: &PressureFunction) -> Vec<f64> {
    let (pi_in, pi_out) = pressures(obs, pressure);
    obs.movements
        .iter()
        .map(|m| {
            if m.occupied {
                (pi_in[m.input] - pi_out[m.output]).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// `sum_ab W_ab * mu_ab(p)` for every phase.
pub fn phase_objectives(obs: &JunctionObservation, weights: &[f64]) -> Vec<f64> {
    obs.phases
        .iter()
        .map(|p| weights.iter().zip(&p.mu).map(|(w, &mu)| w * f64::from(mu)).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDecision {
    pub junction: JunctionIdx,
    pub phase: PhaseIdx,
    /// Objective of the chosen phase; `None` for open-loop control.
    pub objective: Option<f64>,
    /// The preference for workable phases changed the outcome.
    pub tie_break_used: bool,
    /// Phases whose objective is within `tie_epsilon` of the best, ascending.
    pub tied: Vec<PhaseIdx>,
}

/// Back-pressure argmax with the workable-phase preference and a final
/// lowest-index rule.
pub fn select_phase(obs: &JunctionObservation, weights: &[f64], config: &ControllerConfig) -> PhaseDecision {
    let objectives = phase_objectives(obs, weights);
    let best = objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<PhaseIdx> = objectives
        .iter()
        .enumerate()
        .filter(|(_, &o)| o >= best - config.tie_epsilon)
        .map(|(i, _)| PhaseIdx(i))
        .collect();
    let first = tied[0];
    let phase = if config.tie_break && tied.len() > 1 {
        tied.iter().copied().find(|&p| obs.can_work(p)).unwrap_or(first)
    } else {
        first
    };
    PhaseDecision {
        junction: obs.junction,
        phase,
        objective: Some(objectives[phase.0]),
        tie_break_used: phase != first,
        tied,
    }
}

/// Phase id active at slot `k` of a fixed-cycle program.
pub fn fixed_cycle_decide(config: &ControllerConfig, k: u64) -> Result<&str> {
    let total: u64 = config.cycle.iter().map(|s| u64::from(s.slots)).sum();
    if total == 0 {
        return Err(Error::config("fixed-cycle program is empty"));
    }
    let mut pos = k % total;
    for s in &config.cycle {
        if pos < u64::from(s.slots) {
            return Ok(&s.phase);
        }
        pos -= u64::from(s.slots);
    }
    unreachable!("position lies within the cycle")
}

/// Runs one controller for junction `j`.
pub fn decide(
    state: &QueueState,
    net: &Network,
    j: JunctionIdx,
    config: &ControllerConfig,
    slot: u64,
) -> Result<PhaseDecision> {
    match config.kind {
        ControllerKind::FixedCycle => {
            let id = fixed_cycle_decide(config, slot)?;
            let junction = &net.junctions[j.0];
            let phase = junction
                .phase_index(id)
                .ok_or_else(|| Error::config(format!("junction `{}` has no phase `{id}`", junction.id)))?;
            Ok(PhaseDecision {
                junction: j,
                phase,
                objective: None,
                tie_break_used: false,
                tied: vec![phase],
            })
        }
        ControllerKind::BackPressure | ControllerKind::CapacityAware => {
            let obs = JunctionObservation::observe(state, net, j);
            let weights = compute_weights(&obs, &config.pressure);
            Ok(select_phase(&obs, &weights, config))
        }
    }
}

/// Decides every junction from the slot-start state. `configs` holds either
/// one config per junction or a single config shared by all.
pub fn decide_all(
    state: &QueueState,
    net: &Network,
    configs: &[ControllerConfig],
    slot: u64,
) -> Result<Vec<PhaseDecision>> {
    let n = net.junctions.len();
    if configs.len() != n && configs.len() != 1 {
        return Err(Error::config(format!(
            "{} controller configs for {n} junctions",
            configs.len()
        )));
    }
    (0..n)
        .map(|j| {
            let config = if configs.len() == 1 { &configs[0] } else { &configs[j] };
            decide(state, net, JunctionIdx(j), config, slot)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditEntry {
    pub junction: JunctionIdx,
    /// Phase that was applied.
    pub phase: PhaseIdx,
    /// No vehicle moved although `witness` could have served one.
    pub violated: bool,
    /// A `(phase, link)` with service, waiting vehicles and an output with room.
    pub witness: Option<(PhaseIdx, LinkIdx)>,
}

/// Flags every junction that served nobody while some phase could have
/// served a waiting vehicle toward a non-full output.
pub fn work_conservation_audit(
    state: &QueueState,
    net: &Network,
    decisions: &[PhaseDecision],
    flows: &FlowRealization,
) -> Vec<AuditEntry> {
    let totals = state.node_totals(net);
    net.junctions
        .iter()
        .zip(decisions)
        .enumerate()
        .map(|(j, (junction, decision))| {
            let served: f64 = junction.links.iter().map(|&l| flows.flow(l)).sum();
            let witness = junction.phases.iter().enumerate().find_map(|(p, phase)| {
                junction.links.iter().zip(&phase.mu).find_map(|(&l, &mu)| {
                    let to = net.links[l.0].to;
                    let workable = mu > 0 && state.queue(l) > 0.0 && totals[to.0] < f64::from(net.capacity(to));
                    workable.then_some((PhaseIdx(p), l))
                })
            });
            AuditEntry {
                junction: JunctionIdx(j),
                phase: decision.phase,
                violated: served == 0.0 && witness.is_some(),
                witness,
            }
        })
        .collect()
}
