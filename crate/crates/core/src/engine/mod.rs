//! Simulation loop, metrics, built-in fixtures and seeded sweeps.
//!
//! Each slot `k` runs: controllers decide on the slot-start state, arrivals
//! are drawn, the dynamics step applies blocking flows and routing, the
//! work-conservation audit inspects what happened, and one [`MetricsRow`] is
//! recorded describing the state at the end of the slot.
//!
//! Arrivals and routing draw from two independent ChaCha streams derived from
//! the scenario seed, so the exogenous demand is identical across controllers
//! for a given seed.

mod explain;
mod fixtures;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{
    decide_all, work_conservation_audit, ControllerConfig, ControllerKind, CycleStep, DEFAULT_TIE_EPSILON,
};
use crate::dynamics::{
    sample_arrivals, step, ArrivalKind, ArrivalProcess, DynamicsOptions, Mode, Profile, QueueState, RoutingTable,
};
use crate::error::{Error, Result};
use crate::pressure::{PressureFunction, PressureParams};
use crate::topology::{JunctionIdx, Network, NetworkTopology};

pub use explain::{explain, Explanation, MovementWeight, NodePressure, PhaseObjective};
pub use fixtures::{fixture_deadlock_ring, fixture_theorem1};
pub use sweep::{sweep, write_sweep_csv, SweepCell, SweepSpec, SWEEP_CSV_HEADER};

/// Exogenous demand keyed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub kind: ArrivalKind,
    /// `lambda_a` per node; absent nodes get no arrivals.
    pub rates: BTreeMap<String, f64>,
    /// Global demand scale applied on top of `rates` and the profile.
    pub multiplier: f64,
    pub batch: u32,
    pub profile: Option<Profile>,
}

impl Default for ArrivalSpec {
    fn default() -> Self {
        ArrivalSpec {
            kind: ArrivalKind::Poisson,
            rates: BTreeMap::new(),
            multiplier: 1.0,
            batch: 1,
            profile: None,
        }
    }
}

/// Per-junction exception to the scenario-wide controller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ControllerKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<CycleStep>>,
}

fn linear() -> PressureFunction {
    PressureFunction::Linear
}

fn default_tie_epsilon() -> f64 {
    DEFAULT_TIE_EPSILON
}

fn yes() -> bool {
    true
}

/// Controller settings for the whole network. Parameters for every kind are
/// kept so a run can switch kinds without editing the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerPlan {
    pub kind: ControllerKind,
    #[serde(default = "default_tie_epsilon")]
    pub tie_epsilon: f64,
    #[serde(default = "yes")]
    pub tie_break: bool,
    /// Pressure used by the back-pressure kind.
    #[serde(default = "linear")]
    pub pressure: PressureFunction,
    /// Normalized-pressure parameters used by the capacity-aware kind.
    #[serde(default)]
    pub normalized: PressureParams,
    /// Fixed-cycle program; defaults to every phase once, in declaration order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<CycleStep>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub junctions: BTreeMap<String, JunctionOverride>,
}

impl ControllerPlan {
    pub fn new(kind: ControllerKind) -> Self {
        ControllerPlan {
            kind,
            tie_epsilon: DEFAULT_TIE_EPSILON,
            tie_break: true,
            pressure: PressureFunction::Linear,
            normalized: PressureParams::default(),
            cycle: None,
            junctions: BTreeMap::new(),
        }
    }

    /// Resolves one checked config per junction.
    pub fn configs(&self, net: &Network) -> Result<Vec<ControllerConfig>> {
        for id in self.junctions.keys() {
            if net.junction(id).is_none() {
                return Err(Error::config(format!(
                    "controller override for unknown junction `{id}`"
                )));
            }
        }
        net.junctions
            .iter()
            .enumerate()
            .map(|(j, junction)| {
                let ov = self.junctions.get(&junction.id);
                let kind = ov.and_then(|o| o.kind).unwrap_or(self.kind);
                let cycle = ov
                    .and_then(|o| o.cycle.clone())
                    .or_else(|| self.cycle.clone())
                    .unwrap_or_else(|| {
                        junction
                            .phases
                            .iter()
                            .map(|p| CycleStep {
                                phase: p.id.clone(),
                                slots: 1,
                            })
                            .collect()
                    });
                let pressure = match kind {
                    ControllerKind::CapacityAware => PressureFunction::Normalized(self.normalized),
                    _ => self.pressure,
                };
                let config = ControllerConfig {
                    kind,
                    pressure,
                    cycle,
                    tie_epsilon: self.tie_epsilon,
                    tie_break: self.tie_break,
                };
                config.check(net, &[JunctionIdx(j)])?;
                Ok(config)
            })
            .collect()
    }
}

/// Vehicles present at slot 0 on movement `from -> to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialQueue {
    pub from: String,
    pub to: String,
    #[serde(rename = "Q")]
    pub count: f64,
}

fn default_slot_seconds() -> f64 {
    15.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// Number of slots `K`.
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_slot_seconds")]
    pub slot_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_derating: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inflow_capping: bool,
}

impl RunSettings {
    pub fn new(horizon: u64) -> Self {
        RunSettings {
            horizon,
            seed: 0,
            mode: Mode::Integer,
            slot_seconds: default_slot_seconds(),
            service_derating: None,
            inflow_capping: false,
        }
    }

    pub fn dynamics(&self) -> DynamicsOptions {
        DynamicsOptions {
            service_derating: self.service_derating,
            inflow_capping: self.inflow_capping,
        }
    }
}

/// Number of whole slots covering `seconds`.
pub fn slots_for(seconds: f64, slot_seconds: f64) -> u64 {
    (seconds / slot_seconds).ceil() as u64
}

/// A fully resolved simulation: explicit topology, rates and routing ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub topology: NetworkTopology,
    pub arrivals: ArrivalSpec,
    /// `r_ab` keyed by origin then destination node id.
    pub routing: BTreeMap<String, BTreeMap<String, f64>>,
    pub controllers: ControllerPlan,
    pub initial: Vec<InitialQueue>,
    pub run: RunSettings,
}

/// Index-based form of a scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub network: Network,
    pub arrivals: ArrivalProcess,
    pub routing: RoutingTable,
    pub configs: Vec<ControllerConfig>,
    pub initial: QueueState,
}

impl Scenario {
    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controllers.kind = kind;
        self.controllers.junctions.retain(|_, o| {
            o.kind = None;
            o.cycle.is_some()
        });
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.run.horizon = horizon;
        self
    }

    /// Scales the demand by `factor` on top of the current multiplier.
    pub fn with_demand_scale(mut self, factor: f64) -> Self {
        self.arrivals.multiplier *= factor;
        self
    }

    /// Content hash of the resolved scenario (hex SHA-256).
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn compile(&self) -> Result<CompiledScenario> {
        let network = Network::new(&self.topology)?;
        let run = &self.run;
        if run.horizon < 1 {
            return Err(Error::config("run.horizon must be >= 1"));
        }
        if !(run.slot_seconds > 0.0) || !run.slot_seconds.is_finite() {
            return Err(Error::config("run.slot_seconds must be positive"));
        }
        if let Some(d) = run.service_derating {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::config(format!(
                    "run.service_derating must lie in (0, 1], got {d}"
                )));
            }
        }

        let a = &self.arrivals;
        if !(a.multiplier >= 0.0) || !a.multiplier.is_finite() {
            return Err(Error::config(format!(
                "arrivals.multiplier must be >= 0, got {}",
                a.multiplier
            )));
        }
        if a.batch < 1 {
            return Err(Error::config("arrivals.batch must be >= 1"));
        }
        if a.kind == ArrivalKind::DeterministicFluid && run.mode == Mode::Integer {
            return Err(Error::config("deterministic-fluid arrivals need run.mode = \"fluid\""));
        }
        if let Some(p) = &a.profile {
            p.check()?;
        }
        let mut rates = vec![0.0; network.nodes.len()];
        for (id, &rate) in &a.rates {
            let n = network
                .node(id)
                .ok_or_else(|| Error::config(format!("arrivals: unknown node `{id}`")))?;
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::config(format!("arrivals: node `{id}` has invalid rate {rate}")));
            }
            rates[n.0] = rate * a.multiplier;
        }
        let arrivals = ArrivalProcess {
            kind: a.kind,
            rates,
            batch: a.batch,
            profile: a.profile.clone(),
        };

        let mut rows = vec![Vec::new(); network.nodes.len()];
        for (from, dests) in &self.routing {
            let a = network
                .node(from)
                .ok_or_else(|| Error::config(format!("routing: unknown node `{from}`")))?;
            for (to, &r) in dests {
                let b = network
                    .node(to)
                    .ok_or_else(|| Error::config(format!("routing: unknown node `{to}`")))?;
                let l = network
                    .link(a, b)
                    .ok_or_else(|| Error::config(format!("routing: no link `{from}` -> `{to}`")))?;
                rows[a.0].push((l, r));
            }
        }
        let routing = RoutingTable::new(&network, rows)?;

        let configs = self.controllers.configs(&network)?;

        let mut initial = QueueState::empty(&network);
        for q in &self.initial {
            let l = network
                .link_by_ids(&q.from, &q.to)
                .ok_or_else(|| Error::config(format!("initial: no link `{}` -> `{}`", q.from, q.to)))?;
            if !(q.count >= 0.0) || (run.mode == Mode::Integer && q.count.fract() != 0.0) {
                return Err(Error::config(format!(
                    "initial: queue {}->{} must be a non-negative {}, got {}",
                    q.from,
                    q.to,
                    if run.mode == Mode::Integer { "integer" } else { "number" },
                    q.count
                )));
            }
            initial.add(l, 0, q.count);
        }

        Ok(CompiledScenario {
            network,
            arrivals,
            routing,
            configs,
            initial,
        })
    }
}

/// Metrics at the end of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub slot: u64,
    /// Vehicles in the network after the slot.
    pub total_queue: f64,
    /// Mean time since network entry over vehicles still in the network.
    pub avg_time_spent_slots: f64,
    pub avg_time_spent_seconds: f64,
    pub served_flow: f64,
    pub arrivals: f64,
    pub exits: f64,
    /// Junctions flagged by the work-conservation audit.
    pub wc_violations: u32,
}

pub const TRACE_CSV_HEADER: &str =
    "slot,total_queue,avg_time_spent_slots,avg_time_spent_seconds,served_flow,arrivals,exits,wc_violations";

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRecord {
    pub slot: u64,
    pub junction: String,
    /// Phase that was applied.
    pub phase: String,
    /// A phase that could have served someone.
    pub workable_phase: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub fingerprint: String,
    pub controller: ControllerKind,
    pub rows: Vec<MetricsRow>,
    pub final_state: QueueState,
    /// Final `Q_a` per node id.
    pub final_node_totals: BTreeMap<String, f64>,
    /// Exogenous arrivals that joined an already-full node, per node id.
    pub arrivals_beyond_capacity: BTreeMap<String, f64>,
    pub violations: Vec<ViolationRecord>,
}

impl SimulationTrace {
    /// Time average of `total_queue` over all rows.
    pub fn mean_total_queue(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.total_queue).sum::<f64>() / self.rows.len() as f64
    }

    pub fn total_violations(&self) -> u64 {
        self.rows.iter().map(|r| u64::from(r.wc_violations)).sum()
    }

    pub fn mean_avg_time_spent_seconds(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.avg_time_spent_seconds).sum::<f64>() / self.rows.len() as f64
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// Writes the per-slot rows as CSV with [`TRACE_CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.slot.to_string(),
                r.total_queue.to_string(),
                r.avg_time_spent_slots.to_string(),
                r.avg_time_spent_seconds.to_string(),
                r.served_flow.to_string(),
                r.arrivals.to_string(),
                r.exits.to_string(),
                r.wc_violations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Seeds for the two random streams of a run.
pub(crate) fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
    arrivals.set_stream(1);
    let mut routing = ChaCha8Rng::seed_from_u64(seed);
    routing.set_stream(2);
    (arrivals, routing)
}

/// Simulates `scenario.run.horizon` slots.
pub fn run(scenario: &Scenario) -> Result<SimulationTrace> {
    let compiled = scenario.compile()?;
    run_compiled(scenario, &compiled, |_, _| {})
}

/// Like [`run`], calling `observe(slot, state)` with each slot-start state.
pub fn run_compiled(
    scenario: &Scenario,
    compiled: &CompiledScenario,
    mut observe: impl FnMut(u64, &QueueState),
) -> Result<SimulationTrace> {
    let CompiledScenario {
        network: net,
        arrivals,
        routing,
        configs,
        initial,
    } = compiled;
    let settings = &scenario.run;
    let opts = settings.dynamics();
    let (mut arrival_rng, mut routing_rng) = run_rngs(settings.seed);

    let mut state = initial.clone();
    let mut rows = Vec::with_capacity(settings.horizon as usize);
    let mut violations = Vec::new();
    let mut beyond = vec![0.0; net.nodes.len()];

    for k in 0..settings.horizon {
        observe(k, &state);
        let decisions = decide_all(&state, net, configs, k)?;
        let phases: Vec<_> = decisions.iter().map(|d| d.phase).collect();
        let demand = sample_arrivals(arrivals, k, &mut arrival_rng);
        let out = step(
            &state,
            net,
            &phases,
            &demand,
            routing,
            settings.mode,
            &opts,
            &mut routing_rng,
        )?;
        let audit = work_conservation_audit(&state, net, &decisions, &out.flows);

        let mut flagged = 0;
        for entry in audit.iter().filter(|a| a.violated) {
            flagged += 1;
            let junction = &net.junctions[entry.junction.0];
            violations.push(ViolationRecord {
                slot: k,
                junction: junction.id.clone(),
                phase: junction.phases[entry.phase.0].id.clone(),
                workable_phase: entry
                    .witness
                    .map(|w| junction.phases[w.0 .0].id.clone())
                    .unwrap_or_default(),
            });
        }
        for (b, x) in beyond.iter_mut().zip(&out.arrivals_beyond_capacity) {
            *b += x;
        }

        let avg = out.next.average_time_spent();
        rows.push(MetricsRow {
            slot: k,
            total_queue: out.next.total(),
            avg_time_spent_slots: avg,
            avg_time_spent_seconds: avg * settings.slot_seconds,
            served_flow: out.flows.total(),
            arrivals: out.arrivals,
            exits: out.exits,
            wc_violations: flagged,
        });
        state = out.next;
    }

    let totals = state.node_totals(net);
    Ok(SimulationTrace {
        fingerprint: scenario.fingerprint(),
        controller: scenario.controllers.kind,
        rows,
        final_node_totals: net.nodes.iter().zip(&totals).map(|(n, &t)| (n.id.clone(), t)).collect(),
        arrivals_beyond_capacity: net
            .nodes
            .iter()
            .zip(&beyond)
            .filter(|(_, &b)| b > 0.0)
            .map(|(n, &b)| (n.id.clone(), b))
            .collect(),
        final_state: state,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{JunctionSpec, LinkSpec, NodeSpec, PhaseSpec, ServiceRate};

    /// a -> b through one junction with service `mu`; b is a sink.
    pub(crate) fn feeder(lambda: f64, mu: u32, kind: ArrivalKind) -> Scenario {
        Scenario {
            name: "feeder".into(),
            topology: NetworkTopology {
                nodes: vec![
                    NodeSpec {
                        id: "a".into(),
                        capacity: 100,
                        boundary: true,
                    },
                    NodeSpec {
                        id: "b".into(),
                        capacity: 100,
                        boundary: false,
                    },
                ],
                links: vec![LinkSpec {
                    from: "a".into(),
                    to: "b".into(),
                    junction: "J".into(),
                }],
                junctions: vec![JunctionSpec {
                    id: "J".into(),
                    inputs: vec!["a".into()],
                    outputs: vec!["b".into()],
                    phases: vec![PhaseSpec {
                        id: "go".into(),
                        mu: vec![ServiceRate {
                            from: "a".into(),
                            to: "b".into(),
                            mu,
                        }],
                    }],
                }],
            },
            arrivals: ArrivalSpec {
                kind,
                rates: [("a".to_string(), lambda)].into(),
                ..ArrivalSpec::default()
            },
            routing: [("a".to_string(), [("b".to_string(), 1.0)].into())].into(),
            controllers: ControllerPlan::new(ControllerKind::BackPressure),
            initial: vec![],
            run: RunSettings::new(100),
        }
    }

    #[test]
    fn single_empty_slot() {
        let s = feeder(0.0, 2, ArrivalKind::Poisson).with_horizon(1);
        let t = run(&s).unwrap();
        assert_eq!(t.rows.len(), 1);
        let r = t.rows[0];
        assert_eq!(
            (
                r.total_queue,
                r.avg_time_spent_slots,
                r.served_flow,
                r.arrivals,
                r.exits,
                r.wc_violations
            ),
            (0.0, 0.0, 0.0, 0.0, 0.0, 0)
        );
    }

    #[test]
    fn stable_feeder_stays_bounded() {
        let s = feeder(1.0, 2, ArrivalKind::Poisson).with_horizon(20_000).with_seed(11);
        let t = run(&s).unwrap();
        // service 2 against Poisson(1): the queue is positive recurrent and
        // reaches dozens only with vanishing probability
        let worst = t.rows.iter().map(|r| r.total_queue).fold(0.0, f64::max);
        assert!(worst < 25.0, "max queue {worst}");
        assert!(t.mean_total_queue() < 3.0, "{}", t.mean_total_queue());
    }

    #[test]
    fn fifo_waiting_profile() {
        // one vehicle per slot, service one per slot: each arrival waits one slot
        let mut s = feeder(1.0, 1, ArrivalKind::DeterministicFluid).with_horizon(6);
        s.run.mode = Mode::Fluid;
        let t = run(&s).unwrap();
        for r in &t.rows {
            // only the vehicle that arrived this slot is in the network, entered one slot ago
            assert!((r.total_queue - 1.0).abs() < 1e-12);
            assert!((r.avg_time_spent_slots - 1.0).abs() < 1e-12);
            assert!((r.avg_time_spent_seconds - 15.0).abs() < 1e-9);
        }

        // slower service: backlog grows by one every two slots, ages spread out
        let mut s = feeder(2.0, 1, ArrivalKind::DeterministicFluid).with_horizon(3);
        s.run.mode = Mode::Fluid;
        let t = run(&s).unwrap();
        // end of slot 0: two vehicles aged 1
        // end of slot 1: one from slot 0 (age 2) + two new (age 1)
        // end of slot 2: two from slot 1 (age 2) + two new (age 1)
        let expected = [(2.0, 1.0), (3.0, 4.0 / 3.0), (4.0, 1.5)];
        for (r, (q, age)) in t.rows.iter().zip(expected) {
            assert!((r.total_queue - q).abs() < 1e-12, "{r:?}");
            assert!((r.avg_time_spent_slots - age).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn three_hours_of_fifteen_second_slots() {
        assert_eq!(slots_for(3.0 * 3600.0, 15.0), 720);
        let s = feeder(0.5, 2, ArrivalKind::Poisson).with_horizon(slots_for(10_800.0, 15.0));
        assert_eq!(run(&s).unwrap().rows.len(), 720);
    }

    #[test]
    fn runs_are_reproducible() {
        let s = feeder(1.5, 2, ArrivalKind::Poisson).with_seed(3);
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.fingerprint, b.fingerprint);
        assert_ne!(a.fingerprint, s.clone().with_seed(4).fingerprint());
    }

    #[test]
    fn csv_header_and_rows() {
        let s = feeder(0.0, 2, ArrivalKind::Poisson).with_horizon(2);
        let csv = run(&s).unwrap().to_csv_string();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_CSV_HEADER);
        assert_eq!(lines[1], "0,0,0,0,0,0,0,0");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn compile_rejects_bad_settings() {
        let base = feeder(1.0, 2, ArrivalKind::Poisson);
        assert!(base.clone().with_horizon(0).compile().is_err());

        let mut s = base.clone();
        s.arrivals.kind = ArrivalKind::DeterministicFluid;
        assert!(s.compile().is_err());

        let mut s = base.clone();
        s.routing.get_mut("a").unwrap().insert("b".into(), 1.2);
        assert!(s.compile().unwrap_err().to_string().contains("`a`"));

        let mut s = base.clone();
        s.initial.push(InitialQueue {
            from: "b".into(),
            to: "a".into(),
            count: 1.0,
        });
        assert!(s.compile().is_err());

        let mut s = base.clone();
        s.initial.push(InitialQueue {
            from: "a".into(),
            to: "b".into(),
            count: 1.5,
        });
        assert!(s.compile().is_err());

        let mut s = base.clone();
        s.controllers
            .junctions
            .insert("nope".into(), JunctionOverride::default());
        assert!(s.compile().is_err());

        let mut s = base.with_controller(ControllerKind::CapacityAware);
        s.controllers.normalized.c_infinity = 50.0;
        assert!(s.compile().is_err());
    }

    #[test]
    fn controller_switch_keeps_cycle_overrides() {
        let mut s = feeder(1.0, 2, ArrivalKind::Poisson);
        s.controllers.junctions.insert(
            "J".into(),
            JunctionOverride {
                kind: Some(ControllerKind::FixedCycle),
                cycle: None,
            },
        );
        let switched = s.with_controller(ControllerKind::CapacityAware);
        assert!(switched.controllers.junctions.is_empty());
        let configs = switched.compile().unwrap().configs;
        assert_eq!(configs[0].kind, ControllerKind::CapacityAware);
    }
}
