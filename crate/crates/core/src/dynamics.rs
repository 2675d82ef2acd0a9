//! One simulation slot.
//!
//! With `Q_ab` the vehicles at node `a` waiting to move to `b`, a slot does:
//!
//! ```text
//! f_ab      = delta(Q_b, C_b) * min(Q_ab, mu_ab(phase))      delta(q, c) = [q < c]
//! Q_ab(k+1) = Q_ab - f_ab + r_ab * (sum_c f_ca + A_a)
//! ```
//!
//! Blocking is judged on the slot-start state only, so several upstream
//! movements may jointly overfill a node within one slot. Exogenous arrivals
//! are enqueued even at a full node. Vehicles entering a node are split over
//! its outgoing queues by routing ratios; the leftover mass `1 - sum_b r_ab`
//! leaves the network there.
//!
//! Each queue also keeps the network-entry slot of its vehicles, grouped into
//! cohorts ordered by entry slot. Departures remove the oldest entries first
//! and vehicles keep their entry slot across hops.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{LinkIdx, Network, NodeIdx, PhaseIdx};

/// Queue semantics: whole vehicles with sampled routing, or real-valued
/// flows with proportional routing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Integer,
    Fluid,
}

/// Cohorts at or below this size are dropped in fluid mode.
const FLUID_DUST: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    slot: u64,
    /// `Q_ab` per link.
    counts: Vec<f64>,
    /// Per link: network-entry slot -> number of vehicles.
    cohorts: Vec<BTreeMap<u64, f64>>,
}

impl QueueState {
    pub fn empty(net: &Network) -> Self {
        QueueState {
            slot: 0,
            counts: vec![0.0; net.links.len()],
            cohorts: vec![BTreeMap::new(); net.links.len()],
        }
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn queue(&self, l: LinkIdx) -> f64 {
        self.counts[l.0]
    }

    pub fn queues(&self) -> &[f64] {
        &self.counts
    }

    /// `Q_a = sum_b Q_ab`.
    pub fn node_total(&self, net: &Network, n: NodeIdx) -> f64 {
        net.nodes[n.0]
            .out_links
            .iter()
            .fold(0.0, |acc, l| acc + self.counts[l.0])
    }

    pub fn node_totals(&self, net: &Network) -> Vec<f64> {
        let mut totals = vec![0.0; net.nodes.len()];
        for (l, link) in net.links.iter().enumerate() {
            totals[link.from.0] += self.counts[l];
        }
        totals
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().fold(0.0, |acc, q| acc + q)
    }

    /// Enqueues `amount` vehicles on link `l` that entered the network at `entry_slot`.
    pub fn add(&mut self, l: LinkIdx, entry_slot: u64, amount: f64) {
        if amount <= 0.0 {
            return;
        }
        self.counts[l.0] += amount;
        *self.cohorts[l.0].entry(entry_slot).or_insert(0.0) += amount;
    }

    /// `(entry slot, vehicles)` groups of link `l`, oldest first.
    pub fn cohorts(&self, l: LinkIdx) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.cohorts[l.0].iter().map(|(&k, &v)| (k, v))
    }

    /// Entry slot of every queued vehicle on `l`, front to back. Integer mode only.
    pub fn entry_slots(&self, l: LinkIdx) -> Vec<u64> {
        self.cohorts(l)
            .flat_map(|(k, v)| std::iter::repeat_n(k, v.round() as usize))
            .collect()
    }

    /// Mean of `slot - entry_slot` over vehicles in the network; 0 when empty.
    pub fn average_time_spent(&self) -> f64 {
        let (mut weighted, mut vehicles) = (0.0, 0.0);
        for q in &self.cohorts {
            for (&entry, &v) in q {
                weighted += v * (self.slot - entry) as f64;
                vehicles += v;
            }
        }
        if vehicles > 0.0 {
            weighted / vehicles
        } else {
            0.0
        }
    }

    /// Removes `amount` vehicles from the front of link `l`, returning them
    /// as `(entry slot, vehicles)` groups that sum to `amount`.
    fn take_front(&mut self, l: usize, amount: f64, mode: Mode) -> Vec<(u64, f64)> {
        self.counts[l] -= amount;
        if self.counts[l] < 0.0 {
            debug_assert!(self.counts[l] > -1e-9, "queue went negative: {}", self.counts[l]);
            self.counts[l] = 0.0;
        }
        let q = &mut self.cohorts[l];
        let mut out: Vec<(u64, f64)> = Vec::new();
        let mut left = amount;
        while left > 0.0 {
            let Some(mut e) = q.first_entry() else { break };
            let avail = *e.get();
            if avail <= left {
                out.push((*e.key(), avail));
                left -= avail;
                e.remove();
            } else {
                out.push((*e.key(), left));
                *e.get_mut() -= left;
                if mode == Mode::Fluid && *e.get() <= FLUID_DUST {
                    e.remove();
                }
                left = 0.0;
            }
        }
        if left > 0.0 {
            // fluid rounding: cohorts ran dry slightly before the count did
            let key = out.last().map_or(self.slot, |c| c.0);
            out.push((key, left));
        }
        out
    }

    /// Checks the state invariants; returns a description of the first breach.
    pub fn check_invariants(&self, mode: Mode) -> std::result::Result<(), String> {
        for (l, (&q, cohorts)) in self.counts.iter().zip(&self.cohorts).enumerate() {
            if q < 0.0 {
                return Err(format!("link {l}: negative queue {q}"));
            }
            let sum: f64 = cohorts.values().sum();
            match mode {
                Mode::Integer => {
                    if q.fract() != 0.0 {
                        return Err(format!("link {l}: fractional queue {q}"));
                    }
                    if sum != q {
                        return Err(format!("link {l}: {sum} timestamps for {q} vehicles"));
                    }
                }
                Mode::Fluid => {
                    if (sum - q).abs() > 1e-9 * q.max(1.0) {
                        return Err(format!("link {l}: cohort mass {sum} vs queue {q}"));
                    }
                }
            }
            if let Some((&newest, _)) = cohorts.last_key_value() {
                if newest > self.slot {
                    return Err(format!(
                        "link {l}: entry slot {newest} after current slot {}",
                        self.slot
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `delta(q, c)`: 1 while the node has room, 0 once it is full.
#[inline]
pub fn blocking_indicator(q: f64, c: f64) -> u8 {
    u8::from(q < c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalKind {
    Poisson,
    /// `floor(lambda / batch)` batches plus one more with the fractional
    /// probability, each of `batch` vehicles.
    BernoulliBatch,
    /// The real rate itself; fluid mode only.
    DeterministicFluid,
}

/// Per-slot demand multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `values[k]`; the last value holds past the end.
    Explicit { values: Vec<f64> },
    /// `base` outside `[start, end]`, rising linearly to `top` at `peak`
    /// and falling back to `base` at `end`.
    Triangular {
        start: u64,
        peak: u64,
        end: u64,
        base: f64,
        top: f64,
    },
}

impl Profile {
    pub fn factor(&self, k: u64) -> f64 {
        match self {
            Profile::Explicit { values } => match values.get(k as usize) {
                Some(&v) => v,
                None => values.last().copied().unwrap_or(1.0),
            },
            &Profile::Triangular {
                start,
                peak,
                end,
                base,
                top,
            } => {
                if k < start || k > end {
                    base
                } else if k <= peak {
                    let span = (peak - start).max(1) as f64;
                    base + (top - base) * (k - start) as f64 / span
                } else {
                    let span = (end - peak).max(1) as f64;
                    base + (top - base) * (end - k) as f64 / span
                }
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Profile::Explicit { values } => {
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::config("profile values must be finite and non-negative"));
                }
            }
            &Profile::Triangular {
                start,
                peak,
                end,
                base,
                top,
            } => {
                if !(start <= peak && peak <= end) {
                    return Err(Error::config("triangular profile needs start <= peak <= end"));
                }
                if !(base >= 0.0 && top >= 0.0) || !base.is_finite() || !top.is_finite() {
                    return Err(Error::config("triangular profile levels must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Exogenous demand: rate `lambda_a` per node and slot, scaled by the
/// optional profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    pub kind: ArrivalKind,
    /// `lambda_a`, indexed by node.
    pub rates: Vec<f64>,
    pub batch: u32,
    pub profile: Option<Profile>,
}

impl ArrivalProcess {
    pub fn none(net: &Network) -> Self {
        ArrivalProcess {
            kind: ArrivalKind::Poisson,
            rates: vec![0.0; net.nodes.len()],
            batch: 1,
            profile: None,
        }
    }

    pub fn rate(&self, node: usize, k: u64) -> f64 {
        let f = self.profile.as_ref().map_or(1.0, |p| p.factor(k));
        self.rates[node] * f
    }
}

/// Draws `A_a(k)` for every node.
pub fn sample_arrivals(process: &ArrivalProcess, k: u64, rng: &mut impl Rng) -> Vec<f64> {
    (0..process.rates.len())
        .map(|a| {
            let lambda = process.rate(a, k);
            if !(lambda > 0.0) {
                return 0.0;
            }
            match process.kind {
                ArrivalKind::DeterministicFluid => lambda,
                ArrivalKind::Poisson => Poisson::new(lambda).expect("positive finite rate").sample(rng).round(),
                ArrivalKind::BernoulliBatch => {
                    let batch = f64::from(process.batch.max(1));
                    let batches = lambda / batch;
                    let extra = rng.random_bool(batches.fract().clamp(0.0, 1.0));
                    (batches.floor() + f64::from(u8::from(extra))) * batch
                }
            }
        })
        .collect()
}

/// Validated routing ratios: for each node, `(outgoing link, r_ab)` pairs
/// with `sum_b r_ab <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    rows: Vec<Vec<(LinkIdx, f64)>>,
}

/// Slack allowed on `sum_b r_ab <= 1`.
const ROUTING_SLACK: f64 = 1e-12;

impl RoutingTable {
    /// Every vehicle leaves at the node it enters.
    pub fn exit_everywhere(net: &Network) -> Self {
        RoutingTable {
            rows: vec![Vec::new(); net.nodes.len()],
        }
    }

    pub fn new(net: &Network, rows: Vec<Vec<(LinkIdx, f64)>>) -> Result<Self> {
        if rows.len() != net.nodes.len() {
            return Err(Error::config(format!(
                "routing has {} rows for {} nodes",
                rows.len(),
                net.nodes.len()
            )));
        }
        for (a, row) in rows.iter().enumerate() {
            let id = &net.nodes[a].id;
            let mut sum = 0.0;
            for &(l, r) in row {
                let link = net
                    .links
                    .get(l.0)
                    .ok_or_else(|| Error::config(format!("node `{id}`: unknown link {}", l.0)))?;
                if link.from.0 != a {
                    return Err(Error::config(format!(
                        "node `{id}`: routing to `{}` without a link from `{id}`",
                        net.nodes[link.to.0].id
                    )));
                }
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::config(format!("node `{id}`: routing ratio {r} outside [0, 1]")));
                }
                sum += r;
            }
            if sum > 1.0 + ROUTING_SLACK {
                return Err(Error::config(format!("node `{id}`: routing ratios sum to {sum} > 1")));
            }
        }
        Ok(RoutingTable { rows })
    }

    pub fn row(&self, n: NodeIdx) -> &[(LinkIdx, f64)] {
        &self.rows[n.0]
    }

    /// `1 - sum_b r_ab`.
    pub fn exit_rate(&self, n: NodeIdx) -> f64 {
        (1.0 - self.rows[n.0].iter().map(|r| r.1).sum::<f64>()).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedInflow {
    pub increments: Vec<(LinkIdx, f64)>,
    pub exits: f64,
}

/// Splits `inflow` vehicles entering `node` over its outgoing queues and the
/// exit. Integer mode samples a multinomial; fluid mode splits
/// proportionally. Increments and exits always sum to `inflow`.
pub fn route_inflow(
    routing: &RoutingTable,
    node: NodeIdx,
    inflow: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> RoutedInflow {
    let row = routing.row(node);
    if inflow <= 0.0 {
        return RoutedInflow {
            increments: row.iter().map(|&(l, _)| (l, 0.0)).collect(),
            exits: 0.0,
        };
    }
    match mode {
        Mode::Fluid => {
            let increments: Vec<(LinkIdx, f64)> = row.iter().map(|&(l, r)| (l, inflow * r)).collect();
            let routed: f64 = increments.iter().map(|i| i.1).sum();
            RoutedInflow {
                increments,
                exits: (inflow - routed).max(0.0),
            }
        }
        Mode::Integer => {
            let mut left = inflow.round() as u64;
            let mut mass = 1.0;
            let mut increments = Vec::with_capacity(row.len());
            for &(l, r) in row {
                let drawn = if left == 0 || r <= 0.0 {
                    0
                } else if r >= mass {
                    left
                } else {
                    Binomial::new(left, (r / mass).clamp(0.0, 1.0))
                        .expect("valid binomial")
                        .sample(rng)
                };
                increments.push((l, drawn as f64));
                left -= drawn;
                mass -= r;
            }
            RoutedInflow {
                increments,
                exits: left as f64,
            }
        }
    }
}

/// Optional deviations from the plain slot model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsOptions {
    /// Multiplies every service rate (floored in integer mode), e.g. `11/15`
    /// to account for a 4 s amber interval in a 15 s slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_derating: Option<f64>,
    /// Caps the total inflow into a node at its free space at slot start.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inflow_capping: bool,
}

/// Yellow-time derating for a 15 s slot with 4 s of amber.
pub const AMBER_DERATING: f64 = 11.0 / 15.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRealization {
    /// `f_ab` per link.
    pub flows: Vec<f64>,
    /// Set when a full destination suppressed a movement that had both
    /// service and waiting vehicles.
    pub blocked: Vec<bool>,
}

impl FlowRealization {
    pub fn total(&self) -> f64 {
        self.flows.iter().fold(0.0, |acc, f| acc + f)
    }

    pub fn flow(&self, l: LinkIdx) -> f64 {
        self.flows[l.0]
    }
}

/// Evaluates the blocking flow of every junction link against the slot-start state.
pub fn compute_flows(
    state: &QueueState,
    net: &Network,
    phases: &[PhaseIdx],
    mode: Mode,
    opts: &DynamicsOptions,
) -> Result<FlowRealization> {
    if phases.len() != net.junctions.len() {
        return Err(Error::config(format!(
            "{} phases given for {} junctions",
            phases.len(),
            net.junctions.len()
        )));
    }
    let totals = state.node_totals(net);
    let mut flows = vec![0.0; net.links.len()];
    let mut blocked = vec![false; net.links.len()];

    for (j, (junction, &p)) in net.junctions.iter().zip(phases).enumerate() {
        let phase = junction.phases.get(p.0).ok_or_else(|| {
            Error::config(format!(
                "junction `{}` (#{j}): unknown phase index {}",
                junction.id, p.0
            ))
        })?;
        for (&l, &mu) in junction.links.iter().zip(&phase.mu) {
            let mut service = f64::from(mu);
            if let Some(d) = opts.service_derating {
                service *= d;
                if mode == Mode::Integer {
                    service = service.floor();
                }
            }
            let link = net.links[l.0];
            let q = state.counts[l.0];
            let dest = totals[link.to.0];
            let cap = f64::from(net.capacity(link.to));
            if blocking_indicator(dest, cap) == 1 {
                flows[l.0] = q.min(service);
            } else if mu > 0 && q > 0.0 {
                blocked[l.0] = true;
            }
        }
    }

    if opts.inflow_capping {
        cap_inflows(net, &totals, &mut flows, mode);
    }

    Ok(FlowRealization { flows, blocked })
}

/// Scales the inflows of every node down to its free space.
fn cap_inflows(net: &Network, totals: &[f64], flows: &mut [f64], mode: Mode) {
    for (b, node) in net.nodes.iter().enumerate() {
        let space = (f64::from(node.capacity) - totals[b]).max(0.0);
        let wanted: f64 = node.in_links.iter().map(|l| flows[l.0]).sum();
        if wanted <= space {
            continue;
        }
        let scale = space / wanted;
        match mode {
            Mode::Fluid => {
                for l in &node.in_links {
                    flows[l.0] *= scale;
                }
            }
            Mode::Integer => {
                let mut granted = 0.0;
                let mut remainders: Vec<(f64, usize)> = Vec::new();
                for l in &node.in_links {
                    let exact = flows[l.0] * scale;
                    let whole = exact.floor();
                    granted += whole;
                    remainders.push((exact - whole, l.0));
                    flows[l.0] = whole;
                }
                // largest remainder first, lower link index on ties
                remainders.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                let mut spare = (space.floor() - granted) as usize;
                for (frac, l) in remainders {
                    if spare == 0 || frac <= 0.0 {
                        break;
                    }
                    flows[l] += 1.0;
                    spare -= 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: QueueState,
    pub flows: FlowRealization,
    pub arrivals: f64,
    pub exits: f64,
    /// Exogenous arrivals that landed on a node already full at slot start, per node.
    pub arrivals_beyond_capacity: Vec<f64>,
}

/// Advances the state by one slot.
///
/// `arrivals` is `A_a(k)` per node (see [`sample_arrivals`]); `rng` drives
/// routing draws only.
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &QueueState,
    net: &Network,
    phases: &[PhaseIdx],
    arrivals: &[f64],
    routing: &RoutingTable,
    mode: Mode,
    opts: &DynamicsOptions,
    rng: &mut impl Rng,
) -> Result<StepOutcome> {
    if arrivals.len() != net.nodes.len() {
        return Err(Error::config(format!(
            "{} arrival counts given for {} nodes",
            arrivals.len(),
            net.nodes.len()
        )));
    }
    let flows = compute_flows(state, net, phases, mode, opts)?;
    let totals = state.node_totals(net);
    let mut next = state.clone();

    // vehicles entering each node this slot, grouped by network-entry slot
    let mut inflow: Vec<BTreeMap<u64, f64>> = vec![BTreeMap::new(); net.nodes.len()];
    for (l, &f) in flows.flows.iter().enumerate() {
        if f > 0.0 {
            let to = net.links[l].to.0;
            for (entry, v) in next.take_front(l, f, mode) {
                *inflow[to].entry(entry).or_insert(0.0) += v;
            }
        }
    }

    let mut beyond = vec![0.0; net.nodes.len()];
    for (a, &n) in arrivals.iter().enumerate() {
        if n > 0.0 {
            *inflow[a].entry(state.slot).or_insert(0.0) += n;
            if blocking_indicator(totals[a], f64::from(net.nodes[a].capacity)) == 0 {
                beyond[a] = n;
            }
        }
    }

    let mut exits = 0.0;
    for (a, groups) in inflow.into_iter().enumerate() {
        for (entry, v) in groups {
            let routed = route_inflow(routing, NodeIdx(a), v, mode, rng);
            for (l, inc) in routed.increments {
                next.add(l, entry, inc);
            }
            exits += routed.exits;
        }
    }
    next.slot += 1;

    Ok(StepOutcome {
        next,
        flows,
        arrivals: arrivals.iter().fold(0.0, |acc, a| acc + a),
        exits,
        arrivals_beyond_capacity: beyond,
    })
}
