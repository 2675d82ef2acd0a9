//! The on-disk scenario format (TOML, versioned).
//!
//! A [`ScenarioDocument`] is what a file contains: the topology is either
//! listed inline or produced by a `grid` directive, arrival rates may be given
//! per boundary node in bulk, and routing may use turning ratios. Resolving a
//! document yields an explicit [`Scenario`]. See `docs/scenario-format.md` for
//! the schema.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ArrivalKind, Mode, Profile};
use crate::engine::{ArrivalSpec, ControllerPlan, InitialQueue, RunSettings, Scenario};
use crate::topology::{
    generate_grid, validate_topology, GridParams, Heading, JunctionSpec, LinkSpec, Network, NetworkTopology, NodeSpec,
    Turn,
};

pub const SCHEMA_VERSION: u32 = 1;

/// One problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    /// Dotted path of the offending field, e.g. `routing.r.b`.
    pub path: String,
    pub message: String,
    /// 1-based position, known for syntax errors.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ScenarioError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            path: path.into(),
            message: message.into(),
            line: None,
            column: None,
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

/// Every problem found in one scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioErrors(pub Vec<ScenarioError>);

impl ScenarioErrors {
    pub fn iter(&self) -> impl Iterator<Item = &ScenarioError> {
        self.0.iter()
    }
}

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// Generate a grid instead of listing nodes, links and junctions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<LinkSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub junctions: Vec<JunctionSpec>,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    #[serde(default = "poisson")]
    pub kind: ArrivalKind,
    /// `lambda` for every boundary node without an explicit entry.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub boundary_rate: f64,
    /// Per-node `lambda` (vehicles per slot).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lambda: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub multiplier: f64,
    #[serde(default = "one_u32")]
    pub batch: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
}

fn poisson() -> ArrivalKind {
    ArrivalKind::Poisson
}

impl Default for ArrivalsSection {
    fn default() -> Self {
        ArrivalsSection {
            kind: ArrivalKind::Poisson,
            boundary_rate: 0.0,
            lambda: BTreeMap::new(),
            multiplier: 1.0,
            batch: 1,
            profile: None,
        }
    }
}

/// Share of vehicles taking each movement type at grid junctions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurningRatios {
    pub straight: f64,
    pub left: f64,
    pub right: f64,
}

impl TurningRatios {
    fn get(&self, t: Turn) -> f64 {
        match t {
            Turn::Straight => self.straight,
            Turn::Left => self.left,
            Turn::Right => self.right,
        }
    }
}

/// Relative preference for each direction of travel at grid junctions. At
/// every node the available movements share all traffic in proportion to
/// the weight of the heading they lead to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingWeights {
    pub north: f64,
    pub east: f64,
    pub south: f64,
    pub west: f64,
}

impl HeadingWeights {
    fn get(&self, h: Heading) -> f64 {
        match h {
            Heading::North => self.north,
            Heading::East => self.east,
            Heading::South => self.south,
            Heading::West => self.west,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingSection {
    /// Grid topologies only: ratios by movement type.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turning: Option<TurningRatios>,
    /// Grid topologies only: ratios by direction of travel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<HeadingWeights>,
    /// Explicit `r[a][b]` rows; a row replaces what `turning` or `heading` gave node `a`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub r: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub run: RunSettings,
    pub topology: TopologySection,
    #[serde(default)]
    pub arrivals: ArrivalsSection,
    #[serde(default)]
    pub routing: RoutingSection,
    pub controllers: ControllerPlan,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<InitialQueue>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, col)
}

/// Parses and validates a scenario file. All problems found are reported
/// together; syntax errors carry a line and column, semantic errors a field
/// path.
pub fn parse_scenario(text: &str) -> Result<ScenarioDocument, ScenarioErrors> {
    let doc: ScenarioDocument = toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => {
                let (l, c) = line_col(text, span.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ScenarioErrors(vec![ScenarioError {
            path: String::new(),
            message: e.message().trim().to_string(),
            line,
            column,
        }])
    })?;
    doc.resolve()?;
    Ok(doc)
}

/// Parses, validates and resolves in one go.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    parse_scenario(text)?.resolve()
}

/// Serializes a document to TOML.
pub fn to_text(doc: &ScenarioDocument) -> String {
    toml::to_string(doc).expect("scenario documents serialize to TOML")
}

impl ScenarioDocument {
    /// The explicit document describing an already resolved scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioDocument {
            version: SCHEMA_VERSION,
            name: s.name.clone(),
            run: s.run.clone(),
            topology: TopologySection {
                grid: None,
                nodes: s.topology.nodes.clone(),
                links: s.topology.links.clone(),
                junctions: s.topology.junctions.clone(),
            },
            arrivals: ArrivalsSection {
                kind: s.arrivals.kind,
                boundary_rate: 0.0,
                lambda: s.arrivals.rates.clone(),
                multiplier: s.arrivals.multiplier,
                batch: s.arrivals.batch,
                profile: s.arrivals.profile.clone(),
            },
            routing: RoutingSection {
                turning: None,
                heading: None,
                r: s.routing.clone(),
            },
            controllers: s.controllers.clone(),
            initial: s.initial.clone(),
        }
    }

    /// Validates every cross-reference and produces the explicit scenario.
    pub fn resolve(&self) -> Result<Scenario, ScenarioErrors> {
        let mut errs = Vec::new();
        let err = |errs: &mut Vec<ScenarioError>, path: String, msg: String| errs.push(ScenarioError::at(path, msg));

        if self.version != SCHEMA_VERSION {
            err(
                &mut errs,
                "version".into(),
                format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    self.version
                ),
            );
        }

        // topology
        let t = &self.topology;
        let inline = !(t.nodes.is_empty() && t.links.is_empty() && t.junctions.is_empty());
        let mut grid_meta = None;
        let topology = match (&t.grid, inline) {
            (Some(_), true) => {
                err(
                    &mut errs,
                    "topology".into(),
                    "give either `grid` or inline nodes/links/junctions, not both".into(),
                );
                None
            }
            (Some(g), false) => match generate_grid(g) {
                Ok(g) => {
                    grid_meta = Some((g.turns, g.headings));
                    Some(g.topology)
                }
                Err(e) => {
                    err(&mut errs, "topology.grid".into(), e.to_string());
                    None
                }
            },
            (None, _) => Some(NetworkTopology {
                nodes: t.nodes.clone(),
                links: t.links.clone(),
                junctions: t.junctions.clone(),
            }),
        };
        let network = topology.as_ref().and_then(|top| {
            let violations = validate_topology(top);
            if violations.is_empty() {
                Network::new(top).ok()
            } else {
                for v in violations {
                    err(&mut errs, "topology".into(), v.to_string());
                }
                None
            }
        });
        let Some((topology, net)) = topology.zip(network) else {
            return Err(ScenarioErrors(errs));
        };

        // run
        let run = &self.run;
        if run.horizon < 1 {
            err(&mut errs, "run.horizon".into(), "must be >= 1".into());
        }
        if !(run.slot_seconds > 0.0) || !run.slot_seconds.is_finite() {
            err(
                &mut errs,
                "run.slot_seconds".into(),
                format!("must be positive, got {}", run.slot_seconds),
            );
        }
        if let Some(d) = run.service_derating {
            if !(d > 0.0 && d <= 1.0) {
                err(
                    &mut errs,
                    "run.service_derating".into(),
                    format!("must lie in (0, 1], got {d}"),
                );
            }
        }

        // arrivals
        let a = &self.arrivals;
        if !(a.boundary_rate >= 0.0) || !a.boundary_rate.is_finite() {
            err(
                &mut errs,
                "arrivals.boundary_rate".into(),
                format!("must be >= 0, got {}", a.boundary_rate),
            );
        }
        if !(a.multiplier >= 0.0) || !a.multiplier.is_finite() {
            err(
                &mut errs,
                "arrivals.multiplier".into(),
                format!("must be >= 0, got {}", a.multiplier),
            );
        }
        if a.batch < 1 {
            err(&mut errs, "arrivals.batch".into(), "must be >= 1".into());
        }
        if a.kind == ArrivalKind::DeterministicFluid && run.mode == Mode::Integer {
            err(
                &mut errs,
                "arrivals.kind".into(),
                "deterministic-fluid arrivals need run.mode = \"fluid\"".into(),
            );
        }
        if let Some(p) = &a.profile {
            if let Err(e) = p.check() {
                err(&mut errs, "arrivals.profile".into(), e.to_string());
            }
        }
        let mut rates = BTreeMap::new();
        if a.boundary_rate > 0.0 {
            for n in topology.nodes.iter().filter(|n| n.boundary) {
                rates.insert(n.id.clone(), a.boundary_rate);
            }
        }
        for (id, &rate) in &a.lambda {
            if net.node(id).is_none() {
                err(
                    &mut errs,
                    format!("arrivals.lambda.{id}"),
                    format!("unknown node `{id}`"),
                );
            } else if !(rate >= 0.0) || !rate.is_finite() {
                err(
                    &mut errs,
                    format!("arrivals.lambda.{id}"),
                    format!("rate must be >= 0, got {rate}"),
                );
            } else {
                rates.insert(id.clone(), rate);
            }
        }

        // routing
        let mut routing: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        if self.routing.turning.is_some() && self.routing.heading.is_some() {
            err(
                &mut errs,
                "routing".into(),
                "give either `turning` or `heading`, not both".into(),
            );
        } else if let Some(hw) = &self.routing.heading {
            match &grid_meta {
                None => err(
                    &mut errs,
                    "routing.heading".into(),
                    "heading weights need a grid topology".into(),
                ),
                Some((_, headings)) => {
                    let parts = [hw.north, hw.east, hw.south, hw.west];
                    if parts.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                        err(&mut errs, "routing.heading".into(), "weights must be >= 0".into());
                    } else {
                        let mut mass: BTreeMap<&str, f64> = BTreeMap::new();
                        for ((from, _), &h) in headings {
                            *mass.entry(from.as_str()).or_default() += hw.get(h);
                        }
                        for ((from, to), &h) in headings {
                            let total = mass[from.as_str()];
                            let r = if total > 0.0 { hw.get(h) / total } else { 0.0 };
                            routing.entry(from.clone()).or_default().insert(to.clone(), r);
                        }
                    }
                }
            }
        } else if let Some(tr) = &self.routing.turning {
            match grid_meta.as_ref().map(|m| &m.0) {
                None => err(
                    &mut errs,
                    "routing.turning".into(),
                    "turning ratios need a grid topology".into(),
                ),
                Some(turns) => {
                    let parts = [tr.straight, tr.left, tr.right];
                    if parts.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                        err(&mut errs, "routing.turning".into(), "ratios must be >= 0".into());
                    } else if parts.iter().sum::<f64>() > 1.0 + 1e-12 {
                        err(&mut errs, "routing.turning".into(), "ratios sum to more than 1".into());
                    } else {
                        for ((from, to), &turn) in turns {
                            routing
                                .entry(from.clone())
                                .or_default()
                                .insert(to.clone(), tr.get(turn));
                        }
                    }
                }
            }
        }
        for (from, row) in &self.routing.r {
            let path = format!("routing.r.{from}");
            let Some(a) = net.node(from) else {
                err(&mut errs, path, format!("unknown node `{from}`"));
                continue;
            };
            let mut ok = true;
            for (to, &r) in row {
                let bad = match net.node(to) {
                    None => Some(format!("unknown node `{to}`")),
                    Some(b) if net.link(a, b).is_none() => Some(format!("no link `{from}` -> `{to}`")),
                    _ if !(0.0..=1.0).contains(&r) => Some(format!("ratio must lie in [0, 1], got {r}")),
                    _ => None,
                };
                if let Some(msg) = bad {
                    err(&mut errs, format!("{path}.{to}"), msg);
                    ok = false;
                }
            }
            let total: f64 = row.values().sum();
            if ok && total > 1.0 + 1e-12 {
                err(
                    &mut errs,
                    path,
                    format!("ratios leaving node `{from}` sum to {total} > 1"),
                );
                ok = false;
            }
            if ok {
                routing.insert(from.clone(), row.clone());
            }
        }

        // controllers
        let c = &self.controllers;
        let mut controllers_ok = true;
        for id in c.junctions.keys() {
            if net.junction(id).is_none() {
                err(
                    &mut errs,
                    format!("controllers.junctions.{id}"),
                    format!("unknown junction `{id}`"),
                );
                controllers_ok = false;
            }
        }
        if controllers_ok {
            if let Err(e) = c.configs(&net) {
                err(&mut errs, "controllers".into(), e.to_string());
            }
        }

        // initial queues
        for (i, q) in self.initial.iter().enumerate() {
            let path = format!("initial[{i}]");
            if net.link_by_ids(&q.from, &q.to).is_none() {
                err(&mut errs, path, format!("no link `{}` -> `{}`", q.from, q.to));
            } else if !(q.count >= 0.0) || !q.count.is_finite() {
                err(&mut errs, format!("{path}.Q"), format!("must be >= 0, got {}", q.count));
            } else if run.mode == Mode::Integer && q.count.fract() != 0.0 {
                err(
                    &mut errs,
                    format!("{path}.Q"),
                    format!("must be an integer in integer mode, got {}", q.count),
                );
            }
        }

        if !errs.is_empty() {
            return Err(ScenarioErrors(errs));
        }
        let scenario = Scenario {
            name: self.name.clone(),
            topology,
            arrivals: ArrivalSpec {
                kind: a.kind,
                rates,
                multiplier: a.multiplier,
                batch: a.batch,
                profile: a.profile.clone(),
            },
            routing,
            controllers: c.clone(),
            initial: self.initial.clone(),
            run: run.clone(),
        };
        // anything the checks above missed still surfaces, without a finer path
        scenario
            .compile()
            .map_err(|e| ScenarioErrors(vec![ScenarioError::at("", e.to_string())]))?;
        Ok(scenario)
    }
}

/// Source text of the canonical scenarios, by name.
pub const CANONICAL_FIXTURE_TEXTS: [(&str, &str); 3] = [
    ("theorem1", include_str!("../fixtures/theorem1.toml")),
    ("deadlock_ring", include_str!("../fixtures/deadlock_ring.toml")),
    ("grid4x4_peak", include_str!("../fixtures/grid4x4_peak.toml")),
];

/// The canonical scenarios, parsed.
pub fn canonical_fixtures() -> BTreeMap<&'static str, ScenarioDocument> {
    CANONICAL_FIXTURE_TEXTS
        .iter()
        .map(|&(name, text)| {
            let doc = parse_scenario(text).unwrap_or_else(|e| panic!("canonical fixture {name} is invalid:\n{e}"));
            (name, doc)
        })
        .collect()
}

/// One canonical scenario, resolved.
pub fn canonical_scenario(name: &str) -> Option<Scenario> {
    canonical_fixtures()
        .get(name)
        .map(|d| d.resolve().expect("canonical fixtures resolve"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControllerKind;
    use crate::engine::{fixture_deadlock_ring, fixture_theorem1, run};

    const MINIMAL: &str = r#"
version = 1

[run]
horizon = 5

[topology]
nodes = [{ id = "a", C = 10, boundary = true }, { id = "b", C = 10 }]
links = [{ from = "a", to = "b", junction = "J" }]

[[topology.junctions]]
id = "J"
inputs = ["a"]
outputs = ["b"]
phases = [{ id = "go", mu = [{ from = "a", to = "b", mu = 2 }] }]

[controllers]
kind = "back-pressure"
"#;

    #[test]
    fn minimal_document() {
        let doc = parse_scenario(MINIMAL).unwrap();
        let s = doc.resolve().unwrap();
        assert_eq!(s.run.slot_seconds, 15.0);
        assert!(s.arrivals.rates.is_empty());
        assert_eq!(run(&s).unwrap().rows.len(), 5);
    }

    #[test]
    fn routing_mass_above_one_names_the_node() {
        let text = format!("{MINIMAL}\n[routing.r]\na = {{ b = 1.2 }}\n");
        let errs = parse_scenario(&text).unwrap_err();
        let e = errs.iter().find(|e| e.path.starts_with("routing.r")).unwrap();
        assert!(e.to_string().contains('a'), "{e}");

        // split over several destinations
        let text = MINIMAL.replace(
            "links = [{ from = \"a\", to = \"b\", junction = \"J\" }]",
            "links = [{ from = \"a\", to = \"b\", junction = \"J\" }, { from = \"a\", to = \"c\", junction = \"J\" }]",
        );
        let text = text
            .replace(
                "{ id = \"b\", C = 10 }]",
                "{ id = \"b\", C = 10 }, { id = \"c\", C = 10 }]",
            )
            .replace("outputs = [\"b\"]", "outputs = [\"b\", \"c\"]")
            + "\n[routing.r]\na = { b = 0.7, c = 0.5 }\n";
        let errs = parse_scenario(&text).unwrap_err();
        assert_eq!(errs.0.len(), 1, "{errs}");
        assert_eq!(errs.0[0].path, "routing.r.a");
        assert!(errs.0[0].message.contains("`a`"));
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let errs = parse_scenario("version = 1\n[run]\nhorizon = = 3\n").unwrap_err();
        assert_eq!(errs.0[0].line, Some(3));
        assert!(errs.0[0].column.is_some());

        let errs = parse_scenario(&MINIMAL.replace("horizon = 5", "horizon = 5\nspeed = 3")).unwrap_err();
        assert!(errs.0[0].line.is_some(), "{errs}");
        assert!(errs.to_string().contains("speed"));
    }

    #[test]
    fn semantic_errors_carry_paths() {
        let bad = MINIMAL
            .replace("version = 1", "version = 2")
            .replace("horizon = 5", "horizon = 0")
            + "\n[arrivals]\nlambda = { zz = 1.0 }\n\n[[initial]]\nfrom = \"b\"\nto = \"a\"\nQ = 1\n";
        let errs = parse_scenario(&bad).unwrap_err();
        let paths: Vec<_> = errs.iter().map(|e| e.path.as_str()).collect();
        for p in ["version", "run.horizon", "arrivals.lambda.zz", "initial[0]"] {
            assert!(paths.contains(&p), "{paths:?}");
        }

        let errs = parse_scenario(&MINIMAL.replace("C = 10 }]", "C = 0 }]")).unwrap_err();
        assert!(
            errs.iter()
                .any(|e| e.path == "topology" && e.message.contains("capacity")),
            "{errs}"
        );

        let errs = parse_scenario(&format!(
            "{MINIMAL}\n[routing.turning]\nstraight = 1.0\nleft = 0.0\nright = 0.0\n"
        ))
        .unwrap_err();
        assert_eq!(errs.0[0].path, "routing.turning");
        let errs = parse_scenario(&format!(
            "{MINIMAL}\n[routing.heading]\nnorth = 0.0\neast = 1.0\nsouth = 1.0\nwest = 1.0\n"
        ))
        .unwrap_err();
        assert_eq!(errs.0[0].path, "routing.heading");
    }

    #[test]
    fn engine_fixtures_round_trip() {
        for s in [fixture_theorem1(), fixture_deadlock_ring()] {
            let doc = ScenarioDocument::from_scenario(&s);
            let text = to_text(&doc);
            let parsed = parse_scenario(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(parsed, doc);
            assert_eq!(parsed.resolve().unwrap(), s);
        }
    }

    #[test]
    fn canonical_files_match_engine_fixtures() {
        let fixtures = canonical_fixtures();
        assert_eq!(fixtures.len(), 3);
        assert_eq!(fixtures["theorem1"].resolve().unwrap(), fixture_theorem1());
        assert_eq!(fixtures["deadlock_ring"].resolve().unwrap(), fixture_deadlock_ring());
        for (name, doc) in &fixtures {
            let again = parse_scenario(&to_text(doc)).unwrap();
            assert_eq!(&again, doc, "{name}");
        }
        for (_, text) in CANONICAL_FIXTURE_TEXTS {
            assert!(text.starts_with('#'), "fixtures open with a provenance note");
        }
    }

    #[test]
    fn heading_weights_are_normalized_per_node() {
        let text = r#"
version = 1
[run]
horizon = 3
[topology.grid]
rows = 1
cols = 1
[routing.heading]
north = 0.0
east = 1.0
south = 2.0
west = 1.0
[controllers]
kind = "back-pressure"
"#;
        let s = load_scenario(text).unwrap();
        // from the north: south 2, east 1, west 1
        let row = &s.routing["N0_in"];
        assert_eq!((row["S0_out"], row["E0_out"], row["W0_out"]), (0.5, 0.25, 0.25));
        // from the west (travelling east): east 1, north 0, south 2
        let row = &s.routing["W0_in"];
        assert_eq!(
            (row["E0_out"], row["N0_out"], row["S0_out"]),
            (1.0 / 3.0, 0.0, 2.0 / 3.0)
        );
        // from the south only north, east and west are reachable
        let row = &s.routing["S0_in"];
        assert_eq!((row["N0_out"], row["E0_out"], row["W0_out"]), (0.0, 0.5, 0.5));

        let both = format!("{text}\n[routing.turning]\nstraight = 0.5\nleft = 0.2\nright = 0.2\n");
        assert_eq!(parse_scenario(&both).unwrap_err().0[0].path, "routing");
    }

    #[test]
    fn grid_fixture_resolves() {
        let s = canonical_scenario("grid4x4_peak").unwrap();
        assert_eq!(s.topology.junctions.len(), 16);
        assert_eq!(s.run.horizon, 720);
        // every boundary entry receives demand
        assert_eq!(s.arrivals.rates.len(), 16);
        assert_eq!(s.controllers.kind, ControllerKind::CapacityAware);
    }
}
