//! The simulation graph of a family of universes.
//!
//! An edge `a → b` means "`a` simulates `b` on the probe domain", and every
//! edge carries the witness that was checked. Self-loops come from the
//! self-simulation program; other edges from the pristine construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{encode_tuple, nat_to_bits};
use crate::qvm::{MachineId, Program};
use crate::selfsim::self_sim_program;
use crate::simulation::{
    self, build_sim_witness, check_sim_witness, probe_domain, read_witness, write_witness, HostInit,
    SimulationError, SimulationWitness, Triple,
};
use crate::universe::{extract_output_suffix, fed_evolution_program, Coupling, UniverseSpec};

/// Widest environment a probe domain enumerates.
pub const MAX_PROBE_WIDTH: usize = 4;

/// Default cap on the inner run a composed witness replays in-machine. Each
/// replayed tick costs the outer host tens of thousands of ticks.
pub const MAX_COMPOSE_INNER_TICKS: u64 = 1_000;

/// Fewest grid points a growth fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("growth fit needs at least {MIN_FIT_POINTS} positive horizons, edge {0} has {1}")]
    GridTooSmall(String, usize),
    #[error("no edge {0}")]
    MissingEdge(String),
    #[error("no node {0:?}")]
    UnknownNode(String),
    #[error("{0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub spec: UniverseSpec,
}

impl Node {
    pub fn new(name: &str, spec: UniverseSpec) -> Node {
        Node {
            name: name.to_string(),
            spec,
        }
    }
}

/// Horizons and probe programs; environments are enumerated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainGrid {
    pub dts: Vec<u64>,
    pub programs: Vec<Program>,
}

impl DomainGrid {
    /// Horizons `2, 4, 8, 16` and four small probe programs, one of which
    /// never halts.
    pub fn standard() -> DomainGrid {
        let programs = ["", "QUOTE:1", "DUP PAIR UNPAIR", "QUOTE:01010111 DUP EVAL"]
            .iter()
            .map(|s| Program::from_assembly(s).expect("valid probe"))
            .collect();
        DomainGrid {
            dts: vec![2, 4, 8, 16],
            programs,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub witness: SimulationWitness,
    pub self_loop: bool,
    /// Built by composing two other edges.
    pub composed: bool,
}

impl Edge {
    /// No triple has `tau < dt`.
    pub fn time_ordered(&self) -> bool {
        !self.witness.runs_ahead()
    }

    pub fn max_delay_ratio(&self) -> f64 {
        self.witness.max_delay_ratio()
    }

    /// Least-squares slope of `log max tau` against `log dt` over the
    /// positive horizons, with the number of points used.
    pub fn growth_exponent(&self) -> (Option<f64>, usize) {
        let mut worst: BTreeMap<u64, u64> = BTreeMap::new();
        for e in &self.witness.entries {
            if e.triple.dt > 0 {
                let m = worst.entry(e.triple.dt).or_default();
                *m = (*m).max(e.tau);
            }
        }
        let points: Vec<(f64, f64)> = worst
            .iter()
            .map(|(&dt, &tau)| ((dt as f64).ln(), (tau.max(1) as f64).ln()))
            .collect();
        (fit_slope(&points), points.len())
    }
}

/// Least-squares slope, `None` below [`MIN_FIT_POINTS`] points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SimGraph {
    pub nodes: Vec<Node>,
    /// Keyed by `(from, to)` node index.
    pub edges: BTreeMap<(usize, usize), Edge>,
    /// Pairs that got no edge, with the reason.
    pub failures: BTreeMap<(usize, usize), String>,
}

impl SimGraph {
    pub fn new(nodes: Vec<Node>) -> SimGraph {
        SimGraph {
            nodes,
            ..SimGraph::default()
        }
    }

    pub fn index(&self, name: &str) -> Result<usize, GraphError> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        let key = (self.index(from).ok()?, self.index(to).ok()?);
        self.edges.get(&key)
    }

    fn label(&self, (a, b): (usize, usize)) -> String {
        format!("{}->{}", self.nodes[a].name, self.nodes[b].name)
    }

    /// Edge set as name pairs.
    pub fn edge_names(&self) -> BTreeSet<(String, String)> {
        self.edges
            .keys()
            .map(|&(a, b)| (self.nodes[a].name.clone(), self.nodes[b].name.clone()))
            .collect()
    }

    fn retain(&self, keep: impl Fn(&Edge) -> bool) -> SimGraph {
        SimGraph {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|(_, e)| keep(e))
                .map(|(k, e)| (*k, e.clone()))
                .collect(),
            failures: self.failures.clone(),
        }
    }
}

/// Self-loop witness: for each horizon the self-simulation program, started
/// from every environment.
pub fn self_loop_witness(u: &UniverseSpec, dts: &[u64], fuel: u64) -> Result<SimulationWitness, SimulationError> {
    let mut domain = Vec::new();
    let mut inits = Vec::new();
    for &dt in dts.iter().filter(|&&dt| dt > 0) {
        let n_star = self_sim_program(u, dt);
        for w0 in u.environment_values() {
            domain.push(Triple::new(dt, w0.clone(), n_star.clone()));
            inits.push(HostInit {
                w: w0,
                feed: None,
                program: n_star.clone(),
            });
        }
    }
    simulation::witness_from_inits(u, u, &domain, inits, fuel)
}

/// Tries every ordered pair of nodes and keeps the fully verified ones.
pub fn build_graph(nodes: Vec<Node>, grid: &DomainGrid, fuel: u64) -> SimGraph {
    let mut g = SimGraph::new(nodes);
    let n = g.nodes.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let results: Vec<((usize, usize), Result<Edge, String>)> = pairs
        .par_iter()
        .map(|&(a, b)| ((a, b), try_edge(&g.nodes[a].spec, &g.nodes[b].spec, a == b, grid, fuel)))
        .collect();
    for (key, r) in results {
        match r {
            Ok(e) => {
                g.edges.insert(key, e);
            }
            Err(reason) => {
                g.failures.insert(key, reason);
            }
        }
    }
    g
}

fn try_edge(host: &UniverseSpec, target: &UniverseSpec, diagonal: bool, grid: &DomainGrid, fuel: u64) -> Result<Edge, String> {
    for u in [host, target] {
        if u.w_width() > MAX_PROBE_WIDTH {
            return Err(format!("w_width {} exceeds probe capacity {MAX_PROBE_WIDTH}", u.w_width()));
        }
    }
    let witness = if diagonal {
        if host.coupling() != Coupling::CopyAtTick1 {
            return Err("machine is not shielded".into());
        }
        self_loop_witness(host, &grid.dts, fuel)
    } else {
        build_sim_witness(host, target, &probe_domain(target, &grid.dts, &grid.programs), fuel)
    }
    .map_err(|e| e.to_string())?;
    if let Some((t, reason)) = witness.excluded.first() {
        return Err(format!(
            "{} of {} triples failed, first dt={} w0={}: {reason}",
            witness.excluded.len(),
            witness.excluded.len() + witness.entries.len(),
            t.dt,
            t.w0
        ));
    }
    let report = check_sim_witness(host, target, &witness);
    if !report.all_pass() {
        return Err(format!("verification failed on {} triples", report.rows.len() - report.passed()));
    }
    Ok(Edge {
        witness,
        self_loop: diagonal,
        composed: false,
    })
}

/// Chains `a → b` and `b → c` into `a → c`.
///
/// For every `c`-triple witnessed by `b → c`, host `a` runs `b`'s evolution
/// program from `b`'s prepared start for `tau_bc` ticks and keeps only the
/// halted machine's output. Entries whose inner run exceeds `max_inner`
/// ticks are excluded.
pub fn compose_witnesses(
    ab: &SimulationWitness,
    bc: &SimulationWitness,
    max_inner: u64,
    fuel: u64,
) -> Result<SimulationWitness, GraphError> {
    if ab.target != bc.host {
        return Err(SimulationError::DomainMismatch("the first witness's target is not the second's host".into()).into());
    }
    let a = &ab.host;
    let program = fed_evolution_program(&bc.host).then(&extract_output_suffix());
    let mut domain = Vec::new();
    let mut inits = Vec::new();
    let mut skipped = Vec::new();
    for e in &bc.entries {
        if e.tau > max_inner {
            skipped.push((e.triple.clone(), format!("inner run of {} ticks is too long to replay", e.tau)));
            continue;
        }
        let feed = e.init.feed.clone().unwrap_or_else(|| e.init.w.clone());
        let n = MachineId::fresh(&e.init.program).encode();
        let y = encode_tuple([&nat_to_bits(e.tau), &e.init.w, &feed, &n]).expect("non-empty");
        domain.push(e.triple.clone());
        inits.push(HostInit::fed(a, &y, &program));
    }
    let mut w = simulation::witness_from_inits(a, &bc.target, &domain, inits, fuel)?;
    w.excluded.extend(skipped);
    Ok(w)
}

pub fn compose_edges(
    g: &SimGraph,
    a: &str,
    b: &str,
    c: &str,
    max_inner: u64,
    fuel: u64,
) -> Result<SimulationWitness, GraphError> {
    let ab = g.edge(a, b).ok_or_else(|| GraphError::MissingEdge(format!("{a}->{b}")))?;
    let bc = g.edge(b, c).ok_or_else(|| GraphError::MissingEdge(format!("{b}->{c}")))?;
    compose_witnesses(&ab.witness, &bc.witness, max_inner, fuel)
}

/// Drops edges on which some triple was simulated before its own time.
pub fn filter_time_ordered(g: &SimGraph) -> SimGraph {
    g.retain(|e| e.time_ordered())
}

/// Keeps edges whose fitted growth exponent is at most `cap`.
pub fn filter_time_bounded(g: &SimGraph, cap: f64) -> Result<SimGraph, GraphError> {
    for (&key, e) in &g.edges {
        if let (None, points) = e.growth_exponent() {
            return Err(GraphError::GridTooSmall(g.label(key), points));
        }
    }
    Ok(g.retain(|e| e.growth_exponent().0.is_some_and(|s| s <= cap)))
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PreorderReport {
    /// Nodes without a self-loop.
    pub not_reflexive: Vec<String>,
    /// Edges added by composition, with the intermediate node.
    pub added: Vec<(String, String, String)>,
    /// Compositions that did not verify, with the reason.
    pub failed: Vec<(String, String, String)>,
}

impl PreorderReport {
    pub fn is_preorder(&self) -> bool {
        self.not_reflexive.is_empty() && self.failed.is_empty()
    }
}

impl fmt::Display for PreorderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "preorder={}", self.is_preorder())?;
        writeln!(f, "not_reflexive={}", self.not_reflexive.join(","))?;
        writeln!(f, "added={}", self.added.len())?;
        for (a, c, via) in &self.added {
            writeln!(f, "added_edge={a}->{c} via={via}")?;
        }
        for (a, c, why) in &self.failed {
            writeln!(f, "failed_edge={a}->{c} reason={why}")?;
        }
        Ok(())
    }
}

/// Transitive closure by composition. Every path `a → b → c` whose `a → c`
/// edge is missing is composed, verified and added, until nothing changes.
pub fn check_preorder(g: &SimGraph, max_inner: u64, fuel: u64) -> (SimGraph, PreorderReport) {
    let mut g = g.clone();
    let mut report = PreorderReport::default();
    let n = g.nodes.len();
    report.not_reflexive = (0..n)
        .filter(|&i| !g.edges.contains_key(&(i, i)))
        .map(|i| g.nodes[i].name.clone())
        .collect();
    let mut tried = BTreeSet::new();
    loop {
        let mut candidates = Vec::new();
        for &(a, b) in g.edges.keys() {
            for c in 0..n {
                if g.edges.contains_key(&(b, c)) && !g.edges.contains_key(&(a, c)) && tried.insert((a, c)) {
                    candidates.push((a, b, c));
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        for (a, b, c) in candidates {
            let names = |i: usize| g.nodes[i].name.clone();
            let composed = compose_witnesses(&g.edges[&(a, b)].witness, &g.edges[&(b, c)].witness, max_inner, fuel);
            let verdict = composed.map_err(|e| e.to_string()).and_then(|w| {
                let r = check_sim_witness(&g.nodes[a].spec, &g.nodes[c].spec, &w);
                if r.all_pass() {
                    Ok(w)
                } else {
                    Err(format!("{} of {} triples verified", r.passed(), r.rows.len()))
                }
            });
            match verdict {
                Ok(w) => {
                    g.edges.insert(
                        (a, c),
                        Edge {
                            witness: w,
                            self_loop: a == c,
                            composed: true,
                        },
                    );
                    report.added.push((names(a), names(c), names(b)));
                }
                Err(why) => report.failed.push((names(a), names(c), why)),
            }
        }
    }
    (g, report)
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Deterministic DOT rendering, nodes and edges sorted by name.
pub fn export_dot(g: &SimGraph) -> String {
    let mut out = String::from("digraph sim {\n");
    let mut nodes: Vec<&Node> = g.nodes.iter().collect();
    nodes.sort_by(|a, b| a.name.cmp(&b.name));
    for n in nodes {
        let _ = writeln!(out, "  {} [label={}];", dot_id(&n.name), dot_id(&format!("{} (w_width={}, clock={})", n.name, n.spec.w_width(), n.spec.clock())));
    }
    let mut edges: Vec<(&str, &str, &Edge)> = g
        .edges
        .iter()
        .map(|(&(a, b), e)| (g.nodes[a].name.as_str(), g.nodes[b].name.as_str(), e))
        .collect();
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    for (a, b, e) in edges {
        let slope = match e.growth_exponent().0 {
            Some(s) => format!("{s:.3}"),
            None => "n/a".into(),
        };
        let label = format!(
            "max tau/dt={:.1} slope={} ordered={}{}",
            e.max_delay_ratio(),
            slope,
            e.time_ordered(),
            if e.composed { " composed" } else { "" }
        );
        let style = if e.self_loop { ", style=bold" } else { "" };
        let _ = writeln!(out, "  {} -> {} [label={}{}];", dot_id(a), dot_id(b), dot_id(&label), style);
    }
    out.push_str("}\n");
    out
}

fn io(e: std::io::Error, path: &Path) -> GraphError {
    GraphError::Io(format!("{}: {e}", path.display()))
}

/// Writes `index.txt` plus one witness file per edge.
pub fn save_graph(g: &SimGraph, dir: &Path) -> Result<(), GraphError> {
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let mut index = String::new();
    let _ = writeln!(index, "nodes={}", g.nodes.len());
    for (i, n) in g.nodes.iter().enumerate() {
        let _ = writeln!(index, "node.{i}.name={}", n.name);
        for line in n.spec.to_string().lines() {
            let _ = writeln!(index, "node.{i}.{line}");
        }
    }
    let _ = writeln!(index, "edges={}", g.edges.len());
    for (k, (&(a, b), e)) in g.edges.iter().enumerate() {
        let file = format!("edge_{a}_{b}.txt");
        let _ = writeln!(index, "edge.{k}={a},{b},{file},{},{}", e.self_loop, e.composed);
        let path = dir.join(&file);
        std::fs::write(&path, write_witness(&e.witness)).map_err(|e| io(e, &path))?;
    }
    let _ = writeln!(index, "failures={}", g.failures.len());
    for (k, (&(a, b), why)) in g.failures.iter().enumerate() {
        let _ = writeln!(index, "failure.{k}={a},{b},{why}");
    }
    let path = dir.join("index.txt");
    std::fs::write(&path, index).map_err(|e| io(e, &path))
}

pub fn load_graph(dir: &Path) -> Result<SimGraph, GraphError> {
    let path = dir.join("index.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| io(e, &path))?;
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if let Some((k, v)) = line.split_once('=') {
            kv.insert(k.to_string(), (i + 1, v.to_string()));
        }
    }
    let get = |k: &str| {
        kv.get(k).cloned().ok_or(GraphError::Parse {
            line: 0,
            message: format!("missing {k}"),
        })
    };
    let perr = |line: usize, message: String| GraphError::Parse { line, message };
    let count = |k: &str| -> Result<usize, GraphError> {
        let (line, v) = get(k)?;
        v.parse().map_err(|e| perr(line, format!("{e}")))
    };
    let mut nodes = Vec::new();
    for i in 0..count("nodes")? {
        let prefix = format!("node.{i}.");
        let spec_text: String = kv
            .iter()
            .filter_map(|(k, (_, v))| k.strip_prefix(&prefix).map(|rest| (rest, v)))
            .filter(|(rest, _)| *rest != "name")
            .map(|(rest, v)| format!("{rest}={v}\n"))
            .collect();
        let spec: UniverseSpec = spec_text
            .parse()
            .map_err(|e: crate::universe::UniverseError| perr(0, format!("node {i}: {e}")))?;
        nodes.push(Node::new(&get(&format!("node.{i}.name"))?.1, spec));
    }
    let mut g = SimGraph::new(nodes);
    for k in 0..count("edges")? {
        let (line, v) = get(&format!("edge.{k}"))?;
        let parts: Vec<&str> = v.split(',').collect();
        let [a, b, file, self_loop, composed] = parts[..] else {
            return Err(perr(line, "expected from,to,file,self_loop,composed".into()));
        };
        let idx = |s: &str| -> Result<usize, GraphError> {
            s.parse().map_err(|e| perr(line, format!("{e}")))
        };
        let wpath = dir.join(file);
        let wtext = std::fs::read_to_string(&wpath).map_err(|e| io(e, &wpath))?;
        g.edges.insert(
            (idx(a)?, idx(b)?),
            Edge {
                witness: read_witness(&wtext)?,
                self_loop: self_loop == "true",
                composed: composed == "true",
            },
        );
    }
    for k in 0..count("failures")? {
        let (line, v) = get(&format!("failure.{k}"))?;
        let mut parts = v.splitn(3, ',');
        let (Some(a), Some(b), Some(why)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(perr(line, "expected from,to,reason".into()));
        };
        let a: usize = a.parse().map_err(|e| perr(line, format!("{e}")))?;
        let b: usize = b.parse().map_err(|e| perr(line, format!("{e}")))?;
        g.failures.insert((a, b), why.to_string());
    }
    Ok(g)
}

/// Re-checks every edge's witness against the oracles.
pub fn reverify(g: &SimGraph) -> Vec<(String, bool)> {
    g.edges
        .par_iter()
        .map(|(&key, e)| {
            let ok = check_sim_witness(&g.nodes[key.0].spec, &g.nodes[key.1].spec, &e.witness).all_pass();
            (g.label(key), ok)
        })
        .collect()
}
