//! Entanglement multigraph, edge-state algebra and degree statistics.
//!
//! Every edge of an [`EntangledGraph`] is a shared bipartite state. A pure
//! state is described by its larger Schmidt weight `lambda1` (with
//! `lambda1 + lambda2 = 1`), and converts into a singlet with probability
//! `min(1, 2 (1 - lambda1))`. Edges produced by entanglement swapping are
//! mixed, but keep the conversion probability of the state they came from, so
//! they are stored by that probability alone.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("lambda1 = {0} is outside [0.5, 1]")]
    InvalidLambda(f64),
    #[error("conversion probability {0} is outside [0, 1]")]
    InvalidScp(f64),
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("GHZ triple must name three distinct nodes, got {0:?}")]
    DegenerateTriple([NodeId; 3]),
    #[error("graph must have at least one node")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Entanglement carried by one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeState {
    /// Pure two-qubit state with larger Schmidt weight `lambda1`.
    Pure(f64),
    /// Mixed state produced by a swap; holds the inherited conversion probability.
    Swapped(f64),
}

impl EdgeState {
    pub fn pure(lambda1: f64) -> Result<Self, GraphError> {
        if (0.5..=1.0).contains(&lambda1) {
            Ok(EdgeState::Pure(lambda1))
        } else {
            Err(GraphError::InvalidLambda(lambda1))
        }
    }

    pub fn swapped(scp: f64) -> Result<Self, GraphError> {
        if (0.0..=1.0).contains(&scp) {
            Ok(EdgeState::Swapped(scp))
        } else {
            Err(GraphError::InvalidScp(scp))
        }
    }

    /// Singlet conversion probability.
    pub fn scp(&self) -> f64 {
        match *self {
            EdgeState::Pure(lambda1) => scp_of_lambda(lambda1),
            EdgeState::Swapped(p) => p,
        }
    }

    /// The state a swap leaves behind between the two outer nodes.
    pub fn after_swap(&self) -> EdgeState {
        EdgeState::Swapped(self.scp())
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, EdgeState::Pure(_))
    }
}

/// `min(1, 2 (1 - lambda1))`, clamped into `[0, 1]`.
pub fn scp_of_lambda(lambda1: f64) -> f64 {
    (2.0 * (1.0 - lambda1)).clamp(0.0, 1.0)
}

/// Larger Schmidt weight whose pure state converts with probability `scp`.
pub fn lambda_for_scp(scp: f64) -> Result<f64, GraphError> {
    if !(0.0..=1.0).contains(&scp) {
        return Err(GraphError::InvalidScp(scp));
    }
    Ok(1.0 - scp / 2.0)
}

/// Where an edge came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeOrigin {
    Lattice,
    LongRange,
    Rewired,
    Random,
    SwapProduct,
    WalkChord,
}

impl EdgeOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeOrigin::Lattice => "lattice",
            EdgeOrigin::LongRange => "long-range",
            EdgeOrigin::Rewired => "rewired",
            EdgeOrigin::Random => "random",
            EdgeOrigin::SwapProduct => "swap-product",
            EdgeOrigin::WalkChord => "walk-chord",
        }
    }
}

impl FromStr for EdgeOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "lattice" => EdgeOrigin::Lattice,
            "long-range" => EdgeOrigin::LongRange,
            "rewired" => EdgeOrigin::Rewired,
            "random" => EdgeOrigin::Random,
            "swap-product" => EdgeOrigin::SwapProduct,
            "walk-chord" => EdgeOrigin::WalkChord,
            other => return Err(format!("unknown edge tag `{other}`")),
        })
    }
}

/// Swap eligibility of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NodeFlag {
    #[default]
    Eligible,
    /// Acted as a swap center; its qubits have been measured.
    Measured,
    /// Endpoint of a swap; may never become a center.
    SwapNeighbor,
}

impl NodeFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeFlag::Eligible => "eligible",
            NodeFlag::Measured => "measured",
            NodeFlag::SwapNeighbor => "swap-neighbor",
        }
    }
}

impl FromStr for NodeFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "eligible" => NodeFlag::Eligible,
            "measured" => NodeFlag::Measured,
            "swap-neighbor" => NodeFlag::SwapNeighbor,
            other => return Err(format!("unknown node flag `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub state: EdgeState,
    pub origin: EdgeOrigin,
}

impl Edge {
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.source == node {
            self.target
        } else {
            self.source
        }
    }
}

/// Three nodes sharing one GHZ state; converts as a unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzTriple {
    pub nodes: [NodeId; 3],
    pub scp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntangledGraph {
    node_count: usize,
    directed: bool,
    edges: Vec<Edge>,
    flags: Vec<NodeFlag>,
    ghz: Vec<GhzTriple>,
}

impl EntangledGraph {
    pub fn new(node_count: usize, directed: bool) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        Ok(Self {
            node_count,
            directed,
            edges: Vec::new(),
            flags: vec![NodeFlag::Eligible; node_count],
            ghz: Vec::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ghz_triples(&self) -> &[GhzTriple] {
        &self.ghz
    }

    pub fn flags(&self) -> &[NodeFlag] {
        &self.flags
    }

    pub fn flag(&self, node: NodeId) -> NodeFlag {
        self.flags[node]
    }

    pub fn set_flag(&mut self, node: NodeId, flag: NodeFlag) -> Result<(), GraphError> {
        self.check_node(node)?;
        self.flags[node] = flag;
        Ok(())
    }

    fn check_node(&self, node: NodeId) -> Result<(), GraphError> {
        if node >= self.node_count {
            Err(GraphError::NodeOutOfRange {
                node,
                node_count: self.node_count,
            })
        } else {
            Ok(())
        }
    }

    /// Adds an edge. Undirected edges are normalized to `source < target`.
    pub fn add_edge(
        &mut self,
        source: NodeId,
        target: NodeId,
        state: EdgeState,
        origin: EdgeOrigin,
    ) -> Result<(), GraphError> {
        self.check_node(source)?;
        self.check_node(target)?;
        if source == target {
            return Err(GraphError::SelfLoop(source));
        }
        let scp = state.scp();
        if !(0.0..=1.0).contains(&scp) || scp.is_nan() {
            return Err(GraphError::InvalidScp(scp));
        }
        if let EdgeState::Pure(l) = state {
            EdgeState::pure(l)?;
        }
        let (source, target) = if self.directed || source < target {
            (source, target)
        } else {
            (target, source)
        };
        self.edges.push(Edge {
            source,
            target,
            state,
            origin,
        });
        Ok(())
    }

    pub fn add_ghz(&mut self, nodes: [NodeId; 3], scp: f64) -> Result<(), GraphError> {
        for &v in &nodes {
            self.check_node(v)?;
        }
        if nodes[0] == nodes[1] || nodes[1] == nodes[2] || nodes[0] == nodes[2] {
            return Err(GraphError::DegenerateTriple(nodes));
        }
        if !(0.0..=1.0).contains(&scp) {
            return Err(GraphError::InvalidScp(scp));
        }
        self.ghz.push(GhzTriple { nodes, scp });
        Ok(())
    }

    /// Replaces the edge list, keeping nodes, flags and GHZ triples.
    pub(crate) fn replace_edges(&mut self, edges: Vec<Edge>) {
        self.edges = edges;
    }

    /// Total degree (edge multiplicity counted), ignoring direction.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for e in &self.edges {
            deg[e.source] += 1;
            deg[e.target] += 1;
        }
        deg
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for e in &self.edges {
            deg[e.source] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for e in &self.edges {
            deg[e.target] += 1;
        }
        deg
    }

    /// Number of distinct neighbours per node, direction ignored.
    pub fn distinct_neighbor_counts(&self) -> Vec<usize> {
        let mut pairs: Vec<(NodeId, NodeId)> = self
            .edges
            .iter()
            .map(|e| (e.source.min(e.target), e.source.max(e.target)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut deg = vec![0; self.node_count];
        for (u, v) in pairs {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Edge indices incident to each node, direction ignored.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for (i, e) in self.edges.iter().enumerate() {
            inc[e.source].push(i);
            inc[e.target].push(i);
        }
        inc
    }

    /// Nodes that take part in percolation: everything except measured swap
    /// centers that were left without any entanglement.
    pub fn participant_count(&self) -> usize {
        let mut touched = vec![false; self.node_count];
        for e in &self.edges {
            touched[e.source] = true;
            touched[e.target] = true;
        }
        for t in &self.ghz {
            for &v in &t.nodes {
                touched[v] = true;
            }
        }
        (0..self.node_count)
            .filter(|&v| touched[v] || self.flags[v] != NodeFlag::Measured)
            .count()
    }

    /// Edge multiset as sortable keys, for order-insensitive comparison.
    pub fn edge_multiset(&self) -> Vec<(NodeId, NodeId, u64, EdgeOrigin, bool)> {
        let mut keys: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                let (pure, value) = match e.state {
                    EdgeState::Pure(l) => (true, l),
                    EdgeState::Swapped(p) => (false, p),
                };
                (e.source, e.target, value.to_bits(), e.origin, pure)
            })
            .collect();
        keys.sort_unstable();
        keys
    }
}

/// One degree histogram with its first two moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    pub histogram: BTreeMap<usize, usize>,
    pub mean_k: f64,
    pub mean_k2: f64,
}

impl DegreeDistribution {
    pub fn from_degrees(degrees: &[usize]) -> Self {
        let mut histogram = BTreeMap::new();
        for &k in degrees {
            *histogram.entry(k).or_insert(0) += 1;
        }
        let n = degrees.len() as f64;
        let (s1, s2) = histogram.iter().fold((0.0, 0.0), |(a, b), (&k, &c)| {
            let k = k as f64;
            let c = c as f64;
            (a + k * c, b + k * k * c)
        });
        Self {
            histogram,
            mean_k: s1 / n,
            mean_k2: s2 / n,
        }
    }

    pub fn node_count(&self) -> usize {
        self.histogram.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    /// Total degree, direction ignored.
    pub total: DegreeDistribution,
    /// In- and out-degree distributions; present for directed graphs.
    pub directed: Option<(DegreeDistribution, DegreeDistribution)>,
}

impl DegreeStats {
    pub fn mean_k(&self) -> f64 {
        self.total.mean_k
    }

    pub fn mean_k2(&self) -> f64 {
        self.total.mean_k2
    }
}

/// Degree histogram and moments, counting edge multiplicity.
pub fn degree_stats(g: &EntangledGraph) -> DegreeStats {
    let total = DegreeDistribution::from_degrees(&g.degrees());
    let directed = g.is_directed().then(|| {
        (
            DegreeDistribution::from_degrees(&g.in_degrees()),
            DegreeDistribution::from_degrees(&g.out_degrees()),
        )
    });
    DegreeStats { total, directed }
}

/// Degree statistics of the simple graph underneath: parallel edges collapse
/// into one neighbour relation.
pub fn simple_degree_stats(g: &EntangledGraph) -> DegreeDistribution {
    DegreeDistribution::from_degrees(&g.distinct_neighbor_counts())
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("no percolation transition: <k^2> = {mean_k2} does not exceed <k> = {mean_k}")]
pub struct NoTransition {
    pub mean_k: f64,
    pub mean_k2: f64,
}

/// Configuration-model bond threshold `<k> / (<k^2> - <k>)`.
pub fn analytic_threshold(mean_k: f64, mean_k2: f64) -> Result<f64, NoTransition> {
    if mean_k2 <= mean_k || mean_k <= 0.0 {
        return Err(NoTransition { mean_k, mean_k2 });
    }
    Ok(mean_k / (mean_k2 - mean_k))
}

pub const FORMAT_HEADER: &str = "qperc-graph v1";

fn fmt_real(x: f64) -> String {
    // Rust's shortest round-trip representation.
    format!("{x:?}")
}

/// Writes the edge-list text format.
pub fn serialize(g: &EntangledGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(out, "directed {}", g.directed).unwrap();
    writeln!(out, "nodes {}", g.node_count).unwrap();
    for (v, flag) in g.flags.iter().enumerate() {
        if *flag != NodeFlag::Eligible {
            writeln!(out, "flag {v} {}", flag.as_str()).unwrap();
        }
    }
    for e in &g.edges {
        let (kind, value) = match e.state {
            EdgeState::Pure(l) => ("pure", l),
            EdgeState::Swapped(p) => ("swapped", p),
        };
        writeln!(
            out,
            "{} {} {kind} {} {}",
            e.source,
            e.target,
            fmt_real(value),
            e.origin.as_str()
        )
        .unwrap();
    }
    for t in &g.ghz {
        let [a, b, c] = t.nodes;
        writeln!(out, "ghz {a} {b} {c} {}", fmt_real(t.scp)).unwrap();
    }
    out
}

impl fmt::Display for EntangledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

fn field<T: FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, ParseError> {
    let tok = tok.ok_or_else(|| ParseError {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| ParseError {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

/// Parses the edge-list text format.
pub fn parse(text: &str) -> Result<EntangledGraph, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut header = |expect: &str| -> Result<(usize, Vec<String>), ParseError> {
        let (no, l) = lines.next().ok_or_else(|| ParseError {
            line: text.lines().count().max(1),
            message: format!("unexpected end of input, expected `{expect}`"),
        })?;
        Ok((no, l.split_whitespace().map(str::to_owned).collect()))
    };

    let (no, magic) = header(FORMAT_HEADER)?;
    if magic.join(" ") != FORMAT_HEADER {
        return Err(ParseError {
            line: no,
            message: format!("expected `{FORMAT_HEADER}`"),
        });
    }
    let (no, dir) = header("directed <true|false>")?;
    if dir.len() != 2 || dir[0] != "directed" {
        return Err(ParseError {
            line: no,
            message: "expected `directed <true|false>`".into(),
        });
    }
    let directed: bool = field(Some(&dir[1]), "directedness", no)?;
    let (no, nodes) = header("nodes <N>")?;
    if nodes.len() != 2 || nodes[0] != "nodes" {
        return Err(ParseError {
            line: no,
            message: "expected `nodes <N>`".into(),
        });
    }
    let n: usize = field(Some(&nodes[1]), "node count", no)?;
    let mut g = EntangledGraph::new(n, directed).map_err(|e| ParseError {
        line: no,
        message: e.to_string(),
    })?;

    for (no, l) in lines {
        let mut toks = l.split_whitespace();
        let first = toks.next().unwrap();
        let res = match first {
            "flag" => {
                let v: NodeId = field(toks.next(), "node", no)?;
                let flag: NodeFlag = field(toks.next(), "flag", no)?;
                g.set_flag(v, flag)
            }
            "ghz" => {
                let a = field(toks.next(), "node", no)?;
                let b = field(toks.next(), "node", no)?;
                let c = field(toks.next(), "node", no)?;
                let scp: f64 = field(toks.next(), "scp", no)?;
                g.add_ghz([a, b, c], scp)
            }
            _ => {
                let u: NodeId = field(Some(first), "source node", no)?;
                let v: NodeId = field(toks.next(), "target node", no)?;
                let kind: String = field(toks.next(), "state kind", no)?;
                let value: f64 = field(toks.next(), "state value", no)?;
                let origin: EdgeOrigin = field(toks.next(), "edge tag", no)?;
                let state = match kind.as_str() {
                    "pure" => EdgeState::pure(value),
                    "swapped" => EdgeState::swapped(value),
                    other => {
                        return Err(ParseError {
                            line: no,
                            message: format!("unknown state kind `{other}`"),
                        })
                    }
                };
                state.and_then(|s| g.add_edge(u, v, s, origin))
            }
        };
        res.map_err(|e| ParseError {
            line: no,
            message: e.to_string(),
        })?;
        if let Some(extra) = toks.next() {
            return Err(ParseError {
                line: no,
                message: format!("trailing token `{extra}`"),
            });
        }
    }
    Ok(g)
}
