//! Quantum pre-processing rewrites applied before percolation.
//!
//! * [`qswap_undirected`]: a node of degree exactly `q` swaps its `q` pure
//!   edges into a cycle over its neighbours and is left isolated.
//! * [`qswap_directed`]: the same rule applied separately to the in-flow and
//!   out-flow memories of a directed network.
//! * [`walk_rewrite`]: pairs of edges meeting at a node are fused into a GHZ
//!   triple by a two-coin quantum walk, which adds a chord and keeps both
//!   original edges.
//!
//! Centers are visited in a seeded random order. Neighbours of a fired center
//! become [`NodeFlag::SwapNeighbor`] and never fire afterwards; they may still
//! be cycle endpoints of later swaps through their remaining pure edges.

use std::fmt;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::graph::{Edge, EdgeOrigin, EdgeState, EntangledGraph, GraphError, NodeFlag, NodeId};
use crate::rng::{stream, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("q must be at least 2, got {0}")]
    InvalidQ(usize),
    #[error("{0} requires an undirected graph")]
    NeedsUndirected(&'static str),
    #[error("{0} requires a directed graph")]
    NeedsDirected(&'static str),
    #[error("directed swap needs at least one of q_in / q_out")]
    NoDirection,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwapReport {
    pub centers_swapped: usize,
    pub edges_consumed: usize,
    pub edges_created: usize,
    pub nodes_isolated: usize,
}

impl SwapReport {
    pub const CSV_HEADER: &'static str = "centers_swapped,edges_consumed,edges_created,nodes_isolated";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.centers_swapped, self.edges_consumed, self.edges_created, self.nodes_isolated
        )
    }

    fn absorb(&mut self, other: SwapReport) {
        self.centers_swapped += other.centers_swapped;
        self.edges_consumed += other.edges_consumed;
        self.edges_created += other.edges_created;
        self.nodes_isolated += other.nodes_isolated;
    }
}

impl fmt::Display for SwapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

fn check_q(q: usize) -> Result<(), PreprocessError> {
    if q < 2 {
        Err(PreprocessError::InvalidQ(q))
    } else {
        Ok(())
    }
}

/// Node order for one pass.
fn visit_order(n: usize, rng: &mut Stream) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Edges that close a swap over `ends` (already ordered): the cycle
/// `e1 -> e2 -> ... -> eq -> e1`, or the single bridge `e1 -> e2` for `q = 2`.
fn cycle_pairs(ends: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    if ends.len() == 2 {
        return vec![(ends[0], ends[1])];
    }
    (0..ends.len())
        .map(|i| (ends[i], ends[(i + 1) % ends.len()]))
        .collect()
}

/// Edge list with tombstones, plus live incidence for the three memory views.
struct Workspace {
    edges: Vec<Option<Edge>>,
    incident: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Memory {
    /// Undirected graph: every incident edge.
    All,
    /// Edges pointing into the node.
    InFlow,
    /// Edges leaving the node.
    OutFlow,
}

impl Workspace {
    fn new(g: &EntangledGraph) -> Self {
        let edges: Vec<Option<Edge>> = g.edges().iter().copied().map(Some).collect();
        Self {
            incident: g.incidence(),
            edges,
        }
    }

    fn live(&self, v: NodeId, memory: Memory) -> Vec<usize> {
        self.incident[v]
            .iter()
            .copied()
            .filter(|&i| match self.edges[i] {
                None => false,
                Some(e) => match memory {
                    Memory::All => true,
                    Memory::InFlow => e.target == v,
                    Memory::OutFlow => e.source == v,
                },
            })
            .collect()
    }

    fn push(&mut self, edge: Edge) {
        let i = self.edges.len();
        self.incident[edge.source].push(i);
        self.incident[edge.target].push(i);
        self.edges.push(Some(edge));
    }

    fn finish(self, g: &mut EntangledGraph) {
        g.replace_edges(self.edges.into_iter().flatten().collect());
    }

    /// Tries to fire `v` as a swap center over `memory`; returns the report
    /// contribution when it fires.
    fn try_swap(
        &mut self,
        v: NodeId,
        q: usize,
        memory: Memory,
        directed: bool,
    ) -> Result<Option<(SwapReport, Vec<NodeId>)>, GraphError> {
        let live = self.live(v, memory);
        if live.len() != q {
            return Ok(None);
        }
        let mut ends = Vec::with_capacity(q);
        for &i in &live {
            let e = self.edges[i].expect("live edge");
            if !e.state.is_pure() {
                return Ok(None);
            }
            ends.push((e.other(v), e.state));
        }
        ends.sort_by_key(|&(u, _)| u);
        if ends.windows(2).any(|w| w[0].0 == w[1].0) {
            // parallel edges to one neighbour would close into a self-loop
            return Ok(None);
        }
        let nodes: Vec<NodeId> = ends.iter().map(|&(u, _)| u).collect();
        for &i in &live {
            self.edges[i] = None;
        }
        let pairs = cycle_pairs(&nodes);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let sa = ends[k].1;
            let sb = ends[(k + 1) % ends.len()].1;
            let scp = sa.scp().min(sb.scp());
            let edge = Edge {
                source: if directed || a < b { a } else { b },
                target: if directed || a < b { b } else { a },
                state: EdgeState::swapped(scp)?,
                origin: EdgeOrigin::SwapProduct,
            };
            self.push(edge);
        }
        let isolated = self.live(v, Memory::All).is_empty();
        Ok(Some((
            SwapReport {
                centers_swapped: 1,
                edges_consumed: q,
                edges_created: pairs.len(),
                nodes_isolated: usize::from(isolated),
            },
            nodes,
        )))
    }
}

fn mark_neighbors(g: &mut EntangledGraph, nodes: &[NodeId]) {
    for &u in nodes {
        if g.flag(u) == NodeFlag::Eligible {
            g.set_flag(u, NodeFlag::SwapNeighbor).expect("node in range");
        }
    }
}

/// q-swap on an undirected network.
///
/// A node fires iff it is [`NodeFlag::Eligible`], has exactly `q` live
/// incident edges, all pure, towards `q` distinct neighbours. Its edges are
/// replaced by a cycle of swapped edges over the neighbours in ascending id
/// order (a single bridge when `q = 2`).
pub fn qswap_undirected(
    g: &EntangledGraph,
    q: usize,
    seed: u64,
) -> Result<(EntangledGraph, SwapReport), PreprocessError> {
    check_q(q)?;
    if g.is_directed() {
        return Err(PreprocessError::NeedsUndirected("qswap_undirected"));
    }
    let mut out = g.clone();
    let mut ws = Workspace::new(g);
    let mut rng = stream(seed, 0);
    let mut report = SwapReport::default();
    for v in visit_order(g.node_count(), &mut rng) {
        if out.flag(v) != NodeFlag::Eligible {
            continue;
        }
        if let Some((r, ends)) = ws.try_swap(v, q, Memory::All, false)? {
            report.absorb(r);
            out.set_flag(v, NodeFlag::Measured)?;
            mark_neighbors(&mut out, &ends);
        }
    }
    ws.finish(&mut out);
    Ok((out, report))
}

/// q-swap on a directed network, in-flow pass first, then out-flow pass.
///
/// An in-swap at `v` consumes the `q_in` edges pointing into `v` and links
/// their sources by the directed cycle `s1 -> s2 -> ... -> sq -> s1` (ascending
/// id). Out-swaps are symmetric over targets. A node may fire once per
/// direction; swap neighbours from either pass never fire afterwards.
pub fn qswap_directed(
    g: &EntangledGraph,
    q_in: Option<usize>,
    q_out: Option<usize>,
    seed: u64,
) -> Result<(EntangledGraph, SwapReport), PreprocessError> {
    if !g.is_directed() {
        return Err(PreprocessError::NeedsDirected("qswap_directed"));
    }
    if q_in.is_none() && q_out.is_none() {
        return Err(PreprocessError::NoDirection);
    }
    for q in q_in.iter().chain(q_out.iter()) {
        check_q(*q)?;
    }
    let mut out = g.clone();
    let mut ws = Workspace::new(g);
    let mut report = SwapReport::default();
    let mut blocked: Vec<bool> = out.flags().iter().map(|&f| f == NodeFlag::SwapNeighbor).collect();
    let passes = [(q_in, Memory::InFlow, 0u64), (q_out, Memory::OutFlow, 1u64)];
    for (q, memory, pass) in passes {
        let Some(q) = q else { continue };
        let mut rng = stream(seed, pass);
        let mut fired = vec![false; g.node_count()];
        for v in visit_order(g.node_count(), &mut rng) {
            // a center from the other pass keeps the Measured flag but may fire here
            if blocked[v] || fired[v] {
                continue;
            }
            if let Some((r, ends)) = ws.try_swap(v, q, memory, true)? {
                fired[v] = true;
                report.absorb(r);
                out.set_flag(v, NodeFlag::Measured)?;
                mark_neighbors(&mut out, &ends);
                for u in ends {
                    blocked[u] = true;
                }
            }
        }
    }
    ws.finish(&mut out);
    Ok((out, report))
}

/// How a quantum-walk GHZ triple percolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WalkMode {
    /// The chord is an ordinary pure edge converting on its own.
    #[default]
    TriangleIndependent,
    /// The triple is one hyper-edge merging all three nodes in a single trial.
    AtomicGhz,
}

/// Quantum-walk rewrite.
///
/// Nodes are visited in seeded random order. At each node the incident pure
/// edges not yet used by another pair are shuffled and paired off; a pair
/// `u - v - w` with `u != w` gains a chord `u - w` (or a GHZ triple in
/// [`WalkMode::AtomicGhz`]). Both pair edges stay in the graph and are only
/// marked as used. Chords are never paired again.
pub fn walk_rewrite(
    g: &EntangledGraph,
    mode: WalkMode,
    seed: u64,
) -> Result<(EntangledGraph, SwapReport), PreprocessError> {
    if g.is_directed() {
        return Err(PreprocessError::NeedsUndirected("walk_rewrite"));
    }
    let mut out = g.clone();
    let incidence = g.incidence();
    let edges = g.edges();
    let mut used = vec![false; edges.len()];
    let mut rng = stream(seed, 0);
    let mut report = SwapReport::default();
    let mut chords = Vec::new();
    for v in visit_order(g.node_count(), &mut rng) {
        let mut free: Vec<usize> = incidence[v]
            .iter()
            .copied()
            .filter(|&i| !used[i] && edges[i].state.is_pure())
            .collect();
        free.shuffle(&mut rng);
        let mut fired = false;
        for pair in free.chunks_exact(2) {
            let (a, b) = (edges[pair[0]], edges[pair[1]]);
            let (u, w) = (a.other(v), b.other(v));
            if u == w {
                continue;
            }
            used[pair[0]] = true;
            used[pair[1]] = true;
            fired = true;
            // the weaker of the two input states sets the chord
            let state = if a.state.scp() <= b.state.scp() { a.state } else { b.state };
            match mode {
                WalkMode::TriangleIndependent => chords.push((u, w, state)),
                WalkMode::AtomicGhz => out.add_ghz([u, v, w], state.scp())?,
            }
            report.edges_created += 1;
        }
        report.centers_swapped += usize::from(fired);
    }
    for (u, w, state) in chords {
        out.add_edge(u, w, state, EdgeOrigin::WalkChord)?;
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeOrigin, EdgeState};

    fn graph(n: usize, edges: &[(usize, usize)]) -> EntangledGraph {
        let mut g = EntangledGraph::new(n, false).unwrap();
        for &(u, v) in edges {
            g.add_edge(u, v, EdgeState::Pure(0.8), EdgeOrigin::Lattice).unwrap();
        }
        g
    }

    fn digraph(n: usize, edges: &[(usize, usize)]) -> EntangledGraph {
        let mut g = EntangledGraph::new(n, true).unwrap();
        for &(u, v) in edges {
            g.add_edge(u, v, EdgeState::Pure(0.8), EdgeOrigin::Lattice).unwrap();
        }
        g
    }

    #[test]
    fn path_two_swap() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let (h, r) = qswap_undirected(&g, 2, 1).unwrap();
        assert_eq!(h.edge_count(), 1);
        let e = h.edges()[0];
        assert_eq!((e.source, e.target), (0, 2));
        assert_eq!(e.state, EdgeState::Swapped(EdgeState::Pure(0.8).scp()));
        assert_eq!(e.origin, EdgeOrigin::SwapProduct);
        assert_eq!(h.degrees(), vec![1, 0, 1]);
        assert_eq!(h.flag(1), NodeFlag::Measured);
        assert_eq!(
            r,
            SwapReport {
                centers_swapped: 1,
                edges_consumed: 2,
                edges_created: 1,
                nodes_isolated: 1
            }
        );
    }

    #[test]
    fn triangle_fires_exactly_once() {
        for seed in 0..20 {
            let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
            let (h, r) = qswap_undirected(&g, 2, seed).unwrap();
            assert_eq!(r.centers_swapped, 1);
            let center = (0..3).find(|&v| h.flag(v) == NodeFlag::Measured).unwrap();
            let others: Vec<_> = (0..3).filter(|&v| v != center).collect();
            assert!(others.iter().all(|&v| h.flag(v) == NodeFlag::SwapNeighbor));
            assert_eq!(h.edge_count(), 2);
            assert!(h
                .edges()
                .iter()
                .all(|e| (e.source, e.target) == (others[0], others[1])));
            assert_eq!(h.edges().iter().filter(|e| e.state.is_pure()).count(), 1);
        }
    }

    #[test]
    fn six_ring_two_swap_makes_triangle() {
        let ring: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        for seed in 0..30 {
            let (h, r) = qswap_undirected(&graph(6, &ring), 2, seed).unwrap();
            let measured: Vec<_> = (0..6).filter(|&v| h.flag(v) == NodeFlag::Measured).collect();
            // the enumeration: the first fired center blocks both neighbours, so
            // the only way to exhaust the ring is one parity class
            assert!(r.centers_swapped >= 2 && r.centers_swapped <= 3);
            if r.centers_swapped == 3 {
                assert!(measured.iter().all(|v| v % 2 == measured[0] % 2));
                assert_eq!(h.edge_count(), 3);
                assert!(h.edges().iter().all(|e| !e.state.is_pure()));
                let deg = h.degrees();
                assert!((0..6).all(|v| deg[v] == if measured.contains(&v) { 0 } else { 2 }));
            }
        }
        // some seed yields the full 3-cycle
        assert!((0..30).any(|s| qswap_undirected(&graph(6, &ring), 2, s).unwrap().1.centers_swapped == 3));
    }

    #[test]
    fn higher_q_builds_cycle() {
        // star with 4 leaves
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let (h, r) = qswap_undirected(&g, 4, 0).unwrap();
        assert_eq!(r.edges_created, 4);
        assert_eq!(r.centers_swapped, 1);
        let pairs: Vec<_> = h.edges().iter().map(|e| (e.source, e.target)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (3, 4), (1, 4)]);
    }

    #[test]
    fn parallel_edges_block_center() {
        let g = graph(3, &[(0, 1), (0, 1)]);
        let (h, r) = qswap_undirected(&g, 2, 0).unwrap();
        assert_eq!(r.centers_swapped, 0);
        assert_eq!(h, g);
    }

    #[test]
    fn qswap_errors() {
        let g = graph(3, &[(0, 1)]);
        assert_eq!(qswap_undirected(&g, 1, 0).unwrap_err(), PreprocessError::InvalidQ(1));
        let d = digraph(3, &[(0, 1)]);
        assert!(matches!(qswap_undirected(&d, 2, 0), Err(PreprocessError::NeedsUndirected(_))));
        assert!(matches!(qswap_directed(&g, Some(2), None, 0), Err(PreprocessError::NeedsDirected(_))));
        assert_eq!(qswap_directed(&d, None, None, 0).unwrap_err(), PreprocessError::NoDirection);
        assert!(matches!(walk_rewrite(&d, WalkMode::TriangleIndependent, 0), Err(PreprocessError::NeedsUndirected(_))));
    }

    #[test]
    fn directed_in_swap_star() {
        let g = digraph(5, &[(1, 0), (2, 0), (3, 0), (0, 4)]);
        let (h, r) = qswap_directed(&g, Some(3), None, 0).unwrap();
        assert_eq!(r.centers_swapped, 1);
        assert_eq!(r.nodes_isolated, 0);
        assert_eq!(h.in_degrees()[0], 0);
        assert_eq!(h.out_degrees()[0], 1);
        let pairs: Vec<_> = h
            .edges()
            .iter()
            .filter(|e| e.origin == EdgeOrigin::SwapProduct)
            .map(|e| (e.source, e.target))
            .collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (3, 1)]);
    }

    #[test]
    fn directed_out_swap_after_in_swap_same_node() {
        let g = digraph(5, &[(1, 0), (2, 0), (0, 3), (0, 4)]);
        let (h, r) = qswap_directed(&g, Some(2), Some(2), 0).unwrap();
        assert_eq!(r.centers_swapped, 2);
        assert_eq!(r.nodes_isolated, 1);
        assert_eq!(h.degrees()[0], 0);
        assert_eq!(h.edge_count(), 2);
    }

    #[test]
    fn directed_no_match_is_identity() {
        let g = digraph(3, &[(0, 1), (1, 2)]);
        let (h, r) = qswap_directed(&g, Some(4), None, 0).unwrap();
        assert_eq!(r, SwapReport::default());
        assert_eq!(h, g);
    }

    #[test]
    fn walk_path_triangle() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let (h, r) = walk_rewrite(&g, WalkMode::TriangleIndependent, 4).unwrap();
        assert_eq!(h.edge_count(), 3);
        let chord = h.edges()[2];
        assert_eq!((chord.source, chord.target, chord.origin), (0, 2, EdgeOrigin::WalkChord));
        assert_eq!(chord.state, EdgeState::Pure(0.8));
        assert_eq!(r.edges_created, 1);
        assert_eq!(r.edges_consumed, 0);
    }

    #[test]
    fn walk_isolated_edge_unchanged() {
        let g = graph(2, &[(0, 1)]);
        let (h, r) = walk_rewrite(&g, WalkMode::TriangleIndependent, 4).unwrap();
        assert_eq!(h, g);
        assert_eq!(r, SwapReport::default());
    }

    #[test]
    fn walk_star_pairs_leaves() {
        for seed in 0..10 {
            let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
            let (h, r) = walk_rewrite(&g, WalkMode::TriangleIndependent, seed).unwrap();
            assert_eq!(r.edges_created, 2);
            assert_eq!(h.edge_count(), 6);
            let chords: Vec<_> = h.edges()[4..].iter().collect();
            assert!(chords.iter().all(|e| e.source != 0 && e.target != 0));
            let mut touched: Vec<_> = chords.iter().flat_map(|e| [e.source, e.target]).collect();
            touched.sort();
            assert_eq!(touched, vec![1, 2, 3, 4]);
        }
    }

    #[test]
    fn walk_ghz_mode_records_triples() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let (h, r) = walk_rewrite(&g, WalkMode::AtomicGhz, 4).unwrap();
        assert_eq!(h.edge_count(), 2);
        assert_eq!(h.ghz_triples().len(), 1);
        assert_eq!(h.ghz_triples()[0].nodes[1], 1);
        assert_eq!(r.edges_created, 1);
    }
}
