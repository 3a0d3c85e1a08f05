//! Network families: Watts-Strogatz, Kleinberg, Erdos-Renyi and the regular
//! lattices used as baselines. Every generated edge carries the same pure
//! state.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::graph::{EdgeOrigin, EdgeState, EntangledGraph, GraphError, NodeId};
use crate::rng::stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, GeneratorError> {
    Err(GeneratorError::InvalidParameters(msg.into()))
}

/// A network family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Ws { n: usize, k: usize, beta: f64 },
    Kleinberg { side: usize, long_range: usize, exponent: f64 },
    Er { n: usize, mean_degree: f64 },
    SquareLattice { side: usize },
    RingRegular { n: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub lambda1: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<EntangledGraph, GeneratorError> {
        match self.family {
            Family::Ws { n, k, beta } => generate_ws(n, k, beta, self.lambda1, self.seed),
            Family::Kleinberg {
                side,
                long_range,
                exponent,
            } => generate_kleinberg(side, long_range, exponent, self.lambda1, self.seed),
            Family::Er { n, mean_degree } => generate_er(n, mean_degree, self.lambda1, self.seed),
            Family::SquareLattice { side } => generate_square_lattice(side, self.lambda1),
            Family::RingRegular { n, k } => generate_ring_regular(n, k, self.lambda1),
        }
    }
}

fn check_ring(n: usize, k: usize) -> Result<(), GeneratorError> {
    if !k.is_multiple_of(2) {
        return invalid(format!("mean degree k = {k} must be even"));
    }
    if n <= k {
        return invalid(format!("need n > k, got n = {n}, k = {k}"));
    }
    Ok(())
}

/// Watts-Strogatz small world.
///
/// Starts from a ring where every node links to its `k/2` nearest neighbours
/// on each side. Edges `(u, u + j)` are scanned for `j = 1..=k/2` (outer) and
/// `u = 0..n` (inner); each is rewired with probability `beta` by moving its
/// far endpoint to a uniformly chosen node that is neither `u` nor already a
/// neighbour of `u`. The edge count stays `n k / 2`.
pub fn generate_ws(
    n: usize,
    k: usize,
    beta: f64,
    lambda1: f64,
    seed: u64,
) -> Result<EntangledGraph, GeneratorError> {
    check_ring(n, k)?;
    if !(0.0..=1.0).contains(&beta) {
        return invalid(format!("rewire probability {beta} outside [0, 1]"));
    }
    let state = EdgeState::pure(lambda1)?;
    let mut rng = stream(seed, 0);

    let half = k / 2;
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    // slot (j - 1) * n + u holds the current endpoints of edge (u, u + j)
    let mut slots: Vec<(NodeId, NodeId, EdgeOrigin)> = Vec::with_capacity(n * half);
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
            slots.push((u, v, EdgeOrigin::Lattice));
        }
    }

    if beta > 0.0 {
        for slot in slots.iter_mut() {
            let (u, v, _) = *slot;
            if rng.gen::<f64>() >= beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
            *slot = (u, w, EdgeOrigin::Rewired);
        }
    }

    let mut g = EntangledGraph::new(n, false)?;
    for (u, v, origin) in slots {
        g.add_edge(u, v, state, origin)?;
    }
    Ok(g)
}

/// Regular ring: every node joined to its `k/2` nearest neighbours per side.
pub fn generate_ring_regular(n: usize, k: usize, lambda1: f64) -> Result<EntangledGraph, GeneratorError> {
    generate_ws(n, k, 0.0, lambda1, 0)
}

/// Open-boundary `side x side` square lattice, node id `row * side + col`.
pub fn generate_square_lattice(side: usize, lambda1: f64) -> Result<EntangledGraph, GeneratorError> {
    if side < 2 {
        return invalid(format!("lattice side {side} < 2"));
    }
    let state = EdgeState::pure(lambda1)?;
    let mut g = EntangledGraph::new(side * side, false)?;
    for (u, v) in lattice_adjacencies(side) {
        g.add_edge(u, v, state, EdgeOrigin::Lattice)?;
    }
    Ok(g)
}

/// Each unordered nearest-neighbour pair of an open `side x side` lattice once.
fn lattice_adjacencies(side: usize) -> impl Iterator<Item = (NodeId, NodeId)> {
    (0..side).flat_map(move |r| {
        (0..side).flat_map(move |c| {
            let v = r * side + c;
            let right = (c + 1 < side).then_some((v, v + 1));
            let down = (r + 1 < side).then_some((v, v + side));
            right.into_iter().chain(down)
        })
    })
}

/// Manhattan distance between two lattice sites.
pub fn manhattan(side: usize, a: NodeId, b: NodeId) -> usize {
    let (ra, ca) = (a / side, a % side);
    let (rb, cb) = (b / side, b % side);
    ra.abs_diff(rb) + ca.abs_diff(cb)
}

/// Long-range link weights `d(x, y)^-exponent` from `source` to every node
/// (zero at `source` itself), unnormalized.
pub fn kleinberg_weights(side: usize, source: NodeId, exponent: f64) -> Vec<f64> {
    (0..side * side)
        .map(|y| {
            if y == source {
                0.0
            } else {
                (manhattan(side, source, y) as f64).powf(-exponent)
            }
        })
        .collect()
}

/// Directed Kleinberg small world on an open `side x side` lattice.
///
/// Every lattice adjacency contributes one directed edge each way. Each node
/// then draws `long_range` distinct targets with probability proportional to
/// `d^-exponent` (Manhattan distance), redrawing on repeats.
pub fn generate_kleinberg(
    side: usize,
    long_range: usize,
    exponent: f64,
    lambda1: f64,
    seed: u64,
) -> Result<EntangledGraph, GeneratorError> {
    if side < 2 {
        return invalid(format!("lattice side {side} < 2"));
    }
    if !(exponent >= 0.0 && exponent.is_finite()) {
        return invalid(format!("clustering exponent {exponent} must be finite and >= 0"));
    }
    let n = side * side;
    if long_range > n - 1 {
        return invalid(format!("{long_range} long-range links per node but only {} other nodes", n - 1));
    }
    let state = EdgeState::pure(lambda1)?;
    let mut rng = stream(seed, 0);
    let mut g = EntangledGraph::new(n, true)?;
    for (u, v) in lattice_adjacencies(side) {
        g.add_edge(u, v, state, EdgeOrigin::Lattice)?;
        g.add_edge(v, u, state, EdgeOrigin::Lattice)?;
    }
    if long_range == 0 {
        return Ok(g);
    }
    for source in 0..n {
        let weights = kleinberg_weights(side, source, exponent);
        let dist = WeightedIndex::new(&weights).expect("at least one other node");
        let mut chosen = BTreeSet::new();
        let mut picks = Vec::with_capacity(long_range);
        while picks.len() < long_range {
            let t = dist.sample(&mut rng);
            if chosen.insert(t) {
                picks.push(t);
            }
        }
        for t in picks {
            g.add_edge(source, t, state, EdgeOrigin::LongRange)?;
        }
    }
    Ok(g)
}

/// Erdos-Renyi `G(n, p)` with `p = mean_degree / (n - 1)`.
pub fn generate_er(n: usize, mean_degree: f64, lambda1: f64, seed: u64) -> Result<EntangledGraph, GeneratorError> {
    if n < 2 {
        return invalid(format!("need at least 2 nodes, got {n}"));
    }
    if !(mean_degree > 0.0 && mean_degree <= (n - 1) as f64) {
        return invalid(format!("mean degree {mean_degree} outside (0, {}]", n - 1));
    }
    let state = EdgeState::pure(lambda1)?;
    let p = mean_degree / (n - 1) as f64;
    let mut rng = stream(seed, 0);
    let mut g = EntangledGraph::new(n, false)?;
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v, state, EdgeOrigin::Random)?;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{degree_stats, serialize};

    #[test]
    fn ws_without_rewiring_is_a_ring() {
        let g = generate_ws(10, 4, 0.0, 0.8, 3).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!(g.degrees().iter().all(|&d| d == 4));
        assert!(g.edges().iter().all(|e| e.origin == EdgeOrigin::Lattice));
    }

    #[test]
    fn ws_parameter_errors() {
        assert!(generate_ws(10, 3, 0.1, 0.8, 0).is_err());
        assert!(generate_ws(4, 4, 0.1, 0.8, 0).is_err());
        assert!(generate_ws(10, 4, 1.5, 0.8, 0).is_err());
        assert!(generate_ws(10, 4, 0.1, 0.3, 0).is_err());
    }

    #[test]
    fn ws_full_rewiring_keeps_simple_graph() {
        let g = generate_ws(1000, 6, 1.0, 0.8, 11).unwrap();
        assert_eq!(g.edge_count(), 3000);
        assert_eq!(g.degrees(), g.distinct_neighbor_counts());
        assert_eq!(degree_stats(&g).mean_k(), 6.0);
    }

    #[test]
    fn ring_regular_degrees() {
        let g = generate_ring_regular(1000, 6, 0.75).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 6));
    }

    #[test]
    fn square_lattice_counts() {
        let g = generate_square_lattice(30, 0.75).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (900, 1740));
        let g = generate_square_lattice(2, 0.75).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 4));
        assert!(generate_square_lattice(1, 0.75).is_err());
    }

    #[test]
    fn kleinberg_small_and_degrees() {
        let g = generate_kleinberg(2, 0, 2.0, 0.75, 0).unwrap();
        assert_eq!(g.edge_count(), 8);
        assert!(g.out_degrees().iter().all(|&d| d == 2));

        let side = 30;
        let g = generate_kleinberg(side, 2, 2.0, 0.75, 5).unwrap();
        let out = g.out_degrees();
        for r in 1..side - 1 {
            for c in 1..side - 1 {
                assert_eq!(out[r * side + c], 6);
            }
        }
        assert_eq!(out[0], 4);
        assert_eq!(out[1], 5);
        assert!(generate_kleinberg(2, 4, 2.0, 0.75, 0).is_err());
        assert!(generate_kleinberg(3, 1, -1.0, 0.75, 0).is_err());
    }

    #[test]
    fn er_edge_cases() {
        let g = generate_er(2, 1.0, 0.75, 9).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(generate_er(10, 0.0, 0.75, 0).is_err());
        assert!(generate_er(10, 9.5, 0.75, 0).is_err());
        assert!(generate_er(1, 0.5, 0.75, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = serialize(&generate_ws(200, 6, 0.3, 0.8, 42).unwrap());
        let b = serialize(&generate_ws(200, 6, 0.3, 0.8, 42).unwrap());
        let c = serialize(&generate_ws(200, 6, 0.3, 0.8, 43).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
        let a = serialize(&generate_kleinberg(8, 2, 2.0, 0.8, 1).unwrap());
        let b = serialize(&generate_kleinberg(8, 2, 2.0, 0.8, 1).unwrap());
        assert_eq!(a, b);
    }
}
