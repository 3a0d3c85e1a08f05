use std::collections::BTreeMap;

use proptest::prelude::*;

use qperc::generators::{generate_er, generate_kleinberg, generate_ws};
use qperc::{
    qswap_directed, qswap_undirected, serialize, walk_rewrite, EdgeOrigin, EdgeState, EntangledGraph, NodeFlag,
    WalkMode,
};

fn multiset(g: &EntangledGraph) -> BTreeMap<(usize, usize, EdgeOrigin), usize> {
    let mut m = BTreeMap::new();
    for e in g.edges() {
        *m.entry((e.source, e.target, e.origin)).or_insert(0) += 1;
    }
    m
}

fn neighbours(g: &EntangledGraph, v: usize) -> Vec<usize> {
    let mut out: Vec<usize> = g
        .edges()
        .iter()
        .filter(|e| e.source == v || e.target == v)
        .map(|e| e.other(v))
        .collect();
    out.sort_unstable();
    out
}

fn arb_network() -> impl Strategy<Value = EntangledGraph> {
    prop_oneof![
        (20usize..120, 1usize..5, 0.0f64..0.6, any::<u64>())
            .prop_map(|(n, h, b, s)| generate_ws(n, 2 * h, b, 0.75, s).unwrap()),
        (20usize..120, 2.0f64..8.0, any::<u64>()).prop_map(|(n, k, s)| generate_er(n, k, 0.8, s).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qswap_accounting_and_exclusion(g in arb_network(), q in 2usize..9, seed: u64) {
        let (h, r) = qswap_undirected(&g, q, seed).unwrap();
        prop_assert_eq!(h.edge_count() + r.edges_consumed, g.edge_count() + r.edges_created);
        prop_assert_eq!(r.edges_consumed, q * r.centers_swapped);
        prop_assert_eq!(r.edges_created, if q == 2 { 1 } else { q } * r.centers_swapped);
        prop_assert_eq!(r.nodes_isolated, r.centers_swapped);
        let centers: Vec<usize> = (0..g.node_count()).filter(|&v| h.flag(v) == NodeFlag::Measured).collect();
        prop_assert_eq!(centers.len(), r.centers_swapped);
        for &c in &centers {
            let before = neighbours(&g, c);
            prop_assert_eq!(before.len(), q);
            prop_assert!(before.windows(2).all(|w| w[0] != w[1]));
            prop_assert!(neighbours(&h, c).is_empty());
            for u in before {
                prop_assert_eq!(h.flag(u), NodeFlag::SwapNeighbor);
            }
        }
        let original = g.edges().first().map(|e| e.state);
        for e in h.edges() {
            match e.state {
                EdgeState::Pure(_) => prop_assert_eq!(Some(e.state), original),
                EdgeState::Swapped(s) => {
                    prop_assert_eq!(e.origin, EdgeOrigin::SwapProduct);
                    prop_assert_eq!(Some(s), original.map(|o| o.scp()));
                    prop_assert_eq!(h.flag(e.source), NodeFlag::SwapNeighbor);
                    prop_assert_eq!(h.flag(e.target), NodeFlag::SwapNeighbor);
                }
            }
        }
        // a second pass finds nothing: eligible nodes never change their edges
        let (again, r2) = qswap_undirected(&h, q, seed ^ 1).unwrap();
        prop_assert_eq!(r2.centers_swapped, 0);
        prop_assert_eq!(serialize(&again), serialize(&h));
        prop_assert_eq!(serialize(&qswap_undirected(&g, q, seed).unwrap().0), serialize(&h));
    }

    #[test]
    fn walk_only_adds_edges(g in arb_network(), seed: u64, ghz: bool) {
        let mode = if ghz { WalkMode::AtomicGhz } else { WalkMode::TriangleIndependent };
        let (h, r) = walk_rewrite(&g, mode, seed).unwrap();
        prop_assert_eq!(r.edges_consumed, 0);
        let before = multiset(&g);
        let after = multiset(&h);
        for (k, c) in &before {
            prop_assert_eq!(after.get(k), Some(c));
        }
        match mode {
            WalkMode::TriangleIndependent => {
                prop_assert_eq!(h.edge_count(), g.edge_count() + r.edges_created);
                for e in h.edges().iter().filter(|e| e.origin == EdgeOrigin::WalkChord) {
                    let (a, b) = (neighbours(&g, e.source), neighbours(&g, e.target));
                    prop_assert!(a.iter().any(|x| b.binary_search(x).is_ok()));
                }
            }
            WalkMode::AtomicGhz => {
                prop_assert_eq!(h.edge_count(), g.edge_count());
                prop_assert_eq!(h.ghz_triples().len(), r.edges_created);
                for t in h.ghz_triples() {
                    let [u, v, w] = t.nodes;
                    let nv = neighbours(&g, v);
                    prop_assert!(nv.binary_search(&u).is_ok() && nv.binary_search(&w).is_ok());
                }
            }
        }
        prop_assert_eq!(serialize(&walk_rewrite(&g, mode, seed).unwrap().0), serialize(&h));
    }

    #[test]
    fn directed_swap_accounting(side in 4usize..9, seed: u64, q_in in 3usize..7, q_out in 3usize..8) {
        let g = generate_kleinberg(side, 2, 2.0, 0.75, seed).unwrap();
        let (h, r) = qswap_directed(&g, Some(q_in), Some(q_out), seed).unwrap();
        prop_assert_eq!(h.edge_count() + r.edges_consumed, g.edge_count() + r.edges_created);
        prop_assert!(h.is_directed());
        let swapped = h.edges().iter().filter(|e| !e.state.is_pure()).count();
        prop_assert_eq!(swapped, r.edges_created);
    }
}
