use dqip_core::network::{
    allocate_layout, build_network, spanning_tree, verify_node, verify_spanning_tree, LayoutSizes,
};
use dqip_core::protocol::{acceptance_probability, random_spec, random_strategy, RandomSpecConfig};
use dqip_core::qcore::{
    fidelity, haar_random_state, haar_random_unitary, trace_distance, DensityOperator, QuantumState, C64,
};
use proptest::prelude::*;

fn mixed(q: usize, seeds: &[u64], weights: &[f64]) -> DensityOperator {
    let states: Vec<QuantumState> = seeds.iter().map(|&s| haar_random_state(q, s).unwrap()).collect();
    let total: f64 = weights.iter().sum();
    let parts: Vec<(f64, &[C64])> = states
        .iter()
        .zip(weights)
        .map(|(s, w)| (w / total, s.amplitudes()))
        .collect();
    DensityOperator::mixture(q, &parts).unwrap()
}

/// Connected graph: a random tree plus extra edges.
fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..8).prop_flat_map(|n| {
        let tree = (1..n).map(|v| (0..v).prop_map(move |p| (p, v))).collect::<Vec<_>>();
        let extra = prop::collection::vec((0..n, 0..n), 0..n);
        (Just(n), tree, extra).prop_map(|(n, mut edges, extra)| {
            for (a, b) in extra {
                if a != b && !edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
                    edges.push((a, b));
                }
            }
            (n, edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(q in 1usize..5, seed: u64, target in 0usize..4) {
        let mut s = haar_random_state(q, seed).unwrap();
        let u = haar_random_unitary(1, seed ^ 1).unwrap();
        s.apply(&u, &[target % q]).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        s.apply(&u.adjoint(), &[target % q]).unwrap();
        let back = haar_random_state(q, seed).unwrap();
        prop_assert!((s.inner(&back).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_and_distance_are_symmetric(q in 1usize..4, a: [u64; 2], b: [u64; 2], w in 0.05f64..1.0) {
        let rho = mixed(q, &a, &[w, 1.0 - w + 0.05]);
        let sigma = mixed(q, &b, &[1.0, w]);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-9);
        let d = trace_distance(&rho, &sigma).unwrap();
        prop_assert!((d - trace_distance(&sigma, &rho).unwrap()).abs() < 1e-12);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pure_fidelity_is_the_overlap(q in 1usize..4, a: u64, b: u64) {
        let x = haar_random_state(q, a).unwrap();
        let y = haar_random_state(q, b).unwrap();
        let f = fidelity(&x.to_density(), &y.to_density()).unwrap();
        prop_assert!((f - x.inner(&y).unwrap().norm()).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(qa in 1usize..3, qb in 1usize..3, a: u64, b: u64) {
        let x = haar_random_state(qa, a).unwrap();
        let y = haar_random_state(qb, b).unwrap();
        let joint = x.tensor(&y);
        let keep: Vec<usize> = (0..qa).collect();
        let reduced = joint.partial_trace(&keep).unwrap();
        prop_assert!((reduced.trace().re - 1.0).abs() < 1e-12);
        let diff = reduced.matrix() - x.to_density().matrix();
        prop_assert!(diff.norm() < 1e-10);
        let other: Vec<usize> = (qa..qa + qb).collect();
        let diff = joint.partial_trace(&other).unwrap().matrix() - y.to_density().matrix();
        prop_assert!(diff.norm() < 1e-10);
    }

    #[test]
    fn bfs_trees_verify_everywhere((n, edges) in graph_strategy(), root_pick: usize) {
        let g = build_network(n, &edges, Vec::new()).unwrap();
        let root = root_pick % n;
        let t = spanning_tree(&g, root);
        prop_assert!(verify_spanning_tree(&g, &t).iter().all(|&b| b));
        let dist = g.distances_from(root);
        prop_assert_eq!(&t.distance, &dist);
    }

    #[test]
    fn corrupted_depth_is_caught_locally((n, edges) in graph_strategy(), pick: usize, bump in 1usize..3) {
        let g = build_network(n, &edges, Vec::new()).unwrap();
        let mut t = spanning_tree(&g, 0);
        let u = pick % n;
        t.distance[u] += bump;
        let verdict = verify_spanning_tree(&g, &t);
        prop_assert!(!verdict[u] || (0..n).any(|v| t.parent[v] == Some(u) && !verify_node(&g, &t, v)));
    }

    #[test]
    fn layout_registers_tile_the_qubits((n, edges) in graph_strategy(), private in 0usize..2, message in 0usize..2, edge in 0usize..2) {
        let g = build_network(n.min(4), &edges.into_iter().filter(|&(a, b)| a < 4 && b < 4).collect::<Vec<_>>(), Vec::new());
        prop_assume!(g.is_ok());
        let g = g.unwrap();
        let sizes = LayoutSizes { prover: 1, private, message, edge, extras: Vec::new() };
        let Ok(layout) = allocate_layout(&g, &sizes) else { return Ok(()) };
        let mut next = 0;
        for r in layout.registers() {
            prop_assert_eq!(r.qubits().start, next);
            next = r.qubits().end;
        }
        prop_assert_eq!(next, layout.total_qubits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_protocols_give_probabilities(seed: u64, coins: bool, measurements: bool) {
        let config = RandomSpecConfig { coins, measurements, ..RandomSpecConfig::default() };
        let spec = random_spec(&config, seed).unwrap();
        let strategy = random_strategy(&spec, seed ^ 7).unwrap();
        let p = acceptance_probability(&spec, &strategy).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        prop_assert_eq!(p, acceptance_probability(&spec, &strategy).unwrap());
    }
}
