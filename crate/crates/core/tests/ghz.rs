use dqip_core::ghz::*;
use dqip_core::network::NetworkGraph;
use dqip_core::protocol::acceptance_probability;
use dqip_core::qcore::{Gate, QuantumState, C64};
use nalgebra::DMatrix;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

#[test]
fn ghz_two_qubits() {
    let g = ghz_state(2).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let want = [c(r), c(0.0), c(0.0), c(r)];
    for (a, b) in g.amplitudes().iter().zip(want) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn hadamards_on_leaves_turn_ghz_into_star() {
    for n in 2..=6 {
        let mut g = ghz_state(n).unwrap();
        for q in 1..n {
            g.apply(&Gate::h(), &[q]).unwrap();
        }
        let s = star_state(n).unwrap();
        let d: f64 = g
            .amplitudes()
            .iter()
            .zip(s.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(d <= 1e-12, "n = {n}: {d}");
    }
}

#[test]
fn star_three_matches_matrix_products() {
    // explicit 8x8 operators; qubit 0 is the least significant factor
    let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(-1.0)]) / c(2f64.sqrt());
    let h3 = kron(&h, &kron(&h, &h));
    let mut zero = DMatrix::<C64>::zeros(8, 1);
    zero[0] = c(1.0);
    let mut cz01 = DMatrix::<C64>::identity(8, 8);
    let mut cz02 = DMatrix::<C64>::identity(8, 8);
    for x in 0..8 {
        if x & 1 == 1 && x & 2 == 2 {
            cz01[(x, x)] = c(-1.0);
        }
        if x & 1 == 1 && x & 4 == 4 {
            cz02[(x, x)] = c(-1.0);
        }
    }
    let v = cz02 * cz01 * h3 * zero;
    let s = star_state(3).unwrap();
    for x in 0..8 {
        assert!((v[x] - s.amplitudes()[x]).norm() < 1e-14);
    }
}

/// Every product of |0>, |1>, |+>, |-> on n qubits.
fn product_inputs(n: usize) -> Vec<QuantumState> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let locals = [
        [c(1.0), c(0.0)],
        [c(0.0), c(1.0)],
        [c(r), c(r)],
        [c(r), c(-r)],
    ];
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let mut amps = vec![c(1.0)];
        let mut k = code;
        for _ in 0..n {
            let l = locals[k % 4];
            k /= 4;
            let mut next = vec![c(0.0); amps.len() * 2];
            for (i, a) in amps.iter().enumerate() {
                next[i] = a * l[0];
                next[i + amps.len()] = a * l[1];
            }
            amps = next;
        }
        out.push(QuantumState::from_amplitudes(amps).unwrap());
    }
    out
}

#[test]
fn local_tests_realize_the_projectors() {
    for n in 2..=4 {
        let (p0, p1) = stabilizer_tests(n).unwrap();
        for t in [&p0, &p1] {
            let m = &t.projector;
            assert!((m * m - m).norm() < 1e-10);
            assert!((m.adjoint() - m).norm() < 1e-10);
            for s in product_inputs(n) {
                let classical = t.pass_probability(&s).unwrap();
                let quantum = t.expectation(&s).unwrap();
                assert!((classical - quantum).abs() <= 1e-10, "n={n} color {}", t.color);
            }
        }
    }
}

#[test]
fn star_passes_both_tests() {
    for n in [3, 4] {
        let s = star_state(n).unwrap();
        let (p0, p1) = stabilizer_tests(n).unwrap();
        assert!((p0.expectation(&s).unwrap() - 1.0).abs() < 1e-12);
        assert!((p1.expectation(&s).unwrap() - 1.0).abs() < 1e-12);
        let z = QuantumState::zero(n);
        let closed = 0.5f64.powi(n as i32 - 1);
        assert!((p1.expectation(&z).unwrap() - closed).abs() < 1e-12);
    }
}

fn params(n: usize, copies: usize) -> GhzProtocolParams {
    GhzProtocolParams {
        nodes: n,
        copies,
        epsilon: 0.1,
        delta: 0.1,
        seed: 0,
    }
}

#[test]
fn honest_certification_is_perfect() {
    for (graph, copies) in [
        (NetworkGraph::path(3), 1),
        (NetworkGraph::path(3), 2),
        (NetworkGraph::cycle(4), 1),
        (NetworkGraph::path(4), 2),
    ] {
        let n = graph.node_count();
        let (spec, honest) = build_pghz(&graph, &params(n, copies)).unwrap();
        assert_eq!(spec.num_turns(), 5);
        let (acc, fid) = ghz_output_fidelity(&spec, &honest).unwrap();
        assert!((acc - 1.0).abs() < 1e-9, "n={n} N={copies}: {acc}");
        assert!(fid >= 1.0 - 1e-9, "n={n} N={copies}: {fid}");
    }
}

#[test]
fn unentangled_copies_are_caught() {
    let graph = NetworkGraph::path(3);
    let (spec, honest) = build_pghz(&graph, &params(3, 2)).unwrap();
    let mut cheat = honest.clone();
    for r in &mut cheat.moves[0].responses {
        r.ops.clear();
    }
    let (acc, fid) = ghz_output_fidelity(&spec, &cheat).unwrap();
    assert!(acc < 1.0 - 1e-6, "{acc}");
    assert!(fid < 1.0 - 1e-6, "{fid}");
}

#[test]
fn wrong_parity_label_is_rejected() {
    let graph = NetworkGraph::path(3);
    let (spec, honest) = build_pghz(&graph, &params(3, 1)).unwrap();
    let honest_acc = acceptance_probability(&spec, &honest).unwrap();
    let mut cheat = honest.clone();
    for r in &mut cheat.moves[2].responses {
        r.replies[0] ^= 1;
    }
    let acc = acceptance_probability(&spec, &cheat).unwrap();
    // the parity test runs with probability 1/2 and then always fails
    assert!((honest_acc - 1.0).abs() < 1e-9);
    assert!((acc - 0.5).abs() < 1e-9, "{acc}");
}

#[test]
fn parameters_are_validated() {
    let graph = NetworkGraph::path(3);
    assert!(build_pghz(&graph, &params(3, 0)).is_err());
    assert!(build_pghz(&graph, &params(4, 1)).is_err());
    let mut p = params(3, 1);
    p.epsilon = 1.5;
    assert!(build_pghz(&graph, &p).is_err());
}
