use dqip_core::dam::{
    brute_force_value, toy_protocols, DamProtocol, DamRule, DamVar, Randomness,
};
use dqip_core::network::NetworkGraph;
use dqip_core::protocol::BoolExpr;

/// Direct transcription of the coin-echo rule on a 2-node path, with the
/// max/avg/max quantifiers written out.
fn coin_echo_oracle(x: [bool; 2]) -> f64 {
    let accept = |a: [bool; 2], r: [bool; 2], e: [bool; 2]| {
        let c = [a[0] ^ e[0], a[1] ^ e[1]];
        if c[0] != c[1] || c[0] != r[0] || (r[0] && r[1]) {
            return false;
        }
        if !c[0] {
            return a[0] == x[0] && a[1] == (a[0] ^ x[1]) && !a[1];
        }
        true
    };
    let bits = |v: u8| [v & 1 == 1, v & 2 == 2];
    let mut best: f64 = 0.0;
    for a in 0..4 {
        let mut total = 0.0;
        for r in 0..4 {
            let ok = (0..4).any(|e| accept(bits(a), bits(r), bits(e)));
            total += ok as u8 as f64;
        }
        best = best.max(total / 4.0);
    }
    best
}

#[test]
fn catalog_values() {
    let cat = toy_protocols().unwrap();
    assert!(cat.len() >= 2);
    let bip = &cat[0];
    assert_eq!(bip.completeness, 1.0);
    assert!(bip.soundness < 1.0);
    let echo = &cat[1];
    assert_eq!(echo.protocol.turns, 3);
    assert_eq!(echo.completeness, coin_echo_oracle([true, true]));
    assert_eq!(echo.soundness, coin_echo_oracle([true, false]));
    assert_eq!(echo.completeness, 0.75);
    assert_eq!(echo.soundness, 0.25);
    assert!(echo.completeness.powi(2) > echo.soundness);
    for e in &cat {
        assert!(e.completeness >= e.soundness, "{}", e.protocol.name);
    }
}

#[test]
fn always_accept_is_one() {
    let p = DamProtocol {
        name: "accept".into(),
        turns: 2,
        bits: 1,
        randomness: Randomness::Private,
        rule: DamRule::AlwaysAccept,
    };
    let v = brute_force_value(&p, &NetworkGraph::cycle(3)).unwrap();
    assert_eq!(v.numerator, v.denominator);
    assert_eq!(v.denominator, 8);
}

#[test]
fn shared_coin_equals_private_with_identical_coins() {
    // Merlin must guess the coin of the previous Arthur turn one turn early,
    // then repeat it. Node-local view: own coin and own certificates.
    let n = 2;
    let rule = DamRule::Custom(
        (0..n)
            .map(|u| {
                BoolExpr::equal(
                    BoolExpr::atom(DamVar::Cert { turn: 1, node: u, bit: 0 }),
                    BoolExpr::atom(DamVar::Rand { turn: 2, node: u, bit: 0 }),
                )
            })
            .collect(),
    );
    let mk = |randomness| DamProtocol {
        name: "guess".into(),
        turns: 3,
        bits: 1,
        randomness,
        rule: rule.clone(),
    };
    let g = NetworkGraph::path(n);
    let shared = brute_force_value(&mk(Randomness::Shared), &g).unwrap();
    // private coins restricted to the diagonal r_0 = r_1: Merlin fixes two
    // certificate bits before one fair bit is drawn, so the best is to agree
    // with each other and win with probability 1/2
    assert_eq!((shared.numerator, shared.denominator), (1, 2));
    let private = brute_force_value(&mk(Randomness::Private), &g).unwrap();
    // independent coins: each node matches with probability 1/2
    assert_eq!((private.numerator, private.denominator), (1, 4));
}

#[test]
fn optimal_tables_reproduce_the_value() {
    let cat = toy_protocols().unwrap();
    let echo = &cat[1];
    let v = brute_force_value(&echo.protocol, &echo.yes_instance).unwrap();
    // replay the tables against the oracle predicate
    let x = [true, true];
    let a_bits = v.strategy[0].certificates[0];
    let a = [a_bits & 1 == 1, a_bits & 2 == 2];
    assert_eq!(a, [true, false]);
    let mut wins = 0;
    for r in 0..4u64 {
        let e_bits = v.strategy[1].certificates[r as usize];
        let e = [e_bits & 1 == 1, e_bits & 2 == 2];
        let c = [a[0] ^ e[0], a[1] ^ e[1]];
        let r0 = r & 1 == 1;
        let r1 = r & 2 == 2;
        let ok = c[0] == c[1]
            && c[0] == r0
            && !(r0 && r1)
            && (c[0] || (a[0] == x[0] && a[1] == (a[0] ^ x[1]) && !a[1]));
        wins += ok as u64;
    }
    assert_eq!(wins, v.numerator);
}
