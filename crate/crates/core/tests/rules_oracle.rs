//! Graph rules against the state-vector oracle on random small graphs.

use gsroute::oracle::{
    lockstep_lc, lockstep_measure, statevector_from_graph, OutcomePolicy, DEFAULT_CAP,
    STABILIZER_TOL,
};
use gsroute::{Basis, GraphState, VertexId};
use proptest::prelude::*;

fn graph(n: usize, bits: &[bool]) -> GraphState {
    let mut edges = Vec::new();
    let mut k = 0;
    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            if bits[k] {
                edges.push((a, b));
            }
            k += 1;
        }
    }
    GraphState::from_edges(n, &edges).unwrap()
}

#[derive(Debug, Clone)]
struct Op {
    kind: u8,
    pick: usize,
    special: usize,
    seed: u64,
}

fn op() -> impl Strategy<Value = Op> {
    (0u8..4, any::<usize>(), any::<usize>(), any::<u64>()).prop_map(
        |(kind, pick, special, seed)| Op {
            kind,
            pick,
            special,
            seed,
        },
    )
}

/// Apply `ops` in lockstep and return the worst stabilizer deviation.
fn run(n: usize, bits: &[bool], ops: &[Op]) -> f64 {
    let mut g = graph(n, bits);
    let mut s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
    for o in ops {
        let active = g.active_vertices();
        if active.is_empty() {
            break;
        }
        let v = active[o.pick % active.len()];
        let nb = g.neighbors(v);
        let special = (!nb.is_empty()).then(|| nb[o.special % nb.len()]);
        match o.kind {
            0 => lockstep_lc(&mut s, &mut g, v).unwrap(),
            k => {
                let basis = [Basis::X, Basis::Y, Basis::Z][k as usize - 1];
                lockstep_measure(
                    &mut s,
                    &mut g,
                    v,
                    basis,
                    special,
                    OutcomePolicy::Sampled(o.seed),
                )
                .unwrap();
            }
        }
    }
    s.worst_stabilizer_deviation(&g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rules_track_the_state(n in 2usize..=7, bits in prop::collection::vec(any::<bool>(), 21), ops in prop::collection::vec(op(), 0..=8)) {
        prop_assert!(run(n, &bits, &ops) <= STABILIZER_TOL);
    }
}

#[test]
fn x_on_a_star_with_every_special() {
    // center 0, leaves 1..4, plus a leaf-leaf edge
    for special in 1..4u32 {
        let mut g = GraphState::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let mut s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        lockstep_measure(
            &mut s,
            &mut g,
            VertexId(0),
            Basis::X,
            Some(VertexId(special)),
            OutcomePolicy::Sampled(3),
        )
        .unwrap();
        assert!(
            s.worst_stabilizer_deviation(&g).unwrap() <= STABILIZER_TOL,
            "special {special}"
        );
    }
}

#[test]
fn single_precision_is_looser() {
    let mut g = GraphState::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let mut s = statevector_from_graph::<f32>(&g, DEFAULT_CAP).unwrap();
    lockstep_measure(
        &mut s,
        &mut g,
        VertexId(1),
        Basis::X,
        Some(VertexId(2)),
        OutcomePolicy::Sampled(1),
    )
    .unwrap();
    let dev = s.worst_stabilizer_deviation(&g).unwrap();
    assert!(dev < 1e-5);
}
