//! Block generators: cost formulas, port orderings and oracle checks.

use std::collections::BTreeSet;

use gsroute::blocks::*;
use gsroute::lattice::{grid_cluster, GridCoord, GridLattice};
use gsroute::oracle::{verify_plan, DEFAULT_CAP};
use gsroute::zipper::is_isolated_pair;
use gsroute::{Basis, GraphState, MeasurementPlan, Step};
use proptest::prelude::*;

fn gc(r: usize, c: usize) -> GridCoord {
    GridCoord::new(r, c)
}

/// Fresh grid just large enough for `blocks`, plus `pad` on the far sides.
fn on_grid(blocks: &[Block], pad: usize) -> (GraphState, GridLattice, BlockRun) {
    let cells: BTreeSet<GridCoord> = blocks.iter().flat_map(|b| b.footprint.cells()).collect();
    let rows = cells.iter().map(|c| c.row).max().unwrap() + 1 + pad;
    let cols = cells.iter().map(|c| c.col).max().unwrap() + 1 + pad;
    let (g, lat) = grid_cluster(rows, cols).unwrap();
    let run = instantiate(blocks, &lat, &g).unwrap();
    (g, lat, run)
}

/// Where each line ends, keyed by its in-port.
fn routes(run: &BlockRun, b: &Block) -> Vec<GridCoord> {
    b.footprint
        .in_ports
        .iter()
        .map(|p| {
            let line = run
                .entangled
                .iter()
                .find(|l| l.first() == Some(p) || l.last() == Some(p))
                .expect("every port is served");
            if line[0] == *p {
                line[line.len() - 1]
            } else {
                line[0]
            }
        })
        .collect()
}

#[test]
fn cost_formulas_hold() {
    for n in 1..=16 {
        let l = l_turn(n, Placement::at(1, 1)).unwrap();
        assert_eq!(l.footprint.qubit_cost, n * n, "l_turn {n}");
        let v = v_turn(n, Placement::at(1, 1)).unwrap();
        assert_eq!(v.footprint.qubit_cost, 2 * n * n, "v_turn {n}");
        let t = parallel_transport(n, 2 * n, Placement::at(0, 1)).unwrap();
        assert!(t.footprint.length.unwrap() >= 2 * n, "transport {n}");
        for k in 0..=n {
            let m = merge_split(n, k, Placement::at(0, 0)).unwrap();
            assert_eq!(m.footprint.qubit_cost, 2 * k);
            let bases: Vec<Basis> = m
                .template
                .finish
                .iter()
                .map(|o| match o {
                    TemplateOp::Measure { basis, .. } => *basis,
                    other => panic!("unexpected {other:?}"),
                })
                .collect();
            assert_eq!(bases.iter().filter(|b| **b == Basis::X).count(), k);
            assert_eq!(bases.iter().filter(|b| **b == Basis::Z).count(), k);
        }
    }
}

#[test]
fn corridor_capacity_is_half_its_length() {
    for length in 2..=24 {
        for n in 1..=length {
            let ok = parallel_transport(n, length, Placement::at(0, 1)).is_ok();
            assert_eq!(ok, n <= length / 2, "{n} lines in {length}");
        }
    }
}

#[test]
fn supported_transport_lengths() {
    for n in 1..=4 {
        for cores in 1..=3 {
            let len = transport_length(n, cores);
            let b = parallel_transport(n, len, Placement::at(0, 1)).unwrap();
            assert_eq!(b.footprint.length, Some(len));
            assert_eq!(b.footprint.qubit_cost, cores * 2 * n * n);
        }
    }
}

#[test]
fn one_sweep_inverts_two_restore() {
    for n in 1..=5 {
        let l = l_turn(n, Placement::at(1, 1)).unwrap();
        let (_, _, run) = on_grid(std::slice::from_ref(&l), 1);
        let ends = routes(&run, &l);
        // in-ports run left to right, so reversed order means descending rows
        let mut sorted = ends.clone();
        sorted.sort_by_key(|c| std::cmp::Reverse(c.row));
        assert_eq!(ends, sorted, "L-turn {n}");
        assert_eq!(l.footprint.order_inverted, n > 1);

        let t = parallel_transport(n, 2 * n, Placement::at(0, 1)).unwrap();
        let (_, _, run) = on_grid(std::slice::from_ref(&t), 1);
        assert_eq!(routes(&run, &t), t.footprint.out_ports, "transport {n}");
        assert!(!t.footprint.order_inverted);
    }
}

#[test]
fn v_turn_and_straight_to_diagonal_serve_every_line() {
    for n in 1..=4 {
        for b in [
            v_turn(n, Placement::at(0, 1)).unwrap(),
            straight_to_diagonal(n, 2 * n, Placement::at(1, 1)).unwrap(),
        ] {
            let (_, _, run) = on_grid(std::slice::from_ref(&b), 1);
            assert_eq!(routes(&run, &b), b.footprint.out_ports, "{:?} {n}", b.kind);
            for l in &run.entangled {
                assert_eq!(l.len(), 2);
            }
        }
    }
}

#[test]
fn blocks_pass_the_oracle() {
    let cases = [
        l_turn(2, Placement::at(1, 0)).unwrap(),
        parallel_transport(2, 4, Placement::at(0, 1)).unwrap(),
        v_turn(2, Placement::at(0, 1)).unwrap(),
    ];
    for b in cases {
        let (g, _, run) = on_grid(std::slice::from_ref(&b), 0);
        assert!(
            g.vertex_count() <= DEFAULT_CAP,
            "{:?} grid too large",
            b.kind
        );
        let rep = verify_plan(&g, &run.plan, &run.graph, 6, 2, DEFAULT_CAP).unwrap();
        assert!(rep.passed, "{:?}: {}", b.kind, rep.worst_deviation);
    }
}

/// Merge steps on three lines that already arrive as `a' - a - b - b'`.
fn merge_on_chains(k: usize) -> (GraphState, GraphState, MeasurementPlan, GridLattice) {
    let (_, lat) = grid_cluster(3, 4).unwrap();
    let mut g = GraphState::new(12);
    for r in 0..3 {
        for c in 0..3 {
            g.toggle_edge(lat.vertex(gc(r, c)), lat.vertex(gc(r, c + 1)))
                .unwrap();
        }
    }
    let m = merge_split(3, k, Placement::at(0, 1)).unwrap();
    let mut plan = MeasurementPlan::new();
    for op in &m.template.finish {
        if let TemplateOp::Measure {
            cell,
            basis,
            special,
        } = op
        {
            let v = lat.vertex(*cell);
            plan.push(match (basis, special) {
                (Basis::X, Some(s)) => Step::x(v, lat.vertex(*s)),
                (Basis::Z, _) => Step::z(v),
                other => panic!("unexpected {other:?}"),
            });
        }
    }
    let mut after = g.clone();
    plan.execute(&mut after).unwrap();
    (g, after, plan, lat)
}

#[test]
fn three_line_merge_on_chains() {
    let (g, after, plan, lat) = merge_on_chains(3);
    for r in 0..3 {
        assert!(
            is_isolated_pair(&after, lat.vertex(gc(r, 0)), lat.vertex(gc(r, 3))),
            "line {r}"
        );
    }
    let rep = verify_plan(&g, &plan, &after, 8, 5, DEFAULT_CAP).unwrap();
    assert!(rep.passed, "{}", rep.worst_deviation);

    // a partial merge leaves the other lines as they were
    let (_, after, plan, lat) = merge_on_chains(1);
    assert_eq!(plan.len(), 2);
    assert!(is_isolated_pair(
        &after,
        lat.vertex(gc(0, 0)),
        lat.vertex(gc(0, 3))
    ));
    assert_eq!(after.degree(lat.vertex(gc(1, 1))), 2);
}

#[test]
fn ghz_extraction_is_a_linear_cluster() {
    let b = ghz_extract(gc(0, 0), gc(3, 4), &[gc(2, 2)]).unwrap();
    let (g, lat, run) = on_grid(std::slice::from_ref(&b), 0);
    assert_eq!(run.entangled, vec![vec![gc(0, 0), gc(2, 2), gc(3, 4)]]);
    let ends = [gc(0, 0), gc(2, 2), gc(3, 4)].map(|c| lat.vertex(c));
    assert_eq!(run.graph.component(ends[0]).len(), 3);
    let rep = verify_plan(&g, &run.plan, &run.graph, 6, 9, DEFAULT_CAP).unwrap();
    assert!(rep.passed, "{}", rep.worst_deviation);

    assert!(matches!(
        ghz_extract(gc(0, 0), gc(3, 4), &[gc(3, 0)]),
        Err(BlockError::ForbiddenKeptPosition(_))
    ));
    assert!(matches!(
        ghz_extract(gc(1, 1), gc(4, 4), &[gc(2, 2)]),
        Err(BlockError::ForbiddenKeptPosition(_))
    ));
    // no kept qubits is a plain zipper
    let b = ghz_extract(gc(0, 0), gc(3, 4), &[]).unwrap();
    let (_, _, run) = on_grid(std::slice::from_ref(&b), 0);
    assert_eq!(run.entangled, vec![vec![gc(0, 0), gc(3, 4)]]);
}

#[test]
fn crossings_pass_the_oracle() {
    let cases = [
        ((gc(0, 0), gc(3, 4)), (gc(3, 0), gc(0, 4))),
        ((gc(0, 0), gc(3, 3)), (gc(1, 3), gc(3, 0))),
        ((gc(0, 0), gc(1, 4)), (gc(0, 4), gc(1, 3))),
    ];
    for (a, b) in cases {
        let block = diagonal_crossing(&[a], &[b]).unwrap();
        let (g, lat) = grid_cluster(4, 5).unwrap();
        let run = instantiate(std::slice::from_ref(&block), &lat, &g).unwrap();
        for (s, d) in [a, b] {
            assert!(
                is_isolated_pair(&run.graph, lat.vertex(s), lat.vertex(d)),
                "{s} {d}"
            );
        }
        assert_eq!(run.entangled.len(), 2);
        let rep = verify_plan(&g, &run.plan, &run.graph, 4, 1, DEFAULT_CAP).unwrap();
        assert!(rep.passed, "{a:?} {b:?}: {}", rep.worst_deviation);
    }
    let err = diagonal_crossing(&[(gc(0, 0), gc(2, 2))], &[(gc(2, 2), gc(0, 3))]).unwrap_err();
    assert!(matches!(err, BlockError::ZoneConflict { .. }));
    // this one needs spare rows past the terminals, which a 4x5 grid lacks
    let tight = diagonal_crossing(&[(gc(0, 0), gc(2, 2))], &[(gc(1, 4), gc(2, 0))]).unwrap();
    let (g, lat) = grid_cluster(4, 5).unwrap();
    assert!(matches!(
        instantiate(&[tight], &lat, &g),
        Err(BlockError::OutOfBounds(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any orientation of an L-turn or V-turn serves every line on a grid
    /// with one spare row and column around it.
    #[test]
    fn placed_blocks_serve_every_line(n in 1usize..=3, o in 0usize..4, mirrored in any::<bool>(), v in any::<bool>()) {
        let orientation = [Orientation::N, Orientation::E, Orientation::S, Orientation::W][o];
        let at = Placement { anchor: gc(2, 2), orientation, mirrored };
        let b = if v { v_turn(n, at) } else { l_turn(n, at) }.unwrap();
        let (_, _, run) = on_grid(std::slice::from_ref(&b), 2);
        prop_assert_eq!(run.entangled.len(), n);
        prop_assert_eq!(routes(&run, &b), b.footprint.out_ports.clone());
        let occupied: BTreeSet<_> = run.plan.steps.iter().map(|s| s.vertex).collect();
        prop_assert_eq!(occupied.len(), run.plan.len());
    }
}
