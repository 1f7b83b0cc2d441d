//! Zipper invariants on fresh grids.

use std::collections::BTreeSet;

use gsroute::lattice::{grid_cluster, staircase_path, GridCoord, GridLattice};
use gsroute::oracle::{verify_plan, DEFAULT_CAP};
use gsroute::zipper::{hole_region, is_isolated_pair, run_zipper, verify_restoration};
use gsroute::{GraphState, VertexId};
use proptest::prelude::*;

fn ends() -> impl Strategy<Value = (usize, usize, GridCoord, GridCoord)> {
    (2usize..=7, 2usize..=7)
        .prop_flat_map(|(r, c)| (Just(r), Just(c), 0..r, 0..c, 0..r, 0..c))
        .prop_filter("distinct", |(_, _, a, b, x, y)| (a, b) != (x, y))
        .prop_map(|(r, c, a, b, x, y)| (r, c, GridCoord::new(a, b), GridCoord::new(x, y)))
}

fn zip(
    rows: usize,
    cols: usize,
    a: GridCoord,
    b: GridCoord,
) -> (
    GraphState,
    GridLattice,
    Vec<VertexId>,
    gsroute::ZipperResult,
) {
    let (g, lat) = grid_cluster(rows, cols).unwrap();
    let path = staircase_path(&lat, a, b).unwrap().vertices(&lat);
    let res = run_zipper(&g, &path, (lat.vertex(a), lat.vertex(b))).unwrap();
    (g, lat, path, res)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn pair_is_isolated_and_holes_stay_local((rows, cols, a, b) in ends()) {
        let (g, lat, path, res) = zip(rows, cols, a, b);
        let (va, vb) = (lat.vertex(a), lat.vertex(b));
        prop_assert!(is_isolated_pair(&res.graph, va, vb));
        let region = hole_region(&g, &path, (va, vb));
        prop_assert!(res.holes.iter().all(|h| region.contains(h)), "holes {:?} outside {:?}", res.holes, region);
        let report = verify_restoration(&g, &path, &res);
        prop_assert!(report.stitch_pattern && report.detached, "{:?}", report.notes);
        // a 3-wide remainder leaves no room for a second zipper across
        if rows >= 4 && cols >= 4 {
            prop_assert!(report.composable, "{:?}", report.notes);
        }
    }

    #[test]
    fn plan_replays_to_the_same_graph((rows, cols, a, b) in ends()) {
        let (g, _, _, res) = zip(rows, cols, a, b);
        let vertices: BTreeSet<_> = res.plan.steps.iter().map(|s| s.vertex).collect();
        prop_assert_eq!(vertices.len(), res.plan.len());
        let mut h = g.clone();
        res.plan.execute(&mut h).unwrap();
        prop_assert_eq!(h, res.graph);
    }
}

#[test]
fn small_grids_pass_the_oracle() {
    for (rows, cols) in [(2, 3), (3, 3), (3, 4), (4, 4), (4, 5)] {
        let lat = GridLattice::new(rows, cols).unwrap();
        let far = GridCoord::new(rows - 1, cols - 1);
        for (a, b) in [
            (GridCoord::new(0, 0), far),
            (GridCoord::new(rows - 1, 0), GridCoord::new(0, cols - 1)),
        ] {
            let (g, _, _, res) = zip(rows, cols, a, b);
            let rep = verify_plan(&g, &res.plan, &res.graph, 4, 17, DEFAULT_CAP).unwrap();
            assert!(rep.passed, "{rows}x{cols} {a} {b}: {}", rep.worst_deviation);
        }
        let _ = lat;
    }
}
