//! Multi-request compilation on one grid.
//!
//! Requests are served greedily by priority on a working copy of the
//! cluster. Each candidate route is tried on a scratch copy first and kept
//! only if it isolates its pair without cutting into a pending terminal.
//! Later requests see the stitched graph left by earlier ones, so they can
//! cross earlier seams but never enter a hole or the end and turning zones
//! of an earlier line.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{build, BlockError, BlockSpec};
use crate::graph::{Basis, GraphState, VertexId};
use crate::lattice::{grid_cluster, is_corner, GridCoord, GridLattice};
use crate::plan::{BasisCounts, MeasurementPlan, Step};
use crate::zipper::{is_isolated_pair, isolate, route_candidates, run_zipper, sweep, ZipperResult};

/// Randomized routes tried after the deterministic ones.
const JITTER_ROUTES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestKind {
    Bell,
    Ghz,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingRequest {
    pub kind: RequestKind,
    pub terminals: Vec<GridCoord>,
    #[serde(default)]
    pub priority: i64,
}

impl RoutingRequest {
    pub fn bell(a: GridCoord, b: GridCoord) -> Self {
        RoutingRequest {
            kind: RequestKind::Bell,
            terminals: vec![a, b],
            priority: 0,
        }
    }

    pub fn ghz(terminals: Vec<GridCoord>) -> Self {
        RoutingRequest {
            kind: RequestKind::Ghz,
            terminals,
            priority: 0,
        }
    }

    pub fn with_priority(self, priority: i64) -> Self {
        RoutingRequest { priority, ..self }
    }

    /// Terminal count, distinctness and bounds.
    pub fn validate(&self, lat: &GridLattice) -> Result<(), String> {
        let want = match self.kind {
            RequestKind::Bell => self.terminals.len() == 2,
            RequestKind::Ghz => self.terminals.len() >= 3,
        };
        if !want {
            return Err(format!(
                "{:?} request with {} terminals",
                self.kind,
                self.terminals.len()
            ));
        }
        for t in &self.terminals {
            if !lat.contains(*t) {
                return Err(format!(
                    "terminal {t} outside the {}x{} grid",
                    lat.rows, lat.cols
                ));
            }
        }
        let distinct: BTreeSet<_> = self.terminals.iter().collect();
        if distinct.len() != self.terminals.len() {
            return Err("terminals repeat".into());
        }
        Ok(())
    }
}

/// Route taken by a served request, kept for conflict replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedPath {
    pub request: usize,
    pub terminals: Vec<GridCoord>,
    /// X-measured cells, in sweep order.
    pub path: Vec<GridCoord>,
    pub holes: BTreeSet<GridCoord>,
    /// Grid neighborhood of the endpoints and turning cells.
    pub zone: BTreeSet<GridCoord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedRequest {
    pub request: usize,
    pub tag: String,
    pub kind: RequestKind,
    /// The Bell pair, or the linear cluster in chain order.
    pub entangled: Vec<GridCoord>,
    pub route: RoutedPath,
    pub stitched_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRequest {
    pub request: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTotals {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub holes: usize,
    pub stitched_edges: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub served: Vec<ServedRequest>,
    pub rejected: Vec<RejectedRequest>,
    pub totals: PlanTotals,
}

impl PlanReport {
    pub fn routes(&self) -> Vec<RoutedPath> {
        self.served.iter().map(|s| s.route.clone()).collect()
    }

    pub fn all_served(&self) -> bool {
        self.rejected.is_empty()
    }
}

/// Endpoints and real turns of a route, each with its grid neighborhood.
/// Corners of a diagonal staircase do not count as turns.
fn zone_of(
    g: &GraphState,
    lat: &GridLattice,
    path: &[VertexId],
    ends: (VertexId, VertexId),
) -> BTreeSet<GridCoord> {
    let mut seq = vec![ends.0];
    seq.extend_from_slice(path);
    seq.push(ends.1);
    let mut centers = vec![ends.0, ends.1];
    for w in seq.windows(3) {
        if !is_corner(g, w[0], w[1], w[2]) {
            centers.extend_from_slice(w);
        }
    }
    let mut out = BTreeSet::new();
    for t in centers {
        let c = lat.coord(t);
        out.insert(c);
        out.extend(lat.neighbors(c));
    }
    out
}

struct Compiler<'a> {
    lat: &'a GridLattice,
    g: GraphState,
    plan: MeasurementPlan,
    report: PlanReport,
    /// Terminals of served and pending requests.
    reserved: BTreeSet<VertexId>,
    /// Cells no later path may use: earlier zones.
    zones: FixedBitSet,
    /// Pending terminals measured by an earlier request, and by which.
    cut_by: BTreeMap<VertexId, usize>,
    seed: u64,
}

impl Compiler<'_> {
    fn blocked(&self, own: &[VertexId]) -> FixedBitSet {
        let mut b = self.zones.clone();
        for r in &self.reserved {
            if !own.contains(r) {
                b.insert(r.index());
            }
        }
        b
    }

    fn candidates(
        &self,
        b1: VertexId,
        b2: VertexId,
        own: &[VertexId],
        salt: u64,
    ) -> Vec<Vec<VertexId>> {
        if self.g.has_edge(b1, b2) {
            return vec![Vec::new()];
        }
        let seed = self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        route_candidates(
            &self.g,
            Some(self.lat),
            b1,
            b2,
            &self.blocked(own),
            JITTER_ROUTES,
            seed,
        )
    }

    fn release(&mut self, req: &RoutingRequest) {
        for t in &req.terminals {
            self.reserved.remove(&self.lat.vertex(*t));
        }
    }

    fn cuts_reserved(&self, holes: &[VertexId]) -> usize {
        holes.iter().filter(|h| self.reserved.contains(h)).count()
    }

    fn serve_bell(&mut self, index: usize, req: &RoutingRequest) -> Result<(), String> {
        let (b1, b2) = (
            self.lat.vertex(req.terminals[0]),
            self.lat.vertex(req.terminals[1]),
        );
        let mut last = "no route avoids holes and zones".to_string();
        // fewest pending terminals cut, then fewest holes, then candidate order
        let mut best: Option<((usize, usize), Vec<VertexId>, ZipperResult)> = None;
        for path in self.candidates(b1, b2, &[b1, b2], index as u64) {
            let res = match run_zipper(&self.g, &path, (b1, b2)) {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            if !is_isolated_pair(&res.graph, b1, b2) {
                last = "pair not isolated".into();
                continue;
            }
            let score = (self.cuts_reserved(&res.holes), res.holes.len());
            if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                best = Some((score, path, res));
            }
        }
        match best {
            Some((_, path, res)) => {
                self.commit_bell(index, req, path, res);
                Ok(())
            }
            None => Err(last),
        }
    }

    fn commit_bell(
        &mut self,
        index: usize,
        req: &RoutingRequest,
        path: Vec<VertexId>,
        res: ZipperResult,
    ) {
        let (b1, b2) = (
            self.lat.vertex(req.terminals[0]),
            self.lat.vertex(req.terminals[1]),
        );
        let route = RoutedPath {
            request: index,
            terminals: req.terminals.clone(),
            path: path.iter().map(|&v| self.lat.coord(v)).collect(),
            holes: res.holes.iter().map(|&v| self.lat.coord(v)).collect(),
            zone: zone_of(&self.g, self.lat, &path, (b1, b2)),
        };
        let stitched = res.stitched_edges.len();
        self.commit(
            index,
            req,
            res.graph,
            res.plan,
            req.terminals.clone(),
            route,
            stitched,
        );
    }

    /// Chain sweeps: `t0 -> t1` with `t0` as special neighbor, then
    /// `t1 -> t2` with `t1`, and so on; then isolate all terminals.
    fn serve_ghz(&mut self, index: usize, req: &RoutingRequest) -> Result<(), String> {
        let ts: Vec<VertexId> = req.terminals.iter().map(|&t| self.lat.vertex(t)).collect();
        let mut g = self.g.clone();
        let mut steps = Vec::new();
        let mut path_all = Vec::new();
        let mut zone = BTreeSet::new();
        for (k, w) in ts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let saved = std::mem::replace(&mut self.g, g.clone());
            let cands = self.candidates(a, b, &ts, (index as u64) << 8 | k as u64);
            self.g = saved;
            let mut done = false;
            for path in cands {
                let mut h = g.clone();
                let Ok(swept) = sweep(&mut h, &path, a) else {
                    continue;
                };
                if h.has_edge(a, b) {
                    zone.extend(zone_of(&g, self.lat, &path, (a, b)));
                    steps.extend(swept);
                    path_all.extend(path.iter().copied());
                    g = h;
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(format!(
                    "no route from {} to {}",
                    self.lat.coord(a),
                    self.lat.coord(b)
                ));
            }
        }
        let holes = isolate(&mut g, &ts);
        let comp = g.component(ts[0]);
        let linear = comp.len() == ts.len()
            && ts.windows(2).all(|w| g.has_edge(w[0], w[1]))
            && ts.iter().map(|&t| g.degree(t)).sum::<usize>() == 2 * (ts.len() - 1);
        if !linear {
            return Err("terminals do not form a linear cluster".into());
        }
        steps.extend(holes.iter().map(|&h| Step::z(h)));
        let before = self.g.clone();
        let stitched = g
            .edges()
            .into_iter()
            .filter(|&(a, b)| !before.has_edge(a, b) && !(ts.contains(&a) && ts.contains(&b)))
            .count();
        let route = RoutedPath {
            request: index,
            terminals: req.terminals.clone(),
            path: path_all.iter().map(|&v| self.lat.coord(v)).collect(),
            holes: holes.iter().map(|&v| self.lat.coord(v)).collect(),
            zone,
        };
        self.commit(
            index,
            req,
            g,
            MeasurementPlan { steps },
            req.terminals.clone(),
            route,
            stitched,
        );
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn commit(
        &mut self,
        index: usize,
        req: &RoutingRequest,
        g: GraphState,
        plan: MeasurementPlan,
        entangled: Vec<GridCoord>,
        route: RoutedPath,
        stitched: usize,
    ) {
        let tag = format!("r{index}");
        for t in &self.reserved {
            if self.g.is_active(*t) && !g.is_active(*t) {
                self.cut_by.insert(*t, index);
            }
        }
        for c in &route.zone {
            self.zones.insert(self.lat.vertex(*c).index());
        }
        self.g = g;
        self.plan.extend(plan.tagged(&tag));
        self.report.served.push(ServedRequest {
            request: index,
            tag,
            kind: req.kind,
            entangled,
            route,
            stitched_edges: stitched,
        });
    }
}

/// Serve `requests` on a fresh `lat` cluster in priority order (higher
/// first, ties by input order). Never fails: requests that cannot be served
/// are listed with a reason. Identical inputs give identical plans.
pub fn compile(
    lat: &GridLattice,
    requests: &[RoutingRequest],
    seed: u64,
) -> (MeasurementPlan, PlanReport) {
    let (g, _) = grid_cluster(lat.rows, lat.cols).expect("lattice has nonzero size");
    compile_on(&g, lat, requests, seed)
}

/// As [`compile`], starting from an existing graph on `lat`.
pub fn compile_on(
    g: &GraphState,
    lat: &GridLattice,
    requests: &[RoutingRequest],
    seed: u64,
) -> (MeasurementPlan, PlanReport) {
    let mut c = Compiler {
        lat,
        g: g.clone(),
        plan: MeasurementPlan::new(),
        report: PlanReport::default(),
        reserved: BTreeSet::new(),
        zones: FixedBitSet::with_capacity(lat.vertex_count()),
        cut_by: BTreeMap::new(),
        seed,
    };
    let mut order: Vec<usize> = Vec::new();
    let mut claimed: BTreeSet<GridCoord> = BTreeSet::new();
    for (i, r) in requests.iter().enumerate() {
        let reason = r.validate(lat).err().or_else(|| {
            r.terminals
                .iter()
                .find(|t| claimed.contains(t))
                .map(|t| format!("terminal {t} already used by another request"))
        });
        match reason {
            Some(reason) => c
                .report
                .rejected
                .push(RejectedRequest { request: i, reason }),
            None => {
                claimed.extend(r.terminals.iter().copied());
                order.push(i);
            }
        }
    }
    order.sort_by_key(|&i| std::cmp::Reverse(requests[i].priority));
    c.reserved = order
        .iter()
        .flat_map(|&i| requests[i].terminals.iter().map(|&t| lat.vertex(t)))
        .collect();
    for &i in &order {
        let req = &requests[i];
        if let Some(&t) = req
            .terminals
            .iter()
            .find(|&&t| !c.g.is_active(lat.vertex(t)))
        {
            let reason = match c.cut_by.get(&lat.vertex(t)) {
                Some(by) => format!("terminal {t} cut by request r{by}"),
                None => format!("terminal {t} already measured"),
            };
            c.release(req);
            c.report
                .rejected
                .push(RejectedRequest { request: i, reason });
            continue;
        }
        let result = match req.kind {
            RequestKind::Bell => c.serve_bell(i, req),
            RequestKind::Ghz => c.serve_ghz(i, req),
        };
        if let Err(reason) = result {
            c.release(req);
            c.report
                .rejected
                .push(RejectedRequest { request: i, reason });
        }
    }
    c.report.rejected.sort_by_key(|r| r.request);
    let counts: BasisCounts = c.plan.counts();
    c.report.totals = PlanTotals {
        x: counts.x,
        y: counts.y,
        z: counts.z,
        holes: c.report.served.iter().map(|s| s.route.holes.len()).sum(),
        stitched_edges: c.report.served.iter().map(|s| s.stitched_edges).sum(),
    };
    (c.plan, c.report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conflict {
    /// A later path runs through a hole of an earlier one.
    PathThroughHole {
        earlier: usize,
        later: usize,
        cell: GridCoord,
    },
    /// A later path enters the end or turning zone of an earlier one.
    ZoneCrossing {
        earlier: usize,
        later: usize,
        cell: GridCoord,
    },
    SharedTerminal {
        first: usize,
        second: usize,
        cell: GridCoord,
    },
}

/// Check routes in serving order against each other.
pub fn conflict_check(lat: &GridLattice, routed: &[RoutedPath]) -> Vec<Conflict> {
    let mut out = Vec::new();
    for (j, later) in routed.iter().enumerate() {
        for earlier in &routed[..j] {
            for &cell in &later.path {
                if !lat.contains(cell) {
                    continue;
                }
                if earlier.holes.contains(&cell) {
                    out.push(Conflict::PathThroughHole {
                        earlier: earlier.request,
                        later: later.request,
                        cell,
                    });
                }
                if earlier.zone.contains(&cell) {
                    out.push(Conflict::ZoneCrossing {
                        earlier: earlier.request,
                        later: later.request,
                        cell,
                    });
                }
            }
            for &cell in &later.terminals {
                if earlier.terminals.contains(&cell) {
                    out.push(Conflict::SharedTerminal {
                        first: earlier.request,
                        second: later.request,
                        cell,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("blocks {first} and {second} both occupy {cell}")]
    OverlappingFootprints {
        first: usize,
        second: usize,
        cell: GridCoord,
    },
    #[error("block {index}: {source}")]
    Block {
        index: usize,
        #[source]
        source: BlockError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    /// Sum of block costs, intermediates excluded.
    pub qubits: usize,
    /// Intermediates kept between block stages.
    pub intermediates: usize,
    /// Inclusive bounding box of every cell the blocks touch.
    pub min: GridCoord,
    pub max: GridCoord,
}

impl ResourceEstimate {
    /// Rows and columns of the smallest grid holding every block.
    pub fn grid_size(&self) -> (usize, usize) {
        (self.max.row + 1, self.max.col + 1)
    }
}

/// Qubits needed by a set of blocks and the area they span.
pub fn resource_estimate(specs: &[BlockSpec]) -> Result<ResourceEstimate, PlannerError> {
    let mut owner: std::collections::BTreeMap<GridCoord, usize> = std::collections::BTreeMap::new();
    let mut est = ResourceEstimate {
        qubits: 0,
        intermediates: 0,
        min: GridCoord::new(usize::MAX, usize::MAX),
        max: GridCoord::new(0, 0),
    };
    for (index, spec) in specs.iter().enumerate() {
        let b = build(spec).map_err(|source| PlannerError::Block { index, source })?;
        for &cell in &b.footprint.occupied {
            if let Some(&first) = owner.get(&cell) {
                return Err(PlannerError::OverlappingFootprints {
                    first,
                    second: index,
                    cell,
                });
            }
            owner.insert(cell, index);
        }
        est.qubits += b.footprint.qubit_cost;
        est.intermediates += b.footprint.intermediates.len();
        for c in b.footprint.cells() {
            est.min = GridCoord::new(est.min.row.min(c.row), est.min.col.min(c.col));
            est.max = GridCoord::new(est.max.row.max(c.row), est.max.col.max(c.col));
        }
    }
    if specs.is_empty() {
        est.min = GridCoord::new(0, 0);
    }
    Ok(est)
}

/// Isolation baseline for one Bell request: take the L-shaped shortest
/// path (along the row first), Z-measure every other neighbor of the path
/// and its ends, then Y-measure the path from the source side.
pub fn baseline_isolation(lat: &GridLattice, request: &RoutingRequest) -> MeasurementPlan {
    let (a, b) = (request.terminals[0], request.terminals[1]);
    let mut cells = Vec::new();
    let mut cur = a;
    while cur.col != b.col {
        cur.col = if b.col > cur.col {
            cur.col + 1
        } else {
            cur.col - 1
        };
        cells.push(cur);
    }
    while cur.row != b.row {
        cur.row = if b.row > cur.row {
            cur.row + 1
        } else {
            cur.row - 1
        };
        cells.push(cur);
    }
    cells.pop();
    let path: Vec<VertexId> = cells.iter().map(|&c| lat.vertex(c)).collect();
    let keep: BTreeSet<VertexId> = path
        .iter()
        .copied()
        .chain([lat.vertex(a), lat.vertex(b)])
        .collect();
    let mut z = BTreeSet::new();
    for &k in &keep {
        for n in lat.neighbors(lat.coord(k)) {
            let v = lat.vertex(n);
            if !keep.contains(&v) {
                z.insert(v);
            }
        }
    }
    let mut plan = MeasurementPlan::new();
    plan.steps.extend(z.into_iter().map(Step::z));
    plan.steps.extend(path.into_iter().map(Step::y));
    plan
}

/// Edges among the active vertices of `g`.
pub fn active_edges(g: &GraphState) -> usize {
    g.edges().len()
}

/// Basis counts of a plan restricted to one basis, for comparisons.
pub fn count_basis(plan: &MeasurementPlan, basis: Basis) -> usize {
    plan.steps.iter().filter(|s| s.basis == basis).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{BlockExtra, BlockKind, Lines, Orientation};
    use crate::zipper::run_zipper;

    fn gc(r: usize, c: usize) -> GridCoord {
        GridCoord::new(r, c)
    }

    #[test]
    fn single_request_matches_zipper() {
        let lat = GridLattice::new(5, 5).unwrap();
        let (plan, report) = compile(&lat, &[RoutingRequest::bell(gc(0, 0), gc(4, 4))], 1);
        assert!(report.all_served());
        let (g, _) = grid_cluster(5, 5).unwrap();
        let path: Vec<VertexId> = report.served[0]
            .route
            .path
            .iter()
            .map(|&c| lat.vertex(c))
            .collect();
        let direct = run_zipper(&g, &path, (lat.vertex(gc(0, 0)), lat.vertex(gc(4, 4)))).unwrap();
        let mut stripped = plan.clone();
        for s in &mut stripped.steps {
            s.tag = None;
        }
        assert_eq!(stripped, direct.plan);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let lat = GridLattice::new(3, 3).unwrap();
        let reqs = [
            RoutingRequest::bell(gc(0, 0), gc(5, 5)),
            RoutingRequest::bell(gc(0, 0), gc(0, 0)),
            RoutingRequest::ghz(vec![gc(0, 0), gc(2, 2)]),
        ];
        let (plan, report) = compile(&lat, &reqs, 0);
        assert!(plan.is_empty());
        assert_eq!(report.rejected.len(), 3);
    }

    #[test]
    fn priority_orders_service() {
        let lat = GridLattice::new(6, 6).unwrap();
        let reqs = [
            RoutingRequest::bell(gc(0, 0), gc(2, 2)),
            RoutingRequest::bell(gc(5, 5), gc(3, 3)).with_priority(5),
        ];
        let (plan, report) = compile(&lat, &reqs, 0);
        assert_eq!(report.served[0].request, 1);
        assert_eq!(plan.steps[0].tag.as_deref(), Some("r1"));
    }

    #[test]
    fn compile_is_deterministic() {
        let lat = GridLattice::new(7, 7).unwrap();
        let reqs = [
            RoutingRequest::bell(gc(0, 1), gc(5, 6)),
            RoutingRequest::bell(gc(6, 0), gc(0, 5)),
        ];
        let a = compile(&lat, &reqs, 9);
        let b = compile(&lat, &reqs, 9);
        assert_eq!(a, b);
    }

    #[test]
    fn conflicts_are_detected() {
        let lat = GridLattice::new(6, 6).unwrap();
        let far = |i, path: Vec<GridCoord>, t: Vec<GridCoord>| RoutedPath {
            request: i,
            terminals: t,
            path,
            holes: BTreeSet::new(),
            zone: BTreeSet::new(),
        };
        let a = far(0, vec![gc(0, 1)], vec![gc(0, 0), gc(0, 2)]);
        let b = far(1, vec![gc(5, 4)], vec![gc(5, 3), gc(5, 5)]);
        assert!(conflict_check(&lat, &[a.clone(), b]).is_empty());
        let mut a2 = a.clone();
        a2.holes.insert(gc(3, 3));
        a2.zone.insert(gc(3, 3));
        let c = far(2, vec![gc(3, 3)], vec![gc(0, 2), gc(4, 4)]);
        let found = conflict_check(&lat, &[a2, c]);
        assert!(found.contains(&Conflict::PathThroughHole {
            earlier: 0,
            later: 2,
            cell: gc(3, 3)
        }));
        assert!(found.contains(&Conflict::ZoneCrossing {
            earlier: 0,
            later: 2,
            cell: gc(3, 3)
        }));
        assert!(found.contains(&Conflict::SharedTerminal {
            first: 0,
            second: 2,
            cell: gc(0, 2)
        }));
    }

    #[test]
    fn resource_examples() {
        let spec = |kind, n, length| BlockSpec {
            kind,
            lines: Lines::Count(n),
            anchor: gc(1, 1),
            orientation: Orientation::E,
            mirrored: false,
            extra: BlockExtra {
                length,
                ..Default::default()
            },
        };
        assert_eq!(
            resource_estimate(&[spec(BlockKind::LTurn, 4, None)])
                .unwrap()
                .qubits,
            16
        );
        assert_eq!(
            resource_estimate(&[spec(BlockKind::VTurn, 3, None)])
                .unwrap()
                .qubits,
            18
        );
        let t = resource_estimate(&[spec(BlockKind::ParallelTransport, 3, Some(6))]).unwrap();
        assert_eq!(t.qubits, 18);
        assert_eq!(t.max.col - t.min.col + 1, 8);
        let err = resource_estimate(&[
            spec(BlockKind::LTurn, 2, None),
            spec(BlockKind::LTurn, 2, None),
        ])
        .unwrap_err();
        assert!(matches!(err, PlannerError::OverlappingFootprints { .. }));
    }

    #[test]
    fn baseline_on_a_line() {
        let lat = GridLattice::new(1, 3).unwrap();
        let plan = baseline_isolation(&lat, &RoutingRequest::bell(gc(0, 0), gc(0, 2)));
        assert_eq!(plan.steps, vec![Step::y(VertexId(1))]);
        let lat = GridLattice::new(5, 5).unwrap();
        let plan = baseline_isolation(&lat, &RoutingRequest::bell(gc(2, 0), gc(2, 4)));
        let (mut g, _) = grid_cluster(5, 5).unwrap();
        plan.execute(&mut g).unwrap();
        assert!(is_isolated_pair(
            &g,
            lat.vertex(gc(2, 0)),
            lat.vertex(gc(2, 4))
        ));
        // every neighbor of the row is cut
        assert_eq!(count_basis(&plan, Basis::Z), 10);
    }
}
