//! Building blocks for a quantum data bus: several data lines zipped in
//! parallel so one region yields many Bell pairs at once.
//!
//! Each generator lays its block out in a canonical local frame, runs it on
//! a scratch cluster with a margin of 2 around it and records the explicit
//! measurement template. Multi-line blocks use the seam rule: the path of
//! line `k + 1` is the restoring chain left behind by line `k`, restricted
//! to the block region. Placement then applies a dihedral transform and a
//! shift so the occupied region starts at the anchor.
//!
//! Ports sit just outside the occupied region and stay unmeasured. Blocks
//! that join two stages keep intermediate qubits between them and remove
//! those in a finish phase after the ports have been isolated.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Basis, GraphError, GraphState, VertexId};
use crate::lattice::{grid_cluster, staircase_path, GridCoord, GridLattice};
use crate::plan::{MeasurementPlan, Step};
use crate::zipper::{
    hole_region, is_isolated_pair, restoring_chain, route_candidates, sweep, ZipperError,
};

/// Signed block-local position; ports may sit at row or column -1.
pub type Local = (i64, i64);

const MARGIN: i64 = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    N,
    #[default]
    E,
    S,
    W,
}

impl Orientation {
    /// `E` keeps the canonical frame; `S`, `W` and `N` turn it clockwise by
    /// one, two and three quarters.
    fn rotate(self, (r, c): Local) -> Local {
        match self {
            Orientation::E => (r, c),
            Orientation::S => (c, -r),
            Orientation::W => (-r, -c),
            Orientation::N => (-c, r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    LTurn,
    VTurn,
    ParallelTransport,
    StraightToDiagonal,
    DiagonalCrossing,
    MergeSplit,
    GhzExtract,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("cell ({}, {}) lies outside the grid", .0.0, .0.1)]
    OutOfBounds(Local),
    #[error("{lines} lines need a length of at least {}, got {length}", 2 * .lines)]
    BlockTooShort { lines: usize, length: usize },
    #[error("invalid line count: {0}")]
    InvalidLineCount(String),
    #[error("zone conflict at {at}: {reason}")]
    ZoneConflict { at: GridCoord, reason: String },
    #[error("kept qubit {0} cannot be kept on this staircase")]
    ForbiddenKeptPosition(GridCoord),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("port {0} did not end in a clean line")]
    NotIsolated(GridCoord),
    #[error(transparent)]
    Zipper(#[from] ZipperError),
}

impl From<GraphError> for BlockError {
    fn from(e: GraphError) -> Self {
        BlockError::Zipper(ZipperError::Graph(e))
    }
}

/// Where a block goes: the anchor is the minimum corner of the occupied
/// region after the transform.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub anchor: GridCoord,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub mirrored: bool,
}

impl Placement {
    pub fn at(row: usize, col: usize) -> Self {
        Placement {
            anchor: GridCoord::new(row, col),
            ..Default::default()
        }
    }

    pub fn turned(self, orientation: Orientation) -> Self {
        Placement {
            orientation,
            ..self
        }
    }

    pub fn mirror(self) -> Self {
        Placement {
            mirrored: !self.mirrored,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFootprint {
    /// Cells consumed by the block's own measurements.
    pub occupied: BTreeSet<GridCoord>,
    /// Cells Z-measured around the block on a fresh grid.
    pub z_holes: BTreeSet<GridCoord>,
    /// `out_ports[i]` is where the line entering at `in_ports[i]` leaves.
    pub in_ports: Vec<GridCoord>,
    pub out_ports: Vec<GridCoord>,
    /// Qubits kept between stages and measured in the finish phase, or
    /// kept for good (GHZ extraction). Not part of `qubit_cost`.
    pub intermediates: Vec<GridCoord>,
    pub qubit_cost: usize,
    /// Lines leave in the reverse of their order of arrival.
    pub order_inverted: bool,
    /// Corridor length actually used by a transport block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
}

impl BlockFootprint {
    /// Qubits used including intermediates.
    pub fn total_cost(&self) -> usize {
        self.qubit_cost + self.intermediates.len()
    }

    /// Every cell the block touches: occupied, ports and intermediates.
    pub fn cells(&self) -> BTreeSet<GridCoord> {
        let mut out = self.occupied.clone();
        out.extend(
            self.in_ports
                .iter()
                .chain(&self.out_ports)
                .chain(&self.intermediates),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplateOp<C> {
    /// X along `path` with `special` as LC neighbor.
    Sweep { path: Vec<C>, special: C },
    Measure {
        cell: C,
        basis: Basis,
        special: Option<C>,
    },
    /// Z every non-protected neighbor of `cells`.
    Isolate { cells: Vec<C> },
}

/// Measurement template. A final isolation runs between `main` and
/// `finish`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTemplate<C> {
    pub main: Vec<TemplateOp<C>>,
    pub finish: Vec<TemplateOp<C>>,
}

impl<C> Default for PlanTemplate<C> {
    fn default() -> Self {
        PlanTemplate {
            main: Vec::new(),
            finish: Vec::new(),
        }
    }
}

impl<C: Copy> PlanTemplate<C> {
    fn map<D>(&self, f: &impl Fn(C) -> D) -> PlanTemplate<D> {
        let op = |o: &TemplateOp<C>| match o {
            TemplateOp::Sweep { path, special } => TemplateOp::Sweep {
                path: path.iter().map(|&p| f(p)).collect(),
                special: f(*special),
            },
            TemplateOp::Measure {
                cell,
                basis,
                special,
            } => TemplateOp::Measure {
                cell: f(*cell),
                basis: *basis,
                special: special.map(f),
            },
            TemplateOp::Isolate { cells } => TemplateOp::Isolate {
                cells: cells.iter().map(|&p| f(p)).collect(),
            },
        };
        PlanTemplate {
            main: self.main.iter().map(op).collect(),
            finish: self.finish.iter().map(op).collect(),
        }
    }

    fn cells(&self) -> Vec<C> {
        let mut out = Vec::new();
        for o in self.main.iter().chain(&self.finish) {
            match o {
                TemplateOp::Sweep { path, special } => {
                    out.extend(path.iter().copied());
                    out.push(*special);
                }
                TemplateOp::Measure { cell, special, .. } => {
                    out.push(*cell);
                    out.extend(*special);
                }
                TemplateOp::Isolate { cells } => out.extend(cells.iter().copied()),
            }
        }
        out
    }
}

/// A generated block in grid coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub footprint: BlockFootprint,
    pub template: PlanTemplate<GridCoord>,
}

/// A block before placement.
struct Layout {
    kind: BlockKind,
    occupied: Vec<Local>,
    in_ports: Vec<Local>,
    out_ports: Vec<Local>,
    intermediates: Vec<Local>,
    template: PlanTemplate<Local>,
    length: Option<usize>,
    /// Check the block on its own scratch cluster while placing it.
    standalone: bool,
}

impl Layout {
    fn new(kind: BlockKind) -> Self {
        Layout {
            kind,
            occupied: Vec::new(),
            in_ports: Vec::new(),
            out_ports: Vec::new(),
            intermediates: Vec::new(),
            template: PlanTemplate::default(),
            length: None,
            standalone: true,
        }
    }

    fn protected(&self) -> Vec<Local> {
        self.in_ports
            .iter()
            .chain(&self.out_ports)
            .chain(&self.intermediates)
            .copied()
            .collect()
    }

    fn all_cells(&self) -> Vec<Local> {
        let mut out = self.protected();
        out.extend(self.occupied.iter().copied());
        out.extend(self.template.cells());
        out
    }

    /// Lines leave in the reverse of the order they arrive in, comparing
    /// positions along each side.
    fn order_inverted(&self) -> bool {
        if self.in_ports.len() < 2 {
            return false;
        }
        let mut idx: Vec<usize> = (0..self.in_ports.len()).collect();
        idx.sort_by_key(|&i| self.in_ports[i]);
        let outs: Vec<Local> = idx.iter().map(|&i| self.out_ports[i]).collect();
        outs.windows(2).all(|w| w[0] > w[1])
    }

    /// Transform, shift to the anchor and simulate on a scratch cluster to
    /// fill in the holes.
    fn place(self, at: Placement) -> Result<Block, BlockError> {
        let inverted = self.order_inverted();
        let turn = |p: Local| {
            at.orientation
                .rotate(if at.mirrored { (-p.0, p.1) } else { p })
        };
        let base: Vec<Local> = if self.occupied.is_empty() {
            self.protected()
        } else {
            self.occupied.clone()
        };
        let min = base
            .iter()
            .map(|&p| turn(p))
            .fold((i64::MAX, i64::MAX), |m, q| (m.0.min(q.0), m.1.min(q.1)));
        let shift = if base.is_empty() {
            (0, 0)
        } else {
            (at.anchor.row as i64 - min.0, at.anchor.col as i64 - min.1)
        };
        let frame = |p: Local| {
            let q = turn(p);
            (q.0 + shift.0, q.1 + shift.1)
        };
        self.finish(frame, inverted)
    }

    /// Keep coordinates as they are; used by blocks given in grid
    /// coordinates.
    fn place_absolute(self) -> Result<Block, BlockError> {
        let inverted = self.order_inverted();
        self.finish(|p| p, inverted)
    }

    fn finish(
        self,
        frame: impl Fn(Local) -> Local,
        order_inverted: bool,
    ) -> Result<Block, BlockError> {
        let holes = if self.standalone {
            self.simulate()?
        } else {
            Vec::new()
        };
        let to_grid = |p: Local| -> Result<GridCoord, BlockError> {
            let q = frame(p);
            if q.0 < 0 || q.1 < 0 {
                return Err(BlockError::OutOfBounds(q));
            }
            Ok(GridCoord::new(q.0 as usize, q.1 as usize))
        };
        for p in self.all_cells() {
            to_grid(p)?;
        }
        let conv = |ps: &[Local]| {
            ps.iter()
                .map(|&p| to_grid(p).expect("checked above"))
                .collect::<Vec<_>>()
        };
        let occupied: BTreeSet<GridCoord> = conv(&self.occupied).into_iter().collect();
        let z_holes = holes.iter().filter_map(|&p| to_grid(p).ok()).collect();
        let template = self.template.map(&|p| to_grid(p).expect("checked above"));
        Ok(Block {
            kind: self.kind,
            footprint: BlockFootprint {
                qubit_cost: occupied.len(),
                occupied,
                z_holes,
                in_ports: conv(&self.in_ports),
                out_ports: conv(&self.out_ports),
                intermediates: conv(&self.intermediates),
                order_inverted,
                length: self.length,
            },
            template,
        })
    }

    /// Run the template on a fresh cluster around the block and return the
    /// holes in local coordinates.
    fn simulate(&self) -> Result<Vec<Local>, BlockError> {
        let mut s = Scratch::around(&self.all_cells());
        let protected: BTreeSet<VertexId> = self.protected().into_iter().map(|p| s.v(p)).collect();
        let k = s.coords();
        let run = execute(&mut s.g, &self.template, &protected, &|p| k.v(p))?;
        check_lines(&run.0, &protected).map_err(|v| {
            BlockError::Construction(format!(
                "{:?} block leaves port {:?} unclean",
                self.kind,
                s.at(v)
            ))
        })?;
        Ok(run.2.iter().map(|&v| s.at(v)).collect())
    }
}

/// Fresh grid cluster covering some local cells plus a margin.
struct Scratch {
    lat: GridLattice,
    g: GraphState,
    origin: Local,
}

/// Local-to-vertex mapping of a scratch cluster, detached from its graph.
#[derive(Clone, Copy)]
struct Coords {
    lat: GridLattice,
    origin: Local,
}

impl Coords {
    fn v(&self, p: Local) -> VertexId {
        self.lat.vertex(GridCoord::new(
            (p.0 - self.origin.0) as usize,
            (p.1 - self.origin.1) as usize,
        ))
    }
}

impl Scratch {
    fn around(cells: &[Local]) -> Self {
        Self::with_margin(cells, MARGIN)
    }

    fn with_margin(cells: &[Local], margin: i64) -> Self {
        let (mut r0, mut c0, mut r1, mut c1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for &(r, c) in cells {
            r0 = r0.min(r);
            c0 = c0.min(c);
            r1 = r1.max(r);
            c1 = c1.max(c);
        }
        if cells.is_empty() {
            (r0, c0, r1, c1) = (0, 0, 0, 0);
        }
        let rows = (r1 - r0 + 1 + 2 * margin) as usize;
        let cols = (c1 - c0 + 1 + 2 * margin) as usize;
        let (g, lat) = grid_cluster(rows, cols).expect("nonzero scratch grid");
        Scratch {
            lat,
            g,
            origin: (r0 - margin, c0 - margin),
        }
    }

    fn coords(&self) -> Coords {
        Coords {
            lat: self.lat,
            origin: self.origin,
        }
    }

    fn v(&self, p: Local) -> VertexId {
        self.coords().v(p)
    }

    fn at(&self, v: VertexId) -> Local {
        let c = self.lat.coord(v);
        (c.row as i64 + self.origin.0, c.col as i64 + self.origin.1)
    }
}

/// Graph after the run, the steps, and the holes cut by isolation.
type Execution = (GraphState, Vec<Step>, Vec<VertexId>);

fn execute<C: Copy>(
    g: &mut GraphState,
    t: &PlanTemplate<C>,
    protected: &BTreeSet<VertexId>,
    v: &impl Fn(C) -> VertexId,
) -> Result<Execution, BlockError> {
    let mut steps = Vec::new();
    let mut holes = Vec::new();
    let run = |g: &mut GraphState,
               ops: &[TemplateOp<C>],
               steps: &mut Vec<Step>,
               holes: &mut Vec<VertexId>|
     -> Result<(), BlockError> {
        for op in ops {
            match op {
                TemplateOp::Sweep { path, special } => {
                    let pv: Vec<VertexId> = path.iter().map(|&p| v(p)).collect();
                    steps.extend(sweep(g, &pv, v(*special))?);
                }
                TemplateOp::Measure {
                    cell,
                    basis,
                    special,
                } => {
                    let step = Step {
                        vertex: v(*cell),
                        basis: *basis,
                        special: special.map(v),
                        tag: None,
                    };
                    g.measure(step.vertex, step.basis, step.special)?;
                    steps.push(step);
                }
                TemplateOp::Isolate { cells } => {
                    let around: Vec<VertexId> = cells.iter().map(|&p| v(p)).collect();
                    isolate_around(g, &around, protected, steps, holes);
                }
            }
        }
        Ok(())
    };
    run(g, &t.main, &mut steps, &mut holes)?;
    let all: Vec<VertexId> = protected.iter().copied().collect();
    isolate_around(g, &all, protected, &mut steps, &mut holes);
    run(g, &t.finish, &mut steps, &mut holes)?;
    Ok((g.clone(), steps, holes))
}

fn isolate_around(
    g: &mut GraphState,
    cells: &[VertexId],
    protected: &BTreeSet<VertexId>,
    steps: &mut Vec<Step>,
    holes: &mut Vec<VertexId>,
) {
    for &p in cells {
        if !g.is_active(p) {
            continue;
        }
        for q in g.neighbors(p) {
            if !protected.contains(&q) {
                g.measure_z(q).expect("active neighbor");
                steps.push(Step::z(q));
                holes.push(q);
            }
        }
    }
}

/// Every surviving protected vertex lies in a linear cluster made only of
/// protected vertices. Returns those clusters in path order.
fn check_lines(
    g: &GraphState,
    protected: &BTreeSet<VertexId>,
) -> Result<Vec<Vec<VertexId>>, VertexId> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &p in protected {
        if !g.is_active(p) || seen.contains(&p) {
            continue;
        }
        let comp = g.component(p);
        let edges: usize = comp.iter().map(|&x| g.degree(x)).sum::<usize>() / 2;
        let is_path = comp.len() >= 2
            && edges == comp.len() - 1
            && comp
                .iter()
                .all(|&x| g.degree(x) <= 2 && protected.contains(&x));
        if !is_path {
            return Err(p);
        }
        seen.extend(comp.iter().copied());
        out.push(path_order(g, &comp));
    }
    Ok(out)
}

fn path_order(g: &GraphState, comp: &[VertexId]) -> Vec<VertexId> {
    let start = *comp
        .iter()
        .find(|&&x| g.degree(x) == 1)
        .expect("a path has an end");
    let mut order = vec![start];
    let mut prev = None;
    let mut cur = start;
    while let Some(next) = g.neighbors(cur).into_iter().find(|&x| Some(x) != prev) {
        prev = Some(cur);
        cur = next;
        order.push(cur);
    }
    if order.first() > order.last() {
        order.reverse();
    }
    order
}

/// Sweep lines one after another along the seams. Line 0 follows `first`;
/// line `k + 1` follows the restoring chain of line `k` inside `region`.
/// Returns the explicit paths.
fn seam_bus(
    s: &mut Scratch,
    region: &[Local],
    ins: &[Local],
    outs: &[Local],
    first: Vec<Local>,
) -> Result<Vec<Vec<Local>>, BlockError> {
    let mut left: BTreeSet<Local> = region.iter().copied().collect();
    let mut path = first;
    let mut chain: Vec<Local> = Vec::new();
    let mut lines = Vec::new();
    for (k, (&a, &b)) in ins.iter().zip(outs).enumerate() {
        if k > 0 {
            path = chain.iter().copied().filter(|p| left.contains(p)).collect();
        }
        if path.is_empty() {
            return Err(BlockError::Construction(format!(
                "seam for line {k} is empty"
            )));
        }
        let pv: Vec<VertexId> = path.iter().map(|&p| s.v(p)).collect();
        chain = restoring_chain(&s.g, &pv, (s.v(a), s.v(b)))
            .into_iter()
            .map(|v| s.at(v))
            .collect();
        let special = s.v(a);
        sweep(&mut s.g, &pv, special)
            .map_err(|e| BlockError::Construction(format!("line {k}: {e}")))?;
        for p in &path {
            left.remove(p);
        }
        lines.push(path.clone());
    }
    Ok(lines)
}

fn walk(start: Local, steps: &[(i64, i64)]) -> Vec<Local> {
    let mut out = Vec::with_capacity(steps.len());
    let mut p = start;
    for &(dr, dc) in steps {
        p = (p.0 + dr, p.1 + dc);
        out.push(p);
    }
    out
}

/// Staircase from (0, 0) to (n - 1, n - 1), column step first.
fn corner_cells(n: usize) -> Vec<Local> {
    let steps: Vec<(i64, i64)> = (0..2 * (n as i64 - 1))
        .map(|k| if k % 2 == 0 { (0, 1) } else { (1, 0) })
        .collect();
    let mut out = vec![(0, 0)];
    out.extend(walk((0, 0), &steps));
    out
}

/// Steps of the first transport line: down one row per column to the
/// bottom, two columns along it, and back up. Ends two columns past the
/// block, at the first line's out port.
fn transport_steps(n: usize) -> Vec<(i64, i64)> {
    const C: (i64, i64) = (0, 1);
    if n == 1 {
        return vec![C; 3];
    }
    let mut s = vec![C, C];
    for k in 0..n - 1 {
        s.push((1, 0));
        if k < n - 2 {
            s.push(C);
        }
    }
    s.extend([C, C]);
    for _ in 0..n - 1 {
        s.extend([(-1, 0), C]);
    }
    s
}

fn check_lines_count(n: usize) -> Result<(), BlockError> {
    if n == 0 {
        return Err(BlockError::InvalidLineCount(
            "a block needs at least one line".into(),
        ));
    }
    Ok(())
}

/// Region, in-ports, out-ports and sweeps of one stage.
type Stage = (Vec<Local>, Vec<Local>, Vec<Local>, Vec<TemplateOp<Local>>);

/// One L stage in the canonical frame (lines enter at row -1 heading
/// south and leave at column `n` heading east), with `map` applied to every
/// cell. Sweeps run on `s`.
fn l_stage(s: &mut Scratch, n: usize, map: impl Fn(Local) -> Local) -> Result<Stage, BlockError> {
    let m = n as i64;
    let region: Vec<Local> = (0..m)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .map(&map)
        .collect();
    let ins: Vec<Local> = (0..m).map(|j| map((-1, j))).collect();
    let outs: Vec<Local> = (0..m).map(|j| map((m - 1 - j, m))).collect();
    let first = corner_cells(n).into_iter().map(&map).collect();
    let lines = seam_bus(s, &region, &ins, &outs, first)?;
    let ops = lines
        .into_iter()
        .zip(&ins)
        .map(|(path, &special)| TemplateOp::Sweep { path, special })
        .collect();
    Ok((region, ins, outs, ops))
}

fn l_layout(kind: BlockKind, n: usize) -> Result<Layout, BlockError> {
    check_lines_count(n)?;
    let m = n as i64;
    let mut s = Scratch::around(&[(-1, -1), (m, m)]);
    let (region, ins, outs, ops) = l_stage(&mut s, n, |p| p)?;
    let mut layout = Layout::new(kind);
    layout.occupied = region;
    layout.in_ports = ins;
    layout.out_ports = outs;
    layout.template.main = ops;
    Ok(layout)
}

/// Turn `n` lines around a corner on an `n x n` region, outermost line
/// first. Lines enter on one side and leave on the perpendicular side.
pub fn l_turn(n: usize, at: Placement) -> Result<Block, BlockError> {
    l_layout(BlockKind::LTurn, n)?.place(at)
}

/// Switch `n` straight lines onto the diagonal seams of a zipper run of
/// length `length` (at least `2n`). The last line is redirected first and
/// the line order comes out inverted.
pub fn straight_to_diagonal(n: usize, length: usize, at: Placement) -> Result<Block, BlockError> {
    check_lines_count(n)?;
    if length < 2 * n {
        return Err(BlockError::BlockTooShort { lines: n, length });
    }
    let mut layout = l_layout(BlockKind::StraightToDiagonal, n)?;
    layout.length = Some(2 * n);
    layout.place(at)
}

/// Turn `n` lines back the way they came: two L stages joined by two rows
/// of intermediate qubits, which are Y-measured once the ports are clean.
pub fn v_turn(n: usize, at: Placement) -> Result<Block, BlockError> {
    check_lines_count(n)?;
    let m = n as i64;
    let off = m + 2;
    let mut s = Scratch::around(&[(-1, -1), (off + m, m)]);
    let (reg_a, ins_a, outs_a, ops_a) = l_stage(&mut s, n, |(r, c)| (c, r))?;
    let (reg_b, ins_b, outs_b, ops_b) = l_stage(&mut s, n, |(r, c)| (r + off, m - 1 - c))?;
    let mut layout = Layout::new(BlockKind::VTurn);
    layout.occupied = reg_a.into_iter().chain(reg_b).collect();
    layout.in_ports = ins_a;
    layout.out_ports = outs_b;
    layout.intermediates = outs_a.iter().chain(&ins_b).copied().collect();
    layout.template.main = ops_a.into_iter().chain(ops_b).collect();
    layout.template.finish = layout
        .intermediates
        .iter()
        .map(|&cell| TemplateOp::Measure {
            cell,
            basis: Basis::Y,
            special: None,
        })
        .collect();
    layout.place(at)
}

/// Corridor lengths the transport construction can fill for `n` lines:
/// `k` cores of length `2n` joined by junction column pairs.
pub fn transport_length(n: usize, cores: usize) -> usize {
    cores * (2 * n + 2) - 2
}

/// Carry `n` lines straight along a corridor of `length` columns, line
/// order preserved. Each core of `2n` columns permutes the lines on the way
/// down and restores them on the way back up; longer corridors chain cores
/// through a pair of intermediate columns that are Y-measured at the end.
/// Uses the longest supported length not above `length`.
pub fn parallel_transport(n: usize, length: usize, at: Placement) -> Result<Block, BlockError> {
    check_lines_count(n)?;
    if length < 2 * n {
        return Err(BlockError::BlockTooShort { lines: n, length });
    }
    let m = n as i64;
    let cores = (length + 2) / (2 * n + 2);
    let cores = cores.max(1);
    let used = transport_length(n, cores) as i64;
    let mut s = Scratch::around(&[(-1, -1), (m, used)]);
    let mut layout = Layout::new(BlockKind::ParallelTransport);
    layout.length = Some(used as usize);
    let steps = transport_steps(n);
    let mut ins: Vec<Local> = (0..m).map(|i| (i, -1)).collect();
    layout.in_ports = ins.clone();
    for k in 0..cores as i64 {
        let start = k * (2 * m + 2);
        let last = k == cores as i64 - 1;
        let outs: Vec<Local> = (0..m)
            .map(|i| (i, if last { used } else { start + 2 * m }))
            .collect();
        let region: Vec<Local> = (0..m)
            .flat_map(|r| (start..start + 2 * m).map(move |c| (r, c)))
            .collect();
        let mut first = walk((0, start - 1), &steps);
        first.pop();
        let lines = seam_bus(&mut s, &region, &ins, &outs, first)?;
        layout.template.main.extend(
            lines
                .into_iter()
                .zip(&ins)
                .map(|(path, &special)| TemplateOp::Sweep { path, special }),
        );
        layout.occupied.extend(region);
        if last {
            layout.out_ports = outs;
        } else {
            let next: Vec<Local> = (0..m).map(|i| (i, start + 2 * m + 1)).collect();
            layout
                .intermediates
                .extend(outs.iter().chain(&next).copied());
            ins = next;
        }
    }
    layout.template.finish = layout
        .intermediates
        .iter()
        .map(|&cell| TemplateOp::Measure {
            cell,
            basis: Basis::Y,
            special: None,
        })
        .collect();
    layout.place(at)
}

/// Junction of `n` lines where `k` of them are merged through. Line `i`
/// arrives at `(i, 0)` and continues from `(i, 1)`; after isolation each
/// arrives as a chain `a' - a - b - b'`. Merging takes X on `a` with `b` as
/// special neighbor and Z on `b`, which leaves the edge `a' - b'`. The other
/// lines are left cut.
pub fn merge_split(n: usize, k: usize, at: Placement) -> Result<Block, BlockError> {
    check_lines_count(n)?;
    if k > n {
        return Err(BlockError::InvalidLineCount(format!(
            "cannot merge {k} of {n} lines"
        )));
    }
    let mut layout = Layout::new(BlockKind::MergeSplit);
    for i in 0..n as i64 {
        layout.in_ports.push((i, 0));
        layout.out_ports.push((i, 1));
    }
    for i in 0..k as i64 {
        layout.occupied.extend([(i, 0), (i, 1)]);
        layout.template.finish.push(TemplateOp::Measure {
            cell: (i, 0),
            basis: Basis::X,
            special: Some((i, 1)),
        });
        layout.template.finish.push(TemplateOp::Measure {
            cell: (i, 1),
            basis: Basis::Z,
            special: None,
        });
    }
    // a junction needs incoming lines, so it has no standalone run
    layout.standalone = false;
    layout.place(at)
}

fn local(c: GridCoord) -> Local {
    (c.row as i64, c.col as i64)
}

/// Two bundles of Bell lines in grid coordinates, the second crossing the
/// first. Bundle A is zipped and isolated first; bundle B is then routed
/// through the stitched seams, away from the end and turning zones of A.
pub fn diagonal_crossing(
    bundle_a: &[(GridCoord, GridCoord)],
    bundle_b: &[(GridCoord, GridCoord)],
) -> Result<Block, BlockError> {
    if bundle_a.is_empty() || bundle_b.is_empty() {
        return Err(BlockError::InvalidLineCount(
            "a crossing needs two nonempty bundles".into(),
        ));
    }
    let terminals: Vec<Local> = bundle_a
        .iter()
        .chain(bundle_b)
        .flat_map(|&(s, d)| [local(s), local(d)])
        .collect();
    let mut seen = BTreeSet::new();
    for (&t, c) in terminals
        .iter()
        .zip(bundle_a.iter().chain(bundle_b).flat_map(|&(s, d)| [s, d]))
    {
        if !seen.insert(t) {
            return Err(BlockError::ZoneConflict {
                at: c,
                reason: "terminal shared by two lines".into(),
            });
        }
    }
    // smallest region first: origin to the farthest terminal, then spare rows and columns past it
    let (r1, c1) = terminals
        .iter()
        .fold((0, 0), |(r, c), &(tr, tc)| (r.max(tr), c.max(tc)));
    let mut last = None;
    for spare in 0..=MARGIN {
        let s = Scratch::with_margin(&[(0, 0), (r1 + spare, c1 + spare)], 0);
        match cross_on(s, &terminals, bundle_a, bundle_b) {
            Ok(b) => return Ok(b),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn cross_on(
    mut s: Scratch,
    terminals: &[Local],
    bundle_a: &[(GridCoord, GridCoord)],
    bundle_b: &[(GridCoord, GridCoord)],
) -> Result<Block, BlockError> {
    let protected: BTreeSet<VertexId> = terminals.iter().map(|&p| s.v(p)).collect();
    let mut layout = Layout::new(BlockKind::DiagonalCrossing);
    layout.in_ports = bundle_a
        .iter()
        .chain(bundle_b)
        .map(|&(a, _)| local(a))
        .collect();
    layout.out_ports = bundle_a
        .iter()
        .chain(bundle_b)
        .map(|&(_, b)| local(b))
        .collect();
    let mut blocked = FixedBitSet::with_capacity(s.g.vertex_count());
    for p in &protected {
        blocked.insert(p.index());
    }
    let mut zone = BTreeSet::new();
    for (bundle, is_a) in [(bundle_a, true), (bundle_b, false)] {
        for &(src, dst) in bundle {
            let (b1, b2) = (s.v(local(src)), s.v(local(dst)));
            let mut route_blocked = blocked.clone();
            if !is_a {
                for z in &zone {
                    route_blocked.insert(*z);
                }
            }
            let path = route_candidates(&s.g, Some(&s.lat), b1, b2, &route_blocked, 8, 0)
                .into_iter()
                .find(|p| {
                    let mut h = s.g.clone();
                    sweep(&mut h, p, b1).is_ok() && h.has_edge(b1, b2)
                })
                .ok_or_else(|| BlockError::ZoneConflict {
                    at: src,
                    reason: format!("no line to {dst} clear of holes and zones"),
                })?;
            if is_a {
                zone.extend(
                    hole_region(&s.g, &path, (b1, b2))
                        .into_iter()
                        .map(|v| v.index()),
                );
            }
            sweep(&mut s.g, &path, b1)?;
            for v in &path {
                blocked.insert(v.index());
            }
            let cells: Vec<Local> = path.iter().map(|&v| s.at(v)).collect();
            layout.occupied.extend(cells.iter().copied());
            layout.template.main.push(TemplateOp::Sweep {
                path: cells,
                special: local(src),
            });
        }
        if is_a {
            let ends: Vec<Local> = bundle_a
                .iter()
                .flat_map(|&(a, b)| [local(a), local(b)])
                .collect();
            let around: Vec<VertexId> = ends.iter().map(|&p| s.v(p)).collect();
            isolate_around(
                &mut s.g,
                &around,
                &protected,
                &mut Vec::new(),
                &mut Vec::new(),
            );
            layout
                .template
                .main
                .push(TemplateOp::Isolate { cells: ends });
        }
    }
    // terminals survive isolation, so two lines whose ends touch can fuse
    let all: Vec<VertexId> = protected.iter().copied().collect();
    isolate_around(&mut s.g, &all, &protected, &mut Vec::new(), &mut Vec::new());
    for &(src, dst) in bundle_a.iter().chain(bundle_b) {
        if !is_isolated_pair(&s.g, s.v(local(src)), s.v(local(dst))) {
            return Err(BlockError::ZoneConflict {
                at: src,
                reason: format!("line to {dst} fuses with another at the terminals"),
            });
        }
    }
    layout.place_absolute()
}

/// Zip from `src` to `dst` along their staircase but keep the qubits at
/// `kept` unmeasured. X steps use the last kept qubit (or `src`) as special
/// neighbor; the result is a linear cluster `src - kept.. - dst`.
pub fn ghz_extract(
    src: GridCoord,
    dst: GridCoord,
    kept: &[GridCoord],
) -> Result<Block, BlockError> {
    if src == dst {
        return Err(BlockError::InvalidLineCount("terminals coincide".into()));
    }
    let rows = src.row.max(dst.row) + 1;
    let cols = src.col.max(dst.col) + 1;
    let lat = GridLattice::new(rows, cols).map_err(|e| BlockError::Construction(e.to_string()))?;
    let path =
        staircase_path(&lat, src, dst).map_err(|e| BlockError::Construction(e.to_string()))?;
    let mut order: Vec<usize> = Vec::new();
    for k in kept {
        match path.cells.iter().position(|c| c == k) {
            Some(i) => order.push(i),
            None => return Err(BlockError::ForbiddenKeptPosition(*k)),
        }
    }
    order.sort_unstable();
    order.dedup();
    let keep: BTreeSet<usize> = order.iter().copied().collect();
    let mut layout = Layout::new(BlockKind::GhzExtract);
    layout.in_ports = vec![local(src)];
    layout.out_ports = vec![local(dst)];
    layout.intermediates = order.iter().map(|&i| local(path.cells[i])).collect();
    let mut special = local(src);
    for (i, &c) in path.cells.iter().enumerate() {
        if keep.contains(&i) {
            special = local(c);
            continue;
        }
        layout.occupied.push(local(c));
        layout.template.main.push(TemplateOp::Measure {
            cell: local(c),
            basis: Basis::X,
            special: Some(special),
        });
    }
    // the cluster must come out in staircase order
    let expect: Vec<Local> = std::iter::once(local(src))
        .chain(layout.intermediates.iter().copied())
        .chain([local(dst)])
        .collect();
    let mut s = Scratch::around(&layout.all_cells());
    let protected: BTreeSet<VertexId> = layout.protected().into_iter().map(|p| s.v(p)).collect();
    let forbidden = || BlockError::ForbiddenKeptPosition(kept.first().copied().unwrap_or(src));
    let k = s.coords();
    let (g, _, _) =
        execute(&mut s.g, &layout.template, &protected, &|p| k.v(p)).map_err(|_| forbidden())?;
    let clusters = check_lines(&g, &protected).map_err(|_| forbidden())?;
    let got: Vec<Local> = clusters
        .first()
        .map(|c| c.iter().map(|&v| s.at(v)).collect())
        .unwrap_or_default();
    let mut rev = got.clone();
    rev.reverse();
    if clusters.len() != 1 || (got != expect && rev != expect) {
        return Err(forbidden());
    }
    layout.place_absolute()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockExtra {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kept: Vec<GridCoord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bundle_a: Vec<[GridCoord; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bundle_b: Vec<[GridCoord; 2]>,
}

/// Line count, or terminals for GHZ extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lines {
    Count(usize),
    Terminals(Vec<GridCoord>),
}

impl Default for Lines {
    fn default() -> Self {
        Lines::Count(1)
    }
}

/// Serializable block request. GHZ extraction and crossings are given in
/// grid coordinates and ignore the placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    #[serde(default)]
    pub lines: Lines,
    #[serde(default)]
    pub anchor: GridCoord,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub mirrored: bool,
    #[serde(default)]
    pub extra: BlockExtra,
}

impl Default for GridCoord {
    fn default() -> Self {
        GridCoord::new(0, 0)
    }
}

impl BlockSpec {
    pub fn placement(&self) -> Placement {
        Placement {
            anchor: self.anchor,
            orientation: self.orientation,
            mirrored: self.mirrored,
        }
    }

    fn count(&self) -> Result<usize, BlockError> {
        match &self.lines {
            Lines::Count(n) => Ok(*n),
            Lines::Terminals(_) => Err(BlockError::InvalidLineCount(format!(
                "{:?} takes a line count",
                self.kind
            ))),
        }
    }
}

/// Generate the block a spec describes.
pub fn build(spec: &BlockSpec) -> Result<Block, BlockError> {
    let at = spec.placement();
    match spec.kind {
        BlockKind::LTurn => l_turn(spec.count()?, at),
        BlockKind::VTurn => v_turn(spec.count()?, at),
        BlockKind::ParallelTransport => {
            let n = spec.count()?;
            parallel_transport(n, spec.extra.length.unwrap_or(2 * n), at)
        }
        BlockKind::StraightToDiagonal => {
            let n = spec.count()?;
            straight_to_diagonal(n, spec.extra.length.unwrap_or(2 * n), at)
        }
        BlockKind::MergeSplit => {
            let n = spec.count()?;
            merge_split(n, spec.extra.k.unwrap_or(n), at)
        }
        BlockKind::DiagonalCrossing => {
            let pairs = |v: &[[GridCoord; 2]]| v.iter().map(|&[a, b]| (a, b)).collect::<Vec<_>>();
            diagonal_crossing(&pairs(&spec.extra.bundle_a), &pairs(&spec.extra.bundle_b))
        }
        BlockKind::GhzExtract => match &spec.lines {
            Lines::Terminals(t) if t.len() == 2 => ghz_extract(t[0], t[1], &spec.extra.kept),
            _ => Err(BlockError::InvalidLineCount(
                "GHZ extraction takes two terminals".into(),
            )),
        },
    }
}

/// Blocks run together on one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRun {
    pub graph: GraphState,
    pub plan: MeasurementPlan,
    /// Resulting Bell pairs and linear clusters, in path order.
    pub entangled: Vec<Vec<GridCoord>>,
    pub holes: Vec<GridCoord>,
}

/// Run `blocks` on `g` as one composite: the main phase of each block in
/// order, one isolation protecting every port and intermediate, then the
/// finish phases. Fails unless every surviving port ends in a clean line.
pub fn instantiate(
    blocks: &[Block],
    lat: &GridLattice,
    g: &GraphState,
) -> Result<BlockRun, BlockError> {
    let mut protected = BTreeSet::new();
    let mut template = PlanTemplate::default();
    for b in blocks {
        for c in b.footprint.cells().iter().chain(&b.template.cells()) {
            if !lat.contains(*c) {
                return Err(BlockError::OutOfBounds((c.row as i64, c.col as i64)));
            }
        }
        protected.extend(
            b.footprint
                .in_ports
                .iter()
                .chain(&b.footprint.out_ports)
                .chain(&b.footprint.intermediates)
                .map(|&c| lat.vertex(c)),
        );
        template.main.extend(b.template.main.iter().cloned());
    }
    for b in blocks {
        template.finish.extend(b.template.finish.iter().cloned());
    }
    let mut work = g.clone();
    let (graph, steps, holes) = execute(&mut work, &template, &protected, &|c| lat.vertex(c))?;
    let lines =
        check_lines(&graph, &protected).map_err(|v| BlockError::NotIsolated(lat.coord(v)))?;
    let steps = tag_steps(blocks, lat, steps);
    Ok(BlockRun {
        graph,
        plan: MeasurementPlan { steps },
        entangled: lines
            .into_iter()
            .map(|l| l.into_iter().map(|v| lat.coord(v)).collect())
            .collect(),
        holes: holes.into_iter().map(|v| lat.coord(v)).collect(),
    })
}

/// Tag each step with the block whose cells it measures; isolation holes
/// go to the block whose port they touched first.
fn tag_steps(blocks: &[Block], lat: &GridLattice, steps: Vec<Step>) -> Vec<Step> {
    let mut owner: BTreeMap<VertexId, usize> = BTreeMap::new();
    for (i, b) in blocks.iter().enumerate() {
        // predicted holes may fall outside a tight grid
        for c in b
            .footprint
            .cells()
            .iter()
            .chain(&b.template.cells())
            .chain(&b.footprint.z_holes)
            .filter(|c| lat.contains(**c))
        {
            owner.entry(lat.vertex(*c)).or_insert(i);
        }
    }
    steps
        .into_iter()
        .map(|mut s| {
            s.tag = Some(
                owner
                    .get(&s.vertex)
                    .map_or_else(|| "blocks".to_string(), |i| format!("block{i}")),
            );
            s
        })
        .collect()
}
