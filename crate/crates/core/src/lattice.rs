//! Rectangular cluster states, coordinates and staircase paths.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphState, VertexId};

/// Grid position, serialized as `[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct GridCoord {
    pub row: usize,
    pub col: usize,
}

impl GridCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        GridCoord { row, col }
    }

    pub fn manhattan(self, other: GridCoord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn is_adjacent(self, other: GridCoord) -> bool {
        self.manhattan(other) == 1
    }
}

impl From<[usize; 2]> for GridCoord {
    fn from([row, col]: [usize; 2]) -> Self {
        GridCoord { row, col }
    }
}

impl From<GridCoord> for [usize; 2] {
    fn from(c: GridCoord) -> Self {
        [c.row, c.col]
    }
}

impl From<(usize, usize)> for GridCoord {
    fn from((row, col): (usize, usize)) -> Self {
        GridCoord { row, col }
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("coordinate {0} is outside the grid")]
    OutOfBounds(GridCoord),
    #[error("source and destination coincide at {0}")]
    SameEndpoint(GridCoord),
    #[error("no staircase path between {0} and {1}")]
    NoPath(GridCoord, GridCoord),
}

/// Row-major mapping between grid coordinates and vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLattice {
    pub rows: usize,
    pub cols: usize,
}

impl GridLattice {
    pub fn new(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::ZeroDimension { rows, cols });
        }
        Ok(GridLattice { rows, cols })
    }

    pub fn vertex_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, c: GridCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn check(&self, c: GridCoord) -> Result<(), LatticeError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(LatticeError::OutOfBounds(c))
        }
    }

    pub fn vertex(&self, c: GridCoord) -> VertexId {
        debug_assert!(self.contains(c));
        VertexId((c.row * self.cols + c.col) as u32)
    }

    pub fn coord(&self, v: VertexId) -> GridCoord {
        GridCoord::new(v.index() / self.cols, v.index() % self.cols)
    }

    /// Signed offset, `None` when it leaves the grid.
    pub fn offset(&self, c: GridCoord, dr: i64, dc: i64) -> Option<GridCoord> {
        let r = c.row as i64 + dr;
        let k = c.col as i64 + dc;
        if r < 0 || k < 0 || r >= self.rows as i64 || k >= self.cols as i64 {
            return None;
        }
        Some(GridCoord::new(r as usize, k as usize))
    }

    /// In-bounds 4-neighbors.
    pub fn neighbors(&self, c: GridCoord) -> Vec<GridCoord> {
        [(-1, 0), (0, -1), (0, 1), (1, 0)]
            .iter()
            .filter_map(|&(dr, dc)| self.offset(c, dr, dc))
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.vertex_count())
            .map(|v| {
                let c = self.coord(VertexId::from(v));
                format!("{},{}", c.row, c.col)
            })
            .collect()
    }

    /// Layout positions for DOT export, row 0 on top.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        (0..self.vertex_count())
            .map(|v| {
                let c = self.coord(VertexId::from(v));
                (c.col as f64, -(c.row as f64))
            })
            .collect()
    }
}

/// 2D cluster state: one qubit per site, CZ edges between 4-neighbors.
pub fn grid_cluster(rows: usize, cols: usize) -> Result<(GraphState, GridLattice), LatticeError> {
    let lat = GridLattice::new(rows, cols)?;
    let mut g = GraphState::new(lat.vertex_count());
    for r in 0..rows {
        for c in 0..cols {
            let v = lat.vertex(GridCoord::new(r, c));
            if c + 1 < cols {
                g.toggle_edge(v, lat.vertex(GridCoord::new(r, c + 1)))
                    .expect("fresh vertices");
            }
            if r + 1 < rows {
                g.toggle_edge(v, lat.vertex(GridCoord::new(r + 1, c)))
                    .expect("fresh vertices");
            }
        }
    }
    Ok((g, lat))
}

/// Measurement path between two Bell endpoints. `cells` excludes both
/// endpoints and is empty when they are already neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircasePath {
    pub src: GridCoord,
    pub dst: GridCoord,
    pub cells: Vec<GridCoord>,
}

impl StaircasePath {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self, lat: &GridLattice) -> Vec<VertexId> {
        self.cells.iter().map(|&c| lat.vertex(c)).collect()
    }

    /// Source, path cells and destination in order.
    pub fn full(&self) -> Vec<GridCoord> {
        let mut v = Vec::with_capacity(self.cells.len() + 2);
        v.push(self.src);
        v.extend_from_slice(&self.cells);
        v.push(self.dst);
        v
    }

    /// Cells where the path stops being a diagonal staircase: the middle of
    /// any collinear triple, together with its two neighbors on the path.
    pub fn turning_cells(&self) -> BTreeSet<GridCoord> {
        let full = self.full();
        let mut out = BTreeSet::new();
        for w in full.windows(3) {
            let collinear = (w[0].row == w[1].row && w[1].row == w[2].row)
                || (w[0].col == w[1].col && w[1].col == w[2].col);
            if collinear {
                out.extend(w.iter().copied());
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Step {
    dr: i64,
    dc: i64,
}

fn alternate(first: Step, second: Step, n: usize) -> Vec<Step> {
    (0..n)
        .map(|i| if i % 2 == 0 { first } else { second })
        .collect()
}

/// Candidate step sequences for a path from `src` to `dst`, best first.
///
/// When the major and minor distances differ by at most one, a single
/// alternating diagonal suffices. Otherwise the path is a 'V': one doubled
/// major step at the apex and a flip of the minor direction there.
fn staircase_candidates(src: GridCoord, dst: GridCoord) -> Vec<Vec<Step>> {
    let dr = dst.row as i64 - src.row as i64;
    let dc = dst.col as i64 - src.col as i64;
    let col_major = dc.abs() >= dr.abs();
    let (big, small) = if col_major {
        (dc.abs(), dr.abs())
    } else {
        (dr.abs(), dc.abs())
    };
    let (s_big, s_small) = if col_major {
        (dc.signum(), dr.signum())
    } else {
        (dr.signum(), dc.signum())
    };
    let major = |s: i64| {
        if col_major {
            Step { dr: 0, dc: s }
        } else {
            Step { dr: s, dc: 0 }
        }
    };
    let minor = |s: i64| {
        if col_major {
            Step { dr: s, dc: 0 }
        } else {
            Step { dr: 0, dc: s }
        }
    };

    let mut seqs = Vec::new();
    if big - small <= 1 {
        let (first, second) = if big == small {
            // tie: column step first
            (
                Step {
                    dr: 0,
                    dc: dc.signum(),
                },
                Step {
                    dr: dr.signum(),
                    dc: 0,
                },
            )
        } else {
            (major(s_big), minor(s_small))
        };
        seqs.push(alternate(first, second, (big + small) as usize));
        return seqs;
    }
    let dirs: [i64; 2] = if s_small != 0 {
        [-s_small, s_small]
    } else {
        [-1, 1]
    };
    for pq in [big - 2, big - 1] {
        if (pq - small).rem_euclid(2) != 0 {
            continue;
        }
        for &a in &dirs {
            // p minor steps along a, q along -a, with a(p - q) = s_small * small
            let d = s_small * small * a;
            let (p, q) = ((pq + d) / 2, (pq - d) / 2);
            if p < 0 || q < 0 {
                continue;
            }
            let (p, q) = (p as usize, q as usize);
            let (mj, m1, m2) = (major(s_big), minor(a), minor(-a));
            if pq == big - 2 {
                let mut s = alternate(mj, m1, 2 * p + 1);
                s.extend(alternate(mj, m2, 2 * q + 1));
                seqs.push(s);
            } else {
                let mut s = alternate(m1, mj, 2 * p);
                s.extend(alternate(mj, m2, 2 * q + 1));
                seqs.push(s);
                let mut s = alternate(mj, m1, 2 * p + 1);
                s.extend(alternate(mj, m2, 2 * q));
                seqs.push(s);
            }
        }
    }
    seqs
}

/// Path of at most two diagonal segments between `src` and `dst`.
///
/// Adjacent endpoints give an empty path. Grids too narrow for any 'V'
/// fall back to a multi-turn zigzag found by [`corner_route`] on a fresh
/// grid, so a path exists whenever the grid has a second row or column.
pub fn staircase_path(
    lat: &GridLattice,
    src: GridCoord,
    dst: GridCoord,
) -> Result<StaircasePath, LatticeError> {
    lat.check(src)?;
    lat.check(dst)?;
    if src == dst {
        return Err(LatticeError::SameEndpoint(src));
    }
    if src.is_adjacent(dst) {
        return Ok(StaircasePath {
            src,
            dst,
            cells: Vec::new(),
        });
    }
    'cand: for seq in staircase_candidates(src, dst) {
        let mut cells = Vec::with_capacity(seq.len());
        let mut at = src;
        for s in seq {
            match lat.offset(at, s.dr, s.dc) {
                Some(c) => at = c,
                None => continue 'cand,
            }
            cells.push(at);
        }
        debug_assert_eq!(cells.last(), Some(&dst));
        cells.pop();
        return Ok(StaircasePath { src, dst, cells });
    }
    let (g, _) = grid_cluster(lat.rows, lat.cols)?;
    let blocked = FixedBitSet::with_capacity(g.vertex_count());
    match corner_route(
        &g,
        lat.vertex(src),
        lat.vertex(dst),
        &blocked,
        None::<&mut rand::rngs::ThreadRng>,
    ) {
        Some(p) => Ok(StaircasePath {
            src,
            dst,
            cells: p.into_iter().map(|v| lat.coord(v)).collect(),
        }),
        None => Err(LatticeError::NoPath(src, dst)),
    }
}

/// Sites that must be Z-measured after the zipper runs along `path` on a
/// fresh grid, found by simulating the run.
pub fn exclusion_zone(lat: &GridLattice, path: &StaircasePath) -> BTreeSet<GridCoord> {
    let (g, _) = grid_cluster(lat.rows, lat.cols).expect("lattice dimensions are positive");
    let ends = (lat.vertex(path.src), lat.vertex(path.dst));
    match crate::zipper::run_zipper(&g, &path.vertices(lat), ends) {
        Ok(res) => res.holes.iter().map(|&v| lat.coord(v)).collect(),
        Err(_) => BTreeSet::new(),
    }
}

/// Two path neighbors `u`, `w` of `v` form a corner when they share a
/// further active neighbor, as diagonal grid neighbors do.
pub fn is_corner(g: &GraphState, u: VertexId, v: VertexId, w: VertexId) -> bool {
    let mut common = g.neighbor_set(u).clone();
    common.intersect_with(g.neighbor_set(w));
    common.ones().any(|x| x != v.index())
}

/// Shortest path from `b1` to `b2` in the current graph that prefers
/// corners over straight runs, so it looks like a staircase wherever the
/// graph still looks like a grid.
///
/// Search runs over (previous, current) pairs; a step to `w` is refused when
/// `w` touches the previous path vertex, which keeps the path free of short
/// chords. `blocked` vertices are never entered. With an rng, each step gets
/// a small random cost so repeated calls explore different equal-length
/// paths. Returns the interior vertices only.
pub fn corner_route<R: Rng>(
    g: &GraphState,
    b1: VertexId,
    b2: VertexId,
    blocked: &FixedBitSet,
    mut rng: Option<&mut R>,
) -> Option<Vec<VertexId>> {
    const STEP: u64 = 1000;
    const STRAIGHT: u64 = 16;
    type State = (Option<VertexId>, VertexId);
    let mut dist: HashMap<State, u64> = HashMap::new();
    let mut parent: HashMap<State, State> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let start: State = (None, b1);
    dist.insert(start, 0);
    let mut tick = 0u64;
    heap.push(Reverse((0u64, tick, start)));
    let mut goal = None;
    while let Some(Reverse((d, _, state))) = heap.pop() {
        if dist.get(&state) != Some(&d) {
            continue;
        }
        let (prev, u) = state;
        if u == b2 {
            goal = Some(state);
            break;
        }
        for w in g.neighbors(u) {
            if w == b1 || !g.is_active(w) || (w != b2 && blocked.contains(w.index())) {
                continue;
            }
            if u == b1 && w == b2 {
                continue;
            }
            if let Some(p) = prev {
                if g.has_edge(p, w) {
                    continue;
                }
            }
            let mut cost = STEP;
            if let Some(p) = prev {
                if !is_corner(g, p, u, w) {
                    cost += STRAIGHT;
                }
            }
            if let Some(r) = rng.as_deref_mut() {
                cost += r.random_range(0..8);
            }
            let next: State = (Some(u), w);
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&old| nd < old) {
                dist.insert(next, nd);
                parent.insert(next, state);
                tick += 1;
                heap.push(Reverse((nd, tick, next)));
            }
        }
    }
    let mut state = goal?;
    let mut rev = Vec::new();
    while let Some(&p) = parent.get(&state) {
        rev.push(state.1);
        state = p;
    }
    rev.reverse();
    rev.pop();
    Some(rev)
}
