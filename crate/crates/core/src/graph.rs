//! Graph states and the graphical rules for local complementation and
//! Pauli measurements.
//!
//! Measured vertices are kept in the graph with a status marker and degree
//! zero, so vertex ids stay stable for the whole life of a plan.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a qubit in a [`GraphState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Single-qubit Pauli measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Active,
    MeasuredX,
    MeasuredY,
    MeasuredZ,
}

impl Status {
    pub fn is_active(self) -> bool {
        self == Status::Active
    }

    pub fn measured(basis: Basis) -> Self {
        match basis {
            Basis::X => Status::MeasuredX,
            Basis::Y => Status::MeasuredY,
            Basis::Z => Status::MeasuredZ,
        }
    }

    pub fn basis(self) -> Option<Basis> {
        match self {
            Status::Active => None,
            Status::MeasuredX => Some(Basis::X),
            Status::MeasuredY => Some(Basis::Y),
            Status::MeasuredZ => Some(Basis::Z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("self loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {0} is not active")]
    InactiveVertex(VertexId),
    #[error("vertex {0} is out of range")]
    OutOfRange(VertexId),
    #[error("special vertex {special} is not a neighbor of {vertex}")]
    NotANeighbor { vertex: VertexId, special: VertexId },
    #[error("invalid graph record: {0}")]
    InvalidRecord(String),
}

/// Simple undirected graph with a per-vertex measurement status.
///
/// Adjacency is stored as one bitset row per vertex. Invariants: rows are
/// symmetric, the diagonal is empty, and non-active vertices have empty rows.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphRecord", try_from = "GraphRecord")]
pub struct GraphState {
    adj: Vec<FixedBitSet>,
    status: Vec<Status>,
}

impl fmt::Debug for GraphState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphState")
            .field("n", &self.vertex_count())
            .field("edges", &self.edges())
            .finish()
    }
}

impl GraphState {
    /// `n` active vertices and no edges: the `|+>^n` product state.
    pub fn new(n: usize) -> Self {
        GraphState {
            adj: vec![FixedBitSet::with_capacity(n); n],
            status: vec![Status::Active; n],
        }
    }

    /// Build from an edge list over `n` active vertices.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut g = GraphState::new(n);
        for &(a, b) in edges {
            g.toggle_edge(VertexId(a), VertexId(b))?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, v: VertexId) -> Status {
        self.status[v.index()]
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        v.index() < self.vertex_count() && self.status[v.index()].is_active()
    }

    pub fn active_vertices(&self) -> Vec<VertexId> {
        (0..self.vertex_count())
            .map(VertexId::from)
            .filter(|&v| self.status(v).is_active())
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.status.iter().filter(|s| s.is_active()).count()
    }

    fn check(&self, v: VertexId) -> Result<(), GraphError> {
        if v.index() >= self.vertex_count() {
            return Err(GraphError::OutOfRange(v));
        }
        if !self.status[v.index()].is_active() {
            return Err(GraphError::InactiveVertex(v));
        }
        Ok(())
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        a.index() < self.vertex_count()
            && b.index() < self.vertex_count()
            && self.adj[a.index()].contains(b.index())
    }

    pub fn degree(&self, a: VertexId) -> usize {
        self.adj[a.index()].count_ones(..)
    }

    /// Neighbors of `a` in ascending id order.
    pub fn neighbors(&self, a: VertexId) -> Vec<VertexId> {
        self.adj[a.index()].ones().map(VertexId::from).collect()
    }

    pub fn neighbor_set(&self, a: VertexId) -> &FixedBitSet {
        &self.adj[a.index()]
    }

    /// All edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::new();
        for (a, row) in self.adj.iter().enumerate() {
            for b in row.ones().filter(|&b| b > a) {
                out.push((VertexId::from(a), VertexId::from(b)));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    pub fn toggle_edge(&mut self, a: VertexId, b: VertexId) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        self.check(a)?;
        self.check(b)?;
        self.adj[a.index()].toggle(b.index());
        self.adj[b.index()].toggle(a.index());
        Ok(())
    }

    /// Invert the subgraph induced on the neighborhood of `a`.
    pub fn local_complement(&mut self, a: VertexId) -> Result<(), GraphError> {
        self.check(a)?;
        let nb = self.adj[a.index()].clone();
        for b in nb.ones() {
            let row = &mut self.adj[b];
            row.symmetric_difference_with(&nb);
            // b is in its own toggle mask; undo the self bit
            row.toggle(b);
        }
        Ok(())
    }

    fn detach(&mut self, a: VertexId) {
        let nb: Vec<usize> = self.adj[a.index()].ones().collect();
        for b in nb {
            self.adj[b].set(a.index(), false);
        }
        self.adj[a.index()].clear();
    }

    /// Pauli Z: delete every edge at `a`.
    pub fn measure_z(&mut self, a: VertexId) -> Result<(), GraphError> {
        self.check(a)?;
        self.detach(a);
        self.status[a.index()] = Status::MeasuredZ;
        Ok(())
    }

    /// Pauli Y: local complementation at `a`, then Z.
    pub fn measure_y(&mut self, a: VertexId) -> Result<(), GraphError> {
        self.local_complement(a)?;
        self.detach(a);
        self.status[a.index()] = Status::MeasuredY;
        Ok(())
    }

    /// Pauli X with special neighbor `special` (defaults to the lowest-id
    /// neighbor): LC(special), Y(a), LC(special). An isolated vertex only
    /// changes status.
    pub fn measure_x(&mut self, a: VertexId, special: Option<VertexId>) -> Result<(), GraphError> {
        self.check(a)?;
        if self.degree(a) == 0 {
            self.status[a.index()] = Status::MeasuredX;
            return Ok(());
        }
        let b0 = match special {
            Some(s) => {
                if !self.has_edge(a, s) {
                    return Err(GraphError::NotANeighbor {
                        vertex: a,
                        special: s,
                    });
                }
                s
            }
            None => self
                .default_special(a)
                .expect("non-isolated vertex has a neighbor"),
        };
        self.local_complement(b0)?;
        self.local_complement(a)?;
        self.detach(a);
        self.local_complement(b0)?;
        self.status[a.index()] = Status::MeasuredX;
        Ok(())
    }

    /// Lowest-id neighbor, the default special vertex for an X measurement.
    pub fn default_special(&self, a: VertexId) -> Option<VertexId> {
        self.adj[a.index()].ones().next().map(VertexId::from)
    }

    pub fn measure(
        &mut self,
        a: VertexId,
        basis: Basis,
        special: Option<VertexId>,
    ) -> Result<(), GraphError> {
        match basis {
            Basis::X => self.measure_x(a, special),
            Basis::Y => self.measure_y(a),
            Basis::Z => self.measure_z(a),
        }
    }

    /// Stabilizer generator `K_a = X_a Z_{N(a)}`.
    pub fn stabilizer(&self, a: VertexId) -> Result<PauliString, GraphError> {
        self.check(a)?;
        let mut p = PauliString::identity();
        p.set(a, Pauli::X);
        for b in self.neighbors(a) {
            p.set(b, Pauli::Z);
        }
        Ok(p)
    }

    /// Connected component containing `a`, sorted.
    pub fn component(&self, a: VertexId) -> Vec<VertexId> {
        let mut seen = FixedBitSet::with_capacity(self.vertex_count());
        let mut queue = VecDeque::from([a.index()]);
        seen.insert(a.index());
        while let Some(x) = queue.pop_front() {
            for y in self.adj[x].ones() {
                if !seen.contains(y) {
                    seen.insert(y);
                    queue.push_back(y);
                }
            }
        }
        seen.ones().map(VertexId::from).collect()
    }

    /// Graphviz rendering. Measured vertices are dashed; colors follow the
    /// routing figures (X orange, Y violet, Z yellow) unless overridden.
    pub fn to_dot(&self, opts: &DotOptions) -> String {
        use std::fmt::Write;
        let mut out =
            String::from("graph G {\n  node [shape=circle, style=filled, fillcolor=white];\n");
        let mut color: BTreeMap<usize, &str> = BTreeMap::new();
        for (vs, c) in &opts.highlight {
            for v in vs {
                color.insert(v.index(), c.as_str());
            }
        }
        for v in 0..self.vertex_count() {
            let label = opts
                .labels
                .as_ref()
                .map(|l| l[v].clone())
                .unwrap_or_else(|| v.to_string());
            let (style, fill) = match self.status[v] {
                Status::Active => ("filled", color.get(&v).copied().unwrap_or("white")),
                Status::MeasuredX => ("dashed,filled", "orange"),
                Status::MeasuredY => ("dashed,filled", "violet"),
                Status::MeasuredZ => ("dashed,filled", "yellow"),
            };
            let _ = write!(
                out,
                "  {v} [label=\"{label}\", style=\"{style}\", fillcolor=\"{fill}\""
            );
            if let Some(pos) = &opts.positions {
                let (x, y) = pos[v];
                let _ = write!(out, ", pos=\"{x},{y}!\"");
            }
            out.push_str("];\n");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  {} -- {};", a, b);
        }
        out.push_str("}\n");
        out
    }
}

/// Rendering options for [`GraphState::to_dot`].
#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// One label per vertex; ids are used when absent.
    pub labels: Option<Vec<String>>,
    /// Pinned layout positions (for `neato -n`).
    pub positions: Option<Vec<(f64, f64)>>,
    /// Active vertices to fill with a color, e.g. one color per Bell pair.
    pub highlight: Vec<(Vec<VertexId>, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Tensor product of single-qubit Paulis with a global sign. Identity
/// letters are not stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliString {
    pub sign: Sign,
    letters: BTreeMap<VertexId, Pauli>,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            sign: Sign::Plus,
            letters: BTreeMap::new(),
        }
    }

    pub fn from_letters(letters: impl IntoIterator<Item = (VertexId, Pauli)>) -> Self {
        let mut p = PauliString::identity();
        for (v, l) in letters {
            p.set(v, l);
        }
        p
    }

    pub fn set(&mut self, v: VertexId, p: Pauli) {
        if p == Pauli::I {
            self.letters.remove(&v);
        } else {
            self.letters.insert(v, p);
        }
    }

    pub fn get(&self, v: VertexId) -> Pauli {
        self.letters.get(&v).copied().unwrap_or(Pauli::I)
    }

    /// Non-identity letters in vertex order.
    pub fn support(&self) -> impl Iterator<Item = (VertexId, Pauli)> + '_ {
        self.letters.iter().map(|(&v, &p)| (v, p))
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == Sign::Minus {
            f.write_str("-")?;
        }
        if self.letters.is_empty() {
            return f.write_str("I");
        }
        for (i, (v, p)) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{:?}{}", p, v)?;
        }
        Ok(())
    }
}

/// JSON shape of a graph: `{"n", "edges", "measured": {"X", "Y", "Z"}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub edges: Vec<[u32; 2]>,
    #[serde(default)]
    pub measured: MeasuredRecord,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeasuredRecord {
    #[serde(rename = "X", default)]
    pub x: Vec<u32>,
    #[serde(rename = "Y", default)]
    pub y: Vec<u32>,
    #[serde(rename = "Z", default)]
    pub z: Vec<u32>,
}

impl From<GraphState> for GraphRecord {
    fn from(g: GraphState) -> Self {
        let mut measured = MeasuredRecord::default();
        for (v, s) in g.status.iter().enumerate() {
            let v = v as u32;
            match s {
                Status::Active => {}
                Status::MeasuredX => measured.x.push(v),
                Status::MeasuredY => measured.y.push(v),
                Status::MeasuredZ => measured.z.push(v),
            }
        }
        GraphRecord {
            n: g.vertex_count(),
            edges: g.edges().into_iter().map(|(a, b)| [a.0, b.0]).collect(),
            measured,
        }
    }
}

impl TryFrom<GraphRecord> for GraphState {
    type Error = GraphError;

    fn try_from(r: GraphRecord) -> Result<Self, GraphError> {
        let mut g = GraphState::new(r.n);
        for [a, b] in r.edges {
            let (a, b) = (VertexId(a), VertexId(b));
            if a.index() >= r.n || b.index() >= r.n {
                return Err(GraphError::InvalidRecord(format!(
                    "edge ({a}, {b}) out of range"
                )));
            }
            if g.has_edge(a, b) {
                return Err(GraphError::InvalidRecord(format!(
                    "duplicate edge ({a}, {b})"
                )));
            }
            g.toggle_edge(a, b)?;
        }
        let groups = [
            (r.measured.x, Status::MeasuredX),
            (r.measured.y, Status::MeasuredY),
            (r.measured.z, Status::MeasuredZ),
        ];
        for (vs, st) in groups {
            for v in vs {
                let v = VertexId(v);
                if v.index() >= r.n {
                    return Err(GraphError::InvalidRecord(format!(
                        "measured vertex {v} out of range"
                    )));
                }
                if !g.status(v).is_active() {
                    return Err(GraphError::InvalidRecord(format!(
                        "vertex {v} listed as measured twice"
                    )));
                }
                if g.degree(v) > 0 {
                    return Err(GraphError::InvalidRecord(format!(
                        "measured vertex {v} has edges"
                    )));
                }
                g.status[v.index()] = st;
            }
        }
        Ok(g)
    }
}
