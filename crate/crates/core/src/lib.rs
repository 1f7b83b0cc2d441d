//! Entanglement routing on 2D cluster states.
//!
//! A grid cluster state is held as a [`GraphState`]. Single-qubit Pauli
//! measurements are applied with the graphical rules, and the zipper sweep
//! turns a staircase path into a Bell pair while re-stitching the lattice
//! around it. Blocks compose sweeps into reusable circuits, the planner
//! serves many requests on one grid, and the statevector oracle checks
//! small cases exactly.

pub mod blocks;
pub mod graph;
pub mod lattice;
pub mod oracle;
pub mod plan;
pub mod planner;
pub mod zipper;

pub use graph::{Basis, GraphError, GraphState, Pauli, PauliString, Status, VertexId};
pub use lattice::{
    grid_cluster, staircase_path, GridCoord, GridLattice, LatticeError, StaircasePath,
};
pub use oracle::{OracleError, OracleState};
pub use plan::{MeasurementPlan, PlanError, Step};
pub use zipper::{run_zipper, ZipperError, ZipperResult};

/// Double-precision oracle state.
pub type OracleState64 = OracleState<f64>;
/// Single-precision oracle state.
pub type OracleState32 = OracleState<f32>;
