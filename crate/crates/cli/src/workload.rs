//! Workload files and the pipeline shared by the subcommands.

use std::fmt;
use std::path::Path;

use gsroute::blocks::{build, instantiate, BlockSpec};
use gsroute::graph::{DotOptions, GraphRecord};
use gsroute::lattice::{grid_cluster, GridCoord, GridLattice};
use gsroute::oracle::DEFAULT_CAP;
use gsroute::plan::BasisCounts;
use gsroute::planner::{compile_on, PlanReport, RoutingRequest};
use gsroute::{GraphState, MeasurementPlan};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub verify: bool,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub oracle_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub grid: GridSize,
    #[serde(default)]
    pub requests: Vec<RoutingRequest>,
    #[serde(default)]
    pub blocks: Vec<BlockSpec>,
    #[serde(default)]
    pub options: Options,
}

/// Problems that map to exit code 1.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), InputError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

impl Workload {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let w: Workload = read_json(path)?;
        w.check()?;
        Ok(w)
    }

    pub fn lattice(&self) -> Result<GridLattice, InputError> {
        Ok(GridLattice::new(self.grid.rows, self.grid.cols)?)
    }

    fn check(&self) -> Result<(), InputError> {
        let lat = self.lattice()?;
        for (i, r) in self.requests.iter().enumerate() {
            r.validate(&lat)
                .map_err(|e| InputError(format!("request {i}: {e}")))?;
        }
        if self.options.verify && self.options.seed.is_none() {
            return Err(InputError("options.verify needs options.seed".into()));
        }
        Ok(())
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.options.seed).unwrap_or(0)
    }

    pub fn trials(&self, flag: Option<usize>) -> usize {
        flag.or(self.options.trials).unwrap_or(DEFAULT_TRIALS)
    }

    pub fn oracle_cap(&self, flag: Option<usize>) -> usize {
        flag.or(self.options.oracle_cap).unwrap_or(DEFAULT_CAP)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub entangled: Vec<Vec<GridCoord>>,
    pub holes: Vec<GridCoord>,
    /// Set when the block composite could not be built on the grid.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Report {
    /// Measurements of the whole plan, blocks included.
    pub counts: BasisCounts,
    pub requests: PlanReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockOutcome>,
}

impl Report {
    pub fn all_served(&self) -> bool {
        self.requests.all_served() && self.blocks.as_ref().is_none_or(|b| b.error.is_none())
    }
}

pub struct Compiled {
    pub lattice: GridLattice,
    pub initial: GraphState,
    pub plan: MeasurementPlan,
    pub report: Report,
}

/// Blocks first, as one composite, then the requests on what is left.
pub fn compile_workload(w: &Workload, seed: u64) -> Result<Compiled, InputError> {
    let lat = w.lattice()?;
    let (initial, _) = grid_cluster(lat.rows, lat.cols)?;
    let mut plan = MeasurementPlan::new();
    let mut g = initial.clone();
    let mut blocks = None;
    if !w.blocks.is_empty() {
        let built = w
            .blocks
            .iter()
            .enumerate()
            .map(|(i, s)| build(s).map_err(|e| InputError(format!("block {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        blocks = Some(match instantiate(&built, &lat, &g) {
            Ok(run) => {
                plan.extend(run.plan);
                g = run.graph;
                BlockOutcome {
                    entangled: run.entangled,
                    holes: run.holes,
                    error: None,
                }
            }
            Err(e) => BlockOutcome {
                error: Some(e.to_string()),
                ..Default::default()
            },
        });
    }
    let (req_plan, requests) = compile_on(&g, &lat, &w.requests, seed);
    plan.extend(req_plan);
    let counts = plan.counts();
    Ok(Compiled {
        lattice: lat,
        initial,
        plan,
        report: Report {
            counts,
            requests,
            blocks,
        },
    })
}

/// Figure-style colors, one per served request.
const PALETTE: [&str; 6] = [
    "purple",
    "turquoise",
    "royalblue",
    "crimson",
    "forestgreen",
    "gold3",
];

pub fn to_dot(g: &GraphState, lat: &GridLattice, report: &Report) -> String {
    let mut highlight = Vec::new();
    let groups = report
        .requests
        .served
        .iter()
        .map(|s| &s.entangled)
        .chain(report.blocks.iter().flat_map(|b| b.entangled.iter()));
    for (i, cells) in groups.enumerate() {
        highlight.push((
            cells.iter().map(|&c| lat.vertex(c)).collect(),
            PALETTE[i % PALETTE.len()].to_string(),
        ));
    }
    g.to_dot(&DotOptions {
        labels: Some(lat.labels()),
        positions: Some(lat.positions()),
        highlight,
    })
}

pub fn graph_record(g: &GraphState) -> GraphRecord {
    GraphRecord::from(g.clone())
}
