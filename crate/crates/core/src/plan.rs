//! Measurement plans: the compiled artifact shared by the zipper, the
//! block generators and the planner.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Basis, GraphError, GraphState, VertexId};

/// One single-qubit measurement. X steps name the special neighbor used by
/// the graphical rule; it may be omitted only when the vertex is isolated
/// at execution time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub vertex: VertexId,
    pub basis: Basis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special: Option<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl Step {
    pub fn x(vertex: VertexId, special: VertexId) -> Self {
        Step {
            vertex,
            basis: Basis::X,
            special: Some(special),
            tag: None,
        }
    }

    pub fn y(vertex: VertexId) -> Self {
        Step {
            vertex,
            basis: Basis::Y,
            special: None,
            tag: None,
        }
    }

    pub fn z(vertex: VertexId) -> Self {
        Step {
            vertex,
            basis: Basis::Z,
            special: None,
            tag: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("vertex {0} is measured twice")]
    Duplicate(VertexId),
    #[error("vertex {vertex} is outside a graph of {n} vertices")]
    OutOfRange { vertex: VertexId, n: usize },
    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: GraphError,
    },
    #[error("step {index}: X on {vertex} needs a special neighbor")]
    MissingSpecial { index: usize, vertex: VertexId },
}

/// Per-basis measurement counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl BasisCounts {
    pub fn total(&self) -> usize {
        self.x + self.y + self.z
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub steps: Vec<Step>,
}

impl MeasurementPlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: MeasurementPlan) {
        self.steps.extend(other.steps);
    }

    /// Set the request tag on every step.
    pub fn tagged(mut self, tag: &str) -> Self {
        for s in &mut self.steps {
            s.tag = Some(tag.to_string());
        }
        self
    }

    pub fn counts(&self) -> BasisCounts {
        let mut c = BasisCounts::default();
        for s in &self.steps {
            match s.basis {
                Basis::X => c.x += 1,
                Basis::Y => c.y += 1,
                Basis::Z => c.z += 1,
            }
        }
        c
    }

    pub fn vertices(&self) -> BTreeSet<VertexId> {
        self.steps.iter().map(|s| s.vertex).collect()
    }

    /// Static checks: ids in range and no vertex measured twice.
    pub fn validate(&self, n: usize) -> Result<(), PlanError> {
        let mut seen = BTreeSet::new();
        for s in &self.steps {
            for v in std::iter::once(s.vertex).chain(s.special) {
                if v.index() >= n {
                    return Err(PlanError::OutOfRange { vertex: v, n });
                }
            }
            if !seen.insert(s.vertex) {
                return Err(PlanError::Duplicate(s.vertex));
            }
        }
        Ok(())
    }

    /// Apply every step with the graphical rules. Stops at the first step
    /// whose preconditions fail; `g` then holds the partial result.
    pub fn execute(&self, g: &mut GraphState) -> Result<(), PlanError> {
        self.validate(g.vertex_count())?;
        for (index, s) in self.steps.iter().enumerate() {
            apply_step(g, index, s)?;
        }
        Ok(())
    }
}

pub(crate) fn apply_step(g: &mut GraphState, index: usize, s: &Step) -> Result<(), PlanError> {
    if s.basis == Basis::X && s.special.is_none() && g.is_active(s.vertex) && g.degree(s.vertex) > 0
    {
        return Err(PlanError::MissingSpecial {
            index,
            vertex: s.vertex,
        });
    }
    g.measure(s.vertex, s.basis, s.special)
        .map_err(|source| PlanError::Step { index, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    #[test]
    fn execute_chain_to_bell_pair() {
        let mut g = GraphState::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let plan = MeasurementPlan {
            steps: vec![Step::x(v(1), v(0)), Step::x(v(2), v(0))],
        };
        plan.execute(&mut g).unwrap();
        assert_eq!(g.edges(), vec![(v(0), v(3))]);
        assert_eq!(plan.counts(), BasisCounts { x: 2, y: 0, z: 0 });
    }

    #[test]
    fn duplicates_and_bad_specials_are_rejected() {
        let plan = MeasurementPlan {
            steps: vec![Step::z(v(1)), Step::y(v(1))],
        };
        assert_eq!(plan.validate(3), Err(PlanError::Duplicate(v(1))));
        let mut g = GraphState::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let plan = MeasurementPlan {
            steps: vec![Step::x(v(0), v(2))],
        };
        assert!(matches!(
            plan.execute(&mut g),
            Err(PlanError::Step { index: 0, .. })
        ));
        let plan = MeasurementPlan {
            steps: vec![Step {
                special: None,
                ..Step::x(v(1), v(0))
            }],
        };
        let mut g = GraphState::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            plan.execute(&mut g),
            Err(PlanError::MissingSpecial { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let plan = MeasurementPlan {
            steps: vec![Step::x(v(4), v(0)), Step::z(v(2))],
        }
        .tagged("r0");
        let s = serde_json::to_string(&plan).unwrap();
        assert!(s.contains("\"basis\":\"X\""));
        let back: MeasurementPlan = serde_json::from_str(&s).unwrap();
        assert_eq!(back, plan);
    }
}
