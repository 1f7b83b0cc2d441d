//! Dense statevector oracle.
//!
//! Builds the graph state as a full amplitude vector, applies projective
//! Pauli measurements and evaluates Pauli expectations exactly. It is
//! generic over the float type; the crate root exports `f64` and `f32`
//! aliases.
//!
//! The graphical measurement rules describe the post-measurement state only
//! up to a fixed local Clifford per rule. [`verify_plan`] runs the graph and
//! the vector in lockstep and applies that Clifford after each operation, so
//! the vector stays equal to the predicted graph state up to local Pauli
//! byproducts, which the modulus check `|<K_a>| = 1` tolerates.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Basis, GraphState, Pauli, PauliString, Sign, VertexId};
use crate::plan::{MeasurementPlan, PlanError};

/// Default qubit cap: 2^22 complex doubles, 64 MiB.
pub const DEFAULT_CAP: usize = 22;

/// Tolerance on `|<K_a>|` used by plan verification.
pub const STABILIZER_TOL: f64 = 1e-9;

/// Projections below this probability count as impossible.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{active} active qubits exceed the oracle cap of {cap}")]
    TooManyQubits { active: usize, cap: usize },
    #[error("outcome {outcome:?} on vertex {vertex} has zero probability")]
    ZeroProbability { vertex: VertexId, outcome: Outcome },
    #[error("vertex {0} is not held by the oracle state")]
    UnsupportedQubit(VertexId),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn eigenvalue(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomePolicy {
    /// Take this outcome; an error if it has zero probability.
    Forced(Outcome),
    /// Draw the outcome from its probability with a generator seeded here.
    Sampled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub vertex: VertexId,
    pub basis: Basis,
    pub outcome: Outcome,
    pub probability: f64,
}

/// Amplitudes over the active qubits; bit `k` of the index is qubit
/// `qubit_order[k]`.
#[derive(Debug, Clone)]
pub struct OracleState<T> {
    qubit_order: Vec<VertexId>,
    amplitudes: Vec<Complex<T>>,
}

fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("float conversion")
}

impl<T: Float> OracleState<T> {
    pub fn qubit_order(&self) -> &[VertexId] {
        &self.qubit_order
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> usize {
        self.qubit_order.len()
    }

    fn position(&self, v: VertexId) -> Result<usize, OracleError> {
        self.qubit_order
            .iter()
            .position(|&q| q == v)
            .ok_or(OracleError::UnsupportedQubit(v))
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    /// Apply a 2x2 unitary `u` (row-major) to qubit `v`.
    pub fn apply_single(
        &mut self,
        v: VertexId,
        u: [[Complex<T>; 2]; 2],
    ) -> Result<(), OracleError> {
        let bit = 1usize << self.position(v)?;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Project qubit `v` onto an eigenvector of `basis`, renormalize and
    /// drop the qubit.
    pub fn apply_measurement(
        &mut self,
        v: VertexId,
        basis: Basis,
        policy: OutcomePolicy,
    ) -> Result<MeasurementOutcome, OracleError> {
        let k = self.position(v)?;
        let p_plus = self.projected(k, basis, Outcome::Plus).1;
        let outcome = match policy {
            OutcomePolicy::Forced(o) => o,
            OutcomePolicy::Sampled(seed) => {
                let draw: f64 = ChaCha8Rng::seed_from_u64(seed).random();
                if draw < p_plus.to_f64().unwrap_or(0.0) {
                    Outcome::Plus
                } else {
                    Outcome::Minus
                }
            }
        };
        let (reduced, p) = self.projected(k, basis, outcome);
        let p = p.to_f64().unwrap_or(0.0);
        if p < MIN_PROBABILITY && matches!(policy, OutcomePolicy::Sampled(_)) {
            // a sampled draw can only land here through rounding at p = 1
            let o = outcome.flip();
            let (r, q) = self.projected(k, basis, o);
            return self.commit(v, k, basis, o, r, q.to_f64().unwrap_or(0.0));
        }
        self.commit(v, k, basis, outcome, reduced, p)
    }

    fn commit(
        &mut self,
        v: VertexId,
        k: usize,
        basis: Basis,
        outcome: Outcome,
        mut reduced: Vec<Complex<T>>,
        p: f64,
    ) -> Result<MeasurementOutcome, OracleError> {
        if p < MIN_PROBABILITY {
            return Err(OracleError::ZeroProbability { vertex: v, outcome });
        }
        let scale = c::<T>(1.0 / p.sqrt());
        for a in &mut reduced {
            *a = *a * scale;
        }
        self.amplitudes = reduced;
        self.qubit_order.remove(k);
        Ok(MeasurementOutcome {
            vertex: v,
            basis,
            outcome,
            probability: p,
        })
    }

    /// Unnormalized reduced vector after projecting qubit `k`, and its
    /// squared norm.
    fn projected(&self, k: usize, basis: Basis, outcome: Outcome) -> (Vec<Complex<T>>, T) {
        let h = c::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let s = if outcome == Outcome::Plus {
            T::one()
        } else {
            -T::one()
        };
        // conjugated eigenvector components
        let (e0, e1) = match basis {
            Basis::X => (Complex::new(h, T::zero()), Complex::new(s * h, T::zero())),
            Basis::Y => (Complex::new(h, T::zero()), Complex::new(T::zero(), -s * h)),
            Basis::Z => {
                if outcome == Outcome::Plus {
                    (
                        Complex::new(T::one(), T::zero()),
                        Complex::new(T::zero(), T::zero()),
                    )
                } else {
                    (
                        Complex::new(T::zero(), T::zero()),
                        Complex::new(T::one(), T::zero()),
                    )
                }
            }
        };
        let low = (1usize << k) - 1;
        let half = self.amplitudes.len() / 2;
        let mut out = Vec::with_capacity(half);
        let mut p = T::zero();
        for j in 0..half {
            let i0 = ((j & !low) << 1) | (j & low);
            let i1 = i0 | (1 << k);
            let a = e0 * self.amplitudes[i0] + e1 * self.amplitudes[i1];
            p = p + a.norm_sqr();
            out.push(a);
        }
        (out, p)
    }

    /// Exact `<psi|P|psi>`.
    pub fn expectation(&self, p: &PauliString) -> Result<Complex<T>, OracleError> {
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ymask = 0usize;
        for (v, letter) in p.support() {
            let bit = 1usize << self.position(v)?;
            match letter {
                Pauli::I => {}
                Pauli::X => xmask |= bit,
                Pauli::Z => zmask |= bit,
                Pauli::Y => {
                    xmask |= bit;
                    ymask |= bit;
                }
            }
        }
        // (P psi)[j] = phase(j) psi[j ^ xmask], phase from Z and Y letters:
        // Z gives (-1)^{j_q}; Y gives -i for j_q = 0 and +i for j_q = 1.
        let ny = ymask.count_ones() as usize;
        let base = match ny % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), -T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), T::one()),
        };
        let mut acc = Complex::new(T::zero(), T::zero());
        for (j, a) in self.amplitudes.iter().enumerate() {
            // each set Y bit turns -i into +i: a factor of -1
            let flips = (j & zmask).count_ones() + (j & ymask).count_ones();
            let term = a.conj() * self.amplitudes[j ^ xmask];
            acc = if flips.is_multiple_of(2) {
                acc + term
            } else {
                acc - term
            };
        }
        let val = base * acc;
        Ok(if p.sign == Sign::Minus { -val } else { val })
    }

    /// `1 - |<K_a>|`, worst over all stabilizer generators of `g`.
    pub fn worst_stabilizer_deviation(&self, g: &GraphState) -> Result<f64, OracleError> {
        let mut worst = 0.0f64;
        for a in g.active_vertices() {
            let k = g.stabilizer(a).expect("active vertex");
            let e = self.expectation(&k)?;
            worst = worst.max((1.0 - e.norm().to_f64().unwrap_or(0.0)).abs());
        }
        Ok(worst)
    }
}

/// Graph state of `g` over its active qubits, in ascending id order.
pub fn statevector_from_graph<T: Float>(
    g: &GraphState,
    cap: usize,
) -> Result<OracleState<T>, OracleError> {
    let order = g.active_vertices();
    let k = order.len();
    if k > cap {
        return Err(OracleError::TooManyQubits { active: k, cap });
    }
    let pos: BTreeMap<VertexId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let masks: Vec<usize> = g
        .edges()
        .iter()
        .map(|(a, b)| (1 << pos[a]) | (1 << pos[b]))
        .collect();
    let amp = c::<T>((0.5f64).powf(k as f64 / 2.0));
    let amplitudes = (0..1usize << k)
        .map(|i| {
            let parity = masks.iter().filter(|&&m| i & m == m).count() % 2;
            let s = if parity == 0 { amp } else { -amp };
            Complex::new(s, T::zero())
        })
        .collect();
    Ok(OracleState {
        qubit_order: order,
        amplitudes,
    })
}

pub fn stabilizer_expectation<T: Float>(
    s: &OracleState<T>,
    p: &PauliString,
) -> Result<Complex<T>, OracleError> {
    s.expectation(p)
}

fn sqrt_rot<T: Float>(axis: Pauli, sign: f64) -> [[Complex<T>; 2]; 2] {
    // exp(sign * i pi/4 P) = (I + sign * i P) / sqrt 2
    let h = c::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let z = T::zero();
    let s = c::<T>(sign) * h;
    match axis {
        Pauli::X => [
            [Complex::new(h, z), Complex::new(z, s)],
            [Complex::new(z, s), Complex::new(h, z)],
        ],
        Pauli::Y => [
            [Complex::new(h, z), Complex::new(s, z)],
            [Complex::new(-s, z), Complex::new(h, z)],
        ],
        Pauli::Z => [
            [Complex::new(h, s), Complex::new(z, z)],
            [Complex::new(z, z), Complex::new(h, -s)],
        ],
        Pauli::I => [
            [Complex::new(T::one(), z), Complex::new(z, z)],
            [Complex::new(z, z), Complex::new(T::one(), z)],
        ],
    }
}

/// The local Clifford that realizes LC at `a`: `exp(-i pi/4 X_a)` times
/// `exp(+i pi/4 Z_b)` on every neighbor.
pub fn apply_lc_frame<T: Float>(
    s: &mut OracleState<T>,
    g: &GraphState,
    a: VertexId,
) -> Result<(), OracleError> {
    s.apply_single(a, sqrt_rot(Pauli::X, -1.0))?;
    for b in g.neighbors(a) {
        s.apply_single(b, sqrt_rot(Pauli::Z, 1.0))?;
    }
    Ok(())
}

/// One plan operation on both the graph and the vector, followed by the
/// rule's local Clifford so the vector tracks the graph state.
pub fn lockstep_measure<T: Float>(
    s: &mut OracleState<T>,
    g: &mut GraphState,
    v: VertexId,
    basis: Basis,
    special: Option<VertexId>,
    policy: OutcomePolicy,
) -> Result<MeasurementOutcome, OracleError> {
    let nb = g.neighbors(v);
    let special = match (basis, special) {
        (Basis::X, None) => g.default_special(v),
        (_, sp) => sp,
    };
    // check the graph rule first so a bad step leaves both untouched
    let mut next = g.clone();
    next.measure(v, basis, special)
        .map_err(|source| OracleError::Plan(PlanError::Step { index: 0, source }))?;
    let out = s.apply_measurement(v, basis, policy)?;
    match basis {
        Basis::Z => {}
        Basis::Y => {
            for b in &nb {
                s.apply_single(*b, sqrt_rot(Pauli::Z, 1.0))?;
            }
        }
        Basis::X => {
            if let (false, Some(b0)) = (nb.is_empty(), special) {
                s.apply_single(b0, sqrt_rot(Pauli::Y, -1.0))?;
            }
        }
    }
    *g = next;
    Ok(out)
}

/// Local complementation on both sides.
pub fn lockstep_lc<T: Float>(
    s: &mut OracleState<T>,
    g: &mut GraphState,
    a: VertexId,
) -> Result<(), OracleError> {
    apply_lc_frame(s, g, a)?;
    g.local_complement(a)
        .map_err(|source| OracleError::Plan(PlanError::Step { index: 0, source }))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub outcomes: Vec<Outcome>,
    pub worst_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub trials: Vec<TrialReport>,
    pub worst_deviation: f64,
    pub passed: bool,
}

/// Execute `plan` on the vector of `g0` once per trial with sampled
/// outcomes and check every stabilizer of `predicted` to [`STABILIZER_TOL`].
pub fn verify_plan(
    g0: &GraphState,
    plan: &MeasurementPlan,
    predicted: &GraphState,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<VerificationReport, OracleError> {
    let active = g0.active_count();
    if active > cap {
        return Err(OracleError::TooManyQubits { active, cap });
    }
    plan.validate(g0.vertex_count())?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(trials);
    let base = statevector_from_graph::<f64>(g0, cap)?;
    for _ in 0..trials.max(1) {
        let trial_seed: u64 = master.random();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let mut s = base.clone();
        let mut g = g0.clone();
        let mut outcomes = Vec::with_capacity(plan.len());
        for (index, step) in plan.steps.iter().enumerate() {
            let out = lockstep_measure(
                &mut s,
                &mut g,
                step.vertex,
                step.basis,
                step.special,
                OutcomePolicy::Sampled(rng.random()),
            )
            .map_err(|e| match e {
                OracleError::Plan(PlanError::Step { source, .. }) => {
                    OracleError::Plan(PlanError::Step { index, source })
                }
                other => other,
            })?;
            outcomes.push(out.outcome);
        }
        let worst = if predicted.active_vertices() == s.qubit_order() {
            s.worst_stabilizer_deviation(predicted)?
        } else {
            1.0
        };
        reports.push(TrialReport {
            seed: trial_seed,
            outcomes,
            worst_deviation: worst,
            passed: worst <= STABILIZER_TOL,
        });
    }
    let worst = reports
        .iter()
        .map(|t| t.worst_deviation)
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        passed: reports.iter().all(|t| t.passed),
        worst_deviation: worst,
        trials: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Step;

    fn v(i: u32) -> VertexId {
        VertexId(i)
    }

    const EPS: f64 = 1e-12;

    #[test]
    fn single_vertex_is_plus_state() {
        let s = statevector_from_graph::<f64>(&GraphState::new(1), DEFAULT_CAP).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - h).abs() < EPS && (s.amplitudes()[1].re - h).abs() < EPS);
    }

    #[test]
    fn one_edge_amplitudes() {
        let g = GraphState::from_edges(2, &[(0, 1)]).unwrap();
        let s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        let re: Vec<f64> = s.amplitudes().iter().map(|a| a.re).collect();
        assert_eq!(re, vec![0.5, 0.5, 0.5, -0.5]);
    }

    #[test]
    fn fig5_stabilizers_are_plus_one() {
        let g = GraphState::from_edges(4, &[(0, 1), (0, 3), (0, 2), (1, 2), (1, 3)]).unwrap();
        let s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        for a in g.active_vertices() {
            let e = s.expectation(&g.stabilizer(a).unwrap()).unwrap();
            assert!((e.re - 1.0).abs() < EPS && e.im.abs() < EPS);
        }
    }

    #[test]
    fn anticommuting_pauli_has_zero_expectation() {
        let g = GraphState::from_edges(2, &[(0, 1)]).unwrap();
        let s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        let z0 = PauliString::from_letters([(v(0), Pauli::Z)]);
        assert!(s.expectation(&z0).unwrap().norm() < EPS);
        let yy = PauliString::from_letters([(v(0), Pauli::Y), (v(1), Pauli::Y)]);
        // K0 K1 = (XZ)(ZX) = Y Y
        assert!((s.expectation(&yy).unwrap().re - 1.0).abs() < EPS);
    }

    #[test]
    fn measurement_probabilities() {
        let g = GraphState::from_edges(2, &[(0, 1)]).unwrap();
        let mut s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        let out = s
            .apply_measurement(v(0), Basis::X, OutcomePolicy::Forced(Outcome::Plus))
            .unwrap();
        assert!((out.probability - 0.5).abs() < EPS);
        assert!((s.norm() - 1.0).abs() < EPS);
        assert_eq!(s.qubit_order(), &[v(1)]);

        let mut s = statevector_from_graph::<f64>(&GraphState::new(1), DEFAULT_CAP).unwrap();
        let out = s
            .apply_measurement(v(0), Basis::Z, OutcomePolicy::Forced(Outcome::Minus))
            .unwrap();
        assert!((out.probability - 0.5).abs() < EPS);
    }

    #[test]
    fn forced_impossible_outcome_errors() {
        let mut s = statevector_from_graph::<f64>(&GraphState::new(1), DEFAULT_CAP).unwrap();
        let err = s
            .apply_measurement(v(0), Basis::X, OutcomePolicy::Forced(Outcome::Minus))
            .unwrap_err();
        assert!(matches!(err, OracleError::ZeroProbability { .. }));
    }

    #[test]
    fn y_on_chain_middle_leaves_bell_pair_in_lockstep() {
        let mut g = GraphState::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut s = statevector_from_graph::<f64>(&g, DEFAULT_CAP).unwrap();
        lockstep_measure(
            &mut s,
            &mut g,
            v(1),
            Basis::Y,
            None,
            OutcomePolicy::Forced(Outcome::Plus),
        )
        .unwrap();
        assert_eq!(g.edges(), vec![(v(0), v(2))]);
        let xz = PauliString::from_letters([(v(0), Pauli::X), (v(2), Pauli::Z)]);
        let zx = PauliString::from_letters([(v(0), Pauli::Z), (v(2), Pauli::X)]);
        assert!((s.expectation(&xz).unwrap().norm() - 1.0).abs() < 1e-9);
        assert!((s.expectation(&zx).unwrap().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let err = statevector_from_graph::<f64>(&GraphState::new(5), 4).unwrap_err();
        assert_eq!(err, OracleError::TooManyQubits { active: 5, cap: 4 });
    }

    #[test]
    fn verify_plan_controls() {
        let g = GraphState::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let empty = verify_plan(&g, &MeasurementPlan::new(), &g, 3, 1, DEFAULT_CAP).unwrap();
        assert!(empty.passed);

        let plan = MeasurementPlan {
            steps: vec![Step::x(v(1), v(0)), Step::x(v(2), v(0))],
        };
        let mut predicted = g.clone();
        plan.execute(&mut predicted).unwrap();
        let ok = verify_plan(&g, &plan, &predicted, 20, 7, DEFAULT_CAP).unwrap();
        assert!(ok.passed, "{ok:?}");

        let mut wrong = predicted.clone();
        wrong.toggle_edge(v(0), v(3)).unwrap();
        let bad = verify_plan(&g, &plan, &wrong, 5, 7, DEFAULT_CAP).unwrap();
        assert!(!bad.passed);
        assert!((bad.worst_deviation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_precision_builds() {
        let g = GraphState::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = statevector_from_graph::<f32>(&g, DEFAULT_CAP).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-6);
        let e = s.expectation(&g.stabilizer(v(1)).unwrap()).unwrap();
        assert!((e.re - 1.0).abs() < 1e-6);
    }
}
