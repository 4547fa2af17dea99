//! Weak and reversal measurements on a pair of qubits.

use crate::error::{Error, Result};
use crate::linalg::{tensor_product, BlochVector, ComplexMatrix2, ComplexMatrix4, DensityMatrix, PureState};
use crate::rng::RngStream;

/// Branch probabilities below this are treated as impossible.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// The four joint outcomes in the order `(+,+), (+,−), (−,+), (−,−)`.
pub const JOINT_OUTCOMES: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

fn check_strength(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange { name, value });
    }
    Ok(())
}

/// Two-outcome measurement of strength `p` along a Bloch direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakMeasurement {
    strength: f64,
    direction: BlochVector,
}

impl WeakMeasurement {
    pub fn new(strength: f64, direction: BlochVector) -> Result<Self> {
        check_strength("strength", strength)?;
        Ok(Self { strength, direction })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn direction(&self) -> BlochVector {
        self.direction
    }

    pub fn operator(&self, outcome: Outcome) -> ComplexMatrix2 {
        weak_operator(self, outcome)
    }

    /// The reversal that undoes this measurement on a matched outcome.
    pub fn matching_reversal(&self) -> ReversalMeasurement {
        ReversalMeasurement { strength: self.strength, direction: self.direction }
    }
}

/// Reversal measurement: same construction as [`WeakMeasurement`] with the
/// outcome weighting inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversalMeasurement {
    strength: f64,
    direction: BlochVector,
}

impl ReversalMeasurement {
    pub fn new(strength: f64, direction: BlochVector) -> Result<Self> {
        check_strength("strength", strength)?;
        Ok(Self { strength, direction })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn direction(&self) -> BlochVector {
        self.direction
    }

    pub fn operator(&self, outcome: Outcome) -> ComplexMatrix2 {
        reversal_operator(self, outcome)
    }
}

/// `½(I ± r·σ)`
pub fn projector(direction: &BlochVector, sign: Outcome) -> ComplexMatrix2 {
    let sigma = ComplexMatrix2::pauli_along(direction).scale_real(sign.value());
    (ComplexMatrix2::identity() + sigma).scale_real(0.5)
}

fn two_projector_operator(direction: &BlochVector, outcome: Outcome, same: f64, other: f64) -> ComplexMatrix2 {
    projector(direction, outcome).scale_real(same.sqrt())
        + projector(direction, outcome.flipped()).scale_real(other.sqrt())
}

/// `M± = √((1+p)/2) Π± + √((1−p)/2) Π∓`
pub fn weak_operator(m: &WeakMeasurement, outcome: Outcome) -> ComplexMatrix2 {
    let p = m.strength;
    two_projector_operator(&m.direction, outcome, (1.0 + p) / 2.0, (1.0 - p) / 2.0)
}

/// `R± = √((1−q)/2) Π± + √((1+q)/2) Π∓`
pub fn reversal_operator(r: &ReversalMeasurement, outcome: Outcome) -> ComplexMatrix2 {
    let q = r.strength;
    two_projector_operator(&r.direction, outcome, (1.0 - q) / 2.0, (1.0 + q) / 2.0)
}

/// POVM element `M_l† M_l`.
pub fn effect(m: &WeakMeasurement, outcome: Outcome) -> ComplexMatrix2 {
    let k = weak_operator(m, outcome);
    k.adjoint() * k
}

/// `μ = Σ_l l · M_l† M_l`, which equals `p (r·σ)`.
pub fn generalized_observable(m: &WeakMeasurement) -> ComplexMatrix2 {
    Outcome::BOTH.into_iter().map(|l| effect(m, l).scale_real(l.value())).sum()
}

/// `trace(ρ (E_A ⊗ E_B))` for the joint outcome `(l_a, l_b)`.
pub fn joint_outcome_probability(
    state: &DensityMatrix,
    m_a: &WeakMeasurement,
    m_b: &WeakMeasurement,
    l_a: Outcome,
    l_b: Outcome,
) -> f64 {
    state.expectation(&tensor_product(&effect(m_a, l_a), &effect(m_b, l_b)))
}

/// Probabilities of the four joint outcomes, ordered as [`JOINT_OUTCOMES`].
pub fn outcome_distribution(state: &DensityMatrix, m_a: &WeakMeasurement, m_b: &WeakMeasurement) -> [f64; 4] {
    JOINT_OUTCOMES.map(|(a, b)| joint_outcome_probability(state, m_a, m_b, a, b).max(0.0))
}

/// A two-qubit state that local Kraus operators can act on.
pub trait QuantumState: Sized + Clone + Send + Sync {
    /// Applies `op_a ⊗ op_b`; returns the normalized state and the branch probability.
    fn apply_local(&self, op_a: &ComplexMatrix2, op_b: &ComplexMatrix2) -> Result<(Self, f64)>;

    fn to_density(&self) -> DensityMatrix;
}

impl QuantumState for PureState {
    fn apply_local(&self, op_a: &ComplexMatrix2, op_b: &ComplexMatrix2) -> Result<(Self, f64)> {
        let v = tensor_product(op_a, op_b).apply(self.amplitudes());
        let probability: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if probability < MIN_BRANCH_PROBABILITY {
            return Err(Error::ZeroProbabilityBranch { probability });
        }
        let norm = probability.sqrt();
        Ok((PureState::new(v.map(|a| a / norm))?, probability))
    }

    fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

impl QuantumState for DensityMatrix {
    fn apply_local(&self, op_a: &ComplexMatrix2, op_b: &ComplexMatrix2) -> Result<(Self, f64)> {
        let k: ComplexMatrix4 = tensor_product(op_a, op_b);
        let unnormalized = k.sandwich(self.matrix());
        let probability = unnormalized.trace().re;
        if probability < MIN_BRANCH_PROBABILITY {
            return Err(Error::ZeroProbabilityBranch { probability });
        }
        let mut m = unnormalized.scale_real(1.0 / probability);
        // Restore exact Hermiticity lost to rounding.
        m = (m + m.adjoint()).scale_real(0.5);
        Ok((DensityMatrix::from_trusted(m), probability))
    }

    fn to_density(&self) -> DensityMatrix {
        *self
    }
}

/// Back action of the local operators `op_a ⊗ op_b` on `state`.
pub fn apply_measurement<S: QuantumState>(state: &S, op_a: &ComplexMatrix2, op_b: &ComplexMatrix2) -> Result<(S, f64)> {
    state.apply_local(op_a, op_b)
}

/// Draws an index from a discrete distribution given by `weights` (summing to ~1).
/// Weights below [`MIN_BRANCH_PROBABILITY`] are never drawn.
pub(crate) fn draw_index(weights: &[f64], rng: &mut RngStream) -> usize {
    let live = |w: f64| if w < MIN_BRANCH_PROBABILITY { 0.0 } else { w };
    let total: f64 = weights.iter().map(|&w| live(w)).sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &w) in weights.iter().enumerate() {
        let w = live(w);
        if w > 0.0 {
            last_nonzero = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}

/// Samples one branch of a pair of local two-outcome instruments given by
/// their Kraus operators (indexed by [`Outcome::BOTH`] order).
pub fn sample_local_instrument<S: QuantumState>(
    state: &S,
    ops_a: &[ComplexMatrix2; 2],
    ops_b: &[ComplexMatrix2; 2],
    rng: &mut RngStream,
) -> Result<(Outcome, Outcome, S)> {
    let rho = state.to_density();
    let effects_a = ops_a.map(|k| k.adjoint() * k);
    let effects_b = ops_b.map(|k| k.adjoint() * k);
    let dist = JOINT_OUTCOMES
        .map(|(a, b)| rho.expectation(&tensor_product(&effects_a[a as usize], &effects_b[b as usize])).max(0.0));
    let (l_a, l_b) = JOINT_OUTCOMES[draw_index(&dist, rng)];
    let (post, _) = state.apply_local(&ops_a[l_a as usize], &ops_b[l_b as usize])?;
    Ok((l_a, l_b, post))
}

/// Samples a joint outcome and returns it together with the post-measurement state.
pub fn sample_outcomes<S: QuantumState>(
    state: &S,
    m_a: &WeakMeasurement,
    m_b: &WeakMeasurement,
    rng: &mut RngStream,
) -> Result<(Outcome, Outcome, S)> {
    let dist = outcome_distribution(&state.to_density(), m_a, m_b);
    let (l_a, l_b) = JOINT_OUTCOMES[draw_index(&dist, rng)];
    let (post, _) = state.apply_local(&weak_operator(m_a, l_a), &weak_operator(m_b, l_b))?;
    Ok((l_a, l_b, post))
}

/// Outcome tallies for one measurement setting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub plus_plus: u64,
    pub plus_minus: u64,
    pub minus_plus: u64,
    pub minus_minus: u64,
}

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.plus_plus + self.plus_minus + self.minus_plus + self.minus_minus
    }

    pub fn get(&self, l_a: Outcome, l_b: Outcome) -> u64 {
        match (l_a, l_b) {
            (Outcome::Plus, Outcome::Plus) => self.plus_plus,
            (Outcome::Plus, Outcome::Minus) => self.plus_minus,
            (Outcome::Minus, Outcome::Plus) => self.minus_plus,
            (Outcome::Minus, Outcome::Minus) => self.minus_minus,
        }
    }

    pub fn record(&mut self, l_a: Outcome, l_b: Outcome) {
        match (l_a, l_b) {
            (Outcome::Plus, Outcome::Plus) => self.plus_plus += 1,
            (Outcome::Plus, Outcome::Minus) => self.plus_minus += 1,
            (Outcome::Minus, Outcome::Plus) => self.minus_plus += 1,
            (Outcome::Minus, Outcome::Minus) => self.minus_minus += 1,
        }
    }
}

/// Repeats the measurement on `shots` fresh copies of `state` and tallies outcomes.
pub fn sample_counts(
    state: &DensityMatrix,
    m_a: &WeakMeasurement,
    m_b: &WeakMeasurement,
    shots: u64,
    rng: &mut RngStream,
) -> OutcomeCounts {
    let dist = outcome_distribution(state, m_a, m_b);
    let mut counts = OutcomeCounts::default();
    for _ in 0..shots {
        let (a, b) = JOINT_OUTCOMES[draw_index(&dist, rng)];
        counts.record(a, b);
    }
    counts
}

/// Strength set by the half-wave-plate angle inside the interferometer, `|cos 4θ|`.
pub fn strength_from_waveplate(theta: f64) -> f64 {
    (4.0 * theta).cos().abs().min(1.0)
}
