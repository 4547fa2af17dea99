//! State-quality functionals, outcome averaging, and linear-inversion tomography.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::CertificationTest;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigensystem, hermitian_sqrt, singular_values, tensor_product, BlochVector, ComplexMatrix2,
    ComplexMatrix4, DensityMatrix, PureState,
};
use crate::measurement::{
    apply_measurement, outcome_distribution, sample_counts, sample_outcomes, weak_operator, WeakMeasurement,
    JOINT_OUTCOMES, MIN_BRANCH_PROBABILITY,
};
use crate::rng::RngStream;

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity_with_pure(target: &PureState, state: &DensityMatrix) -> f64 {
    state.matrix().expectation(target.amplitudes()).re
}

/// `trace(ρ²)`
pub fn purity(state: &DensityMatrix) -> f64 {
    state.matrix().trace_product(state.matrix()).re
}

/// Wootters concurrence.
///
/// The spin-flipped state is `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`; the λᵢ are the square
/// roots of the eigenvalues of the Hermitian matrix `√ρ ρ̃ √ρ`. That matrix is
/// `A A†` with `A = √ρ √ρ̃`, so the λᵢ are read off as singular values of `A`,
/// which keeps pure and nearly pure states accurate to ~1e-15.
pub fn concurrence(state: &DensityMatrix) -> f64 {
    let yy = tensor_product(&ComplexMatrix2::pauli_y(), &ComplexMatrix2::pauli_y());
    let root = hermitian_sqrt(state.matrix()).expect("density matrices are PSD");
    let flipped_root = yy * root.conj() * yy;
    let l = singular_values(&(root * flipped_root));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation in ebits from the concurrence.
pub fn entanglement_of_formation(concurrence: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&concurrence) {
        return Err(Error::OutOfRange { name: "concurrence", value: concurrence });
    }
    let c = concurrence.clamp(0.0, 1.0);
    Ok(binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0))
}

/// Total probability of matched-outcome recovery, `¼(1−p_A²)(1−p_B²)`.
pub fn reversibility(p_a: f64, p_b: f64) -> f64 {
    0.25 * (1.0 - p_a * p_a) * (1.0 - p_b * p_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub fidelity: f64,
    pub purity: f64,
    pub concurrence: f64,
    pub eof: f64,
}

impl StateMetrics {
    pub fn evaluate(reference: &PureState, state: &DensityMatrix) -> Self {
        let c = concurrence(state);
        Self {
            fidelity: fidelity_with_pure(reference, state),
            purity: purity(state),
            concurrence: c,
            eof: entanglement_of_formation(c).expect("concurrence lies in [0, 1]"),
        }
    }

    fn weighted(&self, w: f64) -> Self {
        Self {
            fidelity: self.fidelity * w,
            purity: self.purity * w,
            concurrence: self.concurrence * w,
            eof: self.eof * w,
        }
    }

    fn plus(&self, o: &Self) -> Self {
        Self {
            fidelity: self.fidelity + o.fidelity,
            purity: self.purity + o.purity,
            concurrence: self.concurrence + o.concurrence,
            eof: self.eof + o.eof,
        }
    }

    pub(crate) fn zero() -> Self {
        Self { fidelity: 0.0, purity: 0.0, concurrence: 0.0, eof: 0.0 }
    }

    pub(crate) fn mean_of<'a>(items: impl IntoIterator<Item = &'a StateMetrics>) -> Option<Self> {
        let mut n = 0usize;
        let sum = items.into_iter().fold(Self::zero(), |acc, m| {
            n += 1;
            acc.plus(m)
        });
        (n > 0).then(|| sum.weighted(1.0 / n as f64))
    }
}

/// The direction pairs over which outcome-averaged quantities are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingPlan {
    pairs: Vec<(BlochVector, BlochVector)>,
}

impl AveragingPlan {
    pub fn new(pairs: Vec<(BlochVector, BlochVector)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("averaging plan needs at least one direction pair".into()));
        }
        Ok(Self { pairs })
    }

    /// `(x̂,x̂), (ŷ,ŷ), (ẑ,ẑ)`, used by the witness and steering tests.
    pub fn witness() -> Self {
        Self { pairs: CertificationTest::Witness.settings() }
    }

    /// The four CHSH setting pairs.
    pub fn chsh() -> Self {
        Self { pairs: CertificationTest::Chsh.settings() }
    }

    pub fn for_test(test: CertificationTest) -> Self {
        Self { pairs: test.settings() }
    }

    pub fn pairs(&self) -> &[(BlochVector, BlochVector)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Every `(direction pair, outcome pair)` branch with its probability and disturbed state.
pub fn disturbed_branches(
    state: &DensityMatrix,
    plan: &AveragingPlan,
    p_a: f64,
    p_b: f64,
) -> Result<Vec<(f64, DensityMatrix)>> {
    let mut branches = Vec::with_capacity(plan.len() * 4);
    for &(r_a, r_b) in plan.pairs() {
        let m_a = WeakMeasurement::new(p_a, r_a)?;
        let m_b = WeakMeasurement::new(p_b, r_b)?;
        let dist = outcome_distribution(state, &m_a, &m_b);
        for (&(l_a, l_b), p) in JOINT_OUTCOMES.iter().zip(dist) {
            if p < MIN_BRANCH_PROBABILITY {
                continue;
            }
            let (post, _) = apply_measurement(state, &weak_operator(&m_a, l_a), &weak_operator(&m_b, l_b))?;
            branches.push((p, post));
        }
    }
    Ok(branches)
}

/// `Q̄ = (1/D) Σ_pairs Σ_outcomes P(l_A, l_B | r_A, r_B) Q[ρ_m]` by exact enumeration.
pub fn averaged_quantity<F>(state: &DensityMatrix, plan: &AveragingPlan, p_a: f64, p_b: f64, quantity: F) -> Result<f64>
where
    F: Fn(&DensityMatrix) -> f64 + Sync,
{
    let branches = disturbed_branches(state, plan, p_a, p_b)?;
    let values: Vec<f64> = branches.par_iter().map(|(p, rho)| p * quantity(rho)).collect();
    Ok(values.iter().sum::<f64>() / plan.len() as f64)
}

/// Monte Carlo estimate of [`averaged_quantity`] with its standard error.
///
/// `trials_per_pair` weak measurements are simulated for each direction pair
/// (pair `k`, trial `i` draws from `rng.child(k).child(i)`), and `Q` is
/// evaluated on each sampled post-measurement state.
pub fn sample_averaged_quantity<F>(
    state: &DensityMatrix,
    plan: &AveragingPlan,
    p_a: f64,
    p_b: f64,
    trials_per_pair: u64,
    rng: &RngStream,
    quantity: F,
) -> Result<(f64, f64)>
where
    F: Fn(&DensityMatrix) -> f64 + Sync,
{
    if trials_per_pair == 0 {
        return Err(Error::InvalidArgument("trials_per_pair must be positive".into()));
    }
    let mut values = Vec::with_capacity(plan.len() * trials_per_pair as usize);
    for (k, &(r_a, r_b)) in plan.pairs().iter().enumerate() {
        let m_a = WeakMeasurement::new(p_a, r_a)?;
        let m_b = WeakMeasurement::new(p_b, r_b)?;
        let pair_rng = rng.child(k as u64);
        let batch = (0..trials_per_pair)
            .into_par_iter()
            .map(|i| Ok(quantity(&sample_outcomes(state, &m_a, &m_b, &mut pair_rng.child(i))?.2)))
            .collect::<Result<Vec<f64>>>()?;
        values.extend(batch);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, (variance / n).sqrt()))
}

/// All [`StateMetrics`] fields averaged as in [`averaged_quantity`].
pub fn averaged_metrics(
    state: &DensityMatrix,
    plan: &AveragingPlan,
    p_a: f64,
    p_b: f64,
    reference: &PureState,
) -> Result<StateMetrics> {
    let branches = disturbed_branches(state, plan, p_a, p_b)?;
    let weighted: Vec<StateMetrics> =
        branches.par_iter().map(|(p, rho)| StateMetrics::evaluate(reference, rho).weighted(*p)).collect();
    let sum = weighted.iter().fold(StateMetrics::zero(), |acc, m| acc.plus(m));
    Ok(sum.weighted(1.0 / plan.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix2 {
        match self {
            Pauli::I => ComplexMatrix2::identity(),
            Pauli::X => ComplexMatrix2::pauli_x(),
            Pauli::Y => ComplexMatrix2::pauli_y(),
            Pauli::Z => ComplexMatrix2::pauli_z(),
        }
    }

    fn direction(self) -> Option<BlochVector> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(BlochVector::X),
            Pauli::Y => Some(BlochVector::Y),
            Pauli::Z => Some(BlochVector::Z),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Two-qubit Pauli expectations `⟨σ_i ⊗ σ_j⟩`.
pub type PauliExpectations = BTreeMap<(Pauli, Pauli), f64>;

/// Exact expectations of all 16 Pauli products.
pub fn pauli_expectations(state: &DensityMatrix) -> PauliExpectations {
    let mut out = PauliExpectations::new();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            out.insert((a, b), state.expectation(&tensor_product(&a.matrix(), &b.matrix())));
        }
    }
    out
}

/// Pauli expectations estimated from projective measurements in the nine
/// local basis pairs, `shots` copies each. Setting `k` draws from `rng.child(k)`.
pub fn sample_pauli_expectations(state: &DensityMatrix, shots: u64, rng: &RngStream) -> Result<PauliExpectations> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let axes = [Pauli::X, Pauli::Y, Pauli::Z];
    let settings: Vec<(Pauli, Pauli)> = axes.iter().flat_map(|&a| axes.iter().map(move |&b| (a, b))).collect();
    let counts = settings
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let m_a = WeakMeasurement::new(1.0, a.direction().expect("axis"))?;
            let m_b = WeakMeasurement::new(1.0, b.direction().expect("axis"))?;
            Ok(sample_counts(state, &m_a, &m_b, shots, &mut rng.child(k as u64)))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = shots as f64;
    let mut out = PauliExpectations::new();
    out.insert((Pauli::I, Pauli::I), 1.0);
    let mut alice = BTreeMap::<Pauli, f64>::new();
    let mut bob = BTreeMap::<Pauli, f64>::new();
    for (&(a, b), c) in settings.iter().zip(&counts) {
        let corr = ((c.plus_plus + c.minus_minus) as f64 - (c.plus_minus + c.minus_plus) as f64) / n;
        out.insert((a, b), corr);
        let ma = ((c.plus_plus + c.plus_minus) as f64 - (c.minus_plus + c.minus_minus) as f64) / n;
        let mb = ((c.plus_plus + c.minus_plus) as f64 - (c.plus_minus + c.minus_minus) as f64) / n;
        *alice.entry(a).or_default() += ma / 3.0;
        *bob.entry(b).or_default() += mb / 3.0;
    }
    for (a, v) in alice {
        out.insert((a, Pauli::I), v);
    }
    for (b, v) in bob {
        out.insert((Pauli::I, b), v);
    }
    Ok(out)
}

/// Linear-inversion estimate; may have small negative eigenvalues at finite shots.
#[derive(Debug, Clone, PartialEq)]
pub struct Tomography {
    pub matrix: ComplexMatrix4,
    pub min_eigenvalue: f64,
}

impl Tomography {
    pub fn fidelity_with(&self, target: &PureState) -> f64 {
        self.matrix.expectation(target.amplitudes()).re
    }

    /// The estimate as a validated density matrix; fails if it is not PSD.
    pub fn density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.matrix)
    }
}

/// `ρ = ¼ Σ_ij E_ij (σ_i ⊗ σ_j)` with `E_II = 1`.
pub fn tomography_linear_inversion(expectations: &PauliExpectations) -> Result<Tomography> {
    let mut matrix = ComplexMatrix4::identity().scale_real(0.25);
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            if (a, b) == (Pauli::I, Pauli::I) {
                continue;
            }
            let e = *expectations.get(&(a, b)).ok_or(Error::MissingExpectation(a.label(), b.label()))?;
            if e.is_nan() || e.abs() > 1.0 + 1e-9 {
                return Err(Error::OutOfRange { name: "Pauli expectation", value: e });
            }
            matrix = matrix + tensor_product(&a.matrix(), &b.matrix()).scale_real(0.25 * e);
        }
    }
    let min_eigenvalue = hermitian_eigensystem(&matrix)?.values[3];
    Ok(Tomography { matrix, min_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex;

    fn phi() -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::phi_plus())
    }

    fn decohered(gamma: f64) -> DensityMatrix {
        let m = PureState::phi_plus().projector().scale_real(1.0 - gamma)
            + ComplexMatrix4::from_real_diagonal([gamma / 2.0, 0.0, 0.0, gamma / 2.0]);
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let target = PureState::phi_plus();
        assert!((fidelity_with_pure(&target, &phi()) - 1.0).abs() < 1e-15);
        let hh = DensityMatrix::from_pure(&PureState::basis(0));
        assert!((fidelity_with_pure(&target, &hh) - 0.5).abs() < 1e-15);
        for gamma in [0.1, 0.5, 0.9] {
            assert!((fidelity_with_pure(&target, &decohered(gamma)) - (1.0 - gamma / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&phi()) - 1.0).abs() < 1e-12);
        assert!((purity(&DensityMatrix::maximally_mixed()) - 0.25).abs() < 1e-15);

        let rho = decohered(0.4);
        let squared = *rho.matrix() * *rho.matrix();
        assert!((purity(&rho) - squared.trace().re).abs() < 1e-15);
        // Eigenvalues 0.8, 0.2 (and 0, 0): 0.64 + 0.04.
        assert!((purity(&rho) - 0.68).abs() < 1e-12);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&phi()) - 1.0).abs() < 1e-9);
        assert!(concurrence(&DensityMatrix::from_pure(&PureState::basis(0))).abs() < 1e-9);

        let rho = decohered(0.3);
        let m = rho.matrix();
        let x_state = 2.0 * (m[(0, 3)].norm() - (m[(1, 1)].re * m[(2, 2)].re).sqrt()).max(0.0);
        assert!((x_state - 0.7).abs() < 1e-12);
        assert!((concurrence(&rho) - x_state).abs() < 1e-9);
        assert!(concurrence(&DensityMatrix::maximally_mixed()).abs() < 1e-9);
    }

    #[test]
    fn eof_examples() {
        assert!((entanglement_of_formation(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(entanglement_of_formation(0.0).unwrap(), 0.0);
        // x = (1 + √0.75)/2, h(x) evaluated independently.
        let x: f64 = (1.0 + 0.75f64.sqrt()) / 2.0;
        let h = -x * x.ln() / 2f64.ln() - (1.0 - x) * (1.0 - x).ln() / 2f64.ln();
        assert!((entanglement_of_formation(0.5).unwrap() - h).abs() < 1e-14);
        assert!((h - 0.3546).abs() < 1e-4);
        assert!(entanglement_of_formation(1.2).is_err());
        let mut previous = -1.0;
        for i in 0..=100 {
            let e = entanglement_of_formation(i as f64 / 100.0).unwrap();
            assert!(e >= previous);
            previous = e;
        }
    }

    #[test]
    fn reversibility_examples() {
        assert_eq!(reversibility(0.0, 0.0), 0.25);
        assert_eq!(reversibility(1.0, 0.3), 0.0);
        assert!((reversibility(0.6, 0.8) - 0.0576).abs() < 1e-15);
    }

    #[test]
    fn averaging_at_zero_strength_is_identity() {
        let f = averaged_quantity(&phi(), &AveragingPlan::witness(), 0.0, 0.0, |r| {
            fidelity_with_pure(&PureState::phi_plus(), r)
        })
        .unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaged_purity_of_pure_input_is_one() {
        for plan in [AveragingPlan::witness(), AveragingPlan::chsh()] {
            for p in [0.2, 0.55, 0.9] {
                let pbar = averaged_quantity(&phi(), &plan, p, p, purity).unwrap();
                assert!((pbar - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projective_branches_are_product_states() {
        // Brute force: every projective branch on Φ+ is a product state.
        let branches = disturbed_branches(&phi(), &AveragingPlan::witness(), 1.0, 1.0).unwrap();
        assert_eq!(branches.len(), 6);
        let total: f64 = branches.iter().map(|b| b.0).sum();
        assert!((total - 3.0).abs() < 1e-12);
        for (_, rho) in &branches {
            assert!(concurrence(rho) < 1e-7);
        }
        let ebar = averaged_quantity(&phi(), &AveragingPlan::witness(), 1.0, 1.0, |r| {
            entanglement_of_formation(concurrence(r)).unwrap()
        })
        .unwrap();
        assert!(ebar.abs() < 1e-9);
    }

    #[test]
    fn pure_state_concurrence_matches_amplitude_formula() {
        let mut rng = RngStream::new(5, 5);
        for _ in 0..100 {
            let amps: [Complex; 4] =
                std::array::from_fn(|_| Complex::new(rng.standard_normal(), rng.standard_normal()));
            let psi = PureState::normalized(amps).unwrap();
            let [a, b, c, d] = *psi.amplitudes();
            let expected = 2.0 * (a * d - b * c).norm();
            assert!((concurrence(&psi.into()) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn tomography_examples() {
        let t = tomography_linear_inversion(&pauli_expectations(&phi())).unwrap();
        assert!(t.matrix.max_abs_diff(phi().matrix()) < 1e-12);

        let mut zeros = PauliExpectations::new();
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                zeros.insert((a, b), 0.0);
            }
        }
        let t = tomography_linear_inversion(&zeros).unwrap();
        assert!(t.matrix.max_abs_diff(DensityMatrix::maximally_mixed().matrix()) < 1e-15);

        zeros.remove(&(Pauli::Y, Pauli::Z));
        assert_eq!(tomography_linear_inversion(&zeros), Err(Error::MissingExpectation('Y', 'Z')));
    }

    #[test]
    fn sampled_tomography_recovers_bell_state() {
        let est = sample_pauli_expectations(&phi(), 10_000, &RngStream::new(1, 0)).unwrap();
        let t = tomography_linear_inversion(&est).unwrap();
        let f = t.fidelity_with(&PureState::phi_plus());
        assert!(f >= 0.99, "{f}");
        assert!(t.matrix.is_hermitian(1e-12));
        assert!((t.matrix.trace() - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sampled_averaging_converges_to_enumeration() {
        let reference = PureState::phi_plus();
        let rho = DensityMatrix::from_pure(&reference);
        for (k, plan) in [AveragingPlan::witness(), AveragingPlan::chsh()].iter().enumerate() {
            let rng = RngStream::new(61, k as u64);
            let trials = 100_000 / plan.len() as u64;
            let eof = |r: &DensityMatrix| entanglement_of_formation(concurrence(r)).unwrap();
            let exact = averaged_quantity(&rho, plan, 0.6, 0.6, eof).unwrap();
            let (mean, se) = sample_averaged_quantity(&rho, plan, 0.6, 0.6, trials, &rng, eof).unwrap();
            assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");

            let fid = |r: &DensityMatrix| fidelity_with_pure(&reference, r);
            let exact = averaged_quantity(&rho, plan, 0.6, 0.6, fid).unwrap();
            let (mean, se) = sample_averaged_quantity(&rho, plan, 0.6, 0.6, trials, &rng, fid).unwrap();
            assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
        }
    }

    #[test]
    fn plan_validation() {
        assert!(AveragingPlan::new(vec![]).is_err());
        assert_eq!(AveragingPlan::witness().len(), 3);
        assert_eq!(AveragingPlan::chsh().len(), 4);
    }
}
