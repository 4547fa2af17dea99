//! Entanglement certification statistics under weak measurements.
//!
//! Each test is assembled from a short list of correlations
//! `⟨μ_A μ_B⟩` for fixed direction pairs. The correlations come either from
//! an exact trace or from sampled outcome counts; both feed the same
//! assembly routine ([`assemble`]), so the two modes can be compared
//! directly.
//!
//! | test | trusted devices | statistic | certified when |
//! |------|-----------------|-----------|----------------|
//! | witness | both | `¼ − (1/4p_Ap_B) Σ w_r ⟨μ_A μ_B⟩` | `W < 0` |
//! | steering A→B | Bob | `(1/3p_B) Σ w_r ⟨μ_A μ_B⟩` | `S₃ > 1/√3` |
//! | steering B→A | Alice | `(1/3p_A) Σ w_r ⟨μ_A μ_B⟩` | `S₃ > 1/√3` |
//! | CHSH | none | `|⟨α₁β₁⟩ + ⟨α₁β₂⟩ + ⟨α₂β₁⟩ − ⟨α₂β₂⟩|` | `S > 2` |
//!
//! with weights `w_x = −w_y = w_z = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tensor_product, BlochVector, DensityMatrix};
use crate::measurement::{
    generalized_observable, outcome_distribution, sample_counts, OutcomeCounts, WeakMeasurement, JOINT_OUTCOMES,
};
use crate::rng::RngStream;

pub const WITNESS_THRESHOLD: f64 = 0.0;
/// `1/√3`
pub const STEERING_THRESHOLD: f64 = 0.577_350_269_189_625_8;
pub const CHSH_THRESHOLD: f64 = 2.0;

/// A statistic must clear its threshold by more than this to certify, so
/// rounding noise on a boundary state (a separable mixture has W ≈ −1e-17)
/// never counts as a violation.
pub const DECISION_MARGIN: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn direction(self) -> BlochVector {
        match self {
            Axis::X => BlochVector::X,
            Axis::Y => BlochVector::Y,
            Axis::Z => BlochVector::Z,
        }
    }

    /// Witness weight `w_r`.
    pub fn weight(self) -> f64 {
        match self {
            Axis::Y => -1.0,
            Axis::X | Axis::Z => 1.0,
        }
    }

    fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificationTest {
    Witness,
    /// Alice steers Bob's state; Bob's device is trusted.
    SteeringAtoB,
    /// Bob steers Alice's state; Alice's device is trusted.
    SteeringBtoA,
    Chsh,
}

impl CertificationTest {
    pub const ALL: [CertificationTest; 4] = [Self::Witness, Self::SteeringAtoB, Self::SteeringBtoA, Self::Chsh];

    pub fn threshold(self) -> f64 {
        match self {
            Self::Witness => WITNESS_THRESHOLD,
            Self::SteeringAtoB | Self::SteeringBtoA => STEERING_THRESHOLD,
            Self::Chsh => CHSH_THRESHOLD,
        }
    }

    /// Strict comparison against the threshold, beyond [`DECISION_MARGIN`];
    /// equality does not certify.
    pub fn passes(self, statistic: f64) -> bool {
        match self {
            Self::Witness => statistic < WITNESS_THRESHOLD - DECISION_MARGIN,
            _ => statistic > self.threshold() + DECISION_MARGIN,
        }
    }

    /// Direction pairs `(r_A, r_B)` measured by this test.
    pub fn settings(self) -> Vec<(BlochVector, BlochVector)> {
        match self {
            Self::Chsh => chsh_settings().iter().map(|&(a, b, _)| (a, b)).collect(),
            _ => Axis::ALL.iter().map(|a| (a.direction(), a.direction())).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Witness => "witness",
            Self::SteeringAtoB => "steering-a-to-b",
            Self::SteeringBtoA => "steering-b-to-a",
            Self::Chsh => "chsh",
        }
    }
}

impl fmt::Display for CertificationTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CertificationTest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "witness" | "w" => Ok(Self::Witness),
            "steering" | "steering-a-to-b" | "steering-ab" => Ok(Self::SteeringAtoB),
            "steering-b-to-a" | "steering-ba" => Ok(Self::SteeringBtoA),
            "chsh" | "bell" => Ok(Self::Chsh),
            other => Err(Error::InvalidArgument(format!("unknown certification test '{other}'"))),
        }
    }
}

/// Which party's device is trusted in a steering test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trust {
    BobTrusted,
    AliceTrusted,
}

impl Trust {
    pub fn test(self) -> CertificationTest {
        match self {
            Trust::BobTrusted => CertificationTest::SteeringAtoB,
            Trust::AliceTrusted => CertificationTest::SteeringBtoA,
        }
    }
}

/// CHSH settings `(α, β, sign)`: α ∈ {ẑ, x̂}, β ∈ {(ẑ+x̂)/√2, (ẑ−x̂)/√2}.
pub fn chsh_settings() -> [(BlochVector, BlochVector, f64); 4] {
    [
        (BlochVector::Z, BlochVector::Z_PLUS_X, 1.0),
        (BlochVector::Z, BlochVector::Z_MINUS_X, 1.0),
        (BlochVector::X, BlochVector::Z_PLUS_X, 1.0),
        (BlochVector::X, BlochVector::Z_MINUS_X, -1.0),
    ]
}

/// An outcome correlation `⟨μ_A μ_B⟩`; `shots == 0` marks an exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub shots: u64,
    pub standard_error: f64,
}

impl CorrelationEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value, shots: 0, standard_error: 0.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationResult {
    pub test: CertificationTest,
    pub statistic: f64,
    pub standard_error: f64,
    pub threshold: f64,
    pub certified: bool,
    pub p_a: f64,
    pub p_b: f64,
    /// One entry per setting, in [`CertificationTest::settings`] order.
    pub correlations: Vec<CorrelationEstimate>,
}

/// `trace(ρ (μ_A ⊗ μ_B))`.
pub fn correlation(state: &DensityMatrix, m_a: &WeakMeasurement, m_b: &WeakMeasurement) -> f64 {
    state.expectation(&tensor_product(&generalized_observable(m_a), &generalized_observable(m_b)))
}

/// `Σ l_A l_B P(l_A, l_B)`, the outcome-probability route to [`correlation`].
pub fn correlation_from_probabilities(state: &DensityMatrix, m_a: &WeakMeasurement, m_b: &WeakMeasurement) -> f64 {
    JOINT_OUTCOMES.iter().zip(outcome_distribution(state, m_a, m_b)).map(|(&(a, b), p)| a.value() * b.value() * p).sum()
}

/// Projective witness from Pauli correlations `⟨σ_r σ_r⟩` keyed by axis.
pub fn witness_from_pauli(correlations: &BTreeMap<Axis, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for axis in Axis::ALL {
        let c = correlations.get(&axis).ok_or(Error::MissingDirection(axis.label()))?;
        sum += axis.weight() * c;
    }
    Ok(0.25 - 0.25 * sum)
}

fn measurement_pair(
    p_a: f64,
    p_b: f64,
    (r_a, r_b): (BlochVector, BlochVector),
) -> Result<(WeakMeasurement, WeakMeasurement)> {
    Ok((WeakMeasurement::new(p_a, r_a)?, WeakMeasurement::new(p_b, r_b)?))
}

fn check_strengths(test: CertificationTest, p_a: f64, p_b: f64) -> Result<()> {
    for (name, p) in [("p_A", p_a), ("p_B", p_b)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange { name, value: p });
        }
    }
    match test {
        CertificationTest::Witness if p_a * p_b == 0.0 => Err(Error::ZeroStrength("p_A·p_B")),
        CertificationTest::SteeringAtoB if p_b == 0.0 => Err(Error::ZeroStrength("p_B")),
        CertificationTest::SteeringBtoA if p_a == 0.0 => Err(Error::ZeroStrength("p_A")),
        _ => Ok(()),
    }
}

fn quadrature(errors: impl Iterator<Item = f64>) -> f64 {
    errors.map(|e| e * e).sum::<f64>().sqrt()
}

/// Builds a test statistic from per-setting correlations (exact or sampled).
pub fn assemble(
    test: CertificationTest,
    p_a: f64,
    p_b: f64,
    correlations: Vec<CorrelationEstimate>,
) -> Result<CertificationResult> {
    check_strengths(test, p_a, p_b)?;
    let expected = test.settings().len();
    if correlations.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "{test} needs {expected} correlations, got {}",
            correlations.len()
        )));
    }
    let se = quadrature(correlations.iter().map(|c| c.standard_error));
    let (statistic, standard_error) = match test {
        CertificationTest::Chsh => {
            let sum: f64 = chsh_settings().iter().zip(&correlations).map(|(s, c)| s.2 * c.value).sum();
            (sum.abs(), se)
        }
        _ => {
            let weighted: f64 = Axis::ALL.iter().zip(&correlations).map(|(a, c)| a.weight() * c.value).sum();
            match test {
                CertificationTest::Witness => {
                    let k = 1.0 / (4.0 * p_a * p_b);
                    (0.25 - k * weighted, k * se)
                }
                CertificationTest::SteeringAtoB => (weighted / (3.0 * p_b), se / (3.0 * p_b)),
                _ => (weighted / (3.0 * p_a), se / (3.0 * p_a)),
            }
        }
    };
    Ok(CertificationResult {
        test,
        statistic,
        standard_error,
        threshold: test.threshold(),
        certified: test.passes(statistic),
        p_a,
        p_b,
        correlations,
    })
}

/// Exact-mode evaluation of any test.
pub fn certify_exact(
    state: &DensityMatrix,
    test: CertificationTest,
    p_a: f64,
    p_b: f64,
) -> Result<CertificationResult> {
    check_strengths(test, p_a, p_b)?;
    let correlations = test
        .settings()
        .into_iter()
        .map(|pair| {
            let (m_a, m_b) = measurement_pair(p_a, p_b, pair)?;
            Ok(CorrelationEstimate::exact(correlation(state, &m_a, &m_b)))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(test, p_a, p_b, correlations)
}

pub fn witness_weak(state: &DensityMatrix, p_a: f64, p_b: f64) -> Result<CertificationResult> {
    certify_exact(state, CertificationTest::Witness, p_a, p_b)
}

pub fn steering(state: &DensityMatrix, p_a: f64, p_b: f64, trust: Trust) -> Result<CertificationResult> {
    certify_exact(state, trust.test(), p_a, p_b)
}

pub fn chsh(state: &DensityMatrix, p_a: f64, p_b: f64) -> Result<CertificationResult> {
    certify_exact(state, CertificationTest::Chsh, p_a, p_b)
}

/// Finite-shot estimate of `⟨μ_A μ_B⟩` with its binomial standard error.
pub fn estimate_correlation(counts: &OutcomeCounts) -> Result<CorrelationEstimate> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::EmptyCounts);
    }
    let agree = (counts.plus_plus + counts.minus_minus) as f64;
    let disagree = (counts.plus_minus + counts.minus_plus) as f64;
    let value = (agree - disagree) / n as f64;
    let standard_error = ((1.0 - value * value).max(0.0) / n as f64).sqrt();
    Ok(CorrelationEstimate { value, shots: n, standard_error })
}

/// Simulates `shots_per_setting` runs of each setting the test needs and
/// assembles the statistic from the estimated correlations.
///
/// Setting `k` draws from `rng.child(k)`.
pub fn certify_sampled(
    state: &DensityMatrix,
    test: CertificationTest,
    p_a: f64,
    p_b: f64,
    shots_per_setting: u64,
    rng: &RngStream,
) -> Result<CertificationResult> {
    if shots_per_setting == 0 {
        return Err(Error::InvalidArgument("shots_per_setting must be positive".into()));
    }
    check_strengths(test, p_a, p_b)?;
    let correlations = test
        .settings()
        .into_par_iter()
        .enumerate()
        .map(|(k, pair)| {
            let (m_a, m_b) = measurement_pair(p_a, p_b, pair)?;
            let mut stream = rng.child(k as u64);
            estimate_correlation(&sample_counts(state, &m_a, &m_b, shots_per_setting, &mut stream))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(test, p_a, p_b, correlations)
}
