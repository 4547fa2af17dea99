//! End-to-end trials (certify, then recover) and the parameter sweeps built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    assemble, certify_exact, certify_sampled, chsh, estimate_correlation, steering, CertificationResult,
    CertificationTest, Trust,
};
use crate::error::{Error, Result};
use crate::linalg::{tensor_product, BlochVector, DensityMatrix, PureState};
use crate::measurement::{
    reversal_operator, sample_local_instrument, sample_outcomes, weak_operator, Outcome, OutcomeCounts, QuantumState,
    WeakMeasurement, JOINT_OUTCOMES, MIN_BRANCH_PROBABILITY,
};
use crate::metrics::{averaged_metrics, reversibility, AveragingPlan, StateMetrics};
use crate::rng::RngStream;

/// Which weak-measurement branches receive a reversal measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReversalPolicy {
    /// Reverse every branch.
    #[default]
    #[serde(rename = "all")]
    AllBranches,
    /// Reverse only when both weak outcomes are `+1`.
    #[serde(rename = "plus")]
    PlusOnly,
}

impl ReversalPolicy {
    pub fn attempts(self, l_a: Outcome, l_b: Outcome) -> bool {
        match self {
            ReversalPolicy::AllBranches => true,
            ReversalPolicy::PlusOnly => l_a == Outcome::Plus && l_b == Outcome::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoveryStatus {
    Matched,
    Unmatched,
    NotAttempted,
}

/// One certify-then-recover run.
#[derive(Debug, Clone)]
pub struct TrialRecord<S> {
    pub directions: (BlochVector, BlochVector),
    pub strengths: (f64, f64),
    pub outcomes: (Outcome, Outcome),
    pub disturbed: S,
    pub reversal_outcomes: Option<(Outcome, Outcome)>,
    pub status: RecoveryStatus,
    /// Present iff `status == Matched`.
    pub final_state: Option<S>,
}

/// Weak measurement on both sides followed by matched reversal (`q = p`, `s = r`).
pub fn run_trial<S: QuantumState>(
    input: &S,
    p_a: f64,
    p_b: f64,
    directions: (BlochVector, BlochVector),
    policy: ReversalPolicy,
    rng: &mut RngStream,
) -> Result<TrialRecord<S>> {
    let m_a = WeakMeasurement::new(p_a, directions.0)?;
    let m_b = WeakMeasurement::new(p_b, directions.1)?;
    let (l_a, l_b, disturbed) = sample_outcomes(input, &m_a, &m_b, rng)?;

    let mut record = TrialRecord {
        directions,
        strengths: (p_a, p_b),
        outcomes: (l_a, l_b),
        disturbed,
        reversal_outcomes: None,
        status: RecoveryStatus::NotAttempted,
        final_state: None,
    };
    if !policy.attempts(l_a, l_b) {
        return Ok(record);
    }

    let rev_a = m_a.matching_reversal();
    let rev_b = m_b.matching_reversal();
    let ops_a = Outcome::BOTH.map(|l| reversal_operator(&rev_a, l));
    let ops_b = Outcome::BOTH.map(|l| reversal_operator(&rev_b, l));
    let (k_a, k_b, reversed) = sample_local_instrument(&record.disturbed, &ops_a, &ops_b, rng)?;
    record.reversal_outcomes = Some((k_a, k_b));
    if (k_a, k_b) == (l_a, l_b) {
        record.status = RecoveryStatus::Matched;
        record.final_state = Some(reversed);
    } else {
        record.status = RecoveryStatus::Unmatched;
    }
    Ok(record)
}

/// Runs `count` independent trials; trial `i` draws from `rng.child(i)`.
pub fn run_trials<S: QuantumState>(
    input: &S,
    p_a: f64,
    p_b: f64,
    directions: (BlochVector, BlochVector),
    policy: ReversalPolicy,
    rng: &RngStream,
    count: u64,
) -> Result<Vec<TrialRecord<S>>> {
    (0..count).into_par_iter().map(|i| run_trial(input, p_a, p_b, directions, policy, &mut rng.child(i))).collect()
}

/// Matched-outcome tallies over a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSummary {
    pub trials: u64,
    pub attempted: u64,
    pub matched: u64,
}

impl TrialSummary {
    pub fn of<S>(records: &[TrialRecord<S>]) -> Self {
        let attempted = records.iter().filter(|r| r.status != RecoveryStatus::NotAttempted).count() as u64;
        let matched = records.iter().filter(|r| r.status == RecoveryStatus::Matched).count() as u64;
        Self { trials: records.len() as u64, attempted, matched }
    }

    pub fn matched_fraction(&self) -> f64 {
        self.matched as f64 / self.trials as f64
    }

    /// Binomial standard error of `matched_fraction` for an expected success probability.
    pub fn standard_error(&self, expected: f64) -> f64 {
        (expected * (1.0 - expected) / self.trials as f64).sqrt()
    }
}

/// Certification and recovery drawn from one shared record of trials.
#[derive(Debug, Clone)]
pub struct InlineRun<S> {
    pub result: CertificationResult,
    pub summary: TrialSummary,
    /// Final states of the matched trials, in setting order.
    pub recovered: Vec<S>,
}

/// Runs `trials_per_setting` trials for each setting of `test`. The weak
/// outcomes estimate the setting's correlation and the same trials are then
/// reversed, as in an experiment that records outcomes before recovery.
/// Setting `k` draws from `rng.child(k)`.
pub fn certify_and_recover<S: QuantumState>(
    input: &S,
    test: CertificationTest,
    p_a: f64,
    p_b: f64,
    trials_per_setting: u64,
    policy: ReversalPolicy,
    rng: &RngStream,
) -> Result<InlineRun<S>> {
    if trials_per_setting == 0 {
        return Err(Error::InvalidArgument("trials_per_setting must be positive".into()));
    }
    let mut correlations = Vec::new();
    let mut summary = TrialSummary { trials: 0, attempted: 0, matched: 0 };
    let mut recovered = Vec::new();
    for (k, pair) in test.settings().into_iter().enumerate() {
        let records = run_trials(input, p_a, p_b, pair, policy, &rng.child(k as u64), trials_per_setting)?;
        let mut counts = OutcomeCounts::default();
        for r in &records {
            counts.record(r.outcomes.0, r.outcomes.1);
        }
        correlations.push(estimate_correlation(&counts)?);
        let s = TrialSummary::of(&records);
        summary.trials += s.trials;
        summary.attempted += s.attempted;
        summary.matched += s.matched;
        recovered.extend(records.into_iter().filter_map(|r| r.final_state));
    }
    Ok(InlineRun { result: assemble(test, p_a, p_b, correlations)?, summary, recovered })
}

/// Success probability of recovery under `policy`, `Σ_branches ¼²(1−p_A²)(1−p_B²)`.
pub fn recovery_probability(p_a: f64, p_b: f64, policy: ReversalPolicy) -> f64 {
    match policy {
        ReversalPolicy::AllBranches => reversibility(p_a, p_b),
        ReversalPolicy::PlusOnly => reversibility(p_a, p_b) / 4.0,
    }
}

/// How sweep cells are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvaluationMode {
    Exact,
    /// `shots` per setting (certification) or trials per direction pair (recovery).
    Sampled {
        shots: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub tests: Vec<CertificationTest>,
    pub mode: EvaluationMode,
}

pub const DEFAULT_GRID_POINTS: usize = 21;

/// `n` evenly spaced strengths over `[start, end]`.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n).map(|i| if i == n - 1 { end } else { start + (end - start) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

impl SweepGrid {
    pub fn square(points: Vec<f64>, tests: Vec<CertificationTest>, mode: EvaluationMode) -> Result<Self> {
        let grid = Self { p_a: points.clone(), p_b: points, tests, mode };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_a.is_empty() || self.p_b.is_empty() || self.tests.is_empty() {
            return Err(Error::InvalidArgument("sweep grid is empty".into()));
        }
        for &p in self.p_a.iter().chain(&self.p_b) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange { name: "grid strength", value: p });
            }
        }
        if let EvaluationMode::Sampled { shots: 0, .. } = self.mode {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        Ok(())
    }
}

fn undefined_cell(test: CertificationTest, p_a: f64, p_b: f64) -> CertificationResult {
    CertificationResult {
        test,
        statistic: f64::NAN,
        standard_error: f64::NAN,
        threshold: test.threshold(),
        certified: false,
        p_a,
        p_b,
        correlations: vec![],
    }
}

/// One result per `(test, p_A, p_B)` cell, ordered test-major, then `p_A`, then `p_B`.
///
/// Cells where the strength compensation is undefined (a trusted side at zero
/// strength) carry a NaN statistic and are not certified.
pub fn sweep_certification(grid: &SweepGrid, state: &DensityMatrix) -> Result<Vec<CertificationResult>> {
    grid.validate()?;
    let cells: Vec<(CertificationTest, f64, f64)> = grid
        .tests
        .iter()
        .flat_map(|&t| grid.p_a.iter().flat_map(move |&a| grid.p_b.iter().map(move |&b| (t, a, b))))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(test, p_a, p_b))| {
            let result = match grid.mode {
                EvaluationMode::Exact => certify_exact(state, test, p_a, p_b),
                EvaluationMode::Sampled { shots, seed } => {
                    certify_sampled(state, test, p_a, p_b, shots, &RngStream::new(seed, 0).child(i as u64))
                }
            };
            match result {
                Err(Error::ZeroStrength(_)) => Ok(undefined_cell(test, p_a, p_b)),
                other => other,
            }
        })
        .collect()
}

/// Bisection for the strength where `test` starts certifying along the
/// diagonal `p_A = p_B = p`; `None` if the certification status does not
/// change over `[lo, hi]`.
pub fn diagonal_boundary(
    test: CertificationTest,
    state: &DensityMatrix,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let certified = |p: f64| -> Result<bool> { Ok(certify_exact(state, test, p, p)?.certified) };
    let (mut lo, mut hi) = (lo, hi);
    let at_lo = certified(lo)?;
    if at_lo == certified(hi)? {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if certified(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Averaged state properties before and after reversal at one strength `p = p_A = p_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub p: f64,
    pub before: StateMetrics,
    /// `None` when recovery never succeeds (e.g. `p = 1`).
    pub after: Option<StateMetrics>,
    pub success_probability: f64,
}

/// Exact post-recovery averages over matched branches under `policy`.
///
/// Each matched branch is weighted by its probability; the returned metrics
/// are conditioned on success and the second value is the success probability
/// averaged over the plan's direction pairs.
pub fn recovered_metrics_exact(
    state: &DensityMatrix,
    plan: &AveragingPlan,
    p_a: f64,
    p_b: f64,
    policy: ReversalPolicy,
    reference: &PureState,
) -> Result<(Option<StateMetrics>, f64)> {
    let mut weighted = Vec::new();
    for &(r_a, r_b) in plan.pairs() {
        let m_a = WeakMeasurement::new(p_a, r_a)?;
        let m_b = WeakMeasurement::new(p_b, r_b)?;
        let (rev_a, rev_b) = (m_a.matching_reversal(), m_b.matching_reversal());
        for (l_a, l_b) in JOINT_OUTCOMES {
            if !policy.attempts(l_a, l_b) {
                continue;
            }
            let k_a = reversal_operator(&rev_a, l_a) * weak_operator(&m_a, l_a);
            let k_b = reversal_operator(&rev_b, l_b) * weak_operator(&m_b, l_b);
            let unnormalized = tensor_product(&k_a, &k_b).sandwich(state.matrix());
            let probability = unnormalized.trace().re;
            if probability < MIN_BRANCH_PROBABILITY {
                continue;
            }
            let mut m = unnormalized.scale_real(1.0 / probability);
            m = (m + m.adjoint()).scale_real(0.5);
            weighted.push((probability, DensityMatrix::from_trusted(m)));
        }
    }
    let d = plan.len() as f64;
    let total: f64 = weighted.iter().map(|(p, _)| p).sum();
    if total < MIN_BRANCH_PROBABILITY {
        return Ok((None, 0.0));
    }
    let mut acc = StateMetrics::zero();
    for (p, rho) in &weighted {
        let m = StateMetrics::evaluate(reference, rho);
        let w = p / total;
        acc.fidelity += w * m.fidelity;
        acc.purity += w * m.purity;
        acc.concurrence += w * m.concurrence;
        acc.eof += w * m.eof;
    }
    Ok((Some(acc), total / d))
}

/// Before/after recovery table for `p_A = p_B = p` over `p_values`.
///
/// "Before" columns always use exact enumeration. "After" columns use exact
/// enumeration of matched branches in [`EvaluationMode::Exact`], or the
/// matched trials of `shots` runs per direction pair in sampled mode.
pub fn sweep_recovery(
    p_values: &[f64],
    state: &DensityMatrix,
    reference: &PureState,
    plan: &AveragingPlan,
    mode: EvaluationMode,
    policy: ReversalPolicy,
) -> Result<Vec<RecoveryRow>> {
    p_values
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let before = averaged_metrics(state, plan, p, p, reference)?;
            let (after, success_probability) = match mode {
                EvaluationMode::Exact => recovered_metrics_exact(state, plan, p, p, policy, reference)?,
                EvaluationMode::Sampled { shots, seed } => {
                    let base = RngStream::new(seed, 1).child(i as u64);
                    let mut finals = Vec::new();
                    let mut trials = 0u64;
                    for (k, &pair) in plan.pairs().iter().enumerate() {
                        let records = run_trials(state, p, p, pair, policy, &base.child(k as u64), shots)?;
                        trials += records.len() as u64;
                        finals.extend(records.into_iter().filter_map(|r| r.final_state));
                    }
                    let metrics: Vec<StateMetrics> =
                        finals.par_iter().map(|rho| StateMetrics::evaluate(reference, rho)).collect();
                    (StateMetrics::mean_of(&metrics), finals.len() as f64 / trials as f64)
                }
            };
            Ok(RecoveryRow { p, before, after, success_probability })
        })
        .collect()
}

/// One row of the strength trade-off table (`p = p_A = p_B`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub p: f64,
    pub reversibility: f64,
    pub chsh: f64,
    /// Alice steering Bob; taken as its `p → 0` limit of 0 at `p = 0`.
    pub steering: f64,
    pub eof_witness_plan: f64,
    pub eof_chsh_plan: f64,
}

pub fn tradeoff_curves(p_values: &[f64], state: &DensityMatrix) -> Result<Vec<TradeoffRow>> {
    let reference = PureState::phi_plus();
    p_values
        .par_iter()
        .map(|&p| {
            let steering_value = if p == 0.0 { 0.0 } else { steering(state, p, p, Trust::BobTrusted)?.statistic };
            Ok(TradeoffRow {
                p,
                reversibility: reversibility(p, p),
                chsh: chsh(state, p, p)?.statistic,
                steering: steering_value,
                eof_witness_plan: averaged_metrics(state, &AveragingPlan::witness(), p, p, &reference)?.eof,
                eof_chsh_plan: averaged_metrics(state, &AveragingPlan::chsh(), p, p, &reference)?.eof,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn phi() -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::phi_plus())
    }

    #[test]
    fn inline_run_certifies_and_recovers_from_the_same_trials() {
        let input = PureState::phi_plus();
        let (p, n) = (0.5, 20_000);
        let run = certify_and_recover(
            &input,
            CertificationTest::Witness,
            p,
            p,
            n,
            ReversalPolicy::AllBranches,
            &RngStream::new(8, 0),
        )
        .unwrap();
        assert_eq!(run.summary.trials, 3 * n);
        assert!((run.result.statistic + 0.5).abs() < 4.0 * run.result.standard_error);
        assert!(run.result.certified);
        let expected = reversibility(p, p);
        assert!((run.summary.matched_fraction() - expected).abs() < 4.0 * run.summary.standard_error(expected));
        assert_eq!(run.recovered.len() as u64, run.summary.matched);
        assert!(run.recovered.iter().all(|s| (s.overlap(&input) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_strength_trials_always_recover_the_input() {
        let psi = PureState::phi_plus();
        let rng = RngStream::new(1, 0);
        let records =
            run_trials(&psi, 0.0, 0.0, (BlochVector::Z, BlochVector::X), ReversalPolicy::AllBranches, &rng, 4000)
                .unwrap();
        for r in records.iter().filter(|r| r.status == RecoveryStatus::Matched) {
            assert!((r.final_state.unwrap().overlap(&psi) - 1.0).abs() < 1e-12);
        }
        let summary = TrialSummary::of(&records);
        let se = summary.standard_error(0.25);
        assert!((summary.matched_fraction() - 0.25).abs() < 4.0 * se);
    }

    #[test]
    fn projective_trials_never_match() {
        let psi = PureState::phi_plus();
        let rng = RngStream::new(2, 0);
        let records =
            run_trials(&psi, 1.0, 1.0, (BlochVector::Z, BlochVector::Z), ReversalPolicy::AllBranches, &rng, 2000)
                .unwrap();
        assert_eq!(TrialSummary::of(&records).matched, 0);
    }

    #[test]
    fn matched_frequency_tracks_reversibility() {
        let psi = PureState::phi_plus();
        let rng = RngStream::new(3, 0);
        let n = 100_000;
        let records =
            run_trials(&psi, 0.6, 0.8, (BlochVector::X, BlochVector::Y), ReversalPolicy::AllBranches, &rng, n).unwrap();
        let freq = TrialSummary::of(&records).matched_fraction();
        assert!((freq - 0.0576).abs() < 0.003, "{freq}");
    }

    #[test]
    fn plus_only_policy_reverses_one_branch() {
        let psi = PureState::phi_plus();
        let rng = RngStream::new(4, 0);
        let n = 100_000;
        let records =
            run_trials(&psi, 0.5, 0.5, (BlochVector::Z, BlochVector::Z), ReversalPolicy::PlusOnly, &rng, n).unwrap();
        for r in &records {
            if r.status != RecoveryStatus::NotAttempted {
                assert_eq!(r.outcomes, (Outcome::Plus, Outcome::Plus));
            }
        }
        let summary = TrialSummary::of(&records);
        let expected = recovery_probability(0.5, 0.5, ReversalPolicy::PlusOnly);
        assert!((expected - 0.5625 / 16.0).abs() < 1e-15);
        assert!((summary.matched_fraction() - expected).abs() < 4.0 * summary.standard_error(expected));
    }

    #[test]
    fn witness_sweep_certifies_every_nonzero_cell() {
        let grid =
            SweepGrid::square(linspace(0.0, 1.0, 11), vec![CertificationTest::Witness], EvaluationMode::Exact).unwrap();
        let table = sweep_certification(&grid, &phi()).unwrap();
        assert_eq!(table.len(), 121);
        for cell in table {
            if cell.p_a > 0.0 && cell.p_b > 0.0 {
                assert!(cell.certified);
                assert!((cell.statistic + 0.5).abs() < 1e-12);
            } else {
                assert!(cell.statistic.is_nan() && !cell.certified);
            }
        }
    }

    #[test]
    fn steering_row_flips_at_inverse_root_three() {
        let grid = SweepGrid {
            p_a: linspace(0.0, 1.0, 21),
            p_b: vec![0.9],
            tests: vec![CertificationTest::SteeringAtoB],
            mode: EvaluationMode::Exact,
        };
        for cell in sweep_certification(&grid, &phi()).unwrap() {
            assert_eq!(cell.certified, cell.p_a > 1.0 / 3f64.sqrt(), "p_A = {}", cell.p_a);
        }
    }

    #[test]
    fn chsh_diagonal_boundary() {
        let expected = 2f64.powf(-0.25);
        assert!((expected - 0.8409).abs() < 1e-4);
        let b = diagonal_boundary(CertificationTest::Chsh, &phi(), 0.0, 1.0, 1e-12).unwrap().unwrap();
        assert!((b - expected).abs() < 1e-10);
        let b = diagonal_boundary(CertificationTest::SteeringAtoB, &phi(), 0.05, 1.0, 1e-12).unwrap().unwrap();
        assert!((b - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        assert_eq!(diagonal_boundary(CertificationTest::Witness, &phi(), 0.05, 1.0, 1e-6).unwrap(), None);
    }

    #[test]
    fn recovery_sweep_exact() {
        let reference = PureState::phi_plus();
        let rows = sweep_recovery(
            &[0.0, 0.5, 1.0],
            &phi(),
            &reference,
            &AveragingPlan::witness(),
            EvaluationMode::Exact,
            ReversalPolicy::AllBranches,
        )
        .unwrap();
        let zero = rows[0];
        assert!((zero.before.fidelity - 1.0).abs() < 1e-12);
        let after = zero.after.unwrap();
        assert!((after.fidelity - 1.0).abs() < 1e-12 && (after.eof - 1.0).abs() < 1e-9);
        assert!((zero.success_probability - 0.25).abs() < 1e-12);

        let mid = rows[1];
        assert!(mid.before.fidelity < 1.0);
        assert!((mid.after.unwrap().fidelity - 1.0).abs() < 1e-10);
        assert!((mid.success_probability - reversibility(0.5, 0.5)).abs() < 1e-12);

        let full = rows[2];
        assert!(full.before.eof.abs() < 1e-9);
        assert!(full.after.is_none());
        assert_eq!(full.success_probability, 0.0);
    }

    #[test]
    fn recovery_sweep_sampled_after_is_ideal() {
        let reference = PureState::phi_plus();
        let rows = sweep_recovery(
            &[0.3, 0.7],
            &phi(),
            &reference,
            &AveragingPlan::chsh(),
            EvaluationMode::Sampled { shots: 2000, seed: 9 },
            ReversalPolicy::PlusOnly,
        )
        .unwrap();
        for row in rows {
            let after = row.after.unwrap();
            assert!((after.fidelity - 1.0).abs() < 1e-10);
            assert!((after.purity - 1.0).abs() < 1e-10);
            assert!((after.eof - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn tradeoff_endpoints_and_monotonicity() {
        let ps = linspace(0.0, 1.0, 21);
        let rows = tradeoff_curves(&ps, &phi()).unwrap();
        let first = rows[0];
        assert_eq!((first.reversibility, first.steering), (0.25, 0.0));
        assert!(first.chsh.abs() < 1e-15);
        let last = rows[20];
        assert_eq!(last.reversibility, 0.0);
        assert!((last.chsh - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((last.steering - 1.0).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].reversibility < w[0].reversibility);
            assert!(w[1].chsh > w[0].chsh);
        }
    }

    #[test]
    fn matched_trials_on_mixed_input_return_the_input() {
        let rho = DensityMatrix::new(
            PureState::phi_plus().projector().scale_real(0.6)
                + crate::linalg::ComplexMatrix4::from_real_diagonal([0.2, 0.0, 0.0, 0.2]),
        )
        .unwrap();
        let rng = RngStream::new(12, 0);
        let records = run_trials(
            &rho,
            0.7,
            0.4,
            (BlochVector::Y, BlochVector::Z_PLUS_X),
            ReversalPolicy::AllBranches,
            &rng,
            3000,
        )
        .unwrap();
        let mut matched = 0;
        for r in records.iter().filter_map(|r| r.final_state) {
            matched += 1;
            assert!(r.matrix().max_abs_diff(rho.matrix()) < 1e-10);
        }
        assert!(matched > 0);
    }
}
