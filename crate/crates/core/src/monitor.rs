//! Drifting entanglement source with witness-gated selection.
//!
//! A decoherence degree `γ(t)` drifts as a clamped Ornstein–Uhlenbeck process.
//! Each window certifies its state `ρ_mix(γ)` with the weak-measurement
//! witness, recovers the disturbed pairs by matched reversal, and then runs a
//! projective CHSH test on the recovered state. Windows whose witness falls
//! below the threshold form the selected ensemble.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_exact, certify_sampled, CertificationTest};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix4, DensityMatrix, PureState};
use crate::protocol::{run_trial, RecoveryStatus, ReversalPolicy};
use crate::rng::RngStream;

/// Euler–Maruyama Ornstein–Uhlenbeck process clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuProcess {
    pub mean: f64,
    /// Reversion rate per unit time.
    pub theta: f64,
    /// Volatility per square-root unit time.
    pub sigma: f64,
    pub dt: f64,
    pub value: f64,
}

impl Default for OuProcess {
    fn default() -> Self {
        Self { mean: 0.3, theta: 0.05, sigma: 0.05, dt: 1.0, value: 0.3 }
    }
}

impl OuProcess {
    /// Starts at `mean` with unit step.
    pub fn new(mean: f64, theta: f64, sigma: f64) -> Result<Self> {
        let p = Self { mean, theta, sigma, dt: 1.0, value: mean };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mean) {
            return Err(Error::OutOfRange { name: "ou_mu", value: self.mean });
        }
        if !(0.0..=1.0).contains(&self.value) {
            return Err(Error::OutOfRange { name: "gamma", value: self.value });
        }
        if !(self.theta >= 0.0 && self.sigma >= 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidArgument("OU parameters must be non-negative with dt > 0".into()));
        }
        Ok(())
    }

    /// `γ ← clamp(γ + θ(μ − γ)dt + σ√dt·N(0,1), 0, 1)`
    pub fn step(&mut self, rng: &mut RngStream) -> f64 {
        let noise = rng.standard_normal();
        let next = self.value + self.theta * (self.mean - self.value) * self.dt + self.sigma * self.dt.sqrt() * noise;
        self.value = next.clamp(0.0, 1.0);
        self.value
    }

    pub fn path(&mut self, steps: usize, rng: &mut RngStream) -> Vec<f64> {
        (0..steps).map(|_| self.step(rng)).collect()
    }
}

/// `(1−γ)|Φ+⟩⟨Φ+| + ½γ(|HH⟩⟨HH| + |VV⟩⟨VV|)`
pub fn mixed_state(gamma: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange { name: "gamma", value: gamma });
    }
    let m = PureState::phi_plus().projector().scale_real(1.0 - gamma)
        + ComplexMatrix4::from_real_diagonal([gamma / 2.0, 0.0, 0.0, gamma / 2.0]);
    Ok(DensityMatrix::from_trusted(m))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    /// Witness and Bell values from finite shots.
    #[default]
    Sampled,
    /// Witness and Bell values from exact traces.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub threshold: f64,
    /// Shots per witness setting in each window.
    pub window_shots: u64,
    /// Shots per CHSH setting on the recovered state.
    pub bell_shots: u64,
    pub p_a: f64,
    pub p_b: f64,
    pub mode: GateMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { threshold: -0.4, window_shots: 10_000, bell_shots: 10_000, p_a: 0.7, p_b: 0.7, mode: GateMode::Sampled }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold >= 0.0 {
            return Err(Error::InvalidArgument(format!("witness threshold {} must be negative", self.threshold)));
        }
        for (name, p) in [("p_A", self.p_a), ("p_B", self.p_b)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {p}: monitoring needs 0 < p < 1 (certification and recovery)"
                )));
            }
        }
        if self.mode == GateMode::Sampled && (self.window_shots == 0 || self.bell_shots == 0) {
            return Err(Error::InvalidArgument("shot counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub index: usize,
    pub gamma: f64,
    pub witness: f64,
    pub witness_standard_error: f64,
    pub selected: bool,
    /// Trials until both reversals matched.
    pub recovery_attempts: u64,
    pub chsh: f64,
    pub chsh_standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub windows: Vec<WindowRecord>,
    pub selected_count: usize,
    /// Mean post-recovery CHSH value over selected windows; `None` if none selected.
    pub selected_chsh: Option<f64>,
    pub all_chsh: f64,
}

const MAX_RECOVERY_ATTEMPTS: u64 = 1_000_000;

fn evaluate_window(config: &SelectionConfig, index: usize, gamma: f64, rng: &RngStream) -> Result<WindowRecord> {
    let rho = mixed_state(gamma)?;
    let witness = match config.mode {
        GateMode::Exact => certify_exact(&rho, CertificationTest::Witness, config.p_a, config.p_b)?,
        GateMode::Sampled => certify_sampled(
            &rho,
            CertificationTest::Witness,
            config.p_a,
            config.p_b,
            config.window_shots,
            &rng.child(0),
        )?,
    };

    // Heralded recovery: repeat certify-then-reverse until both sides match.
    let settings = CertificationTest::Witness.settings();
    let directions = settings[index % settings.len()];
    let mut recovery_rng = rng.child(1);
    let mut attempts = 0;
    let recovered = loop {
        attempts += 1;
        let trial =
            run_trial(&rho, config.p_a, config.p_b, directions, ReversalPolicy::AllBranches, &mut recovery_rng)?;
        if trial.status == RecoveryStatus::Matched {
            break trial.final_state.expect("matched trials carry a final state");
        }
        if attempts >= MAX_RECOVERY_ATTEMPTS {
            return Err(Error::InvalidArgument(format!("window {index}: recovery did not succeed")));
        }
    };

    let bell = match config.mode {
        GateMode::Exact => certify_exact(&recovered, CertificationTest::Chsh, 1.0, 1.0)?,
        GateMode::Sampled => {
            certify_sampled(&recovered, CertificationTest::Chsh, 1.0, 1.0, config.bell_shots, &rng.child(2))?
        }
    };

    Ok(WindowRecord {
        index,
        gamma,
        witness: witness.statistic,
        witness_standard_error: witness.standard_error,
        selected: witness.statistic < config.threshold,
        recovery_attempts: attempts,
        chsh: bell.statistic,
        chsh_standard_error: bell.standard_error,
    })
}

/// Evaluates a given `γ` path; window `i` draws from `RngStream::new(seed, 0).child(1 + i)`.
pub fn evaluate_path(config: &SelectionConfig, gammas: &[f64], seed: u64) -> Result<EnsembleReport> {
    config.validate()?;
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("at least one window is required".into()));
    }
    let root = RngStream::new(seed, 0);
    let windows = gammas
        .par_iter()
        .enumerate()
        .map(|(i, &g)| evaluate_window(config, i, g, &root.child(1 + i as u64)))
        .collect::<Result<Vec<_>>>()?;

    let selected: Vec<f64> = windows.iter().filter(|w| w.selected).map(|w| w.chsh).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let all: Vec<f64> = windows.iter().map(|w| w.chsh).collect();
    Ok(EnsembleReport {
        selected_count: selected.len(),
        selected_chsh: (!selected.is_empty()).then(|| mean(&selected)),
        all_chsh: mean(&all),
        windows,
    })
}

/// Generates the drift path (stream `child(0)`) and evaluates every window.
pub fn run_monitoring(config: &SelectionConfig, ou: &OuProcess, windows: usize, seed: u64) -> Result<EnsembleReport> {
    ou.validate()?;
    if windows == 0 {
        return Err(Error::InvalidArgument("at least one window is required".into()));
    }
    let mut process = *ou;
    let gammas = process.path(windows, &mut RngStream::new(seed, 0).child(0));
    evaluate_path(config, &gammas, seed)
}
