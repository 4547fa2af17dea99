//! Entanglement certification with weak measurements and probabilistic
//! recovery of the disturbed state by reversal measurements.
//!
//! Two parties share a two-qubit state. Each applies a tunable-strength weak
//! measurement, the correlations are turned into an entanglement witness, a
//! steering statistic or a CHSH value, and matched-outcome reversal
//! measurements then undo the disturbance with probability
//! `¼(1−p_A²)(1−p_B²)`.
//!
//! ```
//! use entanglecert::{certify_exact, CertificationTest, DensityMatrix, PureState};
//!
//! let bell = DensityMatrix::from_pure(&PureState::phi_plus());
//! let w = certify_exact(&bell, CertificationTest::Witness, 0.3, 0.3).unwrap();
//! assert!(w.certified && (w.statistic + 0.5).abs() < 1e-12);
//! ```

pub mod certify;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod monitor;
pub mod protocol;
pub mod rng;

pub use certify::{certify_exact, certify_sampled, CertificationResult, CertificationTest, Trust};
pub use error::{Error, Result};
pub use linalg::{BlochVector, Complex, ComplexMatrix2, ComplexMatrix4, DensityMatrix, PureState};
pub use measurement::{Outcome, QuantumState, ReversalMeasurement, WeakMeasurement};
pub use metrics::{AveragingPlan, StateMetrics};
pub use monitor::{mixed_state, EnsembleReport, OuProcess, SelectionConfig};
pub use protocol::{run_trial, run_trials, EvaluationMode, ReversalPolicy};
pub use rng::RngStream;
