//! Weakly measure Φ+, recover it, and check the result by sampled Pauli
//! tomography with linear inversion.

use entanglecert::metrics::{sample_pauli_expectations, tomography_linear_inversion};
use entanglecert::protocol::{run_trial, RecoveryStatus, ReversalPolicy};
use entanglecert::{BlochVector, DensityMatrix, PureState, RngStream};

fn main() -> entanglecert::Result<()> {
    let input = DensityMatrix::from_pure(&PureState::phi_plus());
    let mut rng = RngStream::new(4, 0);
    let recovered = loop {
        let t = run_trial(&input, 0.6, 0.6, (BlochVector::X, BlochVector::X), ReversalPolicy::AllBranches, &mut rng)?;
        if t.status == RecoveryStatus::Matched {
            break t.final_state.expect("matched trials carry a state");
        }
    };

    for shots in [1_000, 10_000, 100_000] {
        let expectations = sample_pauli_expectations(&recovered, shots, &RngStream::new(5, shots))?;
        let tomo = tomography_linear_inversion(&expectations)?;
        println!(
            "{shots:>7} shots/setting: fidelity {:.4}, min eigenvalue {:+.4}",
            tomo.fidelity_with(&PureState::phi_plus()),
            tomo.min_eigenvalue
        );
    }
    Ok(())
}
