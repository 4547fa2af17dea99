//! Entanglement witness with weak measurements: the compensated value does not
//! depend on the strengths, so even very gentle measurements certify.

use entanglecert::certify::{certify_exact, certify_sampled, CertificationTest};
use entanglecert::monitor::mixed_state;
use entanglecert::{DensityMatrix, PureState, RngStream};

fn main() -> entanglecert::Result<()> {
    let bell = DensityMatrix::from_pure(&PureState::phi_plus());

    println!("{:>6} {:>12} {:>22}", "p", "W exact", "W sampled (10^4 shots)");
    for p in [0.05, 0.1, 0.3, 0.5, 1.0] {
        let exact = certify_exact(&bell, CertificationTest::Witness, p, p)?;
        let sampled = certify_sampled(&bell, CertificationTest::Witness, p, p, 10_000, &RngStream::new(1, 0))?;
        println!("{p:>6.2} {:>12.6} {:>14.4} ± {:.4}", exact.statistic, sampled.statistic, sampled.standard_error);
    }

    // Decoherence pushes W = (γ − 1)/2 towards zero.
    println!("\n{:>6} {:>10} {:>10}", "gamma", "W", "certified");
    for gamma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = certify_exact(&mixed_state(gamma)?, CertificationTest::Witness, 0.4, 0.4)?;
        println!("{gamma:>6.2} {:>10.4} {:>10}", r.statistic, r.certified);
    }
    Ok(())
}
