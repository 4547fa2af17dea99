//! Information gain against reversibility as the common strength p grows.

use entanglecert::protocol::{linspace, tradeoff_curves};
use entanglecert::{DensityMatrix, PureState};

fn main() -> entanglecert::Result<()> {
    let bell = DensityMatrix::from_pure(&PureState::phi_plus());
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "p", "R", "S", "S3", "E(D=3)", "E(D=4)");
    for r in tradeoff_curves(&linspace(0.0, 1.0, 11), &bell)? {
        println!(
            "{:>5.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.p, r.reversibility, r.chsh, r.steering, r.eof_witness_plan, r.eof_chsh_plan
        );
    }
    Ok(())
}
