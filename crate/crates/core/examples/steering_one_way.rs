//! One-way steering: with unequal strengths, Alice can steer Bob while Bob
//! cannot steer Alice. Only the untrusted side's strength matters.

use entanglecert::certify::{steering, Trust, STEERING_THRESHOLD};
use entanglecert::{DensityMatrix, PureState};

fn main() -> entanglecert::Result<()> {
    let bell = DensityMatrix::from_pure(&PureState::phi_plus());
    println!("threshold 1/sqrt(3) = {STEERING_THRESHOLD:.5}\n");
    println!("{:>5} {:>5} {:>9} {:>9}  verdict", "p_A", "p_B", "S3(A->B)", "S3(B->A)");
    for (pa, pb) in [(0.9, 0.3), (0.7, 0.5), (0.5, 0.9), (0.8, 0.8), (0.4, 0.4)] {
        let ab = steering(&bell, pa, pb, Trust::BobTrusted)?;
        let ba = steering(&bell, pa, pb, Trust::AliceTrusted)?;
        let verdict = match (ab.certified, ba.certified) {
            (true, true) => "two-way",
            (true, false) => "one-way, Alice steers Bob",
            (false, true) => "one-way, Bob steers Alice",
            (false, false) => "none",
        };
        println!("{pa:>5.2} {pb:>5.2} {:>9.4} {:>9.4}  {verdict}", ab.statistic, ba.statistic);
    }
    Ok(())
}
