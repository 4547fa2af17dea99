//! CHSH with weak measurements has no compensation: S = 2√2·p_A·p_B on Φ+,
//! so nonlocality needs p_A·p_B > 1/√2.

use entanglecert::certify::{chsh, CertificationTest};
use entanglecert::protocol::diagonal_boundary;
use entanglecert::{DensityMatrix, PureState};

fn main() -> entanglecert::Result<()> {
    let bell = DensityMatrix::from_pure(&PureState::phi_plus());
    for p in [0.6, 0.8, 0.85, 0.9, 1.0] {
        let r = chsh(&bell, p, p)?;
        println!("p_A = p_B = {p:.2}: S = {:.4} {}", r.statistic, if r.certified { "(violates)" } else { "" });
    }
    let p = diagonal_boundary(CertificationTest::Chsh, &bell, 0.0, 1.0, 1e-12)?.expect("boundary inside [0, 1]");
    println!("\ndiagonal boundary p = {p:.10} (2^(-1/4) = {:.10})", 2f64.powf(-0.25));
    Ok(())
}
