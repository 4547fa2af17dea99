//! Measurement strength set by a half-wave-plate angle, p = |cos 4θ|, and the
//! resulting reversibility.

use entanglecert::measurement::strength_from_waveplate;
use entanglecert::metrics::reversibility;

fn main() {
    println!("{:>8} {:>8} {:>8}", "theta", "p", "R(p,p)");
    for deg in [0.0, 5.0, 10.0, 15.0, 20.0, 22.5] {
        let p = strength_from_waveplate(f64::to_radians(deg));
        println!("{deg:>7.1}° {p:>8.4} {:>8.4}", reversibility(p, p));
    }
}
