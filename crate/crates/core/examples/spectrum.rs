//! Point spectrum of the reference's class by both methods.
//!
//!     cargo run --release --example spectrum [-- GAMMA]

use euler_line::lattice::default_pair;
use euler_line::spectral::{find_point_spectrum_cf, truncated_point_spectrum, LinearSubsystem, SearchBox};

fn main() {
    let gamma: f64 = std::env::args().nth(1).map_or(2.0, |s| s.parse().expect("number"));
    let (khat, p) = default_pair();
    let sys = LinearSubsystem::new(khat, p, gamma).unwrap();
    println!("continuous spectrum: [−{0}i, {0}i]", sys.segment_halfwidth());

    let cf = find_point_spectrum_cf(&sys, SearchBox::square(gamma), 200).unwrap();
    let matrix = truncated_point_spectrum(&sys, 100, 0.05 * gamma).unwrap();
    for (name, report) in [("continued fraction", &cf), ("matrix N=100", &matrix)] {
        println!("{name}:");
        for e in &report.eigenvalues {
            println!("  {:+.15} {:+.15}i  ({})", e.value.re, e.value.im, e.kind);
        }
    }
    println!("{}", serde_json::to_string_pretty(&cf.to_json()).unwrap());
}
