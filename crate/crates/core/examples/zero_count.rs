//! Argument-principle zero counts in the four quadrants, and the
//! dispersion function along the real axis.
//!
//!     cargo run --release --example zero_count

use euler_line::lattice::Mode;
use euler_line::spectral::{dispersion, quadrant_zero_counts, CfOptions, LinearSubsystem, SearchBox};
use num_complex::Complex64;

fn main() {
    let p = Mode::new(1, 1).unwrap();
    for khat in [(-3, -2), (2, -1), (-5, -3)] {
        let sys = LinearSubsystem::new(Mode::try_from(khat).unwrap(), p, 2.0).unwrap();
        let counts = quadrant_zero_counts(&sys, SearchBox::square(1.0), &CfOptions::default()).unwrap();
        println!("k̂ = {khat:?}: zeros per quadrant (I, II, III, IV) = {counts:?}");
    }

    let sys = LinearSubsystem::new(Mode::new(-3, -2).unwrap(), p, 2.0).unwrap();
    println!("\n    Re λ        |F(λ + 0.35172i)|");
    for i in 1..=10 {
        let lambda = Complex64::new(0.05 * i as f64, 0.35172);
        match dispersion(&sys, lambda, 400, sys.centre_index()) {
            Ok(f) => println!("  {:>6.3}   {:.3e}", lambda.re, f.norm()),
            Err(e) => println!("  {:>6.3}   {e}", lambda.re),
        }
    }
}
