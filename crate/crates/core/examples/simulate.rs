//! Line-model trajectory from a perturbed fixed point; energy and
//! enstrophy stay constant for the inviscid model and decay with viscosity.
//!
//!     cargo run --release --example simulate [-- EPSILON]

use euler_line::dynamics::{integrate, invariants_flat, ns_field_into, ForcingSpec, LineState, ModelParams};
use euler_line::lattice::default_pair;

fn main() {
    let epsilon: f64 = std::env::args().nth(1).map_or(0.0, |s| s.parse().expect("number"));
    let (khat, p) = default_pair();
    let params = ModelParams::line_model(khat, p, 30, 2.0).unwrap();
    let mut y0 = LineState::fixed_point(&params);
    y0.set_omega(2, 1e-3);
    y0.set_omega(3, -1e-3);

    let forcing = ForcingSpec::unforced(epsilon);
    let field = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
    let traj = integrate(&field, y0.as_slice(), 0.0, 1e-3, 60_000, 5_000).unwrap();

    println!("{:>6} {:>12} {:>12} {:>22} {:>22}", "t", "ω_p", "|ω_2|", "E", "Z");
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let (e, z) = invariants_flat(&params, y);
        let w2 = y[(2 - params.n_min()) as usize + 1];
        println!("{t:>6.1} {:>12.8} {:>12.4e} {e:>22.16} {z:>22.16}", y[0], w2.abs());
    }
}
