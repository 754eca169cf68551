//! Stroboscopic section of the periodically forced viscous line model.
//!
//!     cargo run --release --example poincare

use euler_line::dynamics::{advance_to, invariants_flat, ns_field_into, ForcingSpec, LineState, ModelParams, Rk4};
use euler_line::lattice::default_pair;

fn main() {
    let (khat, p) = default_pair();
    let params = ModelParams::line_model(khat, p, 30, 2.0).unwrap();
    let mut forcing = ForcingSpec::unforced(0.01);
    forcing.nu = 0.5;
    forcing.a_p = 2.0 * params.p_norm_sq();
    forcing.modes.insert(2, (0.05, 0.0));

    let mut y = LineState::fixed_point(&params).into_vec();
    let field = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
    let mut rk = Rk4::new(y.len());
    let period = forcing.period();
    println!("{:>4} {:>10} {:>14} {:>14} {:>12}", "k", "t", "ω_p", "ω_2", "Z");
    for k in 0..=40 {
        if k > 0 {
            advance_to(&field, &mut rk, &mut y, (k - 1) as f64 * period, k as f64 * period, 1e-3).unwrap();
        }
        let (_, z) = invariants_flat(&params, &y);
        let w2 = y[(2 - params.n_min()) as usize + 1];
        println!("{k:>4} {:>10.4} {:>14.10} {w2:>14.6e} {z:>12.8}", k as f64 * period, y[0]);
    }
}
