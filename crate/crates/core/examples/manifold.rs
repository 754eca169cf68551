//! Unstable manifold of the fixed point: seed a circle in the unstable
//! eigenplane, integrate, and compare fitted growth with the eigenvalue.
//!
//!     cargo run --release --example manifold

use euler_line::dynamics::ModelParams;
use euler_line::lattice::default_pair;
use euler_line::manifold::{grow_manifold, growth_rate, tangent_split_for, Direction, GrowthSettings};

fn main() {
    let (khat, p) = default_pair();
    let params = ModelParams::line_model(khat, p, 30, 2.0).unwrap();
    let split = tangent_split_for(&params, 0.1).unwrap();
    println!(
        "λ_u = {:.12} + {:.12}i; unstable {}, stable {}, center {}",
        split.lambda_u.re,
        split.lambda_u.im,
        split.unstable_basis.len(),
        split.stable_basis.len(),
        split.center_basis.len()
    );

    for direction in [Direction::Unstable, Direction::Stable] {
        let settings = GrowthSettings {
            delta: 1e-6,
            samples: 6,
            t_end: 28.0,
            dt: 1e-3,
            stride: 10,
            direction,
        };
        let family = grow_manifold(&split, &params, &settings).unwrap();
        println!("{direction:?}:");
        for (theta, traj) in family.thetas.iter().zip(&family.trajectories) {
            let fit = growth_rate(traj, 2e-3).unwrap();
            println!(
                "  θ = {theta:.3}  rate {:.10}  frequency {:.10}",
                fit.rate,
                fit.frequency.unwrap_or(f64::NAN)
            );
        }
    }
}
