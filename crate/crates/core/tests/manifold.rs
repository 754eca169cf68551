use euler_line::dynamics::ModelParams;
use euler_line::lattice::default_pair;
use euler_line::manifold::{
    grow_manifold, growth_rate, tangent_split, tangent_split_for, Direction, GrowthSettings, TangentSplit,
};
use euler_line::spectral::LinearSubsystem;

fn params() -> ModelParams {
    let (k, p) = default_pair();
    ModelParams::line_model(k, p, 30, 2.0).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[test]
fn hyperbolic_quadruple_in_truncated_spectrum() {
    let (k, p) = default_pair();
    let split = tangent_split(&LinearSubsystem::new(k, p, 2.0).unwrap(), 100, 0.1).unwrap();
    let l = split.lambda_u;
    for target in [l, l.conj(), -l, -l.conj()] {
        let nearest = split.eigenvalues.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-8, "{target}");
    }
}

#[test]
fn bases_orthonormal_and_invariant() {
    let (k, p) = default_pair();
    let sys = LinearSubsystem::new(k, p, 2.0).unwrap();
    let split = tangent_split(&sys, 100, 0.1).unwrap();
    for basis in [&split.unstable_basis, &split.stable_basis, &split.center_basis] {
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-12);
            }
        }
    }
    assert_eq!(split.unstable_basis.len() + split.stable_basis.len() + split.center_basis.len(), 202);
    for basis in [&split.unstable_basis, &split.stable_basis] {
        for v in basis.iter() {
            let lv = split.apply_linear(&sys, v);
            let off = TangentSplit::reject(basis, &lv);
            assert!(norm(&off) <= 1e-8 * norm(&lv), "{}", norm(&off) / norm(&lv));
        }
    }
}

fn rate_error(delta: f64, direction: Direction) -> f64 {
    let params = params();
    let split = tangent_split_for(&params, 0.1).unwrap();
    let settings = GrowthSettings {
        delta,
        samples: 4,
        t_end: 11.5,
        dt: 1e-3,
        stride: 10,
        direction,
    };
    let fam = grow_manifold(&split, &params, &settings).unwrap();
    fam.trajectories
        .iter()
        .map(|t| (growth_rate(t, 2e-3).unwrap().rate - split.lambda_u.re).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rate_converges_as_delta_shrinks() {
    for direction in [Direction::Unstable, Direction::Stable] {
        let errs: Vec<f64> = [1e-4, 1e-5, 1e-6].iter().map(|&d| rate_error(d, direction)).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{direction:?}: {errs:?}");
        assert!(errs[2] < 1e-10, "{direction:?}: {errs:?}");
    }
}

#[test]
fn unstable_grows_and_returns_backward() {
    let params = params();
    let split = tangent_split_for(&params, 0.1).unwrap();
    let forward = GrowthSettings {
        delta: 1e-6,
        samples: 3,
        t_end: 10.0,
        dt: 1e-3,
        stride: 100,
        direction: Direction::Unstable,
    };
    let fam = grow_manifold(&split, &params, &forward).unwrap();
    for t in &fam.trajectories {
        let end = norm(t.states.last().unwrap());
        assert!(end > 5.0 * 1e-6, "{end}");

        let field = |_t: f64, u: &[f64], out: &mut [f64]| {
            euler_line::dynamics::deviation_field_into(&params, u, out);
            out.iter_mut().for_each(|x| *x = -*x);
        };
        let back = euler_line::dynamics::integrate(&field, t.states.last().unwrap(), 0.0, 1e-3, 10_000, 10_000).unwrap();
        let returned = norm(back.states.last().unwrap());
        assert!((returned - 1e-6).abs() < 1e-12, "{returned}");
    }
}

#[test]
fn stable_family_is_unstable_family_of_reversed_field() {
    let params = params();
    let split = tangent_split_for(&params, 0.1).unwrap();
    let s = GrowthSettings {
        delta: 1e-6,
        samples: 2,
        t_end: 5.0,
        dt: 1e-3,
        stride: 50,
        direction: Direction::Stable,
    };
    let fam = grow_manifold(&split, &params, &s).unwrap();
    for t in &fam.trajectories {
        assert!(t.times.iter().all(|&x| x >= 0.0));
        assert!(norm(t.states.last().unwrap()) > 2.0 * 1e-6);
    }
}

#[test]
fn family_is_deterministic() {
    let params = params();
    let split = tangent_split_for(&params, 0.1).unwrap();
    let s = GrowthSettings {
        delta: 1e-6,
        samples: 16,
        t_end: 2.0,
        dt: 1e-3,
        stride: 100,
        direction: Direction::Unstable,
    };
    let a = grow_manifold(&split, &params, &s).unwrap();
    let b = grow_manifold(&split, &params, &s).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    assert!(a.thetas.windows(2).all(|w| w[0] < w[1]));
}
