use euler_line::dynamics::{
    deviation_field, deviation_field_into, integrate, invariant_rates, invariants, invariants_flat, jacobian_fd,
    line_field, line_field_into, linearization_at_fixed_point, ns_field, ns_field_into, sobolev_norm, ForcingSpec,
    LineState, ModelParams,
};
use euler_line::lattice::default_pair;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line_model(n: i64, gamma: f64) -> ModelParams {
    let (k, p) = default_pair();
    ModelParams::line_model(k, p, n, gamma).unwrap()
}

fn random_state(params: &ModelParams, seed: u64, amp: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..params.dim()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn fixed_point_is_equilibrium() {
    for gamma in [0.0, 0.5, 2.0, -3.0, 1e6] {
        let params = line_model(30, gamma);
        let d = line_field(&LineState::fixed_point(&params), &params).unwrap();
        assert!(d.as_slice().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn fixed_point_invariants() {
    let params = line_model(30, 2.0);
    let (e, z) = invariants(&LineState::fixed_point(&params), &params).unwrap();
    assert_eq!((e, z), (2.0, 4.0));
}

#[test]
fn forcing_at_origin() {
    let params = line_model(5, 2.0);
    let mut forcing = ForcingSpec::unforced(0.01);
    forcing.a_p = 1.0;
    forcing.modes.insert(2, (0.5, 3.0));
    let d = ns_field(&LineState::zeros(&params), &params, &forcing, 0.0).unwrap();
    assert_eq!(d.omega_p(), 0.01);
    assert_eq!(d.omega(2), 0.01 * 0.5);
    assert_eq!(d.omega(3), 0.0);
}

#[test]
fn sobolev_examples() {
    let params = line_model(5, 1.0);
    let mut s = LineState::zeros(&params);
    s.set_omega_p(2.0);
    assert_eq!(sobolev_norm(&s, &params, 0).unwrap(), 2.0);
    s.set_omega_p(1.0);
    assert!((sobolev_norm(&s, &params, 1).unwrap() - 3f64.sqrt()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exact_conservation(seed in any::<u64>(), amp in 1e-3f64..1e3, gamma in -5.0f64..5.0) {
        let params = line_model(30, gamma);
        let mut y = random_state(&params, seed, amp);
        y[0] += gamma;
        let mut v = vec![0.0; y.len()];
        line_field_into(&params, &y, &mut v);
        let (de, dz) = invariant_rates(&params, &y, &v);
        let scale = y.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(3);
        prop_assert!(de.abs() < 1e-13 * scale, "dE/dt = {de:e}, scale {scale:e}");
        prop_assert!(dz.abs() < 1e-13 * scale, "dZ/dt = {dz:e}, scale {scale:e}");
    }

    #[test]
    fn deviation_identity(seed in any::<u64>(), gamma in -4.0f64..4.0) {
        let params = line_model(30, gamma);
        let u = random_state(&params, seed, 1.0);
        let mut omega = u.clone();
        omega[0] += gamma;
        let (mut a, mut b) = (vec![0.0; u.len()], vec![0.0; u.len()]);
        deviation_field_into(&params, &u, &mut a);
        line_field_into(&params, &omega, &mut b);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-15, "{x} vs {y}");
        }
        let split = deviation_field(&LineState::from_flat(&params, u).unwrap(), &params).unwrap();
        for (x, y) in split.as_slice().iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-15 * gamma.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn no_p_deviation_is_linear(seed in any::<u64>()) {
        let params = line_model(10, 2.0);
        let mut u = random_state(&params, seed, 1.0);
        u[0] = 0.0;
        let state = LineState::from_flat(&params, u.clone()).unwrap();
        let (_, q) = euler_line::dynamics::linear_and_quadratic(&state, &params).unwrap();
        prop_assert!(q.chain_values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sobolev_monotone(seed in any::<u64>()) {
        let params = line_model(8, 2.0);
        let s = LineState::from_flat(&params, random_state(&params, seed, 1.0)).unwrap();
        let norms: Vec<f64> = (0..5).map(|k| sobolev_norm(&s, &params, k).unwrap()).collect();
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn jacobian_matches_linear_operator() {
    let params = line_model(30, 2.0);
    let field = |y: &[f64], out: &mut [f64]| line_field_into(&params, y, out);
    let fd = jacobian_fd(&field, LineState::fixed_point(&params).as_slice(), 1e-5);
    let exact = linearization_at_fixed_point(&params);
    let peak = (0..exact.nrows())
        .flat_map(|i| (0..exact.ncols()).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max(exact[(i, j)].abs()));
    for i in 0..exact.nrows() {
        for j in 0..exact.ncols() {
            assert!((fd[(i, j)] - exact[(i, j)]).abs() <= 1e-6 * peak, "({i},{j})");
        }
    }
}

fn end_state(params: &ModelParams, y0: &[f64], dt: f64, t: f64) -> Vec<f64> {
    let field = |_t: f64, y: &[f64], out: &mut [f64]| line_field_into(params, y, out);
    let steps = (t / dt).round() as usize;
    let traj = integrate(&field, y0, 0.0, dt, steps, steps).unwrap();
    traj.states.last().unwrap().clone()
}

#[test]
fn rk4_order() {
    let params = line_model(6, 2.0);
    let mut y0 = random_state(&params, 11, 0.5);
    y0[0] += 2.0;
    let dt = 0.05;
    let reference = end_state(&params, &y0, dt / 8.0, 1.0);
    let err = |h: f64| {
        let y = end_state(&params, &y0, h, 1.0);
        y.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };
    let order = (err(dt) / err(dt / 2.0)).log2();
    assert!((3.8..=4.2).contains(&order), "observed order {order}");
}

#[test]
fn long_run_drift() {
    let params = line_model(30, 2.0);
    let mut y0 = random_state(&params, 5, 0.3);
    y0[0] += 2.0;
    let field = |_t: f64, y: &[f64], out: &mut [f64]| line_field_into(&params, y, out);
    let traj = integrate(&field, &y0, 0.0, 1e-3, 100_000, 1000).unwrap();
    let (e0, z0) = invariants_flat(&params, &y0);
    for s in &traj.states {
        let (e, z) = invariants_flat(&params, s);
        assert!(((e - e0) / e0).abs() < 1e-7 && ((z - z0) / z0).abs() < 1e-7);
    }
}

#[test]
fn inviscid_forced_model_is_bit_identical() {
    let params = line_model(30, 2.0);
    let mut y0 = random_state(&params, 8, 0.2);
    y0[0] += 2.0;
    let mut forcing = ForcingSpec::unforced(0.0);
    forcing.a_p = 3.0;
    forcing.modes.insert(2, (1.0, -1.0));
    let euler = |_t: f64, y: &[f64], out: &mut [f64]| line_field_into(&params, y, out);
    let ns = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
    let a = integrate(&euler, &y0, 0.0, 1e-2, 2000, 10).unwrap();
    let b = integrate(&ns, &y0, 0.0, 1e-2, 2000, 10).unwrap();
    assert_eq!(a, b);
}

#[test]
fn viscous_enstrophy_decays() {
    let params = line_model(30, 2.0);
    let mut y0 = random_state(&params, 9, 0.2);
    y0[0] += 2.0;
    let forcing = ForcingSpec::unforced(0.01);
    let mut v = vec![0.0; y0.len()];
    ns_field_into(&params, &forcing, 0.0, &y0, &mut v);
    let (_, dz) = invariant_rates(&params, &y0, &v);
    let dissipation: f64 = y0[0] * y0[0] * params.p_norm_sq()
        + (params.n_min()..=params.n_max())
            .map(|n| params.chain().rho(n).unwrap() as f64 * y0[(n - params.n_min()) as usize + 1].powi(2))
            .sum::<f64>();
    assert!((dz + 2.0 * 0.01 * dissipation).abs() < 1e-12 * dissipation);

    let ns = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
    let traj = integrate(&ns, &y0, 0.0, 1e-3, 20_000, 100).unwrap();
    let z: Vec<f64> = traj.states.iter().map(|s| invariants_flat(&params, s).1).collect();
    assert!(z.windows(2).all(|w| w[1] < w[0]));
}
