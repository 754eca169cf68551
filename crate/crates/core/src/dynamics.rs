//! The line model: Galerkin truncation of Fourier–Euler to the mode `p` and
//! the class members `k̂ + n·p`, `n ∈ [n_min, n_max]`, plus its viscous,
//! periodically forced counterpart.
//!
//! States are stored flat as `[ω_p, ω_{n_min}, …, ω_{n_max}]`.
//!
//! The `ω_p` equation sums only over adjacent pairs inside the range, so the
//! truncated system conserves enstrophy `Z = ω_p² + Σ ω_n²` and energy
//! `E = ω_p²/|p|² + Σ ω_n²/ρ_n` exactly.

use std::collections::BTreeMap;

use faer::Mat;
use thiserror::Error;

use crate::lattice::{build_chain, ClassChain, LatticeError, Mode};
use crate::spectral::{LinearSubsystem, SpectralError};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("state covers {got} chain modes, model expects {expected}")]
    RangeMismatch { expected: usize, got: usize },
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("invalid integration setup: {0}")]
    BadSetup(String),
    #[error("invalid forcing: {0}")]
    BadForcing(String),
}

pub type Result<T, E = DynamicsError> = std::result::Result<T, E>;

/// Line-model coefficients for state indices `[n_min, n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    chain: ClassChain,
    gamma: f64,
}

impl ModelParams {
    /// The chain is tabulated on `[n_min − 1, n_max + 1]` so boundary
    /// couplings exist.
    pub fn new(khat: Mode, p: Mode, n_min: i64, n_max: i64, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(DynamicsError::BadSetup(format!("gamma must be finite, got {gamma}")));
        }
        let chain = build_chain(khat, p, n_min - 1, n_max + 1)?;
        Ok(Self { chain, gamma })
    }

    /// Default truncation `[−N + 2, N + 3]`, centred on the disk modes of
    /// the `k̂ = (−3, −2)`, `p = (1, 1)` class.
    pub fn line_model(khat: Mode, p: Mode, n: i64, gamma: f64) -> Result<Self> {
        Self::new(khat, p, -n + 2, n + 3, gamma)
    }

    pub fn chain(&self) -> &ClassChain {
        &self.chain
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_min(&self) -> i64 {
        self.chain.n_min() + 1
    }

    pub fn n_max(&self) -> i64 {
        self.chain.n_max() - 1
    }

    /// Number of chain modes in the state.
    pub fn modes(&self) -> usize {
        (self.n_max() - self.n_min() + 1) as usize
    }

    /// Length of the flat state vector.
    pub fn dim(&self) -> usize {
        self.modes() + 1
    }

    pub fn p_norm_sq(&self) -> f64 {
        self.chain.p().norm_sq() as f64
    }

    pub fn linear_subsystem(&self) -> Result<LinearSubsystem, SpectralError> {
        LinearSubsystem::new(self.chain.khat(), self.chain.p(), self.gamma.abs())
    }

    /// `A_n` and `ρ_n` for state slot `i` (chain index `n_min + i`).
    fn a(&self, n: i64) -> f64 {
        self.chain.a_or_zero(n)
    }

    fn rho(&self, n: i64) -> f64 {
        self.chain.rho(n).expect("state index inside tabulated chain") as f64
    }

    fn check(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.dim() {
            return Err(DynamicsError::RangeMismatch {
                expected: self.modes(),
                got: state.len().saturating_sub(1),
            });
        }
        Ok(())
    }
}

/// Line-model state `(ω_p, ω_{n_min..=n_max})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineState {
    n_min: i64,
    data: Vec<f64>,
}

impl LineState {
    pub fn zeros(params: &ModelParams) -> Self {
        Self {
            n_min: params.n_min(),
            data: vec![0.0; params.dim()],
        }
    }

    /// `ω*`: `ω_p = Γ`, all `ω_n = 0`.
    pub fn fixed_point(params: &ModelParams) -> Self {
        let mut s = Self::zeros(params);
        s.data[0] = params.gamma();
        s
    }

    pub fn from_flat(params: &ModelParams, data: Vec<f64>) -> Result<Self> {
        params.check(&data)?;
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(DynamicsError::BadSetup(format!("non-finite state entry at slot {i}")));
        }
        Ok(Self {
            n_min: params.n_min(),
            data,
        })
    }

    pub fn omega_p(&self) -> f64 {
        self.data[0]
    }

    pub fn set_omega_p(&mut self, v: f64) {
        self.data[0] = v;
    }

    pub fn omega(&self, n: i64) -> f64 {
        self.data[(n - self.n_min) as usize + 1]
    }

    pub fn set_omega(&mut self, n: i64, v: f64) {
        self.data[(n - self.n_min) as usize + 1] = v;
    }

    pub fn chain_values(&self) -> &[f64] {
        &self.data[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.data.len() as i64 - 2
    }
}

/// Line-model vector field on the flat layout.
pub fn line_field_into(params: &ModelParams, state: &[f64], out: &mut [f64]) {
    let (n_min, modes) = (params.n_min(), params.modes());
    let wp = state[0];
    let w = &state[1..];
    let mut dp = 0.0;
    for i in 0..modes {
        let n = n_min + i as i64;
        let left = if i > 0 { params.a(n - 1) * w[i - 1] } else { 0.0 };
        let right = if i + 1 < modes { params.a(n + 1) * w[i + 1] } else { 0.0 };
        out[i + 1] = wp * left - wp * right;
        if i + 1 < modes {
            dp -= params.chain.a_pair(n).expect("pair inside chain") * w[i] * w[i + 1];
        }
    }
    out[0] = dp;
}

/// `ω̇` of the line model.
pub fn line_field(state: &LineState, params: &ModelParams) -> Result<LineState> {
    params.check(&state.data)?;
    let mut out = LineState::zeros(params);
    line_field_into(params, &state.data, &mut out.data);
    Ok(out)
}

/// `L u` and `Q(u)` in deviation coordinates `u = ω − ω*`.
pub fn linear_and_quadratic(u: &LineState, params: &ModelParams) -> Result<(LineState, LineState)> {
    params.check(&u.data)?;
    let (n_min, modes) = (params.n_min(), params.modes());
    let g = params.gamma();
    let up = u.data[0];
    let w = &u.data[1..];
    let mut lin = LineState::zeros(params);
    let mut quad = LineState::zeros(params);
    let mut qp = 0.0;
    for i in 0..modes {
        let n = n_min + i as i64;
        let left = if i > 0 { params.a(n - 1) * w[i - 1] } else { 0.0 };
        let right = if i + 1 < modes { params.a(n + 1) * w[i + 1] } else { 0.0 };
        lin.data[i + 1] = g * left - g * right;
        quad.data[i + 1] = up * left - up * right;
        if i + 1 < modes {
            qp -= params.chain.a_pair(n)? * w[i] * w[i + 1];
        }
    }
    quad.data[0] = qp;
    Ok((lin, quad))
}

/// Flat-layout deviation field `L u + Q(u)`.
pub fn deviation_field_into(params: &ModelParams, u: &[f64], out: &mut [f64]) {
    let (n_min, modes) = (params.n_min(), params.modes());
    let wp = params.gamma() + u[0];
    let w = &u[1..];
    let mut dp = 0.0;
    for i in 0..modes {
        let n = n_min + i as i64;
        let left = if i > 0 { params.a(n - 1) * w[i - 1] } else { 0.0 };
        let right = if i + 1 < modes { params.a(n + 1) * w[i + 1] } else { 0.0 };
        out[i + 1] = wp * left - wp * right;
        if i + 1 < modes {
            dp -= params.chain.a_pair(n).expect("pair inside chain") * w[i] * w[i + 1];
        }
    }
    out[0] = dp;
}

/// `u̇ = L u + Q(u)` with `u = ω − ω*`.
pub fn deviation_field(u: &LineState, params: &ModelParams) -> Result<LineState> {
    let (lin, quad) = linear_and_quadratic(u, params)?;
    let data = lin.data.iter().zip(&quad.data).map(|(l, q)| l + q).collect();
    Ok(LineState {
        n_min: u.n_min,
        data,
    })
}

/// Viscosity `ε` and single-harmonic forcing
/// `f(t) = a·cos(νt) + b·sin(νt)` per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub epsilon: f64,
    pub nu: f64,
    pub a_p: f64,
    pub b_p: f64,
    /// `(a_n, b_n)` by chain index; absent modes are unforced.
    pub modes: BTreeMap<i64, (f64, f64)>,
}

impl ForcingSpec {
    pub fn unforced(epsilon: f64) -> Self {
        Self {
            epsilon,
            nu: 1.0,
            a_p: 0.0,
            b_p: 0.0,
            modes: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(DynamicsError::BadForcing(format!(
                "epsilon must be ≥ 0, got {}",
                self.epsilon
            )));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(DynamicsError::BadForcing(format!("nu must be > 0, got {}", self.nu)));
        }
        let finite = [self.a_p, self.b_p]
            .into_iter()
            .chain(self.modes.values().flat_map(|&(a, b)| [a, b]))
            .all(f64::is_finite);
        if !finite {
            return Err(DynamicsError::BadForcing("non-finite forcing coefficient".into()));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nu
    }

    pub fn is_unforced(&self) -> bool {
        self.a_p == 0.0 && self.b_p == 0.0 && self.modes.values().all(|&(a, b)| a == 0.0 && b == 0.0)
    }
}

/// Flat-layout forced viscous field. With `ε = 0` this is exactly
/// [`line_field_into`].
pub fn ns_field_into(params: &ModelParams, forcing: &ForcingSpec, t: f64, state: &[f64], out: &mut [f64]) {
    line_field_into(params, state, out);
    let eps = forcing.epsilon;
    if eps == 0.0 {
        return;
    }
    let (c, s) = ((forcing.nu * t).cos(), (forcing.nu * t).sin());
    out[0] += eps * (-params.p_norm_sq() * state[0] + forcing.a_p * c + forcing.b_p * s);
    let n_min = params.n_min();
    for i in 0..params.modes() {
        let n = n_min + i as i64;
        let f = forcing
            .modes
            .get(&n)
            .map(|&(a, b)| a * c + b * s)
            .unwrap_or(0.0);
        out[i + 1] += eps * (-params.rho(n) * state[i + 1] + f);
    }
}

/// `ω̇` of the forced viscous line model at time `t`.
pub fn ns_field(state: &LineState, params: &ModelParams, forcing: &ForcingSpec, t: f64) -> Result<LineState> {
    params.check(&state.data)?;
    forcing.validate()?;
    let mut out = LineState::zeros(params);
    ns_field_into(params, forcing, t, &state.data, &mut out.data);
    Ok(out)
}

/// Sampled solution: `states[i]` at `times[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times.last().zip(self.states.last()).map(|(&t, s)| (t, s.as_slice()))
    }
}

/// Fixed-step classical RK4 stepper with reusable stage buffers.
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` from `t` to `t + h` in place.
    pub fn step<F>(&mut self, field: &F, t: f64, h: f64, y: &mut [f64])
    where
        F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
    {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        field(t, y, k1);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        field(t + 0.5 * h, tmp, k2);
        for i in 0..y.len() {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        field(t + 0.5 * h, tmp, k3);
        for i in 0..y.len() {
            tmp[i] = y[i] + h * k3[i];
        }
        field(t + h, tmp, k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

fn check_finite(y: &[f64], step: usize, t: f64) -> Result<()> {
    if y.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DynamicsError::NonFinite { step, t })
    }
}

/// Integrates `ẏ = field(t, y)` from `t0` with `steps` RK4 steps of size
/// `dt`, recording the initial state and every `stride`-th state.
pub fn integrate<F>(field: &F, y0: &[f64], t0: f64, dt: f64, steps: usize, stride: usize) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::BadSetup(format!("dt must be > 0, got {dt}")));
    }
    if steps == 0 || stride == 0 {
        return Err(DynamicsError::BadSetup("steps and stride must be ≥ 1".into()));
    }
    let mut y = y0.to_vec();
    check_finite(&y, 0, t0)?;
    let mut rk = Rk4::new(y.len());
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y.clone()],
    };
    for step in 1..=steps {
        let t = t0 + (step - 1) as f64 * dt;
        rk.step(field, t, dt, &mut y);
        let t_new = t0 + step as f64 * dt;
        check_finite(&y, step, t_new)?;
        if step % stride == 0 {
            traj.times.push(t_new);
            traj.states.push(y.clone());
        }
    }
    Ok(traj)
}

/// Advances `y` from `t0` to exactly `t1` with steps of at most `dt`; the
/// last sub-step is shortened to land on `t1`.
pub fn advance_to<F>(field: &F, rk: &mut Rk4, y: &mut [f64], t0: f64, t1: f64, dt: f64) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    let span = t1 - t0;
    let full = ((span / dt) * (1.0 - 1e-12)).floor().max(0.0) as usize;
    for i in 0..full {
        rk.step(field, t0 + i as f64 * dt, dt, y);
        check_finite(y, i + 1, t0 + (i + 1) as f64 * dt)?;
    }
    let t_last = t0 + full as f64 * dt;
    let rest = t1 - t_last;
    if rest > 0.0 {
        rk.step(field, t_last, rest, y);
        check_finite(y, full + 1, t1)?;
    }
    Ok(())
}

/// `(E, Z)`: energy `ω_p²/|p|² + Σ ω_n²/ρ_n` and enstrophy `ω_p² + Σ ω_n²`.
pub fn invariants_flat(params: &ModelParams, state: &[f64]) -> (f64, f64) {
    let n_min = params.n_min();
    let wp2 = state[0] * state[0];
    let (mut e, mut z) = (wp2 / params.p_norm_sq(), wp2);
    for (i, w) in state[1..].iter().enumerate() {
        let w2 = w * w;
        z += w2;
        e += w2 / params.rho(n_min + i as i64);
    }
    (e, z)
}

pub fn invariants(state: &LineState, params: &ModelParams) -> Result<(f64, f64)> {
    params.check(&state.data)?;
    Ok(invariants_flat(params, &state.data))
}

/// `(∇E·v, ∇Z·v)` for a velocity `v` at `state`.
pub fn invariant_rates(params: &ModelParams, state: &[f64], velocity: &[f64]) -> (f64, f64) {
    let n_min = params.n_min();
    let mut de = 2.0 * state[0] * velocity[0] / params.p_norm_sq();
    let mut dz = 2.0 * state[0] * velocity[0];
    for i in 1..state.len() {
        let prod = 2.0 * state[i] * velocity[i];
        dz += prod;
        de += prod / params.rho(n_min + i as i64 - 1);
    }
    (de, dz)
}

/// `(Σ_k (1 + |k|²)^s ω_k²)^{1/2}` over `p` and the stored chain modes.
pub fn sobolev_norm_flat(params: &ModelParams, state: &[f64], s: u32) -> f64 {
    let weight = |k2: f64| (1.0 + k2).powi(s as i32);
    let n_min = params.n_min();
    let mut acc = weight(params.p_norm_sq()) * state[0] * state[0];
    for (i, w) in state[1..].iter().enumerate() {
        acc += weight(params.rho(n_min + i as i64)) * w * w;
    }
    acc.sqrt()
}

pub fn sobolev_norm(state: &LineState, params: &ModelParams, s: u32) -> Result<f64> {
    params.check(&state.data)?;
    Ok(sobolev_norm_flat(params, &state.data, s))
}

/// Central-difference Jacobian `∂f_i/∂y_j` of an autonomous field.
pub fn jacobian_fd<F>(field: &F, state: &[f64], h: f64) -> Mat<f64>
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    let dim = state.len();
    let mut jac = Mat::<f64>::zeros(dim, dim);
    let mut y = state.to_vec();
    let (mut fp, mut fm) = (vec![0.0; dim], vec![0.0; dim]);
    for j in 0..dim {
        y[j] = state[j] + h;
        field(&y, &mut fp);
        y[j] = state[j] - h;
        field(&y, &mut fm);
        y[j] = state[j];
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Analytic Jacobian of the line model at `ω*`: zero `p` row and column
/// bordering the class operator on `[n_min, n_max]`.
pub fn linearization_at_fixed_point(params: &ModelParams) -> Mat<f64> {
    let dim = params.dim();
    let (n_min, g) = (params.n_min(), params.gamma());
    Mat::from_fn(dim, dim, |i, j| {
        if i == 0 || j == 0 {
            return 0.0;
        }
        let (n, m) = (n_min + i as i64 - 1, n_min + j as i64 - 1);
        if m == n - 1 {
            g * params.a(n - 1)
        } else if m == n + 1 {
            -g * params.a(n + 1)
        } else {
            0.0
        }
    })
}
